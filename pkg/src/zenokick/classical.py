"""Classical kicked-rotor ensemble: the diffusion baseline.

The delta-kick of strength k in cos(theta) gives each particle an impulse
-dV/dtheta = k*sin(theta); between kicks the angle advances by
H0'(I)*tau.  In standard-map form (rotor H0 = I^2/2):

    I'     = I + k*sin(theta)
    theta' = theta + I'*tau   (mod 2*pi)

Kick-then-rotate ordering matches the quantum map's convolve-then-phase
ordering, so per-kick comparisons line up.  Actions are kept unbounded,
diffusion in action being the observable; randomness enters only through
the initial angles, never during stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import ObservableSeries
from .numerics import TWO_PI, PhaseStream

__all__ = [
    "ClassicalEnsemble",
    "classical_diffusion",
    "classical_step",
    "evolve_classical",
    "h0_derivative",
]


def h0_derivative(h0_spec) -> Callable[[np.ndarray], np.ndarray]:
    """dH0/dI as a callable, from the same spec forms the quantum side uses.

    "rotor" gives the identity (H0 = I^2/2); a coefficient sequence
    [c0, c1, ...] gives the derivative of the polynomial sum c_i I^i.
    Tabulated specs have no classical continuation.
    """
    if isinstance(h0_spec, str):
        if h0_spec != "rotor":
            raise ValueError(f"unknown Hamiltonian spec {h0_spec!r}")
        return lambda actions: actions
    coeffs = np.asarray(h0_spec, dtype=float)
    if coeffs.ndim != 1:
        raise ValueError("polynomial Hamiltonian spec must be a 1-d coefficient sequence")
    dcoeffs = coeffs[1:] * np.arange(1, len(coeffs))

    def deriv(actions: np.ndarray) -> np.ndarray:
        out = np.zeros_like(actions)
        for c in dcoeffs[::-1]:
            out = out * actions + c
        return out

    return deriv


@dataclass(eq=False)
class ClassicalEnsemble:
    """Angles (mod 2*pi) and unbounded actions of a kicked-rotor ensemble."""

    thetas: np.ndarray
    actions: np.ndarray
    k: float
    tau: float

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.actions = np.asarray(self.actions, dtype=float)
        if self.thetas.shape != self.actions.shape or self.thetas.ndim != 1 or not len(self.thetas):
            raise ValueError("thetas and actions must be equal-length 1-d arrays")
        if np.any(self.thetas < 0.0) or np.any(self.thetas >= TWO_PI):
            raise ValueError("angles must lie in [0, 2*pi)")

    @classmethod
    def uniform_start(
        cls, particles: int, k: float, tau: float, seed: int, action0: float = 0.0
    ) -> ClassicalEnsemble:
        """Uniform angles, all actions at action0: the classical delta state."""
        if particles < 1:
            raise ValueError(f"particles must be >= 1, got {particles}")
        thetas = PhaseStream(seed, 0).draw_phases(particles)
        return cls(thetas, np.full(particles, float(action0)), float(k), float(tau))

    def __len__(self) -> int:
        return len(self.thetas)


def classical_step(
    ens: ClassicalEnsemble,
    h0_prime: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ClassicalEnsemble:
    """One kick: impulse k*sin(theta), then free rotation by H0'(I')*tau."""
    h0_prime = h0_prime or (lambda actions: actions)
    actions = ens.actions + ens.k * np.sin(ens.thetas)
    rate = h0_prime(actions)
    if not np.all(np.isfinite(rate)):
        raise ValueError("H0' produced non-finite rotation rates")
    thetas = np.mod(ens.thetas + rate * ens.tau, TWO_PI)
    return ClassicalEnsemble(thetas, actions, ens.k, ens.tau)


def evolve_classical(
    ens: ClassicalEnsemble,
    kicks: int,
    h0_prime: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[ClassicalEnsemble, ObservableSeries]:
    """Run the ensemble and record <I> and <(I - I0)^2> per kick.

    The series reuses the quantum container: norm_deficit is 0 and the
    purely quantum columns are NaN.
    """
    if kicks < 1:
        raise ValueError(f"kicks must be >= 1, got {kicks}")
    n = kicks + 1
    start = ens.actions.copy()
    series = ObservableSeries(
        step=np.arange(n),
        time=np.arange(n) * ens.tau,
        norm_deficit=np.zeros(n),
        mean_m=np.zeros(n),
        second_moment=np.zeros(n),
        participation_ratio=np.full(n, math.nan),
        p_initial=np.full(n, math.nan),
        metadata={"k": ens.k, "tau": ens.tau, "particles": len(ens)},
    )

    def record(j: int, e: ClassicalEnsemble) -> None:
        d = e.actions - start
        series.mean_m[j] = float(np.mean(e.actions))
        series.second_moment[j] = float(np.mean(d * d))

    record(0, ens)
    current = ens
    for j in range(1, kicks + 1):
        current = classical_step(current, h0_prime)
        record(j, current)
    return current, series


def classical_diffusion(
    times: np.ndarray,
    spreads: np.ndarray,
    fit_range: tuple[float, float] | None = None,
) -> float:
    """Diffusion coefficient from a spread series, <(I - I0)^2> = 2 D t.

    Least-squares slope of the spread against time over ``fit_range``
    (a (t_lo, t_hi) window; default all points), divided by 2.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(spreads, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and spreads must be equal-length 1-d arrays")
    if fit_range is not None:
        lo, hi = fit_range
        keep = (t >= lo) & (t <= hi)
        t, y = t[keep], y[keep]
    if len(t) < 10:
        raise ValueError(f"need at least 10 points in the fit range, got {len(t)}")
    xm = t - t.mean()
    den = float(np.sum(xm * xm))
    if den == 0.0:
        raise ValueError("degenerate fit: times have no spread")
    return float(np.sum(xm * (y - y.mean())) / den) / 2.0
