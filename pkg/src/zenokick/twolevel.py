"""Resonantly driven two-level system with and without repeated readout.

One resonant pulse over a time slice tau rotates the amplitude pair
(a1, a2) by the half-angle matrix

    A(phi) = [[cos(phi), i sin(phi)], [i sin(phi), cos(phi)]],   phi = Omega*tau/2,

with Omega the Rabi frequency, and n pulses compose in closed form to
A(n*phi).  Reading the populations out between pulses erases the phase
relation between a1 and a2, so the interference terms drop from the
ensemble-averaged populations, which then hop by the stochastic matrix

    M(phi)^n = 1/2 [[1 + c, 1 - c], [1 - c, 1 + c]],   c = cos(2*phi)**n.

Holding the total pulse area Omega*T fixed while slicing it into more and
more measured intervals drives the survival probability (1 + c)/2 to one:
the quantum Zeno effect.  A Monte Carlo path keeps the amplitudes and
randomizes their phases explicitly, validating the dephasing picture
against the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import PhaseStream

__all__ = [
    "RabiStep",
    "TwoLevelAmplitudes",
    "TwoLevelProbabilities",
    "evolve_measured",
    "evolve_unitary",
    "simulate_measured_mc",
    "step_unitary",
    "survival_probability",
]

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class TwoLevelAmplitudes:
    """Normalized amplitude pair of the state a1|1> + a2|2>."""

    a1: complex
    a2: complex

    def __post_init__(self):
        n = abs(self.a1) ** 2 + abs(self.a2) ** 2
        if not math.isfinite(n) or abs(n - 1.0) > _NORM_TOL:
            raise ValueError(f"amplitudes must be normalized, |a1|^2+|a2|^2 = {n!r}")

    @classmethod
    def ground(cls) -> TwoLevelAmplitudes:
        return cls(1.0 + 0.0j, 0.0j)

    def populations(self) -> TwoLevelProbabilities:
        p1 = abs(self.a1) ** 2
        p2 = abs(self.a2) ** 2
        total = p1 + p2
        return TwoLevelProbabilities(p1 / total, p2 / total)


@dataclass(frozen=True)
class TwoLevelProbabilities:
    """Population pair after the interference terms are gone."""

    p1: float
    p2: float

    def __post_init__(self):
        if min(self.p1, self.p2) < -1e-12 or abs(self.p1 + self.p2 - 1.0) > _NORM_TOL:
            raise ValueError(f"populations must be a distribution, got ({self.p1}, {self.p2})")


@dataclass(frozen=True)
class RabiStep:
    """Half-pulse angle phi = Omega*tau/2 of one evolution slice."""

    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError(f"phi must be finite, got {self.phi!r}")

    @classmethod
    def from_pulse(cls, omega: float, tau: float) -> RabiStep:
        """Slice of duration tau driven at Rabi frequency omega."""
        return cls(0.5 * omega * tau)

    @classmethod
    def zeno_protocol(cls, omega: float, total_time: float, n: int) -> RabiStep:
        """Fixed total time sliced into n measured intervals, phi = omega*T/(2n)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return cls(0.5 * omega * total_time / n)


def step_unitary(state: TwoLevelAmplitudes, step: RabiStep) -> TwoLevelAmplitudes:
    """One coherent slice: multiply (a1, a2) by A(phi)."""
    c = math.cos(step.phi)
    s = math.sin(step.phi)
    return TwoLevelAmplitudes(
        c * state.a1 + 1j * s * state.a2,
        1j * s * state.a1 + c * state.a2,
    )


def evolve_unitary(state: TwoLevelAmplitudes, step: RabiStep, n: int) -> TwoLevelAmplitudes:
    """n coherent slices in closed form, A(phi)^n = A(n*phi)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return step_unitary(state, RabiStep(n * step.phi))


def _signed_cos_power(c: float, n: int) -> float:
    # cos(2*phi)**n via exp(n*log|c|) so that large n underflows gracefully
    # instead of rounding the base and drifting.
    if c == 0.0:
        return 0.0
    mag = math.exp(n * math.log(abs(c)))
    return -mag if (c < 0.0 and n % 2 == 1) else mag


def evolve_measured(probs: TwoLevelProbabilities, step: RabiStep, n: int) -> TwoLevelProbabilities:
    """n slices with the populations read out after each one.

    Closed form of the n-fold stochastic matrix: with c = cos(2*phi)**n,
    p1 -> ((1 + c) p1 + (1 - c) p2)/2 and symmetrically for p2.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    c = _signed_cos_power(math.cos(2.0 * step.phi), n)
    p1 = 0.5 * ((1.0 + c) * probs.p1 + (1.0 - c) * probs.p2)
    p2 = 0.5 * ((1.0 - c) * probs.p1 + (1.0 + c) * probs.p2)
    return TwoLevelProbabilities(p1, p2)


def survival_probability(omega: float, total_time: float, n: int) -> float:
    """Probability of still being in |1> after n measured slices of T = n*tau.

    The fixed-total-time protocol: phi = omega*T/(2n), survival
    (1 + cos(omega*T/n)**n)/2.  For omega*T = pi this tends to 1 as n grows.
    """
    step = RabiStep.zeno_protocol(omega, total_time, n)
    return evolve_measured(TwoLevelProbabilities(1.0, 0.0), step, n).p1


def simulate_measured_mc(
    state: TwoLevelAmplitudes,
    step: RabiStep,
    n: int,
    trajectories: int,
    seed: int,
    stream_offset: int = 0,
) -> TwoLevelProbabilities:
    """Monte Carlo of the measured evolution at the amplitude level.

    Every trajectory applies A(phi) and then multiplies a1 and a2 by
    independent random unit phases, once per slice; the returned populations
    are the ensemble averages.  Trajectory t draws from
    PhaseStream(seed, stream_offset + t), so the result is reproducible and
    independent of evaluation order, and batches of runs can stay
    statistically independent by spacing their offsets.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if trajectories < 1:
        raise ValueError(f"trajectories must be >= 1, got {trajectories}")
    phases = np.empty((trajectories, n, 2))
    for t in range(trajectories):
        phases[t] = PhaseStream(seed, stream_offset + t).draw_phases(2 * n).reshape(n, 2)

    a1 = np.full(trajectories, complex(state.a1), dtype=np.complex128)
    a2 = np.full(trajectories, complex(state.a2), dtype=np.complex128)
    c = math.cos(step.phi)
    s = math.sin(step.phi)
    for j in range(n):
        b1 = c * a1 + 1j * s * a2
        b2 = 1j * s * a1 + c * a2
        a1 = b1 * np.exp(1j * phases[:, j, 0])
        a2 = b2 * np.exp(1j * phases[:, j, 1])

    p1 = math.fsum(np.abs(a1) ** 2) / trajectories
    p2 = math.fsum(np.abs(a2) ** 2) / trajectories
    total = p1 + p2
    return TwoLevelProbabilities(p1 / total, p2 / total)
