"""One-period quantum map of a delta-kicked system on a truncated basis.

Between kicks the amplitudes of the momentum eigenstates m just pick up
free-evolution phases beta_m = H0(m)*tau; the kick itself couples the
states through the Bessel coefficient row, so one full period reads

    a_m  ->  exp(-i*beta_m) * sum_n a_n J_{m-n}(k).

On the truncated basis m in [-M, M] the kick is an exact zero-padded
convolution with the kernel row; the per-kick norm loss is bounded by the
kernel's truncation leak plus whatever probability reaches the basis edge.
Edge occupation above a spill threshold aborts the run rather than letting
amplitude silently fall off the grid.

Defaults sit in the classically chaotic, quantum-localizing regime
(k = 5, tau = 1, rotor H0 = m^2/2) away from the quantum resonances, which
occur when tau is a rational multiple of 4*pi and every rotor phase
collapses to a root of unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import diagnostics
from .measurement import MeasurementProtocol, apply_measurement
from .numerics import TWO_PI, KickKernel, PhaseStream

__all__ = [
    "BasisOverflowError",
    "FreePhases",
    "StateVector",
    "default_half_width",
    "evolve",
    "evolve_ensemble",
    "hamiltonian_phases",
    "inverse_kick_step",
    "kick_step",
    "rotor_resonance",
]

MAX_HALF_WIDTH = 2**20
MAX_STEPS = 10**6

DEFAULT_SPILL_THRESHOLD = 1e-8


class BasisOverflowError(RuntimeError):
    """Probability reached the edge of the truncated basis."""


@dataclass(eq=False)
class StateVector:
    """Complex amplitudes a_m on the symmetric truncated basis m in [-M, M]."""

    m_min: int
    m_max: int
    amps: np.ndarray

    def __post_init__(self):
        if self.m_min != -self.m_max or self.m_max < 0:
            raise ValueError(
                f"basis must be symmetric, m_min = -m_max >= 0, got [{self.m_min}, {self.m_max}]"
            )
        amps = np.asarray(self.amps, dtype=np.complex128)
        span = self.m_max - self.m_min + 1
        if amps.shape != (span,):
            raise ValueError(f"amplitude array must have shape ({span},), got {amps.shape}")
        self.amps = amps

    @classmethod
    def delta(cls, half_width: int, m0: int = 0) -> StateVector:
        """Unit amplitude on the single state m0."""
        state = cls(-half_width, half_width, np.zeros(2 * half_width + 1, dtype=np.complex128))
        state.amps[state.index(m0)] = 1.0
        return state

    @property
    def half_width(self) -> int:
        return self.m_max

    @property
    def size(self) -> int:
        return len(self.amps)

    def index(self, m: int) -> int:
        if not self.m_min <= m <= self.m_max:
            raise ValueError(f"state m={m} outside basis [{self.m_min}, {self.m_max}]")
        return int(m) - self.m_min

    def momenta(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_max + 1)

    def probabilities(self) -> np.ndarray:
        return self.amps.real**2 + self.amps.imag**2

    def norm_sq(self) -> float:
        return float(np.sum(self.probabilities()))

    def with_amps(self, amps: np.ndarray) -> StateVector:
        return StateVector(self.m_min, self.m_max, amps)


def rotor_resonance(tau: float, max_den: int = 4096, tol: float = 4e-12) -> tuple[int, int] | None:
    """Detect tau = 4*pi*p/q, the rotor's quantum-resonance condition.

    Returns the reduced (p, q) when tau/(4*pi) is within ``tol`` of a
    rational with denominator <= ``max_den``, else None.  At such tau every
    rotor phase m^2*tau/2 is a multiple of 2*pi/q, so the free evolution
    degenerates and localization disappears.
    """
    f = tau / (2.0 * TWO_PI)
    frac = Fraction(f).limit_denominator(max_den)
    if abs(f - float(frac)) <= tol:
        return frac.numerator, frac.denominator
    return None


@dataclass(eq=False)
class FreePhases:
    """Free-evolution phases beta_m = H0(m)*tau on [0, 2*pi), plus exp(-i*beta)."""

    beta: np.ndarray
    tau: float
    h0_spec: object = "rotor"
    factors: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1:
            raise ValueError("beta must be a 1-d array")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta contains non-finite phases")
        if beta.size and (beta.min() < 0.0 or beta.max() >= TWO_PI):
            raise ValueError("beta must lie in [0, 2*pi)")
        self.beta = beta
        self.factors = np.exp(-1j * beta)

    @property
    def half_width(self) -> int:
        return (len(self.beta) - 1) // 2


def _h0_values(h0_spec, m: np.ndarray) -> np.ndarray:
    ml = m.astype(np.longdouble)
    if isinstance(h0_spec, str):
        if h0_spec != "rotor":
            raise ValueError(f"unknown Hamiltonian spec {h0_spec!r}; use 'rotor', coefficients, or a table")
        return 0.5 * ml * ml
    arr = np.asarray(h0_spec, dtype=np.longdouble)
    if arr.ndim == 1 and arr.shape == m.shape and not _looks_polynomial(h0_spec, m):
        return arr  # tabulated H0(m), aligned with the basis
    if arr.ndim != 1:
        raise ValueError("polynomial Hamiltonian spec must be a 1-d coefficient sequence")
    values = np.zeros_like(ml)
    for c in arr[::-1]:  # Horner, low-order coefficients first in the spec
        values = values * ml + c
    return values


def _looks_polynomial(h0_spec, m: np.ndarray) -> bool:
    # A coefficient list the same length as the basis is ambiguous; treat short
    # sequences as polynomials and basis-length ones as tables.
    try:
        n = len(h0_spec)
    except TypeError:
        return False
    return n < len(m)


def hamiltonian_phases(h0_spec, tau: float, half_width: int) -> FreePhases:
    """Free phases beta_m = H0(m)*tau mod 2*pi for m in [-M, M].

    ``h0_spec`` is "rotor" for H0(m) = m^2/2, a short sequence of polynomial
    coefficients [c0, c1, ...] for H0(m) = sum c_i m^i, or an array of 2M+1
    tabulated values.  Rotor phases at a detected resonance tau = 4*pi*p/q
    are reduced by exact integer arithmetic, so the degenerate case beta = 0
    at tau = 4*pi comes out exactly.
    """
    if not 1 <= half_width <= MAX_HALF_WIDTH:
        raise ValueError(f"half_width must be in [1, {MAX_HALF_WIDTH}], got {half_width}")
    if not (math.isfinite(tau) and tau > 0.0):
        raise ValueError(f"tau must be finite and > 0, got {tau!r}")
    m = np.arange(-half_width, half_width + 1)
    if isinstance(h0_spec, str) and h0_spec == "rotor":
        res = rotor_resonance(tau)
        if res is not None:
            p, q = res
            beta = TWO_PI * ((m * m * p) % q) / q
            beta = np.where(beta >= TWO_PI, beta - TWO_PI, beta)
            return FreePhases(beta.astype(np.float64), tau, "rotor")
    values = _h0_values(h0_spec, m)
    if not np.all(np.isfinite(np.asarray(values, dtype=np.float64))):
        raise ValueError("H0 produced non-finite values on the basis")
    beta_ld = np.mod(values * np.longdouble(tau), np.longdouble(TWO_PI))
    beta = np.mod(beta_ld.astype(np.float64), TWO_PI)
    spec = h0_spec if isinstance(h0_spec, str) else np.asarray(h0_spec, dtype=float)
    return FreePhases(beta, tau, spec)


def _check_compatible(state: StateVector, phases: FreePhases) -> None:
    if len(phases.beta) != state.size:
        raise ValueError(
            f"phases built for half width {phases.half_width}, state has {state.half_width}"
        )


def kick_step(
    state: StateVector,
    kernel: KickKernel,
    phases: FreePhases,
    *,
    spill_threshold: float = DEFAULT_SPILL_THRESHOLD,
) -> StateVector:
    """One period: convolve with the kick kernel, then apply exp(-i*beta_m).

    The convolution is the direct zero-padded sum, term for term the map
    a'_m = sum_n a_n J_{m-n}(k); no spectral shortcut is taken.  Raises
    BasisOverflowError when the edge bins hold more than ``spill_threshold``
    of the total probability.
    """
    _check_compatible(state, phases)
    w = kernel.half_width
    mixed = np.convolve(state.amps, kernel.coeffs)[w : w + state.size]
    out = mixed * phases.factors
    _check_spill(out, spill_threshold, state.half_width)
    return state.with_amps(out)


def inverse_kick_step(
    state: StateVector,
    kernel: KickKernel,
    phases: FreePhases,
    *,
    spill_threshold: float = DEFAULT_SPILL_THRESHOLD,
) -> StateVector:
    """Undo one period: conjugate phases first, then the mirrored kernel row."""
    _check_compatible(state, phases)
    w = kernel.half_width
    unrotated = state.amps * np.conj(phases.factors)
    out = np.convolve(unrotated, kernel.coeffs[::-1])[w : w + state.size]
    _check_spill(out, spill_threshold, state.half_width)
    return state.with_amps(out)


def _check_spill(amps: np.ndarray, spill_threshold: float, half_width: int) -> None:
    total = float(np.sum(amps.real**2 + amps.imag**2))
    if total <= 0.0:
        return
    edge = float(abs(amps[0]) ** 2 + abs(amps[-1]) ** 2)
    if edge > spill_threshold * total:
        raise BasisOverflowError(
            f"edge occupation {edge / total:.3e} of total probability exceeds the "
            f"spill threshold {spill_threshold:.1e}; rerun with a basis larger "
            f"than M = {half_width}"
        )


def default_half_width(k: float, steps: int, localized: bool) -> int:
    """Basis size rule of thumb.

    Diffusive runs spread like sqrt(k^2 * steps / 2), localized ones stay
    within a few localization lengths k^2/2; both get a wide margin.
    """
    if localized:
        return math.ceil(8.0 * k * k) + 64
    return math.ceil(4.0 * k * math.sqrt(steps)) + 64


def evolve(
    state: StateVector,
    kernel: KickKernel,
    phases: FreePhases,
    steps: int,
    protocol: MeasurementProtocol | None = None,
    stream: PhaseStream | None = None,
    *,
    spill_threshold: float = DEFAULT_SPILL_THRESHOLD,
    m0: int | None = None,
    profile_from: int | None = None,
    metadata: dict | None = None,
) -> tuple[StateVector, diagnostics.ObservableSeries]:
    """Run ``steps`` kicks, dephasing per protocol, recording observables.

    Measurement happens after each kick the protocol selects (kick indices
    are 1-based).  The returned series has one record per step including the
    initial state, with the second moment taken around ``m0`` (default: the
    rounded initial mean momentum).  With ``profile_from`` set, the mean
    probability profile over steps >= profile_from is attached to the series
    for localization fits.
    """
    if not 1 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must be in [1, {MAX_STEPS}], got {steps}")
    protocol = protocol or MeasurementProtocol.none()
    if protocol.kind != "none" and stream is None:
        raise ValueError("a measuring protocol needs a PhaseStream")
    if protocol.kind == "subset":
        for m in protocol.subset:
            state.index(m)  # validate range up front
    measured: str | tuple[int, ...] = "all" if protocol.kind == "full" else protocol.subset

    momenta = state.momenta()
    if m0 is None:
        p = state.probabilities()
        m0 = int(round(float(np.dot(momenta, p) / np.sum(p))))
    rec = diagnostics.SeriesRecorder(steps, phases.tau, m0, metadata or {})
    rec.record(0, state)

    profile_acc = None
    profile_count = 0
    if profile_from is not None:
        profile_acc = np.zeros(state.size)

    current = state
    for j in range(1, steps + 1):
        current = kick_step(current, kernel, phases, spill_threshold=spill_threshold)
        if protocol.measures_after(j):
            current = apply_measurement(current, measured, stream, kick=j)
        rec.record(j, current)
        if profile_acc is not None and j >= profile_from:
            profile_acc += current.probabilities()
            profile_count += 1

    series = rec.finish()
    if profile_acc is not None and profile_count:
        series.late_profile = profile_acc / profile_count
        series.metadata["profile_from"] = int(profile_from)
    return current, series


def evolve_ensemble(
    state: StateVector,
    kernel: KickKernel,
    phases: FreePhases,
    steps: int,
    protocol: MeasurementProtocol,
    seed: int,
    trajectories: int,
    *,
    threads: int = 1,
    spill_threshold: float = DEFAULT_SPILL_THRESHOLD,
    m0: int | None = None,
    profile_from: int | None = None,
    metadata: dict | None = None,
) -> diagnostics.ObservableSeries:
    """Average the per-step observables over independent trajectories.

    Trajectory t draws its phases from PhaseStream(seed, t); the merge uses
    exact (fsum) accumulation in trajectory order, so the result does not
    depend on ``threads``.
    """
    if trajectories < 1:
        raise ValueError(f"trajectories must be >= 1, got {trajectories}")

    def one(t: int) -> diagnostics.ObservableSeries:
        _, series = evolve(
            state,
            kernel,
            phases,
            steps,
            protocol,
            PhaseStream(seed, t),
            spill_threshold=spill_threshold,
            m0=m0,
            profile_from=profile_from,
        )
        return series

    if threads > 1 and trajectories > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(trajectories)))
    else:
        results = [one(t) for t in range(trajectories)]

    series = diagnostics.average_series(results)
    series.metadata.update(metadata or {})
    series.metadata.update({"trajectories": trajectories, "seed": int(seed)})
    return series
