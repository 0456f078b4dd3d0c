"""Measurement as amplitude dephasing, plus a dense density-matrix oracle.

Reading out which basis state a system occupies leaves the populations
|a_m|^2 alone but destroys the phase relations between amplitudes.  The
dynamical model used throughout this package is therefore amplitude
replacement,

    a_m  ->  exp(i*2*pi*g_m) * a_m,

with independent uniform g_m for every measured state, rather than an
explicit collapse: averaged over an ensemble the randomized cross terms
vanish, which is exactly the decay of the off-diagonal density-matrix
elements, while collapse would only add variance around the same means.
Born-rule sampling is provided as a readout primitive for diagnostics.

``MeasurementProtocol`` schedules who gets dephased and when: never, all
states after every ``period``-th kick, or a fixed subset of states (for
instance only the initial one).  The dense ``DensityMatrix`` path evolves
the exact ensemble limit on desk-scale instances (dim <= 64) so that the
trajectory averaging can be validated against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .numerics import TWO_PI, PhaseStream, bessel_row

if TYPE_CHECKING:
    from .kickedmap import StateVector

__all__ = [
    "DensityMatrix",
    "MeasurementProtocol",
    "apply_measurement",
    "average_trajectory_density",
    "dephase_density",
    "evolve_density",
    "ring_kick_unitary",
    "sample_projection",
]

_KINDS = ("none", "full", "subset")


@dataclass(frozen=True)
class MeasurementProtocol:
    """When and which states get their amplitude phases randomized.

    ``kind`` is one of none/full/subset; measurement happens after every
    ``period``-th kick (kick indices are 1-based, so period=1 measures after
    every kick and period=N after kicks N, 2N, ...).  For kind="subset" only
    the listed m values are dephased.
    """

    kind: str = "none"
    period: int = 1
    subset: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(
                f"unknown protocol kind {self.kind!r}; valid kinds: {', '.join(_KINDS)}"
            )
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if self.kind == "subset" and not self.subset:
            raise ValueError("subset protocol needs a nonempty set of states")
        object.__setattr__(self, "subset", tuple(int(m) for m in self.subset))

    @classmethod
    def none(cls) -> MeasurementProtocol:
        return cls("none")

    @classmethod
    def full(cls, period: int = 1) -> MeasurementProtocol:
        return cls("full", period)

    @classmethod
    def of_states(cls, states: Iterable[int], period: int = 1) -> MeasurementProtocol:
        return cls("subset", period, tuple(states))

    def measures_after(self, kick: int) -> bool:
        return self.kind != "none" and kick % self.period == 0


def apply_measurement(
    state: StateVector,
    measured: Iterable[int] | str,
    stream: PhaseStream,
    kick: int | None = None,
) -> StateVector:
    """Multiply each measured amplitude by an independent random unit phase.

    ``measured`` is an iterable of m values, or "all".  Populations are
    preserved up to a couple of ulps (an exact unit phasor does not exist in
    floating point); unmeasured amplitudes are untouched bit for bit.  When
    ``kick`` is given, phases come from the stream's kick-addressed row, so
    the phase seen by (trajectory, kick, m) is the same no matter which other
    states are measured; without it the stream advances sequentially.
    """
    size = len(state.amps)
    if isinstance(measured, str):
        if measured != "all":
            raise ValueError(f"measured must be m values or 'all', got {measured!r}")
        idx = None
    else:
        ms = list(measured)
        if not ms:
            return state
        idx = np.array([state.index(m) for m in ms])
    if kick is None:
        if idx is None:
            phases = stream.draw_phases(size)
        else:
            phases = stream.draw_phases(len(idx))
    else:
        row = stream.kick_phases(kick, size)
        phases = row if idx is None else row[idx]
    amps = state.amps.copy()
    if idx is None:
        amps *= np.exp(1j * phases)
    else:
        amps[idx] *= np.exp(1j * phases)
    return state.with_amps(amps)


def sample_projection(state: StateVector, stream: PhaseStream) -> int:
    """Draw one m from the Born distribution |a_m|^2 (renormalized).

    Readout primitive only; the dynamics of measured evolution goes through
    ``apply_measurement``.
    """
    weights = np.abs(state.amps) ** 2
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("cannot sample a projection from an all-zero state")
    cdf = np.cumsum(weights)
    u = stream.uniform() * total
    i = int(np.searchsorted(cdf, u, side="right"))
    return state.m_min + min(i, len(weights) - 1)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense desk-scale density matrix (dim <= 64) for exact ensemble checks."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"rho must be square, got shape {rho.shape}")
        if rho.shape[0] > 64:
            raise ValueError(f"dense oracle is capped at dim 64, got {rho.shape[0]}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("rho must be Hermitian within 1e-12")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError("rho must have unit trace within 1e-12")
        if np.min(rho.diagonal().real) < -1e-12:
            raise ValueError("rho must have nonnegative diagonal")
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def pure(cls, amps: Sequence[complex]) -> DensityMatrix:
        a = np.asarray(amps, dtype=np.complex128)
        a = a / np.linalg.norm(a)
        return cls(np.outer(a, a.conj()))

    def diagonal(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()


def _index_set(dim: int, measured: Iterable[int] | str) -> np.ndarray | None:
    """Measured m values -> row indices on the centered basis, or None for all."""
    if isinstance(measured, str):
        if measured != "all":
            raise ValueError(f"measured must be m values or 'all', got {measured!r}")
        return None
    ms = list(measured)
    half = (dim - 1) // 2
    idx = []
    for m in ms:
        i = int(m) + half
        if not 0 <= i < dim:
            raise ValueError(f"measured state m={m} outside the centered basis of dim {dim}")
        idx.append(i)
    return np.array(sorted(set(idx)))


def dephase_density(dm: DensityMatrix, measured: Iterable[int] | str) -> DensityMatrix:
    """Zero every off-diagonal element touching a measured state.

    rho_{mn} -> 0 for m != n whenever m or n is measured; the diagonal is
    untouched bit for bit, so the map preserves the trace exactly and is
    idempotent.
    """
    idx = _index_set(dm.dim, measured)
    rho = dm.rho.copy()
    diag = rho.diagonal().copy()
    if idx is None:
        rho = np.diag(diag)
    else:
        rho[idx, :] = 0.0
        rho[:, idx] = 0.0
        rho[np.arange(dm.dim), np.arange(dm.dim)] = diag
    return DensityMatrix(rho)


def _check_unitary(unitary: np.ndarray) -> np.ndarray:
    u = np.asarray(unitary, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > 1e-10:
        raise ValueError(f"matrix is not unitary within 1e-10 (defect {defect:.3e})")
    return u


def evolve_density(
    dm: DensityMatrix,
    unitary: np.ndarray,
    protocol: MeasurementProtocol,
    steps: int,
) -> DensityMatrix:
    """Exact ensemble evolution: rho -> U rho U^dag, dephased per protocol.

    This is the infinite-trajectory limit of the phase-randomized dynamics;
    subset entries are m values on the centered basis.
    """
    u = _check_unitary(unitary)
    if u.shape[0] != dm.dim:
        raise ValueError(f"unitary dim {u.shape[0]} does not match rho dim {dm.dim}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    rho = dm
    measured: Iterable[int] | str = "all" if protocol.kind == "full" else protocol.subset
    for j in range(1, steps + 1):
        rho = DensityMatrix(u @ rho.rho @ u.conj().T)
        if protocol.measures_after(j):
            rho = dephase_density(rho, measured)
    return rho


def ring_kick_unitary(levels: int, k: float, tau: float = 0.0) -> np.ndarray:
    """Exactly unitary kick map on a ring of momentum states.

    A hard truncation of the Bessel row is not unitary, so desk-scale
    instances wrap the basis into a ring instead: the circulant with
    spectrum exp(-i*k*sin(2*pi*j/levels)) has Bessel-row columns folded
    modulo ``levels`` (each entry is the alias sum of J_{d + levels*r}(k))
    and unit-modulus eigenvalues by construction.  With tau > 0 the rotor
    free phases exp(-i*m^2*tau/2) are applied on the centered basis
    m = -(levels-1)/2 .. (levels-1)/2.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    j = np.arange(levels)
    eig = np.exp(-1j * k * np.sin(TWO_PI * j / levels))
    d = np.arange(levels)
    # column d of the circulant: c(d) = (1/L) sum_j eig_j exp(i*2*pi*j*d/L)
    phase = np.exp(1j * TWO_PI * np.outer(j, d) / levels)
    col = phase.T @ eig / levels
    kick = col[(np.subtract.outer(d, d)) % levels]
    if tau != 0.0:
        m = d - (levels - 1) // 2
        kick = np.exp(-1j * (m * m) * (0.5 * tau))[:, None] * kick
    return kick


def folded_bessel_column(levels: int, k: float) -> np.ndarray:
    """Alias sums sum_r J_{d + levels*r}(k) for d = 0 .. levels-1.

    Independent construction of the ring kick column straight from Bessel
    values, for cross-checking ``ring_kick_unitary``.
    """
    reach = levels * (int(2 * k / levels) + 8)
    row = bessel_row(k, reach)
    col = np.zeros(levels)
    for s in range(-reach, reach + 1):
        v = row[abs(s)]
        if s < 0 and s % 2 != 0:
            v = -v
        col[s % levels] += v
    return col


def average_trajectory_density(
    amps: Sequence[complex],
    unitary: np.ndarray,
    protocol: MeasurementProtocol,
    steps: int,
    trajectories: int,
    seed: int,
) -> DensityMatrix:
    """Mean outer product over phase-randomized pure-state trajectories.

    Trajectory t draws its phases from PhaseStream(seed, t) with
    kick-addressed rows, applies the unitary each step and randomizes the
    measured amplitudes per protocol.  Converges to ``evolve_density`` at
    the usual 1/sqrt(trajectories) rate in the off-diagonal entries.
    """
    u = _check_unitary(unitary)
    dim = u.shape[0]
    a0 = np.asarray(amps, dtype=np.complex128)
    if a0.shape != (dim,):
        raise ValueError(f"initial amplitudes must have shape ({dim},)")
    a0 = a0 / np.linalg.norm(a0)
    if trajectories < 1:
        raise ValueError(f"trajectories must be >= 1, got {trajectories}")
    idx = None
    if protocol.kind == "subset":
        idx = _index_set(dim, protocol.subset)

    cols = np.tile(a0[:, None], (1, trajectories))
    streams = [PhaseStream(seed, t) for t in range(trajectories)]
    for j in range(1, steps + 1):
        cols = u @ cols
        if protocol.measures_after(j):
            rows = np.empty((dim, trajectories))
            for t, stream in enumerate(streams):
                rows[:, t] = stream.kick_phases(j, dim)
            if idx is None:
                cols = cols * np.exp(1j * rows)
            else:
                cols[idx, :] *= np.exp(1j * rows[idx, :])
    rho = cols @ cols.conj().T / trajectories
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho)
