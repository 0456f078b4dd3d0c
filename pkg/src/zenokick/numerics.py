"""Bessel kick kernels and reproducible random-phase streams.

Shared numerical core for the simulation modules.  A periodic delta-kick of
dimensionless strength k couples momentum states m and n with amplitude
J_{m-n}(k), so everything rests on two primitives: integer-order Bessel
values accurate to about 1e-12, and uniform random phases exp(i*2*pi*g)
that are bit-for-bit reproducible per (seed, trajectory, kick, state).

Bessel evaluation uses the downward three-term recurrence with sum-rule
normalization (J_0 + 2*J_2 + 2*J_4 + ... = 1), which is stable at orders
above the turning point where the upward recurrence explodes; a short
ascending series covers tiny arguments.  Kernel truncation is driven by
the discarded probability weight sum of J_m(k)^2 outside the window, not
by coefficient magnitude, so the unitarity defect of a single kick is
bounded by the requested tolerance directly.

Random phases come from the counter-based Philox generator.  Each
trajectory owns one stream, keyed by (seed, stream_id); within a stream,
kick-addressed draws are computed from a counter derived from the kick
index alone, so the phase attached to a given (trajectory, kick, state)
never depends on which other states happen to be measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelCapacityError",
    "KickKernel",
    "ORDER_CAP",
    "PhaseStream",
    "TWO_PI",
    "bessel_j",
    "bessel_row",
    "build_kernel",
    "draw_phase",
]

TWO_PI = 2.0 * math.pi

#: Largest Bessel order the kernel builder will touch.
ORDER_CAP = 10**6

_RESCALE = 1e250
_SERIES_X_MAX = 0.1
_MASK64 = (1 << 64) - 1


class KernelCapacityError(ValueError):
    """Kick strength would need a kernel wider than the supported order cap."""


def _series_j(order: int, x: float) -> float:
    # Ascending series, adequate only for small x where it cannot cancel.
    half = 0.5 * x
    if half == 0.0:
        return 1.0 if order == 0 else 0.0
    if order * math.log10(half) < -320.0:
        return 0.0
    term = half**order / math.factorial(order)
    total = term
    s = 0
    while True:
        s += 1
        term *= -(half * half) / (s * (order + s))
        if total + term == total:
            return total
        total += term


def _cutoff_order(x: float) -> int:
    """Smallest order past the turning point where |J_n(x)| < ~1e-280."""
    n = int(1.36 * x) + 10
    while True:
        mag = n * math.log10(0.5 * math.e * x / n) - 0.5 * math.log10(TWO_PI * n)
        if mag < -280.0:
            return n
        n += max(4, n // 8)


def bessel_row(x: float, n_max: int) -> np.ndarray:
    """First-kind Bessel values J_0(x) .. J_{n_max}(x) as one array.

    Downward recurrence J_{n-1} = (2n/x) J_n - J_{n+1} from well above the
    highest order that is representable in double precision, normalized by
    the even-order sum rule.  Orders whose true magnitude underflows are
    returned as exact zeros.
    """
    if not math.isfinite(x):
        raise ValueError(f"Bessel argument must be finite, got {x!r}")
    if x < 0.0:
        raise ValueError(f"Bessel argument must be nonnegative, got {x!r}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    if x < _SERIES_X_MAX:
        for n in range(n_max + 1):
            v = _series_j(n, x)
            if v == 0.0:
                break
            out[n] = v
        return out

    eff = min(n_max, _cutoff_order(x))
    start = eff + 40 + int(3.0 * math.sqrt(max(eff, x)))
    jp = 0.0  # J_{n+1}, unnormalized
    jn = 1e-30  # J_n, unnormalized
    acc = 0.0  # running J_0 + 2*sum_{k>=1} J_{2k}, same scale
    for n in range(start, 0, -1):
        jm = (2.0 * n / x) * jn - jp
        jp = jn
        jn = jm
        if abs(jn) > _RESCALE:
            inv = 1.0 / _RESCALE
            jn *= inv
            jp *= inv
            acc *= inv
            out[: eff + 1] *= inv
        idx = n - 1
        if idx <= eff:
            out[idx] = jn
        if idx > 0 and idx % 2 == 0:
            acc += 2.0 * jn
    acc += jn  # jn now holds unnormalized J_0
    out[: eff + 1] /= acc
    return out


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind at integer order.

    Absolute error stays below 1e-12 for 0 <= x <= 50.  Negative orders
    follow the parity identity J_{-m}(x) = (-1)^m J_m(x).
    """
    order = int(order)
    if abs(order) > ORDER_CAP:
        raise ValueError(f"|order| must be <= {ORDER_CAP}, got {order}")
    n = abs(order)
    value = float(bessel_row(x, n)[n])
    if order < 0 and n % 2 == 1:
        value = -value
    return value


@dataclass(frozen=True, eq=False)
class KickKernel:
    """Truncated Bessel coefficient row of a single kick.

    ``coeffs[half_width + m]`` holds J_m(k) for -half_width <= m <= half_width,
    and ``leak`` is the probability weight discarded by the truncation,
    1 - sum(coeffs**2).  Leak below the evaluation noise floor (~1e-15)
    is reported as exactly 0.
    """

    k: float
    half_width: int
    coeffs: np.ndarray
    leak: float

    def mirrored(self) -> KickKernel:
        """Kernel with reversed coefficient row, J_{n-m} in place of J_{m-n}."""
        return KickKernel(self.k, self.half_width, self.coeffs[::-1].copy(), self.leak)


def build_kernel(k: float, tol: float) -> KickKernel:
    """Truncate the Bessel row of a strength-k kick to probability leak <= tol.

    Picks the smallest half width W such that 1 - sum_{|m|<=W} J_m(k)^2 <= tol.
    Since J_m(k) decays super-exponentially once m > k, W is close to k plus
    a tolerance-dependent margin.
    """
    if not math.isfinite(k) or k < 0.0:
        raise ValueError(f"kick strength must be finite and >= 0, got {k!r}")
    if not (1e-14 <= tol < 1.0):
        raise ValueError(f"tol must lie in [1e-14, 1), got {tol!r}")
    if k == 0.0:
        return KickKernel(0.0, 0, np.array([1.0]), 0.0)
    if k > 0.999 * ORDER_CAP:
        raise KernelCapacityError(
            f"k={k!r} needs a kernel half width beyond the cap {ORDER_CAP}"
        )
    row = bessel_row(k, min(_cutoff_order(k), ORDER_CAP))
    sq = row * row
    acc = sq[0]
    half_width = None
    for w in range(len(sq)):
        if w > 0:
            acc += 2.0 * sq[w]
        if 1.0 - acc <= tol:
            half_width = w
            break
    if half_width is None:
        raise KernelCapacityError(
            f"no half width up to {len(sq) - 1} reaches leak <= {tol} for k={k}"
        )
    coeffs = np.empty(2 * half_width + 1)
    for m in range(half_width + 1):
        coeffs[half_width + m] = row[m]
        coeffs[half_width - m] = -row[m] if m % 2 == 1 else row[m]
    leak = 1.0 - math.fsum(c * c for c in coeffs)
    return KickKernel(float(k), half_width, coeffs, max(0.0, leak))


class PhaseStream:
    """Uniform random phases for one trajectory, reproducible bit for bit.

    The pair (seed, stream_id) fully determines every value the stream will
    ever produce; distinct stream ids give statistically independent
    sequences.  Two addressing modes coexist without overlap in the Philox
    counter space:

    * sequential draws (``draw_phase``/``draw_phases``) advance an internal
      generator, and drawing n values at once equals n single draws;
    * kick-addressed rows (``kick_phases``) depend only on the kick index,
      so they can be produced in any order, or skipped entirely, without
      disturbing each other or the sequential mode.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= stream_id <= _MASK64:
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {stream_id}")
        self.seed = seed
        self.stream_id = stream_id
        self._gen = np.random.Generator(np.random.Philox(key=self._key()))

    def _key(self) -> np.ndarray:
        return np.array([self.seed, self.stream_id], dtype=np.uint64)

    def uniform(self) -> float:
        """Next uniform variate on [0, 1), advancing the stream."""
        return float(self._gen.random())

    def uniforms(self, count: int) -> np.ndarray:
        return self._gen.random(count)

    def draw_phase(self) -> float:
        """Next phase 2*pi*g with g uniform on [0, 1), advancing the stream."""
        return TWO_PI * self.uniform()

    def draw_phases(self, count: int) -> np.ndarray:
        """``count`` sequential phases; identical to repeated ``draw_phase``."""
        return TWO_PI * self._gen.random(count)

    def kick_phases(self, kick: int, count: int) -> np.ndarray:
        """Phase row attached to one kick, independent of draw order.

        The row lives at Philox counter block (kick + 1) << 128, far from
        anything the sequential mode can reach, so mixing the two modes on
        one stream is safe.
        """
        kick = int(kick)
        if kick < 0:
            raise ValueError(f"kick index must be >= 0, got {kick}")
        counter = np.array([0, 0, kick + 1, 0], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=self._key(), counter=counter))
        return TWO_PI * gen.random(count)

    def __repr__(self) -> str:
        return f"PhaseStream(seed={self.seed}, stream_id={self.stream_id})"


def draw_phase(stream: PhaseStream) -> float:
    """Functional spelling of ``stream.draw_phase()``."""
    return stream.draw_phase()
