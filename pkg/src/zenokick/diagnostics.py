"""Observables and fits: spread, participation, localization length, break time.

Everything here is a pure function of probability profiles or of recorded
series; phases never enter, so all diagnostics are exactly invariant under
the dephasing measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FitFailedError",
    "ObservableSeries",
    "SeriesRecorder",
    "average_series",
    "break_time",
    "localization_length_fit",
    "participation_ratio",
    "second_moment",
]


class FitFailedError(RuntimeError):
    """The requested fit has no meaningful answer on this data."""


def second_moment(state, m0: int) -> float:
    """Spread around m0: sum (m - m0)^2 |a_m|^2 / sum |a_m|^2."""
    p = state.probabilities()
    total = float(np.sum(p))
    if total <= 0.0:
        raise ValueError("second moment of a zero-norm state is undefined")
    d = state.momenta() - int(m0)
    return float(np.sum(d * d * p) / total)


def mean_momentum(state) -> float:
    p = state.probabilities()
    total = float(np.sum(p))
    if total <= 0.0:
        raise ValueError("mean momentum of a zero-norm state is undefined")
    return float(np.sum(state.momenta() * p) / total)


def participation_ratio(state) -> float:
    """Effective number of occupied states, 1 / sum P_m^2 (P normalized)."""
    p = state.probabilities()
    total = float(np.sum(p))
    if total <= 0.0:
        raise ValueError("participation ratio of a zero-norm state is undefined")
    p = p / total
    return float(1.0 / np.sum(p * p))


def localization_length_fit(
    profile: np.ndarray,
    m0: int,
    window: tuple[float, float],
    *,
    m_min: int | None = None,
    min_points: int = 10,
) -> float:
    """Localization length from the exponential tail of a probability profile.

    Fits ln P_m against |m - m0| over ``window`` = (lo, hi) by least squares
    and returns lambda = -2 / slope, the length of P ~ exp(-2|m - m0|/lambda).
    The window should exclude the central core and the basis edges; points
    with P <= 0 are skipped.  Raises FitFailedError when the tail does not
    decay (slope >= 0).  ``m_min`` defaults to the centered basis
    -(len-1)/2.
    """
    p = np.asarray(profile, dtype=float)
    if m_min is None:
        m_min = -(len(p) - 1) // 2
    m = np.arange(m_min, m_min + len(p))
    dist = np.abs(m - int(m0))
    lo, hi = window
    keep = (dist >= lo) & (dist <= hi) & (p > 0.0)
    if int(keep.sum()) < min_points:
        raise FitFailedError(
            f"only {int(keep.sum())} usable points in window {window}, need {min_points}"
        )
    slope = _lsq_slope(dist[keep].astype(float), np.log(p[keep]))
    if slope >= 0.0:
        raise FitFailedError(f"profile does not decay over window {window} (slope {slope:.3e})")
    return -2.0 / slope


def break_time(
    series: ObservableSeries,
    classical_slope: float,
    threshold: float = 0.5,
    window: int = 20,
) -> int | None:
    """First step where the trailing-window growth of <m^2> drops below
    threshold * classical_slope; None when growth never slows that far.

    ``classical_slope`` is the reference growth per step.  Needs at least
    50 recorded steps.
    """
    if classical_slope <= 0.0:
        raise ValueError(f"classical_slope must be > 0, got {classical_slope}")
    n = len(series.step)
    if n < 50:
        raise ValueError(f"series must have at least 50 steps, got {n}")
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    sm = series.second_moment
    steps = series.step.astype(float)
    for j in range(window, n):
        sl = _lsq_slope(steps[j - window + 1 : j + 1], sm[j - window + 1 : j + 1])
        if sl < threshold * classical_slope:
            return int(series.step[j])
    return None


def _lsq_slope(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x - x.mean()
    den = float(np.sum(xm * xm))
    if den == 0.0:
        raise ValueError("degenerate fit: abscissa has no spread")
    return float(np.sum(xm * (y - y.mean())) / den)


@dataclass
class ObservableSeries:
    """Per-step records of one run (or one trajectory average).

    Arrays are aligned: entry i belongs to kick ``step[i]`` at time
    step*tau.  ``norm_deficit`` is 1 - sum |a_m|^2, nondecreasing up to
    float noise since each kick can only lose probability.  Classical
    ensembles reuse the container with participation_ratio and p_initial
    set to NaN.
    """

    step: np.ndarray
    time: np.ndarray
    norm_deficit: np.ndarray
    mean_m: np.ndarray
    second_moment: np.ndarray
    participation_ratio: np.ndarray
    p_initial: np.ndarray
    metadata: dict = field(default_factory=dict)
    late_profile: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.step)

    COLUMNS = (
        "step",
        "time",
        "norm_deficit",
        "mean_m",
        "second_moment",
        "participation_ratio",
        "p_initial",
    )

    def rows(self):
        """Yield records in the fixed column order, for serialization."""
        for i in range(len(self.step)):
            yield (
                int(self.step[i]),
                float(self.time[i]),
                float(self.norm_deficit[i]),
                float(self.mean_m[i]),
                float(self.second_moment[i]),
                float(self.participation_ratio[i]),
                float(self.p_initial[i]),
            )


class SeriesRecorder:
    """Fills an ObservableSeries step by step during an evolution."""

    def __init__(self, steps: int, tau: float, m0: int, metadata: dict):
        n = steps + 1
        self.tau = float(tau)
        self.m0 = int(m0)
        self.series = ObservableSeries(
            step=np.arange(n),
            time=np.arange(n) * float(tau),
            norm_deficit=np.zeros(n),
            mean_m=np.zeros(n),
            second_moment=np.zeros(n),
            participation_ratio=np.zeros(n),
            p_initial=np.zeros(n),
            metadata=dict(metadata, m0=int(m0), tau=float(tau)),
        )
        self._m0_index = None

    def record(self, j: int, state) -> None:
        s = self.series
        if self._m0_index is None:
            self._m0_index = state.index(self.m0)
        p = state.probabilities()
        total = float(np.sum(p))
        d = state.momenta() - self.m0
        s.norm_deficit[j] = 1.0 - total
        s.mean_m[j] = float(np.sum(state.momenta() * p) / total)
        s.second_moment[j] = float(np.sum(d * d * p) / total)
        s.participation_ratio[j] = float(total * total / np.sum(p * p))
        s.p_initial[j] = float(p[self._m0_index])

    def finish(self) -> ObservableSeries:
        return self.series


def average_series(series_list: list[ObservableSeries]) -> ObservableSeries:
    """Mean of aligned series with exact (fsum) accumulation per entry.

    Summation order is fixed by list order, so chunked or threaded
    production of the inputs cannot change the result.
    """
    if not series_list:
        raise ValueError("cannot average an empty list of series")
    first = series_list[0]
    n = len(first)
    for s in series_list[1:]:
        if len(s) != n or not np.array_equal(s.step, first.step):
            raise ValueError("series to average must share the same step grid")
    count = len(series_list)

    def fmean(values_per_series) -> np.ndarray:
        stacked = np.stack(values_per_series)
        return np.array([math.fsum(stacked[:, i]) / count for i in range(n)])

    out = ObservableSeries(
        step=first.step.copy(),
        time=first.time.copy(),
        norm_deficit=fmean([s.norm_deficit for s in series_list]),
        mean_m=fmean([s.mean_m for s in series_list]),
        second_moment=fmean([s.second_moment for s in series_list]),
        participation_ratio=fmean([s.participation_ratio for s in series_list]),
        p_initial=fmean([s.p_initial for s in series_list]),
        metadata=dict(first.metadata),
    )
    profiles = [s.late_profile for s in series_list if s.late_profile is not None]
    if len(profiles) == count:
        stacked = np.stack(profiles)
        out.late_profile = np.array(
            [math.fsum(stacked[:, i]) / count for i in range(stacked.shape[1])]
        )
    return out
