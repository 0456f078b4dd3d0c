"""Experiment execution: library calls in, series.csv and meta.json out.

One invocation runs one experiment.  CSV output is deterministic byte for
byte for a given config: floats are written in shortest round-trip form,
rows end in a bare newline, and all randomness flows from the config seed
through per-trajectory counter-based streams.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .classical import ClassicalEnsemble, classical_diffusion, evolve_classical, h0_derivative
from .config import RunConfig
from .diagnostics import ObservableSeries
from .kickedmap import (
    StateVector,
    default_half_width,
    evolve,
    evolve_ensemble,
    hamiltonian_phases,
)
from .measurement import MeasurementProtocol
from .numerics import PhaseStream, build_kernel
from .twolevel import TwoLevelAmplitudes, RabiStep, simulate_measured_mc, survival_probability

__all__ = ["RunResult", "run_experiment"]

ZENO_COLUMNS = ("n", "p1_analytic", "p1_mc", "mc_sigma")


@dataclass
class RunResult:
    out_dir: Path
    series_paths: list[Path]
    meta_path: Path | None
    meta: dict


def run_experiment(cfg: RunConfig) -> RunResult:
    """Execute the configured experiment and write its artifacts."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.experiment == "twolevel-zeno":
        tables, extra = _run_zeno(cfg)
    elif cfg.experiment == "kicked":
        tables, extra = _run_kicked(cfg)
    elif cfg.experiment == "classical":
        tables, extra = _run_classical(cfg)
    else:
        tables, extra = _run_compare(cfg)

    series_paths: list[Path] = []
    if "csv" in cfg.formats:
        for name, columns, rows in tables:
            path = out_dir / f"{name}.csv"
            _write_csv(path, columns, rows)
            series_paths.append(path)

    meta = {
        "config": cfg.to_mapping(),
        "library_version": __version__,
        "numpy_version": np.__version__,
        "seed": cfg.seed,
        "warnings": list(cfg.warnings),
        "series_files": [f"{name}.csv" for name, _, _ in tables],
    }
    meta.update(extra)
    meta_path = None
    if "json" in cfg.formats:
        meta_path = out_dir / "meta.json"
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return RunResult(out_dir, series_paths, meta_path, meta)


def _protocol(cfg: RunConfig) -> MeasurementProtocol:
    return MeasurementProtocol(cfg.protocol_kind, cfg.protocol_period, cfg.protocol_subset)


def _resolve_basis(cfg: RunConfig, protocol: MeasurementProtocol) -> int:
    if cfg.basis != "auto":
        return int(cfg.basis)
    return default_half_width(cfg.k, cfg.steps, localized=protocol.kind == "none")


def _series_rows(series: ObservableSeries):
    return [tuple(row) for row in series.rows()]


def _run_kicked(cfg: RunConfig):
    protocol = _protocol(cfg)
    kernel = build_kernel(cfg.k, cfg.kernel_tol)
    half_width = _resolve_basis(cfg, protocol)
    phases = hamiltonian_phases(cfg.h0_spec, cfg.tau, half_width)
    initial = StateVector.delta(half_width, 0)
    meta = {"kernel_half_width": kernel.half_width, "basis_half_width": half_width}

    if protocol.kind == "none":
        # no randomness enters: one trajectory is the whole ensemble
        _, series = evolve(
            initial, kernel, phases, cfg.steps, protocol, None,
            spill_threshold=cfg.spill_threshold,
        )
        meta["trajectories_effective"] = 1
    else:
        series = evolve_ensemble(
            initial, kernel, phases, cfg.steps, protocol, cfg.seed, cfg.trajectories,
            threads=cfg.threads, spill_threshold=cfg.spill_threshold,
        )
        meta["trajectories_effective"] = cfg.trajectories
    meta["final_second_moment"] = float(series.second_moment[-1])
    return [("series", ObservableSeries.COLUMNS, _series_rows(series))], meta


def _run_classical(cfg: RunConfig):
    ens = ClassicalEnsemble.uniform_start(cfg.particles, cfg.k, cfg.tau, cfg.seed)
    _, series = evolve_classical(ens, cfg.steps, h0_derivative(cfg.h0_spec))
    diffusion = classical_diffusion(series.time, series.second_moment)
    meta = {
        "diffusion_coefficient": diffusion,
        "quasilinear_diffusion": cfg.k**2 / (4.0 * cfg.tau),
    }
    return [("series", ObservableSeries.COLUMNS, _series_rows(series))], meta


def _run_zeno(cfg: RunConfig):
    rows: list[tuple] = [(0, 1.0, 1.0, 0.0)]
    for n in range(1, cfg.steps + 1):
        p_exact = survival_probability(cfg.omega, cfg.total_time, n)
        step = RabiStep.zeno_protocol(cfg.omega, cfg.total_time, n)
        mc = simulate_measured_mc(
            TwoLevelAmplitudes.ground(), step, n, cfg.trajectories, cfg.seed,
            stream_offset=n * cfg.trajectories,
        )
        sigma = math.sqrt(max(p_exact * (1.0 - p_exact), 0.0) / cfg.trajectories)
        rows.append((n, p_exact, mc.p1, sigma))
    meta = {
        "pulse_area": cfg.omega * cfg.total_time,
        "final_survival_analytic": rows[-1][1],
    }
    return [("series", ZENO_COLUMNS, rows)], meta


def _run_compare(cfg: RunConfig):
    period = cfg.protocol_period if cfg.protocol_period > 1 else 10
    kernel = build_kernel(cfg.k, cfg.kernel_tol)
    half_width = (
        int(cfg.basis) if cfg.basis != "auto"
        else default_half_width(cfg.k, cfg.steps, localized=False)
    )
    phases = hamiltonian_phases(cfg.h0_spec, cfg.tau, half_width)
    initial = StateVector.delta(half_width, 0)

    tables = []
    finals = {}

    _, series_none = evolve(
        initial, kernel, phases, cfg.steps, MeasurementProtocol.none(), None,
        spill_threshold=cfg.spill_threshold,
    )
    tables.append(("series_none", ObservableSeries.COLUMNS, _series_rows(series_none)))
    finals["none"] = float(series_none.second_moment[-1])

    for label, proto in (
        (f"measured_every_{period}", MeasurementProtocol.full(period)),
        ("measured_every_kick", MeasurementProtocol.full(1)),
    ):
        series = evolve_ensemble(
            initial, kernel, phases, cfg.steps, proto, cfg.seed, cfg.trajectories,
            threads=cfg.threads, spill_threshold=cfg.spill_threshold,
        )
        tables.append((f"series_{label}", ObservableSeries.COLUMNS, _series_rows(series)))
        finals[label] = float(series.second_moment[-1])

    ens = ClassicalEnsemble.uniform_start(cfg.particles, cfg.k, cfg.tau, cfg.seed)
    _, series_cl = evolve_classical(ens, cfg.steps, h0_derivative(cfg.h0_spec))
    tables.append(("series_classical", ObservableSeries.COLUMNS, _series_rows(series_cl)))
    finals["classical"] = float(series_cl.second_moment[-1])

    meta = {
        "kernel_half_width": kernel.half_width,
        "basis_half_width": half_width,
        "measurement_period": period,
        "final_second_moments": finals,
    }
    return tables, meta


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))
