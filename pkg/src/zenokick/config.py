"""Run configuration: a flat-sectioned YAML document, validated fail-closed.

Every input of a run is explicit in the config (no environment, no
wall-clock seeding), so identical files reproduce identical outputs byte
for byte.  Unknown keys are rejected rather than ignored; missing required
fields fail with the field named.

Example::

    experiment: kicked
    steps: 2000
    seed: 42
    physics:   {k: 5.0, tau: 1.0, h0_spec: rotor}
    numerics:  {M: auto, kernel_tol: 1.0e-10, spill_threshold: 1.0e-8}
    protocol:  {kind: full, period: 1}
    ensemble:  {trajectories: 16}
    output:    {directory: runs/demo}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import yaml

from .kickedmap import MAX_HALF_WIDTH, MAX_STEPS, rotor_resonance

__all__ = ["ConfigError", "RunConfig", "parse_config"]

EXPERIMENTS = ("twolevel-zeno", "kicked", "classical", "compare")
PROTOCOL_KINDS = ("none", "full", "subset")
FORMATS = ("csv", "json")

_SECTIONS = {
    "physics": ("k", "tau", "h0_spec", "Omega", "T"),
    "numerics": ("M", "kernel_tol", "spill_threshold"),
    "protocol": ("kind", "period", "subset"),
    "ensemble": ("trajectories", "particles"),
    "output": ("directory", "formats"),
}
_TOP_KEYS = ("experiment", "steps", "seed", "threads") + tuple(_SECTIONS)


class ConfigError(ValueError):
    """The run configuration is malformed, incomplete, or contradictory."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, validated run description."""

    experiment: str
    seed: int
    steps: int
    out_dir: str
    threads: int = 1
    k: float | None = None
    tau: float | None = None
    h0_spec: str | tuple[float, ...] = "rotor"
    omega: float | None = None
    total_time: float | None = None
    basis: int | str = "auto"
    kernel_tol: float = 1e-10
    spill_threshold: float = 1e-8
    protocol_kind: str = "none"
    protocol_period: int = 1
    protocol_subset: tuple[int, ...] = ()
    trajectories: int = 16
    particles: int = 100_000
    formats: tuple[str, ...] = FORMATS
    warnings: tuple[str, ...] = field(default=(), compare=False, repr=False)

    def to_mapping(self) -> dict[str, Any]:
        """Nested mapping with the config-file key names; parses back equal."""
        physics: dict[str, Any] = {}
        if self.k is not None:
            physics["k"] = self.k
        if self.tau is not None:
            physics["tau"] = self.tau
        physics["h0_spec"] = (
            self.h0_spec if isinstance(self.h0_spec, str) else list(self.h0_spec)
        )
        if self.omega is not None:
            physics["Omega"] = self.omega
        if self.total_time is not None:
            physics["T"] = self.total_time
        return {
            "experiment": self.experiment,
            "steps": self.steps,
            "seed": self.seed,
            "threads": self.threads,
            "physics": physics,
            "numerics": {
                "M": self.basis,
                "kernel_tol": self.kernel_tol,
                "spill_threshold": self.spill_threshold,
            },
            "protocol": {
                "kind": self.protocol_kind,
                "period": self.protocol_period,
                "subset": list(self.protocol_subset),
            },
            "ensemble": {
                "trajectories": self.trajectories,
                "particles": self.particles,
            },
            "output": {
                "directory": self.out_dir,
                "formats": list(self.formats),
            },
        }


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _as_int(value, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        _fail(path, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        _fail(path, f"must be <= {hi}, got {value}")
    return int(value)


def _as_real(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        _fail(path, f"must be finite, got {out!r}")
    return out


def _section(data: Mapping, name: str) -> dict:
    raw = data.get(name, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        _fail(name, f"expected a key-value section, got {raw!r}")
    known = _SECTIONS[name]
    for key in raw:
        if key not in known:
            _fail(f"{name}.{key}", f"unknown key; known keys: {', '.join(known)}")
    return dict(raw)


def _require(section: Mapping, name: str, key: str, experiment: str):
    if key not in section or section[key] is None:
        _fail(f"{name}.{key}", f"missing required field for experiment {experiment!r}")
    return section[key]


def parse_config(source: str | Mapping) -> RunConfig:
    """Parse and validate a config document (YAML text or a mapping)."""
    if isinstance(source, Mapping):
        data: Any = dict(source)
    else:
        try:
            data = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not well-formed YAML: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError("config must be a key-value document")

    for key in data:
        if key not in _TOP_KEYS:
            _fail(str(key), f"unknown key; known keys: {', '.join(_TOP_KEYS)}")

    if "experiment" not in data:
        _fail("experiment", "missing required field")
    experiment = data["experiment"]
    if experiment not in EXPERIMENTS:
        _fail("experiment", f"unknown experiment {experiment!r}; valid: {', '.join(EXPERIMENTS)}")

    if "steps" not in data:
        _fail("steps", "missing required field")
    steps = _as_int(data["steps"], "steps", lo=1, hi=MAX_STEPS)
    if "seed" not in data:
        _fail("seed", "missing required field (runs never seed from the clock)")
    seed = _as_int(data["seed"], "seed", lo=0, hi=2**64 - 1)
    threads = _as_int(data.get("threads", 1), "threads", lo=1, hi=256)

    physics = _section(data, "physics")
    numerics = _section(data, "numerics")
    protocol = _section(data, "protocol")
    ensemble = _section(data, "ensemble")
    output = _section(data, "output")

    if "directory" not in output or not isinstance(output["directory"], str) or not output["directory"]:
        _fail("output.directory", "missing required field")
    out_dir = output["directory"]
    formats_raw = output.get("formats", list(FORMATS))
    if not isinstance(formats_raw, (list, tuple)) or not formats_raw:
        _fail("output.formats", f"expected a nonempty list from {FORMATS}")
    for f in formats_raw:
        if f not in FORMATS:
            _fail("output.formats", f"unknown format {f!r}; valid: {', '.join(FORMATS)}")
    formats = tuple(dict.fromkeys(formats_raw))

    k = tau = omega = total_time = None
    h0_spec: str | tuple[float, ...] = "rotor"
    if experiment in ("kicked", "classical", "compare"):
        k = _as_real(_require(physics, "physics", "k", experiment), "physics.k")
        if k < 0.0:
            _fail("physics.k", f"must be >= 0, got {k}")
        tau = _as_real(_require(physics, "physics", "tau", experiment), "physics.tau")
        if tau <= 0.0:
            _fail("physics.tau", f"must be > 0, got {tau}")
        h0_spec = _parse_h0(physics.get("h0_spec", "rotor"))
        for forbidden in ("Omega", "T"):
            if forbidden in physics:
                _fail(f"physics.{forbidden}", f"not a field of experiment {experiment!r}")
    else:
        omega = _as_real(_require(physics, "physics", "Omega", experiment), "physics.Omega")
        if omega <= 0.0:
            _fail("physics.Omega", f"must be > 0, got {omega}")
        total_time = _as_real(_require(physics, "physics", "T", experiment), "physics.T")
        if total_time <= 0.0:
            _fail("physics.T", f"must be > 0, got {total_time}")
        for forbidden in ("k", "tau"):
            if forbidden in physics:
                _fail(f"physics.{forbidden}", f"not a field of experiment {experiment!r}")
        if "h0_spec" in physics:
            h0_spec = _parse_h0(physics["h0_spec"])

    basis: int | str = numerics.get("M", "auto")
    if basis != "auto":
        basis = _as_int(basis, "numerics.M", lo=1, hi=MAX_HALF_WIDTH)
    kernel_tol = _as_real(numerics.get("kernel_tol", 1e-10), "numerics.kernel_tol")
    if not 1e-14 <= kernel_tol < 1.0:
        _fail("numerics.kernel_tol", f"must lie in [1e-14, 1), got {kernel_tol}")
    spill = _as_real(numerics.get("spill_threshold", 1e-8), "numerics.spill_threshold")
    if not 0.0 < spill < 1.0:
        _fail("numerics.spill_threshold", f"must lie in (0, 1), got {spill}")

    kind = protocol.get("kind", "none")
    if kind not in PROTOCOL_KINDS:
        _fail("protocol.kind", f"unknown kind {kind!r}; valid kinds: {', '.join(PROTOCOL_KINDS)}")
    period = _as_int(protocol.get("period", 1), "protocol.period", lo=1)
    subset_raw = protocol.get("subset", [])
    if subset_raw is None:
        subset_raw = []
    if not isinstance(subset_raw, (list, tuple)):
        _fail("protocol.subset", f"expected a list of states, got {subset_raw!r}")
    subset = tuple(_as_int(m, "protocol.subset") for m in subset_raw)
    if kind == "subset" and not subset:
        _fail("protocol.subset", "subset protocol needs a nonempty set of states")

    trajectories = _as_int(
        ensemble.get("trajectories", 10_000 if experiment == "twolevel-zeno" else 16),
        "ensemble.trajectories",
        lo=1,
    )
    particles = _as_int(ensemble.get("particles", 100_000), "ensemble.particles", lo=1)

    warnings: list[str] = []
    if experiment in ("kicked", "compare") and h0_spec == "rotor" and tau is not None:
        res = rotor_resonance(tau)
        if res is not None:
            p, q = res
            warnings.append(
                f"tau = {tau!r} is {p}/{q} of 4*pi: rotor free phases are quantum-resonant "
                "(degenerate) and localization will not develop"
            )

    return RunConfig(
        experiment=experiment,
        seed=seed,
        steps=steps,
        out_dir=out_dir,
        threads=threads,
        k=k,
        tau=tau,
        h0_spec=h0_spec,
        omega=omega,
        total_time=total_time,
        basis=basis,
        kernel_tol=kernel_tol,
        spill_threshold=spill,
        protocol_kind=kind,
        protocol_period=period,
        protocol_subset=subset,
        trajectories=trajectories,
        particles=particles,
        formats=formats,
        warnings=tuple(warnings),
    )


def _parse_h0(raw) -> str | tuple[float, ...]:
    if isinstance(raw, str):
        if raw != "rotor":
            _fail("physics.h0_spec", f"unknown Hamiltonian {raw!r}; use 'rotor' or coefficients")
        return "rotor"
    if isinstance(raw, (list, tuple)) and raw:
        return tuple(_as_real(c, "physics.h0_spec") for c in raw)
    _fail("physics.h0_spec", f"expected 'rotor' or a coefficient list, got {raw!r}")
    raise AssertionError("unreachable")
