"""Quantum dynamics under repeated measurement.

Measurement modeled as amplitude-phase randomization, applied to two very
different regimes: a resonantly driven two-level system, where frequent
readout freezes the dynamics (quantum Zeno effect), and a delta-kicked
multilevel system, where the same readout destroys dynamical localization
and restores classical-like diffusion.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .numerics import (
    KernelCapacityError,
    KickKernel,
    PhaseStream,
    bessel_j,
    bessel_row,
    build_kernel,
    draw_phase,
)
from .twolevel import (
    RabiStep,
    TwoLevelAmplitudes,
    TwoLevelProbabilities,
    evolve_measured,
    evolve_unitary,
    simulate_measured_mc,
    step_unitary,
    survival_probability,
)
from .measurement import (
    DensityMatrix,
    MeasurementProtocol,
    apply_measurement,
    average_trajectory_density,
    dephase_density,
    evolve_density,
    ring_kick_unitary,
    sample_projection,
)
from .kickedmap import (
    BasisOverflowError,
    FreePhases,
    StateVector,
    default_half_width,
    evolve,
    evolve_ensemble,
    hamiltonian_phases,
    inverse_kick_step,
    kick_step,
    rotor_resonance,
)
from .classical import (
    ClassicalEnsemble,
    classical_diffusion,
    classical_step,
    evolve_classical,
    h0_derivative,
)
from .diagnostics import (
    FitFailedError,
    ObservableSeries,
    average_series,
    break_time,
    localization_length_fit,
    participation_ratio,
    second_moment,
)
from .config import ConfigError, RunConfig, parse_config
from .runner import RunResult, run_experiment

__all__ = [
    "__version__",
    "BasisOverflowError",
    "ClassicalEnsemble",
    "ConfigError",
    "DensityMatrix",
    "FitFailedError",
    "FreePhases",
    "KernelCapacityError",
    "KickKernel",
    "MeasurementProtocol",
    "ObservableSeries",
    "PhaseStream",
    "RabiStep",
    "RunConfig",
    "RunResult",
    "StateVector",
    "TwoLevelAmplitudes",
    "TwoLevelProbabilities",
    "apply_measurement",
    "average_series",
    "average_trajectory_density",
    "bessel_j",
    "bessel_row",
    "break_time",
    "build_kernel",
    "classical_diffusion",
    "classical_step",
    "default_half_width",
    "dephase_density",
    "draw_phase",
    "evolve",
    "evolve_density",
    "evolve_ensemble",
    "evolve_classical",
    "evolve_measured",
    "evolve_unitary",
    "h0_derivative",
    "hamiltonian_phases",
    "inverse_kick_step",
    "kick_step",
    "localization_length_fit",
    "parse_config",
    "participation_ratio",
    "ring_kick_unitary",
    "rotor_resonance",
    "run_experiment",
    "sample_projection",
    "second_moment",
    "simulate_measured_mc",
    "step_unitary",
    "survival_probability",
]
