"""Heralded ion-ion entanglement over fiber: linear optics, rates, timing and CHSH."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("ionlink")
except PackageNotFoundError:
    __version__ = "0.0.0+unknown"

from .fock_core import (
    BellState,
    DensityMatrix,
    JointState,
    ModeLabel,
    ModeRegister,
    PhotonicState,
    Site,
    fidelity,
    partial_trace,
)
from .optics_circuit import (
    HeraldClass,
    OpticalCircuit,
    analyzer_detectors,
    build_bell_analyzer,
    hom_coincidence_probability,
    measure,
)
from .entanglement_protocol import (
    ChannelModel,
    EmissionModel,
    HeraldedResult,
    herald_probability,
    run_attempt,
)
from .cavity_model import CavityGeometry, IonConstants, analyze_cavity
from .bell_test import CHSHConfig, chsh_value, monte_carlo_chsh, readout_counts
from .spacetime_scheduler import Scenario, build_schedule, validate
from .rate_budget import BudgetConfig, pair_rate, rate_report, time_to_pairs
from .presets import PRESETS, get_preset

# Import reports subpackage - table and document output
from . import reports

__all__ = [
    "__version__",
    "BellState",
    "DensityMatrix",
    "JointState",
    "ModeLabel",
    "ModeRegister",
    "PhotonicState",
    "Site",
    "fidelity",
    "partial_trace",
    "HeraldClass",
    "OpticalCircuit",
    "analyzer_detectors",
    "build_bell_analyzer",
    "hom_coincidence_probability",
    "measure",
    "ChannelModel",
    "EmissionModel",
    "HeraldedResult",
    "herald_probability",
    "run_attempt",
    "CavityGeometry",
    "IonConstants",
    "analyze_cavity",
    "CHSHConfig",
    "chsh_value",
    "monte_carlo_chsh",
    "readout_counts",
    "Scenario",
    "build_schedule",
    "validate",
    "BudgetConfig",
    "pair_rate",
    "rate_report",
    "time_to_pairs",
    "PRESETS",
    "get_preset",
    "reports",
]
