"""Virtual sensing for wireless sensor networks.

Sink-side virtual sensors predict the readings of dormant or
transmit-suppressed nodes from adaptive temporal filters and spatial
regression on active companions.
"""
from .core import (
    ConfigError,
    EnergyMode,
    Phase,
    PhaseSchedule,
    SensorTrace,
    SimConfig,
    VSFError,
    validate_config,
    window,
)
from .data_io import (
    AR1,
    AffineLink,
    Interpolate,
    RandomWalk,
    Reject,
    SineDrift,
    SyntheticSpec,
    align_traces,
    generate_synthetic,
    load_csv,
    write_csv,
)
from .energy import EnergyLedger, EnergyParams, summarize, tally_slot
from .engine import Outcome, Role, RoleAssignment, Sink, VirtualSensor, fixed_assignment
from .predictors import (
    FitTracker,
    SpatialRegressor,
    TemporalFilter,
    chi_squared,
    fit_score,
    fit_spatial,
    fit_temporal,
    lms_update,
    predict_spatial,
    predict_temporal,
    update_fit,
)
from .sim import SimReport, compare, run_baseline_lms, run_simulation

__version__ = "0.1.0"
