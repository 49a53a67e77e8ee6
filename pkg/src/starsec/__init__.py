"""Fairness-aware secure ISAC design toolkit.

Joint optimization of base-station beamformers, artificial-noise covariance,
common-rate allocation, and STAR-RIS coefficients to maximize the minimum
per-user secrecy rate under beampattern-gain and power constraints, by
alternating optimization over two convex conic subproblems.
"""

from .scenario import (
    Geometry,
    GeometryParams,
    SystemConfig,
    db_to_linear,
    dbm_to_watts,
    derive_run_seed,
    desk_default,
    linear_to_db,
    load_config,
    paper_default,
    sample_geometry,
    save_config,
)
from .channel import (
    ChannelSet,
    effective_cu_channel,
    pathloss,
    sample_channels,
    steering_vector,
)
from .metrics import (
    DesignPoint,
    FeasibilityReport,
    RateReport,
    SensingReport,
    StarProfile,
    beampattern_gain,
    check_feasibility,
    rate_report,
    transmit_power,
)
from .surrogate import (
    AuxState,
    SurrogateCoefficients,
    mm_coefficients,
    quadratic_minorant,
    surrogate_rate,
    tangent_log,
    tight_aux,
)
from .conic import (
    ConicProgram,
    SolveResult,
    SolveSettings,
    embed_hermitian,
    extract_hermitian,
    solve,
)
from .subproblems import (
    BASELINES,
    apply_baseline,
    build_v_step,
    build_w_step,
    initial_design,
    sensing_only,
)
from .driver import AlgorithmTrace, evaluate_design, run_ao
from .harness import SweepSpec, figure_protocols, run_single, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AlgorithmTrace",
    "AuxState",
    "BASELINES",
    "ChannelSet",
    "ConicProgram",
    "DesignPoint",
    "FeasibilityReport",
    "Geometry",
    "GeometryParams",
    "RateReport",
    "SensingReport",
    "SolveResult",
    "SolveSettings",
    "StarProfile",
    "SurrogateCoefficients",
    "SweepSpec",
    "SystemConfig",
    "apply_baseline",
    "beampattern_gain",
    "build_v_step",
    "build_w_step",
    "check_feasibility",
    "db_to_linear",
    "dbm_to_watts",
    "derive_run_seed",
    "desk_default",
    "effective_cu_channel",
    "embed_hermitian",
    "evaluate_design",
    "extract_hermitian",
    "figure_protocols",
    "initial_design",
    "linear_to_db",
    "load_config",
    "mm_coefficients",
    "paper_default",
    "pathloss",
    "quadratic_minorant",
    "rate_report",
    "run_ao",
    "run_single",
    "run_sweep",
    "sample_channels",
    "sample_geometry",
    "save_config",
    "sensing_only",
    "solve",
    "steering_vector",
    "surrogate_rate",
    "tangent_log",
    "tight_aux",
    "transmit_power",
]
