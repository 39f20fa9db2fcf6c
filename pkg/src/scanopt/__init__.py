"""Iterative learning control and computational super-resolution for scanned imaging.

The package couples a servo simulation, an iterative-learning-control
engine that refines periodic scan commands, a synthetic camera that
decimates sub-pixel-shifted views of a scene, a least-squares
multi-frame reconstructor, a structured-illumination band separator,
and a grid optimizer that searches scan amplitude and period for the
best resolution improvement under actuator limits.
"""

from .errors import (
    ConfigurationError,
    DivergenceError,
    EmptyFeasibleSetError,
    FeasibilityError,
    IllConditionedBandError,
    InterleaveContractError,
    NoResolvableFrequencyError,
    ScanOptError,
    SingularMixingError,
    SingularModelError,
)
from .plant import (
    LiftedSystem,
    StateSpaceModel,
    Trajectory,
    first_order_lag,
    lift,
    second_order_mode,
    series,
    servo_model,
    simulate,
    toeplitz_apply,
    zoh_discretize,
)
from .ilc import (
    IterationHistory,
    IterationRecord,
    LearningLaw,
    ilc_step,
    monotonic_gain_bound,
    run_ilc,
    tracked_output,
    write_history_csv,
    write_trajectory_csv,
    zero_phase_filter,
)
from .scan import (
    HORIZONTAL,
    VERTICAL,
    ActuatorLimits,
    FeasibilityReport,
    Geometry,
    ScanParams,
    Violation,
    angle_to_shift,
    default_capture_indices,
    feasibility_check,
    gen_periodic_trajectory,
    load_angle_file,
    shift_to_angle,
)
from .imaging import (
    BarTargetSpec,
    CaptureSet,
    ImprovementReport,
    Raster,
    capture,
    ls_recon,
    make_capture_set,
    measure_improvement,
    read_capture_set,
    read_pgm,
    shift_add_recon,
    sim_demodulate_1d,
    synth_scene,
    translate,
    upsample_replicate,
    write_capture_set,
    write_pgm,
)
from .optimizer import (
    CandidateScore,
    OptResult,
    Scenario,
    candidate_params,
    evaluate_candidate,
    evaluate_candidate_artifacts,
    optimize,
    write_table_csv,
)
from .config import (
    ExperimentConfig,
    KEY_REGISTRY,
    load_config,
    parse_config_file,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "EmptyFeasibleSetError",
    "FeasibilityError",
    "IllConditionedBandError",
    "InterleaveContractError",
    "NoResolvableFrequencyError",
    "ScanOptError",
    "SingularMixingError",
    "SingularModelError",
    "LiftedSystem",
    "StateSpaceModel",
    "Trajectory",
    "first_order_lag",
    "lift",
    "second_order_mode",
    "series",
    "servo_model",
    "simulate",
    "toeplitz_apply",
    "zoh_discretize",
    "IterationHistory",
    "IterationRecord",
    "LearningLaw",
    "ilc_step",
    "monotonic_gain_bound",
    "run_ilc",
    "tracked_output",
    "write_history_csv",
    "write_trajectory_csv",
    "zero_phase_filter",
    "HORIZONTAL",
    "VERTICAL",
    "ActuatorLimits",
    "FeasibilityReport",
    "Geometry",
    "ScanParams",
    "Violation",
    "angle_to_shift",
    "default_capture_indices",
    "feasibility_check",
    "gen_periodic_trajectory",
    "load_angle_file",
    "shift_to_angle",
    "BarTargetSpec",
    "CaptureSet",
    "ImprovementReport",
    "Raster",
    "capture",
    "ls_recon",
    "make_capture_set",
    "measure_improvement",
    "read_capture_set",
    "read_pgm",
    "shift_add_recon",
    "sim_demodulate_1d",
    "synth_scene",
    "translate",
    "upsample_replicate",
    "write_capture_set",
    "write_pgm",
    "CandidateScore",
    "OptResult",
    "Scenario",
    "candidate_params",
    "evaluate_candidate",
    "evaluate_candidate_artifacts",
    "optimize",
    "write_table_csv",
    "ExperimentConfig",
    "KEY_REGISTRY",
    "load_config",
    "parse_config_file",
    "__version__",
]
