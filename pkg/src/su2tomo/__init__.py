"""Single-qubit polarization process tomography.

Reconstructs SU(2) transformations from six projective intensity
measurements with four engines (closed-form inversion, likelihood
minimization, a real-coded genetic algorithm, and a dense neural network)
and extends all of it to pixel-by-pixel maps of space-dependent processes.
"""

__version__ = "0.1.0"

from .errors import (
    CorruptModelError,
    DegenerateGateError,
    GeometryError,
    InvalidMatrixError,
    InvalidParameterError,
    MalformedModelError,
    ModelVersionError,
    NonPhysicalDataError,
    Su2TomoError,
    TrainingFailureError,
)
from .su2 import (
    GateParams,
    canonicalize,
    compose,
    fidelity,
    gate_matrix,
    gauge_flip,
    params_from_matrix,
    sample_haar,
)
from .polarimetry import (
    LABELS,
    BenchSettings,
    MeasurementSet,
    NoiseModel,
    basis_state,
    derive_bench_settings,
    load_measurements,
    projective_intensity,
    save_measurements,
    six_intensities_exact,
    six_intensities_noisy,
)

from .classic import (
    AppendixParams,
    BaselineConfig,
    ReconstructionResult,
    invert_five,
    invert_six,
    log_likelihood,
    minimize_likelihood,
)
from .genetic import GaConfig, Individual, Population, run_ga
from .network import (
    DEFAULT_CODEC,
    MlpModel,
    OutputCodec,
    TrainConfig,
    forward,
    forward_batch,
    init_model,
    load_model,
    save_model,
    save_training_log,
    train,
)
from .spatial import (
    ContinuityConfig,
    FrameSet,
    GPlate,
    GridGeometry,
    ParamMap,
    PlateSpec,
    UniformPlate,
    downsample_frames,
    gauge_fix_map,
    load_frameset,
    load_param_map,
    map_fidelity,
    plate_unitary,
    reconstruct_map_ga,
    reconstruct_map_nn,
    save_frameset,
    save_param_map,
    simulate_frames,
    truth_map,
)
from .bench import (
    BenchmarkPlan,
    BenchmarkReport,
    EngineStats,
    render_histogram_svg,
    run_benchmark,
    write_histogram_csv,
    write_report_csv,
)

__all__ = [
    "__version__",
    "Su2TomoError",
    "InvalidParameterError",
    "InvalidMatrixError",
    "NonPhysicalDataError",
    "DegenerateGateError",
    "GeometryError",
    "MalformedModelError",
    "ModelVersionError",
    "CorruptModelError",
    "TrainingFailureError",
    "GateParams",
    "canonicalize",
    "compose",
    "fidelity",
    "gate_matrix",
    "gauge_flip",
    "params_from_matrix",
    "sample_haar",
    "LABELS",
    "BenchSettings",
    "MeasurementSet",
    "NoiseModel",
    "basis_state",
    "derive_bench_settings",
    "load_measurements",
    "projective_intensity",
    "save_measurements",
    "six_intensities_exact",
    "six_intensities_noisy",
    "AppendixParams",
    "BaselineConfig",
    "ReconstructionResult",
    "invert_five",
    "invert_six",
    "log_likelihood",
    "minimize_likelihood",
    "GaConfig",
    "Individual",
    "Population",
    "run_ga",
    "DEFAULT_CODEC",
    "MlpModel",
    "OutputCodec",
    "TrainConfig",
    "forward",
    "forward_batch",
    "init_model",
    "load_model",
    "save_model",
    "save_training_log",
    "train",
    "ContinuityConfig",
    "FrameSet",
    "GPlate",
    "GridGeometry",
    "ParamMap",
    "PlateSpec",
    "UniformPlate",
    "downsample_frames",
    "gauge_fix_map",
    "load_frameset",
    "load_param_map",
    "map_fidelity",
    "plate_unitary",
    "reconstruct_map_ga",
    "reconstruct_map_nn",
    "save_frameset",
    "save_param_map",
    "simulate_frames",
    "truth_map",
    "BenchmarkPlan",
    "BenchmarkReport",
    "EngineStats",
    "render_histogram_svg",
    "run_benchmark",
    "write_histogram_csv",
    "write_report_csv",
]
