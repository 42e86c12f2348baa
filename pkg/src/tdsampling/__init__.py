"""Time-domain direct sampling for acoustic inverse source problems."""
from .errors import (
    ConfigError,
    FitError,
    IllPosedCandidatesError,
    InvalidArgumentError,
    InvalidCurveError,
    SingularKernelError,
    StageError,
    TDSamplingError,
)
from .forward import CurveSource, FieldRecord, NoiseSpec, PointSourceSet, add_noise, curve_field, point_field
from .geometry import SamplingGrid, SensorArray, build_circular_array, build_sampling_grid, build_spherical_array
from .indicator import IndicatorGrid, compute_indicator, compute_indicator_reference
from .peaks import CURVE_DEFAULTS, POINT_DEFAULTS, PeakParams, PeakSet, extract_peaks
from .recover import (
    IntensitySolution,
    PolyFitResult,
    cluster_branches,
    extract_branches,
    fit_polynomials,
    recover_intensities,
    select_best_fit,
)
from .signal import Medium, Pulse, TimeGrid, kernel_eval, pulse_eval

__version__ = "0.1.0"
