"""Large-deviations analysis of parameter modulation-estimation over the AWGN channel."""

__version__ = "0.1.0"

from .errors import (
    BinsFilteredError,
    DomainError,
    EvaluationError,
    GridTooLargeError,
    ModestError,
    QuadratureError,
)
from .exponents import (
    BandSpec,
    ChannelSpec,
    FadingSpec,
    awgn_reliability,
    critical_dimension,
    critical_rate,
    fading_reliability,
    fading_zero_rate_value,
    moment_bound_exponent,
    outage_probability,
    sphere_packing_exponent,
    strong_converse,
)
from .detection import (
    PowerProfile,
    SignalSetSpec,
    convexity_threshold,
    exact_mary_error,
    log_exact_mary_error,
    simplex_energy,
    variable_power_bound,
    zero_rate_lower_bound,
    zero_rate_upper_bound,
)
from .simulator import (
    ExperimentConfig,
    GridCode,
    TailEstimate,
    build_grid,
    estimator_to_detector,
    mse_from_tail,
    quantize,
    run_excess_error,
    run_fading,
    run_multidim,
    transmit_decode,
)
from .jscc import ExponentCurve, joint_exponent, separation_exponent, uniform_source_equality
