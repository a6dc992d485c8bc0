"""Copenhagen and time-symmetric predictions for entangled-photon polarizer experiments."""

from .discrimination import (
    DiscriminationConfig,
    DiscriminationReport,
    KUnidentifiable,
    NoDiscriminatingSetting,
    discriminate,
    divergence_map,
    fit_k,
    likelihood_ratio_test,
    optimal_settings,
    required_samples,
)
from .measurement import (
    MeasurementOutcome,
    PolarizerSetting,
    apply_polarizer,
    joint_pass_probability,
    sequential_chain,
    settings_from_angles,
)
from .models import (
    Copenhagen,
    TimeSymmetricBell,
    TimeSymmetricTriphoton,
    bell_rate,
    copenhagen_rate,
    decoherence_step_budget,
    eq2_closed_form,
    eq3_time_symmetric,
    predict_rate,
    rate_grid,
)
from .montecarlo import CountRecord, SimulationConfig, derive_stream_seed, simulate_counts
from .state import (
    CapacityError,
    PureState,
    bell_state,
    canonical_angle,
    ghz_state,
    inner_product,
    linear_ket,
    norm,
    tensor,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Copenhagen",
    "CountRecord",
    "DiscriminationConfig",
    "DiscriminationReport",
    "KUnidentifiable",
    "MeasurementOutcome",
    "NoDiscriminatingSetting",
    "PolarizerSetting",
    "PureState",
    "SimulationConfig",
    "TimeSymmetricBell",
    "TimeSymmetricTriphoton",
    "apply_polarizer",
    "bell_rate",
    "bell_state",
    "canonical_angle",
    "copenhagen_rate",
    "decoherence_step_budget",
    "derive_stream_seed",
    "discriminate",
    "divergence_map",
    "eq2_closed_form",
    "eq3_time_symmetric",
    "fit_k",
    "ghz_state",
    "inner_product",
    "joint_pass_probability",
    "likelihood_ratio_test",
    "linear_ket",
    "norm",
    "optimal_settings",
    "predict_rate",
    "rate_grid",
    "required_samples",
    "sequential_chain",
    "settings_from_angles",
    "simulate_counts",
    "tensor",
]
