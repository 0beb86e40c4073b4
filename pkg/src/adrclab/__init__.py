"""Closed-loop toolkit for observer-based active feedback linearization.

Components: the flexible-joint benchmark plant with a numeric relative-degree
checker, linear and nonlinear extended state observers, tracking
differentiators, state-error feedback laws, a fixed-step closed-loop
integrator, performance indices, and a GA tuner.
"""

from .controller import InlsefConfig, NlsefConfig, aiofl_law, fal, inlsef, nlsef
from .differentiator import TdConfig, itd_derivative, td_derivative
from .errors import ConfigError, DivergenceError, InvalidInputError, NumericError
from .metrics import MetricsReport, OpiWeights, compute_metrics, iau, isu, itae, opi
from .observer import (
    LyapunovReport,
    ObserverConfig,
    binomial_coefficients,
    g_function,
    gains_from_bandwidth,
    inleso_derivative,
    leso_derivative,
    lyapunov_validate,
)
from .odesim import (
    Event,
    NoiseSpec,
    Reference,
    RunRecord,
    Scenario,
    apply_event,
    noise_sample,
    rk4_step,
    run_closed_loop,
)
from .plant import (
    PlantParams,
    RelativeDegreeReport,
    check_relative_degree,
    output,
    slfjm_default_params,
    slfjm_dynamics,
)
from .tuner import GaConfig, SearchSpace, evaluate, ga_optimize

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DivergenceError", "InvalidInputError", "NumericError",
    "PlantParams", "RelativeDegreeReport", "slfjm_default_params",
    "slfjm_dynamics", "output", "check_relative_degree",
    "ObserverConfig", "LyapunovReport", "gains_from_bandwidth",
    "binomial_coefficients", "g_function", "leso_derivative",
    "inleso_derivative", "lyapunov_validate",
    "TdConfig", "td_derivative", "itd_derivative",
    "NlsefConfig", "InlsefConfig", "fal", "nlsef", "inlsef", "aiofl_law",
    "Reference", "Event", "NoiseSpec", "Scenario", "RunRecord",
    "rk4_step", "run_closed_loop", "apply_event", "noise_sample",
    "OpiWeights", "MetricsReport", "itae", "isu", "iau", "opi", "compute_metrics",
    "SearchSpace", "GaConfig", "evaluate", "ga_optimize",
]
