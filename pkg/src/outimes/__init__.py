"""Occupation times of the Ornstein-Uhlenbeck process.

Simulation by Euler-Maruyama, expected occupation times by direct quadrature
or by the substitution-and-splitting scheme, and recovery of (lam, sigma)
from observed occupation times by simplex search.
"""

from .analytic import (
    AnalyticConfig,
    ErfIntegralSpec,
    PrecisionGuardError,
    check_precision_guard,
    choose_s1,
    erf_time_integral,
    erf_time_integral_split,
    expected_occupation_direct,
    expected_occupation_split,
    simpson_i2,
    tail_i3,
    taylor_i1_closed_form,
    variance_k,
)
from .estimation import (
    TABLE_TRUE_PARAMETERS,
    EstimationResult,
    ObservationSet,
    OptimizerConfig,
    RecoveryRow,
    SimplexResult,
    estimate_parameters,
    generate_synthetic_observations,
    nelder_mead_minimize,
    recovery_table,
    recovery_windows,
    residual,
)
from .occupation import (
    MCEstimate,
    ObservationWindow,
    mc_expected_occupation,
    mc_expected_occupations,
    sample_occupation_time,
)
from .quadrature import adaptive_simpson, composite_simpson
from .sde import (
    OUParams,
    SamplePath,
    SimulationGrid,
    em_step,
    gaussian_increments,
    ou_moments,
    simulate_ou_path,
    simulate_ou_paths,
)

__version__ = "0.1.0"
