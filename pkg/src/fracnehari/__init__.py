"""Ground states of coupled fractional Schroedinger systems with exponential critical growth."""
from .analysis import (
    CheckReport,
    FamilyConfig,
    brezis_lieb_check,
    exp_power_check,
    heaviest_window,
    tm_ratio_sweep,
    vanishing_diagnostic,
    window_masses,
)
from .functional import (
    energy,
    estimate_kappa,
    estimate_nu,
    estimate_Sq,
    gradient,
    nehari_residual,
    quadratic_part,
)
from .grid import Field, Grid1D, GridError, StatePair, frac_laplacian, gagliardo_seminorm_sq, make_grid, shift
from .model import (
    BumpParams,
    NonlinearitySpec,
    OverflowGuardError,
    PeriodicParams,
    PotentialError,
    PotentialSet,
    make_asymptotic_potentials,
    make_periodic_potentials,
    theta0,
    validate_nonlinearity,
    validate_potentials,
)
from .nehari import BracketError, fibering, project
from .solver import (
    ComparisonReport,
    GroundStateResult,
    SolverConfig,
    compare_levels,
    minimize_ground_state,
    recenter_state,
    upper_bound_cN,
)

__version__ = "0.1.0"
