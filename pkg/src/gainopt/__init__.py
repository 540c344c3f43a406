"""Synthesis and certification of first-order optimization algorithms by
robust-control methods: gain-margin feasibility, analytic interpolation,
periodic lifting, and circle-criterion rate certificates."""

from . import (
    certificates,
    cli,
    errors,
    lifting,
    margin,
    problems,
    rates,
    runtime,
    synthesis,
    transfer,
)
from .certificates import (
    SectorBound,
    SPRConfig,
    caratheodory_pick,
    loop_transform,
    loop_transform_split,
    rate_certificate,
    scaled_spr_search,
    spr_check,
    verify_sector,
)
from .lifting import (
    LiftedSystem,
    Momentum2Schedule,
    PeriodicGDSchedule,
    check_accumulator_direction,
    check_causal_structure,
    lift_lti,
    lift_momentum2,
    lift_periodic_gd,
    periodic_margin_condition,
    polyphase,
)
from .margin import (
    InterpolationNode,
    MarginSpec,
    g_of,
    margin_feasible,
    margin_verify,
    np_solve,
    optimal_margin,
    phi_forward,
    phi_inverse,
    pick_feasible,
    recover_controller,
)
from .problems import (
    CompositeProblem,
    L1Term,
    PiecewiseQuadraticProblem,
    QuadraticProblem,
    Sector1DProblem,
    prox,
    random_quadratic,
    soft_threshold,
)
from .rates import RateEstimate, empirical_rate, spectral_rate, worst_case_rate
from .runtime import (
    Trace,
    run_difference,
    run_implicit_hb,
    run_implicit_prox,
    run_lti,
    run_prox_grad,
)
from .synthesis import (
    AlgorithmSpec,
    RateBudget,
    Realization,
    alpha_for_rate,
    delta_for_rate,
    gradient_descent,
    heavy_ball,
    ill_conditioned_plan,
    implicit_gd,
    implicit_heavy_ball,
    implicit_rate_bound,
    rho_circle,
    rho_gd,
    rho_min,
    splitting_synthesis,
    sub_condition,
)
from .transfer import (
    Polynomial,
    TransferFunction,
    TransferMatrix,
    closed_loop_charpoly,
    feedback,
    is_rho_stable,
)

__version__ = "0.1.0"
