"""Dual-space preconditioned gradient descent and benchmark tooling."""

from .core import (
    DomainError,
    DualReference,
    NumericalRangeError,
    Objective,
    bregman_divergence,
    finite_diff_gradient,
    finite_diff_hessian,
)
from .solver import (
    IterateRecord,
    IterateTrace,
    NumericsError,
    SolverConfig,
    dual_precon_step,
    solve,
    verify_rate_bounds,
)
from .baselines import (
    MirrorMap,
    bregman_step,
    euclidean_mirror_map,
    gd_step,
    shifted_power_mirror_map,
)
from .problems import (
    ProblemInstance,
    box_radii,
    build_problem,
    exp_penalty_dual_reference,
    exp_penalty_objective,
    generate_random_instance,
    pnorm_dual_reference,
    pnorm_objective,
    power_dual_reference,
    power1d_problem,
    quadratic_problem,
    read_instance,
    translated_instance,
    write_instance,
)
from .certify import (
    AssumptionViolationError,
    CertificateReport,
    ConditioningError,
    check_second_order,
    eta_bound,
    exp_penalty_constants,
    log_radius_pair_sampler,
    pnorm_constants,
    primal_dual_condition_comparison,
    read_report,
    sample_bregman_ratio,
    write_report,
)

__version__ = "0.1.0"
