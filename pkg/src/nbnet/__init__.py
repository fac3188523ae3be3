"""Fractional-part networks, the Riemann zeta function and zero-free regions."""

from .certificates import (
    Certificate,
    RegionOrder,
    SamplePlan,
    ZeroFreeRegion,
    boundary_polyline,
    compare_regions,
    contains,
    exact_region,
    max_height_in_strip,
    monte_carlo_certificate,
    plan_samples,
)
from .errors import (
    ConstraintViolation,
    ConvergenceError,
    DomainError,
    NBNetError,
    NonFiniteError,
    PoleError,
    ShapeError,
    SingularSystemError,
    ToleranceError,
)
from .estimator import FracFeatures, FracNetRegressor
from .mellin import identity_residual, identity_rhs, mellin_net, mellin_net_closed_form, mellin_rho
from .network import (
    FracNet,
    breakpoints,
    evaluate,
    evaluate_step_form,
    example_net,
    frac,
    load_net,
    make_net,
    net_hash,
    project_constraint,
    save_net,
)
from .optimizer import (
    FitResult,
    GramSystem,
    assemble_gram,
    beta_schedule,
    fit_coefficients,
    objective,
)
from .zeta import ZetaEvalPolicy, eta, functional_equation_residual, gamma, zeta

__version__ = "0.1.0"
