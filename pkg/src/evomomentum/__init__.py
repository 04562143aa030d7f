"""Evolutionary dynamics on the simplex with Polyak and Nesterov momentum."""
from .core import (
    MatrixLandscape,
    SimplexPoint,
    fitness,
    make_cyclic_matrix,
    mean_fitness_uniform,
    mean_fitness_weighted,
)
from .dynamics import (
    DynamicKind,
    DynamicsConfig,
    MomentumKind,
    MomentumState,
    Status,
    Trajectory,
    continuous_integrate,
    euclidean_gd_step,
    iterate,
    make_field,
    nesterov_step,
    polyak_step,
    projection_field,
    replicator_field,
)
from .exceptions import (
    BetaSingularity,
    DidNotConverge,
    DimensionError,
    NearZeroMeanFitness,
    NonpositiveArgument,
    ParseError,
    StateLeftSimplex,
    SupportViolation,
    ValidationError,
)
from .lyapunov import (
    EssReport,
    discrete_lyapunov_quotient,
    euclidean_half_sq,
    jensen_bound,
    kl_divergence,
    kl_time_derivative,
    verify_ess,
)

__version__ = "0.1.0"
