"""Group-symmetry accelerated projected gradient descent for linear inverse
problems, with a certificate engine for its linear convergence rate."""

from .bench import (
    Geometry,
    ProblemInstance,
    add_noise,
    angle_subsampled_operator,
    build_problem,
    evenly_spaced_angles,
    full_coverage_radius,
    ring_phantom,
    shifted_angles,
    textured_phantom,
)
from .certificate import (
    BoundVacuousError,
    CertificateReport,
    DominationReport,
    bound_curve,
    bound_limit,
    certify,
    compute_alpha,
    compute_eps_gstar,
    compute_eps_w,
    verify_bound,
)
from .constraint import (
    Box,
    ConstraintSet,
    DescentCone,
    L1Ball,
    Nonneg,
    Subspace,
    descent_cone_of,
    project,
    project_cone,
    restricted_min_eig,
)
from .kernels import NUMBA_ENABLED
from .linop import (
    ConvergenceError,
    DimensionMismatchError,
    LinearMap,
    SizeCapError,
    apply,
    compose_with_action,
    from_dense,
    gram_dense,
    identity_map,
    spectral_norm,
    stack_mean,
)
from .solver import (
    DivergenceError,
    IterateTrace,
    SolverConfig,
    group_pgd_step,
    pgd_step,
    run,
    run_ensemble,
    run_multistage,
)
from .symmetry import (
    GroupAction,
    SymmetricSubset,
    cyclic_shift_action,
    identity_action,
    polar_theta_shift,
    sample_action,
    sample_action_weighted,
    symmetric_subset,
)

__version__ = "0.1.0"
