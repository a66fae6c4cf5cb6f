"""Convergence-certificate engine.

Computes every constant of the linear-rate bound for the group-action solver
and checks the bound against seeded Monte Carlo runs:

* ``L``: largest eigenvalue of the operator Gram (sets the step size).
* ``mu_C``: smallest restricted Gram eigenvalue of the operator alone.
* ``mu_Gstar``: smallest restricted Gram eigenvalue of the RMS-normalized
  stack over the symmetric subset; this drives the contraction factor.
* ``alpha_Gstar = kappa_c * sqrt(1 - mu_Gstar / L)``: per-iteration
  contraction of the expected distance to the ground truth.
* ``eps_Gstar``: symmetry-mismatch term, zero when every subset action fixes
  the ground truth.
* ``eps_w``: cone-restricted noise amplification through the rotated
  adjoints, normalized by the noise norm.

The expected distance after k iterations is bounded by

    alpha^k * ||x0 - xd|| + kappa_c * (1 - alpha^k) / (L * (1 - alpha))
        * (eps_Gstar + eps_w * ||w||)

which :func:`bound_curve` evaluates and :func:`verify_bound` checks against
the empirical mean over replicates, with a Monte Carlo slack of
``2/sqrt(replicates)``.

Cone-dependent quantities are exact for whole-space and subspace cones and
flagged as estimates for sampled cones; :func:`verify_bound` refuses sampled
cones outright.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bench import ProblemInstance
from .constraint import DescentCone, descent_cone_of, project_cone, restricted_min_eig
from .linop import LinearMap, compose_with_action, spectral_norm, stack_mean
from .solver import SolverConfig, run_ensemble
from .symmetry import SymmetricSubset

__all__ = [
    "CertificateReport",
    "DominationReport",
    "BoundVacuousError",
    "compute_alpha",
    "compute_eps_gstar",
    "compute_eps_w",
    "certify",
    "bound_curve",
    "bound_limit",
    "verify_bound",
]


class BoundVacuousError(ValueError):
    """The contraction factor is not below 1, so the geometric bound is empty."""


@dataclass(frozen=True)
class CertificateReport:
    """All constants of the convergence bound, with per-field exactness flags.

    ``flags[name]`` is ``"exact"`` or ``"estimate"``; estimates arise only
    from sampled descent cones.  ``alpha_Gstar`` is always recomputable as
    ``kappa_c * sqrt(1 - mu_Gstar / L)``.
    """

    L: float
    mu_C: float
    mu_Gstar: float
    kappa_c: int
    alpha_Gstar: float
    eps_Gstar: float
    eps_w: float
    flags: dict[str, str]
    subset_size: int
    cone_kind: str

    @property
    def vacuous(self) -> bool:
        return not self.alpha_Gstar < 1.0

    def to_text(self) -> str:
        """Flat key-value block, one ``name = value`` line per field."""
        lines = []
        for name in ("L", "mu_C", "mu_Gstar", "kappa_c", "alpha_Gstar",
                     "eps_Gstar", "eps_w"):
            value = getattr(self, name)
            if isinstance(value, float):
                lines.append(f"{name} = {value:.17g}")
            else:
                lines.append(f"{name} = {value}")
        lines.append(f"subset_size = {self.subset_size}")
        lines.append(f"cone = {self.cone_kind}")
        for name in ("L", "mu_C", "mu_Gstar", "eps_Gstar", "eps_w"):
            lines.append(f"flag.{name} = {self.flags[name]}")
        lines.append(f"bound = {'vacuous' if self.vacuous else 'active'}")
        return "\n".join(lines) + "\n"


def compute_alpha(mu: float, L: float, kappa_c: int) -> float:
    """Contraction factor ``kappa_c * sqrt(1 - mu / L)``."""
    if L <= 0:
        raise ValueError("L must be positive")
    if not 0 <= mu <= L:
        raise ValueError(f"mu must lie in [0, L], got mu={mu}, L={L}")
    if kappa_c not in (1, 2):
        raise ValueError("kappa_c must be 1 (convex) or 2 (nonconvex)")
    return kappa_c * float(np.sqrt(1.0 - mu / L))


def _rotated_adjoint(A: LinearMap, action, y: np.ndarray) -> np.ndarray:
    # adjoint of A composed with the action: T^{-1} A^T y
    return action.apply_inverse(A.adjoint(y))


def compute_eps_gstar(A: LinearMap, subset: SymmetricSubset,
                      x_dagger: np.ndarray, C: DescentCone) -> float:
    """Symmetry-mismatch term of the bound.

    For each subset action the ground truth is rotated, re-measured, and the
    discrepancy pulled back through the rotated adjoint; the result is the
    largest cone-projected norm over the subset.  Zero whenever every action
    fixes the ground truth.
    """
    worst = 0.0
    for action in subset:
        mismatch = x_dagger - action.apply(x_dagger)
        z = _rotated_adjoint(A, action, A.forward(mismatch))
        worst = max(worst, float(np.linalg.norm(project_cone(C, z))))
    return worst


def compute_eps_w(A: LinearMap, subset: SymmetricSubset, w: np.ndarray,
                  C: DescentCone) -> float:
    """Noise amplification term, normalized by the noise norm (0 for w = 0)."""
    w_norm = float(np.linalg.norm(w))
    if w_norm == 0.0:
        return 0.0
    worst = 0.0
    for action in subset:
        z = _rotated_adjoint(A, action, w)
        worst = max(worst, float(np.linalg.norm(project_cone(C, z))))
    return worst / w_norm


def certify(problem: ProblemInstance, subset: SymmetricSubset,
            cone: DescentCone | None = None) -> CertificateReport:
    """Compute the full certificate for a problem and symmetric subset.

    The descent cone defaults to the cone of the feasible set at the ground
    truth.  ``mu_Gstar`` comes from the RMS stack of the operator composed
    with every subset action, probed densely and eigendecomposed, restricted
    to the cone.
    """
    if cone is None:
        cone = descent_cone_of(problem.K, problem.x_dagger)
    A = problem.A
    L = spectral_norm(A)
    mu_C = restricted_min_eig(A, cone)
    stacked = stack_mean([compose_with_action(A, g) for g in subset])
    mu_Gstar = restricted_min_eig(stacked, cone)
    kappa_c = problem.K.kappa_c
    # guard against round-off pushing the restricted eigenvalue past L
    if mu_Gstar > L * (1.0 + 1e-9):
        raise ValueError(
            f"restricted stack eigenvalue {mu_Gstar} exceeds L={L}; "
            "operator construction is inconsistent"
        )
    alpha = compute_alpha(min(mu_Gstar, L), L, kappa_c)
    eps_gstar = compute_eps_gstar(A, subset, problem.x_dagger, cone)
    eps_w = compute_eps_w(A, subset, problem.w, cone)
    cone_flag = "exact" if cone.exact else "estimate"
    flags = {
        "L": "exact",
        "mu_C": cone_flag,
        "mu_Gstar": cone_flag,
        "eps_Gstar": cone_flag,
        "eps_w": cone_flag,
    }
    return CertificateReport(
        L=L, mu_C=mu_C, mu_Gstar=mu_Gstar, kappa_c=kappa_c,
        alpha_Gstar=alpha, eps_Gstar=eps_gstar, eps_w=eps_w, flags=flags,
        subset_size=len(subset), cone_kind=cone.kind,
    )


def bound_curve(report: CertificateReport, rmsd0: float, w_norm: float,
                K: int) -> np.ndarray:
    """Evaluate the bound at iterations 0..K (inclusive, length K+1).

    Entry k is ``alpha^k * rmsd0`` plus the geometric accumulation of the
    mismatch and noise terms.  Requires ``alpha_Gstar < 1``; otherwise the
    geometric-sum form is invalid and :class:`BoundVacuousError` is raised.
    """
    if report.vacuous:
        raise BoundVacuousError(
            f"alpha_Gstar = {report.alpha_Gstar} is not below 1"
        )
    alpha = report.alpha_Gstar
    ks = np.arange(K + 1)
    alpha_pow = alpha ** ks
    drive = report.eps_Gstar + report.eps_w * w_norm
    tail = report.kappa_c * (1.0 - alpha_pow) / (report.L * (1.0 - alpha)) * drive
    return alpha_pow * rmsd0 + tail


def bound_limit(report: CertificateReport, w_norm: float) -> float:
    """Large-iteration limit of :func:`bound_curve`."""
    if report.vacuous:
        raise BoundVacuousError(
            f"alpha_Gstar = {report.alpha_Gstar} is not below 1"
        )
    drive = report.eps_Gstar + report.eps_w * w_norm
    return report.kappa_c * drive / (report.L * (1.0 - report.alpha_Gstar))


@dataclass(frozen=True)
class DominationReport:
    """Outcome of checking the bound against an empirical mean curve.

    ``margins[i] = bound[i] * (1 + slack) - empirical_mean[i]``; the check
    passes when every margin is nonnegative.  ``first_violation`` is the
    iteration index of the first negative margin, or None.
    """

    iterations: np.ndarray
    empirical_mean: np.ndarray
    bound: np.ndarray
    margins: np.ndarray
    slack: float
    replicates: int
    ok: bool
    first_violation: int | None
    certificate: CertificateReport

    def table(self) -> str:
        """Per-iteration margin table as CSV-like text."""
        lines = ["iter,empirical_mean,bound,margin"]
        for k, m, b, g in zip(self.iterations, self.empirical_mean,
                              self.bound, self.margins):
            lines.append(f"{k},{m:.17g},{b:.17g},{g:.17g}")
        return "\n".join(lines) + "\n"


def verify_bound(problem: ProblemInstance, subset: SymmetricSubset,
                 config: SolverConfig, replicates: int = 20,
                 slack: float | None = None,
                 cone: DescentCone | None = None) -> DominationReport:
    """Empirically check the bound: mean distance over replicates vs curve.

    Requires a convex feasible set, an exact (non-sampled) cone, and a
    non-vacuous contraction factor.  The step size is forced to the
    certificate's ``1/L`` so the runs match the certified regime.  The
    default slack ``2/sqrt(replicates)`` absorbs Monte Carlo error in the
    expectation estimate.
    """
    if cone is None:
        cone = descent_cone_of(problem.K, problem.x_dagger)
    if not cone.exact:
        raise ValueError("verify_bound requires an exact cone representation")
    report = certify(problem, subset, cone=cone)
    if report.kappa_c != 1:
        raise ValueError("verify_bound covers convex feasible sets only")
    if report.vacuous:
        raise BoundVacuousError(
            f"alpha_Gstar = {report.alpha_Gstar} is not below 1"
        )
    if slack is None:
        slack = 2.0 / np.sqrt(replicates)
    run_config = SolverConfig(
        max_iters=config.max_iters,
        step_size=1.0 / report.L,
        seed=config.seed,
        record_every=config.record_every,
    )
    iterations, mean_rmsd, _ = run_ensemble(problem, run_config, subset, replicates)
    rmsd0 = mean_rmsd[0]
    w_norm = float(np.linalg.norm(problem.w))
    full_curve = bound_curve(report, rmsd0, w_norm, int(iterations[-1]))
    bound = full_curve[iterations]
    allowed = bound * (1.0 + slack)
    margins = allowed - mean_rmsd
    violations = np.nonzero(margins < 0)[0]
    first = int(iterations[violations[0]]) if len(violations) else None
    return DominationReport(
        iterations=iterations,
        empirical_mean=mean_rmsd,
        bound=bound,
        margins=margins,
        slack=float(slack),
        replicates=replicates,
        ok=len(violations) == 0,
        first_violation=first,
        certificate=report,
    )
