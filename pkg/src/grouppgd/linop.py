"""Matrix-free linear operators: application, adjoints, group composition,
normalized stacking, and spectral quantities.

Operators are immutable ``LinearMap`` records holding forward/adjoint
closures plus exact dimensions.  Everything downstream (solver steps,
certificates, dense oracles) goes through this surface, so the adjoint
consistency of each constructor is what the whole test suite leans on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .symmetry import GroupAction

__all__ = [
    "LinearMap",
    "DimensionMismatchError",
    "SizeCapError",
    "ConvergenceError",
    "apply",
    "from_dense",
    "identity_map",
    "compose_with_action",
    "stack_mean",
    "spectral_norm",
    "gram_dense",
]

DENSE_CAP = 4096


class DimensionMismatchError(ValueError):
    """Operator, action, or vector dimensions do not line up."""


class SizeCapError(ValueError):
    """A dense assembly was requested above the configured size cap."""


class ConvergenceError(RuntimeError):
    """Power iteration hit its iteration cap.

    Carries ``last_estimate`` and ``iterations`` so callers can inspect the
    non-converged state.
    """

    def __init__(self, msg, last_estimate, iterations):
        super().__init__(msg)
        self.last_estimate = last_estimate
        self.iterations = iterations


@dataclass(frozen=True)
class LinearMap:
    """A real linear operator given by its forward and adjoint actions.

    ``forward`` maps vectors of length ``cols`` to vectors of length ``rows``;
    ``adjoint`` maps the other way.  Constructors in this module guarantee
    <Ax, y> == <x, A^T y> up to round-off.
    """

    rows: int
    cols: int
    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    tag: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)


def apply(A: LinearMap, x: np.ndarray) -> np.ndarray:
    """Return ``A x``, validating the input length."""
    x = np.asarray(x, dtype=float)
    if x.shape != (A.cols,):
        raise DimensionMismatchError(
            f"operator {A.tag!r} expects length {A.cols}, got shape {x.shape}"
        )
    return A.forward(x)


def from_dense(matrix: np.ndarray, tag: str = "dense") -> LinearMap:
    """Wrap a dense 2-D array as a LinearMap with exact matrix-vector products."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D array, got ndim={M.ndim}")
    return LinearMap(
        rows=M.shape[0],
        cols=M.shape[1],
        forward=lambda x, M=M: M @ x,
        adjoint=lambda y, M=M: M.T @ y,
        tag=tag,
    )


def identity_map(d: int) -> LinearMap:
    return LinearMap(rows=d, cols=d, forward=lambda x: x.copy(),
                     adjoint=lambda y: y.copy(), tag=f"identity[{d}]")


def compose_with_action(A: LinearMap, T: GroupAction) -> LinearMap:
    """Return the operator ``x -> A(T x)``.

    The adjoint is ``y -> T^{-1}(A^T y)`` because group actions are
    orthogonal permutations.  Rows and cols are preserved.
    """
    if A.cols != T.dimension:
        raise DimensionMismatchError(
            f"cannot compose: operator has {A.cols} columns, action acts on "
            f"dimension {T.dimension}"
        )
    return LinearMap(
        rows=A.rows,
        cols=A.cols,
        forward=lambda x: A.forward(T.apply(x)),
        adjoint=lambda y: T.apply_inverse(A.adjoint(y)),
        tag=f"{A.tag}*{T.label}" if T.label else f"{A.tag}*action",
    )


def stack_mean(ops: list[LinearMap]) -> LinearMap:
    """Vertically stack operators with a root-mean-square normalization.

    Each block is scaled by ``1/sqrt(len(ops))`` so that
    ``||stack(x)||^2`` equals the mean of the per-block ``||A_i x||^2``.
    That makes the smallest eigenvalue of the stacked Gram exactly the
    averaged restricted curvature the convergence certificate consumes.
    """
    if not ops:
        raise DimensionMismatchError("stack_mean needs at least one operator")
    cols = ops[0].cols
    for op in ops:
        if op.cols != cols:
            raise DimensionMismatchError(
                f"stack_mean: mismatched column counts {[o.cols for o in ops]}"
            )
    scale = 1.0 / np.sqrt(len(ops))
    row_counts = [op.rows for op in ops]
    offsets = np.concatenate([[0], np.cumsum(row_counts)])
    total_rows = int(offsets[-1])

    def forward(x, ops=tuple(ops)):
        return scale * np.concatenate([op.forward(x) for op in ops])

    def adjoint(y, ops=tuple(ops)):
        acc = np.zeros(cols)
        for op, lo, hi in zip(ops, offsets[:-1], offsets[1:]):
            acc += op.adjoint(y[lo:hi])
        return scale * acc

    return LinearMap(rows=total_rows, cols=cols, forward=forward,
                     adjoint=adjoint, tag=f"rms-stack[{len(ops)}]")


def spectral_norm(A: LinearMap, tol: float = 1e-10, max_iter: int = 10_000,
                  seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A`` by seeded power iteration.

    Converged when successive Rayleigh quotients agree to ``tol`` relatively.
    Raises :class:`ConvergenceError` (carrying the last estimate) if the
    iteration cap is hit first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=A.cols)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        v = np.ones(A.cols)
        norm = np.linalg.norm(v)
    v /= norm
    estimate = 0.0
    for it in range(1, max_iter + 1):
        w = A.adjoint(A.forward(v))
        new_estimate = float(v @ w)  # Rayleigh quotient of A^T A at unit v
        wnorm = np.linalg.norm(w)
        if wnorm == 0.0:
            return 0.0  # v in the null space and quotient already 0
        v = w / wnorm
        if it > 1 and abs(new_estimate - estimate) <= tol * abs(new_estimate):
            return new_estimate
        estimate = new_estimate
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last estimate {estimate:.6e})",
        last_estimate=estimate,
        iterations=max_iter,
    )


def gram_dense(A: LinearMap, cap: int = DENSE_CAP) -> np.ndarray:
    """Assemble ``A^T A`` densely by probing with basis vectors.

    Refuses operators wider than ``cap`` columns; the dense path exists to
    back small-instance oracles, not production solves.
    """
    if A.cols > cap:
        raise SizeCapError(
            f"gram_dense refused: {A.cols} columns exceeds cap {cap}"
        )
    G = np.empty((A.cols, A.cols))
    e = np.zeros(A.cols)
    for j in range(A.cols):
        e[j] = 1.0
        G[:, j] = A.adjoint(A.forward(e))
        e[j] = 0.0
    return G
