"""Exact cyclic group actions on signals, realized as permutations.

A :class:`GroupAction` is an orthogonal signal transform: applying it is a
gather ``x[perm]``, so norms and inner products are preserved bit-for-bit up
to reordering of additions, and the inverse is another permutation.  The
actions used by the solver are circular shifts of the angular index of a
polar-grid image, for which rotation is exact (no interpolation), keeping the
convergence analysis literally checkable.

A :class:`SymmetricSubset` is the ordered family {Id, g, g^-1, g^2, g^-2, ...}
drawn from a single generator: it contains the identity and the inverse of
every member but need not be closed under composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupAction",
    "SymmetricSubset",
    "identity_action",
    "cyclic_shift_action",
    "polar_theta_shift",
    "symmetric_subset",
    "sample_action",
    "sample_action_weighted",
]


@dataclass(frozen=True)
class GroupAction:
    """An exact permutation transform of length-``dimension`` signals.

    ``permutation`` is in gather form: ``apply(x)[i] == x[permutation[i]]``.
    ``power`` is the exponent of this action relative to the generator that
    produced it (0 for the identity, negative for inverses).
    """

    dimension: int
    permutation: np.ndarray
    power: int
    label: str = ""
    inverse_permutation: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.shape != (self.dimension,):
            raise ValueError(
                f"permutation has shape {perm.shape}, expected ({self.dimension},)"
            )
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(self.dimension, dtype=np.int64)
        # a non-bijection would have left gaps; verify round trip
        if not np.array_equal(perm[inverse], np.arange(self.dimension)):
            raise ValueError("permutation is not a bijection")
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "inverse_permutation", inverse)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.permutation, np.arange(self.dimension)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x[self.permutation]

    def apply_inverse(self, x: np.ndarray) -> np.ndarray:
        return x[self.inverse_permutation]

    def inverse(self) -> "GroupAction":
        return GroupAction(
            dimension=self.dimension,
            permutation=self.inverse_permutation.copy(),
            power=-self.power,
            label=f"{self.label}^-1" if self.label else "",
        )

    def compose(self, other: "GroupAction") -> "GroupAction":
        """Return the action ``x -> self(other(x))``.

        The power field adds, which is meaningful when both operands are
        powers of the same generator.
        """
        if self.dimension != other.dimension:
            raise ValueError("cannot compose actions of different dimensions")
        # self(other(x))[i] = other(x)[p_self[i]] = x[p_other[p_self[i]]]
        return GroupAction(
            dimension=self.dimension,
            permutation=other.permutation[self.permutation],
            power=self.power + other.power,
            label=f"{self.label}*{other.label}",
        )


def identity_action(d: int) -> GroupAction:
    return GroupAction(dimension=d, permutation=np.arange(d, dtype=np.int64),
                       power=0, label="id")


def cyclic_shift_action(d: int, s: int) -> GroupAction:
    """Circular shift moving entry ``i`` to position ``(i + s) mod d``.

    Equivalently ``apply(x)[i] == x[(i - s) mod d]``; shifting by 1 turns
    ``(1, 2, 3, 4)`` into ``(4, 1, 2, 3)``.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    idx = np.arange(d, dtype=np.int64)
    perm = (idx - s) % d
    return GroupAction(dimension=d, permutation=perm, power=s, label=f"shift{s:+d}")


def polar_theta_shift(n_r: int, n_theta: int, s: int) -> GroupAction:
    """Rotate a polar-grid image by ``s`` angular steps.

    The signal layout is row-major with radius major and angle minor
    (index = r * n_theta + theta); the rotated image reads
    ``out(r, theta) = x(r, (theta - s) mod n_theta)``.  With ``n_r == 1``
    this is exactly :func:`cyclic_shift_action` on the angle axis.
    """
    if n_r < 1 or n_theta < 1:
        raise ValueError("grid sizes must be at least 1")
    theta = np.arange(n_theta, dtype=np.int64)
    shifted = (theta - s) % n_theta
    rows = n_theta * np.arange(n_r, dtype=np.int64)[:, None]
    perm = (rows + shifted[None, :]).ravel()
    return GroupAction(dimension=n_r * n_theta, permutation=perm, power=s,
                       label=f"rot{s:+d}")


def _generator_power(generator: GroupAction, k: int) -> GroupAction:
    d = generator.dimension
    perm = np.arange(d, dtype=np.int64)
    step = generator.permutation if k >= 0 else generator.inverse_permutation
    for _ in range(abs(k)):
        perm = step[perm]
    base = generator.label or "g"
    label = "id" if k == 0 else (base if k == 1 else f"{base}^{k}")
    return GroupAction(dimension=d, permutation=perm, power=k, label=label)


@dataclass(frozen=True)
class SymmetricSubset:
    """Ordered actions {Id, g, g^-1, ..., g^radius, g^-radius}.

    Index 0 is always the identity; size is ``2 * radius + 1``.  The ordering
    is the canonical layout consumed by solver traces and certificates.
    """

    actions: tuple[GroupAction, ...]
    radius: int
    generator_label: str = "g"

    def __post_init__(self):
        if not self.actions:
            raise ValueError("subset must be nonempty")
        if not self.actions[0].is_identity:
            raise ValueError("actions[0] must be the identity")
        dims = {a.dimension for a in self.actions}
        if len(dims) != 1:
            raise ValueError("all actions must share one dimension")
        powers = sorted(a.power for a in self.actions)
        expected = sorted(range(-self.radius, self.radius + 1))
        if powers != expected:
            raise ValueError(
                f"subset powers {powers} are not exactly 0..+-{self.radius}"
            )
        by_power = {a.power: a for a in self.actions}
        for p, action in by_power.items():
            mate = by_power[-p]
            if not np.array_equal(mate.permutation, action.inverse_permutation):
                raise ValueError(f"action with power {-p} is not the inverse of power {p}")

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    @property
    def dimension(self) -> int:
        return self.actions[0].dimension


def symmetric_subset(generator: GroupAction, radius: int) -> SymmetricSubset:
    """Build {Id, g, g^-1, g^2, g^-2, ...} up to ``+-radius`` from a generator."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    actions = [_generator_power(generator, 0)]
    for k in range(1, radius + 1):
        actions.append(_generator_power(generator, k))
        actions.append(_generator_power(generator, -k))
    return SymmetricSubset(actions=tuple(actions), radius=radius,
                           generator_label=generator.label or "g")


def sample_action(subset: SymmetricSubset, rng: np.random.Generator):
    """Uniform draw over all actions (identity included); returns (action, index).

    The caller owns the generator state, so a fixed seed gives a fixed draw
    sequence.
    """
    idx = int(rng.integers(len(subset.actions)))
    return subset.actions[idx], idx


def sample_action_weighted(subset: SymmetricSubset, weights, rng: np.random.Generator):
    """Weighted draw over the subset.

    Provided for experimentation only: certificate guarantees assume the
    uniform distribution of :func:`sample_action`.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(subset.actions),) or np.any(w < 0) or w.sum() == 0:
        raise ValueError("weights must be nonnegative, one per action, not all zero")
    idx = int(rng.choice(len(subset.actions), p=w / w.sum()))
    return subset.actions[idx], idx
