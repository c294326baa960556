"""Built-in benchmark problems.

Two applications are provided, both nonconvex and nonsmooth:

* multilayer sparse NMF: approximate a matrix ``A`` by a product
  ``X_0 @ X_1 @ ... @ X_{N-1}`` of nonnegative factors, each with a hard cap
  on its nonzero count;
* sparse nonnegative CP decomposition: approximate an ``n``-way tensor by a
  rank-``R`` sum of outer products with nonnegative, cardinality-capped
  factor matrices.

Each application exposes the smooth term, its per-block partial gradients,
per-block Lipschitz bounds, a relative-error metric, and a factory that
bundles everything into a :class:`~blockprox.problem.BlockProblem`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .multilinear import khatri_rao_chain, kruskal_tensor, mode_unfold
from .problem import BlockProblem
from .prox import SparsityConstraint

__all__ = [
    "MsnmfSpec",
    "SntdSpec",
    "sparsity_budgets",
    "msnmf_smooth",
    "msnmf_grad_block",
    "msnmf_lipschitz",
    "msnmf_relerr",
    "make_msnmf_problem",
    "sntd_smooth",
    "sntd_grad_block",
    "sntd_lipschitz",
    "sntd_relerr",
    "make_sntd_problem",
]


def sparsity_budgets(
    shapes: Sequence[tuple[int, int]], fraction: float
) -> tuple[int, ...]:
    """Per-block nonzero caps: ``floor(fraction * entries)``, at least 1."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"sparsity fraction must lie in (0, 1], got {fraction}")
    return tuple(max(1, math.floor(fraction * r * c)) for r, c in shapes)


def _frozen_array(values: np.ndarray, ndim: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"data must be {ndim}-dimensional, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError("data contains non-finite entries")
    arr.setflags(write=False)
    return arr


def _check_budgets_gamma(
    shapes: tuple[tuple[int, int], ...],
    budgets: Sequence[int],
    gamma: Sequence[float],
) -> tuple[tuple[int, ...], tuple[float, ...]]:
    if len(budgets) != len(shapes):
        raise ValueError(f"expected {len(shapes)} budgets, got {len(budgets)}")
    if len(gamma) != len(shapes):
        raise ValueError(f"expected {len(shapes)} gamma values, got {len(gamma)}")
    out_b = []
    for j, (s, shape) in enumerate(zip(budgets, shapes)):
        s = int(s)
        size = shape[0] * shape[1]
        if not 1 <= s <= size:
            raise ValueError(
                f"nonzero budget for block {j} must satisfy 1 <= s <= {size}, got {s}"
            )
        out_b.append(s)
    out_g = []
    for j, g in enumerate(gamma):
        g = float(g)
        if not (math.isfinite(g) and g > 1.0):
            raise ValueError(f"gamma for block {j} must be finite and > 1, got {g}")
        out_g.append(g)
    return tuple(out_b), tuple(out_g)


# ---------------------------------------------------------------------------
# Multilayer sparse NMF
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MsnmfSpec:
    """Sparsity-capped multilayer NMF instance.

    The smooth term is ``0.5 * ||A - X_0 @ ... @ X_{N-1}||_F^2`` and block
    ``j`` is constrained to be nonnegative with at most ``budgets[j]``
    nonzeros.  ``gamma[j] > 1`` scales the inverse step size for block ``j``.
    """

    data: np.ndarray
    block_shapes: tuple[tuple[int, int], ...]
    budgets: tuple[int, ...]
    gamma: tuple[float, ...]
    data_norm: float = field(init=False)

    def __post_init__(self) -> None:
        data = _frozen_array(self.data, ndim=2)
        shapes = tuple((int(r), int(c)) for r, c in self.block_shapes)
        if not shapes:
            raise ValueError("the factor chain needs at least one block")
        m, n = data.shape
        if shapes[0][0] != m:
            raise ValueError(
                f"first factor has {shapes[0][0]} rows, data has {m}"
            )
        for j in range(len(shapes) - 1):
            if shapes[j][1] != shapes[j + 1][0]:
                raise ValueError(
                    f"factor {j} has {shapes[j][1]} columns but factor {j + 1} "
                    f"has {shapes[j + 1][0]} rows"
                )
        if shapes[-1][1] != n:
            raise ValueError(
                f"last factor has {shapes[-1][1]} columns, data has {n}"
            )
        norm = float(np.linalg.norm(data))
        if norm == 0.0:
            raise ValueError("data matrix must be nonzero")
        budgets, gamma = _check_budgets_gamma(shapes, self.budgets, self.gamma)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "block_shapes", shapes)
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "data_norm", norm)

    @property
    def n_blocks(self) -> int:
        return len(self.block_shapes)

    @classmethod
    def from_chain_dims(
        cls,
        data: np.ndarray,
        chain_dims: Sequence[int],
        sparsity: float | Sequence[int] = 0.3,
        gamma: float | Sequence[float] = 1.5,
    ) -> "MsnmfSpec":
        """Build a spec from the chain node dimensions ``(d_0, ..., d_N)``.

        Factor ``j`` gets shape ``(d_j, d_{j+1})``.  ``sparsity`` is either a
        fraction of each block's entries or explicit per-block caps.
        """
        dims = [int(d) for d in chain_dims]
        if len(dims) < 2:
            raise ValueError("chain_dims needs at least two entries")
        shapes = tuple((dims[j], dims[j + 1]) for j in range(len(dims) - 1))
        if isinstance(sparsity, (int, float)):
            budgets = sparsity_budgets(shapes, float(sparsity))
        else:
            budgets = tuple(int(s) for s in sparsity)
        if isinstance(gamma, (int, float)):
            gammas = (float(gamma),) * len(shapes)
        else:
            gammas = tuple(float(g) for g in gamma)
        return cls(data=data, block_shapes=shapes, budgets=budgets, gamma=gammas)


def _left_right(factors: Sequence[np.ndarray], j: int):
    """Products of the factors strictly left and strictly right of ``j``.

    ``None`` stands for an empty side, which acts as the identity; it is kept
    symbolic so edge blocks skip a multiplication instead of building one.
    """
    left = None
    for m in range(j):
        left = factors[m] if left is None else left @ factors[m]
    right = None
    for m in range(j + 1, len(factors)):
        right = factors[m] if right is None else right @ factors[m]
    return left, right


def msnmf_smooth(spec: MsnmfSpec, factors: Sequence[np.ndarray]) -> float:
    """``0.5 * ||A - X_0 @ ... @ X_{N-1}||_F^2``."""
    product = factors[0]
    for f in factors[1:]:
        product = product @ f
    resid = product - spec.data
    return 0.5 * float(np.sum(resid * resid))


def msnmf_grad_block(spec: MsnmfSpec, factors: Sequence[np.ndarray], j: int) -> np.ndarray:
    """Partial gradient of the smooth term with respect to factor ``j``.

    With ``P`` the product of factors left of ``j`` and ``Q`` the product to
    the right, the gradient is ``P.T @ (P @ X_j @ Q - A) @ Q.T``.
    """
    left, right = _left_right(factors, j)
    mid = factors[j] if left is None else left @ factors[j]
    full = mid if right is None else mid @ right
    resid = full - spec.data
    g = resid if left is None else left.T @ resid
    return g if right is None else g @ right.T


def msnmf_lipschitz(spec: MsnmfSpec, factors: Sequence[np.ndarray], j: int) -> float:
    """Lipschitz bound ``||P.T @ P||_F * ||Q @ Q.T||_F`` for block ``j``.

    An empty side contributes a factor of exactly 1: the gradient map is then
    ``X -> X @ (Q @ Q.T) - (...)`` or its mirror, whose constant does not pick
    up the identity's Frobenius norm.
    """
    left, right = _left_right(factors, j)
    lf = 1.0 if left is None else float(np.linalg.norm(left.T @ left))
    rf = 1.0 if right is None else float(np.linalg.norm(right @ right.T))
    return lf * rf


def msnmf_relerr(spec: MsnmfSpec, factors: Sequence[np.ndarray]) -> float:
    """Relative reconstruction error ``||A - prod X|| / ||A||``."""
    product = factors[0]
    for f in factors[1:]:
        product = product @ f
    return float(np.linalg.norm(product - spec.data)) / spec.data_norm


def make_msnmf_problem(spec: MsnmfSpec) -> BlockProblem:
    """Bundle an :class:`MsnmfSpec` into a :class:`BlockProblem`."""
    constraints = tuple(SparsityConstraint(s) for s in spec.budgets)
    return BlockProblem(
        block_shapes=spec.block_shapes,
        smooth_value=lambda x: msnmf_smooth(spec, x),
        smooth_grad=lambda x, j: msnmf_grad_block(spec, x, j),
        lipschitz=lambda x, j: msnmf_lipschitz(spec, x, j),
        nonsmooth_value=tuple(c.indicator for c in constraints),
        nonsmooth_prox=tuple(c.project for c in constraints),
    )


# ---------------------------------------------------------------------------
# Sparse nonnegative CP decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SntdSpec:
    """Sparsity-capped nonnegative CP decomposition instance.

    The smooth term is ``0.5 * ||T - [[A_0, ..., A_{n-1}]]||_F^2`` where
    ``[[...]]`` is the rank-``rank`` Kruskal reconstruction.  Mode ``i`` gets
    the factor ``A_i`` of shape ``(T.shape[i], rank)``, constrained to be
    nonnegative with at most ``budgets[i]`` nonzeros.  The mode unfoldings of
    the data are precomputed once and reused by every gradient evaluation.
    """

    data: np.ndarray
    rank: int
    budgets: tuple[int, ...]
    gamma: tuple[float, ...]
    unfoldings: tuple[np.ndarray, ...] = field(init=False, repr=False)
    data_norm: float = field(init=False)

    def __post_init__(self) -> None:
        data = _frozen_array(self.data)
        if data.ndim < 2:
            raise ValueError(f"tensor must have at least 2 modes, got ndim={data.ndim}")
        if any(d < 1 for d in data.shape):
            raise ValueError(f"tensor dimensions must be positive, got {data.shape}")
        rank = int(self.rank)
        if rank < 1:
            raise ValueError(f"rank must be a positive integer, got {self.rank}")
        norm = float(np.linalg.norm(data.ravel()))
        if norm == 0.0:
            raise ValueError("data tensor must be nonzero")
        shapes = tuple((int(d), rank) for d in data.shape)
        budgets, gamma = _check_budgets_gamma(shapes, self.budgets, self.gamma)
        unfoldings = []
        for i in range(data.ndim):
            u = mode_unfold(data, i)
            u.setflags(write=False)
            unfoldings.append(u)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "unfoldings", tuple(unfoldings))
        object.__setattr__(self, "data_norm", norm)

    @property
    def n_blocks(self) -> int:
        return self.data.ndim

    @property
    def block_shapes(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(d), self.rank) for d in self.data.shape)

    @classmethod
    def from_tensor(
        cls,
        data: np.ndarray,
        rank: int,
        sparsity: float | Sequence[int] = 0.3,
        gamma: float | Sequence[float] = 1.5,
    ) -> "SntdSpec":
        data = np.asarray(data, dtype=np.float64)
        shapes = tuple((int(d), int(rank)) for d in data.shape)
        if isinstance(sparsity, (int, float)):
            budgets = sparsity_budgets(shapes, float(sparsity))
        else:
            budgets = tuple(int(s) for s in sparsity)
        if isinstance(gamma, (int, float)):
            gammas = (float(gamma),) * len(shapes)
        else:
            gammas = tuple(float(g) for g in gamma)
        return cls(data=data, rank=rank, budgets=budgets, gamma=gammas)


def sntd_smooth(spec: SntdSpec, factors: Sequence[np.ndarray]) -> float:
    """``0.5 * ||T - [[A_0, ..., A_{n-1}]]||_F^2``."""
    resid = kruskal_tensor(factors) - spec.data
    return 0.5 * float(np.sum(resid * resid))


def sntd_companion(spec: SntdSpec, factors: Sequence[np.ndarray], i: int) -> np.ndarray:
    """The Khatri-Rao companion ``B_i`` pairing with the mode-``i`` unfolding."""
    return khatri_rao_chain(factors, skip=i)


def sntd_grad_block(spec: SntdSpec, factors: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Partial gradient ``A_i @ (B_i.T @ B_i) - T_(i) @ B_i`` for mode ``i``."""
    companion = khatri_rao_chain(factors, skip=i)
    gram = companion.T @ companion
    return factors[i] @ gram - spec.unfoldings[i] @ companion


def sntd_lipschitz(spec: SntdSpec, factors: Sequence[np.ndarray], i: int) -> float:
    """Lipschitz bound ``||B_i.T @ B_i||_F`` for mode ``i``."""
    companion = khatri_rao_chain(factors, skip=i)
    return float(np.linalg.norm(companion.T @ companion))


def sntd_relerr(spec: SntdSpec, factors: Sequence[np.ndarray]) -> float:
    """Relative reconstruction error ``||T - [[A]]|| / ||T||``."""
    resid = kruskal_tensor(factors) - spec.data
    return float(np.linalg.norm(resid.ravel())) / spec.data_norm


def make_sntd_problem(spec: SntdSpec) -> BlockProblem:
    """Bundle an :class:`SntdSpec` into a :class:`BlockProblem`."""
    constraints = tuple(SparsityConstraint(s) for s in spec.budgets)
    return BlockProblem(
        block_shapes=spec.block_shapes,
        smooth_value=lambda x: sntd_smooth(spec, x),
        smooth_grad=lambda x, i: sntd_grad_block(spec, x, i),
        lipschitz=lambda x, i: sntd_lipschitz(spec, x, i),
        nonsmooth_value=tuple(c.indicator for c in constraints),
        nonsmooth_prox=tuple(c.project for c in constraints),
    )
