"""Proximal maps for hard sparsity constraints with nonnegativity.

The feasible set for a block is ``{M : M >= 0 entrywise, nnz(M) <= s}``.
Because the constraint is an indicator function, its proximal map is the
Euclidean projection and does not depend on the step size.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import BlockProblem

__all__ = [
    "SparsityConstraint",
    "project_sparse_nonneg",
    "prox_oracle",
    "prox_step",
]


def project_sparse_nonneg(u: np.ndarray, s: int) -> np.ndarray:
    """Project ``u`` onto the nonnegative matrices with at most ``s`` nonzeros.

    Negative entries are clipped to zero, the ``s`` largest surviving entries
    are kept, and everything else is zeroed.  Ties between equal entries keep
    the smaller row-major linear index; entries that are exactly zero after
    clipping are never counted as kept, so the result can have fewer than
    ``s`` nonzeros.

    Parameters
    ----------
    u : ndarray
        Dense 2-D input.
    s : int
        Nonzero budget with ``1 <= s <= u.size``.

    Returns
    -------
    ndarray
        The projection, same shape as ``u``.
    """
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"input must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError("input contains non-finite entries")
    _check_budget(s, arr.size)
    clipped = np.maximum(arr, 0.0).ravel()
    # Stable sort on the negated values: descending value, ascending index on ties.
    ranking = np.argsort(-clipped, kind="stable")
    keep = ranking[:s]
    keep = keep[clipped[keep] > 0.0]
    out = np.zeros_like(clipped)
    out[keep] = clipped[keep]
    return out.reshape(arr.shape)


def prox_oracle(u: np.ndarray, s: int) -> np.ndarray:
    """Brute-force reference for :func:`project_sparse_nonneg`.

    Enumerates every support of size at most ``s``, forms the clipped
    candidate ``max(u, 0)`` restricted to the support, and returns the
    candidate with the smallest squared distance to ``u``.  Ties prefer the
    lexicographically smallest support.  Only intended for matrices with at
    most 12 entries.
    """
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"input must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.size > 12:
        raise ValueError(f"oracle limited to 12 entries, got {arr.size}")
    _check_budget(s, arr.size)
    flat = arr.ravel()
    clipped = np.maximum(flat, 0.0)
    best_obj = math.inf
    best_support: tuple[int, ...] | None = None
    for size in range(0, s + 1):
        for support in itertools.combinations(range(flat.size), size):
            cand = np.zeros_like(flat)
            for i in support:
                cand[i] = clipped[i]
            obj = float(np.sum((cand - flat) ** 2))
            if obj < best_obj or (obj == best_obj and support < best_support):
                best_obj = obj
                best_support = support
    out = np.zeros_like(flat)
    for i in best_support:
        out[i] = clipped[i]
    return out.reshape(arr.shape)


def _check_budget(s: int, size: int) -> None:
    if not isinstance(s, (int, np.integer)):
        raise ValueError(f"nonzero budget must be an integer, got {s!r}")
    if not 1 <= s <= size:
        raise ValueError(f"nonzero budget must satisfy 1 <= s <= {size}, got {s}")


@dataclass(frozen=True)
class SparsityConstraint:
    """Entrywise nonnegativity combined with a hard cap on nonzero count."""

    s: int

    def __post_init__(self) -> None:
        if not isinstance(self.s, (int, np.integer)) or self.s < 1:
            raise ValueError(f"nonzero budget must be a positive integer, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))

    def validate_for(self, shape: tuple[int, int]) -> None:
        size = int(shape[0]) * int(shape[1])
        if self.s > size:
            raise ValueError(
                f"nonzero budget {self.s} exceeds the {size} entries of shape {tuple(shape)}"
            )

    def is_feasible(self, m: np.ndarray) -> bool:
        arr = np.asarray(m)
        return bool((arr >= 0.0).all()) and int(np.count_nonzero(arr)) <= self.s

    def indicator(self, m: np.ndarray) -> float:
        return 0.0 if self.is_feasible(m) else math.inf

    def project(self, m: np.ndarray, sigma: float | None = None) -> np.ndarray:
        # sigma is accepted for prox-map signature compatibility; projections
        # onto a fixed set are step-size independent.
        return project_sparse_nonneg(m, self.s)


def prox_step(
    problem: BlockProblem,
    j: int,
    anchor: np.ndarray,
    grad: np.ndarray,
    sigma: float,
) -> np.ndarray:
    """One proximal gradient step on block ``j``: ``prox_{sigma F_j}(anchor - sigma * grad)``.

    Raises ``FloatingPointError`` when the gradient or the prox output is
    non-finite, and ``ValueError`` on shape or step-size contract violations.
    The returned block always satisfies ``F_j < inf``.
    """
    if not 0 <= j < problem.n_blocks:
        raise ValueError(f"block index {j} out of range for {problem.n_blocks} blocks")
    shape = problem.block_shapes[j]
    anchor = np.asarray(anchor, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if anchor.shape != shape:
        raise ValueError(f"anchor for block {j} has shape {anchor.shape}, expected {shape}")
    if grad.shape != shape:
        raise ValueError(f"gradient for block {j} has shape {grad.shape}, expected {shape}")
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise ValueError(f"step size must be positive and finite, got {sigma!r}")
    if not np.isfinite(grad).all():
        raise FloatingPointError(f"non-finite gradient for block {j}")
    out = np.asarray(problem.nonsmooth_prox[j](anchor - sigma * grad, sigma), dtype=np.float64)
    if out.shape != shape:
        raise ValueError(f"prox for block {j} returned shape {out.shape}, expected {shape}")
    if not np.isfinite(out).all():
        raise FloatingPointError(f"non-finite prox output for block {j}")
    if float(problem.nonsmooth_value[j](out)) == math.inf:
        raise FloatingPointError(f"prox for block {j} returned an infeasible point")
    return out
