"""Dense multilinear algebra: Khatri-Rao products, unfoldings, Kruskal tensors.

Tensors are plain ``numpy.ndarray`` objects.  The mode-``n`` unfolding of a
``d_0 x ... x d_{N-1}`` tensor is the ``d_n x (prod of the rest)`` matrix whose
columns enumerate the non-unfolded indices with smaller mode numbers varying
fastest (the Kolda-Bader convention).  All mode arguments are 0-based.

References
----------
T. G. Kolda and B. W. Bader, "Tensor Decompositions and Applications",
SIAM Review 51(3), 2009.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "khatri_rao",
    "khatri_rao_chain",
    "mode_unfold",
    "mode_fold",
    "kruskal_tensor",
    "chain_matmul",
]


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={out.ndim}")
    return out


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Khatri-Rao (column-matched Kronecker) product.

    Parameters
    ----------
    a : ndarray of shape (p, r)
    b : ndarray of shape (q, r)

    Returns
    -------
    ndarray of shape (p * q, r)
        Row ``i * q + k`` equals ``a[i] * b[k]``, so the row index of ``a``
        varies slowest.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"khatri_rao operands must share a column count, got {a.shape[1]} and {b.shape[1]}"
        )
    p, r = a.shape
    q = b.shape[0]
    return (a[:, None, :] * b[None, :, :]).reshape(p * q, r)


def khatri_rao_chain(factors: Sequence[np.ndarray], skip: int | None = None) -> np.ndarray:
    """Khatri-Rao product of ``factors`` taken in reverse order.

    With factors ``(A_0, ..., A_{N-1})`` and ``skip=i`` this returns
    ``A_{N-1} (kr) ... (kr) A_{i+1} (kr) A_{i-1} (kr) ... (kr) A_0``, the
    companion matrix that pairs with the mode-``i`` unfolding of the
    reconstructed tensor.  If every factor is skipped the result is a single
    all-ones row, the neutral element for this product.
    """
    mats = [_as_matrix(f, f"factors[{m}]") for m, f in enumerate(factors)]
    if not mats:
        raise ValueError("khatri_rao_chain requires at least one factor")
    r = mats[0].shape[1]
    for m, f in enumerate(mats):
        if f.shape[1] != r:
            raise ValueError(
                f"factors[{m}] has {f.shape[1]} columns, expected {r} to match factors[0]"
            )
    if skip is not None and not 0 <= skip < len(mats):
        raise ValueError(f"skip index {skip} out of range for {len(mats)} factors")
    chain = [mats[m] for m in reversed(range(len(mats))) if m != skip]
    if not chain:
        return np.ones((1, r))
    out = chain[0]
    for f in chain[1:]:
        out = khatri_rao(out, f)
    return out


def mode_unfold(tensor: np.ndarray, mode: int) -> np.ndarray:
    """Matricize ``tensor`` along ``mode`` (0-based)."""
    t = np.asarray(tensor, dtype=np.float64)
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for a {t.ndim}-way tensor")
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def mode_fold(matrix: np.ndarray, mode: int, shape: Sequence[int]) -> np.ndarray:
    """Invert :func:`mode_unfold` back to a tensor of the given ``shape``."""
    mat = _as_matrix(matrix, "matrix")
    dims = tuple(int(d) for d in shape)
    if any(d < 1 for d in dims):
        raise ValueError(f"shape must have positive dimensions, got {dims}")
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for a {len(dims)}-way tensor")
    rest = int(np.prod(dims)) // dims[mode]
    if mat.shape != (dims[mode], rest):
        raise ValueError(
            f"matrix shape {mat.shape} does not match mode-{mode} unfolding of {dims}"
        )
    moved = (dims[mode],) + tuple(d for i, d in enumerate(dims) if i != mode)
    return np.moveaxis(np.reshape(mat, moved, order="F"), 0, mode)


def kruskal_tensor(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Reconstruct the tensor with entries ``sum_r prod_n factors[n][i_n, r]``.

    Implemented as a direct ``einsum`` contraction, deliberately not routed
    through unfoldings or Khatri-Rao products so identities relating the three
    operations are meaningful checks.
    """
    mats = [_as_matrix(f, f"factors[{m}]") for m, f in enumerate(factors)]
    if not mats:
        raise ValueError("kruskal_tensor requires at least one factor")
    r = mats[0].shape[1]
    for m, f in enumerate(mats):
        if f.shape[1] != r:
            raise ValueError(
                f"factors[{m}] has {f.shape[1]} columns, expected {r} to match factors[0]"
            )
    n = len(mats)
    operands: list = []
    for axis, f in enumerate(mats):
        operands.extend((f, [axis, n]))
    operands.append(list(range(n)))
    return np.einsum(*operands)


def chain_matmul(matrices: Sequence[np.ndarray], empty_dim: int | None = None) -> np.ndarray:
    """Left-to-right product of a sequence of conformable matrices.

    An empty sequence yields the ``empty_dim x empty_dim`` identity.  The
    association order is fixed (left to right) so results are reproducible
    bit for bit.
    """
    mats = [_as_matrix(m, f"matrices[{i}]") for i, m in enumerate(matrices)]
    if not mats:
        if empty_dim is None:
            raise ValueError("empty_dim is required for an empty matrix chain")
        if empty_dim < 1:
            raise ValueError(f"empty_dim must be positive, got {empty_dim}")
        return np.eye(int(empty_dim))
    out = mats[0]
    for i, m in enumerate(mats[1:], start=1):
        if out.shape[1] != m.shape[0]:
            raise ValueError(
                f"matrices[{i}] has {m.shape[0]} rows, expected {out.shape[1]} "
                f"to follow matrices[{i - 1}]"
            )
        out = out @ m
    return out
