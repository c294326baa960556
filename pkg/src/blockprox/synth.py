"""Deterministic synthetic problem instances.

Ground-truth factors are sparse nonnegative matrices: a fixed-size random
support filled with uniform values in ``(0, 1]``, zeros elsewhere.  All
draws come from a caller-seeded generator, so the same seed reproduces the
same instance bit for bit.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .multilinear import kruskal_tensor

__all__ = [
    "sparse_uniform_matrix",
    "feasible_start",
    "generate_msnmf",
    "generate_sntd",
    "generate_synthetic",
]


def _support_count(size: int, density: float) -> int:
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    return min(size, max(1, round(density * size)))


def sparse_uniform_matrix(
    rng: np.random.Generator, shape: tuple[int, int], nnz: int
) -> np.ndarray:
    """A matrix with exactly ``nnz`` uniform ``(0, 1]`` entries on a random support."""
    rows, cols = int(shape[0]), int(shape[1])
    size = rows * cols
    if not 1 <= nnz <= size:
        raise ValueError(f"nnz must satisfy 1 <= nnz <= {size}, got {nnz}")
    out = np.zeros(size)
    support = rng.choice(size, size=nnz, replace=False)
    # 1 - U with U in [0, 1) lands in (0, 1], keeping supports exactly nonzero.
    out[support] = 1.0 - rng.random(nnz)
    return out.reshape(rows, cols)


def feasible_start(
    rng: np.random.Generator,
    block_shapes: Sequence[tuple[int, int]],
    budgets: Sequence[int],
) -> list[np.ndarray]:
    """Random starting factors saturating each block's nonzero budget."""
    if len(block_shapes) != len(budgets):
        raise ValueError(
            f"got {len(block_shapes)} shapes but {len(budgets)} budgets"
        )
    return [
        sparse_uniform_matrix(rng, shape, int(s))
        for shape, s in zip(block_shapes, budgets)
    ]


def generate_msnmf(
    chain_dims: Sequence[int],
    density: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Synthesize a multilayer NMF instance from chain node dimensions.

    Returns the data matrix (the exact product of the ground-truth factors)
    and the factors themselves.  Redraws in the unlikely event the product is
    identically zero.
    """
    dims = [int(d) for d in chain_dims]
    if len(dims) < 2:
        raise ValueError("chain_dims needs at least two entries")
    if any(d < 1 for d in dims):
        raise ValueError(f"chain dimensions must be positive, got {dims}")
    shapes = [(dims[j], dims[j + 1]) for j in range(len(dims) - 1)]
    for _ in range(100):
        factors = [
            sparse_uniform_matrix(rng, shape, _support_count(shape[0] * shape[1], density))
            for shape in shapes
        ]
        data = factors[0]
        for f in factors[1:]:
            data = data @ f
        if float(np.linalg.norm(data)) > 0.0:
            return data, factors
    raise ValueError(
        f"could not draw a nonzero product for chain {dims} at density {density}"
    )


def generate_sntd(
    dims: Sequence[int],
    rank: int,
    density: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Synthesize a sparse nonnegative CP instance.

    Returns the data tensor (the exact rank-``rank`` reconstruction of the
    ground-truth factors) and the factors themselves.
    """
    shape = [int(d) for d in dims]
    if len(shape) < 2:
        raise ValueError("a tensor needs at least two modes")
    if any(d < 1 for d in shape):
        raise ValueError(f"tensor dimensions must be positive, got {shape}")
    rank = int(rank)
    if rank < 1:
        raise ValueError(f"rank must be a positive integer, got {rank}")
    for _ in range(100):
        factors = [
            sparse_uniform_matrix(rng, (d, rank), _support_count(d * rank, density))
            for d in shape
        ]
        data = kruskal_tensor(factors)
        if float(np.linalg.norm(data.ravel())) > 0.0:
            return data, factors
    raise ValueError(
        f"could not draw a nonzero tensor for dims {shape} at density {density}"
    )


def generate_synthetic(
    kind: str,
    dims: Sequence[int],
    rank: int | None,
    density: float,
    seed: int,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Seeded instance generator.

    For ``kind="msnmf"``, ``dims`` lists the chain node dimensions; when only
    the data shape ``(m, n)`` is given, ``rank`` is inserted to form the chain
    ``(m, rank, n)``.  For ``kind="sntd"``, ``dims`` is the tensor shape and
    ``rank`` the CP rank.
    """
    rng = np.random.default_rng(int(seed))
    if kind == "msnmf":
        dims = [int(d) for d in dims]
        if rank is not None and len(dims) == 2:
            dims = [dims[0], int(rank), dims[1]]
        return generate_msnmf(dims, density, rng)
    if kind == "sntd":
        if rank is None:
            raise ValueError("rank is required for sntd instances")
        return generate_sntd(dims, rank, density, rng)
    raise ValueError(f"kind must be 'msnmf' or 'sntd', got {kind!r}")
