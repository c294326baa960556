"""Shared test utilities: finite differences and random problem instances."""

import numpy as np

from blockprox.applications import (
    MsnmfSpec,
    SntdSpec,
    msnmf_smooth,
    sntd_smooth,
)


def central_diff_grad(objective, factors, j, h=1e-6):
    """Central finite-difference gradient of ``objective`` in block ``j``.

    ``objective`` maps a list of factor matrices to a scalar.
    """
    base = [np.array(f, dtype=float) for f in factors]
    out = np.zeros_like(base[j])
    it = np.nditer(out, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = [f.copy() for f in base]
        minus = [f.copy() for f in base]
        plus[j][idx] += h
        minus[j][idx] -= h
        out[idx] = (objective(plus) - objective(minus)) / (2.0 * h)
        it.iternext()
    return out


def rel_error(approx, exact):
    denom = max(float(np.linalg.norm(exact)), 1e-8)
    return float(np.linalg.norm(approx - exact)) / denom


def random_msnmf_instance(rng, n_blocks=None, max_dim=6):
    """A random dense-ish multilayer NMF spec plus factors at a generic point."""
    if n_blocks is None:
        n_blocks = int(rng.integers(2, 5))
    dims = [int(d) for d in rng.integers(2, max_dim + 1, size=n_blocks + 1)]
    shapes = [(dims[i], dims[i + 1]) for i in range(n_blocks)]
    data = rng.random((dims[0], dims[-1])) + 0.1
    budgets = tuple(r * c for r, c in shapes)
    spec = MsnmfSpec(
        data=data,
        block_shapes=tuple(shapes),
        budgets=budgets,
        gamma=(1.5,) * n_blocks,
    )
    factors = [rng.random(s) + 0.05 for s in shapes]
    return spec, factors


def random_sntd_instance(rng, ndim=None, max_dim=5, max_rank=3):
    """A random CP decomposition spec plus factors at a generic point."""
    if ndim is None:
        ndim = int(rng.integers(3, 5))
    dims = tuple(int(d) for d in rng.integers(2, max_dim + 1, size=ndim))
    rank = int(rng.integers(1, max_rank + 1))
    data = rng.random(dims) + 0.1
    budgets = tuple(d * rank for d in dims)
    spec = SntdSpec(data=data, rank=rank, budgets=budgets, gamma=(1.5,) * ndim)
    factors = [rng.random((d, rank)) + 0.05 for d in dims]
    return spec, factors


def msnmf_objective(spec):
    return lambda factors: msnmf_smooth(spec, factors)


def sntd_objective(spec):
    return lambda factors: sntd_smooth(spec, factors)
