"""Scikit-learn style estimators wrapping the two factorization problems.

Both estimators follow the usual contract: hyperparameters are stored
verbatim in ``__init__`` (so ``get_params`` / ``set_params`` / ``clone``
work), all validation and computation happens in ``fit``, and fitted results
land in trailing-underscore attributes.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array

from .applications import (
    MsnmfSpec,
    SntdSpec,
    make_msnmf_problem,
    make_sntd_problem,
    msnmf_relerr,
    sntd_relerr,
)
from .multilinear import kruskal_tensor
from .solver import SolverConfig, minimize
from .synth import feasible_start

__all__ = ["MultilayerSparseNMF", "SparseCP"]


def _solver_config(est, t_default: float, beta_default: float) -> SolverConfig:
    return SolverConfig(
        schedule=est.schedule,
        order=est.sweep_order,
        t=t_default if est.momentum_growth is None else est.momentum_growth,
        beta_1=beta_default if est.momentum_init is None else est.momentum_init,
        beta_max=est.momentum_max,
        gamma=est.step_margin,
        eps=est.tol,
        k_max=est.max_iter,
        max_time_s=math.inf if est.time_limit is None else est.time_limit,
        seed=0 if est.random_state is None else est.random_state,
    )


class MultilayerSparseNMF(BaseEstimator):
    """Multilayer NMF with hard per-factor sparsity caps.

    Approximates a nonnegative matrix ``X`` of shape ``(m, n)`` by a product
    ``W_0 @ W_1 @ ... @ W_L`` where the inner dimensions are given by
    ``inner_dims`` and every factor is entrywise nonnegative with at most a
    ``sparsity`` fraction of its entries nonzero.

    Parameters
    ----------
    inner_dims : sequence of int, default=(10,)
        Interior chain dimensions; ``(r,)`` gives the classic two-factor
        ``(m, r) @ (r, n)`` factorization.
    sparsity : float or sequence of int, default=0.3
        Fraction of entries each factor may keep, or explicit per-factor caps.
    schedule : {"adaptive", "fista", "none"}, default="adaptive"
    sweep_order : {"cyclic", "random"}, default="cyclic"
    momentum_growth : float, optional
        Growth/shrink factor for the adaptive schedule; defaults to 1.1.
    momentum_init : float, optional
        Initial extrapolation weight; defaults to 0.6.
    momentum_max : float, default=0.9999
    step_margin : float, default=1.5
        Inverse step sizes are this factor times the block Lipschitz bound.
    tol : float, default=1e-4
        Flatness threshold on consecutive relative errors.
    max_iter : int, default=1000
    time_limit : float, optional
        Wall-clock budget in seconds.
    random_state : int, optional
        Seed for the starting point and any random sweep orders.

    Attributes
    ----------
    factors_ : list of ndarray
        Fitted chain factors.
    n_iter_ : int
    objective_ : float
        Final composite objective value.
    relerr_ : float
        Final relative reconstruction error.
    stop_reason_ : str
    trace_ : tuple of IterationRecord
    """

    def __init__(
        self,
        inner_dims: Sequence[int] = (10,),
        sparsity: float | Sequence[int] = 0.3,
        schedule: str = "adaptive",
        sweep_order: str = "cyclic",
        momentum_growth: float | None = None,
        momentum_init: float | None = None,
        momentum_max: float = 0.9999,
        step_margin: float = 1.5,
        tol: float = 1e-4,
        max_iter: int = 1000,
        time_limit: float | None = None,
        random_state: int | None = None,
    ):
        self.inner_dims = inner_dims
        self.sparsity = sparsity
        self.schedule = schedule
        self.sweep_order = sweep_order
        self.momentum_growth = momentum_growth
        self.momentum_init = momentum_init
        self.momentum_max = momentum_max
        self.step_margin = step_margin
        self.tol = tol
        self.max_iter = max_iter
        self.time_limit = time_limit
        self.random_state = random_state

    def fit(self, X, y=None):
        """Factorize ``X``; returns ``self``."""
        X = check_array(X, dtype=np.float64)
        chain = [X.shape[0], *(int(d) for d in self.inner_dims), X.shape[1]]
        spec = MsnmfSpec.from_chain_dims(
            X, chain, sparsity=self.sparsity, gamma=self.step_margin
        )
        problem = make_msnmf_problem(spec)
        rng = np.random.default_rng(self.random_state)
        start = feasible_start(rng, spec.block_shapes, spec.budgets)
        result = minimize(
            problem,
            start,
            _solver_config(self, t_default=1.1, beta_default=0.6),
            lambda v: msnmf_relerr(spec, v),
        )
        self.factors_ = [np.array(b) for b in result.x]
        self.n_iter_ = result.trace[-1].iteration
        self.objective_ = result.trace[-1].objective
        self.relerr_ = result.trace[-1].relerr
        self.stop_reason_ = result.stop_reason
        self.trace_ = result.trace
        return self

    def reconstruct(self) -> np.ndarray:
        """The product of the fitted factors."""
        product = self.factors_[0]
        for f in self.factors_[1:]:
            product = product @ f
        return product


class SparseCP(BaseEstimator):
    """Nonnegative CP tensor decomposition with hard per-factor sparsity caps.

    Approximates an ``n``-way tensor by a rank-``rank`` sum of outer products
    whose factor matrices are nonnegative with capped nonzero counts.

    Parameters mirror :class:`MultilayerSparseNMF` except that
    ``momentum_growth`` and ``momentum_init`` default to 1.3 and 0.2.

    Attributes
    ----------
    factors_ : list of ndarray
        Fitted mode factors, shape ``(dim_i, rank)`` each.
    n_iter_, objective_, relerr_, stop_reason_, trace_
        As in :class:`MultilayerSparseNMF`.
    """

    def __init__(
        self,
        rank: int = 5,
        sparsity: float | Sequence[int] = 0.3,
        schedule: str = "adaptive",
        sweep_order: str = "cyclic",
        momentum_growth: float | None = None,
        momentum_init: float | None = None,
        momentum_max: float = 0.9999,
        step_margin: float = 1.5,
        tol: float = 1e-4,
        max_iter: int = 1000,
        time_limit: float | None = None,
        random_state: int | None = None,
    ):
        self.rank = rank
        self.sparsity = sparsity
        self.schedule = schedule
        self.sweep_order = sweep_order
        self.momentum_growth = momentum_growth
        self.momentum_init = momentum_init
        self.momentum_max = momentum_max
        self.step_margin = step_margin
        self.tol = tol
        self.max_iter = max_iter
        self.time_limit = time_limit
        self.random_state = random_state

    def fit(self, X, y=None):
        """Decompose the tensor ``X``; returns ``self``."""
        X = check_array(X, dtype=np.float64, allow_nd=True)
        if X.ndim < 2:
            raise ValueError(f"a tensor with at least 2 modes is required, got ndim={X.ndim}")
        spec = SntdSpec.from_tensor(
            X, rank=self.rank, sparsity=self.sparsity, gamma=self.step_margin
        )
        problem = make_sntd_problem(spec)
        rng = np.random.default_rng(self.random_state)
        start = feasible_start(rng, spec.block_shapes, spec.budgets)
        result = minimize(
            problem,
            start,
            _solver_config(self, t_default=1.3, beta_default=0.2),
            lambda v: sntd_relerr(spec, v),
        )
        self.factors_ = [np.array(b) for b in result.x]
        self.n_iter_ = result.trace[-1].iteration
        self.objective_ = result.trace[-1].objective
        self.relerr_ = result.trace[-1].relerr
        self.stop_reason_ = result.stop_reason
        self.trace_ = result.trace
        return self

    def reconstruct(self) -> np.ndarray:
        """The rank-``rank`` tensor rebuilt from the fitted factors."""
        return kruskal_tensor(self.factors_)
