"""Estimator wrappers: sklearn contract, fitted attributes, feasibility."""

import numpy as np
import pytest
from sklearn.base import clone

from blockprox.estimators import MultilayerSparseNMF, SparseCP
from blockprox.solver import BRANCHES


def make_matrix(rng, m, r, n):
    w = np.abs(rng.normal(size=(m, r)))
    h = np.abs(rng.normal(size=(r, n)))
    return w @ h


class TestMultilayerSparseNMF:
    def fitted(self, **kwargs):
        rng = np.random.default_rng(12)
        x = make_matrix(rng, 12, 3, 9)
        params = dict(inner_dims=(3,), max_iter=60, tol=0.0, random_state=0)
        params.update(kwargs)
        return MultilayerSparseNMF(**params).fit(x), x

    def test_fitted_attributes(self):
        est, x = self.fitted()
        assert len(est.factors_) == 2
        assert est.factors_[0].shape == (12, 3)
        assert est.factors_[1].shape == (3, 9)
        assert est.n_iter_ == 60
        assert est.stop_reason_ == "max_iters"
        assert est.objective_ >= 0.0
        assert est.relerr_ >= 0.0
        assert len(est.trace_) == 60
        assert est.reconstruct().shape == x.shape

    def test_factors_are_feasible(self):
        est, _ = self.fitted(sparsity=0.25)
        budgets = [max(1, int(0.25 * f.size)) for f in est.factors_]
        for factor, budget in zip(est.factors_, budgets):
            assert (factor >= 0).all()
            assert np.count_nonzero(factor) <= budget

    def test_explicit_budgets(self):
        est, _ = self.fitted(sparsity=(5, 4))
        assert np.count_nonzero(est.factors_[0]) <= 5
        assert np.count_nonzero(est.factors_[1]) <= 4

    def test_three_factor_chain(self):
        est, x = self.fitted(inner_dims=(4, 3))
        assert [f.shape for f in est.factors_] == [(12, 4), (4, 3), (3, 9)]
        assert est.reconstruct().shape == x.shape

    def test_objective_decreases(self):
        est, _ = self.fitted()
        objectives = [r.objective for r in est.trace_]
        assert objectives[-1] <= objectives[0]
        for prev, curr in zip(objectives, objectives[1:]):
            assert curr <= prev + 1e-9 * (1.0 + abs(prev))

    def test_random_state_reproducible(self):
        a, _ = self.fitted(random_state=5)
        b, _ = self.fitted(random_state=5)
        for fa, fb in zip(a.factors_, b.factors_):
            assert np.array_equal(fa, fb)

    def test_tol_stops_early(self):
        est, _ = self.fitted(tol=1e30, max_iter=500)
        assert est.stop_reason_ == "delta_relerr"
        assert est.n_iter_ == 2

    def test_get_params_roundtrip_and_clone(self):
        est = MultilayerSparseNMF(inner_dims=(4,), sparsity=0.2, random_state=7)
        params = est.get_params()
        assert params["inner_dims"] == (4,)
        assert params["sparsity"] == 0.2
        twin = clone(est)
        assert twin.get_params() == params

    def test_rejects_nan_input(self):
        x = np.full((4, 4), np.nan)
        with pytest.raises(ValueError):
            MultilayerSparseNMF(inner_dims=(2,)).fit(x)

    def test_branch_vocabulary(self):
        est, _ = self.fitted(schedule="adaptive")
        assert {r.branch for r in est.trace_} <= set(BRANCHES)


class TestSparseCP:
    def fitted(self, **kwargs):
        rng = np.random.default_rng(21)
        factors = [np.abs(rng.normal(size=(d, 2))) for d in (6, 5, 4)]
        from blockprox.multilinear import kruskal_tensor

        x = kruskal_tensor(factors)
        params = dict(rank=2, max_iter=50, tol=0.0, random_state=0)
        params.update(kwargs)
        return SparseCP(**params).fit(x), x

    def test_fitted_attributes(self):
        est, x = self.fitted()
        assert [f.shape for f in est.factors_] == [(6, 2), (5, 2), (4, 2)]
        assert est.n_iter_ == 50
        assert est.stop_reason_ == "max_iters"
        assert est.reconstruct().shape == x.shape

    def test_factors_are_feasible(self):
        est, _ = self.fitted(sparsity=0.5)
        for factor in est.factors_:
            assert (factor >= 0).all()
            assert np.count_nonzero(factor) <= max(1, int(0.5 * factor.size))

    def test_random_state_reproducible(self):
        a, _ = self.fitted(random_state=3)
        b, _ = self.fitted(random_state=3)
        for fa, fb in zip(a.factors_, b.factors_):
            assert np.array_equal(fa, fb)

    def test_four_way_tensor(self):
        rng = np.random.default_rng(30)
        x = np.abs(rng.normal(size=(3, 4, 2, 3)))
        est = SparseCP(rank=2, max_iter=20, tol=0.0).fit(x)
        assert [f.shape for f in est.factors_] == [(3, 2), (4, 2), (2, 2), (3, 2)]
        assert est.reconstruct().shape == x.shape

    def test_rejects_one_dimensional_input(self):
        with pytest.raises(ValueError):
            SparseCP(rank=2).fit(np.arange(5.0))

    def test_clone_preserves_params(self):
        est = SparseCP(rank=3, momentum_init=0.1, schedule="fista")
        twin = clone(est)
        assert twin.get_params() == est.get_params()
