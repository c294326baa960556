"""Block variable containers and extended-real objective evaluation."""

import math

import numpy as np
import pytest

from blockprox.applications import MsnmfSpec, make_msnmf_problem
from blockprox.problem import (
    BlockProblem,
    BlockVars,
    evaluate_nonsmooth,
    evaluate_objective,
    evaluate_smooth,
)


def tiny_chain_problem():
    spec = MsnmfSpec(
        data=[[1.0]], block_shapes=((1, 1), (1, 1)), budgets=(1, 1), gamma=(1.5, 1.5)
    )
    return make_msnmf_problem(spec)


class TestBlockVars:
    def test_basic_container(self):
        x = BlockVars([np.ones((2, 3)), np.zeros((3, 1))])
        assert len(x) == 2
        assert x.shapes == ((2, 3), (3, 1))
        assert np.array_equal(x[0], np.ones((2, 3)))

    def test_copy_shares_arrays_but_not_slots(self):
        x = BlockVars([np.ones((2, 2)), np.zeros((2, 2))])
        y = x.copy()
        y[0] = np.full((2, 2), 5.0)
        assert x[0][0, 0] == 1.0
        assert y[1] is x[1]

    def test_rejects_non_matrix(self):
        with pytest.raises(ValueError, match="2-D"):
            BlockVars([np.ones(3)])

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            BlockVars([np.array([[1.0, math.nan]])])

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="at least one"):
            BlockVars([])

    def test_setitem_keeps_shape(self):
        x = BlockVars([np.ones((2, 2))])
        with pytest.raises(ValueError, match="shape"):
            x[0] = np.ones((2, 3))


class TestBlockProblem:
    def test_callable_counts_must_match(self):
        with pytest.raises(ValueError, match="one callable per block"):
            BlockProblem(
                block_shapes=((1, 1), (1, 1)),
                smooth_value=lambda x: 0.0,
                smooth_grad=lambda x, j: np.zeros((1, 1)),
                lipschitz=lambda x, j: 1.0,
                nonsmooth_value=(lambda m: 0.0,),
                nonsmooth_prox=(lambda m, s: m,),
            )

    def test_validate_point_flags_block(self):
        problem = tiny_chain_problem()
        bad = BlockVars([np.ones((1, 1)), np.ones((2, 1))])
        with pytest.raises(ValueError, match="block 1"):
            problem.validate_point(bad)


class TestObjectiveEvaluation:
    def test_worked_example_value(self):
        problem = tiny_chain_problem()
        x = BlockVars([[[2.0]], [[3.0]]])
        assert evaluate_objective(problem, x) == pytest.approx(12.5, rel=0, abs=0)
        assert evaluate_smooth(problem, x) == pytest.approx(12.5)
        assert evaluate_nonsmooth(problem, x) == 0.0

    def test_infeasible_block_gives_inf(self):
        problem = tiny_chain_problem()
        x = BlockVars([[[-2.0]], [[3.0]]])
        assert evaluate_objective(problem, x) == math.inf

    def test_budget_violation_gives_inf(self):
        spec = MsnmfSpec(
            data=[[1.0, 1.0]],
            block_shapes=((1, 2),),
            budgets=(1,),
            gamma=(1.5,),
        )
        problem = make_msnmf_problem(spec)
        assert evaluate_objective(problem, BlockVars([[[1.0, 1.0]]])) == math.inf
        assert evaluate_objective(problem, BlockVars([[[1.0, 0.0]]])) < math.inf

    def test_inf_short_circuits_before_smooth_term(self):
        calls = []

        def smooth(x):
            calls.append(1)
            return 0.0

        problem = BlockProblem(
            block_shapes=((1, 1),),
            smooth_value=smooth,
            smooth_grad=lambda x, j: np.zeros((1, 1)),
            lipschitz=lambda x, j: 1.0,
            nonsmooth_value=(lambda m: math.inf,),
            nonsmooth_prox=(lambda m, s: m,),
        )
        assert evaluate_objective(problem, BlockVars([[[1.0]]])) == math.inf
        assert calls == []

    def test_nonfinite_smooth_raises(self):
        problem = BlockProblem(
            block_shapes=((1, 1),),
            smooth_value=lambda x: math.inf,
            smooth_grad=lambda x, j: np.zeros((1, 1)),
            lipschitz=lambda x, j: 1.0,
            nonsmooth_value=(lambda m: 0.0,),
            nonsmooth_prox=(lambda m, s: m,),
        )
        with pytest.raises(FloatingPointError, match="smooth"):
            evaluate_smooth(problem, BlockVars([[[1.0]]]))

    def test_nan_nonsmooth_raises(self):
        problem = BlockProblem(
            block_shapes=((1, 1),),
            smooth_value=lambda x: 0.0,
            smooth_grad=lambda x, j: np.zeros((1, 1)),
            lipschitz=lambda x, j: 1.0,
            nonsmooth_value=(lambda m: math.nan,),
            nonsmooth_prox=(lambda m, s: m,),
        )
        with pytest.raises(FloatingPointError, match="nan"):
            evaluate_nonsmooth(problem, BlockVars([[[1.0]]]))

    def test_shape_mismatch_rejected(self):
        problem = tiny_chain_problem()
        with pytest.raises(ValueError, match="expected 2 blocks"):
            evaluate_objective(problem, BlockVars([np.ones((1, 1))]))
