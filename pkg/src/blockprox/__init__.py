"""Block proximal optimization for sparse nonnegative factorizations.

The package solves composite objectives ``H(x_0..x_{N-1}) + sum_j F_j(x_j)``
by accelerated Gauss-Seidel proximal sweeps with an adaptive extrapolation
safeguard, and ships two built-in applications: multilayer sparse NMF and
sparse nonnegative CP tensor decomposition.
"""

from .applications import (
    MsnmfSpec,
    SntdSpec,
    make_msnmf_problem,
    make_sntd_problem,
    msnmf_grad_block,
    msnmf_lipschitz,
    msnmf_relerr,
    msnmf_smooth,
    sntd_grad_block,
    sntd_lipschitz,
    sntd_relerr,
    sntd_smooth,
    sparsity_budgets,
)
from .bench import (
    AcceptanceStats,
    RunConfig,
    acceptance_stats,
    build_run_config,
    parse_config_file,
    run_benchmark,
)
from .estimators import MultilayerSparseNMF, SparseCP
from .io import (
    TRACE_HEADER,
    load_dense_tensor,
    load_matrix_market,
    load_trace_csv,
    save_dense_tensor,
    save_matrix_market,
    save_trace_csv,
)
from .multilinear import (
    chain_matmul,
    khatri_rao,
    khatri_rao_chain,
    kruskal_tensor,
    mode_fold,
    mode_unfold,
)
from .problem import (
    BlockProblem,
    BlockVars,
    evaluate_nonsmooth,
    evaluate_objective,
    evaluate_smooth,
)
from .prox import SparsityConstraint, project_sparse_nonneg, prox_oracle, prox_step
from .solver import (
    BRANCHES,
    IterationRecord,
    MomentumState,
    SolveResult,
    SolverConfig,
    SweepResult,
    block_sweep,
    choose_order,
    extrapolate,
    minimize,
    subgradient_residual,
    update_momentum_adaptive,
    update_momentum_fista,
)
from .stopping import StopDecision, StopState, check_stop
from .synth import feasible_start, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "BlockProblem",
    "BlockVars",
    "evaluate_smooth",
    "evaluate_nonsmooth",
    "evaluate_objective",
    "SparsityConstraint",
    "project_sparse_nonneg",
    "prox_oracle",
    "prox_step",
    "khatri_rao",
    "khatri_rao_chain",
    "mode_unfold",
    "mode_fold",
    "kruskal_tensor",
    "chain_matmul",
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
    "SolverConfig",
    "MomentumState",
    "update_momentum_adaptive",
    "update_momentum_fista",
    "extrapolate",
    "choose_order",
    "SweepResult",
    "block_sweep",
    "subgradient_residual",
    "IterationRecord",
    "SolveResult",
    "minimize",
    "BRANCHES",
    "StopState",
    "StopDecision",
    "check_stop",
    "TRACE_HEADER",
    "load_matrix_market",
    "save_matrix_market",
    "load_dense_tensor",
    "save_dense_tensor",
    "save_trace_csv",
    "load_trace_csv",
    "RunConfig",
    "parse_config_file",
    "build_run_config",
    "AcceptanceStats",
    "acceptance_stats",
    "run_benchmark",
    "generate_synthetic",
    "feasible_start",
    "MultilayerSparseNMF",
    "SparseCP",
]
