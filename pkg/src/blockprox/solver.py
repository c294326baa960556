"""Accelerated block proximal descent with adaptive extrapolation.

The solver minimizes ``J(x) = H(x_0..x_{N-1}) + sum_j F_j(x_j)`` by cyclic or
randomly permuted Gauss-Seidel sweeps of proximal gradient steps.  Each
iteration:

1. extrapolates ``y = x_k + beta_k * (x_k - x_{k-1})``;
2. sweeps the blocks once starting from ``y``, giving a candidate ``x'``;
3. accepts ``x'`` when the extrapolated point did not increase the objective
   (``J(y) <= J(x_k)``, an exact extended-real comparison).  Otherwise it
   re-sweeps from ``x_k`` with the same block order and keeps whichever of
   the two candidates is better.

The outcome of step 3 is recorded as a branch tag and drives the adaptive
momentum schedule: the extrapolation weight grows when the extrapolated sweep
was kept and shrinks when the safeguard sweep won.  A standard accelerated
``t``-sequence schedule and a zero-momentum schedule (plain proximal
alternating linearized minimization) are also available.

Every block step uses the inverse step size ``gamma_j * L_j`` where ``L_j``
is a Lipschitz bound for the block's partial gradient at the current working
point and ``gamma_j > 1``, so each step size lies strictly inside
``(0, 1/L_j)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .problem import BlockProblem, BlockVars, evaluate_objective
from .prox import prox_step
from .stopping import REASON_MAX_ITERS, StopState, check_stop

__all__ = [
    "BRANCH_ACCEPT_EXTRAPOLATED",
    "BRANCH_KEEP_EXTRAPOLATED",
    "BRANCH_TAKE_RESTART",
    "BRANCH_NO_MOMENTUM",
    "BRANCHES",
    "SCHEDULES",
    "ORDER_MODES",
    "SolverConfig",
    "MomentumState",
    "initial_momentum",
    "update_momentum_adaptive",
    "update_momentum_fista",
    "extrapolate",
    "choose_order",
    "SweepResult",
    "block_sweep",
    "subgradient_residual",
    "IterationRecord",
    "IterationInfo",
    "SolveResult",
    "minimize",
]

BRANCH_ACCEPT_EXTRAPOLATED = "accept_extrapolated"
BRANCH_KEEP_EXTRAPOLATED = "keep_extrapolated_after_restart"
BRANCH_TAKE_RESTART = "take_restart"
BRANCH_NO_MOMENTUM = "no_momentum"
BRANCHES = (
    BRANCH_ACCEPT_EXTRAPOLATED,
    BRANCH_KEEP_EXTRAPOLATED,
    BRANCH_TAKE_RESTART,
    BRANCH_NO_MOMENTUM,
)

SCHEDULES = ("adaptive", "fista", "none")
ORDER_MODES = ("cyclic", "random")


@dataclass(frozen=True)
class SolverConfig:
    """Solver hyperparameters.

    Parameters
    ----------
    schedule : {"adaptive", "fista", "none"}
        Momentum schedule.  ``adaptive`` multiplies the weight by ``t`` after
        a kept extrapolation and divides by ``t`` after a safeguard restart;
        ``fista`` follows the accelerated t-sequence regardless of branch;
        ``none`` forces zero momentum.
    order : {"cyclic", "random"}
        Block visiting order per iteration: the identity permutation, or a
        fresh uniformly random permutation drawn from the run's generator.
    t : float
        Momentum growth/shrink factor, ``> 1``.
    beta_1 : float
        Initial extrapolation weight in ``[0, beta_max]``; forced to 0 when
        ``schedule="none"``.
    beta_max : float
        Momentum cap in ``[beta_1, 1)``.
    gamma : float or sequence of float
        Per-block inverse step scale(s), each ``> 1``.
    eps : float
        Flatness threshold on consecutive relative errors; ``0`` disables.
    k_max : int
        Iteration cap.
    max_time_s : float
        Wall-clock budget in seconds.
    seed : int
        Seed (64-bit unsigned) for the run's random generator.
    lipschitz_floor : float
        Lower clamp applied to Lipschitz bounds so step sizes stay finite.
    """

    schedule: str = "adaptive"
    order: str = "cyclic"
    t: float = 1.1
    beta_1: float = 0.6
    beta_max: float = 0.9999
    gamma: float | tuple[float, ...] = 1.5
    eps: float = 1e-4
    k_max: int = 1000
    max_time_s: float = math.inf
    seed: int = 0
    lipschitz_floor: float = 1e-12

    def __post_init__(self) -> None:
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.order not in ORDER_MODES:
            raise ValueError(f"order must be one of {ORDER_MODES}, got {self.order!r}")
        if not (math.isfinite(self.t) and self.t > 1.0):
            raise ValueError(f"t must be finite and > 1, got {self.t}")
        if not 0.0 <= self.beta_max < 1.0:
            raise ValueError(f"beta_max must lie in [0, 1), got {self.beta_max}")
        beta_1 = 0.0 if self.schedule == "none" else float(self.beta_1)
        if not 0.0 <= beta_1 <= self.beta_max:
            raise ValueError(
                f"beta_1 must lie in [0, beta_max={self.beta_max}], got {self.beta_1}"
            )
        object.__setattr__(self, "beta_1", beta_1)
        gamma = self.gamma
        if isinstance(gamma, (int, float)):
            gamma = (float(gamma),)
            object.__setattr__(self, "gamma", float(self.gamma))
        else:
            gamma = tuple(float(g) for g in gamma)
            object.__setattr__(self, "gamma", gamma)
        for g in gamma:
            if not (math.isfinite(g) and g > 1.0):
                raise ValueError(f"gamma values must be finite and > 1, got {g}")
        if not (self.eps >= 0.0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be finite and >= 0, got {self.eps}")
        if int(self.k_max) < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        object.__setattr__(self, "k_max", int(self.k_max))
        if not self.max_time_s > 0.0:
            raise ValueError(f"max_time_s must be positive, got {self.max_time_s}")
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", seed)
        if not (math.isfinite(self.lipschitz_floor) and self.lipschitz_floor > 0.0):
            raise ValueError(
                f"lipschitz_floor must be finite and positive, got {self.lipschitz_floor}"
            )

    def gamma_for(self, n_blocks: int) -> tuple[float, ...]:
        """Per-block gamma tuple, broadcasting a scalar setting."""
        if isinstance(self.gamma, tuple):
            if len(self.gamma) != n_blocks:
                raise ValueError(
                    f"gamma has {len(self.gamma)} entries, expected {n_blocks}"
                )
            return self.gamma
        return (float(self.gamma),) * n_blocks


@dataclass(frozen=True)
class MomentumState:
    """Extrapolation weight for the next iteration plus the t-sequence value."""

    beta: float
    t: float = 1.0


def initial_momentum(config: SolverConfig) -> MomentumState:
    return MomentumState(beta=config.beta_1, t=1.0)


def update_momentum_adaptive(state: MomentumState, grew: bool, config: SolverConfig) -> MomentumState:
    """Grow the weight by ``t`` (capped) after a kept extrapolation, else shrink."""
    if grew:
        return MomentumState(beta=min(config.beta_max, config.t * state.beta), t=state.t)
    return MomentumState(beta=state.beta / config.t, t=state.t)


def update_momentum_fista(state: MomentumState, config: SolverConfig) -> MomentumState:
    """Advance the accelerated t-sequence; the branch outcome is ignored.

    ``t_next = (1 + sqrt(1 + 4 t^2)) / 2`` and the next weight is
    ``(t - 1) / t_next`` clamped into ``[0, beta_max]``.
    """
    t_next = (1.0 + math.sqrt(1.0 + 4.0 * state.t * state.t)) / 2.0
    beta = (state.t - 1.0) / t_next
    return MomentumState(beta=min(max(beta, 0.0), config.beta_max), t=t_next)


def extrapolate(x_k: BlockVars, x_km1: BlockVars, beta: float) -> BlockVars:
    """``y_j = x_k[j] + beta * (x_k[j] - x_km1[j])`` blockwise.

    With ``beta = 0`` this returns a copy of ``x_k`` unchanged.  The
    extrapolated point may be infeasible for the nonsmooth terms; that is
    expected and handled by the caller.
    """
    if not beta >= 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if len(x_k) != len(x_km1):
        raise ValueError(f"block counts differ: {len(x_k)} vs {len(x_km1)}")
    if beta == 0.0:
        return x_k.copy()
    blocks = []
    for j, (a, b) in enumerate(zip(x_k, x_km1)):
        if a.shape != b.shape:
            raise ValueError(f"block {j} shapes differ: {a.shape} vs {b.shape}")
        y = a + beta * (a - b)
        if not np.isfinite(y).all():
            raise FloatingPointError(f"extrapolation produced non-finite block {j}")
        blocks.append(y)
    return BlockVars(blocks)


def choose_order(mode: str, n_blocks: int, rng: np.random.Generator) -> np.ndarray:
    """The block visiting order for one iteration.

    ``cyclic`` returns the identity permutation; ``random`` draws a uniformly
    random permutation from ``rng`` (every permutation is reachable).
    """
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be >= 1, got {n_blocks}")
    if mode == "cyclic":
        return np.arange(n_blocks)
    if mode == "random":
        return rng.permutation(n_blocks)
    raise ValueError(f"order must be one of {ORDER_MODES}, got {mode!r}")


@dataclass(frozen=True)
class SweepResult:
    """One Gauss-Seidel sweep: the new point plus its step-size provenance.

    ``sigmas[j]`` and ``lipschitz[j]`` are indexed by block, not by visit
    position, and record the values used when block ``j`` was updated.
    """

    z: BlockVars
    anchor: BlockVars
    order: tuple[int, ...]
    sigmas: np.ndarray
    lipschitz: np.ndarray


def block_sweep(
    problem: BlockProblem,
    anchor: BlockVars,
    order: Sequence[int],
    config: SolverConfig,
) -> SweepResult:
    """Sweep every block once, Gauss-Seidel style, starting from ``anchor``.

    Visiting block ``j``, the partial gradient and its Lipschitz bound are
    evaluated at the working point holding already-visited blocks at their
    new values and block ``j`` still at ``anchor[j]``; the proximal step uses
    ``sigma_j = 1 / (gamma_j * max(L_j, lipschitz_floor))``.
    """
    problem.validate_point(anchor)
    n = problem.n_blocks
    perm = tuple(int(j) for j in order)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"order {perm} is not a permutation of 0..{n - 1}")
    gammas = config.gamma_for(n)
    working = anchor.copy()
    sigmas = np.empty(n)
    lips = np.empty(n)
    for j in perm:
        bound = float(problem.lipschitz(working, j))
        if not (math.isfinite(bound) and bound >= 0.0):
            raise FloatingPointError(f"invalid Lipschitz bound {bound!r} for block {j}")
        bound = max(bound, config.lipschitz_floor)
        sigma = 1.0 / (gammas[j] * bound)
        grad = problem.smooth_grad(working, j)
        working[j] = prox_step(problem, j, anchor[j], grad, sigma)
        sigmas[j] = sigma
        lips[j] = bound
    return SweepResult(z=working, anchor=anchor, order=perm, sigmas=sigmas, lipschitz=lips)


def subgradient_residual(
    problem: BlockProblem,
    x_new: BlockVars,
    anchor: BlockVars,
    sigmas: np.ndarray,
    order: Sequence[int],
) -> np.ndarray:
    """Per-block norms of the first-order optimality residual of a sweep.

    Replaying the sweep that produced ``x_new`` from ``anchor`` with step
    sizes ``sigmas``, block ``j``'s proximal step makes

        p_j = grad_j(after update) - grad_j(before update)
              + (anchor[j] - x_new[j]) / sigmas[j]

    a member of the limiting subdifferential of the total objective at
    ``x_new``, up to the sign convention.  The returned vector holds
    ``||p_j||_F`` indexed by block; its sum is bounded by
    ``max_j (1/sigma_j + L_j)`` times the total block movement.
    """
    problem.validate_point(x_new)
    problem.validate_point(anchor)
    n = problem.n_blocks
    perm = tuple(int(j) for j in order)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"order {perm} is not a permutation of 0..{n - 1}")
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if sigmas.shape != (n,):
        raise ValueError(f"sigmas must have shape ({n},), got {sigmas.shape}")
    if not ((sigmas > 0.0) & np.isfinite(sigmas)).all():
        raise ValueError("sigmas must be positive and finite")
    working = anchor.copy()
    out = np.empty(n)
    for j in perm:
        grad_before = problem.smooth_grad(working, j)
        working[j] = x_new[j]
        grad_after = problem.smooth_grad(working, j)
        p = grad_after - grad_before + (anchor[j] - x_new[j]) / sigmas[j]
        out[j] = float(np.linalg.norm(p))
    return out


@dataclass(frozen=True)
class IterationRecord:
    """One row of a run trace.

    ``order`` stores the 0-based visit permutation.  ``supports_differ``
    flags whether the nonzero patterns of the two points feeding this
    iteration's extrapolation disagreed in any block; it is in-memory
    bookkeeping and not part of the serialized trace.
    """

    iteration: int
    elapsed_s: float
    objective: float
    relerr: float
    beta: float
    branch: str
    sweep_count: int
    residual_norm: float
    order: tuple[int, ...]
    supports_differ: bool | None = None


@dataclass(frozen=True)
class IterationInfo:
    """Observer payload: everything the solver knew about one iteration.

    All points are immutable snapshots.  ``restart_sweep`` and ``j_restart``
    are ``None`` when the extrapolated sweep was accepted outright.
    """

    record: IterationRecord
    x_km1: BlockVars
    x_k: BlockVars
    y: BlockVars
    x_next: BlockVars
    j_x_k: float
    j_y: float
    j_first: float
    j_restart: float | None
    j_next: float
    first_sweep: SweepResult
    restart_sweep: SweepResult | None
    accepted_sweep: SweepResult


@dataclass(frozen=True)
class SolveResult:
    x: BlockVars
    trace: tuple[IterationRecord, ...]
    stop_reason: str


def _supports_differ(a: BlockVars, b: BlockVars) -> bool:
    for blk_a, blk_b in zip(a, b):
        if not np.array_equal(blk_a != 0.0, blk_b != 0.0):
            return True
    return False


def _total_move(x_new: BlockVars, anchor: BlockVars) -> float:
    return float(sum(np.linalg.norm(a - b) for a, b in zip(x_new, anchor)))


def minimize(
    problem: BlockProblem,
    x0: BlockVars | Sequence[np.ndarray],
    config: SolverConfig,
    relerr_fn: Callable[[BlockVars], float],
    observer: Callable[[IterationInfo], None] | None = None,
) -> SolveResult:
    """Run the accelerated block proximal method from ``x0``.

    Parameters
    ----------
    problem : BlockProblem
    x0 : BlockVars or sequence of ndarray
        Starting point; must have a finite objective (feasible for every
        nonsmooth term).
    config : SolverConfig
    relerr_fn : callable(BlockVars) -> float
        Relative-error metric recorded in the trace and fed to the flatness
        stop criterion.
    observer : callable(IterationInfo) -> None, optional
        Invoked once per iteration after the iterate is accepted, before the
        stop check.

    Returns
    -------
    SolveResult
        Final point, per-iteration trace, and which trigger stopped the run.
    """
    x_curr = x0 if isinstance(x0, BlockVars) else BlockVars(x0)
    problem.validate_point(x_curr)
    config.gamma_for(problem.n_blocks)
    j_curr = evaluate_objective(problem, x_curr)
    if not math.isfinite(j_curr):
        raise ValueError("the starting point must have a finite objective")
    rng = np.random.default_rng(config.seed)
    state = initial_momentum(config)
    stop_state = StopState(eps=config.eps, k_max=config.k_max, max_time_s=config.max_time_s)
    trace: list[IterationRecord] = []
    x_prev = x_curr
    stop_reason = REASON_MAX_ITERS
    start = time.perf_counter()
    for k in range(1, config.k_max + 1):
        beta_k = state.beta
        y = extrapolate(x_curr, x_prev, beta_k)
        order = choose_order(config.order, problem.n_blocks, rng)
        first = block_sweep(problem, y, order, config)
        j_first = evaluate_objective(problem, first.z)
        restart: SweepResult | None = None
        j_restart: float | None = None
        if beta_k == 0.0:
            # y coincides with x_k, so the extrapolation test holds trivially.
            j_y = j_curr
            branch = BRANCH_NO_MOMENTUM
            accepted = first
            grew = True
        else:
            j_y = evaluate_objective(problem, y)
            if j_y <= j_curr:
                branch = BRANCH_ACCEPT_EXTRAPOLATED
                accepted = first
                grew = True
            else:
                # Safeguard: re-sweep from x_k with the same permutation and
                # keep the better of the two candidates.
                restart = block_sweep(problem, x_curr, order, config)
                j_restart = evaluate_objective(problem, restart.z)
                if j_restart > j_first:
                    branch = BRANCH_KEEP_EXTRAPOLATED
                    accepted = first
                    grew = True
                else:
                    branch = BRANCH_TAKE_RESTART
                    accepted = restart
                    grew = False
        x_next = accepted.z
        j_next = j_first if accepted is first else j_restart
        if not math.isfinite(j_next):
            raise FloatingPointError(f"objective became non-finite at iteration {k}")
        if config.schedule == "adaptive":
            state = update_momentum_adaptive(state, grew, config)
        elif config.schedule == "fista":
            state = update_momentum_fista(state, config)
        relerr = float(relerr_fn(x_next))
        elapsed = time.perf_counter() - start
        record = IterationRecord(
            iteration=k,
            elapsed_s=elapsed,
            objective=j_next,
            relerr=relerr,
            beta=beta_k,
            branch=branch,
            sweep_count=1 if restart is None else 2,
            residual_norm=_total_move(x_next, accepted.anchor),
            order=first.order,
            supports_differ=_supports_differ(x_curr, x_prev),
        )
        trace.append(record)
        if observer is not None:
            observer(
                IterationInfo(
                    record=record,
                    x_km1=x_prev,
                    x_k=x_curr,
                    y=y,
                    x_next=x_next,
                    j_x_k=j_curr,
                    j_y=j_y,
                    j_first=j_first,
                    j_restart=j_restart,
                    j_next=j_next,
                    first_sweep=first,
                    restart_sweep=restart,
                    accepted_sweep=accepted,
                )
            )
        x_prev, x_curr, j_curr = x_curr, x_next, j_next
        decision = check_stop(stop_state, relerr, elapsed, k)
        if decision.stop:
            stop_reason = decision.reason
            break
    return SolveResult(x=x_curr, trace=tuple(trace), stop_reason=stop_reason)
