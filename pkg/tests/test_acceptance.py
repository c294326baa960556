"""Acceptance gate: the thirteen shipping criteria, one scoreboard line each.

Criteria that need long solver runs share the module-scoped ``standard_runs``
fixture: two fixed synthetic instances (a 30x20 two-factor chain with 30%
sparsity and a 6x5x4 rank-3 tensor), each solved with every momentum schedule
and both sweep orders for 2000 iterations while an observer records
per-iteration diagnostics.  The scoreboard is printed by the conftest
terminal-summary hook.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

import conftest
from helpers import (
    central_diff_grad,
    msnmf_objective,
    random_msnmf_instance,
    random_sntd_instance,
    rel_error,
    sntd_objective,
)

from blockprox.applications import (
    MsnmfSpec,
    SntdSpec,
    make_msnmf_problem,
    make_sntd_problem,
    msnmf_grad_block,
    msnmf_lipschitz,
    msnmf_relerr,
    sntd_grad_block,
    sntd_lipschitz,
    sntd_relerr,
    sparsity_budgets,
)
from blockprox.bench import RunConfig, acceptance_stats, run_benchmark
from blockprox.multilinear import (
    khatri_rao_chain,
    kruskal_tensor,
    mode_fold,
    mode_unfold,
)
from blockprox.problem import BlockVars
from blockprox.prox import project_sparse_nonneg, prox_oracle
from blockprox.solver import (
    BRANCH_ACCEPT_EXTRAPOLATED,
    BRANCH_KEEP_EXTRAPOLATED,
    SolverConfig,
    minimize,
    subgradient_residual,
)
from blockprox.stopping import (
    REASON_DELTA_RELERR,
    REASON_MAX_ITERS,
    REASON_MAX_TIME,
    StopDecision,
    StopState,
    check_stop,
)
from blockprox.synth import feasible_start, generate_msnmf, generate_sntd


def conclude(num, name, failures, notes=()):
    """Register the scoreboard line, then assert."""
    ok = not failures
    conftest.ACCEPTANCE_RESULTS.append((num, name, ok))
    conftest.ACCEPTANCE_NOTES.extend(notes)
    assert ok, f"criterion {num} ({name}): {len(failures)} violation(s); first: {failures[:3]}"


# --- shared long-run fixture ------------------------------------------------

def build_standard_msnmf():
    rng = np.random.default_rng(0)
    data, _ = generate_msnmf([30, 8, 20], 0.3, rng)
    shapes = ((30, 8), (8, 20))
    budgets = sparsity_budgets(shapes, 0.3)
    spec = MsnmfSpec(data=data, block_shapes=shapes, budgets=budgets, gamma=(1.5, 1.5))
    problem = make_msnmf_problem(spec)
    start = feasible_start(rng, shapes, budgets)
    return problem, start, (lambda x: msnmf_relerr(spec, x)), budgets, (1.1, 0.6)


def build_standard_sntd():
    rng = np.random.default_rng(0)
    data, _ = generate_sntd((6, 5, 4), 3, 0.3, rng)
    spec = SntdSpec.from_tensor(data, rank=3, sparsity=0.3, gamma=1.5)
    problem = make_sntd_problem(spec)
    start = feasible_start(rng, spec.block_shapes, spec.budgets)
    return problem, start, (lambda x: sntd_relerr(spec, x)), spec.budgets, (1.3, 0.2)


def make_observer(problem, budgets, sink):
    def observer(info):
        acc = info.accepted_sweep
        rho_acc = min(
            (1.0 / s - L) / 2.0 for s, L in zip(acc.sigmas, acc.lipschitz)
        )
        move2_acc = sum(
            float(np.sum((a - b) ** 2)) for a, b in zip(info.x_next, acc.anchor)
        )
        if info.restart_sweep is not None:
            rs = info.restart_sweep
            rho_res = min(
                (1.0 / s - L) / 2.0 for s, L in zip(rs.sigmas, rs.lipschitz)
            )
            move2_res = sum(
                float(np.sum((a - b) ** 2)) for a, b in zip(rs.z, info.x_k)
            )
        else:
            rho_res = move2_res = None
        residual = subgradient_residual(
            problem, info.x_next, acc.anchor, acc.sigmas, acc.order
        )
        gap = sum(
            float(np.linalg.norm(a - b)) for a, b in zip(info.x_next, acc.anchor)
        )
        rho_b = max(1.0 / s + L for s, L in zip(acc.sigmas, acc.lipschitz))
        feasible = all(
            bool((blk >= 0).all()) and np.count_nonzero(blk) <= s
            for blk, s in zip(info.x_next, budgets)
        )
        supports_changed = any(
            not np.array_equal(a != 0, b != 0)
            for a, b in zip(info.x_k, info.x_km1)
        )
        sink.append(
            dict(
                iteration=info.record.iteration,
                branch=info.record.branch,
                beta=info.record.beta,
                j_x_k=info.j_x_k,
                j_y=info.j_y,
                j_restart=info.j_restart,
                j_next=info.j_next,
                rho_accepted=rho_acc,
                move2_accepted=move2_acc,
                rho_restart=rho_res,
                move2_restart=move2_res,
                residual_sum=float(np.sum(residual)),
                residual_bound=rho_b * gap,
                feasible=feasible,
                supports_changed=supports_changed,
            )
        )

    return observer


@dataclass
class StandardRun:
    name: str
    budgets: tuple
    trace: tuple
    steps: list


@pytest.fixture(scope="module")
def standard_runs():
    runs = []
    for kind, builder in (("msnmf", build_standard_msnmf), ("sntd", build_standard_sntd)):
        problem, start, relerr_fn, budgets, (t, beta_1) = builder()
        for schedule in ("adaptive", "fista", "none"):
            for order in ("cyclic", "random"):
                steps = []
                config = SolverConfig(
                    schedule=schedule,
                    order=order,
                    t=t,
                    beta_1=0.0 if schedule == "none" else beta_1,
                    eps=0.0,
                    k_max=2000,
                    seed=0,
                )
                result = minimize(
                    problem, start, config, relerr_fn,
                    observer=make_observer(problem, budgets, steps),
                )
                assert len(result.trace) == 2000
                runs.append(
                    StandardRun(f"{kind}/{schedule}/{order}", budgets, result.trace, steps)
                )
    return runs


# --- criteria ---------------------------------------------------------------

def test_criterion_01_prox_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1001)
    failures = []
    for i in range(200):
        shape = (3, 3) if i % 2 == 0 else (2, 4)
        u = rng.normal(size=shape)
        for s in range(1, u.size + 1):
            fast = project_sparse_nonneg(u, s)
            exact = prox_oracle(u, s)
            obj_fast = 0.5 * float(np.sum((u - fast) ** 2))
            obj_exact = 0.5 * float(np.sum((u - exact) ** 2))
            if abs(obj_fast - obj_exact) > 1e-12:
                failures.append((i, s, obj_fast, obj_exact))
            again = project_sparse_nonneg(fast, s)
            if not np.array_equal(again, fast):
                failures.append((i, s, "not idempotent"))
    elapsed = time.perf_counter() - started
    if elapsed >= 5.0:
        failures.append(f"runtime {elapsed:.2f}s exceeds 5s")
    conclude(1, "prox oracle equivalence", failures)


def test_criterion_02_gradient_finite_difference_match():
    started = time.perf_counter()
    failures = []
    rng = np.random.default_rng(1002)
    for i in range(50):
        spec, factors = random_msnmf_instance(rng, n_blocks=2 + i % 3)
        objective = msnmf_objective(spec)
        for j in range(len(factors)):
            numeric = central_diff_grad(objective, factors, j)
            analytic = msnmf_grad_block(spec, factors, j)
            err = rel_error(analytic, numeric)
            if err > 1e-5:
                failures.append(("msnmf", i, j, err))
    for i in range(50):
        spec, factors = random_sntd_instance(rng, ndim=3 + i % 2)
        objective = sntd_objective(spec)
        for j in range(len(factors)):
            numeric = central_diff_grad(objective, factors, j)
            analytic = sntd_grad_block(spec, factors, j)
            err = rel_error(analytic, numeric)
            if err > 1e-5:
                failures.append(("sntd", i, j, err))
    elapsed = time.perf_counter() - started
    if elapsed >= 30.0:
        failures.append(f"runtime {elapsed:.2f}s exceeds 30s")
    conclude(2, "gradient finite-difference match", failures)


def test_criterion_03_lipschitz_bound_validity():
    # Rank-1 CP attains the bound with exact equality, so allow rounding at
    # the ulp scale; any real violation would be orders of magnitude larger.
    failures = []
    rng = np.random.default_rng(1003)
    for i in range(1000):
        spec, factors = random_msnmf_instance(rng)
        j = i % len(factors)
        bound = msnmf_lipschitz(spec, factors, j)
        b_val = rng.normal(size=factors[j].shape)
        c_val = rng.normal(size=factors[j].shape)
        with_b = list(factors)
        with_b[j] = b_val
        with_c = list(factors)
        with_c[j] = c_val
        lhs = float(np.linalg.norm(msnmf_grad_block(spec, with_b, j)
                                   - msnmf_grad_block(spec, with_c, j)))
        rhs = bound * float(np.linalg.norm(b_val - c_val))
        if lhs > rhs * (1.0 + 1e-12):
            failures.append(("msnmf", i, j, lhs, rhs))
    for i in range(1000):
        spec, factors = random_sntd_instance(rng)
        j = i % len(factors)
        bound = sntd_lipschitz(spec, factors, j)
        b_val = rng.normal(size=factors[j].shape)
        c_val = rng.normal(size=factors[j].shape)
        with_b = list(factors)
        with_b[j] = b_val
        with_c = list(factors)
        with_c[j] = c_val
        lhs = float(np.linalg.norm(sntd_grad_block(spec, with_b, j)
                                   - sntd_grad_block(spec, with_c, j)))
        rhs = bound * float(np.linalg.norm(b_val - c_val))
        if lhs > rhs * (1.0 + 1e-12):
            failures.append(("sntd", i, j, lhs, rhs))
    conclude(3, "Lipschitz bound validity", failures)


def test_criterion_04_monotone_descent(standard_runs):
    failures = []
    for run in standard_runs:
        objectives = [r.objective for r in run.trace]
        for prev, curr in zip(objectives, objectives[1:]):
            if curr > prev + 1e-9 * (1.0 + abs(prev)):
                failures.append((run.name, prev, curr))
    conclude(4, "monotone descent on standard runs", failures)


def test_criterion_05_sufficient_decrease(standard_runs):
    failures = []
    for run in standard_runs:
        for step in run.steps:
            if step["branch"] == BRANCH_KEEP_EXTRAPOLATED:
                decrease = step["j_x_k"] - step["j_restart"]
                needed = step["rho_restart"] * step["move2_restart"]
                if decrease < needed - 1e-8:
                    failures.append((run.name, step["iteration"], "restart sweep", decrease, needed))
                if not step["j_next"] < step["j_restart"]:
                    failures.append((run.name, step["iteration"], "kept candidate not better"))
            else:
                decrease = step["j_x_k"] - step["j_next"]
                needed = step["rho_accepted"] * step["move2_accepted"]
                if decrease < needed - 1e-8:
                    failures.append((run.name, step["iteration"], step["branch"], decrease, needed))
    conclude(5, "branch-wise sufficient decrease", failures)


def test_criterion_06_subgradient_residual_bound(standard_runs):
    failures = []
    for run in standard_runs:
        for step in run.steps:
            if step["residual_sum"] > step["residual_bound"] * (1.0 + 1e-9) + 1e-12:
                failures.append(
                    (run.name, step["iteration"], step["residual_sum"], step["residual_bound"])
                )
    conclude(6, "subgradient residual bound", failures)


def test_criterion_07_iterate_feasibility(standard_runs):
    failures = []
    for run in standard_runs:
        for step in run.steps:
            if not step["feasible"]:
                failures.append((run.name, step["iteration"]))
    conclude(7, "iterate feasibility", failures)


def test_criterion_08_palm_degeneracy_bitwise():
    problem, start, relerr_fn, _, _ = build_standard_msnmf()
    # Plain alternating proximal-gradient loop, coded without the solver's
    # sweep helper.
    gamma, floor = 1.5, 1e-12
    x = [np.array(b) for b in start]
    reference = []
    for _ in range(100):
        work = BlockVars([np.array(b) for b in x])
        for j in range(problem.n_blocks):
            bound = max(float(problem.lipschitz(work, j)), floor)
            sigma = 1.0 / (gamma * bound)
            grad = problem.smooth_grad(work, j)
            work[j] = problem.nonsmooth_prox[j](x[j] - sigma * grad, sigma)
        x = [work[j] for j in range(problem.n_blocks)]
        reference.append([np.array(b) for b in x])

    iterates = []
    config = SolverConfig(schedule="none", order="cyclic", eps=0.0, k_max=100, seed=0)
    minimize(
        problem, start, config, relerr_fn,
        observer=lambda info: iterates.append([np.array(b) for b in info.x_next]),
    )
    failures = []
    if len(iterates) != 100:
        failures.append(f"expected 100 iterations, got {len(iterates)}")
    for k, (ref, got) in enumerate(zip(reference, iterates), start=1):
        for j, (rb, gb) in enumerate(zip(ref, got)):
            if not np.array_equal(rb, gb):
                failures.append((k, j, "iterate differs"))
    conclude(8, "schedule=none is bit-exact plain alternating prox", failures)


def test_criterion_09_multilinear_identities():
    failures = []
    for n in (2, 3, 4):
        for seed in range(50):
            rng = np.random.default_rng(9000 + 100 * n + seed)
            dims = tuple(int(d) for d in rng.integers(2, 6, size=n))
            rank = int(rng.integers(1, 5))
            tensor = rng.normal(size=dims)
            for mode in range(n):
                back = mode_fold(mode_unfold(tensor, mode), mode, dims)
                if not np.array_equal(back, tensor):
                    failures.append(("fold/unfold", n, seed, mode))
            factors = [rng.normal(size=(d, rank)) for d in dims]
            model = kruskal_tensor(factors)
            for mode in range(n):
                direct = mode_unfold(model, mode)
                via_kr = factors[mode] @ khatri_rao_chain(factors, skip=mode).T
                denom = max(float(np.linalg.norm(direct)), 1e-12)
                if float(np.linalg.norm(direct - via_kr)) / denom > 1e-12:
                    failures.append(("kruskal/khatri-rao", n, seed, mode))
    conclude(9, "multilinear identities", failures)


def test_criterion_10_extrapolation_failure_probe(standard_runs):
    # The claim is one-directional in reality: an entry LEAVING the support
    # forces a negative entry in y and hence J(y)=inf, but an entry ENTERING
    # a not-yet-saturated support leaves y nonnegative with a support inside
    # the budget, so J(y) stays finite and acceptance is legitimate.  The
    # criterion asserts the symmetric-difference version exactly, so such
    # support-growth iterations are recorded as violations rather than
    # excused.  See the decisions ledger for the worked counterexample.
    failures = []
    notes = []
    for run in standard_runs:
        for step in run.steps:
            if step["beta"] > 0.0 and step["supports_changed"]:
                if not (math.isinf(step["j_y"]) and step["branch"] != BRANCH_ACCEPT_EXTRAPOLATED):
                    failures.append(
                        (run.name, step["iteration"], step["branch"],
                         f"J(y)={step['j_y']:.6e}")
                    )
        stats = acceptance_stats(run.trace)
        fr = stats.fractions
        notes.append(
            f"{run.name}: " + " ".join(f"{b}={100 * fr[b]:.1f}%" for b in sorted(fr))
            + f" support_changes={stats.support_changes}"
        )
    conclude(
        10,
        "support change under momentum forces J(y)=inf and blocks acceptance",
        failures,
        notes=["standard-run branch profiles:"] + [f"  {line}" for line in notes],
    )


def test_criterion_11_comparative_speed():
    started = time.perf_counter()

    def iterations_to_flat(seed, schedule, beta_1):
        rng = np.random.default_rng(seed)
        data, _ = generate_msnmf([30, 8, 20], 0.3, rng)
        shapes = ((30, 8), (8, 20))
        budgets = sparsity_budgets(shapes, 0.3)
        spec = MsnmfSpec(data=data, block_shapes=shapes, budgets=budgets, gamma=(1.5, 1.5))
        problem = make_msnmf_problem(spec)
        start = feasible_start(rng, shapes, budgets)
        config = SolverConfig(
            schedule=schedule, order="cyclic", t=1.1, beta_1=beta_1,
            eps=1e-4, k_max=5000, seed=seed,
        )
        result = minimize(problem, start, config, lambda x: msnmf_relerr(spec, x))
        return result.trace[-1].iteration

    accelerated = [iterations_to_flat(seed, "adaptive", 0.6) for seed in range(10)]
    plain = [iterations_to_flat(seed, "none", 0.0) for seed in range(10)]
    failures = []
    if np.median(accelerated) > np.median(plain):
        failures.append((accelerated, plain))
    elapsed = time.perf_counter() - started
    if elapsed >= 120.0:
        failures.append(f"runtime {elapsed:.2f}s exceeds 2 minutes")
    conclude(
        11,
        "adaptive momentum needs no more iterations than plain alternating prox",
        failures,
        notes=[
            "comparative speed (iterations to flat relerr, 10 seeds): "
            f"adaptive median {np.median(accelerated):.1f}, "
            f"plain median {np.median(plain):.1f}"
        ],
    )


def strip_elapsed_column(text):
    rows = []
    for line in text.splitlines():
        parts = line.split(",")
        del parts[1]
        rows.append(",".join(parts))
    return "\n".join(rows)


def test_criterion_12_trace_determinism(tmp_path):
    failures = []
    runs = {
        "msnmf": dict(kind="msnmf", shapes=((30, 8), (8, 20))),
        "sntd": dict(kind="sntd", dims=(6, 5, 4), rank=3),
    }
    for label, extra in runs.items():
        texts = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{label}_{attempt}.csv"
            config = RunConfig(
                out=str(out), seed=7, eps=0.0, max_iters=120, **extra
            )
            assert run_benchmark(config) == 0
            texts.append(strip_elapsed_column(out.read_text(encoding="ascii")))
        if texts[0] != texts[1]:
            failures.append((label, "traces differ after dropping elapsed_s"))
    conclude(12, "identical config and seed give identical traces", failures)


def test_criterion_13_stopping_rule_battery():
    failures = []

    def expect(actual, wanted, label):
        if actual != wanted:
            failures.append((label, actual, wanted))

    state = StopState(eps=1e-4, k_max=100, max_time_s=math.inf)
    expect(check_stop(state, 0.5, 0.0, 1).stop, False, "first value never trips flatness")
    expect(
        check_stop(state, 0.5, 0.0, 2),
        StopDecision(True, REASON_DELTA_RELERR),
        "constant relerr stops with the flatness reason",
    )

    state = StopState(eps=0.25, k_max=100, max_time_s=math.inf)
    check_stop(state, 0.5, 0.0, 1)
    expect(check_stop(state, 0.75, 0.0, 2).stop, False, "difference equal to eps does not stop")
    expect(check_stop(state, 0.625, 0.0, 3).stop, True, "difference below eps stops")

    state = StopState(eps=0.0, k_max=10**6, max_time_s=math.inf)
    fired = any(check_stop(state, 0.333, 0.0, k).stop for k in range(1, 501))
    expect(fired, False, "eps=0 never fires")

    state = StopState(eps=0.0, k_max=40, max_time_s=math.inf)
    expect(check_stop(state, 0.1, 0.0, 39).stop, False, "below the iteration cap keeps going")
    decision = check_stop(state, 0.2, 0.0, 40)
    expect((decision.stop, decision.reason), (True, REASON_MAX_ITERS), "iteration cap fires")

    state = StopState(eps=0.0, k_max=100, max_time_s=1.5)
    decision = check_stop(state, 0.1, 2.0, 3)
    expect((decision.stop, decision.reason), (True, REASON_MAX_TIME), "time budget fires")

    state = StopState(eps=1e30, k_max=2, max_time_s=1.0)
    check_stop(state, 0.5, 0.0, 1)
    decision = check_stop(state, 0.5, 5.0, 2)
    expect(decision.reason, REASON_DELTA_RELERR, "flatness outranks both caps")

    state = StopState(eps=0.0, k_max=2, max_time_s=1.0)
    decision = check_stop(state, 0.5, 5.0, 2)
    expect(decision.reason, REASON_MAX_TIME, "time budget outranks the iteration cap")

    conclude(13, "stopping rule battery", failures)
