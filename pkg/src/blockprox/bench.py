"""Benchmark harness: run configuration, config files, and full runs.

A run is described by a :class:`RunConfig`, which can be assembled from a
flat ``key = value`` config file, command-line overrides, or both; flags win
over file values.  :func:`run_benchmark` builds the problem (loading data or
synthesizing it), runs the solver once per repeat seed, writes the trace CSV
and final factors, and prints a short summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .applications import (
    MsnmfSpec,
    SntdSpec,
    make_msnmf_problem,
    make_sntd_problem,
    msnmf_relerr,
    sntd_relerr,
    sparsity_budgets,
)
from .io import (
    load_dense_tensor,
    load_matrix_market,
    save_matrix_market,
    save_trace_csv,
)
from .solver import BRANCHES, IterationRecord, SolveResult, SolverConfig, minimize
from .synth import feasible_start, generate_msnmf, generate_sntd

__all__ = [
    "KINDS",
    "APP_DEFAULTS",
    "RunConfig",
    "parse_config_file",
    "build_run_config",
    "parse_shapes",
    "parse_dims",
    "AcceptanceStats",
    "acceptance_stats",
    "run_benchmark",
]

KINDS = ("msnmf", "sntd")

# Momentum defaults tuned per application.
APP_DEFAULTS = {
    "msnmf": {"t": 1.1, "beta_1": 0.6},
    "sntd": {"t": 1.3, "beta_1": 0.2},
}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one benchmark run.

    ``shapes`` lists the factor shapes of the multilayer chain; ``dims`` is
    the tensor shape for synthetic CP instances.  ``t`` and ``beta_1`` default
    to the per-application values in :data:`APP_DEFAULTS` when left ``None``.
    """

    kind: str
    data: str | None = None
    out: str | None = None
    shapes: tuple[tuple[int, int], ...] | None = None
    dims: tuple[int, ...] | None = None
    rank: int | None = None
    sparsity: float = 0.3
    density: float = 0.3
    seed: int = 0
    order: str = "cyclic"
    schedule: str = "adaptive"
    eps: float = 1e-4
    max_iters: int = 1000
    max_time: float = math.inf
    repeat: int = 1
    t: float | None = None
    beta_1: float | None = None
    beta_max: float = 0.9999
    gamma: float = 1.5

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.repeat) < 1:
            raise ValueError(f"repeat must be >= 1, got {self.repeat}")
        object.__setattr__(self, "repeat", int(self.repeat))

    def solver_config(self, seed: int, gamma: float | tuple[float, ...] | None = None) -> SolverConfig:
        defaults = APP_DEFAULTS[self.kind]
        return SolverConfig(
            schedule=self.schedule,
            order=self.order,
            t=defaults["t"] if self.t is None else self.t,
            beta_1=defaults["beta_1"] if self.beta_1 is None else self.beta_1,
            beta_max=self.beta_max,
            gamma=self.gamma if gamma is None else gamma,
            eps=self.eps,
            k_max=self.max_iters,
            max_time_s=self.max_time,
            seed=seed,
        )


def parse_shapes(text: str) -> tuple[tuple[int, int], ...]:
    """Parse a factor chain like ``"30x8,8x20"`` into shape tuples."""
    shapes = []
    for item in text.split(","):
        parts = item.strip().split("x")
        if len(parts) != 2:
            raise ValueError(f"expected ROWSxCOLS, got {item.strip()!r}")
        try:
            shape = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise ValueError(f"expected ROWSxCOLS, got {item.strip()!r}") from None
        if shape[0] < 1 or shape[1] < 1:
            raise ValueError(f"shape dimensions must be positive, got {item.strip()!r}")
        shapes.append(shape)
    if not shapes:
        raise ValueError("at least one factor shape is required")
    return tuple(shapes)


def parse_dims(text: str) -> tuple[int, ...]:
    """Parse tensor dimensions like ``"6x5x4"``."""
    try:
        dims = tuple(int(tok) for tok in text.strip().split("x"))
    except ValueError:
        raise ValueError(f"expected D0xD1x..., got {text.strip()!r}") from None
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"expected at least two positive dimensions, got {text.strip()!r}")
    return dims


_FIELD_PARSERS = {
    "kind": str,
    "data": str,
    "out": str,
    "shapes": parse_shapes,
    "dims": parse_dims,
    "rank": int,
    "sparsity": float,
    "density": float,
    "seed": int,
    "order": str,
    "schedule": str,
    "eps": float,
    "max_iters": int,
    "max_time": float,
    "repeat": int,
    "t": float,
    "beta_1": float,
    "beta_max": float,
    "gamma": float,
}

assert set(_FIELD_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_config_file(path: str | Path) -> dict[str, object]:
    """Read a flat ``key = value`` config file.

    ``#`` starts a comment, blank lines are skipped, and keys must match
    :class:`RunConfig` field names exactly.
    """
    path = Path(path)
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{no}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _FIELD_PARSERS:
                raise ValueError(f"{path}:{no}: unknown config key {key!r}")
            try:
                values[key] = _FIELD_PARSERS[key](value)
            except ValueError as exc:
                raise ValueError(f"{path}:{no}: bad value for {key!r}: {exc}") from None
    return values


def build_run_config(
    kind: str,
    file_values: Mapping[str, object] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> RunConfig:
    """Merge config sources into a :class:`RunConfig`; overrides win."""
    merged: dict[str, object] = {"kind": kind}
    for source in (file_values, overrides):
        if source:
            merged.update({k: v for k, v in source.items() if v is not None})
    if merged["kind"] != kind and "kind" in (file_values or {}):
        raise ValueError(
            f"config file sets kind={merged['kind']!r} but the subcommand is {kind!r}"
        )
    merged["kind"] = kind
    return RunConfig(**merged)


@dataclass(frozen=True)
class AcceptanceStats:
    """Branch profile of a run: how often each extrapolation outcome occurred."""

    total: int
    counts: Mapping[str, int]
    support_changes: int | None

    @property
    def fractions(self) -> dict[str, float]:
        if self.total == 0:
            return {b: 0.0 for b in BRANCHES}
        return {b: self.counts[b] / self.total for b in BRANCHES}

    def lines(self) -> list[str]:
        out = ["branches:"]
        fr = self.fractions
        for b in BRANCHES:
            out.append(f"  {b}: {self.counts[b]} ({100.0 * fr[b]:.1f}%)")
        if self.support_changes is None:
            out.append("support-changing extrapolations: n/a")
        else:
            out.append(f"support-changing extrapolations: {self.support_changes}")
        return out


def acceptance_stats(records: Sequence[IterationRecord]) -> AcceptanceStats:
    """Summarize branch outcomes over a trace.

    The support-change count is the number of iterations that extrapolated
    (``beta > 0``) from two points with different nonzero patterns; it is
    ``None`` when the records lack that bookkeeping (e.g. read from CSV).
    """
    counts = {b: 0 for b in BRANCHES}
    support_changes: int | None = 0
    for r in records:
        counts[r.branch] += 1
        if r.supports_differ is None:
            support_changes = None
        elif support_changes is not None and r.beta > 0.0 and r.supports_differ:
            support_changes += 1
    return AcceptanceStats(total=len(records), counts=counts, support_changes=support_changes)


def _msnmf_setup(config: RunConfig, seed: int):
    rng = np.random.default_rng(seed)
    if config.data is not None:
        data = load_matrix_market(config.data)
        m, n = data.shape
        if config.shapes is not None:
            shapes = config.shapes
        elif config.rank is not None:
            shapes = ((m, int(config.rank)), (int(config.rank), n))
        else:
            raise ValueError("msnmf with --data needs --shapes or --rank for the chain")
    else:
        if config.shapes is None:
            raise ValueError("synthetic msnmf runs need --shapes")
        shapes = config.shapes
        chain_dims = [shapes[0][0]] + [s[1] for s in shapes]
        for j in range(len(shapes) - 1):
            if shapes[j][1] != shapes[j + 1][0]:
                raise ValueError(
                    f"factor {j} has {shapes[j][1]} columns but factor {j + 1} "
                    f"has {shapes[j + 1][0]} rows"
                )
        data, _ = generate_msnmf(chain_dims, config.density, rng)
    budgets = sparsity_budgets(shapes, config.sparsity)
    spec = MsnmfSpec(
        data=data,
        block_shapes=shapes,
        budgets=budgets,
        gamma=(float(config.gamma),) * len(shapes),
    )
    problem = make_msnmf_problem(spec)
    start = feasible_start(rng, spec.block_shapes, budgets)
    return problem, start, (lambda x: msnmf_relerr(spec, x))


def _sntd_setup(config: RunConfig, seed: int):
    rng = np.random.default_rng(seed)
    if config.rank is None:
        raise ValueError("sntd runs need --rank")
    if config.data is not None:
        data = load_dense_tensor(config.data)
    else:
        if config.dims is None:
            raise ValueError("synthetic sntd runs need --dims")
        data, _ = generate_sntd(config.dims, config.rank, config.density, rng)
    spec = SntdSpec.from_tensor(
        data, rank=config.rank, sparsity=config.sparsity, gamma=config.gamma
    )
    problem = make_sntd_problem(spec)
    start = feasible_start(rng, spec.block_shapes, spec.budgets)
    return problem, start, (lambda x: sntd_relerr(spec, x))


def _trace_path(config: RunConfig, seed: int) -> Path:
    base = Path(config.out) if config.out is not None else Path(f"{config.kind}_trace.csv")
    if config.repeat == 1:
        return base
    return base.with_name(f"{base.stem}_seed{seed}{base.suffix or '.csv'}")


def summary_lines(config: RunConfig, seed: int, result: SolveResult, trace_path: Path) -> list[str]:
    last = result.trace[-1]
    out = [
        f"kind: {config.kind}",
        f"seed: {seed}",
        f"iterations: {last.iteration}",
        f"stop: {result.stop_reason}",
        f"objective: {last.objective:.6e}",
        f"relerr: {last.relerr:.6e}",
    ]
    out.extend(acceptance_stats(result.trace).lines())
    out.append(f"trace: {trace_path}")
    return out


def run_benchmark(config: RunConfig) -> int:
    """Execute a configured run (or several repeats) end to end.

    Writes one trace CSV and one Matrix Market file per final factor for each
    repeat, prints a summary, and returns a process exit status (0 on
    success).  Repeats use seeds ``seed, seed + 1, ...`` with fully isolated
    state.
    """
    for idx in range(config.repeat):
        seed = config.seed + idx
        if config.kind == "msnmf":
            problem, start, relerr_fn = _msnmf_setup(config, seed)
        else:
            problem, start, relerr_fn = _sntd_setup(config, seed)
        result = minimize(problem, start, config.solver_config(seed), relerr_fn)
        trace_path = _trace_path(config, seed)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        save_trace_csv(trace_path, result.trace)
        for j, factor in enumerate(result.x):
            factor_path = trace_path.with_name(f"{trace_path.stem}_factor{j + 1}.mtx")
            save_matrix_market(factor_path, factor)
        print("\n".join(summary_lines(config, seed, result, trace_path)))
    return 0
