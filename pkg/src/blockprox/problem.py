"""Block-structured composite objectives.

A :class:`BlockProblem` couples one smooth term ``H(x_0, ..., x_{N-1})``
defined over all blocks with one possibly nonsmooth, extended-real term
``F_j(x_j)`` per block.  The total objective is

    J(x) = H(x_0, ..., x_{N-1}) + sum_j F_j(x_j)

where each ``F_j`` may take the value ``+inf`` to encode a hard constraint.
Objective values are ordinary Python floats; ``math.inf`` marks infeasible
points and ``nan`` is never produced (non-finite smooth values raise instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "BlockVars",
    "BlockProblem",
    "evaluate_smooth",
    "evaluate_nonsmooth",
    "evaluate_objective",
]


class BlockVars:
    """An ordered collection of per-block dense matrices.

    Blocks are float64 matrices of fixed shapes.  Arrays held by a
    ``BlockVars`` are treated as immutable snapshots: solver code rebinds
    block slots to freshly allocated arrays and never writes in place, so
    copies may safely share storage.
    """

    __slots__ = ("_blocks",)

    def __init__(self, blocks: Sequence[np.ndarray]):
        checked: list[np.ndarray] = []
        for j, b in enumerate(blocks):
            arr = np.asarray(b, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"block {j} must be a 2-D matrix, got ndim={arr.ndim}")
            if not np.isfinite(arr).all():
                raise ValueError(f"block {j} contains non-finite entries")
            checked.append(arr)
        if not checked:
            raise ValueError("at least one block is required")
        self._blocks = checked

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._blocks)

    def __getitem__(self, j: int) -> np.ndarray:
        return self._blocks[j]

    def __setitem__(self, j: int, value: np.ndarray) -> None:
        arr = np.asarray(value, dtype=np.float64)
        current = self._blocks[j]
        if arr.shape != current.shape:
            raise ValueError(
                f"block {j} must keep shape {current.shape}, got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ValueError(f"block {j} contains non-finite entries")
        self._blocks[j] = arr

    @property
    def shapes(self) -> tuple[tuple[int, int], ...]:
        return tuple(b.shape for b in self._blocks)

    def copy(self) -> "BlockVars":
        out = object.__new__(BlockVars)
        out._blocks = list(self._blocks)
        return out


@dataclass(frozen=True)
class BlockProblem:
    """A composite minimization problem split into matrix blocks.

    Parameters
    ----------
    block_shapes : tuple of (rows, cols)
        Shape of each block variable.
    smooth_value : callable(vars) -> float
        The coupling term ``H``; finite for every finite input.
    smooth_grad : callable(vars, j) -> ndarray
        Partial gradient of ``H`` with respect to block ``j``, evaluated at
        ``vars``; must return an array of ``block_shapes[j]``.
    lipschitz : callable(vars, j) -> float
        A valid Lipschitz bound for ``smooth_grad(., j)`` as block ``j``
        varies with the other blocks held at ``vars``.
    nonsmooth_value : tuple of callable(matrix) -> float
        Per-block terms ``F_j``; may return ``math.inf``, never ``nan``.
    nonsmooth_prox : tuple of callable(matrix, sigma) -> ndarray
        Per-block proximal maps ``prox_{sigma F_j}``.
    """

    block_shapes: tuple[tuple[int, int], ...]
    smooth_value: Callable[[BlockVars], float]
    smooth_grad: Callable[[BlockVars, int], np.ndarray]
    lipschitz: Callable[[BlockVars, int], float]
    nonsmooth_value: tuple[Callable[[np.ndarray], float], ...] = field(repr=False)
    nonsmooth_prox: tuple[Callable[[np.ndarray, float], np.ndarray], ...] = field(repr=False)

    def __post_init__(self) -> None:
        shapes = tuple((int(r), int(c)) for r, c in self.block_shapes)
        if not shapes:
            raise ValueError("a problem needs at least one block")
        for j, (r, c) in enumerate(shapes):
            if r < 1 or c < 1:
                raise ValueError(f"block {j} has invalid shape {(r, c)}")
        object.__setattr__(self, "block_shapes", shapes)
        n = len(shapes)
        if len(self.nonsmooth_value) != n or len(self.nonsmooth_prox) != n:
            raise ValueError(
                "nonsmooth_value and nonsmooth_prox must provide one callable per block"
            )

    @property
    def n_blocks(self) -> int:
        return len(self.block_shapes)

    def validate_point(self, x: BlockVars) -> None:
        """Raise ``ValueError`` if ``x`` does not match the block layout."""
        if len(x) != self.n_blocks:
            raise ValueError(f"expected {self.n_blocks} blocks, got {len(x)}")
        for j, (blk, shape) in enumerate(zip(x, self.block_shapes)):
            if blk.shape != shape:
                raise ValueError(f"block {j} has shape {blk.shape}, expected {shape}")


def evaluate_smooth(problem: BlockProblem, x: BlockVars) -> float:
    """Evaluate the coupling term ``H`` at ``x``.

    Raises ``FloatingPointError`` if the value overflows or is ``nan``; the
    smooth term of a well-posed problem is finite at every finite point.
    """
    problem.validate_point(x)
    value = float(problem.smooth_value(x))
    if not math.isfinite(value):
        raise FloatingPointError(f"smooth term evaluated to {value!r} at a finite point")
    return value


def evaluate_nonsmooth(problem: BlockProblem, x: BlockVars) -> float:
    """Sum the per-block terms ``F_j``; ``math.inf`` marks infeasibility."""
    problem.validate_point(x)
    total = 0.0
    for j, (f, blk) in enumerate(zip(problem.nonsmooth_value, x)):
        value = float(f(blk))
        if math.isnan(value):
            raise FloatingPointError(f"nonsmooth term for block {j} evaluated to nan")
        if value == math.inf:
            return math.inf
        total += value
    return total


def evaluate_objective(problem: BlockProblem, x: BlockVars) -> float:
    """Evaluate ``J(x) = H(x) + sum_j F_j(x_j)`` as an extended real.

    The nonsmooth part is checked first so that ``+inf`` short-circuits
    without evaluating ``H``.
    """
    penalty = evaluate_nonsmooth(problem, x)
    if penalty == math.inf:
        return math.inf
    return evaluate_smooth(problem, x) + penalty
