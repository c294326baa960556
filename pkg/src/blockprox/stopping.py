"""Run-termination logic shared by the solver and the benchmark harness.

A run halts on whichever fires first:

* flatness: the relative error changed by less than ``eps`` between two
  consecutive iterations (checked from the second value onward, so with
  ``eps = 0`` this trigger can never fire);
* the wall-clock budget ``max_time_s``;
* the iteration cap ``k_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "REASON_DELTA_RELERR",
    "REASON_MAX_TIME",
    "REASON_MAX_ITERS",
    "StopState",
    "StopDecision",
    "check_stop",
]

REASON_DELTA_RELERR = "delta_relerr"
REASON_MAX_TIME = "max_time"
REASON_MAX_ITERS = "max_iters"


@dataclass
class StopState:
    """Mutable tracker holding the stop thresholds and the last relative error."""

    eps: float
    k_max: int
    max_time_s: float
    last_relerr: float | None = None

    def __post_init__(self) -> None:
        if not (self.eps >= 0.0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be finite and >= 0, got {self.eps}")
        if int(self.k_max) < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        self.k_max = int(self.k_max)
        if not self.max_time_s > 0.0:
            raise ValueError(f"max_time_s must be positive, got {self.max_time_s}")


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str | None = None


def check_stop(state: StopState, relerr: float, elapsed_s: float, iteration: int) -> StopDecision:
    """Decide whether to halt after ``iteration`` finished.

    Updates ``state.last_relerr`` as a side effect.  When several triggers
    fire at once the flatness criterion wins, then the time budget, then the
    iteration cap.
    """
    relerr = float(relerr)
    if math.isnan(relerr):
        raise FloatingPointError("relative error is nan")
    delta_hit = (
        state.last_relerr is not None
        and abs(relerr - state.last_relerr) < state.eps
    )
    state.last_relerr = relerr
    if delta_hit:
        return StopDecision(True, REASON_DELTA_RELERR)
    if elapsed_s >= state.max_time_s:
        return StopDecision(True, REASON_MAX_TIME)
    if iteration >= state.k_max:
        return StopDecision(True, REASON_MAX_ITERS)
    return StopDecision(False, None)
