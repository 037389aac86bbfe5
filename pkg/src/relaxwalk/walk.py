"""Local search that walks within and across linear regions.

Each iteration solves the LP restricted to the current point's linear
region, giving the best input x1 of that region. If that improves on the
best value seen, the search leaves the region along the improvement
direction d = x1 - x0 with a small step eps*d (corrected per dimension to
stay inside the domain) and repeats from the landing point. Ties at a
region facet inherit the previous activation state so the walk cannot
oscillate on a boundary. Stops when a region brings no improvement, when
the step is numerically negligible, on the iteration cap, or on an LP
failure (the best point found so far is always returned).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linprog as lp
from .formulations import InputDomain, Objective, build_region_lp
from .network import ActivationPattern, Network, activation_pattern

NO_IMPROVEMENT = "no_improvement"
STEP_STALL = "step_stall"
ITER_CAP = "iter_cap"
LP_FAILURE = "lp_failure"


@dataclass
class WalkConfig:
    eps: float = 0.01
    improve_tol: float = 1e-6
    min_step_norm: float = 1e-12
    max_iters: int | None = None  # resolved to 10 * hidden neuron count
    lp_max_pivots: int | None = None

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not self.improve_tol > 0.0:
            raise ValueError("improve_tol must be positive")
        if self.min_step_norm < 0.0:
            raise ValueError("min_step_norm must be nonnegative")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def resolved_max_iters(self, net: Network) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return 10 * net.total_hidden


@dataclass
class WalkResult:
    best_x: np.ndarray
    best_value: float
    best_pattern: ActivationPattern
    trace: list[tuple[np.ndarray, np.ndarray, float]]  # (x0, x1, F(x1))
    termination: str

    @property
    def iterations(self) -> int:
        return len(self.trace)


def step_correct(x1: np.ndarray, d: np.ndarray, eps: float,
                 domain: InputDomain) -> np.ndarray:
    """Move eps*d from x1, dropping each coordinate move that would leave
    the domain on its own; if the combined move still violates an L1
    budget, scale it down by bisection (at most 20 halvings)."""
    x1 = np.asarray(x1, dtype=float)
    d = np.asarray(d, dtype=float)
    cand = x1 + eps * d
    moved = np.zeros_like(x1, dtype=bool)
    for i in range(x1.shape[0]):
        if d[i] == 0.0:
            continue
        probe = x1.copy()
        probe[i] = cand[i]
        if domain.contains(probe):
            moved[i] = True
    x0 = np.where(moved, cand, x1)
    if domain.contains(x0):
        return x0
    t = 1.0
    for _ in range(20):
        t *= 0.5
        scaled = x1 + t * (x0 - x1)
        if domain.contains(scaled):
            return scaled
    return x1.copy()


def local_search(net: Network, domain: InputDomain, obj: Objective,
                 x0: np.ndarray, cfg: WalkConfig | None = None) -> WalkResult:
    """Walk from x0 until no linear region improves on the best value.

    x0 must lie in the domain (callers clip beforehand if needed). The
    improvement test compares each region optimum against the best value
    seen so far, which keeps the recorded value trace strictly increasing
    even when an eps step briefly loses ground.
    """
    cfg = cfg or WalkConfig()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.input_dim,):
        raise ValueError("start point has the wrong dimension")
    max_iters = cfg.resolved_max_iters(net)

    pattern = activation_pattern(net, x0)
    best_x = x0.copy()
    best_value = obj.value(net, x0)
    best_pattern = pattern
    trace: list[tuple[np.ndarray, np.ndarray, float]] = []
    termination = ITER_CAP

    for _ in range(max_iters):
        model = build_region_lp(net, pattern, domain, obj)
        outcome = lp.solve_lp(model, max_pivots=cfg.lp_max_pivots)
        if outcome.status != lp.OPTIMAL:
            termination = LP_FAILURE
            break
        x1 = outcome.x[:net.input_dim]
        value1 = obj.value(net, x1)
        trace.append((x0.copy(), x1.copy(), value1))
        if value1 <= best_value + cfg.improve_tol:
            termination = NO_IMPROVEMENT
            break
        best_x, best_value, best_pattern = x1.copy(), value1, pattern

        d = x1 - x0
        if float(np.max(np.abs(cfg.eps * d))) <= cfg.min_step_norm:
            termination = STEP_STALL
            break
        x0 = step_correct(x1, d, cfg.eps, domain)
        pattern = activation_pattern(net, x0, prev=pattern)
        value0 = obj.value(net, x0)
        if value0 > best_value:
            best_x, best_value, best_pattern = x0.copy(), value0, pattern

    return WalkResult(best_x=best_x, best_value=best_value,
                      best_pattern=best_pattern, trace=trace,
                      termination=termination)
