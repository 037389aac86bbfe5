"""Desk-scale ground truth for the heuristic.

Two oracles: exhaustive enumeration of activation patterns (one region LP
per pattern, Gray-code order so consecutive patterns differ in a single
neuron), and branch-and-bound on the big-M MILP (node relaxations reuse
the shared relaxation model with temporary activation fixings). Both are
deterministic and intended for networks with a couple dozen hidden
neurons at most.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from . import linprog as lp
from .formulations import (
    InputDomain,
    Objective,
    build_milp,
    build_region_lp,
    domain_bounds,
)
from .network import ActivationPattern, Network, NeuronBounds, forward

ENUMERATION_COMPLETE = "enumeration_complete"
BNB_COMPLETE = "bnb_complete"
TIME_LIMIT = "time_limit"

# a node whose bound does not beat the incumbent by more than this is cut
PRUNE_TOL = 1e-7
INT_TOL = 1e-6


@dataclass
class ExactResult:
    value: float
    x: np.ndarray | None
    proof: str
    count: int            # patterns visited or nodes solved
    bound: float          # = value on complete proofs
    root_bound: float | None = None  # branch-and-bound only


def _pattern_from_code(code: int, sizes) -> ActivationPattern:
    masks = []
    at = 0
    for w in sizes:
        m = np.zeros(w, dtype=bool)
        for i in range(w):
            m[i] = bool((code >> (at + i)) & 1)
        at += w
        masks.append(m)
    return ActivationPattern(masks)


def enumerate_regions_optimize(net: Network, domain: InputDomain,
                               obj: Objective, cap: int | None = None,
                               on_incumbent=None) -> ExactResult:
    """Solve the region LP of every activation pattern and keep the best.

    Patterns whose LP is infeasible are empty regions and are skipped.
    With no cap the hidden neuron count must stay enumerable (<= 20);
    exceeding a given cap returns a TIME_LIMIT proof with the best so far.
    """
    n_hidden = net.total_hidden
    if cap is None and n_hidden > 20:
        raise ValueError("too many hidden neurons to enumerate; pass a cap")
    sizes = net.hidden_sizes
    best_value = -np.inf
    best_x = None
    visited = 0
    started = time.monotonic()
    for i in range(1 << n_hidden):
        if cap is not None and visited >= cap:
            return ExactResult(value=best_value, x=best_x, proof=TIME_LIMIT,
                               count=visited, bound=np.inf)
        code = i ^ (i >> 1)  # Gray order: one neuron changes per step
        pattern = _pattern_from_code(code, sizes)
        outcome = lp.solve_lp(build_region_lp(net, pattern, domain, obj))
        visited += 1
        if outcome.status == lp.OPTIMAL and outcome.objective > best_value:
            best_value = outcome.objective
            best_x = outcome.x[:net.input_dim]
            if on_incumbent is not None:
                on_incumbent(time.monotonic() - started, best_value)
    if best_x is None:
        raise RuntimeError("no pattern produced a feasible region LP")
    return ExactResult(value=best_value, x=best_x, proof=ENUMERATION_COMPLETE,
                       count=visited, bound=best_value)


def branch_and_bound(net: Network, domain: InputDomain, obj: Objective,
                     bounds: NeuronBounds | None = None,
                     node_cap: int | None = None,
                     time_limit: float | None = None,
                     on_incumbent=None) -> ExactResult:
    """Best-first branch-and-bound on the big-M MILP.

    Nodes apply their activation fixings to one shared relaxation model,
    solve, and revert. Every node solution doubles as a primal heuristic:
    its input is evaluated by a forward pass, which is always feasible.
    Branching picks the most fractional undecided binary, ties broken by
    (layer, neuron). Ties in the node queue pop newest-first, so equal
    bounds are explored depth-first.
    """
    if bounds is None:
        bounds = domain_bounds(net, domain)
    milp = build_milp(net, domain, obj, bounds)
    relax = milp.relaxation

    started = time.monotonic()
    inc_value = -np.inf
    inc_x = None
    nodes_solved = 0
    root_bound = None

    # heap of (-bound_key, -insertion, fixings); bound_key is the parent's
    # LP value, so it is always an upper bound for the subtree
    counter = 0
    heap: list[tuple[float, int, list[tuple[int, int, int]]]] = []
    heapq.heappush(heap, (-np.inf, 0, []))

    def open_bound() -> float:
        pending = max((-entry[0] for entry in heap), default=-np.inf)
        return max(inc_value, pending)

    while heap:
        if node_cap is not None and nodes_solved >= node_cap:
            return ExactResult(value=inc_value, x=inc_x, proof=TIME_LIMIT,
                               count=nodes_solved, bound=open_bound(),
                               root_bound=root_bound)
        if time_limit is not None and time.monotonic() - started > time_limit:
            return ExactResult(value=inc_value, x=inc_x, proof=TIME_LIMIT,
                               count=nodes_solved, bound=open_bound(),
                               root_bound=root_bound)
        neg_key, _, fixings = heapq.heappop(heap)
        if -neg_key <= inc_value + PRUNE_TOL and np.isfinite(inc_value) \
                and np.isfinite(neg_key):
            continue  # bound set when the parent solved; now dominated
        for layer, neuron, state in fixings:
            relax.fix_activation(layer, neuron, state)
        outcome = lp.solve_lp(relax.lp_model)
        relax.clear_all_fixings()
        nodes_solved += 1
        if root_bound is None:
            if outcome.status != lp.OPTIMAL:
                if outcome.status == lp.INFEASIBLE:
                    raise RuntimeError("root relaxation infeasible: empty domain")
                raise RuntimeError(f"root relaxation solve: {outcome.status}")
            root_bound = outcome.objective
        if outcome.status == lp.INFEASIBLE:
            continue
        if outcome.status != lp.OPTIMAL:
            raise RuntimeError(f"node relaxation solve: {outcome.status}")
        node_bound = outcome.objective
        if node_bound <= inc_value + PRUNE_TOL:
            continue

        x_node = relax.x_values(outcome.x)
        primal = float(obj.c @ forward(net, domain.clip(x_node)).output)
        if primal > inc_value:
            inc_value = primal
            inc_x = domain.clip(x_node)
            if on_incumbent is not None:
                on_incumbent(time.monotonic() - started, inc_value)

        zvals = relax.z_values(outcome.x)
        fixed_here = {(l, i) for l, i, _ in fixings}
        frac_best = None
        pick = None
        for layer, neuron in milp.integer_index:
            if (layer, neuron) in fixed_here:
                continue
            z = float(zvals[layer][neuron])
            dist = min(z, 1.0 - z)
            if dist > INT_TOL and (frac_best is None or dist > frac_best):
                frac_best = dist
                pick = (layer, neuron)
        if pick is None:
            # integral: the node bound is attained by a feasible assignment
            if node_bound > inc_value:
                inc_value = node_bound
                inc_x = domain.clip(x_node)
                if on_incumbent is not None:
                    on_incumbent(time.monotonic() - started, inc_value)
            continue
        for state in (0, 1):
            counter += 1
            heapq.heappush(
                heap, (-node_bound, -counter, fixings + [(pick[0], pick[1], state)]))

    return ExactResult(value=inc_value, x=inc_x, proof=BNB_COMPLETE,
                       count=nodes_solved, bound=inc_value,
                       root_bound=root_bound)
