"""Diverse start generation: relax, flip activations, walk.

The big-M relaxation is solved once; its input is the first local-search
start. Then, repeatedly: sweep the layers in order, and within a layer
pick not-yet-tried neurons at random with probability proportional to
chi + delta, where chi measures how far the neuron's relaxed binary sits
from its actual activation state at the last relaxation solution. Each
pick pins the binary to the opposite state; if the relaxation stays
feasible the new solution seeds another local search, otherwise the pin
is dropped and the previous solution kept. After a full sweep all pins
are removed and the process starts over, until the budget runs out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import linprog as lp
from .formulations import (
    InfeasibleDomainError,
    InputDomain,
    Objective,
    RelaxationModel,
    build_relaxation,
    domain_bounds,
)
from .network import Network, forward
from .walk import WalkConfig, WalkResult, local_search


class SolverFailureError(RuntimeError):
    """The relaxation could not be solved and fallbacks are disabled."""


@dataclass
class GenConfig:
    delta: float = 0.1
    seed: int = 0
    time_limit: float | None = None      # wall-clock seconds
    max_outer_iters: int | None = None   # deterministic alternative
    fallback_random_starts: bool = True

    def __post_init__(self):
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if self.time_limit is None and self.max_outer_iters is None:
            raise ValueError("set a time limit or an outer-iteration budget")
        if self.time_limit is not None and not self.time_limit > 0.0:
            raise ValueError("time limit must be positive")
        if self.max_outer_iters is not None and self.max_outer_iters < 0:
            raise ValueError("outer-iteration budget must be nonnegative")


@dataclass
class Provenance:
    outer_iter: int
    layer: int | None
    flip_count: int
    walk_iterations: int


@dataclass
class Incumbent:
    x: np.ndarray
    value: float
    provenance: Provenance
    timestamp: float


def chi_scores(active: np.ndarray, zbar: np.ndarray,
               unfixed) -> np.ndarray:
    """Flip scores for one layer: 1 - zbar for active neurons, zbar for
    inactive ones, restricted to the not-yet-tried indices."""
    active = np.asarray(active, dtype=bool)
    zbar = np.asarray(zbar, dtype=float)
    idx = np.asarray(list(unfixed), dtype=int)
    return np.where(active[idx], 1.0 - zbar[idx], zbar[idx])


def pick_neuron(chi: np.ndarray, delta: float,
                rng: np.random.Generator) -> int:
    """Categorical draw with P(i) proportional to chi_i + delta; returns
    the position within `chi`."""
    chi = np.asarray(chi, dtype=float)
    if chi.shape[0] == 0:
        raise ValueError("cannot pick from an empty candidate set")
    weights = chi + delta
    total = float(np.sum(weights))
    if not total > 0.0:
        raise ValueError("selection weights must have positive mass")
    return int(rng.choice(chi.shape[0], p=weights / total))


def run_generator(net: Network, domain: InputDomain, obj: Objective,
                  gen_cfg: GenConfig, walk_cfg: WalkConfig | None = None,
                  on_incumbent=None, on_walk=None,
                  relaxation: RelaxationModel | None = None) -> Incumbent:
    """Run the restart generator until its budget is exhausted and return
    the best point found.

    `on_incumbent` fires on every improvement; `on_walk` after every
    completed local search. A caller may inject a prebuilt relaxation.
    """
    walk_cfg = walk_cfg or WalkConfig()
    rng = np.random.default_rng(gen_cfg.seed)
    started = time.monotonic()

    def time_left() -> bool:
        if gen_cfg.time_limit is None:
            return True
        return time.monotonic() - started < gen_cfg.time_limit

    incumbent: Incumbent | None = None

    def launch(x0: np.ndarray, outer: int, layer: int | None,
               flips: int) -> WalkResult:
        nonlocal incumbent
        result = local_search(net, domain, obj, x0, walk_cfg)
        if on_walk is not None:
            on_walk(result)
        if incumbent is None or result.best_value > incumbent.value:
            incumbent = Incumbent(
                x=result.best_x, value=result.best_value,
                provenance=Provenance(outer, layer, flips, result.iterations),
                timestamp=time.time())
            if on_incumbent is not None:
                on_incumbent(incumbent)
        return result

    if relaxation is None:
        relaxation = build_relaxation(net, domain, obj,
                                      domain_bounds(net, domain))
    outcome = lp.solve_lp(relaxation.lp_model)
    if outcome.status == lp.INFEASIBLE:
        raise InfeasibleDomainError("the relaxation is infeasible: empty domain")
    if outcome.status != lp.OPTIMAL:
        if not gen_cfg.fallback_random_starts:
            raise SolverFailureError(
                f"relaxation solve returned {outcome.status}")
        # no usable relaxation: walk from uniform domain samples instead
        outer = 0
        while True:
            outer += 1
            launch(domain.sample(rng), outer=outer, layer=None, flips=0)
            if not time_left():
                break
            if (gen_cfg.max_outer_iters is not None
                    and outer >= max(gen_cfg.max_outer_iters, 1)):
                break
        assert incumbent is not None
        return incumbent

    x_tilde = relaxation.x_values(outcome.x)
    z_tilde = relaxation.z_values(outcome.x)
    launch(domain.clip(x_tilde), outer=0, layer=None, flips=0)

    n_hidden_layers = len(net.hidden_layers)
    outer = 0
    while time_left():
        if (gen_cfg.max_outer_iters is not None
                and outer >= gen_cfg.max_outer_iters):
            break
        outer += 1
        xbar, zbar = x_tilde, z_tilde
        flips = 0
        for li in range(n_hidden_layers):
            unfixed = list(range(net.hidden_layers[li].size))
            while unfixed and time_left():
                trace = forward(net, xbar)
                active = trace.pre[li] > 0.0
                chi = chi_scores(active, zbar[li], unfixed)
                pos = pick_neuron(chi, gen_cfg.delta, rng)
                k = unfixed.pop(pos)
                state = 0 if active[k] else 1
                relaxation.fix_activation(li, k, state)
                outcome = lp.solve_lp(relaxation.lp_model)
                if outcome.status == lp.OPTIMAL:
                    xbar = relaxation.x_values(outcome.x)
                    zbar = relaxation.z_values(outcome.x)
                    flips += 1
                    launch(domain.clip(xbar), outer, li, flips)
                else:
                    relaxation.unfix_activation(li, k)
        relaxation.clear_all_fixings()

    assert incumbent is not None
    return incumbent
