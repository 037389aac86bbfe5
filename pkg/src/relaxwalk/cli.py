"""Command-line harness: single runs, seeded random-network experiment
grids, and the optimal-adversary problem. Results are machine readable
(JSON run records plus CSV incumbent timelines).

Exit codes: 0 ok, 1 usage/input error, 2 infeasible domain, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .exact import branch_and_bound, enumerate_regions_optimize
from .formulations import InfeasibleDomainError, InputDomain, Objective
from .generator import GenConfig, SolverFailureError, run_generator
from .network import Network, load_network, random_network, save_network
from .walk import WalkConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3

# stable per-method stream codes so adding a method never shifts the
# random streams of the existing ones
_METHOD_CODE = {"rw": 0, "enum": 1, "bnb": 2}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


class _UsageError(ValueError):
    pass


def _parse_objective(spec: str, output_dim: int) -> Objective:
    if spec.startswith("output:"):
        k = int(spec.split(":", 1)[1])
        if not 0 <= k < output_dim:
            raise _UsageError(f"output index {k} out of range (m={output_dim})")
        c = np.zeros(output_dim)
        c[k] = 1.0
        return Objective(c)
    c = np.array([float(v) for v in spec.split(",")])
    if c.shape[0] != output_dim:
        raise _UsageError(
            f"objective has {c.shape[0]} entries, network outputs {output_dim}")
    return Objective(c)


def _parse_domain(spec: str, input_dim: int) -> InputDomain:
    if spec.startswith("box:"):
        pairs = spec[4:].split(";")
        if len(pairs) == 1:
            lo_s, hi_s = pairs[0].split(",")
            lo = np.full(input_dim, float(lo_s))
            hi = np.full(input_dim, float(hi_s))
        elif len(pairs) == input_dim:
            lo = np.empty(input_dim)
            hi = np.empty(input_dim)
            for i, p in enumerate(pairs):
                lo_s, hi_s = p.split(",")
                lo[i], hi[i] = float(lo_s), float(hi_s)
        else:
            raise _UsageError(
                f"box spec has {len(pairs)} pairs, network has {input_dim} inputs")
        return InputDomain(lo, hi)
    if spec.startswith("l1:"):
        path, delta_s = spec[3:].rsplit(",", 1)
        anchor = _load_anchor(path, input_dim)
        delta = float(delta_s)
        return InputDomain(anchor - delta, anchor + delta,
                           l1_anchor=anchor, l1_radius=delta)
    raise _UsageError(f"unknown domain spec {spec!r} (use box:... or l1:...)")


def _load_anchor(path: str, input_dim: int) -> np.ndarray:
    with open(path) as fh:
        data = json.load(fh)
    anchor = np.asarray(data, dtype=float)
    if anchor.shape != (input_dim,):
        raise _UsageError(
            f"anchor has shape {anchor.shape}, expected ({input_dim},)")
    return anchor


def _load_net(path: str) -> Network:
    try:
        with open(path) as fh:
            return load_network(fh)
    except FileNotFoundError:
        raise _UsageError(f"network file not found: {path}")
    except (ValueError, json.JSONDecodeError) as err:
        raise _UsageError(f"bad network file {path}: {err}")


def _run_method(method, net, domain, obj, *, seed, time_limit, iters, eps,
                delta, max_patterns, max_nodes):
    """Dispatch one run; returns (final_value, termination, timeline,
    local_search_count, best_x)."""
    timeline = []
    started = time.monotonic()

    def note(elapsed, value):
        timeline.append((elapsed, float(value)))

    if method == "rw":
        walk_counter = {"n": 0}

        def on_walk(_):
            walk_counter["n"] += 1

        gen_cfg = GenConfig(delta=delta, seed=seed, time_limit=time_limit,
                            max_outer_iters=iters)
        walk_cfg = WalkConfig(eps=eps)
        incumbent = run_generator(
            net, domain, obj, gen_cfg, walk_cfg,
            on_incumbent=lambda inc: note(time.monotonic() - started, inc.value),
            on_walk=on_walk)
        termination = "outer_iteration_budget" if time_limit is None else "time_limit"
        return incumbent.value, termination, timeline, walk_counter["n"], incumbent.x
    if method == "enum":
        result = enumerate_regions_optimize(net, domain, obj, cap=max_patterns,
                                            on_incumbent=note)
        return result.value, result.proof, timeline, 0, result.x
    if method == "bnb":
        result = branch_and_bound(net, domain, obj, node_cap=max_nodes,
                                  time_limit=time_limit, on_incumbent=note)
        return result.value, result.proof, timeline, 0, result.x
    raise _UsageError(f"unknown method {method!r}")


def _write_record(out_path: str | None, record: dict, timeline) -> None:
    text = json.dumps(record, indent=2, sort_keys=True)
    if out_path is None:
        print(text)
        return
    Path(out_path).write_text(text + "\n")
    csv_path = Path(out_path).with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["elapsed_s", "value"])
        for elapsed, value in timeline:
            writer.writerow([repr(float(elapsed)), repr(float(value))])


def _add_run_flags(p, with_domain=True):
    p.add_argument("--network", required=True)
    if with_domain:
        p.add_argument("--objective", required=True,
                       help="comma-separated c vector, or output:k")
        p.add_argument("--domain", required=True,
                       help="box:lo,hi | box:lo1,hi1;lo2,hi2;... | l1:anchor.json,delta")
    p.add_argument("--method", choices=("rw", "enum", "bnb"), default="rw")
    p.add_argument("--time-limit", type=float, default=None,
                   help="wall-clock budget in seconds")
    p.add_argument("--iters", type=int, default=None,
                   help="deterministic outer-iteration budget (rw)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.01,
                   help="region-crossing step factor")
    p.add_argument("--delta-shift", type=float, default=0.1,
                   help="probability shift in neuron selection")
    p.add_argument("--max-patterns", type=int, default=None)
    p.add_argument("--max-nodes", type=int, default=None)
    p.add_argument("--out", default=None, help="JSON output path; a CSV "
                   "incumbent timeline is written next to it")


def _budget(args):
    time_limit, iters = args.time_limit, args.iters
    if args.method == "rw" and time_limit is None and iters is None:
        iters = 10
    return time_limit, iters


def cmd_optimize(args) -> int:
    net = _load_net(args.network)
    obj = _parse_objective(args.objective, net.output_dim)
    domain = _parse_domain(args.domain, net.input_dim)
    time_limit, iters = _budget(args)
    value, termination, timeline, walks, best_x = _run_method(
        args.method, net, domain, obj, seed=args.seed, time_limit=time_limit,
        iters=iters, eps=args.eps, delta=args.delta_shift,
        max_patterns=args.max_patterns, max_nodes=args.max_nodes)
    record = {
        "method": args.method,
        "network": args.network,
        "config": {
            "objective": args.objective,
            "domain": args.domain,
            "seed": args.seed,
            "time_limit": time_limit,
            "iters": iters,
            "eps": args.eps,
            "delta_shift": args.delta_shift,
        },
        "timeline": [[e, v] for e, v in timeline],
        "final_value": value,
        "best_x": [float(v) for v in best_x],
        "local_search_count": walks,
        "termination": termination,
    }
    _write_record(args.out, record, timeline)
    return EXIT_OK


def cmd_random_experiment(args) -> int:
    n0s = [int(v) for v in args.n0.split(",")]
    depths = [int(v) for v in args.depth.split(",")]
    widths = [int(v) for v in args.width.split(",")]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in _METHOD_CODE:
            raise _UsageError(f"unknown method {m!r}")
    rows = []
    configs = [(n0, L, w) for n0 in n0s for L in depths for w in widths]
    for ci, (n0, depth, width) in enumerate(configs):
        for ni in range(args.nets_per_config):
            net_seed = int(np.random.SeedSequence(
                entropy=args.seed, spawn_key=(ci, ni)).generate_state(1)[0])
            net = random_network(n0, depth, width, seed=net_seed)
            domain = InputDomain(np.full(n0, args.box_lo), np.full(n0, args.box_hi))
            obj = Objective(np.eye(net.output_dim)[0])
            for method in methods:
                run_seed = int(np.random.SeedSequence(
                    entropy=args.seed,
                    spawn_key=(ci, ni, 1000 + _METHOD_CODE[method]),
                ).generate_state(1)[0])
                started = time.monotonic()
                value, termination, _, walks, _ = _run_method(
                    method, net, domain, obj, seed=run_seed,
                    time_limit=args.time_limit, iters=args.iters,
                    eps=args.eps, delta=args.delta_shift,
                    max_patterns=args.max_patterns, max_nodes=args.max_nodes)
                rows.append({
                    "n0": n0, "depth": depth, "width": width,
                    "net_seed": net_seed, "method": method,
                    "final_value": repr(float(value)),
                    "local_search_count": walks,
                    "wall_s": f"{time.monotonic() - started:.6f}",
                    "termination": termination,
                })
    fieldnames = ["n0", "depth", "width", "net_seed", "method", "final_value",
                  "local_search_count", "wall_s", "termination"]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_adversary(args) -> int:
    net = _load_net(args.network)
    anchor = _load_anchor(args.anchor, net.input_dim)
    if not (0 <= args.true_class < net.output_dim
            and 0 <= args.target_class < net.output_dim):
        raise _UsageError("class index out of range for the network output")
    c = np.zeros(net.output_dim)
    c[args.target_class] += 1.0
    c[args.true_class] -= 1.0
    obj = Objective(c)
    lo = np.full(net.input_dim, args.box_lo)
    hi = np.full(net.input_dim, args.box_hi)
    if args.delta == 0.0:
        if np.any(anchor < lo) or np.any(anchor > hi):
            raise InfeasibleDomainError("anchor lies outside the input box")
        domain = InputDomain(anchor, anchor)
    else:
        domain = InputDomain(lo, hi, l1_anchor=anchor, l1_radius=args.delta)
    time_limit, iters = _budget(args)
    value, termination, timeline, walks, best_x = _run_method(
        args.method, net, domain, obj, seed=args.seed, time_limit=time_limit,
        iters=iters, eps=args.eps, delta=args.delta_shift,
        max_patterns=args.max_patterns, max_nodes=args.max_nodes)
    record = {
        "method": args.method,
        "network": args.network,
        "config": {
            "anchor": args.anchor,
            "true_class": args.true_class,
            "target_class": args.target_class,
            "delta": args.delta,
            "box": [args.box_lo, args.box_hi],
            "seed": args.seed,
            "time_limit": time_limit,
            "iters": iters,
            "eps": args.eps,
        },
        "timeline": [[e, v] for e, v in timeline],
        "final_value": value,
        "best_x": [float(v) for v in best_x],
        "local_search_count": walks,
        "adversarial_found": bool(value > 0.0),
        "termination": termination,
    }
    _write_record(args.out, record, timeline)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="relaxwalk",
                     description="Optimize linear objectives over trained "
                                 "ReLU networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="run one method on one problem")
    _add_run_flags(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_exp = sub.add_parser("random-experiment",
                           help="seeded grid of random networks")
    p_exp.add_argument("--n0", required=True, help="comma list of input sizes")
    p_exp.add_argument("--depth", required=True, help="comma list of depths")
    p_exp.add_argument("--width", required=True, help="comma list of widths")
    p_exp.add_argument("--nets-per-config", type=int, required=True)
    p_exp.add_argument("--methods", required=True, help="comma list: rw,enum,bnb")
    p_exp.add_argument("--time-limit", type=float, default=None)
    p_exp.add_argument("--iters", type=int, default=None)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--eps", type=float, default=0.01)
    p_exp.add_argument("--delta-shift", type=float, default=0.1)
    p_exp.add_argument("--box-lo", type=float, default=-1.0)
    p_exp.add_argument("--box-hi", type=float, default=1.0)
    p_exp.add_argument("--max-patterns", type=int, default=None)
    p_exp.add_argument("--max-nodes", type=int, default=None)
    p_exp.add_argument("--out", default=None, help="CSV output path")
    p_exp.set_defaults(func=cmd_random_experiment)

    p_adv = sub.add_parser("adversary",
                           help="maximize target-minus-true class margin "
                                "near an anchor input")
    _add_run_flags(p_adv, with_domain=False)
    p_adv.add_argument("--anchor", required=True,
                       help="JSON array of input_dim doubles")
    p_adv.add_argument("--true-class", type=int, required=True)
    p_adv.add_argument("--target-class", type=int, required=True)
    p_adv.add_argument("--delta", type=float, default=5.0,
                       help="L1 budget around the anchor")
    p_adv.add_argument("--box-lo", type=float, default=0.0)
    p_adv.add_argument("--box-hi", type=float, default=1.0)
    p_adv.set_defaults(func=cmd_adversary)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleDomainError as err:
        print(f"infeasible domain: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverFailureError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def write_network_file(net: Network, path: str) -> None:
    """Convenience for scripts/tests: save a network document to disk."""
    Path(path).write_text(json.dumps(save_network(net), indent=2) + "\n")


if __name__ == "__main__":
    sys.exit(main())
