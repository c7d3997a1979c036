"""Command-line entry point: ``rpselect {gen,select,compare,simulate}``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path as FsPath

from . import __version__
from .bench import ExperimentConfig, run_compare, run_simulate
from .graph import GraphError, read_edge_list, write_edge_list
from .metrics import FitnessWeights, QosBounds, auto_bounds
from .selectors import ALGORITHMS, VnsConfig, run_selector
from .topology import (WaxmanParams, largest_connected_component, read_group, sample_group,
                       waxman_generate, write_group)

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="base RNG seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="JSON config file (flags override it)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _load_config(path) -> dict:
    if path is None:
        return {}
    return json.loads(FsPath(path).read_text())


def cmd_gen(a) -> int:
    conf = _load_config(a.config)
    seed = a.seed if a.seed is not None else conf.get("seed", 0)
    p = WaxmanParams(
        a.n, a.alpha, a.beta, seed,
        tuple(a.cost_range), tuple(a.delay_range), a.symmetric_weights,
    )
    raw, _ = waxman_generate(p)
    g = raw
    if not a.keep_disconnected:
        g, _ = largest_connected_component(raw)
    grp = sample_group(g, a.fraction, min(a.sources, g.node_count), seed)
    out = FsPath(a.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / f"{a.name}.edges")
    write_group(grp, out / f"{a.name}.group")
    print(f"nodes={g.node_count} edges={g.edge_count} mean_degree={g.mean_degree():.4f} "
          f"raw_nodes={raw.node_count} raw_mean_degree={raw.mean_degree():.4f}")
    return EXIT_OK


def cmd_select(a) -> int:
    try:
        g = read_edge_list(a.topology)
        grp = read_group(a.group)
        cands = None
        if a.candidates:
            cands = [int(x) for x in FsPath(a.candidates).read_text().split()]
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    w = FitnessWeights(a.penalty, a.mode, a.variation)
    if a.alpha is None and a.beta is None:
        b = auto_bounds(g, grp, 1.5, candidates=cands, weights=w)
    else:
        auto = auto_bounds(g, grp, 1.5, candidates=cands, weights=w)
        b = QosBounds(auto.delay_bound if a.alpha is None else a.alpha,
                      auto.variation_bound if a.beta is None else a.beta)
    seed = a.seed if a.seed is not None else 0
    cfg = VnsConfig(
        k_max=a.k_max, max_total_iters=a.max_iters, max_stable_iters=a.stable_iters,
        local_search=a.local_search, local_search_iters=a.ls_iters, tabu_tenure=a.tabu_tenure,
        rng_seed=seed, initial="given" if a.given is not None else a.initial,
        given_node=a.given,
    )
    res = run_selector(a.algo, g, grp, b, cfg, w, cands)
    print(res.eval.csv_row(FsPath(a.topology).stem, a.algo, res.rp))
    if a.trace_out:
        FsPath(a.trace_out).write_text(res.trace_csv())
    return EXIT_OK if res.eval.feasible else EXIT_INFEASIBLE


def _experiment(a, session: bool) -> ExperimentConfig:
    d = _load_config(a.config)
    over = {
        "network_sizes": a.sizes, "instances_per_size": a.instances,
        "algorithms": a.algorithms, "group_fraction": a.fraction, "n_sources": a.sources,
        "waxman_alpha": a.waxman_alpha, "waxman_beta": a.waxman_beta, "seed": a.seed,
        "bounds_policy": a.bounds,
    }
    d.update({k: v for k, v in over.items() if v is not None})
    if a.qos_alpha is not None or a.qos_beta is not None:
        d["bounds_policy"] = "fixed"
        d["fixed_bounds"] = [a.qos_alpha if a.qos_alpha is not None else math.inf,
                             a.qos_beta if a.qos_beta is not None else math.inf]
    if session:
        tp = dict(d.get("session") or {})
        for key in ("duration", "join_rate", "leave_rate", "handover_rate", "link_fail_rate",
                    "node_fail_rate", "repair_time", "timer_period"):
            v = getattr(a, key)
            if v is not None:
                tp[key] = v
        d["session"] = tp
        if a.mobility is not None:
            d["mobility_sweep"] = a.mobility
        rec = dict(d.get("recovery") or {})
        if a.timer_only:
            rec["event_driven"] = False
        if a.threshold is not None:
            rec["degradation_threshold"] = a.threshold
        if a.recovery_delay is not None:
            rec["recovery_delay"] = a.recovery_delay
        d["recovery"] = rec
    return ExperimentConfig.from_dict(d)


def cmd_compare(a) -> int:
    try:
        cfg = _experiment(a, session=False)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = run_compare(cfg, a.out or ".", a.jobs)
    rows = [l for l in out["results"].splitlines() if l and not l.startswith("#")]
    print(f"wrote {len(rows) - 1} rows to {FsPath(a.out or '.') / 'results.csv'}")
    return EXIT_OK


def cmd_simulate(a) -> int:
    try:
        cfg = _experiment(a, session=True)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = run_simulate(cfg, a.out or ".", a.jobs)
    print(f"wrote {len(out['records'])} sessions to {FsPath(a.out or '.') / 'sessions.jsonl'}")
    return EXIT_OK


def _experiment_flags(p):
    p.add_argument("--sizes", type=_ints, default=None, help="comma-separated network sizes")
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--algorithms", type=lambda s: s.split(","), default=None,
                   help=f"subset of {','.join(ALGORITHMS)}")
    p.add_argument("--fraction", type=float, default=None, help="receiver fraction of |N|")
    p.add_argument("--sources", type=int, default=None)
    p.add_argument("--waxman-alpha", type=float, default=None)
    p.add_argument("--waxman-beta", type=float, default=None)
    p.add_argument("--bounds", choices=["auto_1p5x", "fixed", "unbounded"], default=None)
    p.add_argument("--alpha", dest="qos_alpha", type=float, default=None, help="fixed delay bound")
    p.add_argument("--beta", dest="qos_beta", type=float, default=None,
                   help="fixed delay-variation bound")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rpselect", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate a Waxman topology and a group")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--cost-range", type=float, nargs=2, default=[1.0, 10.0])
    p.add_argument("--delay-range", type=float, nargs=2, default=[1.0, 10.0])
    p.add_argument("--symmetric-weights", action="store_true")
    p.add_argument("--keep-disconnected", action="store_true",
                   help="skip the largest-component repair")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--sources", type=int, default=1)
    p.add_argument("--name", default="topology")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("select", help="select an RP on one topology")
    _common(p)
    p.add_argument("--topology", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--algo", choices=ALGORITHMS, default="vns")
    p.add_argument("--alpha", type=float, default=None, help="delay bound (default: auto)")
    p.add_argument("--beta", type=float, default=None, help="variation bound (default: auto)")
    p.add_argument("--penalty", type=float, default=1e6)
    p.add_argument("--mode", choices=["penalty", "lexicographic"], default="penalty")
    p.add_argument("--variation", choices=["pairs", "receivers"], default="pairs")
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--stable-iters", type=int, default=10)
    p.add_argument("--local-search", choices=["hill_climb", "tabu"], default="hill_climb")
    p.add_argument("--ls-iters", type=int, default=None)
    p.add_argument("--tabu-tenure", type=int, default=5)
    p.add_argument("--initial", choices=["bootstrap_hash", "random"], default="bootstrap_hash")
    p.add_argument("--given", type=int, default=None, help="start from this node")
    p.add_argument("--candidates", default=None, help="file listing eligible RP ids")
    p.add_argument("--trace-out", default=None, help="write iter,k,incumbent,fitness rows")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", help="multi-algorithm benchmark sweep")
    _common(p)
    _experiment_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="dynamic-session sweep")
    _common(p)
    _experiment_flags(p)
    for key in ("duration", "join-rate", "leave-rate", "handover-rate", "link-fail-rate",
                "node-fail-rate", "repair-time", "timer-period"):
        p.add_argument(f"--{key}", type=float, default=None)
    p.add_argument("--mobility", type=_floats, default=None,
                   help="comma-separated mobility_speed_proxy sweep")
    p.add_argument("--timer-only", action="store_true", help="disable event-driven reselection")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--recovery-delay", type=float, default=None)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
