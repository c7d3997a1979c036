"""Benchmark sweeps: multi-algorithm comparison and session simulation."""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path as FsPath

import numpy as np

from .metrics import CSV_HEADER, FitnessWeights, QosBounds, auto_bounds
from .selectors import ALGORITHMS, VnsConfig, run_selector
from .session import RecoveryConfig, TraceParams, generate_trace, run_session
from .topology import WaxmanParams, largest_connected_component, sample_group, waxman_generate


@dataclass
class ExperimentConfig:
    network_sizes: list = field(default_factory=lambda: [20, 40, 60, 80, 100])
    instances_per_size: int = 30
    waxman_alpha: float = 0.2
    waxman_beta: float = 0.2
    cost_range: list = field(default_factory=lambda: [1.0, 10.0])
    delay_range: list = field(default_factory=lambda: [1.0, 10.0])
    symmetric_weights: bool = False
    group_fraction: float = 0.1
    n_sources: int = 1
    bounds_policy: str = "auto_1p5x"  # auto_1p5x | fixed | unbounded
    fixed_bounds: list = field(default_factory=lambda: [math.inf, math.inf])
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    seed: int = 0
    penalty: float = 1e6
    k_max: int = 4
    max_stable_iters: int = 10
    local_search: str = "hill_climb"
    tabu_tenure: int = 5
    session: dict | None = None
    mobility_sweep: list = field(default_factory=lambda: [1.0])
    recovery: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.network_sizes or min(self.network_sizes) < 2:
            raise ValueError("network sizes must be >= 2")
        if self.instances_per_size < 1:
            raise ValueError("instances_per_size must be >= 1")
        if not self.algorithms:
            raise ValueError("at least one algorithm required")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")
        if self.bounds_policy not in ("auto_1p5x", "fixed", "unbounded"):
            raise ValueError(f"unknown bounds policy {self.bounds_policy!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)


def instance_seed(base: int, size: int, idx: int) -> int:
    return int(np.random.SeedSequence([base, size, idx]).generate_state(1, np.uint64)[0] >> 1)


def instance_name(size: int, idx: int) -> str:
    return f"n{size:03d}-i{idx:03d}"


def make_instance(cfg: ExperimentConfig, size: int, idx: int):
    seed = instance_seed(cfg.seed, size, idx)
    g, _ = waxman_generate(WaxmanParams(
        size, cfg.waxman_alpha, cfg.waxman_beta, seed,
        tuple(cfg.cost_range), tuple(cfg.delay_range), cfg.symmetric_weights))
    g, _ = largest_connected_component(g)
    grp = sample_group(g, cfg.group_fraction, min(cfg.n_sources, g.node_count), seed)
    w = FitnessWeights(cfg.penalty)
    if cfg.bounds_policy == "auto_1p5x":
        b = auto_bounds(g, grp, 1.5, weights=w)
    elif cfg.bounds_policy == "fixed":
        b = QosBounds(*map(float, cfg.fixed_bounds))
    else:
        b = QosBounds()
    return seed, g, grp, b


def _vns_cfg(cfg: ExperimentConfig, seed: int) -> VnsConfig:
    return VnsConfig(k_max=cfg.k_max, max_stable_iters=cfg.max_stable_iters,
                     local_search=cfg.local_search, tabu_tenure=cfg.tabu_tenure, rng_seed=seed)


def _clean(msg) -> str:
    return str(msg).replace(",", ";").replace("\n", " ")


def _compare_instance(args):
    cfg, size, idx = args
    name = instance_name(size, idx)
    try:
        seed, g, grp, b = make_instance(cfg, size, idx)
    except Exception as exc:  # noqa: BLE001 - recorded as error rows
        return name, None, [(a, None, f"{name},{a},error,,,,,,{_clean(exc)}") for a in cfg.algorithms]
    rows = []
    for algo in cfg.algorithms:
        try:
            res = run_selector(algo, g, grp, b, _vns_cfg(cfg, seed), FitnessWeights(cfg.penalty))
            rows.append((algo, res, res.eval.csv_row(name, algo, res.rp)))
        except Exception as exc:  # noqa: BLE001
            rows.append((algo, None, f"{name},{algo},error,,,,,,{_clean(exc)}"))
    return name, b, rows


def _pmap(fn, items, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items, chunksize=1))
    return [fn(x) for x in items]


def _header(kind: str, cfg: ExperimentConfig) -> list[str]:
    return [
        f"# rpselect {kind}",
        f"# generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        f"# config: {cfg.to_json()}",
    ]


def _stats(xs):
    xs = [x for x in xs if x is not None]
    if not xs:
        return math.nan, math.nan
    return statistics.fmean(xs), (statistics.stdev(xs) if len(xs) > 1 else 0.0)


def run_compare(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> dict:
    """One row per (size, instance, algorithm), plus per-size aggregates.

    Returns a dict with ``results`` / ``aggregates`` CSV texts and the raw
    ``SelectionResult`` objects keyed by (instance, algo).
    """
    cells = [(cfg, s, i) for s in cfg.network_sizes for i in range(cfg.instances_per_size)]
    outputs = sorted(_pmap(_compare_instance, cells, jobs), key=lambda r: r[0])
    head = _header("compare", cfg)
    data, results = [], {}
    for name, b, rows in outputs:
        if b is not None:
            head.append(f"# bounds {name} {b.delay_bound!r} {b.variation_bound!r}")
        for algo, res, line in rows:
            data.append(line)
            if res is not None:
                results[(name, algo)] = res
    agg = ["size,algo,count,mean_cost,sd_cost,mean_max_delay,sd_max_delay,"
           "mean_delay_variation,sd_delay_variation,mean_fitness,sd_fitness,feasible_rate"]
    for size in cfg.network_sizes:
        for algo in cfg.algorithms:
            evs = [r.eval for (n, a), r in results.items()
                   if a == algo and n.startswith(f"n{size:03d}-")]
            cols = [size, algo, len(evs)]
            for attr in ("cost", "max_delay", "delay_variation", "fitness"):
                cols.extend(_stats([getattr(e, attr) for e in evs]))
            cols.append(statistics.fmean([e.feasible for e in evs]) if evs else math.nan)
            agg.append(",".join(c if isinstance(c, str) else repr(c) for c in cols))
    results_csv = "\n".join(head + [CSV_HEADER] + data) + "\n"
    agg_csv = "\n".join(_header("compare-aggregates", cfg) + agg) + "\n"
    if out_dir is not None:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(results_csv)
        (out / "aggregates.csv").write_text(agg_csv)
    return {"results": results_csv, "aggregates": agg_csv, "selections": results}


def strip_comments(text: str) -> str:
    return "".join(l + "\n" for l in text.splitlines() if not l.startswith("#"))


# -- sessions -----------------------------------------------------------------

def _simulate_instance(args):
    cfg, size, idx = args
    name = instance_name(size, idx)
    seed, g, grp, b = make_instance(cfg, size, idx)
    tp = dict(cfg.session or {})
    pol = RecoveryConfig(**cfg.recovery)
    out = []
    for speed in cfg.mobility_sweep:
        params = TraceParams(**{**tp, "mobility_speed_proxy": float(speed)})
        trace = generate_trace(params, seed, g, grp)
        for algo in cfg.algorithms:
            rec = {"instance": name, "size": size, "algo": algo, "mobility": float(speed),
                   "events": len(trace)}
            try:
                m = run_session(g, grp, trace, algo, _vns_cfg(cfg, seed), pol, b,
                                FitnessWeights(cfg.penalty))
                rec["metrics"] = json.loads(m.to_json())
            except Exception as exc:  # noqa: BLE001
                rec["error"] = str(exc)
            out.append(rec)
    return name, out


def run_simulate(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> dict:
    """Sessions per (size, instance, mobility, algorithm) with aggregates."""
    cells = [(cfg, s, i) for s in cfg.network_sizes for i in range(cfg.instances_per_size)]
    outputs = sorted(_pmap(_simulate_instance, cells, jobs), key=lambda r: r[0])
    records = [rec for _, recs in outputs for rec in recs]
    agg = ["size,mobility,algo,count,mean_disruption,sd_disruption,mean_handover_latency,"
           "mean_reselections,mean_final_fitness,errors"]
    for size in cfg.network_sizes:
        for speed in cfg.mobility_sweep:
            for algo in cfg.algorithms:
                rs = [r for r in records
                      if r["size"] == size and r["mobility"] == float(speed) and r["algo"] == algo]
                ok = [r["metrics"] for r in rs if "metrics" in r]
                dis = _stats([m["disruption_units"] for m in ok])
                lat = [x for m in ok for x in m["handover_latency_proxy"] if x >= 0]
                cols = [size, float(speed), algo, len(ok), *dis,
                        statistics.fmean(lat) if lat else math.nan,
                        _stats([m["reselections"] for m in ok])[0],
                        _stats([m["fitness_trajectory"][-1][1] for m in ok])[0],
                        len(rs) - len(ok)]
                agg.append(",".join(c if isinstance(c, str) else repr(c) for c in cols))
    sessions = "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
    agg_csv = "\n".join(_header("simulate", cfg) + agg) + "\n"
    if out_dir is not None:
        out = FsPath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sessions.jsonl").write_text(sessions)
        (out / "sim_aggregates.csv").write_text(agg_csv)
    return {"records": records, "aggregates": agg_csv}


def mean_disruption(records, algo, mobility, size=None) -> float:
    xs = [r["metrics"]["disruption_units"] for r in records
          if r["algo"] == algo and r["mobility"] == mobility and "metrics" in r
          and (size is None or r["size"] == size)]
    return statistics.fmean(xs)


__all__ = [
    "ExperimentConfig", "make_instance", "run_compare", "run_simulate", "strip_comments",
    "instance_seed", "instance_name", "mean_disruption",
]
