"""RP selection algorithms: random, DDVCA, AKC-variant, tabu and VNS."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._accel import REL_TOL
from .graph import Graph, GraphError
from .metrics import (CandidateEvaluator, FitnessWeights, MulticastGroup, QosBounds,
                      TreeEvaluation, UnreachableMember)

ALGORITHMS = ("random", "ddvca", "akc-variant", "tabu", "vns")


class NoEligibleRp(GraphError):
    def __init__(self):
        super().__init__("no candidate RP reaches every group member")


@dataclass(frozen=True)
class VnsConfig:
    """Tunables shared by the VNS and tabu selectors.

    ``None`` iteration caps resolve against the instance size: total
    ``100 * ceil(log2 |N|)``, local search ``|N|``.
    """

    k_max: int = 4
    max_total_iters: int | None = None
    max_stable_iters: int = 10
    local_search: str = "hill_climb"
    local_search_iters: int | None = None
    tabu_tenure: int = 5
    rng_seed: int = 0
    initial: str = "bootstrap_hash"
    given_node: int | None = None

    def __post_init__(self):
        if self.k_max < 1 or self.max_stable_iters < 1 or self.tabu_tenure < 1:
            raise ValueError("k_max, max_stable_iters and tabu_tenure must be >= 1")
        for cap in (self.max_total_iters, self.local_search_iters):
            if cap is not None and cap < 1:
                raise ValueError("iteration caps must be >= 1")
        if self.local_search not in ("hill_climb", "tabu"):
            raise ValueError(f"unknown local search {self.local_search!r}")
        if self.initial not in ("bootstrap_hash", "random", "given"):
            raise ValueError(f"unknown initial solution rule {self.initial!r}")
        if self.initial == "given" and self.given_node is None:
            raise ValueError("initial='given' requires given_node")

    def total_cap(self, n: int) -> int:
        if self.max_total_iters is not None:
            return self.max_total_iters
        return 100 * max(1, math.ceil(math.log2(max(n, 1))))

    def ls_cap(self, n: int) -> int:
        return self.local_search_iters if self.local_search_iters is not None else max(n, 1)


@dataclass(frozen=True)
class Candidate:
    node: int
    eval: TreeEvaluation


@dataclass(frozen=True)
class SelectionResult:
    rp: int
    eval: TreeEvaluation
    iterations_used: int
    trace: tuple = field(default_factory=tuple)  # (iteration, k, incumbent, fitness)

    def trace_csv(self) -> str:
        rows = ["iter,k,incumbent,fitness"]
        rows += [f"{i},{k},{v},{f!r}" for i, k, v, f in self.trace]
        return "\n".join(rows) + "\n"


def neighborhood(g: Graph, s: int, j: int) -> list[int]:
    """Nodes reachable from ``s`` by 1..j hops, ascending, ``s`` excluded.

    N_1 is the successor set; N_j unions the closed neighbourhoods of N_{j-1}.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    layer = set(g.successors(s))
    for _ in range(j - 1):
        nxt = set(layer)
        for x in layer:
            nxt.update(g.successors(x))
        if nxt == layer:
            break
        layer = nxt
    layer.discard(s)
    return sorted(layer)


def bootstrap_hash(seed: int, node: int) -> int:
    h = hashlib.blake2b(f"{seed}:{node}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def _tol_eq(a: float, b: float) -> bool:
    return a == b or abs(a - b) <= REL_TOL * max(abs(a), abs(b))


class _Search:
    """One selector run: instance, eligible candidates and memoized evaluations."""

    def __init__(self, g, grp, bounds, weights=None, candidates=None, evaluator=None):
        self.g = g
        self.ev = evaluator or CandidateEvaluator(g, grp, bounds, weights)
        pool = range(g.node_count) if candidates is None else sorted(set(candidates))
        self.pool = set(pool)

    def ok(self, v: int) -> bool:
        return v in self.pool and self.ev(v) is not None

    def key(self, v: int):
        return self.ev.key(v)

    def fitness(self, v: int) -> float:
        return self.ev(v).fitness

    def eligible(self) -> list[int]:
        return [v for v in sorted(self.pool) if self.ev(v) is not None]

    def initial(self, cfg: VnsConfig) -> int:
        if cfg.initial == "given" and self.ok(cfg.given_node):
            return cfg.given_node
        elig = self.eligible()
        if not elig:
            raise NoEligibleRp()
        if cfg.initial == "random":
            return elig[int(np.random.default_rng(cfg.rng_seed).integers(len(elig)))]
        return max(elig, key=lambda v: (bootstrap_hash(cfg.rng_seed, v), -v))

    def neighbors(self, v: int, j: int) -> list[int]:
        return [x for x in neighborhood(self.g, v, j) if self.ok(x)]

    def result(self, rp, iters, trace) -> SelectionResult:
        return SelectionResult(rp, self.ev(rp), iters, tuple(trace))


def select_random(g: Graph, grp: MulticastGroup, bounds: QosBounds, seed: int = 0,
                  weights: FitnessWeights | None = None,
                  candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    """Uniform draw over eligible nodes (every node on a connected graph)."""
    S = _Search(g, grp, bounds, weights, candidates, evaluator)
    pool = sorted(S.pool)
    rng = np.random.default_rng(seed)
    # redraw until the pick can serve the group; draw order is seed-determined
    order = rng.permutation(len(pool))
    for i in order:
        if S.ok(pool[i]):
            rp = pool[i]
            return S.result(rp, 1, [(0, 0, rp, S.fitness(rp))])
    raise NoEligibleRp()


def _exhaustive(S: _Search):
    evals = {v: S.ev(v) for v in S.eligible()}
    if not evals:
        raise NoEligibleRp()
    a = S.ev.bounds.delay_bound
    feasible = {v: e for v, e in evals.items() if e.max_delay <= a}
    return evals, feasible


def _min_variation_set(evals, exact=False):
    best = min(e.delay_variation for e in evals.values())
    same = (lambda x: x == best) if exact else (lambda x: _tol_eq(x, best))
    return {v: e for v, e in evals.items() if same(e.delay_variation)}


def select_ddvca(g: Graph, grp: MulticastGroup, bounds: QosBounds,
                 weights: FitnessWeights | None = None,
                 candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    """Minimum delay variation among delay-bounded candidates.

    Ties (exact equality) go to lower cost, then lower node id. With no candidate inside the
    delay bound the least-max-delay node is returned (its evaluation is
    flagged infeasible).
    """
    S = _Search(g, grp, bounds, weights, candidates, evaluator)
    evals, feasible = _exhaustive(S)
    if feasible:
        tied = _min_variation_set(feasible, exact=True)
        rp = min(tied, key=lambda v: (tied[v].cost, v))
    else:
        rp = min(evals, key=lambda v: (evals[v].max_delay, evals[v].cost, v))
    return S.result(rp, len(evals), [(0, 0, rp, evals[rp].fitness)])


def select_akc(g: Graph, grp: MulticastGroup, bounds: QosBounds,
               weights: FitnessWeights | None = None,
               candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    """Among the minimum-variation candidates pick the smallest max delay."""
    S = _Search(g, grp, bounds, weights, candidates, evaluator)
    evals, feasible = _exhaustive(S)
    tied = _min_variation_set(feasible or evals)
    rp = min(tied, key=lambda v: (tied[v].max_delay, tied[v].cost, v))
    return S.result(rp, len(evals), [(0, 0, rp, evals[rp].fitness)])


def _hill_climb(S: _Search, start: int, iters: int) -> int:
    cur = start
    for _ in range(iters):
        nbrs = S.neighbors(cur, 1)
        if not nbrs:
            break
        best = min(nbrs, key=lambda v: (S.key(v), v))
        if S.key(best) < S.key(cur):
            cur = best
        else:
            break
    return cur


def local_search_hill_climb(g: Graph, grp: MulticastGroup, bounds: QosBounds, start: int,
                            iters: int, weights: FitnessWeights | None = None,
                            evaluator=None) -> Candidate:
    """Best-improvement descent over one-hop neighbours."""
    S = _Search(g, grp, bounds, weights, None, evaluator)
    if not S.ok(start):
        raise UnreachableMember(start, start, "start")
    v = _hill_climb(S, start, iters)
    return Candidate(v, S.ev(v))


def _tabu_walk(S: _Search, start: int, tenure: int, total_cap: int, stable_cap: int):
    cur = best = start
    tabu: list[int] = []
    trace = [(0, 0, start, S.fitness(start))]
    it = stable = 0
    while it < total_cap and stable < stable_cap:
        it += 1
        moves = [v for v in S.neighbors(cur, 1) if v not in tabu]
        if moves:
            nxt = min(moves, key=lambda v: (S.key(v), v))
            tabu.append(cur)
            if len(tabu) > tenure:
                tabu.pop(0)
            cur = nxt
        if S.key(cur) < S.key(best):
            best = cur
            stable = 0
            trace.append((it, 1, best, S.fitness(best)))
        else:
            stable += 1
    return best, it, trace


def select_tabu(g: Graph, grp: MulticastGroup, bounds: QosBounds, cfg: VnsConfig | None = None,
                weights: FitnessWeights | None = None,
                candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    """Tabu walk over one-hop moves with a FIFO list of departed nodes."""
    cfg = cfg or VnsConfig()
    S = _Search(g, grp, bounds, weights, candidates, evaluator)
    start = S.initial(cfg)
    n = g.node_count
    best, it, trace = _tabu_walk(S, start, cfg.tabu_tenure, cfg.total_cap(n), cfg.max_stable_iters)
    return S.result(best, it, trace)


def select_vns(g: Graph, grp: MulticastGroup, bounds: QosBounds, cfg: VnsConfig | None = None,
               weights: FitnessWeights | None = None,
               candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    """Variable neighbourhood search for the RP.

    Shake to a random node of N_k(S), descend with the configured local
    search, and restart from k=1 on improvement. Outer passes stop after
    ``max_stable_iters`` passes without improvement or when the total
    iteration budget runs out.
    """
    cfg = cfg or VnsConfig()
    S = _Search(g, grp, bounds, weights, candidates, evaluator)
    n = g.node_count
    total_cap, ls_cap = cfg.total_cap(n), cfg.ls_cap(n)
    rng = np.random.default_rng(cfg.rng_seed)

    def descend(v):
        if cfg.local_search == "tabu":
            return _tabu_walk(S, v, cfg.tabu_tenure, ls_cap, ls_cap)[0]
        return _hill_climb(S, v, ls_cap)

    s = S.initial(cfg)
    trace = [(0, 0, s, S.fitness(s))]
    s0 = descend(s)
    if S.key(s0) < S.key(s):
        s = s0
        trace.append((0, 0, s, S.fitness(s)))

    total = stable = 0
    while stable < cfg.max_stable_iters and total < total_cap:
        last = S.key(s)
        k = 1
        while k <= cfg.k_max and total < total_cap:
            shell = S.neighbors(s, k)
            if not shell:
                k += 1
                continue
            shaken = shell[int(rng.integers(len(shell)))]
            local = descend(shaken)
            total += 1
            if S.key(local) < S.key(s):
                s = local
                k = 1
                trace.append((total, k, s, S.fitness(s)))
            else:
                k += 1
        stable = 0 if S.key(s) < last else stable + 1
    return S.result(s, total, trace)


def run_selector(algo: str, g: Graph, grp: MulticastGroup, bounds: QosBounds,
                 cfg: VnsConfig | None = None, weights: FitnessWeights | None = None,
                 candidates: Iterable[int] | None = None, evaluator=None) -> SelectionResult:
    cfg = cfg or VnsConfig()
    kw = dict(weights=weights, candidates=candidates, evaluator=evaluator)
    if algo == "random":
        return select_random(g, grp, bounds, cfg.rng_seed, **kw)
    if algo == "ddvca":
        return select_ddvca(g, grp, bounds, **kw)
    if algo in ("akc-variant", "akc"):
        return select_akc(g, grp, bounds, **kw)
    if algo == "tabu":
        return select_tabu(g, grp, bounds, cfg, **kw)
    if algo == "vns":
        return select_vns(g, grp, bounds, cfg, **kw)
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
