"""Shared-tree construction and the constrained RP objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, GraphError, Path, path_from_sweep, sweep

CSV_HEADER = "instance,algo,rp,cost,max_delay,min_delay,delay_variation,feasible,fitness"


class UnreachableMember(GraphError):
    """A group member cannot reach, or be reached from, the candidate RP."""

    def __init__(self, member: int, rp: int, role: str):
        super().__init__(f"{role} {member} disconnected from rp {rp}")
        self.member = member
        self.rp = rp
        self.role = role


@dataclass(frozen=True)
class MulticastGroup:
    sources: tuple[int, ...]
    receivers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(dict.fromkeys(int(s) for s in self.sources)))
        object.__setattr__(self, "receivers", tuple(dict.fromkeys(int(d) for d in self.receivers)))
        if not self.sources or not self.receivers:
            raise ValueError("group needs at least one source and one receiver")

    def members(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(self.sources + self.receivers))

    def check(self, g: Graph) -> None:
        for x in self.members():
            if not 0 <= x < g.node_count:
                raise GraphError(f"group member {x} not in graph")


@dataclass(frozen=True)
class QosBounds:
    delay_bound: float = math.inf
    variation_bound: float = math.inf

    def __post_init__(self):
        for x in (self.delay_bound, self.variation_bound):
            if not x > 0:
                raise ValueError(f"QoS bounds must be > 0, got {x!r}")


@dataclass(frozen=True)
class FitnessWeights:
    """How an evaluation is scored.

    ``mode="penalty"`` ranks by the penalized fitness; ``"lexicographic"``
    ranks feasible candidates first (by cost), then infeasible ones by fitness.
    ``variation="receivers"`` measures delays from the first source only.
    """

    penalty: float = 1e6
    mode: str = "penalty"
    variation: str = "pairs"

    def __post_init__(self):
        if self.mode not in ("penalty", "lexicographic"):
            raise ValueError(f"unknown comparison mode {self.mode!r}")
        if self.variation not in ("pairs", "receivers"):
            raise ValueError(f"unknown variation population {self.variation!r}")


@dataclass(frozen=True)
class TreeEvaluation:
    cost: float
    max_delay: float
    min_delay: float
    delay_variation: float
    feasible: bool
    fitness: float

    def key(self, weights: FitnessWeights | None = None):
        if weights is not None and weights.mode == "lexicographic":
            return (0, self.cost) if self.feasible else (1, self.fitness)
        return self.fitness

    def csv_row(self, instance: str, algo: str, rp: int) -> str:
        return ",".join([
            instance, algo, str(rp), repr(self.cost), repr(self.max_delay),
            repr(self.min_delay), repr(self.delay_variation),
            "true" if self.feasible else "false", repr(self.fitness),
        ])


@dataclass(frozen=True)
class MulticastTree:
    rp: int
    source_paths: dict[int, Path]
    receiver_paths: dict[int, Path]
    tree_edges: frozenset = field(default_factory=frozenset)

    def nodes(self) -> set[int]:
        out = {self.rp}
        for p in self.receiver_paths.values():
            out.update(p.nodes)
        return out


def score(src_delay: Sequence[float], src_cost: Sequence[float],
          rcv_delay: Sequence[float], rcv_cost: Sequence[float],
          bounds: QosBounds, weights: FitnessWeights) -> TreeEvaluation:
    """Score one RP from its per-member path totals.

    Every evaluation path in the package funnels through here so that
    tree-based and table-based evaluation agree bit for bit.
    """
    cost = math.fsum(list(src_cost) + list(rcv_cost))
    srcs = src_delay[:1] if weights.variation == "receivers" else src_delay
    pair = [sd + rd for sd in srcs for rd in rcv_delay]
    hi, lo = max(pair), min(pair)
    var = hi - lo
    a, b = bounds.delay_bound, bounds.variation_bound
    feasible = hi <= a and var <= b
    fitness = (cost + weights.penalty * max(0.0, hi - a) / a
               + weights.penalty * max(0.0, var - b) / b)
    return TreeEvaluation(cost, hi, lo, var, feasible, fitness)


def build_shared_tree(g: Graph, rp: int, grp: MulticastGroup) -> MulticastTree:
    """Sources unicast to ``rp`` on least-delay paths; ``rp`` fans out likewise."""
    grp.check(g)
    src_paths = {}
    for s in grp.sources:
        p = path_from_sweep(s, rp, sweep(g, s))
        if p is None:
            raise UnreachableMember(s, rp, "source")
        src_paths[s] = p
    out = sweep(g, rp)
    rcv_paths = {}
    for d in grp.receivers:
        p = path_from_sweep(rp, d, out)
        if p is None:
            raise UnreachableMember(d, rp, "receiver")
        rcv_paths[d] = p
    edges = frozenset(e for p in rcv_paths.values() for e in p.edges())
    return MulticastTree(rp, src_paths, rcv_paths, edges)


def tree_cost(t: MulticastTree) -> float:
    """Sum of full source-path and receiver-path costs (overlaps counted twice)."""
    return math.fsum([p.total_cost for p in t.source_paths.values()]
                     + [p.total_cost for p in t.receiver_paths.values()])


def tree_edge_cost(t: MulticastTree, g: Graph) -> float:
    """Cost of the deduplicated receiver-side edges plus the source paths."""
    return math.fsum([g.edge(u, v).cost for u, v in sorted(t.tree_edges)]
                     + [p.total_cost for p in t.source_paths.values()])


def end_to_end_delays(t: MulticastTree) -> dict[tuple[int, int], float]:
    return {
        (s, d): sp.total_delay + rpth.total_delay
        for s, sp in t.source_paths.items()
        for d, rpth in t.receiver_paths.items()
    }


def evaluate(g: Graph, rp: int, grp: MulticastGroup, b: QosBounds,
             w: FitnessWeights | None = None) -> TreeEvaluation:
    """Evaluate ``rp`` as the group's core; raises ``UnreachableMember``."""
    w = w or FitnessWeights()
    t = build_shared_tree(g, rp, grp)
    return score(
        [p.total_delay for p in t.source_paths.values()],
        [p.total_cost for p in t.source_paths.values()],
        [p.total_delay for p in t.receiver_paths.values()],
        [p.total_cost for p in t.receiver_paths.values()],
        b, w,
    )


class CandidateEvaluator:
    """Memoized evaluation of many candidate RPs on one instance.

    Source sweeps are computed once; the fan-out sweep from each candidate is
    computed on first use.
    """

    def __init__(self, g: Graph, grp: MulticastGroup, bounds: QosBounds,
                 weights: FitnessWeights | None = None):
        grp.check(g)
        self.g = g
        self.grp = grp
        self.bounds = bounds
        self.weights = weights or FitnessWeights()
        self._src = [sweep(g, s)[:2] for s in grp.sources]
        self._rcv = np.asarray(grp.receivers, np.int64)
        self._cache: dict[int, TreeEvaluation | None] = {}
        self.evaluations = 0

    def __call__(self, rp: int) -> TreeEvaluation | None:
        """Evaluation of ``rp``, or ``None`` if some member is disconnected from it."""
        if rp in self._cache:
            return self._cache[rp]
        self.evaluations += 1
        src_d = [float(d[rp]) for d, _ in self._src]
        ev = None
        if all(math.isfinite(x) for x in src_d):
            dist, csum, _ = sweep(self.g, rp)
            rd = dist[self._rcv]
            if np.all(np.isfinite(rd)):
                ev = score(src_d, [float(c[rp]) for _, c in self._src],
                           rd.tolist(), csum[self._rcv].tolist(),
                           self.bounds, self.weights)
        self._cache[rp] = ev
        return ev

    def key(self, rp: int):
        ev = self(rp)
        return math.inf if ev is None else ev.key(self.weights)

    def all(self, candidates: Iterable[int] | None = None) -> dict[int, TreeEvaluation]:
        cands = range(self.g.node_count) if candidates is None else candidates
        out = {}
        for v in cands:
            ev = self(v)
            if ev is not None:
                out[v] = ev
        return out


def auto_bounds(g: Graph, grp: MulticastGroup, factor: float = 1.5,
                candidates: Iterable[int] | None = None,
                weights: FitnessWeights | None = None) -> QosBounds:
    """``factor`` times the best achievable max-delay and delay variation.

    The variation minimum is taken over candidates already inside the delay
    bound, so the minimum-variation one among them is always feasible. A zero
    minimum (e.g. one source, one receiver) leaves that bound disabled.
    """
    w = weights or FitnessWeights()
    ev = CandidateEvaluator(g, grp, QosBounds(), FitnessWeights(w.penalty, "penalty", w.variation))
    evals = list(ev.all(candidates).values())
    if not evals:
        raise UnreachableMember(grp.members()[0], -1, "member")
    a = factor * min(e.max_delay for e in evals)
    b = factor * min(e.delay_variation for e in evals if e.max_delay <= a)
    return QosBounds(a if a > 0 else math.inf, b if b > 0 else math.inf)
