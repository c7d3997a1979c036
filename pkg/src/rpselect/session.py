"""Discrete-event multicast session with RP recovery.

Members carry stable integer ids: the initial sources get ``0..|S|-1`` in
ascending node order, the initial receivers follow, and every join takes the
next free id. Links are undirected for failure purposes: failing ``(u, v)``
removes both directed edges.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path as FsPath

import numpy as np

from .graph import Graph, hop_distances
from .metrics import (FitnessWeights, MulticastGroup, MulticastTree, QosBounds, TreeEvaluation,
                      UnreachableMember, auto_bounds, build_shared_tree, evaluate)
from .selectors import NoEligibleRp, VnsConfig, run_selector

ARITY = {
    "join": 1, "leave": 1, "handover": 3, "link_fail": 2, "link_restore": 2,
    "node_fail": 1, "node_restore": 1, "periodic_timer": 0,
}
CHANGE_KINDS = frozenset(ARITY) - {"periodic_timer"}


class TraceError(ValueError):
    pass


class SessionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SessionEvent:
    time: float
    kind: str
    args: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ARITY:
            raise TraceError(f"unknown event kind {self.kind!r}")
        if len(self.args) != ARITY[self.kind]:
            raise TraceError(f"{self.kind} takes {ARITY[self.kind]} args, got {len(self.args)}")
        if not (self.time >= 0 and math.isfinite(self.time)):
            raise TraceError(f"bad event time {self.time!r}")
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))

    def line(self) -> str:
        return " ".join([repr(float(self.time)), self.kind, *map(str, self.args)])

    @classmethod
    def parse(cls, line: str) -> "SessionEvent":
        parts = line.split()
        if len(parts) < 2:
            raise TraceError(f"malformed trace line {line!r}")
        try:
            return cls(float(parts[0]), parts[1], tuple(int(a) for a in parts[2:]))
        except ValueError as exc:
            raise TraceError(f"malformed trace line {line!r}: {exc}") from None


def write_trace(events, path) -> None:
    FsPath(path).write_text("".join(ev.line() + "\n" for ev in events))


def read_trace(path) -> list[SessionEvent]:
    out = []
    for raw in FsPath(path).read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append(SessionEvent.parse(line))
    return out


@dataclass(frozen=True)
class Member:
    role: str  # "source" | "receiver"
    node: int


def initial_members(grp: MulticastGroup) -> dict[int, Member]:
    members = {}
    for s in sorted(grp.sources):
        members[len(members)] = Member("source", s)
    for d in sorted(grp.receivers):
        members[len(members)] = Member("receiver", d)
    return members


def _link(u, v):
    return (u, v) if u < v else (v, u)


# -- membership / failure bookkeeping shared by the simulator and generator --

@dataclass
class _Shadow:
    base: Graph
    members: dict[int, Member]
    failed_nodes: set
    failed_links: set
    next_id: int
    clock: float = 0.0

    def node_at(self, node, role):
        for mid, m in self.members.items():
            if m.node == node and m.role == role:
                return mid
        return None

    def alive(self, v):
        return 0 <= v < self.base.node_count and v not in self.failed_nodes

    def link_alive(self, u, v):
        return (self.alive(u) and self.alive(v) and _link(u, v) not in self.failed_links
                and (self.base.has_edge(u, v) or self.base.has_edge(v, u)))

    def check(self, ev: SessionEvent) -> None:
        """Raise ``TraceError`` if ``ev`` is inconsistent with the current state."""
        if ev.time < self.clock:
            raise TraceError(f"event at t={ev.time} precedes clock {self.clock}")
        k, a = ev.kind, ev.args
        bad = None
        if k == "join":
            if not self.alive(a[0]):
                bad = f"join at dead or unknown node {a[0]}"
            elif self.node_at(a[0], "receiver") is not None:
                bad = f"node {a[0]} already hosts a receiver"
        elif k == "leave":
            if self.node_at(a[0], "receiver") is None:
                bad = f"no receiver at node {a[0]}"
        elif k == "handover":
            m, src, dst = a
            mem = self.members.get(m)
            if mem is None:
                bad = f"unknown member {m}"
            elif mem.node != src:
                bad = f"member {m} is at {mem.node}, not {src}"
            elif dst == src or not self.alive(dst):
                bad = f"bad handover target {dst}"
            elif self.node_at(dst, mem.role) is not None:
                bad = f"node {dst} already hosts a {mem.role}"
        elif k == "link_fail":
            if not self.link_alive(*a):
                bad = f"link {a} is not up"
        elif k == "link_restore":
            if _link(*a) not in self.failed_links:
                bad = f"link {a} is not failed"
        elif k == "node_fail":
            if not self.alive(a[0]):
                bad = f"node {a[0]} is not up"
            elif any(m.node == a[0] for m in self.members.values()):
                bad = f"node {a[0]} hosts a group member"
        elif k == "node_restore":
            if a[0] not in self.failed_nodes:
                bad = f"node {a[0]} is not failed"
        if bad:
            raise TraceError(f"t={ev.time} {k}: {bad}")

    def mutate(self, ev: SessionEvent) -> None:
        k, a = ev.kind, ev.args
        if k == "join":
            self.members[self.next_id] = Member("receiver", a[0])
            self.next_id += 1
        elif k == "leave":
            del self.members[self.node_at(a[0], "receiver")]
        elif k == "handover":
            self.members[a[0]] = replace(self.members[a[0]], node=a[2])
        elif k == "link_fail":
            self.failed_links.add(_link(*a))
        elif k == "link_restore":
            self.failed_links.discard(_link(*a))
        elif k == "node_fail":
            self.failed_nodes.add(a[0])
        elif k == "node_restore":
            self.failed_nodes.discard(a[0])
        self.clock = ev.time

    def live_graph(self) -> Graph:
        g = Graph(self.base.node_count, self.base.symmetric)
        for u, v, attr in self.base.edges():
            if u in self.failed_nodes or v in self.failed_nodes:
                continue
            if _link(u, v) in self.failed_links:
                continue
            g.add_edge(u, v, attr)
        return g

    def group(self) -> MulticastGroup | None:
        srcs = sorted(m.node for m in self.members.values() if m.role == "source")
        rcvs = sorted(m.node for m in self.members.values() if m.role == "receiver")
        if not srcs or not rcvs:
            return None
        return MulticastGroup(tuple(srcs), tuple(rcvs))


@dataclass(frozen=True)
class RecoveryConfig:
    """When to rerun RP selection.

    ``degradation_threshold`` gates event-driven reselection: it happens only
    when the current fitness exceeds the fitness at the last selection by
    more than that fraction. ``period`` (if set) injects timer events on top
    of those in the trace.
    """

    period: float | None = None
    event_driven: bool = True
    degradation_threshold: float = 0.0
    recovery_delay: float = 1.0


@dataclass
class SessionState:
    base_graph: Graph
    live_graph: Graph
    members: dict[int, Member]
    current_rp: int
    current_eval: TreeEvaluation | None
    bounds: QosBounds
    weights: FitnessWeights
    clock: float = 0.0
    reselection_count: int = 0
    best_known: float | None = None
    failed_nodes: frozenset = frozenset()
    failed_links: frozenset = frozenset()
    next_member_id: int = 0

    @property
    def group(self) -> MulticastGroup | None:
        return self._shadow().group()

    def rp_alive(self) -> bool:
        return self.current_rp not in self.failed_nodes

    def tree(self) -> MulticastTree | None:
        grp = self.group
        if grp is None or not self.rp_alive():
            return None
        try:
            return build_shared_tree(self.live_graph, self.current_rp, grp)
        except UnreachableMember:
            return None

    def rederive(self) -> TreeEvaluation | None:
        grp = self.group
        if grp is None or not self.rp_alive():
            return None
        try:
            return evaluate(self.live_graph, self.current_rp, grp, self.bounds, self.weights)
        except UnreachableMember:
            return None

    def _shadow(self) -> _Shadow:
        return _Shadow(self.base_graph, dict(self.members), set(self.failed_nodes),
                       set(self.failed_links), self.next_member_id, self.clock)


def new_session_state(g0: Graph, grp0: MulticastGroup, rp: int, bounds: QosBounds,
                      weights: FitnessWeights | None = None) -> SessionState:
    members = initial_members(grp0)
    st = SessionState(g0, g0.copy(), members, rp, None, bounds, weights or FitnessWeights(),
                      next_member_id=len(members))
    st.current_eval = st.rederive()
    st.best_known = None if st.current_eval is None else st.current_eval.fitness
    return st


def apply_event(st: SessionState, ev: SessionEvent) -> SessionState:
    """Return the state after ``ev``; raises ``TraceError`` on an invalid event."""
    sh = st._shadow()
    sh.check(ev)
    sh.mutate(ev)
    topo = ev.kind in ("link_fail", "link_restore", "node_fail", "node_restore")
    new = replace(
        st,
        live_graph=sh.live_graph() if topo else st.live_graph,
        members=sh.members,
        clock=sh.clock,
        failed_nodes=frozenset(sh.failed_nodes),
        failed_links=frozenset(sh.failed_links),
        next_member_id=sh.next_id,
    )
    new.current_eval = new.rederive()
    return new


def recovery_policy(st: SessionState, ev: SessionEvent, pol: RecoveryConfig) -> str:
    """``"reselect"`` or ``"keep"`` for a state that already includes ``ev``."""
    if st.group is None:
        return "keep"
    if not st.rp_alive() or st.current_eval is None:
        return "reselect"
    if ev.kind == "periodic_timer":
        return "reselect"
    if ev.kind in CHANGE_KINDS and pol.event_driven:
        if st.best_known is None:
            return "reselect"
        if st.current_eval.fitness > st.best_known * (1.0 + pol.degradation_threshold):
            return "reselect"
    return "keep"


@dataclass
class SessionMetrics:
    fitness_trajectory: list = field(default_factory=list)
    reselections: int = 0
    disruption_units: float = 0.0
    handover_latency_proxy: list = field(default_factory=list)
    selector_invocations: int = 0
    rp_history: list = field(default_factory=list)  # (time, rp) after every selection

    def to_json(self) -> str:
        d = asdict(self)
        d["fitness_trajectory"] = [[t, f] for t, f in self.fitness_trajectory]
        d["rp_history"] = [[t, v] for t, v in self.rp_history]
        return json.dumps(d, sort_keys=True)


def _attachment(tree: MulticastTree, role: str, node: int) -> int:
    """Where a member's own branch meets the rest of the tree."""
    if role == "receiver":
        others = {tree.rp}
        for d, p in tree.receiver_paths.items():
            if d != node:
                others.update(p.nodes)
        for v in reversed(tree.receiver_paths[node].nodes):
            if v in others:
                return v
        return tree.rp
    on_tree = tree.nodes()
    for v in tree.source_paths[node].nodes:
        if v in on_tree:
            return v
    return tree.rp


def _broken_receivers(tree: MulticastTree, ev: SessionEvent) -> int:
    if ev.kind == "link_fail":
        u, v = ev.args
        hit = {(u, v), (v, u)}
        return sum(1 for p in tree.receiver_paths.values() if hit & set(p.edges()))
    x = ev.args[0]
    return sum(1 for p in tree.receiver_paths.values() if x in p.nodes)


def validate_trace(g0: Graph, grp0: MulticastGroup, trace) -> None:
    members = initial_members(grp0)
    sh = _Shadow(g0, members, set(), set(), len(members))
    for ev in trace:
        sh.check(ev)
        sh.mutate(ev)


def _with_timers(trace, period):
    if not period or not math.isfinite(period) or not trace:
        return list(trace)
    end = trace[-1].time
    timers = [SessionEvent(k * period, "periodic_timer")
              for k in range(1, int(end // period) + 1)]
    return sorted(list(trace) + timers, key=lambda e: e.time)


def run_session(g0: Graph, grp0: MulticastGroup, trace, selector: str = "vns",
                cfg: VnsConfig | None = None, pol: RecoveryConfig | None = None,
                bounds: QosBounds | None = None, weights: FitnessWeights | None = None,
                candidates=None) -> SessionMetrics:
    """Drive one session through ``trace`` and collect recovery metrics.

    Failure events add ``receivers whose path crosses the failed element x
    recovery_delay`` to the disruption total; handovers add the moving
    receiver (or, for a source, every receiver) times ``recovery_delay``.
    """
    cfg = cfg or VnsConfig()
    pol = pol or RecoveryConfig()
    trace = _with_timers(trace, pol.period)
    if any(b.time < a.time for a, b in zip(trace, trace[1:])):
        raise TraceError("trace is not time-sorted")
    validate_trace(g0, grp0, trace)
    bounds = bounds or auto_bounds(g0, grp0, candidates=candidates, weights=weights)
    m = SessionMetrics()

    def select(st, warm):
        c = replace(cfg, rng_seed=cfg.rng_seed + m.selector_invocations)
        if warm is not None:
            c = replace(c, initial="given", given_node=warm)
        m.selector_invocations += 1
        try:
            return run_selector(selector, st.live_graph, st.group, st.bounds, c,
                                st.weights, candidates)
        except NoEligibleRp:
            raise SessionError(f"t={st.clock}: no live RP can serve the group") from None

    members = initial_members(grp0)
    st = SessionState(g0, g0.copy(), members, 0, None, bounds, weights or FitnessWeights(),
                      next_member_id=len(members))
    res = select(st, None)
    st.current_rp = res.rp
    st.current_eval = res.eval
    st.best_known = res.eval.fitness
    m.fitness_trajectory.append((0.0, res.eval.fitness))
    m.rp_history.append((0.0, res.rp))

    for ev in trace:
        before = st.tree()
        if before is not None:
            if ev.kind in ("link_fail", "node_fail"):
                m.disruption_units += _broken_receivers(before, ev) * pol.recovery_delay
            elif ev.kind == "handover":
                role = st.members[ev.args[0]].role
                hit = 1 if role == "receiver" else len(before.receiver_paths)
                m.disruption_units += hit * pol.recovery_delay
        st = apply_event(st, ev)
        if ev.kind == "handover" and before is not None:
            after = st.tree()
            mem = st.members[ev.args[0]]
            if after is not None:
                old = _attachment(before, mem.role, ev.args[1])
                new = _attachment(after, mem.role, ev.args[2])
                m.handover_latency_proxy.append(hop_distances(st.live_graph, old).get(new, -1))
        if recovery_policy(st, ev, pol) == "reselect":
            warm = st.current_rp if st.rp_alive() else None
            res = select(st, warm)
            st.current_rp = res.rp
            st.current_eval = res.eval
            st.best_known = res.eval.fitness
            st.reselection_count += 1
            m.rp_history.append((ev.time, res.rp))
        if st.current_eval is not None:
            m.fitness_trajectory.append((ev.time, st.current_eval.fitness))
    m.reselections = st.reselection_count
    return m


# -- synthetic workloads ------------------------------------------------------

@dataclass(frozen=True)
class TraceParams:
    duration: float = 100.0
    join_rate: float = 0.05
    leave_rate: float = 0.05
    handover_rate: float = 0.1
    mobility_speed_proxy: float = 1.0
    link_fail_rate: float = 0.02
    node_fail_rate: float = 0.0
    repair_time: float = 5.0
    timer_period: float = math.inf

    def __post_init__(self):
        for name in ("duration", "join_rate", "leave_rate", "handover_rate",
                     "mobility_speed_proxy", "link_fail_rate", "node_fail_rate", "repair_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.timer_period > 0:
            raise ValueError("timer_period must be > 0")


_GEN_KINDS = ("join", "leave", "handover", "link_fail", "node_fail")


def _arrivals(rng, rate, duration):
    # unit-rate arrivals rescaled: a higher rate yields a superset prefix of the same stream
    if rate <= 0:
        return []
    times, t = [], 0.0
    while True:
        t += rng.exponential(1.0)
        if t / rate > duration:
            return times
        times.append(t / rate)


def _connected_without(sh: _Shadow, drop_node=None, drop_link=None) -> bool:
    alive = [v for v in range(sh.base.node_count) if sh.alive(v) and v != drop_node]
    if not alive:
        return True
    adj = {v: set() for v in alive}
    for u, v, _ in sh.base.edges():
        if u in adj and v in adj and _link(u, v) not in sh.failed_links and _link(u, v) != drop_link:
            adj[u].add(v)
            adj[v].add(u)
    seen, stack = {alive[0]}, [alive[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(alive)


def generate_trace(params: TraceParams, seed: int, g: Graph, grp: MulticastGroup,
                   max_tries: int = 20) -> list[SessionEvent]:
    """Poisson workload over ``g``; each event kind draws from its own stream.

    Arguments are chosen against a running shadow of the session so that every
    event is valid when replayed. Failures never disconnect the live graph and
    never hit nodes hosting members; each is repaired ``repair_time`` later.
    Candidates that cannot be made valid within ``max_tries`` draws are dropped.
    """
    rates = {
        "join": params.join_rate, "leave": params.leave_rate,
        "handover": params.handover_rate * params.mobility_speed_proxy,
        "link_fail": params.link_fail_rate, "node_fail": params.node_fail_rate,
    }
    heap = []
    seq = 0
    for i, kind in enumerate(_GEN_KINDS):
        for t in _arrivals(np.random.default_rng([seed, i]), rates[kind], params.duration):
            heap.append((t, seq, kind, None))
            seq += 1
    if math.isfinite(params.timer_period):
        k = 1
        while k * params.timer_period <= params.duration:
            heap.append((k * params.timer_period, seq, "periodic_timer", ()))
            seq += 1
            k += 1
    heapq.heapify(heap)
    arg_rng = {kind: np.random.default_rng([seed, i, 1]) for i, kind in enumerate(_GEN_KINDS)}

    members = initial_members(grp)
    sh = _Shadow(g, members, set(), set(), len(members))
    out = []
    while heap:
        t, _, kind, args = heapq.heappop(heap)
        if args is None:
            args = _draw_args(kind, sh, arg_rng[kind], max_tries)
            if args is None:
                continue
        ev = SessionEvent(t, kind, args)
        sh.check(ev)
        sh.mutate(ev)
        out.append(ev)
        if kind in ("link_fail", "node_fail") and t + params.repair_time <= params.duration:
            heapq.heappush(heap, (t + params.repair_time, seq,
                                  kind.replace("fail", "restore"), args))
            seq += 1
    return out


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))] if seq else None


def _draw_args(kind, sh: _Shadow, rng, tries):
    n = sh.base.node_count
    alive = [v for v in range(n) if sh.alive(v)]
    if kind == "join":
        free = [v for v in alive if sh.node_at(v, "receiver") is None]
        v = _pick(rng, free)
        return None if v is None else (v,)
    if kind == "leave":
        rcv = sorted(m.node for m in sh.members.values() if m.role == "receiver")
        if len(rcv) < 2:
            return None
        return (_pick(rng, rcv),)
    if kind == "handover":
        mid = _pick(rng, sorted(sh.members))
        mem = sh.members[mid]

        def ok(v):
            return v != mem.node and sh.alive(v) and sh.node_at(v, mem.role) is None
        near = [v for v in sh.base.successors(mem.node) if ok(v) and sh.link_alive(mem.node, v)]
        dst = _pick(rng, near) if near else _pick(rng, [v for v in alive if ok(v)])
        return None if dst is None else (mid, mem.node, dst)
    if kind == "link_fail":
        links = sorted({_link(u, v) for u, v, _ in sh.base.edges() if sh.link_alive(u, v)})
        for _ in range(tries):
            lk = _pick(rng, links)
            if lk is None:
                return None
            if _connected_without(sh, drop_link=lk):
                return lk
        return None
    if kind == "node_fail":
        occupied = {m.node for m in sh.members.values()}
        cands = [v for v in alive if v not in occupied]
        for _ in range(tries):
            v = _pick(rng, cands)
            if v is None:
                return None
            if _connected_without(sh, drop_node=v):
                return (v,)
        return None
    raise ValueError(kind)
