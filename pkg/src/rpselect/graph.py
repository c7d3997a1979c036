"""Directed weighted graph with per-edge cost and delay."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Iterator

import numpy as np

from . import _accel


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeAttr:
    cost: float
    delay: float

    def __post_init__(self):
        for name in ("cost", "delay"):
            x = getattr(self, name)
            if not np.isfinite(x) or x < 0:
                raise GraphError(f"edge {name} must be finite and >= 0, got {x!r}")


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    total_cost: float
    total_delay: float

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def edges(self) -> Iterator[tuple[int, int]]:
        return zip(self.nodes[:-1], self.nodes[1:])


class Graph:
    """Simple directed graph on nodes ``0..node_count-1``.

    ``symmetric`` is a construction hint: in that mode ``add_link`` is the
    expected way to add edges so that e(u, v) exists iff e(v, u) does.
    """

    def __init__(self, node_count: int, symmetric: bool = True):
        if node_count < 0:
            raise GraphError("node_count must be >= 0")
        self.node_count = int(node_count)
        self.symmetric = symmetric
        self._adj: list[dict[int, EdgeAttr]] = [{} for _ in range(self.node_count)]
        self._csr = None

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edges={self.edge_count})"

    def _check_node(self, u):
        if not (0 <= u < self.node_count):
            raise GraphError(f"node {u} out of range [0, {self.node_count})")

    def add_edge(self, u: int, v: int, attr: EdgeAttr) -> "Graph":
        self._check_node(u)
        self._check_node(v)
        if u == v:
            raise GraphError(f"self-loop on node {u}")
        if v in self._adj[u]:
            raise GraphError(f"duplicate edge ({u}, {v})")
        self._adj[u][v] = attr
        self._csr = None
        return self

    def add_link(self, u: int, v: int, forward: EdgeAttr, reverse: EdgeAttr | None = None) -> "Graph":
        """Add e(u, v) and e(v, u); ``reverse`` defaults to ``forward``."""
        self.add_edge(u, v, forward)
        self.add_edge(v, u, forward if reverse is None else reverse)
        return self

    def remove_edge(self, u: int, v: int) -> EdgeAttr:
        try:
            attr = self._adj[u].pop(v)
        except KeyError:
            raise GraphError(f"no edge ({u}, {v})") from None
        self._csr = None
        return attr

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.node_count and v in self._adj[u]

    def edge(self, u: int, v: int) -> EdgeAttr:
        try:
            return self._adj[u][v]
        except (KeyError, IndexError):
            raise GraphError(f"no edge ({u}, {v})") from None

    def successors(self, u: int) -> list[int]:
        return sorted(self._adj[u])

    def edges(self) -> Iterator[tuple[int, int, EdgeAttr]]:
        for u in range(self.node_count):
            for v in sorted(self._adj[u]):
                yield u, v, self._adj[u][v]

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self._adj)

    def mean_degree(self) -> float:
        """Mean undirected degree (each unordered linked pair counted once per end)."""
        if self.node_count == 0:
            return 0.0
        pairs = {(min(u, v), max(u, v)) for u, v, _ in self.edges()}
        return 2.0 * len(pairs) / self.node_count

    def copy(self) -> "Graph":
        g = Graph(self.node_count, self.symmetric)
        g._adj = [dict(a) for a in self._adj]
        return g

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and self._adj == other._adj

    def csr(self):
        """(indptr, indices, delay, cost) arrays, successors in ascending order."""
        if self._csr is None:
            indptr = np.zeros(self.node_count + 1, np.int64)
            indices, delay, cost = [], [], []
            for u in range(self.node_count):
                for v in sorted(self._adj[u]):
                    a = self._adj[u][v]
                    indices.append(v)
                    delay.append(a.delay)
                    cost.append(a.cost)
                indptr[u + 1] = len(indices)
            self._csr = (
                indptr,
                np.asarray(indices, np.int64),
                np.asarray(delay, np.float64),
                np.asarray(cost, np.float64),
            )
        return self._csr


def sweep(g: Graph, src: int):
    """Raw shortest-delay sweep: (delay, cost, pred) numpy arrays."""
    g._check_node(src)
    return _accel.sssp(*g.csr(), src)


def _walk(pred, src, dst) -> tuple[int, ...]:
    nodes = [dst]
    while nodes[-1] != src:
        nodes.append(int(pred[nodes[-1]]))
    nodes.reverse()
    return tuple(nodes)


def path_from_sweep(src: int, dst: int, result) -> Path | None:
    dist, csum, pred = result
    if not np.isfinite(dist[dst]):
        return None
    return Path(_walk(pred, src, dst), float(csum[dst]), float(dist[dst]))


def shortest_delay_path(g: Graph, src: int, dst: int) -> Path | None:
    """Least-delay path src -> dst, or ``None`` when dst is unreachable.

    Ties on delay prefer lower cost, then the lexicographically smallest
    node sequence.
    """
    g._check_node(dst)
    return path_from_sweep(src, dst, sweep(g, src))


def delay_table_from(g: Graph, src: int) -> dict[int, tuple[float, int | None]]:
    """Map every node to ``(delay, predecessor)``; unreachable nodes get ``inf``."""
    dist, _, pred = sweep(g, src)
    return {
        v: (float(dist[v]), None if pred[v] < 0 else int(pred[v]))
        for v in range(g.node_count)
    }


def path_totals(g: Graph, nodes: Iterable[int]) -> tuple[float, float]:
    """Walk a node sequence, returning (cost, delay) summed left to right."""
    nodes = list(nodes)
    cost = delay = 0.0
    for u, v in zip(nodes[:-1], nodes[1:]):
        a = g.edge(u, v)
        cost += a.cost
        delay += a.delay
    return cost, delay


def hop_distances(g: Graph, src: int) -> dict[int, int]:
    """BFS hop counts over out-edges."""
    seen = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.successors(u):
                if v not in seen:
                    seen[v] = seen[u] + 1
                    nxt.append(v)
        frontier = nxt
    return seen


# -- edge-list text format ---------------------------------------------------

def write_edge_list(g: Graph, path) -> None:
    lines = [f"#nodes {g.node_count}"]
    for u, v, a in g.edges():
        lines.append(f"{u} {v} {a.cost!r} {a.delay!r}")
    FsPath(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path, symmetric: bool = True) -> Graph:
    n = None
    records = []
    for lineno, raw in enumerate(FsPath(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            head = line[1:].split()
            if head and head[0] == "nodes":
                if len(head) != 2:
                    raise GraphError(f"{path}:{lineno}: malformed #nodes header")
                n = int(head[1])
            continue
        parts = line.split()
        if len(parts) != 4:
            raise GraphError(f"{path}:{lineno}: expected 'u v cost delay'")
        records.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if n is None:
        raise GraphError(f"{path}: missing '#nodes <N>' header")
    g = Graph(n, symmetric)
    for u, v, c, d in records:
        g.add_edge(u, v, EdgeAttr(c, d))
    return g
