"""Waxman random topologies, component repair and group sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .graph import EdgeAttr, Graph
from .metrics import MulticastGroup


@dataclass(frozen=True)
class WaxmanParams:
    n: int
    alpha: float = 0.2
    beta: float = 0.2
    seed: int = 0
    cost_range: tuple[float, float] = (1.0, 10.0)
    delay_range: tuple[float, float] = (1.0, 10.0)
    symmetric_weights: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0 < self.alpha <= 1) or not (0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")
        for lo, hi in (self.cost_range, self.delay_range):
            if lo < 0 or lo > hi:
                raise ValueError(f"bad weight range ({lo}, {hi})")


def waxman_generate(p: WaxmanParams) -> tuple[Graph, np.ndarray]:
    """Waxman graph on the unit square.

    Each unordered pair is linked with probability
    ``alpha * exp(-d / (beta * L))``, L being the largest pairwise distance.
    Both directions are added; reverse attributes are drawn independently
    unless ``symmetric_weights`` is set.
    """
    rng = np.random.default_rng(p.seed)
    pos = rng.random((p.n, 2))
    g = Graph(p.n, symmetric=True)
    if p.n < 2:
        return g, pos
    iu, ju = np.triu_indices(p.n, k=1)
    d = np.hypot(*(pos[iu] - pos[ju]).T)
    L = d.max()
    prob = p.alpha * np.exp(-d / (p.beta * L)) if L > 0 else np.full(d.shape, p.alpha)
    linked = rng.random(d.size) < prob
    m = int(linked.sum())
    # four draws per link: forward cost/delay, reverse cost/delay
    c = rng.uniform(*p.cost_range, size=(m, 2))
    dl = rng.uniform(*p.delay_range, size=(m, 2))
    for k, (u, v) in enumerate(zip(iu[linked], ju[linked])):
        fwd = EdgeAttr(float(c[k, 0]), float(dl[k, 0]))
        rev = fwd if p.symmetric_weights else EdgeAttr(float(c[k, 1]), float(dl[k, 1]))
        g.add_link(int(u), int(v), fwd, rev)
    return g, pos


def _components(g: Graph) -> list[list[int]]:
    # weak components; symmetric graphs make these strong components too
    und = [set() for _ in range(g.node_count)]
    for u, v, _ in g.edges():
        und[u].add(v)
        und[v].add(u)
    seen = [False] * g.node_count
    comps = []
    for s in range(g.node_count):
        if seen[s]:
            continue
        seen[s] = True
        comp, stack = [s], [s]
        while stack:
            u = stack.pop()
            for v in und[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def largest_connected_component(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Largest component, renumbered densely; ties go to the lowest original id.

    Returns the subgraph and the ``old id -> new id`` mapping.
    """
    if g.node_count == 0:
        return g.copy(), {}
    comps = _components(g)
    best = max(comps, key=lambda c: (len(c), -c[0]))
    mapping = {old: new for new, old in enumerate(best)}
    h = Graph(len(best), g.symmetric)
    for u, v, a in g.edges():
        if u in mapping and v in mapping:
            h.add_edge(mapping[u], mapping[v], a)
    return h, mapping


def sample_group(g: Graph, fraction: float, n_sources: int, seed: int) -> MulticastGroup:
    """ceil(fraction * |N|) receivers and ``n_sources`` sources, overlap allowed."""
    if not (0 < fraction <= 1):
        raise ValueError("fraction must lie in (0, 1]")
    if n_sources < 1 or n_sources > g.node_count:
        raise ValueError("n_sources must lie in [1, |N|]")
    n = g.node_count
    k = min(n, math.ceil(fraction * n - 1e-12))
    rng = np.random.default_rng(seed)
    receivers = sorted(int(x) for x in rng.choice(n, size=k, replace=False))
    sources = sorted(int(x) for x in rng.choice(n, size=n_sources, replace=False))
    return MulticastGroup(tuple(sources), tuple(receivers))


def write_group(grp: MulticastGroup, path) -> None:
    FsPath(path).write_text(
        "sources: " + " ".join(map(str, grp.sources)) + "\n"
        "receivers: " + " ".join(map(str, grp.receivers)) + "\n"
    )


def read_group(path) -> MulticastGroup:
    fields = {}
    for line in FsPath(path).read_text().splitlines():
        if ":" not in line or line.lstrip().startswith("#"):
            continue
        key, _, rest = line.partition(":")
        fields[key.strip()] = tuple(int(x) for x in rest.split())
    try:
        return MulticastGroup(fields["sources"], fields["receivers"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing '{exc.args[0]}:' line") from None
