import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from rpselect import (EdgeAttr, FitnessWeights, Graph, MulticastGroup, QosBounds, VnsConfig,
                      WaxmanParams, auto_bounds, largest_connected_component, neighborhood,
                      run_selector, sample_group, select_akc, select_ddvca, select_random,
                      select_tabu, select_vns, waxman_generate)
from rpselect.graph import hop_distances
from rpselect.metrics import CandidateEvaluator
from rpselect.selectors import NoEligibleRp, local_search_hill_climb

from conftest import line_graph, small_graphs, star_graph

INF = QosBounds()


def instance(n, seed, fraction=0.2, sources=1, wax=0.4):
    g, _ = waxman_generate(WaxmanParams(n, wax, wax, seed=seed))
    g, _ = largest_connected_component(g)
    grp = sample_group(g, fraction, min(sources, g.node_count), seed)
    return g, grp, auto_bounds(g, grp)


def exhaustive_min(g, grp, b):
    return min(e.fitness for e in CandidateEvaluator(g, grp, b).all().values())


def one_hop_optimal(g, grp, b, v):
    ev = CandidateEvaluator(g, grp, b)
    return all(ev(u).fitness >= ev(v).fitness for u in g.successors(v))


# -- neighbourhoods ------------------------------------------------------------

def test_neighborhood_small_cases():
    assert neighborhood(Graph(1), 0, 1) == []
    g = line_graph([1, 1])
    assert neighborhood(g, 0, 1) == [1]
    assert neighborhood(g, 0, 2) == [1, 2]
    assert neighborhood(g, 1, 5) == [0, 2]
    with pytest.raises(ValueError):
        neighborhood(g, 0, 0)


@pytest.mark.parametrize("seed", range(3))
def test_neighborhood_is_bfs_ball(seed):
    g, _ = waxman_generate(WaxmanParams(20, 0.3, 0.3, seed=seed))
    for s in range(20):
        hops = hop_distances(g, s)
        for j in range(1, 6):
            ball = sorted(v for v, h in hops.items() if 1 <= h <= j)
            assert neighborhood(g, s, j) == ball


@settings(max_examples=60, deadline=None)
@given(small_graphs(max_nodes=8), st.integers(1, 4))
def test_neighborhood_ball_property(g, j):
    for s in range(g.node_count):
        hops = hop_distances(g, s)
        assert neighborhood(g, s, j) == sorted(v for v, h in hops.items() if 1 <= h <= j)


# -- random --------------------------------------------------------------------

def test_random_trivial_and_deterministic():
    g1 = Graph(1)
    assert select_random(g1, MulticastGroup((0,), (0,)), INF, 3).rp == 0
    g, grp, b = instance(20, 1)
    assert select_random(g, grp, b, 11) == select_random(g, grp, b, 11)


def test_random_is_uniform():
    g = Graph(10)
    for v in range(1, 10):
        g.add_link(0, v, EdgeAttr(1, 1))
    grp = MulticastGroup((1,), (2, 3))
    ev = CandidateEvaluator(g, grp, INF)
    counts = Counter(select_random(g, grp, INF, s, evaluator=ev).rp for s in range(10_000))
    sigma = math.sqrt(10_000 * 0.1 * 0.9)
    assert set(counts) == set(range(10))
    assert all(abs(c - 1000) <= 3 * sigma for c in counts.values())


def test_random_skips_ineligible_nodes():
    g = Graph(4).add_link(0, 1, EdgeAttr(1, 1))
    grp = MulticastGroup((0,), (1,))
    for s in range(20):
        assert select_random(g, grp, INF, s).rp in (0, 1)
    with pytest.raises(NoEligibleRp):
        select_random(g, MulticastGroup((0,), (3,)), INF, 0)


# -- exhaustive baselines --------------------------------------------------------

def brute_ddvca(g, grp, b):
    evs = CandidateEvaluator(g, grp, b).all()
    feas = {v: e for v, e in evs.items() if e.max_delay <= b.delay_bound}
    return min(e.delay_variation for e in feas.values()) if feas else None


def test_ddvca_single_member():
    g = star_graph(3)
    assert select_ddvca(g, MulticastGroup((2,), (2,)), INF).rp == 2


def test_ddvca_asymmetric_hand_built():
    g = Graph(8, symmetric=False)
    arcs = [(0, 1, 1, 2), (1, 2, 2, 1), (2, 3, 1, 3), (3, 0, 2, 2), (1, 4, 1, 1), (4, 5, 3, 2),
            (5, 6, 1, 1), (6, 7, 2, 4), (7, 0, 1, 1), (2, 5, 1, 2), (5, 1, 2, 1), (6, 2, 1, 3),
            (4, 0, 2, 2), (3, 6, 1, 1), (7, 4, 3, 1)]
    for u, v, c, d in arcs:
        g.add_edge(u, v, EdgeAttr(c, d))
    grp = MulticastGroup((0,), (3, 5, 7))
    for b in (INF, QosBounds(14.0, math.inf), QosBounds(11.0, math.inf)):
        evs = CandidateEvaluator(g, grp, b).all()
        feas = {v: e for v, e in evs.items() if e.max_delay <= b.delay_bound}
        best = min(feas, key=lambda v: (feas[v].delay_variation, feas[v].cost, v))
        assert select_ddvca(g, grp, b).rp == best


@pytest.mark.parametrize("seed", range(10))
def test_ddvca_unbounded_is_global_variation_argmin(seed):
    g, grp, _ = instance(20, seed)
    evs = CandidateEvaluator(g, grp, INF).all()
    assert select_ddvca(g, grp, INF).eval.delay_variation == min(e.delay_variation for e in evs.values())


def test_ddvca_no_feasible_returns_least_max_delay():
    g, grp, _ = instance(20, 4)
    b = QosBounds(0.5, math.inf)
    res = select_ddvca(g, grp, b)
    evs = CandidateEvaluator(g, grp, b).all()
    assert not res.eval.feasible
    assert res.eval.max_delay == min(e.max_delay for e in evs.values())


def test_akc_prefers_lower_max_delay_among_tied_variation(akc_instance):
    g, grp = akc_instance
    evs = CandidateEvaluator(g, grp, INF).all()
    low = min(e.delay_variation for e in evs.values())
    tied = sorted(v for v, e in evs.items() if e.delay_variation == low)
    assert len(tied) >= 2
    assert select_akc(g, grp, INF).rp == min(tied, key=lambda v: (evs[v].max_delay, v))
    # DDVCA breaks the same tie by cost instead
    assert select_ddvca(g, grp, INF).rp == min(tied, key=lambda v: (evs[v].cost, v))


@pytest.mark.parametrize("seed", range(10))
def test_akc_matches_ddvca_variation_on_symmetric_graphs(seed):
    g, grp, b = instance(25, seed, fraction=0.2)
    a, d = select_akc(g, grp, b), select_ddvca(g, grp, b)
    assert math.isclose(a.eval.delay_variation, d.eval.delay_variation, rel_tol=1e-9)
    evs = CandidateEvaluator(g, grp, b).all()
    low = min(e.delay_variation for v, e in evs.items() if e.max_delay <= b.delay_bound)
    if sum(e.delay_variation == low for e in evs.values() if e.max_delay <= b.delay_bound) == 1:
        assert a.rp == d.rp


# -- tabu ---------------------------------------------------------------------

def test_tabu_single_node():
    res = select_tabu(Graph(1), MulticastGroup((0,), (0,)), INF)
    assert res.rp == 0


def test_tabu_on_cycle_with_long_tenure_stops_on_stable_cap():
    g = Graph(4)
    for u in range(4):
        g.add_link(u, (u + 1) % 4, EdgeAttr(1, 1))
    cfg = VnsConfig(tabu_tenure=4, max_stable_iters=6, max_total_iters=1000)
    res = select_tabu(g, MulticastGroup((0,), (2,)), INF, cfg)
    assert res.iterations_used < 1000
    visited = [step[2] for step in res.trace]
    assert len(visited) == len(set(visited))


def test_tabu_beats_random_on_average():
    g, grp, b = instance(20, 7, wax=0.3)
    ev = CandidateEvaluator(g, grp, b)
    cfg = lambda s: VnsConfig(rng_seed=s, max_total_iters=200, max_stable_iters=20)
    tabu = sum(select_tabu(g, grp, b, cfg(s), evaluator=ev).eval.fitness for s in range(100))
    rand = sum(select_random(g, grp, b, s, evaluator=ev).eval.fitness for s in range(100))
    assert tabu <= rand


# -- VNS ----------------------------------------------------------------------

def test_vns_single_node():
    res = select_vns(Graph(1), MulticastGroup((0,), (0,)), QosBounds(1, 1))
    assert res.rp == 0 and res.eval.fitness == 0


def test_vns_star_returns_hub():
    g = star_graph(7)
    grp = MulticastGroup((1,), (2, 3, 4, 5))
    for s in range(10):
        assert select_vns(g, grp, INF, VnsConfig(rng_seed=s)).rp == 0


def test_vns_matches_exhaustive_on_30_nodes():
    hits = 0
    for seed in range(100):
        g, grp, b = instance(30, seed)
        cfg = VnsConfig(k_max=4, max_total_iters=200, max_stable_iters=20, rng_seed=seed)
        hits += select_vns(g, grp, b, cfg).eval.fitness == exhaustive_min(g, grp, b)
    assert hits >= 90


def test_vns_exact_on_tiny_instances():
    for seed in range(50):
        n = 6 + seed % 7
        g, grp, b = instance(n, seed, fraction=0.3, wax=0.6)
        cfg = VnsConfig(max_total_iters=10 * n, max_stable_iters=10 * n, rng_seed=seed)
        assert select_vns(g, grp, b, cfg).eval.fitness == exhaustive_min(g, grp, b)


@pytest.mark.parametrize("ls", ["hill_climb", "tabu"])
@pytest.mark.parametrize("seed", range(8))
def test_vns_result_invariants(seed, ls):
    g, grp, b = instance(30, seed)
    cfg = VnsConfig(local_search=ls, rng_seed=seed)
    res = select_vns(g, grp, b, cfg)
    fits = [f for _, _, _, f in res.trace]
    assert all(x >= y for x, y in zip(fits, fits[1:]))
    assert res.eval.fitness <= fits[0]
    assert one_hop_optimal(g, grp, b, res.rp)
    assert res.trace[-1][2] == res.rp
    assert select_vns(g, grp, b, cfg) == res


def test_vns_given_start_and_candidates():
    g, grp, b = instance(30, 2)
    res = select_vns(g, grp, b, VnsConfig(initial="given", given_node=5))
    assert res.trace[0][2] == 5
    res = select_vns(g, grp, b, candidates=[1, 3, 5, 7])
    assert res.rp in (1, 3, 5, 7)


def test_vns_lexicographic_mode_runs():
    g, grp, b = instance(30, 3)
    w = FitnessWeights(mode="lexicographic")
    assert select_vns(g, grp, b, weights=w).eval.feasible


def test_vns_isolated_start_returns_start():
    g = Graph(3).add_link(1, 2, EdgeAttr(1, 1))
    res = select_vns(g, MulticastGroup((0,), (0,)), INF)
    assert res.rp == 0


def test_config_validation():
    for bad in (dict(k_max=0), dict(max_total_iters=0), dict(local_search="sa"),
                dict(initial="given")):
        with pytest.raises(ValueError):
            VnsConfig(**bad)
    assert VnsConfig().total_cap(100) == 700
    assert VnsConfig().ls_cap(30) == 30


# -- hill climbing ------------------------------------------------------------

def test_hill_climb_fixed_point_and_two_nodes():
    g, grp, b = instance(15, 3)
    ev = CandidateEvaluator(g, grp, b)
    best = min(ev.all(), key=lambda v: (ev(v).fitness, v))
    assert local_search_hill_climb(g, grp, b, best, 50).node == best
    g2 = Graph(2).add_link(0, 1, EdgeAttr(1, 1))
    grp2 = MulticastGroup((1,), (1,))
    assert local_search_hill_climb(g2, grp2, INF, 0, 5).node == 1


@pytest.mark.parametrize("seed", range(5))
def test_hill_climb_ends_at_local_optimum(seed):
    g, grp, b = instance(15, seed, wax=0.3)
    for start in range(g.node_count):
        c = local_search_hill_climb(g, grp, b, start, 100)
        assert one_hop_optimal(g, grp, b, c.node)
        assert c.eval.fitness <= CandidateEvaluator(g, grp, b)(start).fitness


# -- dispatch and traces ----------------------------------------------------

@pytest.mark.parametrize("algo", ["random", "ddvca", "akc-variant", "tabu", "vns"])
def test_all_selector_traces_are_monotone(algo):
    for seed in range(5):
        g, grp, b = instance(25, seed)
        res = run_selector(algo, g, grp, b, VnsConfig(rng_seed=seed))
        fits = [f for _, _, _, f in res.trace]
        assert all(x >= y for x, y in zip(fits, fits[1:]))
        assert res.eval.delay_variation == res.eval.max_delay - res.eval.min_delay


def test_trace_csv_and_unknown_algo():
    g, grp, b = instance(20, 1)
    text = run_selector("vns", g, grp, b).trace_csv()
    assert text.splitlines()[0] == "iter,k,incumbent,fitness"
    with pytest.raises(ValueError):
        run_selector("dvma", g, grp, b)
