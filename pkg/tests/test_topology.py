import math

import numpy as np
import pytest

from rpselect import EdgeAttr, Graph, WaxmanParams, largest_connected_component, sample_group
from rpselect import waxman_generate
from rpselect.graph import hop_distances
from rpselect.topology import read_group, write_group


def test_single_node_has_no_edges():
    g, pos = waxman_generate(WaxmanParams(1))
    assert g.node_count == 1 and g.edge_count == 0 and pos.shape == (1, 2)


def test_generation_is_pure_function_of_params():
    p = WaxmanParams(40, 0.3, 0.4, seed=11)
    a, pa = waxman_generate(p)
    b, pb = waxman_generate(p)
    assert a == b and np.array_equal(pa, pb)
    assert list(a.edges()) == list(b.edges())
    c, _ = waxman_generate(WaxmanParams(40, 0.3, 0.4, seed=12))
    assert c != a


def test_links_are_bidirectional_with_weights_in_range():
    g, _ = waxman_generate(WaxmanParams(50, 0.5, 0.5, seed=3, cost_range=(2, 3), delay_range=(5, 7)))
    for u, v, a in g.edges():
        assert g.has_edge(v, u)
        assert 2 <= a.cost <= 3 and 5 <= a.delay <= 7
    # reverse attributes drawn independently
    assert any(g.edge(u, v) != g.edge(v, u) for u, v, _ in g.edges())


def test_symmetric_weights_mode():
    g, _ = waxman_generate(WaxmanParams(30, 0.5, 0.5, seed=3, symmetric_weights=True))
    assert all(g.edge(u, v) == g.edge(v, u) for u, v, _ in g.edges())


@pytest.mark.parametrize("kw", [dict(n=0), dict(n=5, alpha=0), dict(n=5, beta=1.5),
                                dict(n=5, cost_range=(3, 1)), dict(n=5, delay_range=(-1, 1))])
def test_param_validation(kw):
    with pytest.raises(ValueError):
        WaxmanParams(**kw)


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.2, 0.2), (0.6, 0.3)])
def test_edge_count_matches_waxman_probability(alpha, beta):
    # observed link count vs sum of pair probabilities over >= 1000 pairs, within 3 sigma
    observed = expected = var = 0.0
    for seed in range(6):
        g, pos = waxman_generate(WaxmanParams(30, alpha, beta, seed=seed))
        iu, ju = np.triu_indices(30, 1)
        d = np.hypot(*(pos[iu] - pos[ju]).T)
        p = alpha * np.exp(-d / (beta * d.max()))
        observed += g.edge_count / 2
        expected += p.sum()
        var += (p * (1 - p)).sum()
    assert abs(observed - expected) <= 3 * math.sqrt(var)


def test_tiny_alpha_gives_almost_no_edges():
    total = sum(waxman_generate(WaxmanParams(30, 1e-6, 0.5, seed=s))[0].edge_count for s in range(5))
    assert total == 0


def test_lcc_of_connected_graph_is_identity():
    g = Graph(3).add_link(0, 1, EdgeAttr(1, 1)).add_link(1, 2, EdgeAttr(1, 1))
    h, m = largest_connected_component(g)
    assert h == g and m == {0: 0, 1: 1, 2: 2}


def test_lcc_tie_goes_to_lowest_id():
    g = Graph(4).add_link(2, 3, EdgeAttr(1, 1)).add_link(0, 1, EdgeAttr(2, 2))
    h, m = largest_connected_component(g)
    assert m == {0: 0, 1: 1} and h.edge(0, 1) == EdgeAttr(2, 2)


def test_lcc_renumbers_and_is_connected():
    g, _ = waxman_generate(WaxmanParams(50, 0.1, 0.1, seed=5))
    h, m = largest_connected_component(g)
    assert h.node_count < g.node_count
    assert sorted(m.values()) == list(range(h.node_count))
    assert len(hop_distances(h, 0)) == h.node_count
    for old_u, new_u in m.items():
        for old_v in g.successors(old_u):
            assert h.edge(new_u, m[old_v]) == g.edge(old_u, old_v)


def test_sample_group_sizes():
    g, _ = waxman_generate(WaxmanParams(100, seed=1))
    grp = sample_group(g, 0.10, 1, seed=1)
    assert len(grp.receivers) == 10 and len(grp.sources) == 1
    assert sample_group(g, 0.10, 1, seed=1) == grp
    full = sample_group(g, 1.0, 3, seed=2)
    assert sorted(full.receivers) == list(range(100)) and len(full.sources) == 3


def test_sample_group_ceil():
    g = Graph(10)
    assert len(sample_group(g, 0.3, 1, 0).receivers) == 3
    assert len(sample_group(g, 0.25, 1, 0).receivers) == 3


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
def test_sample_group_rejects_bad_fraction(fraction):
    with pytest.raises(ValueError):
        sample_group(Graph(5), fraction, 1, 0)


def test_group_file_round_trip(tmp_path):
    g, _ = waxman_generate(WaxmanParams(40, seed=1))
    grp = sample_group(g, 0.2, 2, seed=7)
    write_group(grp, tmp_path / "x.group")
    assert read_group(tmp_path / "x.group") == grp
