import random

import pytest

from bridgesim.chaudhuri import LossyChannelError, run_baseline
from bridgesim.graph import Graph, tarjan_report
from bridgesim.netsim import ChannelConfig, Medium, Simulator

from .helpers import random_connected


def cuts(result):
    return {v for v, a in result.articulation.items() if a}


def test_path():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert cuts(run_baseline(g, 0)) == {1, 2}
    assert cuts(run_baseline(g, 1)) == {1, 2}


def test_root_with_single_child_is_not_a_cut():
    g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert cuts(run_baseline(g, 0)) == set()


def test_bowtie_center():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    for root in range(5):
        assert cuts(run_baseline(g, root)) == {2}


def test_matches_tarjan_on_random_graphs():
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(1, 15)
        g = random_connected(rng, n, rng.randint(0, 2 * n))
        r = run_baseline(g, rng.randrange(n))
        assert cuts(r) == set(tarjan_report(g).articulation_points)
        assert r.messages <= 2 * (len(g.nodes) + len(g.edges))


def test_refuses_lossy_channel():
    g = Graph.from_edges(2, [(0, 1)])
    ch = ChannelConfig(mode="loss-table", loss_table={(0, 1): 0.5})
    sim = Simulator(Medium.from_graph(g, ch), ch, 0)
    with pytest.raises(LossyChannelError):
        run_baseline(g, 0, sim)
