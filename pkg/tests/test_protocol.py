import random

import pytest
from hypothesis import given, settings, strategies as st

from bridgesim.graph import Graph, edge, tarjan_report
from bridgesim.protocol import (COMPETENCE_FLOOR, BackwardMessage, DibadawnConfig, ExplorerId, ForwardMessage,
                                DibadawnNode, compute_forward_delay, compute_timeout, competence, cycle_id,
                                link_classes,
                                run_single_search)
from bridgesim.scenarios import ring
from bridgesim.netsim import ChannelConfig, Medium, Simulator
from bridgesim.radio import ShadowingParams
from bridgesim.voting import Rule, RuleConfig

from .helpers import connected_within

I, A, B, C = 0, 1, 2, 3
DIAMOND = Graph.from_edges(4, [(I, A), (A, B), (A, C), (B, C)])

TABLE = {
    1: 0.95, 2: 0.90, 3: 0.9954834, 4: 0.9944834, 5: 0.9932621, 6: 0.9917703, 7: 0.9899482,
    8: 0.9877227, 9: 0.9850044, 10: 0.9816844, 11: 0.9776292, 12: 0.9726763, 13: 0.9666267,
    14: 0.9592378, 15: 0.9502129, 16: 0.9391899, 17: 0.9257264, 18: 0.9092820, 19: 0.8891968,
    20: 0.8646647,
}


def lost_forwards(*pairs):
    pairs = set(pairs)
    return lambda s, r, p: isinstance(p, ForwardMessage) and (s, r) in pairs


def per_node(outcome):
    return {v: n.query_results() for v, n in outcome.nodes.items()}


def test_competence_table():
    for h, p in TABLE.items():
        assert competence(h) == p
    assert competence(21) == COMPETENCE_FLOOR == 0.85
    assert competence(500) == 0.85
    with pytest.raises(ValueError):
        competence(0)


def test_timeouts_follow_hop_groups():
    cfg = DibadawnConfig()
    assert cfg.jitter_max == pytest.approx(0.014)
    assert cfg.slot_time == pytest.approx(0.030)
    assert compute_timeout(0, 10, cfg) == pytest.approx(0.86)
    assert compute_timeout(10, 10, cfg) == 0
    with pytest.raises(ValueError):
        compute_timeout(11, 10, cfg)


def test_forward_delay_fills_the_traversal_window():
    cfg = DibadawnConfig()
    rng = random.Random(0)

    class R:
        def uniform(self, a, b):
            return rng.uniform(a, b)
    min_delay, jitter = compute_forward_delay(0.01, cfg, R())
    assert min_delay == pytest.approx(0.056 - 0.01 - 0.002)
    assert 0 <= jitter <= cfg.jitter_max
    assert compute_forward_delay(1.0, cfg, R())[0] == 0.0


def test_ids():
    x = ExplorerId(3, 7)
    assert x.key == (3 << 32) | 7
    assert cycle_id(x, 4, 9) == cycle_id(x, 9, 4)
    assert cycle_id(x, 4, 9) != cycle_id(ExplorerId(3, 8), 4, 9)


def test_link_classes_transitive():
    log = {1: {"a"}, 2: {"a", "b"}, 3: {"b"}, 4: {"c"}}
    classes = link_classes(log)
    assert sorted(map(sorted, classes)) == [[1, 2, 3], [4]]


# --- empty outgoing buffer cases --------------------------------------------

def test_leaf_reports_bridge_to_parent():
    o = run_single_search(Graph.from_edges(2, [(I, A)]), I)
    assert per_node(o)[A] == (frozenset({(I, A)}), False)
    assert per_node(o)[I] == (frozenset({(I, A)}), False)


def test_eliminated_cycle_items_leave_bridge():
    o = run_single_search(DIAMOND, I)
    res = per_node(o)
    assert res[A] == (frozenset({(I, A)}), True)
    marks = {m.edge: (m.bridge, m.competence) for m in o.nodes[A].markings}
    assert marks[edge(A, B)] == (False, 0.95)
    assert marks[edge(A, C)] == (False, 0.95)
    assert marks[edge(I, A)] == (True, 1.0)
    assert {m.edge: m.competence for m in o.nodes[B].markings}[edge(B, C)] == 1.0


def test_bridge_children_leave_bridge():
    star = Graph.from_edges(4, [(I, A), (A, B), (A, C)])
    o = run_single_search(star, I)
    assert o.bridges == star.edges
    assert o.articulation_points == {A}
    assert per_node(o)[A][0] == star.edges


# --- scripted explorer losses -----------------------------------------------

def test_lossless_diamond():
    o = run_single_search(DIAMOND, I)
    assert o.bridges == {(I, A)} and o.articulation_points == {A}


def test_lost_explorer_unguarded_trace():
    o = run_single_search(DIAMOND, I, DibadawnConfig(asymmetry_guard=False), drop_filter=lost_forwards((A, C)))
    res = per_node(o)
    assert res[C][0] == {edge(B, C)}
    assert res[B][0] == {edge(B, C), edge(A, B)}
    assert res[A][0] == {edge(A, B)}
    assert edge(I, A) not in o.bridges
    assert res[A][1] is True


def test_asymmetry_guard_drops_one_sided_cross_edge():
    cfg = DibadawnConfig(asymmetry_guard=True)
    o = run_single_search(DIAMOND, I, cfg, drop_filter=lost_forwards((A, C)), log_events=True)
    assert any("asymmetric cross edge to 3" in line for line in o.sim.log)
    sent_up = [line for line in o.sim.log if " deliver 1 from=1 to=0 bwd" in line]
    assert sent_up and all(line.endswith("bridge") for line in sent_up)
    assert edge(I, A) in o.bridges


def test_lost_explorers_to_both_children():
    o = run_single_search(DIAMOND, I, drop_filter=lost_forwards((A, B), (A, C)))
    res = per_node(o)
    assert res[A] == (frozenset({(I, A)}), False)
    assert res[I][0] == {(I, A)}
    assert o.nodes[B].completed == 0 and o.nodes[C].completed == 0


# --- whole-search properties -------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lossless_search_is_exact(seed):
    g, root = connected_within(random.Random(seed), 18, 9)
    o = run_single_search(g, root, seed=seed)
    truth = tarjan_report(g)
    assert o.bridges == truth.bridges
    assert o.articulation_points == truth.articulation_points
    assert o.transmissions == 2 * len(g.nodes) - 1


def test_ttl_bounds_the_search():
    path = Graph.from_edges(6, [(i, i + 1) for i in range(5)])
    o = run_single_search(path, 0, DibadawnConfig(initial_ttl=3))
    assert [v for v, n in o.nodes.items() if n.completed] == [0, 1, 2, 3]


def test_ring_longer_than_search_radius_looks_like_a_path():
    topo = ring(21)
    ch = ChannelConfig(mode="lossless", shadowing=ShadowingParams(max_range=150.0))
    g = Medium.from_positions(topo.positions, ch).graph()
    assert len(g.edges) == 21 and not tarjan_report(g).bridges
    o = run_single_search(g, 0, DibadawnConfig(initial_ttl=10))
    assert o.bridges and o.bridges <= g.edges


def test_history_window_and_voting():
    cfg = DibadawnConfig(history_size=3, voting=RuleConfig(Rule.SIMPLE_MAJORITY))
    ch = ChannelConfig(mode="lossless")
    sim = Simulator(Medium.from_graph(DIAMOND, ch), ch, 0)
    nodes = {v: DibadawnNode(v, sim, cfg) for v in DIAMOND.nodes}
    for k in range(5):
        sim.schedule_at(k * 2.0, nodes[I].start_search)
    sim.run()
    assert all(len(h) == 3 for h in nodes[A].history.values())
    assert nodes[A].query_results() == (frozenset({(I, A)}), True)
    assert nodes[I].completed == 5


def test_late_backward_message_is_dropped():
    o = run_single_search(Graph.from_edges(2, [(I, A)]), I, log_events=True)
    node = o.nodes[I]
    before = node.completed
    node.on_message(A, BackwardMessage(ExplorerId(I, 0), A, ("BRIDGE",)))
    assert node.completed == before
