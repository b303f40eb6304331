"""Per-node DIBADAWN state machine.

A search floods an explorer outward (forward phase), building a BFS-like
spanning tree and noting cross edges.  Timers then collapse the tree from the
leaves inward (backward phase): every cross edge produces a cycle item that
travels toward the root until it meets its twin at the endpoints' lowest
common ancestor.  A node whose outgoing buffer ends up empty declares the
link to its parent a bridge.  Articulation points fall out of which
neighbor links share message ids.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .graph import Edge, edge
from .netsim import Simulator
from .voting import RuleConfig, Statement, vote

# hops -> probability that a cycle message over that many hops is correct
_COMPETENCE = (
    0.95, 0.90, 0.9954834, 0.9944834, 0.9932621, 0.9917703, 0.9899482,
    0.9877227, 0.9850044, 0.9816844, 0.9776292, 0.9726763, 0.9666267,
    0.9592378, 0.9502129, 0.9391899, 0.9257264, 0.9092820, 0.8891968,
    0.8646647,
)
COMPETENCE_FLOOR = 0.85


def competence(hops: int) -> float:
    if hops < 1:
        raise ValueError(f"competence needs hops >= 1, got {hops}")
    return _COMPETENCE[hops - 1] if hops <= len(_COMPETENCE) else COMPETENCE_FLOOR


@dataclass(frozen=True, order=True)
class ExplorerId:
    initiator: int
    sequence: int

    @property
    def key(self) -> int:
        return (self.initiator << 32) | self.sequence

    def __str__(self) -> str:
        return f"{self.initiator}.{self.sequence}"


CycleId = tuple[int, int, int]


def cycle_id(explorer: ExplorerId, a: int, b: int) -> CycleId:
    x, y, z = sorted((explorer.key, a, b))
    return (x, y, z)


@dataclass(frozen=True)
class ForwardMessage:
    explorer: ExplorerId
    ttl: int
    forwarded_by: int
    tree_parent: Optional[int]
    # hop distance of the forwarder from the initiator
    hops_traveled: int
    forwarder_jitter: float

    def describe(self) -> str:
        return f"fwd {self.explorer} ttl={self.ttl} hops={self.hops_traveled} parent={self.tree_parent}"


@dataclass(frozen=True)
class CycleItem:
    cycle: CycleId
    hops: int


BRIDGE = "BRIDGE"
BackwardItem = Union[CycleItem, str]


@dataclass(frozen=True)
class BackwardMessage:
    search: ExplorerId
    sender: int
    items: tuple[BackwardItem, ...]

    def describe(self) -> str:
        if self.items == (BRIDGE,):
            return f"bwd {self.search} bridge"
        return f"bwd {self.search} cycles={len(self.items)}"


@dataclass(frozen=True)
class DibadawnConfig:
    initial_ttl: int = 10
    max_traversal_time: float = 0.056
    jitter_divisor: float = 4.0
    max_tx_time: float = 0.002
    unicast_attempts: int = 7
    # None derives a slot wide enough for a jittered flush plus every retry
    backward_slot_time: Optional[float] = None
    history_size: int = 5
    asymmetry_guard: bool = True
    backward_jitter: bool = True
    voting: Optional[RuleConfig] = None
    articulation_voting: Optional[RuleConfig] = None

    def __post_init__(self) -> None:
        if self.initial_ttl < 1:
            raise ValueError("initial_ttl must be at least 1")
        if self.max_traversal_time <= 0:
            raise ValueError("max_traversal_time must be positive")
        if self.jitter_divisor <= 0:
            raise ValueError("jitter_divisor must be positive")
        if self.history_size < 1:
            raise ValueError("history_size must be at least 1")

    @property
    def jitter_max(self) -> float:
        return self.max_traversal_time / self.jitter_divisor

    @property
    def slot_time(self) -> float:
        if self.backward_slot_time is not None:
            return self.backward_slot_time
        return self.jitter_max + (self.unicast_attempts + 1) * self.max_tx_time


def compute_forward_delay(forwarder_jitter: float, cfg: DibadawnConfig, rng) -> tuple[float, float]:
    """Return ``(min_delay, own_jitter)``; the node re-broadcasts after their sum.

    ``min_delay`` absorbs whatever part of the traversal window the forwarder
    already used, so each hop group transmits one window after the previous.
    """
    min_delay = max(0.0, cfg.max_traversal_time - forwarder_jitter - cfg.max_tx_time)
    return min_delay, float(rng.uniform(0.0, cfg.jitter_max))


def compute_timeout(hop_distance: int, initial_ttl: int, cfg: DibadawnConfig) -> float:
    """Backward timer length, counted from the start of the node's hop slot."""
    if hop_distance > initial_ttl:
        raise ValueError("hop distance exceeds the initial TTL")
    return (initial_ttl - hop_distance) * (cfg.max_traversal_time + cfg.slot_time)


@dataclass
class EdgeMarking:
    time: float
    search: ExplorerId
    bridge: bool
    edge: Edge
    competence: float


@dataclass(frozen=True)
class SearchResult:
    search: Optional[ExplorerId]
    time: float
    bridges: frozenset[Edge]
    is_articulation: bool


EMPTY_RESULT = SearchResult(None, 0.0, frozenset(), False)


@dataclass
class _Search:
    explorer: ExplorerId
    parent: Optional[int]
    hop: int
    ttl: int
    cross: dict[int, int] = field(default_factory=dict)
    # cycle id -> (hops so far, neighbor it came from or None for own)
    buffer: dict[CycleId, tuple[int, Optional[int]]] = field(default_factory=dict)
    log: dict[int, set] = field(default_factory=dict)
    marks: dict[Edge, tuple[bool, float]] = field(default_factory=dict)
    done: bool = False

    def note(self, neighbor: int, msg_id) -> None:
        self.log.setdefault(neighbor, set()).add(msg_id)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def link_classes(log: dict[int, set]) -> list[set[int]]:
    """Group neighbors whose links share at least one message id."""
    uf = _UnionFind(sorted(log))
    owner: dict = {}
    for nb in sorted(log):
        for mid in log[nb]:
            if mid in owner:
                uf.union(owner[mid], nb)
            else:
                owner[mid] = nb
    classes: dict[int, set[int]] = {}
    for nb in sorted(log):
        classes.setdefault(uf.find(nb), set()).add(nb)
    return list(classes.values())


StatementSink = Callable[[int, object, Statement], None]

SELF = "self"


class DibadawnNode:
    """One participant.  Attach to a :class:`Simulator` and call :meth:`start_search`."""

    def __init__(self, node_id: int, sim: Simulator, cfg: DibadawnConfig,
                 statement_sink: Optional[StatementSink] = None, keep_markings: int = 1000):
        self.id = node_id
        self.sim = sim
        self.cfg = cfg
        self.sink = statement_sink
        self._seq = itertools.count()
        self.searches: dict[ExplorerId, _Search] = {}
        self.finished: set[ExplorerId] = set()
        self.markings: deque[EdgeMarking] = deque(maxlen=keep_markings)
        self.history: dict[Edge, deque[Statement]] = {}
        self.articulation_history: deque[Statement] = deque(maxlen=cfg.history_size)
        self.last_result: SearchResult = EMPTY_RESULT
        self.completed = 0
        sim.attach(node_id, self)

    # -- forward phase ----------------------------------------------------

    def start_search(self) -> ExplorerId:
        cfg = self.cfg
        explorer = ExplorerId(self.id, next(self._seq))
        st = _Search(explorer, parent=None, hop=0, ttl=cfg.initial_ttl)
        self.searches[explorer] = st
        self.sim.set_timer(self.id, compute_timeout(0, cfg.initial_ttl, cfg), ("search", explorer),
                           self.on_timeout, explorer)
        self.sim.broadcast(self.id, ForwardMessage(explorer, cfg.initial_ttl - 1, self.id, None, 0, 0.0))
        return explorer

    def on_message(self, sender: int, payload) -> None:
        if isinstance(payload, ForwardMessage):
            self.on_forward(payload)
        elif isinstance(payload, BackwardMessage):
            self.on_backward(payload)

    def on_forward(self, msg: ForwardMessage) -> None:
        explorer = msg.explorer
        st = self.searches.get(explorer)
        if st is None:
            if explorer in self.finished or explorer.initiator == self.id:
                return
            self._join(msg)
            return
        if st.done or msg.tree_parent == self.id:
            return
        u = msg.forwarded_by
        if self.cfg.asymmetry_guard and abs(st.hop - msg.hops_traveled) > 1:
            self.sim.note(self.id, f"asymmetric cross edge to {u} in {explorer} ignored")
            return
        st.cross[u] = msg.hops_traveled
        st.note(u, cycle_id(explorer, self.id, u))

    def _join(self, msg: ForwardMessage) -> None:
        cfg = self.cfg
        sim = self.sim
        hop = msg.hops_traveled + 1
        st = _Search(msg.explorer, parent=msg.forwarded_by, hop=hop, ttl=msg.ttl)
        self.searches[msg.explorer] = st
        # start of this node's hop slot on the search's global time grid
        slot_start = sim.now - cfg.max_tx_time - msg.forwarder_jitter + cfg.max_traversal_time
        fire_at = slot_start + compute_timeout(min(hop, cfg.initial_ttl), cfg.initial_ttl, cfg)
        sim.set_timer(self.id, max(0.0, fire_at - sim.now), ("search", msg.explorer),
                      self.on_timeout, msg.explorer)
        if st.ttl > 0:
            min_delay, jitter = compute_forward_delay(msg.forwarder_jitter, cfg, sim.rng)
            out = ForwardMessage(msg.explorer, st.ttl - 1, self.id, st.parent, hop, jitter)
            sim.schedule(min_delay + jitter, sim.broadcast, self.id, out, kind="forward", node=self.id)

    # -- backward phase ---------------------------------------------------

    def _mark(self, st: _Search, e: Edge, bridge: bool, comp: float) -> None:
        st.marks[e] = (bridge, comp)
        self.markings.append(EdgeMarking(self.sim.now, st.explorer, bridge, e, comp))

    def on_backward(self, msg: BackwardMessage) -> None:
        st = self.searches.get(msg.search)
        if st is None or st.done:
            self.sim.note(self.id, f"late backward message from {msg.sender} in {msg.search} dropped")
            return
        s = msg.sender
        for item in msg.items:
            if item == BRIDGE:
                self._mark(st, edge(self.id, s), True, 1.0)
                st.note(s, ("bridge", s, self.id))
                continue
            match = st.buffer.pop(item.cycle, None)
            st.note(s, item.cycle)
            if match is None:
                st.buffer[item.cycle] = (item.hops, s)
                continue
            hops2, s2 = match
            self._mark(st, edge(self.id, s), False, competence(item.hops))
            if s2 is not None and s2 != s:
                self._mark(st, edge(self.id, s2), False, competence(hops2))

    def detect_cycles(self, st: _Search) -> None:
        for u in st.cross:
            cid = cycle_id(st.explorer, self.id, u)
            self._mark(st, edge(self.id, u), False, 1.0)
            st.note(u, cid)
            match = st.buffer.pop(cid, None)
            if match is not None:
                # our own cross edge closed a cycle with an item from below
                hops2, s2 = match
                if s2 is not None:
                    self._mark(st, edge(self.id, s2), False, competence(hops2))
                continue
            st.buffer[cid] = (0, None)

    def on_timeout(self, explorer: ExplorerId) -> None:
        st = self.searches.get(explorer)
        if st is None or st.done:
            return
        st.done = True
        self.detect_cycles(st)
        if st.parent is not None:
            self._flush(st)
        is_art = self.detect_articulation(st)
        self._complete(st, is_art)
        del self.searches[explorer]
        self.finished.add(explorer)

    def _flush(self, st: _Search) -> None:
        p = st.parent
        if st.buffer:
            items = tuple(CycleItem(cid, hops + 1) for cid, (hops, _) in st.buffer.items())
            for it in items:
                st.note(p, it.cycle)
        else:
            items = (BRIDGE,)
            self._mark(st, edge(self.id, p), True, 1.0)
            st.note(p, ("bridge", self.id, p))
        msg = BackwardMessage(st.explorer, self.id, items)
        delay = float(self.sim.rng.uniform(0.0, self.cfg.jitter_max)) if self.cfg.backward_jitter else 0.0
        self.sim.schedule(delay, self.sim.unicast, self.id, p, msg, kind="backward", node=self.id)

    @staticmethod
    def detect_articulation(st: _Search) -> bool:
        return len(link_classes(st.log)) >= 2

    # -- results ----------------------------------------------------------

    def _complete(self, st: _Search, is_art: bool) -> None:
        now = self.sim.now
        k = self.cfg.history_size
        bridges = frozenset(e for e, (b, _) in st.marks.items() if b)
        self.last_result = SearchResult(st.explorer, now, bridges, is_art)
        self.completed += 1
        for e, (b, comp) in st.marks.items():
            self._record(e, Statement(b, comp, st.explorer, now), k)
        self.forget_stale(st)
        s = Statement(is_art, 1.0, st.explorer, now)
        self.articulation_history.append(s)
        if self.sink is not None:
            self.sink(self.id, SELF, s)

    def _record(self, e: Edge, s: Statement, k: int) -> None:
        h = self.history.get(e)
        if h is None:
            h = self.history[e] = deque(maxlen=k)
        h.append(s)
        if self.sink is not None:
            self.sink(self.id, e, s)

    def forget_stale(self, st: _Search) -> None:
        """Edges known from earlier searches but silent in ``st`` count as non-bridges."""
        now = self.sim.now
        for e in list(self.history):
            if e not in st.marks:
                self._record(e, Statement(False, 1.0, st.explorer, now), self.cfg.history_size)

    def query_results(self) -> tuple[frozenset[Edge], bool]:
        cfg = self.cfg
        if cfg.voting is None:
            return self.last_result.bridges, self.last_result.is_articulation
        bridges = frozenset(e for e, h in self.history.items() if vote(h, cfg.voting))
        art_cfg = cfg.articulation_voting or cfg.voting
        return bridges, vote(self.articulation_history, art_cfg) if self.completed else False


@dataclass
class SearchOutcome:
    """Union of what every node published after one isolated search."""

    bridges: frozenset[Edge]
    articulation_points: frozenset[int]
    transmissions: int
    nodes: dict[int, DibadawnNode]
    sim: Simulator


def run_single_search(graph, initiator: int, cfg: DibadawnConfig = DibadawnConfig(), *,
                      channel=None, seed: int = 0, drop_filter=None, log_events: bool = False) -> SearchOutcome:
    """Run one search from ``initiator`` over ``graph`` and drain the simulator."""
    from .netsim import ChannelConfig, Medium

    channel = channel or ChannelConfig(mode="lossless", max_tx_time=cfg.max_tx_time,
                                       unicast_attempts=cfg.unicast_attempts)
    sim = Simulator(Medium.from_graph(graph, channel), channel, seed, log_events=log_events)
    sim.drop_filter = drop_filter
    nodes = {v: DibadawnNode(v, sim, cfg) for v in sorted(graph.nodes)}
    nodes[initiator].start_search()
    sim.run()
    bridges: set[Edge] = set()
    cuts = set()
    for v, node in nodes.items():
        b, art = node.query_results()
        bridges |= b
        if art:
            cuts.add(v)
    return SearchOutcome(frozenset(bridges), frozenset(cuts),
                         sim.stats.broadcasts + sim.stats.unicasts, nodes, sim)
