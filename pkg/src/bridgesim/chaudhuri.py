"""Reliable-channel articulation point detection by distributed DFS.

A single SEARCH token walks the graph depth-first, carrying the set of
visited nodes.  When it returns to the root a TERMINATE wave travels down the
DFS tree, and leaves start a NONTREE convergecast: every node reports the
non-tree links leaving its subtree.  A node is an articulation point when
some child's report contains no link reaching strictly above it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .graph import Edge, Graph, edge
from .netsim import ChannelConfig, Medium, Simulator


class LossyChannelError(RuntimeError):
    """The baseline assumes reliable delivery and refuses lossy channels."""


@dataclass(frozen=True)
class Search:
    visited: frozenset[int]

    def describe(self) -> str:
        return f"search visited={len(self.visited)}"


@dataclass(frozen=True)
class Terminate:
    def describe(self) -> str:
        return "terminate"


@dataclass(frozen=True)
class NonTree:
    links: frozenset[Edge]
    subtree: frozenset[int]

    def describe(self) -> str:
        return f"nontree links={len(self.links)}"


@dataclass
class ChaudhuriState:
    node: int
    neighbors: tuple[int, ...]
    parent: Optional[int] = None
    children: list[int] = field(default_factory=list)
    visited_set_seen: frozenset[int] = frozenset()
    cross_links: set[Edge] = field(default_factory=set)
    is_articulation: bool = False
    phase: str = "search"
    reports: dict[int, NonTree] = field(default_factory=dict)


class ChaudhuriNode:
    def __init__(self, node_id: int, neighbors: tuple[int, ...], sim: Simulator, root: bool = False):
        self.st = ChaudhuriState(node_id, neighbors)
        self.sim = sim
        self.root = root
        sim.attach(node_id, self)

    def start(self) -> None:
        self.st.visited_set_seen = frozenset({self.st.node})
        self._advance()

    def on_message(self, sender: int, payload) -> None:
        st = self.st
        if isinstance(payload, Search):
            if st.node not in payload.visited:
                st.parent = sender
                st.visited_set_seen = payload.visited | {st.node}
            else:
                st.visited_set_seen = payload.visited
            self._advance()
        elif isinstance(payload, Terminate):
            self._terminate()
        elif isinstance(payload, NonTree):
            st.reports[sender] = payload
            if len(st.reports) == len(st.children):
                self._conclude()

    def _advance(self) -> None:
        st = self.st
        for w in st.neighbors:
            if w not in st.visited_set_seen:
                st.children.append(w)
                self.sim.unicast(st.node, w, Search(st.visited_set_seen))
                return
        tree = set(st.children)
        if st.parent is not None:
            tree.add(st.parent)
        st.cross_links = {edge(st.node, w) for w in st.neighbors if w not in tree}
        if st.parent is not None:
            self.sim.unicast(st.node, st.parent, Search(st.visited_set_seen))
        else:
            self._terminate()

    def _terminate(self) -> None:
        st = self.st
        st.phase = "nontree"
        for c in st.children:
            self.sim.unicast(st.node, c, Terminate())
        if not st.children:
            self._conclude()

    def _conclude(self) -> None:
        st = self.st
        me = st.node
        if st.parent is None:
            st.is_articulation = len(st.children) >= 2
        else:
            # a child whose subtree only links back to us (or nowhere) is cut off without us
            st.is_articulation = any(all(me in l for l in r.links) for r in st.reports.values())
        subtree = frozenset({me}).union(*(r.subtree for r in st.reports.values()))
        links = set(st.cross_links)
        for r in st.reports.values():
            links |= r.links
        links = {l for l in links if not (l[0] in subtree and l[1] in subtree)}
        st.phase = "done"
        if st.parent is not None:
            self.sim.unicast(me, st.parent, NonTree(frozenset(links), subtree))


@dataclass
class BaselineResult:
    articulation: dict[int, bool]
    messages: int


def run_baseline(g: Graph, root: int, sim: Optional[Simulator] = None, seed: int = 0) -> BaselineResult:
    """Run the baseline over the component containing ``root``."""
    if sim is None:
        channel = ChannelConfig(mode="lossless")
        sim = Simulator(Medium.from_graph(g, channel), channel, seed)
    elif sim.channel.mode != "lossless":
        raise LossyChannelError(f"baseline needs a lossless channel, got {sim.channel.mode!r}")
    nodes = {v: ChaudhuriNode(v, g.neighbors(v), sim, root=(v == root)) for v in sorted(g.nodes)}
    before = sim.stats.unicasts
    nodes[root].start()
    sim.run()
    return BaselineResult({v: n.st.is_articulation for v, n in nodes.items()}, sim.stats.unicasts - before)
