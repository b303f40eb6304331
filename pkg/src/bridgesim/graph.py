"""Undirected graphs and exact bridge / articulation point oracles.

Two independent oracles live here: :func:`tarjan_report` (one iterative
DFS pass) and :func:`brute_force_report` (remove each element, recount
components).  Both are used as ground truth elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

Edge = tuple[int, int]


def edge(u: int, v: int) -> Edge:
    """Return the canonical (sorted) form of the undirected edge ``{u, v}``."""
    if u == v:
        raise ValueError(f"self-loop on node {u}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph over integer node ids."""

    nodes: frozenset[int]
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        for u, v in self.edges:
            if u >= v:
                raise ValueError(f"edge {(u, v)} is not canonical")
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge {(u, v)} has an endpoint outside the node set")

    @classmethod
    def from_edges(cls, nodes: Iterable[int] | int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph.  ``nodes`` may be a count (ids ``0..n-1``) or an iterable."""
        node_set = frozenset(range(nodes)) if isinstance(nodes, int) else frozenset(nodes)
        edge_set = frozenset(edge(u, v) for u, v in edges)
        return cls(node_set | {x for e in edge_set for x in e}, edge_set)

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in sorted(adj.items())}

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def without_edge(self, e: Edge) -> "Graph":
        return Graph(self.nodes, self.edges - {edge(*e)})

    def without_node(self, v: int) -> "Graph":
        return Graph(self.nodes - {v}, frozenset(e for e in self.edges if v not in e))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class BiconnectivityReport:
    bridges: frozenset[Edge]
    articulation_points: frozenset[int]
    components: tuple[frozenset[int], ...] = field(default=())


def _bfs_order(g: Graph, start: int, seen: set[int]) -> list[int]:
    order = [start]
    seen.add(start)
    i = 0
    while i < len(order):
        for w in g.adjacency[order[i]]:
            if w not in seen:
                seen.add(w)
                order.append(w)
        i += 1
    return order


def connected_components(g: Graph) -> tuple[frozenset[int], ...]:
    """Partition the nodes into maximal connected parts, ordered by smallest id."""
    seen: set[int] = set()
    parts = []
    for v in sorted(g.nodes):
        if v not in seen:
            parts.append(frozenset(_bfs_order(g, v, seen)))
    return tuple(parts)


def eccentricity(g: Graph, v: int) -> int:
    """Largest hop distance from ``v`` to any node reachable from it."""
    dist = {v: 0}
    frontier = [v]
    while frontier:
        nxt = []
        for u in frontier:
            for w in g.adjacency[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return max(dist.values())


def tarjan_report(g: Graph) -> BiconnectivityReport:
    """Bridges and articulation points via a single lowpoint DFS.

    The DFS is iterative so deep graphs do not hit the recursion limit.
    Roots are visited in ascending id order, neighbors likewise.

    >>> r = tarjan_report(Graph.from_edges(3, [(0, 1), (1, 2)]))
    >>> sorted(r.bridges), sorted(r.articulation_points)
    ([(0, 1), (1, 2)], [1])
    """
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges: set[Edge] = set()
    cuts: set[int] = set()
    counter = 0
    adj = g.adjacency
    for root in sorted(g.nodes):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        root_children = 0
        # frames: (node, parent, neighbor iterator)
        stack: list[tuple[int, int | None, Iterator[int]]] = [(root, None, iter(adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w in disc:
                    low[v] = min(low[v], disc[w])
                    continue
                disc[w] = low[w] = counter
                counter += 1
                if v == root:
                    root_children += 1
                stack.append((w, v, iter(adj[w])))
                advanced = True
                break
            if advanced:
                continue
            stack.pop()
            if parent is None:
                continue
            low[parent] = min(low[parent], low[v])
            if low[v] > disc[parent]:
                bridges.add(edge(parent, v))
            if parent != root and low[v] >= disc[parent]:
                cuts.add(parent)
        if root_children >= 2:
            cuts.add(root)
    return BiconnectivityReport(frozenset(bridges), frozenset(cuts), connected_components(g))


def brute_force_report(g: Graph) -> BiconnectivityReport:
    """Classify every edge and node by deleting it and recounting components."""
    base = connected_components(g)
    count = len(base)
    bridges = frozenset(e for e in g.edges if len(connected_components(g.without_edge(e))) > count)
    # deleting an isolated node lowers the count; only increases matter
    cuts = frozenset(v for v in g.nodes if len(connected_components(g.without_node(v))) > count)
    return BiconnectivityReport(bridges, cuts, base)


class GraphFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_graph_text(text: str) -> tuple[Graph, dict[Edge, float]]:
    """Parse ``nodes N`` followed by ``u v [etx]`` lines.

    Blank lines and ``#`` comments are skipped.  Returns the graph and the
    ETX annotations of the edges that carry one.
    """
    n: int | None = None
    edges: list[Edge] = []
    etx: dict[Edge, float] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "nodes":
                raise GraphFormatError(line_no, "expected header 'nodes N'")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphFormatError(line_no, f"bad node count {parts[1]!r}") from None
            if n < 0:
                raise GraphFormatError(line_no, "node count must be non-negative")
            continue
        if len(parts) not in (2, 3):
            raise GraphFormatError(line_no, "expected 'u v [etx]'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(line_no, "node ids must be integers") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(line_no, f"node id out of range 0..{n - 1}")
        if u == v:
            raise GraphFormatError(line_no, "self-loop")
        e = edge(u, v)
        if len(parts) == 3:
            try:
                etx[e] = float(parts[2])
            except ValueError:
                raise GraphFormatError(line_no, f"bad etx value {parts[2]!r}") from None
        edges.append(e)
    if n is None:
        raise GraphFormatError(0, "missing header 'nodes N'")
    return Graph.from_edges(n, edges), etx


def format_graph_text(g: Graph, etx: dict[Edge, float] | None = None) -> str:
    lines = [f"nodes {len(g.nodes)}"]
    for u, v in sorted(g.edges):
        if etx and (u, v) in etx:
            lines.append(f"{u} {v} {etx[(u, v)]!r}")
        else:
            lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def etx_cut(g: Graph, etx: dict[Edge, float], threshold: float) -> Graph:
    """Keep unannotated edges and annotated edges with ETX at most ``threshold``."""
    return Graph(g.nodes, frozenset(e for e in g.edges if etx.get(e, 1.0) <= threshold))
