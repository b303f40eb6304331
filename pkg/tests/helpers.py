"""Shared generators for tests."""

import random

from bridgesim.graph import Graph, eccentricity


def random_graph(rng: random.Random, n: int, extra: int) -> Graph:
    """Random graph on ``n`` nodes with ``extra`` random edge draws (may be disconnected)."""
    es = []
    for _ in range(extra):
        if n > 1:
            a, b = rng.sample(range(n), 2)
            es.append((a, b))
    return Graph.from_edges(n, es)


def random_connected(rng: random.Random, n: int, extra: int) -> Graph:
    """Random spanning tree plus ``extra`` random chords."""
    es = [(v, rng.randrange(v)) for v in range(1, n)]
    for _ in range(extra):
        if n > 1:
            a, b = rng.sample(range(n), 2)
            es.append((a, b))
    return Graph.from_edges(n, es)


def connected_within(rng: random.Random, max_n: int, root_ecc: int, tries: int = 1000):
    """A connected graph and a node whose eccentricity is at most ``root_ecc``."""
    for _ in range(tries):
        n = rng.randint(2, max_n)
        g = random_connected(rng, n, rng.randint(0, n))
        root = rng.randrange(n)
        if eccentricity(g, root) <= root_ecc:
            return g, root
    raise RuntimeError("no graph found")
