"""Topology generators and the periodic experiment schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .graph import Edge, Graph, connected_components, edge
from .netsim import ChannelConfig, Medium, Position, Simulator
from .protocol import SELF, DibadawnConfig, DibadawnNode
from .radio import ShadowingParams, TrafficCounters

# Scenario channels cut the Gaussian tail at this range (units).
DEFAULT_RANGE = 400.0


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Topology:
    kind: str
    positions: dict[int, Position]
    # edges that may be scored; None means every reference edge
    evaluable: Optional[frozenset[Edge]] = None
    meta: dict = field(default_factory=dict)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.positions)


def _disk_graph(positions: dict[int, Position], r: float) -> Graph:
    ids = sorted(positions)
    pts = np.array([positions[i] for i in ids], dtype=float)
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    ii, jj = np.nonzero(np.triu(d <= r, k=1))
    return Graph.from_edges(ids, [(ids[i], ids[j]) for i, j in zip(ii, jj)])


def random_geometric(n: int = 175, area: tuple[float, float] = (4000.0, 4000.0),
                     comm_range: float = DEFAULT_RANGE, seed: int = 0,
                     max_retries: int = 5000) -> Topology:
    """Uniform placement in a rectangle, redrawn until the range graph is connected."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    w, h = area
    for attempt in range(max_retries):
        xy = rng.uniform((0.0, 0.0), (w, h), size=(n, 2))
        positions = {i: (float(x), float(y)) for i, (x, y) in enumerate(xy)}
        if len(connected_components(_disk_graph(positions, comm_range))) == 1:
            return Topology("random-geometric", positions,
                            meta={"area": area, "comm_range": comm_range, "attempts": attempt + 1})
    raise GenerationError(f"no connected placement of {n} nodes in {max_retries} tries")


@dataclass(frozen=True)
class TwoClusterParams:
    bridge_length: float = 250.0
    nodes_per_cluster: tuple[int, int] = (10, 10)
    radius: float = 230.0
    guard: float = 170.0
    vertical_extent: float = 300.0
    # range within which no cross-cluster pair besides the hubs may fall; None skips the check
    isolation_range: Optional[float] = DEFAULT_RANGE

    def __post_init__(self) -> None:
        if not self.guard < self.radius:
            raise ValueError("guard distance must be smaller than the radius")
        if min(self.nodes_per_cluster) < 1:
            raise ValueError("each cluster needs at least its hub")


NODE_COUNT_PRESET = TwoClusterParams(radius=230.0, guard=170.0)


def link_distance_preset(radius: float) -> TwoClusterParams:
    return TwoClusterParams(radius=radius, guard=50.0, isolation_range=None)


def two_cluster_bridge(p: TwoClusterParams, seed: int = 0) -> Topology:
    """Hubs 0 and 1 joined by one long link, each with a fan of members behind it.

    Members sit on the circle of the given radius around their hub, on the side
    facing away from the other hub and behind the guard line, with the
    vertical coordinate drawn uniformly.
    """
    rng = np.random.default_rng(seed)
    y_lim = min(p.vertical_extent / 2.0, math.sqrt(p.radius ** 2 - p.guard ** 2))
    positions: dict[int, Position] = {0: (0.0, 0.0), 1: (p.bridge_length, 0.0)}
    clusters: list[list[int]] = [[0], [1]]
    nid = 2
    for side, (hub_x, sign) in enumerate(((0.0, -1.0), (p.bridge_length, 1.0))):
        for _ in range(p.nodes_per_cluster[side] - 1):
            y = float(rng.uniform(-y_lim, y_lim))
            positions[nid] = (hub_x + sign * math.sqrt(p.radius ** 2 - y * y), y)
            clusters[side].append(nid)
            nid += 1
    if p.isolation_range is not None:
        for a in clusters[0]:
            for b in clusters[1]:
                if (a, b) == (0, 1):
                    continue
                (xa, ya), (xb, yb) = positions[a], positions[b]
                if math.hypot(xa - xb, ya - yb) <= p.isolation_range:
                    raise GenerationError(f"nodes {a} and {b} are within isolation range")
    return Topology("two-cluster", positions, evaluable=frozenset({edge(0, 1)}),
                    meta={"clusters": clusters})


def ring(n: int, spacing: float = 100.0) -> Topology:
    if n < 3:
        raise ValueError("a ring needs at least 3 nodes")
    r = spacing / (2.0 * math.sin(math.pi / n))
    positions = {i: (r * math.cos(2 * math.pi * i / n), r * math.sin(2 * math.pi * i / n)) for i in range(n)}
    return Topology("ring", positions, meta={"spacing": spacing})


def line(n: int, spacing: float = 100.0) -> Topology:
    if n < 1:
        raise ValueError("a line needs at least 1 node")
    return Topology("line", {i: (i * spacing, 0.0) for i in range(n)}, meta={"spacing": spacing})


def scenario_channel(mode: str = "shadowing", max_range: Optional[float] = DEFAULT_RANGE, **kw) -> ChannelConfig:
    return ChannelConfig(mode=mode, shadowing=ShadowingParams(max_range=max_range), **kw)


@dataclass(frozen=True)
class ScheduleConfig:
    warmup: float = 200.0
    eval_duration: float = 300.0
    period: float = 30.0
    start_probability: float = 0.8
    initial_delay_max: float = 20.0
    snapshot_period: float = 30.0

    def __post_init__(self) -> None:
        for name in ("warmup", "eval_duration", "period", "initial_delay_max", "snapshot_period"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.period <= 0 or self.snapshot_period <= 0:
            raise ValueError("period and snapshot_period must be positive")
        if not 0.0 <= self.start_probability <= 1.0:
            raise ValueError("start_probability must lie in [0, 1]")

    @property
    def end(self) -> float:
        return self.warmup + self.eval_duration

    def snapshot_times(self) -> list[float]:
        count = int(math.floor(self.eval_duration / self.snapshot_period + 1e-9))
        return [self.warmup + j * self.snapshot_period for j in range(1, count + 1)]


@dataclass(frozen=True)
class SnapshotRow:
    seq: int
    node: int
    is_articulation: bool
    bridges: tuple[Edge, ...]


@dataclass(frozen=True)
class WindowRow:
    """A node's statement window for one subject at snapshot ``seq``."""

    seq: int
    node: int
    subject: object  # an Edge or SELF
    window: tuple[tuple[bool, float], ...]


@dataclass
class RunArtifacts:
    nodes: list[int]
    snapshots: list[SnapshotRow]
    snapshot_times: dict[int, float]
    windows: list[WindowRow]
    counters: TrafficCounters
    stats: dict
    evaluable: Optional[frozenset[Edge]] = None
    event_log: Optional[list[str]] = None


def _seeds(seed: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def run_schedule(topology: Topology, schedule: ScheduleConfig = ScheduleConfig(),
                 protocol: DibadawnConfig = DibadawnConfig(), seed: int = 0,
                 channel: Optional[ChannelConfig] = None, *, algorithm: str = "dibadawn",
                 log_events: bool = False) -> RunArtifacts:
    """Drive periodic searches over ``topology`` and collect snapshots."""
    channel = channel or scenario_channel(max_tx_time=protocol.max_tx_time,
                                          unicast_attempts=protocol.unicast_attempts)
    sched_seed, sim_seed = _seeds(seed)
    medium = Medium.from_positions(topology.positions, channel)
    sim = Simulator(medium, channel, sim_seed, log_events=log_events)
    if algorithm == "chaudhuri":
        return _run_baseline_schedule(topology, schedule, medium, sim)
    if algorithm != "dibadawn":
        raise ValueError(f"unknown algorithm {algorithm!r}")
    rng = np.random.default_rng(sched_seed)
    nodes = {v: DibadawnNode(v, sim, protocol) for v in topology.nodes}
    started = [0]

    def opportunity(v: int) -> None:
        if rng.random() < schedule.start_probability:
            nodes[v].start_search()
            started[0] += 1
        nxt = sim.now + schedule.period
        if nxt < schedule.end:
            sim.schedule_at(nxt, opportunity, v, node=v)

    for v in topology.nodes:
        t = float(rng.uniform(0.0, schedule.initial_delay_max))
        if t < schedule.end:
            sim.schedule_at(t, opportunity, v, node=v)

    snapshots: list[SnapshotRow] = []
    windows: list[WindowRow] = []
    times = {}

    def snapshot(seq: int) -> None:
        times[seq] = sim.now
        for v, node in nodes.items():
            bridges, art = node.query_results()
            snapshots.append(SnapshotRow(seq, v, art, tuple(sorted(bridges))))
            for e in sorted(node.history):
                windows.append(WindowRow(seq, v, e, tuple((s.positive, s.competence) for s in node.history[e])))
            if node.articulation_history:
                windows.append(WindowRow(seq, v, SELF, tuple((s.positive, s.competence)
                                                             for s in node.articulation_history)))

    for seq, t in enumerate(schedule.snapshot_times(), start=1):
        sim.schedule_at(t, snapshot, seq, kind="snapshot")
    sim.run()
    stats = {
        "searches_started": started[0],
        "searches_completed": sum(n.completed for n in nodes.values()),
        "broadcasts": sim.stats.broadcasts,
        "unicasts": sim.stats.unicasts,
        "unicast_frames": sim.stats.unicast_frames,
        "unicast_failures": sim.stats.unicast_failures,
        "events": sim.stats.events,
        "end_time": sim.now,
    }
    return RunArtifacts(topology.nodes, snapshots, times, windows, sim.counters, stats,
                        topology.evaluable, sim.log)


def _run_baseline_schedule(topology, schedule, medium, sim) -> RunArtifacts:
    from .chaudhuri import run_baseline

    g = medium.graph()
    result = run_baseline(g, topology.nodes[0], sim)
    # one beacon per node so ETX counters exist for the reference graph
    for v in topology.nodes:
        sim.broadcast(v, "beacon")
    sim.run()
    snapshots = []
    times = {}
    for seq, t in enumerate(schedule.snapshot_times(), start=1):
        times[seq] = t
        snapshots.extend(SnapshotRow(seq, v, result.articulation.get(v, False), ()) for v in topology.nodes)
    stats = {"messages": result.messages, "broadcasts": sim.stats.broadcasts, "end_time": sim.now}
    return RunArtifacts(topology.nodes, snapshots, times, [], sim.counters, stats, topology.evaluable, sim.log)
