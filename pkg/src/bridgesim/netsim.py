"""Seeded discrete-event engine with lossy broadcast and retrying unicast."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Protocol

import numpy as np

from .graph import Graph
from .radio import ShadowingParams, TrafficCounters, reception_probability

Position = tuple[float, float]

MODES = ("lossless", "shadowing", "loss-table")


@dataclass(frozen=True)
class ChannelConfig:
    mode: str = "shadowing"
    shadowing: ShadowingParams = field(default_factory=ShadowingParams)
    # directed (sender, receiver) -> reception probability, used by "loss-table"
    loss_table: Optional[Mapping[tuple[int, int], float]] = None
    max_tx_time: float = 0.002
    unicast_attempts: int = 7
    ack_modeled: bool = True
    prune_below: float = 1e-6

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown channel mode {self.mode!r}; expected one of {MODES}")
        if self.unicast_attempts < 1:
            raise ValueError("unicast_attempts must be at least 1")
        if self.max_tx_time < 0:
            raise ValueError("max_tx_time must be non-negative")
        if self.mode == "loss-table" and self.loss_table is None:
            raise ValueError("loss-table mode needs a loss_table")


class Medium:
    """Per-sender neighbor lists with reception probabilities.

    Only pairs above the pruning threshold are stored; receivers are kept in
    ascending id order so random draws line up with a stable receiver order.
    """

    def __init__(self, links: Mapping[int, Mapping[int, float]], nodes: Optional[list[int]] = None):
        ids = sorted(set(nodes or ()) | set(links))
        self.nodes = ids
        self._prob: dict[tuple[int, int], float] = {}
        self.receivers: dict[int, tuple[int, ...]] = {}
        self.probs: dict[int, np.ndarray] = {}
        self.certain: dict[int, bool] = {}
        for a in ids:
            row = sorted((b, float(p)) for b, p in links.get(a, {}).items() if p > 0 and b != a)
            self.receivers[a] = tuple(b for b, _ in row)
            self.probs[a] = np.array([p for _, p in row], dtype=float)
            self.certain[a] = all(p >= 1.0 for _, p in row)
            for b, p in row:
                self._prob[(a, b)] = p

    def probability(self, a: int, b: int) -> float:
        return self._prob.get((a, b), 0.0)

    @classmethod
    def from_graph(cls, g: Graph, channel: Optional[ChannelConfig] = None) -> "Medium":
        """Links exactly along ``g``'s edges, probability 1 unless a loss table overrides."""
        table = channel.loss_table if channel is not None and channel.mode == "loss-table" else None
        links: dict[int, dict[int, float]] = {v: {} for v in g.nodes}
        for u, v in g.edges:
            links[u][v] = 1.0
            links[v][u] = 1.0
        if table:
            for (a, b), p in table.items():
                links.setdefault(a, {})[b] = p
        return cls(links, sorted(g.nodes))

    @classmethod
    def from_positions(cls, positions: Mapping[int, Position], channel: ChannelConfig) -> "Medium":
        ids = sorted(positions)
        links: dict[int, dict[int, float]] = {v: {} for v in ids}
        for i, a in enumerate(ids):
            xa, ya = positions[a]
            for b in ids[i + 1:]:
                xb, yb = positions[b]
                d = math.hypot(xa - xb, ya - yb)
                if d == 0:
                    raise ValueError(f"nodes {a} and {b} share a position")
                p = reception_probability(d, channel.shadowing)
                if p <= channel.prune_below:
                    continue
                if channel.mode == "lossless":
                    p = 1.0
                links[a][b] = p
                links[b][a] = p
        if channel.mode == "loss-table":
            for (a, b), p in channel.loss_table.items():
                links.setdefault(a, {})[b] = p
        return cls(links, ids)

    def graph(self, min_probability: float = 0.0) -> Graph:
        """Undirected graph of pairs with probability above ``min_probability`` both ways."""
        es = [(a, b) for (a, b), p in self._prob.items()
              if a < b and p > min_probability and self._prob.get((b, a), 0.0) > min_probability]
        return Graph.from_edges(self.nodes, es)


class Handler(Protocol):
    def on_message(self, sender: int, payload: Any) -> None: ...


class _Event:
    __slots__ = ("time", "seq", "fn", "args", "kind", "node", "cancelled")

    def __init__(self, time, seq, fn, args, kind, node):
        self.time = time
        self.seq = seq
        self.fn = fn
        self.args = args
        self.kind = kind
        self.node = node
        self.cancelled = False


@dataclass
class SimStats:
    broadcasts: int = 0
    unicasts: int = 0
    unicast_frames: int = 0
    unicast_failures: int = 0
    deliveries: int = 0
    events: int = 0


def _describe(payload: Any) -> str:
    describe = getattr(payload, "describe", None)
    return describe() if callable(describe) else type(payload).__name__


class Simulator:
    """Single-threaded event loop.  Events run in strict ``(time, seq)`` order."""

    def __init__(self, medium: Medium, channel: ChannelConfig, seed: int, *, log_events: bool = False):
        self.medium = medium
        self.channel = channel
        self.rng = np.random.default_rng(seed)
        self.now = 0.0
        self.counters = TrafficCounters()
        self.stats = SimStats()
        self.handlers: dict[int, Handler] = {}
        self.log: Optional[list[str]] = [] if log_events else None
        # scripted loss hook: return True to drop a frame before the channel draw
        self.drop_filter: Optional[Callable[[int, int, Any], bool]] = None
        self._queue: list[tuple[float, int, _Event]] = []
        self._seq = 0
        self._timers: dict[tuple[int, Any], _Event] = {}

    # -- scheduling -------------------------------------------------------

    def attach(self, node: int, handler: Handler) -> None:
        self.handlers[node] = handler

    def schedule_at(self, time: float, fn: Callable, *args, kind: str = "action", node: int = -1) -> _Event:
        if time < self.now:
            raise ValueError(f"cannot schedule in the past ({time} < {self.now})")
        ev = _Event(time, self._seq, fn, args, kind, node)
        self._seq += 1
        heapq.heappush(self._queue, (time, ev.seq, ev))
        return ev

    def schedule(self, delay: float, fn: Callable, *args, kind: str = "action", node: int = -1) -> _Event:
        if delay < 0:
            raise ValueError("delay must be non-negative")
        return self.schedule_at(self.now + delay, fn, *args, kind=kind, node=node)

    @staticmethod
    def cancel(ev: Optional[_Event]) -> None:
        if ev is not None:
            ev.cancelled = True

    def set_timer(self, node: int, duration: float, tag: Any, fn: Callable, *args) -> _Event:
        """Arm a timer; re-arming the same ``(node, tag)`` replaces the old one."""
        if duration < 0:
            raise ValueError("timer duration must be non-negative")
        self.cancel_timer(node, tag)
        ev = self.schedule(duration, self._fire_timer, node, tag, fn, args, kind="timer", node=node)
        self._timers[(node, tag)] = ev
        return ev

    def cancel_timer(self, node: int, tag: Any) -> None:
        ev = self._timers.pop((node, tag), None)
        self.cancel(ev)

    def _fire_timer(self, node, tag, fn, args):
        self._timers.pop((node, tag), None)
        fn(*args)

    def run_until(self, t_end: float) -> None:
        q = self._queue
        while q and q[0][0] <= t_end:
            time, _, ev = heapq.heappop(q)
            if ev.cancelled:
                continue
            self.now = time
            self.stats.events += 1
            if self.log is not None:
                self.log.append(f"{time:.6f} {ev.kind} {ev.node} {self._event_details(ev)}")
            ev.fn(*ev.args)
        if t_end != math.inf:
            self.now = max(self.now, t_end)

    def run(self) -> None:
        self.run_until(math.inf)

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    @staticmethod
    def _event_details(ev: _Event) -> str:
        if ev.kind == "deliver":
            sender, receivers, payload = ev.args
            return f"from={sender} to={','.join(map(str, receivers))} {_describe(payload)}"
        if ev.kind == "timer":
            return f"tag={ev.args[1]!r}"
        return getattr(ev.fn, "__name__", "action")

    def note(self, node: int, text: str) -> None:
        """Append a free-form line to the event log (no-op when logging is off)."""
        if self.log is not None:
            self.log.append(f"{self.now:.6f} note {node} {text}")

    # -- transmission -----------------------------------------------------

    def broadcast(self, sender: int, payload: Any, at: Optional[float] = None) -> None:
        """Transmit to every neighbor with an independent reception draw each."""
        start = self.now if at is None else at
        self.stats.broadcasts += 1
        self.counters.record_tx(sender)
        receivers = self.medium.receivers.get(sender, ())
        if not receivers:
            return
        if self.medium.certain[sender]:
            got = list(receivers)
        else:
            hits = self.rng.random(len(receivers)) < self.medium.probs[sender]
            got = [r for r, h in zip(receivers, hits) if h]
        if self.drop_filter is not None:
            got = [r for r in got if not self.drop_filter(sender, r, payload)]
        for r in got:
            self.counters.record_rx(sender, r)
        if got:
            self.schedule_at(start + self.channel.max_tx_time, self._deliver_many, sender, got, payload,
                             kind="deliver", node=sender)

    def _deliver_many(self, sender: int, receivers: list[int], payload: Any) -> None:
        handlers = self.handlers
        for r in receivers:
            h = handlers.get(r)
            if h is not None:
                self.stats.deliveries += 1
                h.on_message(sender, payload)

    def unicast(self, sender: int, receiver: int, payload: Any, at: Optional[float] = None) -> bool:
        """Send with up to ``unicast_attempts`` tries.  Returns whether it will arrive.

        The return value is for instrumentation only; protocols must not
        branch on it since a real sender learns nothing after the last retry.
        """
        start = self.now if at is None else at
        self.stats.unicasts += 1
        p = self.medium.probability(sender, receiver)
        tx = self.channel.max_tx_time
        attempts = self.channel.unicast_attempts
        if self.drop_filter is not None and self.drop_filter(sender, receiver, payload):
            p = 0.0
        for k in range(1, attempts + 1):
            if p >= 1.0 or (p > 0.0 and self.rng.random() < p):
                self.stats.unicast_frames += k
                self.schedule_at(start + k * tx, self._deliver_many, sender, [receiver], payload,
                                 kind="deliver", node=sender)
                return True
        self.stats.unicast_frames += attempts
        self.stats.unicast_failures += 1
        if self.log is not None:
            self.log.append(f"{start:.6f} unicast-failed {sender} to={receiver} {_describe(payload)}")
        return False
