"""Log-normal shadowing reception model, broadcast counters and ETX."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, Optional

from .graph import Graph, edge

INFINITE_ETX = math.inf

_STD_NORMAL = NormalDist()


def calibrated_margin(distance: float = 370.0, probability: float = 0.1,
                      pathloss_exp: float = 2.0, std_db: float = 2.0,
                      dist0: float = 1.0) -> float:
    """Margin (dB) that makes ``reception_probability(distance) == probability``."""
    return 10.0 * pathloss_exp * math.log10(distance / dist0) + std_db * _STD_NORMAL.inv_cdf(probability)


@dataclass(frozen=True)
class ShadowingParams:
    pathloss_exp: float = 2.0
    std_db: float = 2.0
    dist0: float = 1.0
    margin_db: float = field(default_factory=calibrated_margin)
    # hard range cutoff; None keeps the unbounded Gaussian tail
    max_range: Optional[float] = None
    # raw simulator fields, carried for reference only
    P_t: float = 24.0
    G_t: float = 1.0
    freq: float = 2.472e9
    L: float = 1.0
    rx_thresh: float = -95.0
    cs_thresh: float = -96.0

    def __post_init__(self) -> None:
        if not self.std_db > 0:
            raise ValueError("std_db must be positive")
        if not self.pathloss_exp > 0:
            raise ValueError("pathloss_exp must be positive")
        if not self.dist0 > 0:
            raise ValueError("dist0 must be positive")
        if self.max_range is not None and not self.max_range > 0:
            raise ValueError("max_range must be positive")


def reception_probability(distance: float, p: ShadowingParams) -> float:
    """Probability that a single frame sent over ``distance`` is received."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    if p.max_range is not None and distance > p.max_range:
        return 0.0
    loss = 10.0 * p.pathloss_exp * math.log10(distance / p.dist0)
    return _STD_NORMAL.cdf((p.margin_db - loss) / p.std_db)


def etx_from_probabilities(d_f: float, d_r: float) -> float:
    for name, d in (("d_f", d_f), ("d_r", d_r)):
        if not 0.0 <= d <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {d}")
    if d_f == 0.0 or d_r == 0.0:
        return INFINITE_ETX
    return 1.0 / (d_f * d_r)


class UndefinedLinkError(ValueError):
    """ETX requested for a node that never broadcast."""


@dataclass
class TrafficCounters:
    """Broadcast tallies: ``tx[a]`` frames sent by a, ``rx[(a, b)]`` of those heard by b."""

    tx: dict[int, int] = field(default_factory=lambda: defaultdict(int))
    rx: dict[tuple[int, int], int] = field(default_factory=lambda: defaultdict(int))

    def record_tx(self, sender: int) -> None:
        self.tx[sender] += 1

    def record_rx(self, sender: int, receiver: int) -> None:
        self.rx[(sender, receiver)] += 1

    def rows(self, nodes: Iterable[int]) -> list[tuple[int, int, int, int]]:
        """One ``(sender, receiver, tx, rx)`` row per ordered pair with any reception,
        plus ``(sender, -1, tx, 0)`` for senders nobody heard so tx totals survive."""
        out = []
        heard = set()
        for (a, b), n in sorted(self.rx.items()):
            if n:
                out.append((a, b, self.tx.get(a, 0), n))
                heard.add(a)
        for a in sorted(nodes):
            if a not in heard:
                out.append((a, -1, self.tx.get(a, 0), 0))
        out.sort()
        return out

    def to_csv(self, nodes: Iterable[int], header: str = "") -> str:
        buf = io.StringIO()
        if header:
            buf.write(header)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sender", "receiver", "tx", "rx"])
        w.writerows(self.rows(nodes))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrafficCounters":
        c = cls()
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        for row in csv.DictReader(lines):
            a, b = int(row["sender"]), int(row["receiver"])
            c.tx[a] = int(row["tx"])
            if b >= 0:
                c.rx[(a, b)] = int(row["rx"])
        return c


def etx_from_counters(c: TrafficCounters, a: int, b: int) -> float:
    tx_a, tx_b = c.tx.get(a, 0), c.tx.get(b, 0)
    if tx_a == 0 or tx_b == 0:
        raise UndefinedLinkError(f"no broadcasts recorded for node {a if tx_a == 0 else b}")
    return etx_from_probabilities(c.rx.get((a, b), 0) / tx_a, c.rx.get((b, a), 0) / tx_b)


def etx_reference_graph(nodes: Iterable[int], c: TrafficCounters, threshold: float) -> Graph:
    """Graph of all node pairs whose counter-based ETX is at most ``threshold``.

    Pairs without reception in both directions never qualify, even at an
    infinite threshold.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    node_set = frozenset(nodes)
    kept = set()
    for (a, b), n in c.rx.items():
        if a >= b or not n or a not in node_set or b not in node_set:
            continue
        if not c.rx.get((b, a), 0):
            continue
        if etx_from_counters(c, a, b) <= threshold:
            kept.add(edge(a, b))
    return Graph(node_set, frozenset(kept))
