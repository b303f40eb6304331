"""Score snapshot logs against an ETX reference graph and aggregate runs."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from scipy import stats as _stats

from .graph import BiconnectivityReport, Edge, Graph, edge, tarjan_report
from .protocol import SELF
from .radio import etx_reference_graph
from .scenarios import RunArtifacts, SnapshotRow, WindowRow
from .voting import Rule, RuleConfig, Statement, network_prior, vote


class DataError(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def precision(cm: ConfusionMatrix) -> float:
    d = cm.tp + cm.fp
    return cm.tp / d if d else 0.0


def recall(cm: ConfusionMatrix) -> float:
    d = cm.tp + cm.fn
    return cm.tp / d if d else 0.0


def f1(cm: ConfusionMatrix) -> float:
    p, r = precision(cm), recall(cm)
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class MetricSample:
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False


def metric_sample(cm: ConfusionMatrix) -> MetricSample:
    return MetricSample(precision(cm), recall(cm), f1(cm),
                        precision_undefined=(cm.tp + cm.fp == 0),
                        recall_undefined=(cm.tp + cm.fn == 0))


def mean_ci(samples: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Sample mean and two-sided Student-t half width."""
    n = len(samples)
    if n < 2:
        raise ValueError("mean_ci needs at least two samples")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    mean = math.fsum(samples) / n
    var = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    t = float(_stats.t.ppf(0.5 + level / 2.0, n - 1))
    return mean, t * math.sqrt(var / n)


def format_ci(mean: float, half: float, level: float, n: int) -> str:
    return f"{mean:.3f} ± {half:.3f} ({level * 100:g}% C.I., n={n})"


def build_reference(artifacts: RunArtifacts, etx_threshold: float) -> tuple[Graph, BiconnectivityReport]:
    g = etx_reference_graph(artifacts.nodes, artifacts.counters, etx_threshold)
    return g, tarjan_report(g)


@dataclass
class RunScore:
    bridges: ConfusionMatrix
    articulation: ConfusionMatrix
    excluded: int
    snapshots: int


def _voted_claims(windows: Iterable[WindowRow], rule: RuleConfig, art_rule: RuleConfig):
    bridge_claims: dict[int, dict[int, set[Edge]]] = defaultdict(lambda: defaultdict(set))
    art_claims: dict[int, set[int]] = defaultdict(set)
    for w in windows:
        history = [Statement(pos, comp) for pos, comp in w.window]
        if w.subject == SELF:
            if vote(history, art_rule):
                art_claims[w.seq].add(w.node)
        elif vote(history, rule):
            bridge_claims[w.seq][w.node].add(w.subject)
    return bridge_claims, art_claims


def _with_prior(cfg: RuleConfig, positives: int, total: int) -> RuleConfig:
    if cfg.rule is not Rule.WEIGHTED or cfg.prior is not None:
        return cfg
    # clamp to a usable prior when the reference has none or all positive
    positives = min(max(positives, 1), total - 1)
    return RuleConfig(cfg.rule, cfg.k, cfg.trust_threshold, network_prior(positives, total))


def classify_run(snapshots: Sequence[SnapshotRow], reference: Graph, report: BiconnectivityReport, *,
                 detected_twice: bool = True, evaluable: Optional[frozenset[Edge]] = None,
                 windows: Optional[Sequence[WindowRow]] = None, rule: Optional[RuleConfig] = None,
                 articulation_rule: Optional[RuleConfig] = None,
                 seqs: Optional[Iterable[int]] = None) -> RunScore:
    """Confusion matrices summed over every snapshot sequence number.

    Bridge claims on edges missing from the reference graph are excluded
    and counted.  With ``rule`` set, claims are re-derived from the logged
    statement windows instead of the published snapshot verdicts.
    """
    nodes = reference.nodes
    for row in snapshots:
        if row.node not in nodes:
            raise DataError(f"snapshot {row.seq} names unknown node {row.node}")
    if seqs is None:
        seqs = sorted({r.seq for r in snapshots})
    scored_edges = reference.edges if evaluable is None else reference.edges & evaluable
    truth_b, truth_a = report.bridges, report.articulation_points

    if rule is not None:
        rule = _with_prior(rule, len(truth_b), max(len(reference.edges), 2))
        art_rule = _with_prior(articulation_rule or rule, len(truth_a), max(len(nodes), 2))
        bridge_claims, art_claims = _voted_claims(windows or (), rule, art_rule)
    else:
        bridge_claims = defaultdict(lambda: defaultdict(set))
        art_claims = defaultdict(set)
        for r in snapshots:
            if r.bridges:
                bridge_claims[r.seq][r.node].update(edge(*e) for e in r.bridges)
            if r.is_articulation:
                art_claims[r.seq].add(r.node)

    bcm, acm = ConfusionMatrix(), ConfusionMatrix()
    excluded = 0
    n_seq = 0
    for seq in seqs:
        n_seq += 1
        per_node = bridge_claims.get(seq, {})
        claimed: set[Edge] = set()
        for v, es in per_node.items():
            for e in es:
                if v not in e:
                    raise DataError(f"node {v} claims non-incident edge {e}")
                other = e[0] if e[1] == v else e[1]
                if not detected_twice or e in per_node.get(other, ()):
                    claimed.add(e)
        excluded += len(claimed - reference.edges)
        if evaluable is not None:
            excluded += len((claimed & reference.edges) - evaluable)
        pos = claimed & scored_edges
        bcm += ConfusionMatrix(tp=len(pos & truth_b), fp=len(pos - truth_b),
                               fn=len((scored_edges - pos) & truth_b), tn=len(scored_edges - pos - truth_b))
        arts = art_claims.get(seq, set())
        acm += ConfusionMatrix(tp=len(arts & truth_a), fp=len(arts - truth_a),
                               fn=len(truth_a - arts), tn=len(nodes - arts - truth_a))
    return RunScore(bcm, acm, excluded, n_seq)


@dataclass(frozen=True)
class ScoreRow:
    run: str
    seed: int
    scope: str
    cm: ConfusionMatrix
    excluded: int

    @property
    def sample(self) -> MetricSample:
        return metric_sample(self.cm)


SCORE_COLUMNS = ["run", "seed", "scope", "tp", "fp", "tn", "fn", "excluded", "precision", "recall", "f1"]
SUMMARY_COLUMNS = ["param_value", "metric", "mean", "ci_halfwidth", "n"]


def score_rows(run: str, seed: int, artifacts: RunArtifacts, thresholds: Sequence[float],
               rule: Optional[RuleConfig] = None, articulation_rule: Optional[RuleConfig] = None,
               detected_twice: bool = True) -> list[ScoreRow]:
    rows = []
    for th in thresholds:
        g, rep = build_reference(artifacts, th)
        s = classify_run(artifacts.snapshots, g, rep, detected_twice=detected_twice,
                         evaluable=artifacts.evaluable, windows=artifacts.windows, rule=rule,
                         articulation_rule=articulation_rule, seqs=sorted(artifacts.snapshot_times))
        tag = f"etx={th:g}"
        rows.append(ScoreRow(run, seed, f"bridge:{tag}", s.bridges, s.excluded))
        rows.append(ScoreRow(run, seed, f"articulation:{tag}", s.articulation, 0))
    return rows


def score_row_values(r: ScoreRow) -> list:
    m = r.sample
    return [r.run, r.seed, r.scope, r.cm.tp, r.cm.fp, r.cm.tn, r.cm.fn, r.excluded,
            repr(m.precision), repr(m.recall), repr(m.f1)]
