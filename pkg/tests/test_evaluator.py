import pytest

from bridgesim.evaluator import (ConfusionMatrix, DataError, classify_run, f1, format_ci, mean_ci,
                                 metric_sample, precision, recall)
from bridgesim.graph import Graph, tarjan_report
from bridgesim.protocol import SELF
from bridgesim.scenarios import SnapshotRow, WindowRow
from bridgesim.voting import Rule, RuleConfig

# path 0-1-2 plus triangle 2-3-4: bridges 01, 12; cuts 1, 2
REF = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (2, 4)])
REP = tarjan_report(REF)


def test_metrics():
    cm = ConfusionMatrix(tp=3, fp=1, tn=5, fn=2)
    assert precision(cm) == 0.75 and recall(cm) == 0.6
    assert f1(cm) == pytest.approx(2 * 0.75 * 0.6 / 1.35)
    empty = metric_sample(ConfusionMatrix(tn=4))
    assert (empty.precision, empty.recall, empty.f1) == (0.0, 0.0, 0.0)
    assert empty.precision_undefined and empty.recall_undefined
    assert (cm + cm).total == 22


@pytest.mark.parametrize("xs,level,mean,half", [
    ([0.0, 1.0], 0.95, 0.5, 6.353102),
    ([1, 2, 3, 4, 5], 0.95, 3.0, 1.963243),
    ([1, 2, 3, 4, 5], 0.90, 3.0, 1.507443),
    ([2.0, 2.0, 2.0], 0.95, 2.0, 0.0),
])
def test_mean_ci_t_table(xs, level, mean, half):
    m, h = mean_ci(xs, level)
    assert m == pytest.approx(mean, abs=1e-9)
    assert h == pytest.approx(half, abs=1e-6)


def test_mean_ci_domain():
    with pytest.raises(ValueError):
        mean_ci([1.0])
    with pytest.raises(ValueError):
        mean_ci([1.0, 2.0], 1.0)
    assert format_ci(0.5, 0.25, 0.95, 30) == "0.500 ± 0.250 (95% C.I., n=30)"


def rows(seq, claims, arts=()):
    out = [SnapshotRow(seq, v, v in arts, tuple(claims.get(v, ()))) for v in range(5)]
    return out


def test_detected_twice():
    snaps = rows(1, {0: [(0, 1)], 1: [(0, 1), (1, 2)], 3: [(3, 4)], 4: [(3, 4)]}, arts={1})
    s = classify_run(snaps, REF, REP)
    assert s.bridges == ConfusionMatrix(tp=1, fp=1, tn=2, fn=1)
    assert s.articulation == ConfusionMatrix(tp=1, fp=0, tn=3, fn=1)
    loose = classify_run(snaps, REF, REP, detected_twice=False)
    assert loose.bridges.tp == 2


def test_claims_off_reference_are_excluded():
    snaps = rows(1, {0: [(0, 4)], 4: [(0, 4)]})
    s = classify_run(snaps, REF, REP)
    assert s.excluded == 1 and s.bridges.fp == 0 and s.bridges.fn == 2


def test_evaluable_subset():
    snaps = rows(1, {0: [(0, 1)], 1: [(0, 1), (1, 2)], 2: [(1, 2)]})
    s = classify_run(snaps, REF, REP, evaluable=frozenset({(0, 1)}))
    assert s.bridges == ConfusionMatrix(tp=1) and s.excluded == 1


def test_sums_over_snapshots_and_counts_silent_ones():
    snaps = rows(1, {0: [(0, 1)], 1: [(0, 1)]}) + rows(2, {})
    s = classify_run(snaps, REF, REP, seqs=[1, 2, 3])
    assert s.snapshots == 3
    assert s.bridges.tp == 1 and s.bridges.fn == 5


def test_bad_rows_rejected():
    with pytest.raises(DataError):
        classify_run([SnapshotRow(1, 9, False, ())], REF, REP)
    with pytest.raises(DataError):
        classify_run([SnapshotRow(1, 0, False, ((2, 3),))], REF, REP)


def test_voting_replay_from_windows():
    pos, neg = (True, 1.0), (False, 0.95)
    windows = [
        WindowRow(1, 0, (0, 1), (pos, pos, neg)),
        WindowRow(1, 1, (0, 1), (pos, neg, neg)),
        WindowRow(1, 1, SELF, (pos, pos)),
    ]
    snaps = rows(1, {})
    maj = classify_run(snaps, REF, REP, windows=windows, rule=RuleConfig(Rule.SIMPLE_MAJORITY))
    assert maj.bridges.tp == 0 and maj.articulation.tp == 1
    one = classify_run(snaps, REF, REP, windows=windows, rule=RuleConfig(Rule.ONE_VOTE))
    assert one.bridges.tp == 1
    weighted = classify_run(snaps, REF, REP, windows=windows, rule=RuleConfig(Rule.WEIGHTED))
    assert weighted.articulation.tp == 1
