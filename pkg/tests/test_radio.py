import math

import pytest
from hypothesis import given, strategies as st

from bridgesim.radio import (ShadowingParams, TrafficCounters, UndefinedLinkError, calibrated_margin,
                             etx_from_counters, etx_from_probabilities, etx_reference_graph,
                             reception_probability)

P = ShadowingParams()


def test_calibrated_margin():
    # 20*log10(370) + 2*inv_cdf(0.1), computed independently
    assert calibrated_margin() == pytest.approx(51.3640344 - 2.5631031, abs=1e-6)
    assert reception_probability(370.0, P) == pytest.approx(0.1, abs=1e-12)


def test_curve_shape():
    assert reception_probability(100.0, P) > 0.99
    assert reception_probability(400.0, P) < 0.06
    assert reception_probability(50.0, P) > 0.999


def test_max_range_cuts_tail():
    p = ShadowingParams(max_range=400.0)
    assert reception_probability(399.0, p) > 0
    assert reception_probability(401.0, p) == 0.0


@given(st.floats(1.0, 1000.0), st.floats(1.0, 1000.0))
def test_monotone_in_distance(a, b):
    lo, hi = sorted((a, b))
    assert reception_probability(lo, P) >= reception_probability(hi, P)


def test_small_std_approaches_step():
    p = ShadowingParams(std_db=1e-3, margin_db=40.0)  # crossing at 100 units
    assert reception_probability(99.0, p) == pytest.approx(1.0)
    assert reception_probability(101.0, p) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kw", [{"std_db": 0}, {"pathloss_exp": -1}, {"dist0": 0}, {"max_range": 0}])
def test_params_validated(kw):
    with pytest.raises(ValueError):
        ShadowingParams(**kw)


def test_distance_must_be_positive():
    with pytest.raises(ValueError):
        reception_probability(0.0, P)


def test_etx_from_probabilities():
    assert etx_from_probabilities(1, 1) == 1
    assert etx_from_probabilities(math.sqrt(0.1), math.sqrt(0.1)) == pytest.approx(10)
    assert etx_from_probabilities(0.1, 0.1) == pytest.approx(100)
    assert etx_from_probabilities(0.0, 0.7) == math.inf


@given(st.floats(0.01, 1.0))
def test_etx_of_symmetric_link(d):
    assert etx_from_probabilities(d, d) == pytest.approx(1 / d**2)
    assert etx_from_probabilities(d, d) >= 1


def _counters(tx, rx):
    c = TrafficCounters()
    c.tx.update(tx)
    c.rx.update(rx)
    return c


def test_etx_from_counters():
    assert etx_from_counters(_counters({0: 10, 1: 10}, {(0, 1): 10, (1, 0): 10}), 0, 1) == 1
    assert etx_from_counters(_counters({0: 10, 1: 10}, {(0, 1): 5, (1, 0): 5}), 0, 1) == 4
    assert etx_from_counters(_counters({0: 10, 1: 10}, {(1, 0): 5}), 0, 1) == math.inf
    with pytest.raises(UndefinedLinkError):
        etx_from_counters(_counters({0: 10}, {}), 0, 1)


def test_reference_graph():
    c = _counters({0: 10, 1: 10, 2: 10, 3: 10},
                  {(0, 1): 10, (1, 0): 10, (1, 2): 5, (2, 1): 5, (2, 3): 1, (3, 2): 1, (0, 3): 4})
    assert etx_reference_graph(range(4), c, 1).edges == {(0, 1)}
    assert etx_reference_graph(range(4), c, 10).edges == {(0, 1), (1, 2)}
    g = etx_reference_graph(range(4), c, math.inf)
    assert g.edges == {(0, 1), (1, 2), (2, 3)}
    assert g.nodes == {0, 1, 2, 3}


def test_counters_csv_roundtrip():
    c = _counters({0: 3, 1: 4, 2: 2}, {(0, 1): 3, (1, 0): 2})
    back = TrafficCounters.from_csv(c.to_csv([0, 1, 2], "# header\n"))
    assert dict(back.tx) == {0: 3, 1: 4, 2: 2}
    assert dict(back.rx) == {(0, 1): 3, (1, 0): 2}
