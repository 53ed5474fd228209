import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from iotssa.errors import EmptyThreatSetError, HorizonMismatchError, InvalidRadixError, RangeError
from iotssa.game import GameConfig
from iotssa.net import Asset, Connection, ThreatToken, Vulnerability, build_net
from iotssa.ssa import (
    SituationPoint,
    SituationSeries,
    aggregate,
    compare,
    normalize,
    situation_series,
    time_to_half_peak,
)
import oracles
from oracles import THREAT, net_from_parts

finite = st.floats(min_value=0, max_value=100, allow_nan=False)
radixes = st.floats(min_value=1.01, max_value=1000)


def test_aggregate_examples():
    assert aggregate({"a": 3.0}, 10) == 3.0
    assert aggregate({"a": 2.0, "b": 2.0}, 10) == pytest.approx(2.0 + math.log10(2), abs=1e-12)
    assert aggregate({"a": 2.0, "b": 2.0}, 10) == pytest.approx(2.30103, abs=1e-5)
    assert aggregate({"a": 16.8, "b": 0.0}, 10) == pytest.approx(16.8 + math.log10(1 + 10**-16.8), abs=1e-12)


def test_aggregate_errors():
    with pytest.raises(EmptyThreatSetError):
        aggregate({}, 10)
    for bad in (1.0, 0.5, -3, float("inf")):
        with pytest.raises(InvalidRadixError):
            aggregate({"a": 1.0}, bad)


def test_normalize_examples():
    assert normalize([2, 4, 6]) == [0, 0.5, 1]
    assert normalize([5, 5, 5]) == [0, 0, 0]
    with pytest.raises(ValueError):
        normalize([])


@given(st.floats(min_value=-50, max_value=50), radixes)
def test_single_threat_identity(x, b):
    assert abs(aggregate({"t": x}, b) - x) <= 1e-9


@given(st.lists(finite, min_size=1, max_size=8), radixes)
def test_dominance_bound(values, b):
    agg = aggregate({str(i): v for i, v in enumerate(values)}, b)
    assert max(values) - 1e-9 <= agg <= max(values) + math.log(len(values), b) + 1e-9


@given(st.lists(finite, min_size=1, max_size=8), radixes, radixes)
def test_gap_non_increasing_in_radix(values, b1, b2):
    lo, hi = sorted((b1, b2))
    per = {str(i): v for i, v in enumerate(values)}
    assert aggregate(per, hi) - max(values) <= aggregate(per, lo) - max(values) + 1e-9


@given(st.lists(finite, min_size=1, max_size=50))
def test_aggregate_stays_finite(values):
    assert math.isfinite(aggregate({str(i): v for i, v in enumerate(values)}, 10))


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=2, max_size=40))
def test_normalize_idempotent(series):
    assume(max(series) - min(series) > 1e-6)
    once = normalize(series)
    assert min(once) == 0 and max(once) == 1
    assert normalize(once) == pytest.approx(once, abs=1e-12)


# -- series ---------------------------------------------------------------


def test_clean_net_gives_flat_zero_series():
    net = build_net([Asset("A", "a", 3), Asset("B", "b", 2)], [Connection("A", "B", 3, 3)], [ThreatToken("T")])
    series = situation_series(net, GameConfig(horizon=4))
    assert series.aggregates == [0.0] * 5
    assert series.normalized == [0.0] * 5


def _oracle_series(parts, cfg):
    """Per-epoch oracle value, then the expectation-mode step chosen with the oracle's own argmax."""
    state = oracles.oracle_state(*parts)
    out = []
    for _ in range(cfg.horizon + 1):
        out.append(oracles.oracle_value(state, cfg, cfg.horizon))
        d_moves = oracles.oracle_defender_moves(state)
        gains = [oracles.oracle_gain(state, d, cfg) for d in d_moves]
        d = d_moves[gains.index(max(gains))]
        q = []
        a_moves = oracles.oracle_attacker_moves(state)
        for a in a_moves:
            q.append(sum(p * oracles.oracle_value(s, cfg, cfg.horizon - 1)
                         for s, p in oracles.oracle_successors(state, a, d)))
        a = a_moves[q.index(max(q))]
        succ = oracles.oracle_successors(state, a, d)
        state = succ[0][0] if len(succ) == 1 or succ[0][1] >= 0.5 else succ[1][0]
    return out


@pytest.mark.parametrize("exploitability", [1, 3, 5])
def test_two_node_series_matches_step_oracle(exploitability):
    assets = [
        Asset("A", "a", 4, (Vulnerability("va", 8.0, {THREAT}),)),
        Asset("B", "b", 5, (Vulnerability("vb", 10.0, {THREAT}),)),
    ]
    parts = (assets, [Connection("A", "B", 4, exploitability)], {"A"})
    cfg = GameConfig(horizon=2, removal_penalty=1.5)
    series = situation_series(net_from_parts(*parts), cfg, 10)
    assert series.aggregates == pytest.approx(_oracle_series(parts, cfg), abs=1e-9)


def test_series_shape_and_csv(scenario_1):
    series = situation_series(scenario_1.to_net(), scenario_1.game, 10, scenario_id="s1")
    assert [p.tau for p in series.points] == list(range(11))
    lines = series.to_csv().splitlines()
    assert lines[0] == "tau,T1,aggregate,normalized"
    assert len(lines) == 12
    assert lines[1] == "0,3.100000,3.100000,1.000000"
    for line in lines[1:]:
        for cell in line.split(",")[1:]:
            assert len(cell.split(".")[1]) == 6


def test_series_invalid_inputs(scenario_1):
    net = scenario_1.to_net()
    with pytest.raises(InvalidRadixError):
        situation_series(net, radix=1.0)
    with pytest.raises(RangeError):
        situation_series(net, mode="bogus")
    with pytest.raises(EmptyThreatSetError):
        situation_series(build_net([Asset("A", "a", 1)], [], []))


def test_montecarlo_reproducible(scenario_2):
    net = scenario_2.to_net()
    cfg = GameConfig(horizon=6)
    a = situation_series(net, cfg, mode="montecarlo", trials=40, seed=3)
    b = situation_series(net, cfg, mode="montecarlo", trials=40, seed=3)
    assert a.to_csv() == b.to_csv()
    normalized = a.normalized
    assert min(normalized) == 0 and max(normalized) == 1


def test_montecarlo_with_certain_spread_matches_expectation():
    parts = (
        [Asset(x, x, 3, (Vulnerability("v", 6.0, {THREAT}),)) for x in "ABC"],
        [Connection("A", "B", 2, 5), Connection("B", "C", 2, 5)],
        {"A"},
    )
    net = net_from_parts(*parts)
    cfg = GameConfig(horizon=3, removal_penalty=5.0, cut_penalty=5.0)
    exp = situation_series(net, cfg)
    mc = situation_series(net, cfg, mode="montecarlo", trials=5, seed=1)
    assert mc.aggregates == pytest.approx(exp.aggregates)


# -- comparison -------------------------------------------------------------


def series_of(values, name):
    pts = tuple(SituationPoint(t, {"t": v}, v) for t, v in enumerate(values))
    return SituationSeries(name, 10.0, pts, ("t",))


def test_time_to_half_peak():
    assert time_to_half_peak([0, 1, 3, 4, 2]) == 2
    assert time_to_half_peak([5, 0, 0]) == 0
    assert time_to_half_peak([0, 0, 0]) is None


def test_compare_identical_is_equal():
    s = series_of([0, 1, 2, 1], "x")
    rep = compare(s, s)
    assert rep.verdict == "equal"
    assert rep.peak_delta == 0 and rep.auc_delta == 0 and rep.half_peak_delta == 0


def test_compare_zero_vs_rising():
    rep = compare(series_of([0, 0, 0, 0], "flat"), series_of([0, 1, 2, 3], "rise"))
    assert rep.faster == "rise" and rep.higher_impact == "rise"
    assert rep.verdict == "faster: rise; higher impact: rise"


def test_compare_split_verdict_and_text():
    rep = compare(series_of([2, 3, 3, 3], "quick"), series_of([0, 1, 2, 8], "slow"))
    assert rep.faster == "quick" and rep.higher_impact == "slow"
    text = rep.to_text()
    assert text.splitlines()[0] == "scenario,peak,time_to_half_peak,auc"
    assert text.splitlines()[-1] == "verdict: faster: quick; higher impact: slow"


def test_compare_horizon_mismatch():
    with pytest.raises(HorizonMismatchError):
        compare(series_of([0, 1], "a"), series_of([0, 1, 2], "b"))
