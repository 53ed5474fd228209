import dataclasses
import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from iotssa.game import GameConfig
from iotssa.net import Asset, Connection
from iotssa.scenario import (
    FIXTURE_NAMES,
    FIXTURES_ENV,
    ScenarioDoc,
    ScenarioError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    UnknownScenarioError,
    builtin_fixtures,
    parse_scenario,
    resolve_scenario,
    serialize_scenario,
)
from oracles import random_scenario

FIXTURE_TEXT = serialize_scenario(builtin_fixtures()[0]).decode()


def test_fixture_count_and_names(fixtures):
    assert len(fixtures) == 2
    assert [f.scenario_id for f in fixtures] == list(FIXTURE_NAMES)


def test_scenario_1_contents(scenario_1):
    assert len(scenario_1.assets) == 6
    assert len(scenario_1.connections) == 4
    assert scenario_1.initial_infections == {"T1": ("N2",)}
    tv = scenario_1.asset("N2")
    assert sorted(v.impact for v in tv.vulnerabilities) == [10, 10]
    assert {v.vul_id: v.cvss_base for v in tv.vulnerabilities} == {
        "CVE-2008-4866": 10.0,
        "CVE-2009-0385": 9.3,
    }


def test_scenario_2_contents(scenario_2):
    assert scenario_2.initial_infections == {"T1": ("N3",)}
    tablet = scenario_2.asset("N3")
    assert [v.impact for v in tablet.vulnerabilities] == [2, 2, 10, 5]
    assert tablet.vulnerabilities[3].description == "Automatic sleep caused by low power"


def test_fixtures_share_levels_and_paths(fixtures):
    for doc in fixtures:
        assert [(a.id, a.asset_level) for a in doc.assets] == [
            ("N1", 5), ("N2", 4), ("N3", 5), ("N4", 3), ("N5", 2), ("N6", 5)
        ]
        assert [(c.source, c.target, c.path_level, c.exploitability) for c in doc.connections] == [
            ("N2", "N1", 5, 3), ("N2", "N3", 5, 4), ("N3", "N5", 3, 1), ("N3", "N6", 1, 1)
        ]
        vul_or = {a.id: int(bool(a.exploitable_by("T1"))) for a in doc.assets}
        assert vul_or == {"N1": 1, "N2": 1, "N3": 1, "N4": 0, "N5": 1, "N6": 1}


def test_range_error_names_connection():
    bad = FIXTURE_TEXT.replace("exploitability: 4", "exploitability: 9")
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(bad.encode())
    [issue] = exc.value.issues
    assert issue.kind == "RangeError"
    assert issue.field == "connections[N2->N3].exploitability"
    assert issue.line == bad.splitlines().index("  exploitability: 9") + 1


def test_dangling_reference_names_node():
    bad = FIXTURE_TEXT.replace("target: N6", "target: N9")
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(bad)
    [issue] = exc.value.issues
    assert issue.kind == "DanglingReference"
    assert "N9" in issue.message and "N9" in str(exc.value)


def test_all_errors_reported():
    bad = (
        FIXTURE_TEXT.replace("target: N6", "target: N9")
        .replace("asset_level: 3", "asset_level: 7")
        .replace("discount: 0.9", "discount: 1.5")
        .replace("id: N5", "id: N4")
    )
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(bad)
    assert exc.value.kinds() >= {"DanglingReference", "RangeError", "DuplicateId"}
    fields = {i.field for i in exc.value.issues}
    assert "game.discount" in fields and "assets[N4].asset_level" in fields
    assert all(i.line is not None for i in exc.value.issues)


def test_missing_and_unknown_fields():
    text = "scenario_id: x\nassets:\n- id: A\n  colour: red\n"
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(text)
    by_field = {i.field: i.kind for i in exc.value.issues}
    assert by_field["threats"] == "MissingField"
    assert by_field["assets[A].asset_level"] == "MissingField"
    assert by_field["assets[A].colour"] == "TypeError"


def test_syntax_error_has_line():
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario(b"scenario_id: x\nthreats: [T1\nassets: []\n")
    assert exc.value.line is not None
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario(b"\xff\xfe")
    with pytest.raises(ScenarioSyntaxError):
        parse_scenario(b"")


def test_type_errors_are_reported_not_raised():
    for text in ("[1, 2]", "scenario_id: [a]\nthreats: T1\nassets: {}", "scenario_id: 5\nthreats: []\nassets: []"):
        with pytest.raises(ScenarioValidationError):
            parse_scenario(text)


def test_reserialization_is_byte_identical(fixtures):
    for doc in fixtures:
        once = serialize_scenario(doc)
        assert serialize_scenario(parse_scenario(once)) == once


def test_minimal_scenario_round_trip():
    doc = ScenarioDoc("min", (Asset("A", "a", 1),), (), ("T",))
    assert parse_scenario(serialize_scenario(doc)) == doc
    assert parse_scenario("scenario_id: min\nthreats: [T]\nassets: [{id: A, name: a, asset_level: 1}]") == doc


def test_unicode_round_trip():
    doc = ScenarioDoc(
        "uni", (Asset("A", "Thermostat «Küche» 温度", 2), Asset("B", "锁 🔒", 5)),
        (Connection("A", "B", 2, 2),), ("T",), {"T": ("A",)}, GameConfig(horizon=3),
    )
    text = serialize_scenario(doc)
    assert "温度".encode() in text
    assert parse_scenario(text) == doc


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_round_trip_generated(rng):
    doc = random_scenario(rng)
    assert parse_scenario(serialize_scenario(doc)) == doc


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.data())
def test_mutated_fixture_never_crashes(data):
    raw = bytearray(FIXTURE_TEXT.encode())
    for _ in range(data.draw(st.integers(1, 6))):
        op = data.draw(st.sampled_from(["flip", "delete", "insert"]))
        pos = data.draw(st.integers(0, len(raw) - 1))
        if op == "flip":
            raw[pos] = data.draw(st.integers(0, 255))
        elif op == "delete":
            del raw[pos : pos + data.draw(st.integers(1, 40))]
        else:
            raw[pos:pos] = data.draw(st.sampled_from([b":", b"-", b"[", b"\n", b"  ", b"{", b"'", b"&a", b"*a", b"!!"]))
    try:
        parse_scenario(bytes(raw))
    except ScenarioError:
        pass


def test_fixtures_dir_override(tmp_path, monkeypatch, scenario_1):
    alt = dataclasses.replace(scenario_1, scenario_id="custom")
    (tmp_path / "custom.yaml").write_bytes(serialize_scenario(alt))
    monkeypatch.setenv(FIXTURES_ENV, str(tmp_path))
    assert resolve_scenario("custom") == alt
    with pytest.raises(UnknownScenarioError):
        resolve_scenario("smart-home-scenario-1")


def test_resolve_file_path(tmp_path, scenario_2):
    path = tmp_path / "s.yaml"
    path.write_bytes(serialize_scenario(scenario_2))
    assert resolve_scenario(str(path)) == scenario_2


def test_to_net_colors(scenario_1):
    net = scenario_1.to_net()
    assert [(t.threat_id, t.color) for t in net.threats] == [("T1", "red")]
    assert net.marking() == {"N2": {"T1": 1}}


def test_generated_scenarios_build(tmp_path):
    rng = random.Random(5)
    for _ in range(30):
        random_scenario(rng).to_net()


def test_invalid_asset_does_not_cause_dangling_reports():
    bad = FIXTURE_TEXT.replace("asset_level: 2", "asset_level: 0")
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(bad)
    assert exc.value.kinds() == {"RangeError"}
