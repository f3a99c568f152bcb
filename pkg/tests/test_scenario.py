import json

import pytest

from geolock.errors import ConfigurationError
from geolock.scenario import Scenario, canonical_scenario


def doc(**overrides):
    base = {
        "anchors": [{"id": "A", "pos": [-5, 0, 0]}, {"id": "B", "pos": [5, 0, 0]}],
        "authorized_region": {"center": [0, 0, 0], "radius_m": 2.0},
        "password": "pw",
        "receivers": [{"id": "r", "pos": [0, 0, 0]}],
    }
    base.update(overrides)
    return {k: v for k, v in base.items() if v is not None}


def codes(d):
    with pytest.raises(ConfigurationError) as err:
        Scenario.from_dict(d)
    return [(v.code, v.path) for v in err.value.violations]


def test_minimal_document_loads():
    sc = Scenario.from_dict(doc())
    assert sc.slot_width() == 426
    assert sc.sigma_ticks is None and sc.noise_model().sigma_ticks == pytest.approx(42.6)
    assert [a.id for a in sc.packet_anchors()][:3] == ["A", "B", "A"]


@pytest.mark.parametrize("overrides, expected", [
    ({"anchors": None}, [("missing", "anchors")]),
    ({"anchors": []}, [("empty", "anchors")]),
    ({"anchors": [{"id": "A", "pos": [0, 0, 0]}, {"id": "A", "pos": [1, 0, 0]}]}, [("duplicate_id", "anchors[1].id")]),
    ({"anchors": [{"id": "A", "pos": [0, 0]}]}, [("type", "anchors[0].pos")]),
    ({"authorized_region": {"center": [0, 0, 0], "radius_m": -1}}, [("range", "authorized_region.radius_m")]),
    ({"authorized_region": {"center": [0, 0, 0], "radius_m": 5000}}, [("window", "authorized_region.radius_m")]),
    ({"password": ""}, [("empty", "password")]),
    ({"password": None}, [("missing", "password")]),
    ({"anchor_sequence": ["A"] * 32}, [("length", "anchor_sequence")]),
    ({"anchor_sequence": ["A"] * 32 + ["Z"]}, [("unknown_anchor", "anchor_sequence[32]")]),
    ({"receivers": [{"id": "r", "pos": [0, 0, 0], "role": "spy"}]}, [("enum", "receivers[0].role")]),
    ({"noise": {"sigma_ticks": -2}}, [("range", "noise.sigma_ticks")]),
    ({"noise": {"mode": "bursty"}}, [("enum", "noise.mode")]),
    ({"payload_path": "does/not/exist.bin"}, [("not_found", "payload_path")]),
    ({"slot_width_ticks": 10**6}, [("window", "slot_width_ticks")]),
    ({"colour": "blue"}, [("unknown_field", "colour")]),
])
def test_violation_codes(overrides, expected):
    assert codes(doc(**overrides)) == expected


def test_all_violations_reported_together():
    got = codes({"anchors": [], "authorized_region": {"center": [0, 0], "radius_m": 0}, "password": 3})
    assert got == [
        ("empty", "anchors"),
        ("type", "authorized_region.center"),
        ("range", "authorized_region.radius_m"),
        ("type", "password"),
    ]


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError) as err:
        Scenario.load(bad)
    assert err.value.violations[0].code == "syntax"
    with pytest.raises(ConfigurationError) as err:
        Scenario.load(tmp_path / "missing.json")
    assert err.value.violations[0].code == "not_found"


def test_payload_path_is_relative_to_file(tmp_path):
    (tmp_path / "p.bin").write_bytes(b"\x00\x01")
    (tmp_path / "s.json").write_text(json.dumps(doc(payload_path="p.bin")))
    assert Scenario.load(tmp_path / "s.json").payload_bytes() == b"\x00\x01"


def test_env_seed_override():
    sc = Scenario.from_dict(doc(noise={"seed": 1}))
    assert sc.with_env_seed({}).seed == 1
    assert sc.with_env_seed({"GEOLOCK_SEED": "0x10"}).seed == 16
    with pytest.raises(ConfigurationError):
        sc.with_env_seed({"GEOLOCK_SEED": "-3"})


def test_pinned_sequence_cycles_for_follow_on_packets():
    sc = Scenario.from_dict(doc(anchor_sequence=["B"] * 33))
    assert {a.id for a in sc.packet_anchors(40)} == {"B"}
    assert any("single anchor" in w for w in sc.warnings())


def test_digest_ignores_password():
    a = canonical_scenario(password="one")
    b = canonical_scenario(password="two")
    assert a.digest() == b.digest()
    b.region = type(b.region)(b.region.center, 3.0)
    assert a.digest() != b.digest()


def test_shipped_demo_scenario_loads():
    from pathlib import Path
    sc = Scenario.load(Path(__file__).parent.parent / "scenarios" / "demo.json")
    assert sc.payload_bytes()
    assert [r.role for r in sc.receivers] == ["intended", "eavesdropper", "eavesdropper"]
