import json

import pytest

from specmarket.distributions import ConfigurationError, DistSpec
from specmarket.scenario import PRESETS, load_scenario, preset, scenario_from_dict
from specmarket.service import ServiceMoments

BASE = {
    "lambda": 1.0, "v": 1.0, "theta_max": 1.0, "alpha": 0.3, "epsilon": 0.01,
    "x": {"kind": "exp", "rate": 1.0}, "y": {"kind": "exp", "rate": 1.5}, "z": {"kind": "exp", "rate": 0.5},
}


def test_json_matches_preset(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(BASE, indent=2))
    assert load_scenario(path) == preset("exp-light")


def test_round_trip_through_dict():
    for name in PRESETS:
        s = preset(name)
        assert scenario_from_dict(s.to_dict()) == s


def test_unknown_key_reports_line(tmp_path):
    bad = dict(BASE, colour="red")
    path = tmp_path / "bad.json"
    text = json.dumps(bad, indent=2)
    path.write_text(text)
    line = next(i for i, s in enumerate(text.splitlines(), 1) if '"colour"' in s)
    with pytest.raises(ConfigurationError, match=rf"line {line}: unknown keys \['colour'\]"):
        load_scenario(path)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "lambda": 1.0,\n  "v": ,\n}')
    with pytest.raises(ConfigurationError, match="line 3"):
        load_scenario(path)


@pytest.mark.parametrize("change,needle", [
    ({"lambda": -1.0}, "lam"),
    ({"alpha": 0.0}, "alpha"),
    ({"epsilon": 0.8}, "epsilon"),
    ({"v": "one"}, "v must be a number"),
    ({"x": {"kind": "exp", "rate": 1.0, "lo": 0}}, "x:"),
    ({"z": {"kind": "uniform", "lo": 0.1, "hi": 1.0}}, "no closed-form"),
    ({"sim": {"n_jobs": 1000, "seeds": 3}}, "sim: unknown"),
    ({"sim": {"channel": "sideways"}}, "channel"),
])
def test_validation_errors(change, needle):
    with pytest.raises(ConfigurationError, match=needle):
        scenario_from_dict(dict(BASE, **change))


def test_missing_keys():
    data = dict(BASE)
    del data["theta_max"]
    with pytest.raises(ConfigurationError, match="missing required keys"):
        scenario_from_dict(data)


def test_moments_override_and_reset():
    s = preset("exp-light", moments=ServiceMoments(2.0, 5.0))
    assert s.service.m1 == 2.0
    t = s.with_(x=DistSpec.exponential(2.0))
    assert t.service.m1 == pytest.approx(2 / 3)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        preset("exp-medium")
