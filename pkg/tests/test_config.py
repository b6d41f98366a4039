import math

import pytest
import yaml

from platoon_ppc.config import (
    config_from_tree,
    config_to_tree,
    parse_axis_values,
    parse_config,
    parse_quantity,
    reference_config_text,
    serialize_config,
    set_path,
)
from platoon_ppc.errors import ConfigError

REF = reference_config_text("reference.yaml")


def tree():
    return yaml.safe_load(REF)


def test_reference_values(reference_config):
    c = reference_config
    assert c.n_followers == 7
    assert c.d_des == 0.75
    assert (c.constraints.d_col, c.constraints.d_con) == (0.0375, 2.0)
    assert c.constraints.beta_con == math.radians(45)
    assert c.rho_inf_beta == math.radians(1.15)
    assert (c.k_d, c.k_beta, c.l_d, c.l_beta) == (0.005, 0.001, 0.5, 0.5)
    assert c.leader.kind == "sinusoidal" and c.leader.v0 == 0.3
    assert c.dt == 0.001 and c.duration == 60.0
    assert c.initial == ((1.2, 0.0, 0.0),) * 7


@pytest.mark.parametrize(
    "text, kind, expected",
    [("2 m", "length", 2.0), ("5 cm", "length", 0.05), ("1 ms", "time", 1e-3), ("90 deg", "angle", math.pi / 2),
     ("30 deg/s", "rate", math.pi / 6), ("0.5 1/s", "decay", 0.5), (0.25, None, 0.25)],
)
def test_quantities(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected, rel=1e-15)


def test_unitless_angle_rejected():
    with pytest.raises(ValueError):
        parse_quantity(0.7, "angle")
    t = tree()
    t["constraints"]["beta_con"] = 0.78
    with pytest.raises(ConfigError) as info:
        config_from_tree(t)
    assert any("beta_con" in e for e in info.value.errors)


def test_wrong_unit_kind():
    with pytest.raises(ValueError):
        parse_quantity("3 m", "angle")


def test_degrees_and_radians_identical():
    a, b = tree(), tree()
    a["constraints"]["beta_con"] = "45 deg"
    b["constraints"]["beta_con"] = "0.7853982 rad"
    ca, cb = config_from_tree(a), config_from_tree(b)
    assert ca.constraints.beta_con == math.radians(45)
    assert cb.constraints.beta_con == pytest.approx(ca.constraints.beta_con, abs=1e-7)


def test_exact_radian_value_identical():
    a, b = tree(), tree()
    b["constraints"]["beta_con"] = f"{math.radians(45)!r} rad"
    assert config_from_tree(a) == config_from_tree(b)


def test_empty_file_lists_every_missing_key():
    with pytest.raises(ConfigError) as info:
        parse_config("")
    errs = "\n".join(info.value.errors)
    for key in ("schema_version", "platoon.n_followers", "platoon.d_des", "constraints.d_col",
                "constraints.beta_con", "camera.range", "camera.aov", "envelope.distance.decay",
                "envelope.bearing.rho_inf", "gains.k_d", "gains.k_beta", "leader.trajectory",
                "simulation.dt", "simulation.duration"):
        assert key in errs, key


def test_unknown_keys_strict_and_lenient():
    t = tree()
    t["gains"]["k_z"] = 1.0
    with pytest.raises(ConfigError):
        config_from_tree(t)
    assert config_from_tree(t, strict=False).k_d == 0.005


def test_schema_version():
    t = tree()
    t["schema_version"] = 2
    with pytest.raises(ConfigError):
        config_from_tree(t)


def test_bad_decimation():
    t = tree()
    t["output"]["decimation"] = 0
    with pytest.raises(ConfigError):
        config_from_tree(t)


def test_all_errors_collected():
    t = tree()
    t["gains"]["k_d"] = "fast"
    t["camera"]["aov"] = "200 deg"
    t["simulation"]["dt"] = "-1 ms"
    with pytest.raises(ConfigError) as info:
        config_from_tree(t)
    assert len(info.value.errors) >= 3


@pytest.mark.parametrize("name", ["reference.yaml", "reference_slow.yaml"])
def test_round_trip(name):
    cfg = parse_config(reference_config_text(name))
    assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_schedule_and_overrides():
    t = tree()
    t["leader"]["trajectory"] = {"kind": "schedule", "breakpoints": [
        {"t": "0 s", "v": "0.1 m/s", "omega": "0 rad/s"}, {"t": "3 s", "v": "0.2 m/s", "omega": "5 deg/s"}]}
    t["vehicles"] = [{"k_d": 0.01}] + [{}] * 6
    t["simulation"]["saturation"] = {"v_max": "1 m/s", "mode": "clamp"}
    cfg = config_from_tree(t)
    assert config_from_tree(config_to_tree(cfg)) == cfg


def test_set_path():
    t = tree()
    set_path(t, "gains.k_d", 0.01)
    assert config_from_tree(t).k_d == 0.01
    set_path(t, "simulation.dt", 0.002)  # bare numbers are SI
    assert config_from_tree(t).dt == 0.002
    with pytest.raises(ConfigError):
        set_path(t, "simulation.integrator", 1.0)
    with pytest.raises(ConfigError):
        set_path(t, "gains.nope", 1.0)


def test_axis_values():
    assert parse_axis_values("0.001, 0.005,0.025") == [0.001, 0.005, 0.025]
    assert parse_axis_values("4 ms,2 ms") == ["4 ms", "2 ms"]
    with pytest.raises(ConfigError):
        parse_axis_values("")
    with pytest.raises(ConfigError):
        parse_axis_values("fast,slow")
