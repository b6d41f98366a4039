import logging
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from platoon_ppc.envelope import (
    Envelope,
    check_envelope,
    derive_bounds,
    inverse_transform,
    modulation,
    rho,
    rho_dot,
    transform,
    validate_initial,
)
from platoon_ppc.errors import ConfigError, EnvelopeBreach
from platoon_ppc.geometry import Constraints

from conftest import CONSTRAINTS, ref_envelopes

ENV_D, ENV_B = ref_envelopes()
mpmath.mp.dps = 40


def mp_transform(xi, env):
    xi = mpmath.mpf(xi)
    return mpmath.log((1 + xi / env.m_lower) / (1 - xi / env.m_upper))


def test_derive_bounds():
    assert derive_bounds(0.75, CONSTRAINTS) == (0.7125, 1.25, math.radians(45), math.radians(45))
    with pytest.raises(ConfigError):
        derive_bounds(2.0, CONSTRAINTS)
    with pytest.raises(ConfigError):
        derive_bounds(0.0375, CONSTRAINTS)


def test_floor_and_rho_limits():
    assert ENV_D.floor == 0.0625 / 1.25
    assert rho(ENV_D, 0.0) == 1.0
    assert rho(ENV_D, 200.0) == pytest.approx(ENV_D.floor, rel=1e-15)
    # the steady-state band is exactly rho_inf on the larger side
    assert ENV_D.m_upper * ENV_D.floor == 0.0625
    assert ENV_B.m_upper * ENV_B.floor == pytest.approx(math.radians(1.15), rel=1e-15)


def test_rho_against_closed_form():
    for t in (0.3, 2.0, 11.0):
        exact = (1 - mpmath.mpf(ENV_D.floor)) * mpmath.exp(-0.5 * mpmath.mpf(t)) + ENV_D.floor
        assert rho(ENV_D, t) == pytest.approx(float(exact), rel=1e-15)
        assert rho_dot(ENV_D, t) == pytest.approx(float(mpmath.diff(
            lambda s: (1 - mpmath.mpf(ENV_D.floor)) * mpmath.exp(-0.5 * s) + ENV_D.floor, t)), rel=1e-13)


def test_rho_negative_time():
    with pytest.raises(ValueError):
        rho(ENV_D, -0.1)


def test_envelope_validation():
    with pytest.raises(ConfigError):
        Envelope(0.5, 0.5, 0.5, 0.6)
    with pytest.raises(ConfigError):
        Envelope(-1.0, 0.5, 0.5, 0.1)


@pytest.mark.parametrize("xi", [-0.7, -0.3, 0.0, 0.2, 1.1, 1.2499])
def test_transform_matches_mpmath(xi):
    # absolute tolerance follows the conditioning of the two log terms near the walls
    cond = 1 + 1 / (1 - xi / ENV_D.m_upper) + 1 / (1 + xi / ENV_D.m_lower)
    assert abs(transform(xi, ENV_D) - float(mp_transform(xi, ENV_D))) <= 4e-16 * cond


@pytest.mark.parametrize("xi", [-0.7, 0.0, 0.4, 1.2])
def test_modulation_matches_mpmath_derivative(xi):
    exact = mpmath.diff(lambda z: mp_transform(z, ENV_D), xi)
    assert modulation(xi, ENV_D) == pytest.approx(float(exact), rel=1e-14)


def test_transform_zero_and_monotone():
    assert transform(0.0, ENV_D) == 0.0
    grid = np.linspace(-0.71, 1.24, 500)
    eps = [transform(x, ENV_D) for x in grid]
    assert all(a < b for a, b in zip(eps, eps[1:]))


def test_breach_raises_on_and_beyond_boundary():
    for xi in (1.25, 1.3, -0.7125, -2.0):
        with pytest.raises(EnvelopeBreach):
            transform(xi, ENV_D)
        with pytest.raises(EnvelopeBreach):
            modulation(xi, ENV_D)


def test_soft_guard_clamps_and_logs(caplog):
    with caplog.at_level(logging.WARNING):
        eps = transform(1.2505, ENV_D, soft_guard=1e-3)
    assert eps == transform(1.25 - 1e-3, ENV_D)
    assert "soft guard" in caplog.text
    with pytest.raises(EnvelopeBreach):
        transform(1.26, ENV_D, soft_guard=1e-3)


def test_inverse_saturates():
    assert inverse_transform(800.0, ENV_D) == ENV_D.m_upper


def literal_grid(env, coverage):
    w = env.m_lower + env.m_upper
    m = 0.5 * (1 - coverage) * w
    return -env.m_lower + m, env.m_upper - m


@given(st.floats(0.0, 1.0), st.sampled_from(["d", "b"]))
def test_derivative_identity_plain_central_difference(u, which):
    # invariant form: plain central difference with h = 1e-6*(M_lower + M_upper), 99 % of the interval
    env = ENV_D if which == "d" else ENV_B
    lo, hi = literal_grid(env, 0.99)
    xi = lo + u * (hi - lo)
    h = 1e-6 * (env.m_lower + env.m_upper)
    fd = (transform(xi + h, env) - transform(xi - h, env)) / (2 * h)
    assert abs(modulation(xi, env) - fd) <= 1e-6 * modulation(xi, env)


@given(st.floats(-0.7124, 1.2499))
def test_round_trip_property(xi):
    back = inverse_transform(transform(xi, ENV_D), ENV_D)
    assert back == pytest.approx(xi, rel=1e-12, abs=1e-15)


def test_check_envelope_strict():
    lb, ub = ENV_D.bounds(3.0)
    r = rho(ENV_D, 3.0)
    assert check_envelope(0.9 * ub, ENV_D, 3.0)
    assert not check_envelope(ENV_D.m_upper * r, ENV_D, 3.0)
    assert not check_envelope(-ENV_D.m_lower * r, ENV_D, 3.0)
    assert lb == -ENV_D.m_lower * r


def test_validate_initial_attributes_vehicle():
    out = validate_initial([0.1, 1.25], [0.0, 0.0], [(ENV_D, ENV_B)] * 2)
    assert out == [{"vehicle": 2, "channel": "distance", "value": 1.25, "lower": -0.7125, "upper": 1.25}]
    assert validate_initial([0.0], [math.radians(45)], [(ENV_D, ENV_B)])[0]["channel"] == "bearing"


def test_other_constraint_set():
    c = Constraints(0.1, 1.0, 0.3)
    ml, mu, _, _ = derive_bounds(0.4, c)
    assert (ml, mu) == pytest.approx((0.3, 0.6))
