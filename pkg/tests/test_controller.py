import dataclasses
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from platoon_ppc.controller import (
    ControllerParams,
    angular_velocity,
    controller_step,
    linear_velocity,
)
from platoon_ppc.envelope import modulation, rho, transform
from platoon_ppc.errors import ConfigError, EnvelopeBreach
from platoon_ppc.geometry import Measurement

from conftest import ref_params

P = ref_params()


def test_zero_error_zero_control():
    u = controller_step(Measurement(0.75, 0.0), 4.0, P)
    assert u.v == 0.0 and u.omega == 0.0


def test_signs():
    # too far: drive forward; too close: back off
    assert linear_velocity(0.3, 0.0, P) > 0
    assert linear_velocity(-0.3, 0.0, P) < 0
    # predecessor to the left (beta > 0): turn left
    assert angular_velocity(0.2, 0.0, P) > 0
    assert angular_velocity(-0.2, 0.0, P) < 0


def test_closed_form():
    t = 1.7
    m = Measurement(1.0, 0.1)
    u = controller_step(m, t, P)
    rd, rb = rho(P.env_d, t), rho(P.env_beta, t)
    assert u.v == pytest.approx(P.k_d * transform(0.25 / rd, P.env_d), rel=1e-15)
    xi_b = 0.1 / rb
    expected = P.k_beta / rb * modulation(xi_b, P.env_beta) * transform(xi_b, P.env_beta)
    assert u.omega == pytest.approx(expected, rel=1e-15)


def test_breach_carries_context():
    with pytest.raises(EnvelopeBreach) as info:
        controller_step(Measurement(2.0, 0.0), 0.0, P, vehicle=3)
    assert info.value.vehicle == 3
    assert info.value.channel == "distance"
    with pytest.raises(EnvelopeBreach) as info:
        controller_step(Measurement(0.75, math.radians(50)), 0.0, P, vehicle=2)
    assert info.value.channel == "bearing"


def test_params_validation():
    with pytest.raises(ConfigError):
        dataclasses.replace(P, k_d=-1.0)


@given(st.floats(0.05, 1.9), st.floats(-0.7, 0.7), st.floats(0.0, 50.0))
def test_gain_scaling_exact(d, beta, t):
    assume(beta == 0.0 or abs(beta) > 1e-290)  # exact doubling needs normal-range products
    try:
        base = controller_step(Measurement(d, beta), t, P)
    except EnvelopeBreach:
        return
    v2 = controller_step(Measurement(d, beta), t, dataclasses.replace(P, k_d=2 * P.k_d))
    w2 = controller_step(Measurement(d, beta), t, dataclasses.replace(P, k_beta=2 * P.k_beta))
    assert v2.v == 2 * base.v
    assert w2.omega == 2 * base.omega
    assert v2.omega == base.omega and w2.v == base.v


def test_params_fields():
    assert isinstance(P, ControllerParams)
    assert P.d_des == 0.75
