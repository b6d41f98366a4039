"""Decentralized per-vehicle control law.

Each follower maps its own camera reading (d, beta) and the clock t to
(v, omega). Nothing else enters: no predecessor velocity, no leader state,
no memory between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .envelope import Envelope, modulation, normalize, rho, transform
from .errors import ConfigError, EnvelopeBreach
from .geometry import Measurement
from .kinematics import ControlInput


@dataclass(frozen=True)
class ControllerParams:
    k_d: float
    k_beta: float
    d_des: float
    env_d: Envelope
    env_beta: Envelope
    soft_guard: float = 0.0

    def __post_init__(self):
        errors = []
        if not (math.isfinite(self.k_d) and self.k_d > 0):
            errors.append(f"k_d must be positive, got {self.k_d!r}")
        if not (math.isfinite(self.k_beta) and self.k_beta > 0):
            errors.append(f"k_beta must be positive, got {self.k_beta!r}")
        if not self.soft_guard >= 0:
            errors.append(f"soft_guard must be non-negative, got {self.soft_guard!r}")
        if errors:
            raise ConfigError(errors)


@dataclass(frozen=True)
class Saturation:
    """Actuator-limit diagnostic. Exceeding a limit is logged; ``mode="clamp"``
    also clips the command (what-if studies only, the guarantees assume no
    saturation)."""

    v_max: float = math.inf
    omega_max: float = math.inf
    mode: str = "warn"


def distance_error(m: Measurement, d_des: float) -> float:
    return m.d - d_des


def bearing_error(m: Measurement) -> float:
    return m.beta


def linear_velocity(e_d: float, t: float, p: ControllerParams) -> float:
    xi = normalize(e_d, rho(p.env_d, t))
    try:
        eps = transform(xi, p.env_d, p.soft_guard)
    except EnvelopeBreach as exc:
        raise exc.with_context(t=t, channel="distance") from None
    return p.k_d * eps


def angular_velocity(e_beta: float, t: float, p: ControllerParams) -> float:
    rho_t = rho(p.env_beta, t)
    return _omega(normalize(e_beta, rho_t), rho_t, t, p)


def _omega(xi: float, rho_t: float, t: float, p: ControllerParams) -> float:
    try:
        eps = transform(xi, p.env_beta, p.soft_guard)
        r = modulation(xi, p.env_beta, p.soft_guard)
    except EnvelopeBreach as exc:
        raise exc.with_context(t=t, channel="bearing") from None
    # left-to-right product keeps gain scaling exact in floating point
    return p.k_beta * (1.0 / rho_t) * r * eps


def control_from_normalized(xi_d, xi_beta, rho_beta, t, p: ControllerParams, vehicle=None):
    """(v, omega) from already-normalized errors; shared by :func:`controller_step`
    and the simulation loop so both produce identical bits."""
    try:
        try:
            v = p.k_d * transform(xi_d, p.env_d, p.soft_guard)
        except EnvelopeBreach as exc:
            raise exc.with_context(t=t, channel="distance") from None
        return v, _omega(xi_beta, rho_beta, t, p)
    except EnvelopeBreach as exc:
        raise exc.with_context(vehicle=vehicle) from None


def controller_step(m: Measurement, t: float, p: ControllerParams, vehicle=None) -> ControlInput:
    rho_d = rho(p.env_d, t)
    rho_b = rho(p.env_beta, t)
    v, w = control_from_normalized(
        normalize(distance_error(m, p.d_des), rho_d),
        normalize(bearing_error(m), rho_b),
        rho_b,
        t,
        p,
        vehicle,
    )
    return ControlInput(v, w)
