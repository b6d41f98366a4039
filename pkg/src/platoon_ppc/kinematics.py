"""Unicycle kinematics for the leader and the followers, with fixed-step integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericError

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi].

    Values already inside the interval are returned untouched, which makes the
    function idempotent bit for bit.
    """
    if not math.isfinite(a):
        raise NumericError(f"cannot wrap non-finite angle {a!r}")
    if -math.pi < a <= math.pi:
        return a
    w = math.fmod(a + math.pi, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    w -= math.pi
    # rounding can land exactly on -pi
    if w <= -math.pi:
        w = math.pi
    return w


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NumericError("cannot wrap non-finite angles")
    inside = (a > -math.pi) & (a <= math.pi)
    if inside.all():
        return a.copy()
    w = np.fmod(a + math.pi, TWO_PI)
    w = np.where(w <= 0.0, w + TWO_PI, w) - math.pi
    w = np.where(w <= -math.pi, math.pi, w)
    return np.where(inside, a, w)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))


@dataclass(frozen=True)
class ControlInput:
    v: float
    omega: float


def unicycle_derivative(pose: Pose, u: ControlInput) -> tuple[float, float, float]:
    return (u.v * math.cos(pose.phi), u.v * math.sin(pose.phi), u.omega)


def rk4_states(x, y, phi, v, omega, dt):
    """One classic RK4 step of the unicycle for arrays of vehicles, inputs held.

    With (v, omega) held the heading is linear in time, so stages 2 and 3 share
    the midpoint heading and the step reduces to Simpson's rule on the arc.
    Headings are *not* wrapped here; callers wrap.
    """
    p2 = phi + (0.5 * dt) * omega
    p4 = phi + dt * omega
    kv = (dt / 6.0) * v
    x_new = x + kv * (np.cos(phi) + 4.0 * np.cos(p2) + np.cos(p4))
    y_new = y + kv * (np.sin(phi) + 4.0 * np.sin(p2) + np.sin(p4))
    return x_new, y_new, p4


def euler_states(x, y, phi, v, omega, dt):
    return x + dt * (v * np.cos(phi)), y + dt * (v * np.sin(phi)), phi + dt * omega


INTEGRATORS = {"rk4": rk4_states, "euler": euler_states}


def integrate_step(pose: Pose, u: ControlInput, dt: float, method: str = "rk4") -> Pose:
    """Advance ``pose`` by ``dt`` seconds with ``u`` held constant."""
    if not dt > 0.0:
        raise ConfigError(f"integration step must be positive, got dt={dt!r}")
    try:
        stepper = INTEGRATORS[method]
    except KeyError:
        raise ConfigError(f"unknown integrator {method!r}; expected one of {sorted(INTEGRATORS)}")
    x, y, phi = stepper(
        np.float64(pose.x), np.float64(pose.y), np.float64(pose.phi),
        np.float64(u.v), np.float64(u.omega), dt,
    )
    return Pose(float(x), float(y), wrap_angle(float(phi)))


@dataclass(frozen=True)
class LeaderTrajectory:
    """Open-loop leader command profile.

    kind is one of ``constant``, ``schedule`` or ``sinusoidal``:

    * constant: v = v0, omega = omega0
    * schedule: ``breakpoints`` is a sequence of (t_start, v, omega) sorted by
      t_start, with the first starting at 0; the last segment is held forever
    * sinusoidal: v = v0, omega = amplitude * sin(frequency * t)
    """

    kind: str = "constant"
    v0: float = 0.0
    omega0: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    breakpoints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        errors = []
        if self.kind not in ("constant", "schedule", "sinusoidal"):
            errors.append(f"unknown leader trajectory kind {self.kind!r}")
        for name in ("v0", "omega0", "amplitude", "frequency"):
            if not math.isfinite(getattr(self, name)):
                errors.append(f"leader {name} must be finite")
        if self.kind == "schedule":
            bps = tuple(tuple(float(c) for c in bp) for bp in self.breakpoints)
            object.__setattr__(self, "breakpoints", bps)
            if not bps:
                errors.append("schedule leader needs at least one breakpoint")
            elif bps[0][0] != 0.0:
                errors.append("first schedule breakpoint must start at t=0")
            if any(len(bp) != 3 for bp in bps):
                errors.append("schedule breakpoints are (t_start, v, omega) triples")
            elif any(b[0] <= a[0] for a, b in zip(bps, bps[1:])):
                errors.append("schedule breakpoints must be strictly increasing in time")
            elif not all(math.isfinite(c) for bp in bps for c in bp):
                errors.append("schedule breakpoints must be finite")
        if errors:
            raise ConfigError(errors)


def leader_command(traj: LeaderTrajectory, t: float) -> ControlInput:
    if t < 0:
        raise ValueError(f"leader command requested at negative time {t!r}")
    if traj.kind == "constant":
        return ControlInput(traj.v0, traj.omega0)
    if traj.kind == "sinusoidal":
        return ControlInput(traj.v0, traj.amplitude * math.sin(traj.frequency * t))
    bps: Sequence = traj.breakpoints
    current = bps[0]
    for bp in bps[1:]:
        if bp[0] > t:
            break
        current = bp
    return ControlInput(current[1], current[2])
