"""Relative geometry between successive vehicles and camera/constraint checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DegenerateGeometryError
from .kinematics import Pose, wrap_angle

VISIBLE = "visible"
OUT_OF_RANGE = "out_of_range"
OUT_OF_FOV = "out_of_fov"

OK = "ok"
COLLISION = "collision"
CONNECTIVITY_BREAK = "connectivity_break"


@dataclass(frozen=True)
class Measurement:
    """Camera reading of the predecessor: center distance ``d`` and bearing ``beta``.

    ``beta`` is measured from the follower's heading to the line of sight,
    counter-clockwise positive.
    """

    d: float
    beta: float


@dataclass(frozen=True)
class CameraModel:
    range: float
    aov: float

    def __post_init__(self):
        errors = []
        if not self.range > 0:
            errors.append(f"camera range must be positive, got {self.range!r}")
        if not 0 < self.aov < math.pi:
            errors.append(f"camera angle of view must lie in (0, pi), got {self.aov!r}")
        if errors:
            raise ConfigError(errors)


@dataclass(frozen=True)
class Constraints:
    d_col: float
    d_con: float
    beta_con: float

    def __post_init__(self):
        errors = []
        if not 0 < self.d_col < self.d_con:
            errors.append(
                f"need 0 < d_col < d_con, got d_col={self.d_col!r}, d_con={self.d_con!r}"
            )
        if not 0 < self.beta_con < math.pi / 2:
            errors.append(f"beta_con must lie in (0, pi/2), got {self.beta_con!r}")
        if errors:
            raise ConfigError(errors)

    def check_camera(self, cam: CameraModel) -> list[str]:
        """Problems making these constraints unenforceable with ``cam`` (empty if fine)."""
        errors = []
        if self.d_con > cam.range:
            errors.append(f"d_con={self.d_con!r} exceeds camera range {cam.range!r}")
        if self.beta_con > cam.aov / 2:
            errors.append(
                f"beta_con={self.beta_con!r} exceeds half the camera angle of view {cam.aov / 2!r}"
            )
        return errors


def relative_measurement(follower: Pose, predecessor: Pose) -> Measurement:
    dx = predecessor.x - follower.x
    dy = predecessor.y - follower.y
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError(
            f"follower and predecessor coincide at ({follower.x!r}, {follower.y!r})"
        )
    return Measurement(math.hypot(dx, dy), wrap_angle(math.atan2(dy, dx) - follower.phi))


def relative_heading(follower: Pose, predecessor: Pose) -> float:
    """gamma = phi_follower - phi_predecessor, wrapped."""
    return wrap_angle(follower.phi - predecessor.phi)


def camera_visibility(m: Measurement, cam: CameraModel) -> str:
    if m.d > cam.range:
        return OUT_OF_RANGE
    if abs(m.beta) > cam.aov / 2:
        return OUT_OF_FOV
    return VISIBLE


def constraint_status(m: Measurement, c: Constraints) -> str:
    # the feasible region is open: boundaries count as violations
    if m.d <= c.d_col:
        return COLLISION
    if m.d >= c.d_con or abs(m.beta) >= c.beta_con:
        return CONNECTIVITY_BREAK
    return OK


def place_behind(predecessor: Pose, d: float, beta: float, gamma: float) -> Pose:
    """Pose of a follower that sees ``predecessor`` at (d, beta) with relative heading gamma."""
    phi = wrap_angle(predecessor.phi + gamma)
    los = phi + beta
    return Pose(predecessor.x - d * math.cos(los), predecessor.y - d * math.sin(los), phi)
