"""Decentralized prescribed-performance control of unicycle platoons under
limited camera field of view."""

from .errors import (
    ConfigError,
    DegenerateGeometryError,
    EnvelopeBreach,
    InitialConditionError,
    NumericError,
)
from .kinematics import (
    ControlInput,
    LeaderTrajectory,
    Pose,
    integrate_step,
    leader_command,
    unicycle_derivative,
    wrap_angle,
)
from .geometry import (
    CameraModel,
    Constraints,
    Measurement,
    camera_visibility,
    constraint_status,
    relative_heading,
    relative_measurement,
)
from .envelope import (
    Envelope,
    check_envelope,
    derive_bounds,
    inverse_transform,
    modulation,
    normalize,
    rho,
    rho_dot,
    transform,
    validate_initial,
)
from .controller import (
    ControllerParams,
    angular_velocity,
    bearing_error,
    controller_step,
    distance_error,
    linear_velocity,
)

__version__ = "0.1.0"
