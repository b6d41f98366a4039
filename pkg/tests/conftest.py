import dataclasses
import math

import pytest

from platoon_ppc.config import parse_config, reference_config_text
from platoon_ppc.controller import ControllerParams
from platoon_ppc.envelope import Envelope, derive_bounds
from platoon_ppc.geometry import CameraModel, Constraints
from platoon_ppc.kinematics import LeaderTrajectory, Pose
from platoon_ppc.simulator import Scenario, build_scenario

CONSTRAINTS = Constraints(0.0375, 2.0, math.radians(45.0))
CAMERA = CameraModel(2.0, math.radians(90.0))
D_DES = 0.75


def ref_envelopes(constraints=CONSTRAINTS, d_des=D_DES):
    ml, mu, mbl, mbu = derive_bounds(d_des, constraints)
    return Envelope(ml, mu, 0.5, 0.0625), Envelope(mbl, mbu, 0.5, math.radians(1.15))


def ref_params(k_d=0.005, k_beta=0.001, soft_guard=0.0):
    env_d, env_b = ref_envelopes()
    return ControllerParams(k_d, k_beta, D_DES, env_d, env_b, soft_guard)


def line_scenario(n=3, spacing=D_DES, leader=None, **kw):
    """Followers strung out behind a leader at the origin facing +x."""
    poses = tuple(Pose(-spacing * (i + 1), 0.0, 0.0) for i in range(n))
    p = ref_params()
    return Scenario(
        leader=leader or LeaderTrajectory("constant", v0=0.0),
        leader_pose=Pose(0.0, 0.0, 0.0),
        initial_poses=poses,
        params=(p,) * n,
        constraints=CONSTRAINTS,
        camera=CAMERA,
        **kw,
    )


@pytest.fixture(scope="session")
def reference_config():
    return parse_config(reference_config_text("reference.yaml"))


@pytest.fixture(scope="session")
def slow_config():
    return parse_config(reference_config_text("reference_slow.yaml"))


@pytest.fixture
def short_slow_scenario(slow_config):
    return dataclasses.replace(build_scenario(slow_config), duration=2.0)


# acceptance lines are echoed in the terminal summary so they show without -s
def pytest_configure(config):
    config.acceptance_lines = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


@pytest.fixture
def criterion(request):
    """criterion(n, ok, detail): record and print the one-line verdict for criterion n."""

    def report(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.acceptance_lines[n] = line
        print(line)
        return ok

    return report
