import dataclasses
import math

import numpy as np
import pytest

from platoon_ppc.controller import Saturation
from platoon_ppc.errors import ConfigError, InitialConditionError
from platoon_ppc.kinematics import LeaderTrajectory, Pose
from platoon_ppc.simulator import (
    PlatoonState,
    VectorFormState,
    build_scenario,
    error_dynamics_rhs,
    finite_difference_audit,
    observe,
    run,
    run_batch,
    step,
    vector_form_rhs,
)

from conftest import line_scenario


def test_n_steps_rounding():
    assert line_scenario(dt=0.1, duration=0.3).n_steps == 3
    assert line_scenario(dt=0.1, duration=0.25).n_steps == 3
    assert line_scenario(dt=1e-3, duration=60.0).n_steps == 60000


def test_equilibrium_short():
    sc = line_scenario(n=2, duration=0.5)
    res = run(sc)
    assert res.report["passed"]
    assert np.all(res.trace.v == 0.0) and np.all(res.trace.omega == 0.0)
    assert np.all(res.trace.x[-1] == res.trace.x[0])


def test_trace_columns():
    cols = line_scenario(n=2, duration=0.01).n_followers and run(line_scenario(n=2, duration=0.01)).trace.columns()
    assert cols[:6] == ["t", "x_0", "y_0", "phi_0", "v_0", "omega_0"]
    assert cols[16:18] == ["d_1", "beta_1"]
    assert cols[-1] == "status_2"
    assert len(cols) == 1 + 3 * 5 + 2 * 13


def test_validate_rejects_boundary_start():
    sc = line_scenario(n=2, spacing=2.0)
    with pytest.raises(InitialConditionError) as info:
        sc.validate()
    assert {v["vehicle"] for v in info.value.violations} == {1, 2}


def test_validate_collects_errors():
    sc = dataclasses.replace(line_scenario(), dt=-1.0, integrator="midpoint", breach_policy="ignore")
    with pytest.raises(ConfigError) as info:
        sc.validate()
    assert len(info.value.errors) == 3


def test_halt_policy_stops_and_marks(reference_config):
    sc = dataclasses.replace(build_scenario(reference_config), duration=2.0)
    res = run(sc)
    assert res.halted
    last = res.trace.n_rows - 1
    assert math.isnan(res.trace.v[last, 1])
    assert "vehicle 1" in res.diagnostic and "distance" in res.diagnostic
    assert res.report["rows"] == last + 1 < sc.n_steps + 1
    assert not res.report["passed"]


def test_record_policy_runs_to_end(reference_config):
    sc = dataclasses.replace(build_scenario(reference_config), duration=1.2, breach_policy="record")
    res = run(sc)
    assert not res.halted
    assert res.report["rows"] == sc.n_steps + 1
    assert res.report["envelope_violations"]["distance"] > 0
    assert not res.report["passed"]


def test_step_returns_same_state_on_halt(reference_config):
    sc = dataclasses.replace(build_scenario(reference_config), duration=2.0)
    state = PlatoonState.initial(sc)
    while True:
        new, obs = step(sc, state)
        if obs.halt:
            assert new is state
            break
        state = new


def test_saturation_clamp():
    leader = LeaderTrajectory("constant", v0=0.0)
    sc = line_scenario(n=1, spacing=1.5, leader=leader, duration=0.01, saturation=Saturation(v_max=1e-4, mode="clamp"))
    obs = observe(sc, PlatoonState.initial(sc))
    assert obs.v[1] == 1e-4
    assert obs.events and obs.events[0]["kind"] == "saturation"


def test_vector_form_structure():
    rng = np.random.default_rng(3)
    n = 5
    st = VectorFormState.build(rng.uniform(0.5, 1.5, n), rng.uniform(-0.5, 0.5, n), rng.uniform(-1, 1, n),
                               rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), 0.3)
    for m in (st.C_tilde, st.S_tilde):
        i, j = np.nonzero(m)
        assert np.all((j == i) | (j == i - 1))
    assert np.all(st.c[1:] == 0) and np.all(st.s[1:] == 0)


def test_vector_form_n3_against_hand_values():
    d, beta, gamma = [1.0, 0.8, 1.2], [0.1, -0.2, 0.05], [0.0, 0.3, -0.1]
    v, w, v0 = [0.2, 0.1, 0.3], [0.01, -0.02, 0.0], 0.25
    ed, eb = error_dynamics_rhs(d, beta, gamma, v, w, v0)
    # vehicle 2 by hand
    assert ed[1] == pytest.approx(-0.1 * math.cos(-0.2) + 0.2 * math.cos(0.1), rel=1e-15)
    assert eb[1] == pytest.approx(0.02 + 0.1 / 0.8 * math.sin(-0.2) - 0.2 / 0.8 * math.sin(0.1), rel=1e-15)
    vd, vb = vector_form_rhs(d, beta, gamma, v, w, v0)
    np.testing.assert_allclose(vd, ed, rtol=0, atol=1e-12)
    np.testing.assert_allclose(vb, eb, rtol=0, atol=1e-12)


def test_audit_detects_wrong_convention(short_slow_scenario):
    tr = run(short_slow_scenario).trace
    good = finite_difference_audit(tr)
    bad = finite_difference_audit(tr, bearing_sign=-1.0)
    assert good["bearing"]["max"] < 1e-8
    assert bad["bearing"]["max"] > 1e-3


def test_run_batch_matches_serial(short_slow_scenario):
    scs = [short_slow_scenario, dataclasses.replace(short_slow_scenario, duration=1.0)]
    serial = run_batch(scs, jobs=1)
    parallel = run_batch(scs, jobs=2)
    for a, b in zip(serial, parallel):
        a["report"].pop("wall_clock_s"), b["report"].pop("wall_clock_s")
        assert a == b


def test_absolute_initial_poses(slow_config):
    poses = (Pose(-0.75, 0.0, 0.0), Pose(-1.5, 0.0, 0.0))
    cfg = dataclasses.replace(slow_config, n_followers=2, initial_mode="absolute", initial=poses)
    sc = build_scenario(cfg)
    assert sc.initial_poses == poses
