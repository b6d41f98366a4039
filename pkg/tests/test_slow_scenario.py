"""Same gains and envelopes as the reference run, with a leader slow enough to follow.

Supplements the reference-run acceptance checks with a configuration the
bounded linear-velocity law can actually track.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from platoon_ppc import verify as oracle
from platoon_ppc.simulator import build_scenario, finite_difference_audit, run


@pytest.fixture(scope="module")
def slow_run(slow_config):
    sc = build_scenario(slow_config)
    start = time.perf_counter()
    res = run(sc)
    return sc, res, time.perf_counter() - start


def test_full_run_no_violations(slow_run):
    sc, res, wall = slow_run
    rep = res.report
    assert rep["rows"] == sc.n_steps + 1 == 60001
    assert rep["envelope_violations"] == {"distance": 0, "bearing": 0}
    assert rep["constraint_violations"] == {"collision": 0, "connectivity_break": 0}
    assert rep["passed"]
    assert wall < 10.0


def test_steady_state_bands(slow_run):
    _, res, _ = slow_run
    tr = res.trace
    tail = tr.t >= 45.0
    assert np.abs(tr.e_d[tail]).max() <= 0.0625
    assert np.abs(tr.e_beta[tail]).max() <= math.radians(1.15)


def test_audit_within_tolerance(slow_run):
    _, res, _ = slow_run
    a = finite_difference_audit(res.trace)
    assert a["distance"]["max"] <= 5e-3
    assert a["bearing"]["max"] <= 5e-3


def test_audit_second_order(slow_config):
    sc = build_scenario(slow_config)
    rows = oracle.dt_sweep(sc, duration=5.0)
    for r in oracle.check_convergence(rows, min_ratio=3.5):
        assert r.passed, r.line()


def test_gain_sweep_monotone(slow_config):
    base = build_scenario(slow_config)
    vmax = []
    for k_d in (0.001, 0.005, 0.025):
        params = tuple(dataclasses.replace(p, k_d=k_d) for p in base.params)
        rep = run(dataclasses.replace(base, params=params, duration=10.0)).report
        assert rep["passed"]
        vmax.append(rep["max_abs_v"])
    assert vmax[0] < vmax[1] < vmax[2]
