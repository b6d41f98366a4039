"""Closed-loop platoon simulation, runtime monitors and error-dynamics oracles."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .controller import ControllerParams, Saturation, control_from_normalized
from .envelope import Envelope, derive_bounds, normalize, rho, validate_initial
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    EnvelopeBreach,
    InitialConditionError,
)
from .geometry import (
    COLLISION,
    CONNECTIVITY_BREAK,
    OK,
    CameraModel,
    Constraints,
    Measurement,
    place_behind,
    relative_heading,
    relative_measurement,
)
from .kinematics import INTEGRATORS, LeaderTrajectory, Pose, leader_command, wrap_angle, wrap_angles

log = logging.getLogger(__name__)

BREACH_POLICIES = ("halt", "record")
STATUS_CODES = {OK: 0, COLLISION: 1, CONNECTIVITY_BREAK: 2}
STATUS_NAMES = {v: k for k, v in STATUS_CODES.items()}


@dataclass(frozen=True)
class Scenario:
    leader: LeaderTrajectory
    leader_pose: Pose
    initial_poses: tuple  # followers 1..N, front to back
    params: tuple  # ControllerParams per follower
    constraints: Constraints
    camera: CameraModel
    dt: float = 1e-3
    duration: float = 60.0
    integrator: str = "rk4"
    breach_policy: str = "halt"
    steady_state_window: float = 0.25
    saturation: Saturation = field(default_factory=Saturation)

    @property
    def n_followers(self) -> int:
        return len(self.initial_poses)

    @property
    def n_steps(self) -> int:
        ratio = self.duration / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return math.ceil(ratio)

    def initial_measurements(self) -> list[Measurement]:
        poses = (self.leader_pose,) + tuple(self.initial_poses)
        return [relative_measurement(poses[i], poses[i - 1]) for i in range(1, len(poses))]

    def validate(self) -> None:
        """Raise :class:`ConfigError` (or :class:`InitialConditionError`) if unusable."""
        errors = []
        n = self.n_followers
        if n < 1:
            errors.append("need at least one follower")
        if len(self.params) != n:
            errors.append(f"{len(self.params)} controller parameter sets for {n} followers")
        if not (math.isfinite(self.dt) and self.dt > 0):
            errors.append(f"dt must be positive, got {self.dt!r}")
        elif not self.duration >= 0:
            errors.append(f"duration must be non-negative, got {self.duration!r}")
        if self.integrator not in INTEGRATORS:
            errors.append(f"unknown integrator {self.integrator!r}")
        if self.breach_policy not in BREACH_POLICIES:
            errors.append(f"breach policy must be one of {BREACH_POLICIES}, got {self.breach_policy!r}")
        if not 0 < self.steady_state_window <= 1:
            errors.append("steady_state_window is a fraction in (0, 1]")
        if self.saturation.mode not in ("warn", "clamp"):
            errors.append(f"saturation mode must be warn or clamp, got {self.saturation.mode!r}")
        errors.extend(self.constraints.check_camera(self.camera))
        for i, p in enumerate(self.params, start=1):
            try:
                ml, mu, mbl, mbu = derive_bounds(p.d_des, self.constraints)
            except ConfigError as exc:
                errors.extend(f"vehicle {i}: {e}" for e in exc.errors)
                continue
            expected = ((ml, mu), (mbl, mbu))
            got = ((p.env_d.m_lower, p.env_d.m_upper), (p.env_beta.m_lower, p.env_beta.m_upper))
            if expected != got:
                errors.append(f"vehicle {i}: envelope bounds {got} differ from constraint-derived {expected}")
        if errors:
            raise ConfigError(errors)
        try:
            meas = self.initial_measurements()
        except DegenerateGeometryError as exc:
            raise ConfigError([str(exc)]) from None
        violations = validate_initial(
            [m.d - p.d_des for m, p in zip(meas, self.params)],
            [m.beta for m in meas],
            [(p.env_d, p.env_beta) for p in self.params],
        )
        if violations:
            raise InitialConditionError(violations)


def poses_from_relative(leader_pose: Pose, triples) -> list[Pose]:
    """Build follower poses front to back from (d, beta, gamma) triples."""
    poses = []
    pred = leader_pose
    for d, beta, gamma in triples:
        pred = place_behind(pred, d, beta, gamma)
        poses.append(pred)
    return poses


def check_relative_construction(leader_pose: Pose, poses, triples, tol: float = 1e-9) -> list[dict]:
    """Violations of the requested (d, beta) triples, measured on the constructed poses too."""
    problems = []
    chain = [leader_pose] + list(poses)
    for i, (d, beta, gamma) in enumerate(triples, start=1):
        m = relative_measurement(chain[i], chain[i - 1])
        g = relative_heading(chain[i], chain[i - 1])
        if abs(m.d - d) > tol or abs(wrap_angle(m.beta - beta)) > tol or abs(wrap_angle(g - gamma)) > tol:
            problems.append(f"vehicle {i}: constructed pose re-measures as ({m.d!r}, {m.beta!r}, {g!r})")
    return problems


def build_scenario(cfg) -> Scenario:
    """Assemble and validate a :class:`Scenario` from a parsed ``Config``.

    Relative initial conditions are placed front to back from the leader and
    re-measured; both the requested triples and the re-measured geometry must
    satisfy the initial-feasibility check.
    """
    errors = []
    overrides = cfg.vehicles or (None,) * cfg.n_followers
    params = []
    envelopes: dict = {}  # identical envelopes are shared so rho is evaluated once per tick
    for i, vo in enumerate(overrides, start=1):
        d_des = vo.d_des if vo is not None and vo.d_des is not None else cfg.d_des
        k_d = vo.k_d if vo is not None and vo.k_d is not None else cfg.k_d
        k_b = vo.k_beta if vo is not None and vo.k_beta is not None else cfg.k_beta
        try:
            ml, mu, mbl, mbu = derive_bounds(d_des, cfg.constraints)
            env_d = envelopes.setdefault(("d", ml, mu), Envelope(ml, mu, cfg.l_d, cfg.rho_inf_d))
            env_b = envelopes.setdefault(
                ("b", mbl, mbu), Envelope(mbl, mbu, cfg.l_beta, cfg.rho_inf_beta)
            )
            params.append(ControllerParams(k_d, k_b, d_des, env_d, env_b, cfg.soft_guard))
        except ConfigError as exc:
            errors.extend(f"vehicle {i}: {e}" for e in exc.errors)
    errors.extend(cfg.constraints.check_camera(cfg.camera))
    if errors:
        raise ConfigError(errors)

    if cfg.initial_mode == "relative":
        triples = list(cfg.initial)
        violations = validate_initial(
            [d - p.d_des for (d, _, _), p in zip(triples, params)],
            [b for _, b, _ in triples],
            [(p.env_d, p.env_beta) for p in params],
        )
        if violations:
            raise InitialConditionError(violations)
        poses = poses_from_relative(cfg.leader_pose, triples)
        problems = check_relative_construction(cfg.leader_pose, poses, triples)
        if problems:
            raise ConfigError(problems)
    else:
        poses = list(cfg.initial)

    sat = Saturation(*cfg.saturation) if cfg.saturation is not None else Saturation()
    scenario = Scenario(
        leader=cfg.leader,
        leader_pose=cfg.leader_pose,
        initial_poses=tuple(poses),
        params=tuple(params),
        constraints=cfg.constraints,
        camera=cfg.camera,
        dt=cfg.dt,
        duration=cfg.duration,
        integrator=cfg.integrator,
        breach_policy=cfg.breach_policy,
        steady_state_window=cfg.steady_state_window,
        saturation=sat,
    )
    scenario.validate()
    return scenario


# --------------------------------------------------------------------------- trace


FOLLOWER_FIELDS = (
    "d", "beta", "e_d", "e_beta", "xi_d", "xi_beta", "rho_d", "rho_beta",
    "lb_d", "ub_d", "lb_beta", "ub_beta",
)
VEHICLE_FIELDS = ("x", "y", "phi", "v", "omega")


class Trace:
    """Time-indexed record of one run.

    Row k holds the state at t_k = k*dt and the control computed from it (the
    one held over [t_k, t_k+1]). Per-vehicle quantities are 2-D arrays
    (rows x vehicles); vehicle arrays include the leader at column 0, follower
    arrays start at vehicle 1.
    """

    def __init__(self, n_followers: int, dt: float, capacity: int):
        self.n_followers = n_followers
        self.dt = dt
        self.n_rows = 0
        self.t = np.empty(capacity)
        for name in VEHICLE_FIELDS:
            setattr(self, name, np.empty((capacity, n_followers + 1)))
        for name in FOLLOWER_FIELDS:
            setattr(self, name, np.empty((capacity, n_followers)))
        self.status = np.empty((capacity, n_followers), dtype=np.int8)

    def trim(self) -> "Trace":
        n = self.n_rows
        self.t = self.t[:n]
        for name in VEHICLE_FIELDS + FOLLOWER_FIELDS + ("status",):
            setattr(self, name, getattr(self, name)[:n])
        return self

    def columns(self) -> list[str]:
        cols = ["t"]
        for i in range(self.n_followers + 1):
            cols += [f"{name}_{i}" for name in VEHICLE_FIELDS]
        for i in range(1, self.n_followers + 1):
            cols += [f"{name}_{i}" for name in FOLLOWER_FIELDS] + [f"status_{i}"]
        return cols

    def status_names(self) -> np.ndarray:
        return np.vectorize(STATUS_NAMES.get, otypes=[object])(self.status)


# --------------------------------------------------------------------------- engine


@dataclass
class PlatoonState:
    """Poses of leader (index 0) and followers at tick k, plus the last valid controls."""

    k: int
    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    last_v: list
    last_omega: list

    @classmethod
    def initial(cls, scenario: Scenario) -> "PlatoonState":
        poses = (scenario.leader_pose,) + tuple(scenario.initial_poses)
        n = len(poses) - 1
        return cls(
            0,
            np.array([p.x for p in poses]),
            np.array([p.y for p in poses]),
            np.array([p.phi for p in poses]),
            [0.0] * n,
            [0.0] * n,
        )


@dataclass
class Observation:
    """Everything computed at one tick before integrating."""

    t: float
    d: list
    beta: list
    e_d: list
    e_beta: list
    xi_d: list
    xi_beta: list
    rho_d: list
    rho_beta: list
    status: list
    v: list  # leader first
    omega: list
    events: list
    halt: bool = False


def observe(scenario: Scenario, state: PlatoonState) -> Observation:
    """Measure, monitor and compute every vehicle's control at the current tick."""
    t = state.k * scenario.dt
    lc = leader_command(scenario.leader, t)
    x, y, phi = state.x.tolist(), state.y.tolist(), state.phi.tolist()
    c = scenario.constraints
    d_col, d_con, beta_con = c.d_col, c.d_con, c.beta_con
    sat = scenario.saturation
    halt_on_breach = scenario.breach_policy == "halt"
    n = len(scenario.params)
    ds, betas, eds, xids, xibs, rds, rbs, status = ([0.0] * n for _ in range(8))
    vs = [lc.v] + [0.0] * n
    ws = [lc.omega] + [0.0] * n
    events = []
    halt = False
    rho_at: dict = {}
    hypot, atan2 = math.hypot, math.atan2
    for j, p in enumerate(scenario.params):
        i = j + 1
        dx = x[j] - x[i]
        dy = y[j] - y[i]
        if dx == 0.0 and dy == 0.0:
            raise DegenerateGeometryError(f"vehicle {i} coincides with its predecessor at t={t!r}")
        d = hypot(dx, dy)
        beta = wrap_angle(atan2(dy, dx) - phi[i])
        e_d = d - p.d_des
        rd = rho_at.get(id(p.env_d))
        if rd is None:
            rd = rho_at[id(p.env_d)] = rho(p.env_d, t)
        rb = rho_at.get(id(p.env_beta))
        if rb is None:
            rb = rho_at[id(p.env_beta)] = rho(p.env_beta, t)
        xi_d = normalize(e_d, rd)
        xi_b = normalize(beta, rb)
        ds[j], betas[j], eds[j], xids[j], xibs[j], rds[j], rbs[j] = d, beta, e_d, xi_d, xi_b, rd, rb
        if d <= d_col:
            status[j] = 1
        elif d >= d_con or abs(beta) >= beta_con:
            status[j] = 2
        else:
            status[j] = 0
        try:
            v, w = control_from_normalized(xi_d, xi_b, rb, t, p, vehicle=i)
        except EnvelopeBreach as exc:
            events.append({"kind": "breach", "t": t, "vehicle": i, "message": str(exc)})
            if halt_on_breach:
                halt = True
                v = w = math.nan
            else:
                v, w = state.last_v[j], state.last_omega[j]
        else:
            if abs(v) > sat.v_max or abs(w) > sat.omega_max:
                events.append({"kind": "saturation", "t": t, "vehicle": i, "v": v, "omega": w})
                if sat.mode == "clamp":
                    v = max(-sat.v_max, min(sat.v_max, v))
                    w = max(-sat.omega_max, min(sat.omega_max, w))
            state.last_v[j] = v
            state.last_omega[j] = w
        vs[i] = v
        ws[i] = w
    return Observation(t, ds, betas, eds, list(betas), xids, xibs, rds, rbs, status, vs, ws, events, halt)


def advance(scenario: Scenario, state: PlatoonState, v, omega) -> PlatoonState:
    stepper = INTEGRATORS[scenario.integrator]
    x, y, phi = stepper(state.x, state.y, state.phi, np.asarray(v), np.asarray(omega), scenario.dt)
    return PlatoonState(state.k + 1, x, y, wrap_angles(phi), state.last_v, state.last_omega)


def step(scenario: Scenario, state: PlatoonState) -> tuple[PlatoonState, Observation]:
    """Observe at t_k, then integrate to t_k+1 with the controls held.

    On a halting breach the state is returned unchanged alongside the observation.
    """
    obs = observe(scenario, state)
    if obs.halt:
        return state, obs
    return advance(scenario, state, obs.v, obs.omega), obs


def _record(trace: Trace, state: PlatoonState, obs: Observation) -> None:
    k = trace.n_rows
    trace.t[k] = obs.t
    trace.x[k] = state.x
    trace.y[k] = state.y
    trace.phi[k] = state.phi
    trace.v[k] = obs.v
    trace.omega[k] = obs.omega
    trace.d[k] = obs.d
    trace.beta[k] = obs.beta
    trace.e_d[k] = obs.e_d
    trace.e_beta[k] = obs.e_beta
    trace.xi_d[k] = obs.xi_d
    trace.xi_beta[k] = obs.xi_beta
    trace.rho_d[k] = obs.rho_d
    trace.rho_beta[k] = obs.rho_beta
    trace.status[k] = obs.status
    trace.n_rows = k + 1


@dataclass
class RunResult:
    trace: Trace
    report: dict
    events: list
    halted: bool
    diagnostic: str | None


def run(scenario: Scenario, seed=None) -> RunResult:
    """Simulate ``scenario`` for ceil(duration/dt) steps and summarize the trace."""
    scenario.validate()
    n_steps = scenario.n_steps
    trace = Trace(scenario.n_followers, scenario.dt, n_steps + 1)
    state = PlatoonState.initial(scenario)
    events: list = []
    halted = False
    diagnostic = None
    warned: set = set()  # first breach per vehicle is logged, the rest only counted
    breaches = 0
    start = time.perf_counter()
    for k in range(n_steps + 1):
        obs = observe(scenario, state)
        _record(trace, state, obs)
        for ev in obs.events:
            if ev["kind"] == "breach":
                breaches += 1
                if ev["vehicle"] not in warned:
                    warned.add(ev["vehicle"])
                    log.warning("%s", ev["message"])
        events.extend(obs.events)
        if obs.halt:
            halted = True
            diagnostic = "; ".join(ev["message"] for ev in obs.events if ev["kind"] == "breach")
            break
        if k < n_steps:
            state = advance(scenario, state, obs.v, obs.omega)
    wall = time.perf_counter() - start
    if breaches > len(warned):
        log.warning("%d envelope breach ticks in total", breaches)
    trace.trim()
    _fill_bounds(trace, scenario)
    report = compute_report(
        trace,
        scenario.params,
        window=scenario.steady_state_window,
        wall_clock_s=wall,
        halted=halted,
        diagnostic=diagnostic,
        breach_policy=scenario.breach_policy,
        expected_steps=n_steps,
        seed=seed,
        saturation=scenario.saturation,
    )
    return RunResult(trace, report, events, halted, diagnostic)


def _batch_worker(job):
    scenario, seed, audit = job
    res = run(scenario, seed=seed)
    out = {"report": res.report}
    if audit:
        a = finite_difference_audit(res.trace)
        out["audit"] = {ch: a[ch]["max"] for ch in ("distance", "bearing")}
    return out


def run_batch(scenarios, jobs: int = 1, seed=None, audit: bool = False) -> list[dict]:
    """Run independent scenarios, one engine each, optionally across processes.

    Results come back in input order as ``{"report": ..., "audit": ...}``;
    ``audit`` holds per-channel finite-difference residual maxima when requested.
    """
    work = [(sc, seed, audit) for sc in scenarios]
    if jobs <= 1 or len(work) <= 1:
        return [_batch_worker(w) for w in work]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        return list(pool.map(_batch_worker, work))


def _fill_bounds(trace: Trace, scenario: Scenario) -> None:
    ml_d = np.array([p.env_d.m_lower for p in scenario.params])
    mu_d = np.array([p.env_d.m_upper for p in scenario.params])
    ml_b = np.array([p.env_beta.m_lower for p in scenario.params])
    mu_b = np.array([p.env_beta.m_upper for p in scenario.params])
    trace.lb_d = -ml_d * trace.rho_d
    trace.ub_d = mu_d * trace.rho_d
    trace.lb_beta = -ml_b * trace.rho_beta
    trace.ub_beta = mu_b * trace.rho_beta


# --------------------------------------------------------------------------- report


def _first_time(t: np.ndarray, mask: np.ndarray):
    rows = np.flatnonzero(mask.any(axis=1))
    return float(t[rows[0]]) if rows.size else None


def _settling_time(t: np.ndarray, err: np.ndarray, band: np.ndarray):
    """Earliest t after which every vehicle's |error| stays within its band."""
    outside = (np.abs(err) > band).any(axis=1)
    rows = np.flatnonzero(outside)
    if rows.size == 0:
        return float(t[0]) if t.size else None
    last = rows[-1]
    if last + 1 >= t.size:
        return None
    return float(t[last + 1])


def _nanmax_abs(a: np.ndarray) -> float:
    if a.size == 0 or np.all(np.isnan(a)):
        return math.nan
    return float(np.nanmax(np.abs(a)))


def compute_report(
    trace: Trace,
    params,
    *,
    window: float = 0.25,
    wall_clock_s: float | None = None,
    halted: bool = False,
    diagnostic: str | None = None,
    breach_policy: str = "halt",
    expected_steps: int | None = None,
    seed=None,
    saturation: Saturation | None = None,
) -> dict:
    """Summarize a trace. Everything except the pass-through arguments is derived from it."""
    t = trace.t
    ml_d = np.array([p.env_d.m_lower for p in params])
    mu_d = np.array([p.env_d.m_upper for p in params])
    ml_b = np.array([p.env_beta.m_lower for p in params])
    mu_b = np.array([p.env_beta.m_upper for p in params])
    xi_d = trace.e_d / trace.rho_d
    xi_b = trace.e_beta / trace.rho_beta
    viol_d = ~((-ml_d < xi_d) & (xi_d < mu_d))
    viol_b = ~((-ml_b < xi_b) & (xi_b < mu_b))
    end_t = float(t[-1]) if t.size else 0.0
    t_start = end_t - window * end_t
    tail = t >= t_start
    band_d = np.array([p.env_d.rho_inf for p in params])
    band_b = np.array([p.env_beta.rho_inf for p in params])
    follower_v = trace.v[:, 1:]
    follower_w = trace.omega[:, 1:]
    pairs = []
    for i in range(trace.n_followers):
        pairs.append(
            {
                "vehicle": i + 1,
                "min_d": float(trace.d[:, i].min()),
                "max_d": float(trace.d[:, i].max()),
                "max_abs_beta": float(np.abs(trace.beta[:, i]).max()),
                "steady_state_max_abs_e_d": float(np.abs(trace.e_d[tail, i]).max()),
                "steady_state_max_abs_e_beta": float(np.abs(trace.e_beta[tail, i]).max()),
            }
        )
    report = {
        "n_followers": trace.n_followers,
        "dt": trace.dt,
        "rows": int(t.size),
        "end_time": end_t,
        "expected_steps": expected_steps,
        "breach_policy": breach_policy,
        "halted": halted,
        "diagnostic": diagnostic,
        "envelope_violations": {"distance": int(viol_d.sum()), "bearing": int(viol_b.sum())},
        "first_violation_time": {
            "distance": _first_time(t, viol_d),
            "bearing": _first_time(t, viol_b),
        },
        "constraint_violations": {
            "collision": int((trace.status == 1).sum()),
            "connectivity_break": int((trace.status == 2).sum()),
        },
        "pairs": pairs,
        "min_d": float(trace.d.min()),
        "max_d": float(trace.d.max()),
        "max_abs_beta": float(np.abs(trace.beta).max()),
        "max_abs_v": _nanmax_abs(follower_v),
        "max_abs_omega": _nanmax_abs(follower_w),
        "steady_state": {
            "window_fraction": window,
            "window_start": t_start,
            "max_abs_e_d": float(np.abs(trace.e_d[tail]).max()),
            "max_abs_e_beta": float(np.abs(trace.e_beta[tail]).max()),
        },
        "settling_time": {
            "distance": _settling_time(t, trace.e_d, band_d),
            "bearing": _settling_time(t, trace.e_beta, band_b),
        },
        "wall_clock_s": wall_clock_s,
        "seed": seed,
    }
    if saturation is not None and (math.isfinite(saturation.v_max) or math.isfinite(saturation.omega_max)):
        report["saturation_exceedances"] = {
            "v": int((np.abs(follower_v) > saturation.v_max).sum()),
            "omega": int((np.abs(follower_w) > saturation.omega_max).sum()),
        }
    report["passed"] = (
        not halted
        and report["envelope_violations"]["distance"] == 0
        and report["envelope_violations"]["bearing"] == 0
        and report["constraint_violations"]["collision"] == 0
        and report["constraint_violations"]["connectivity_break"] == 0
    )
    return report


# --------------------------------------------------------------------------- error dynamics


def error_dynamics_rhs(d, beta, gamma, v, omega, v0):
    """Per-vehicle distance/bearing error rates.

    Vehicle i's predecessor speed is v[i-1] (the leader's ``v0`` for i = 1).
    Returns two lists (de_d, de_beta).
    """
    n = len(d)
    de_d, de_b = [], []
    for i in range(n):
        if d[i] == 0:
            raise DegenerateGeometryError(f"vehicle {i + 1} has zero distance to its predecessor")
        vp = v0 if i == 0 else v[i - 1]
        a = gamma[i] + beta[i]
        de_d.append(-v[i] * math.cos(beta[i]) + vp * math.cos(a))
        de_b.append(-omega[i] + (v[i] / d[i]) * math.sin(beta[i]) - (vp / d[i]) * math.sin(a))
    return de_d, de_b


@dataclass
class VectorFormState:
    e_d: np.ndarray
    e_beta: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    c: np.ndarray
    s: np.ndarray
    D: np.ndarray
    C_tilde: np.ndarray
    S_tilde: np.ndarray

    @classmethod
    def build(cls, d, beta, gamma, v, omega, v0, d_des=None) -> "VectorFormState":
        d = np.asarray(d, dtype=float)
        beta = np.asarray(beta, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        if np.any(d <= 0):
            raise DegenerateGeometryError("distances must be positive in vector form")
        n = d.size
        a = gamma + beta
        C = np.diag(np.cos(beta))
        S = np.diag(np.sin(beta))
        idx = np.arange(1, n)
        C[idx, idx - 1] = -np.cos(a[1:])
        S[idx, idx - 1] = -np.sin(a[1:])
        c = np.zeros(n)
        s = np.zeros(n)
        c[0] = v0 * np.cos(a[0])
        # sign follows the per-vehicle rates: the leader term enters bearing with a minus
        s[0] = -v0 * np.sin(a[0])
        e_d = d - (0.0 if d_des is None else np.asarray(d_des, dtype=float))
        return cls(e_d, beta, np.asarray(v, float), np.asarray(omega, float), c, s, np.diag(d), C, S)

    def rhs(self) -> tuple[np.ndarray, np.ndarray]:
        de_d = -self.C_tilde @ self.v + self.c
        de_b = -self.omega + np.linalg.solve(self.D, self.S_tilde @ self.v + self.s)
        return de_d, de_b


def vector_form_rhs(d, beta, gamma, v, omega, v0):
    return VectorFormState.build(d, beta, gamma, v, omega, v0).rhs()


# --------------------------------------------------------------------------- audit


def finite_difference_audit(trace: Trace, bearing_sign: float = 1.0) -> dict:
    """Compare centered differences of (d, beta) along a trace with the analytic rates.

    Distances and bearings are recomputed from the logged poses; ``bearing_sign``
    flips the bearing convention (a test hook: -1 must fail). Controls are held
    over each step, so the analytic rate at row k averages the rates under the
    controls of rows k-1 and k; with that pairing the residual is second order
    in dt.

    Returns ``{"distance": {...}, "bearing": {...}}`` with per-vehicle maxima,
    the overall maximum and its time.
    """
    if trace.n_rows < 3:
        raise ValueError("finite-difference audit needs at least three rows")
    dt = trace.dt
    x, y, phi = trace.x, trace.y, trace.phi
    v, w = trace.v, trace.omega
    dx = x[:, :-1] - x[:, 1:]
    dy = y[:, :-1] - y[:, 1:]
    d = np.hypot(dx, dy)
    beta = bearing_sign * wrap_angles(np.arctan2(dy, dx) - phi[:, 1:])
    gamma = wrap_angles(phi[:, 1:] - phi[:, :-1])

    def rates(k_ctrl, rows):
        vi = v[k_ctrl, 1:]
        vp = v[k_ctrl, :-1]
        wi = w[k_ctrl, 1:]
        b = beta[rows]
        a = gamma[rows] + b
        dd = -vi * np.cos(b) + vp * np.cos(a)
        db = -wi + (vi / d[rows]) * np.sin(b) - (vp / d[rows]) * np.sin(a)
        return dd, db

    rows = np.arange(1, trace.n_rows - 1)
    dd0, db0 = rates(rows - 1, rows)
    dd1, db1 = rates(rows, rows)
    an_d = 0.5 * (dd0 + dd1)
    an_b = 0.5 * (db0 + db1)
    fd_d = (d[rows + 1] - d[rows - 1]) / (2 * dt)
    fd_b = wrap_angles(beta[rows + 1] - beta[rows - 1]) / (2 * dt)
    out = {}
    for name, fd, an in (("distance", fd_d, an_d), ("bearing", fd_b, an_b)):
        res = np.abs(fd - an)
        res = np.where(np.isnan(res), -1.0, res)  # rows touching an unapplied control
        valid = res >= 0
        if not valid.any():
            out[name] = {"max": math.nan, "t": None, "per_vehicle": [math.nan] * trace.n_followers}
            continue
        per_vehicle = res.max(axis=0)
        r, col = np.unravel_index(int(np.argmax(res)), res.shape)
        out[name] = {
            "max": float(res.max()),
            "t": float(trace.t[rows[r]]),
            "vehicle": int(col) + 1,
            "per_vehicle": [float(p) for p in per_vehicle],
        }
    return out
