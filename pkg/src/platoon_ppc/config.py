"""Scenario configuration: YAML text with explicit units.

Dimensional values are strings such as ``"0.75 m"``, ``"45 deg"``, ``"1 ms"``,
``"0.3 m/s"``, ``"0.2 rad/s"`` or ``"0.5 1/s"``; gains, counts and fractions are
plain numbers. Parsing is strict: unknown keys and missing units are errors,
and every problem is reported at once.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import yaml

from .errors import ConfigError
from .geometry import CameraModel, Constraints
from .kinematics import LeaderTrajectory, Pose

SCHEMA_VERSION = 1

UNITS = {
    "length": {"m": 1.0, "cm": 0.01, "mm": 0.001},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "time": {"s": 1.0, "ms": 1e-3},
    "speed": {"m/s": 1.0},
    "rate": {"rad/s": 1.0, "deg/s": math.pi / 180.0},
    "decay": {"1/s": 1.0},
}
CANONICAL = {"length": "m", "angle": "rad", "time": "s", "speed": "m/s", "rate": "rad/s", "decay": "1/s"}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/0-9]*)\s*$")


def parse_quantity(value, kind: str | None) -> float:
    """Convert ``value`` to SI. ``kind=None`` means a plain number is expected."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if kind is None:
        if isinstance(value, (int, float)):
            return float(value)
        m = _QUANTITY.match(str(value))
        if m and not m.group(2):
            return float(m.group(1))
        raise ValueError(f"expected a plain number, got {value!r}")
    if isinstance(value, (int, float)):
        raise ValueError(f"missing unit on {value!r} (expected one of {sorted(UNITS[kind])})")
    m = _QUANTITY.match(str(value))
    if not m:
        raise ValueError(f"cannot parse quantity {value!r}")
    number, unit = m.groups()
    if not unit:
        raise ValueError(f"missing unit on {value!r} (expected one of {sorted(UNITS[kind])})")
    if unit not in UNITS[kind]:
        raise ValueError(f"unit {unit!r} in {value!r} is not a {kind} unit {sorted(UNITS[kind])}")
    scale = UNITS[kind][unit]
    return float(number) if scale == 1.0 else float(number) * scale


def format_quantity(value: float, kind: str | None):
    if kind is None:
        return value
    return f"{value!r} {CANONICAL[kind]}"


@dataclass(frozen=True)
class VehicleOverride:
    k_d: float | None = None
    k_beta: float | None = None
    d_des: float | None = None


@dataclass(frozen=True)
class OutputOptions:
    trace: str = "trace.csv"
    report: str = "report.json"
    plot_data: str | None = "plots"
    figures: bool = False
    decimation: int = 1


@dataclass(frozen=True)
class Config:
    """Fully parsed configuration, all values in SI units (m, s, rad)."""

    n_followers: int
    d_des: float
    constraints: Constraints
    camera: CameraModel
    l_d: float
    rho_inf_d: float
    l_beta: float
    rho_inf_beta: float
    k_d: float
    k_beta: float
    leader: LeaderTrajectory
    dt: float
    duration: float
    initial_mode: str  # "relative" or "absolute"
    initial: tuple  # (d, beta, gamma) triples or Poses, one per follower
    leader_pose: Pose = Pose(0.0, 0.0, 0.0)
    soft_guard: float = 0.0
    vehicles: tuple = ()
    integrator: str = "rk4"
    breach_policy: str = "halt"
    steady_state_window: float = 0.25
    saturation: tuple | None = None  # (v_max, omega_max, mode)
    output: OutputOptions = field(default_factory=OutputOptions)
    schema_version: int = SCHEMA_VERSION


class _Reader:
    """Walks the raw tree, collecting every error instead of stopping at the first."""

    def __init__(self, strict: bool = True):
        self.errors: list[str] = []
        self.strict = strict

    def section(self, tree, path, keys, required=True):
        node = tree.get(path[-1]) if isinstance(tree, dict) else None
        where = ".".join(path)
        if node is None:
            if required:
                self.errors.append(f"missing required section '{where}'")
                return {}  # keep walking so each required key is reported too
            return None
        if not isinstance(node, dict):
            self.errors.append(f"'{where}' must be a mapping")
            return None
        self.unknown(node, keys, where)
        return node

    def unknown(self, node, keys, where):
        if not self.strict:
            return
        for k in node:
            if k not in keys:
                self.errors.append(f"unknown key '{where}.{k}'" if where else f"unknown key '{k}'")

    def value(self, node, key, kind, where, required=True, default=None):
        if node is None:
            return default
        if key not in node or node[key] is None:
            if required:
                self.errors.append(f"missing required key '{where}.{key}'")
            return default
        try:
            return parse_quantity(node[key], kind)
        except ValueError as exc:
            self.errors.append(f"'{where}.{key}': {exc}")
            return default

    def choice(self, node, key, options, where, default):
        if node is None or key not in node:
            return default
        val = node[key]
        if val not in options:
            self.errors.append(f"'{where}.{key}' must be one of {list(options)}, got {val!r}")
            return default
        return val

    def build(self, factory, *args, **kwargs):
        try:
            return factory(*args, **kwargs)
        except ConfigError as exc:
            self.errors.extend(exc.errors)
            return None


def parse_config(text: str, strict: bool = True) -> Config:
    """Parse YAML text into a :class:`Config`; raises :class:`ConfigError` listing all problems."""
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"invalid YAML: {exc}"]) from None
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ConfigError(["configuration must be a mapping at top level"])
    return config_from_tree(tree, strict=strict)


def config_from_tree(tree: dict, strict: bool = True) -> Config:
    r = _Reader(strict)
    r.unknown(
        tree,
        {"schema_version", "platoon", "constraints", "camera", "envelope", "gains",
         "vehicles", "leader", "initial", "simulation", "output"},
        "",
    )
    version = tree.get("schema_version")
    if version is None:
        r.errors.append("missing required key 'schema_version'")
    elif version != SCHEMA_VERSION:
        r.errors.append(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    platoon = r.section(tree, ["platoon"], {"n_followers", "d_des"})
    n = r.value(platoon, "n_followers", None, "platoon")
    if n is not None and (n != int(n) or n < 1):
        r.errors.append(f"'platoon.n_followers' must be a positive integer, got {n!r}")
        n = None
    n = int(n) if n is not None else None
    d_des = r.value(platoon, "d_des", "length", "platoon")

    cons = r.section(tree, ["constraints"], {"d_col", "d_con", "beta_con"})
    d_col = r.value(cons, "d_col", "length", "constraints")
    d_con = r.value(cons, "d_con", "length", "constraints")
    beta_con = r.value(cons, "beta_con", "angle", "constraints")
    constraints = None
    if None not in (d_col, d_con, beta_con):
        constraints = r.build(Constraints, d_col, d_con, beta_con)

    cam = r.section(tree, ["camera"], {"range", "aov"})
    cam_range = r.value(cam, "range", "length", "camera")
    aov = r.value(cam, "aov", "angle", "camera")
    camera = None
    if None not in (cam_range, aov):
        camera = r.build(CameraModel, cam_range, aov)

    env = r.section(tree, ["envelope"], {"distance", "bearing", "soft_guard"})
    env_d = r.section(env or {}, ["envelope", "distance"], {"decay", "rho_inf"}) if env is not None else None
    env_b = r.section(env or {}, ["envelope", "bearing"], {"decay", "rho_inf"}) if env is not None else None
    l_d = r.value(env_d, "decay", "decay", "envelope.distance")
    rho_inf_d = r.value(env_d, "rho_inf", "length", "envelope.distance")
    l_b = r.value(env_b, "decay", "decay", "envelope.bearing")
    rho_inf_b = r.value(env_b, "rho_inf", "angle", "envelope.bearing")
    soft_guard = r.value(env, "soft_guard", None, "envelope", required=False, default=0.0)

    gains = r.section(tree, ["gains"], {"k_d", "k_beta"})
    k_d = r.value(gains, "k_d", None, "gains")
    k_beta = r.value(gains, "k_beta", None, "gains")

    vehicles = ()
    if tree.get("vehicles") is not None:
        raw = tree["vehicles"]
        if not isinstance(raw, list):
            r.errors.append("'vehicles' must be a list of per-follower overrides")
        else:
            if n is not None and len(raw) != n:
                r.errors.append(f"'vehicles' has {len(raw)} entries for {n} followers")
            out = []
            for j, item in enumerate(raw):
                where = f"vehicles[{j}]"
                if not isinstance(item, dict):
                    r.errors.append(f"'{where}' must be a mapping")
                    continue
                r.unknown(item, {"k_d", "k_beta", "d_des"}, where)
                out.append(
                    VehicleOverride(
                        r.value(item, "k_d", None, where, required=False),
                        r.value(item, "k_beta", None, where, required=False),
                        r.value(item, "d_des", "length", where, required=False),
                    )
                )
            vehicles = tuple(out)

    leader_node = r.section(tree, ["leader"], {"pose", "trajectory"})
    leader_pose = Pose(0.0, 0.0, 0.0)
    leader = None
    if leader_node is not None:
        pose_node = r.section(leader_node, ["leader", "pose"], {"x", "y", "phi"}, required=False)
        if pose_node is not None:
            leader_pose = Pose(
                r.value(pose_node, "x", "length", "leader.pose", default=0.0),
                r.value(pose_node, "y", "length", "leader.pose", default=0.0),
                r.value(pose_node, "phi", "angle", "leader.pose", default=0.0),
            )
        leader = _parse_trajectory(r, leader_node)

    initial_mode, initial = _parse_initial(r, tree, n)

    sim = r.section(
        tree,
        ["simulation"],
        {"dt", "duration", "integrator", "breach_policy", "steady_state_window", "saturation"},
    )
    dt = r.value(sim, "dt", "time", "simulation")
    duration = r.value(sim, "duration", "time", "simulation")
    if dt is not None and not dt > 0:
        r.errors.append(f"'simulation.dt' must be positive, got {dt!r}")
    if dt is not None and duration is not None and dt > 0 and duration < 0:
        r.errors.append(f"'simulation.duration' must be non-negative, got {duration!r}")
    integrator = r.choice(sim, "integrator", ("rk4", "euler"), "simulation", "rk4")
    policy = r.choice(sim, "breach_policy", ("halt", "record"), "simulation", "halt")
    window = r.value(sim, "steady_state_window", None, "simulation", required=False, default=0.25)
    if not 0 < window <= 1:
        r.errors.append(f"'simulation.steady_state_window' must be in (0, 1], got {window!r}")
    saturation = None
    sat = r.section(sim or {}, ["simulation", "saturation"], {"v_max", "omega_max", "mode"}, required=False)
    if sat is not None:
        saturation = (
            r.value(sat, "v_max", "speed", "simulation.saturation", required=False, default=math.inf),
            r.value(sat, "omega_max", "rate", "simulation.saturation", required=False, default=math.inf),
            r.choice(sat, "mode", ("warn", "clamp"), "simulation.saturation", "warn"),
        )

    output = OutputOptions()
    out = r.section(tree, ["output"], {"trace", "report", "plot_data", "figures", "decimation"}, required=False)
    if out is not None:
        dec = r.value(out, "decimation", None, "output", required=False, default=1.0)
        if dec != int(dec) or dec < 1:
            r.errors.append(f"'output.decimation' must be an integer >= 1, got {dec!r}")
            dec = 1
        figures = out.get("figures", False)
        if not isinstance(figures, bool):
            r.errors.append("'output.figures' must be true or false")
            figures = False
        output = OutputOptions(
            trace=str(out.get("trace", "trace.csv")),
            report=str(out.get("report", "report.json")),
            plot_data=None if out.get("plot_data", "plots") is None else str(out.get("plot_data", "plots")),
            figures=figures,
            decimation=int(dec),
        )

    if r.errors:
        raise ConfigError(r.errors)
    return Config(
        n_followers=n,
        d_des=d_des,
        constraints=constraints,
        camera=camera,
        l_d=l_d,
        rho_inf_d=rho_inf_d,
        l_beta=l_b,
        rho_inf_beta=rho_inf_b,
        k_d=k_d,
        k_beta=k_beta,
        leader=leader,
        dt=dt,
        duration=duration,
        initial_mode=initial_mode,
        initial=initial,
        leader_pose=leader_pose,
        soft_guard=soft_guard,
        vehicles=vehicles,
        integrator=integrator,
        breach_policy=policy,
        steady_state_window=window,
        saturation=saturation,
        output=output,
        schema_version=version,
    )


def _parse_trajectory(r: _Reader, leader_node: dict):
    traj = leader_node.get("trajectory")
    if not isinstance(traj, dict):
        r.errors.append("missing required section 'leader.trajectory'")
        return None
    kind = traj.get("kind")
    where = "leader.trajectory"
    if kind == "constant":
        r.unknown(traj, {"kind", "v0", "omega0"}, where)
        return r.build(
            LeaderTrajectory,
            "constant",
            v0=r.value(traj, "v0", "speed", where, default=0.0),
            omega0=r.value(traj, "omega0", "rate", where, required=False, default=0.0),
        )
    if kind == "sinusoidal":
        r.unknown(traj, {"kind", "v0", "amplitude", "frequency"}, where)
        return r.build(
            LeaderTrajectory,
            "sinusoidal",
            v0=r.value(traj, "v0", "speed", where, default=0.0),
            amplitude=r.value(traj, "amplitude", "rate", where, default=0.0),
            frequency=r.value(traj, "frequency", "rate", where, default=0.0),
        )
    if kind == "schedule":
        r.unknown(traj, {"kind", "breakpoints"}, where)
        raw = traj.get("breakpoints")
        if not isinstance(raw, list) or not raw:
            r.errors.append(f"'{where}.breakpoints' must be a non-empty list")
            return None
        bps = []
        for j, bp in enumerate(raw):
            w = f"{where}.breakpoints[{j}]"
            if not isinstance(bp, dict):
                r.errors.append(f"'{w}' must be a mapping with t, v, omega")
                continue
            r.unknown(bp, {"t", "v", "omega"}, w)
            bps.append(
                (
                    r.value(bp, "t", "time", w, default=0.0),
                    r.value(bp, "v", "speed", w, default=0.0),
                    r.value(bp, "omega", "rate", w, required=False, default=0.0),
                )
            )
        return r.build(LeaderTrajectory, "schedule", breakpoints=tuple(bps))
    r.errors.append(f"'{where}.kind' must be one of constant, sinusoidal, schedule; got {kind!r}")
    return None


def _parse_initial(r: _Reader, tree: dict, n):
    node = r.section(tree, ["initial"], {"relative", "absolute"})
    if node is None:
        return "relative", ()
    if ("relative" in node) == ("absolute" in node):
        r.errors.append("'initial' needs exactly one of 'relative' or 'absolute'")
        return "relative", ()
    mode = "relative" if "relative" in node else "absolute"
    raw = node[mode]
    if isinstance(raw, dict) and mode == "relative":
        raw = [raw] * (n or 0)
    if not isinstance(raw, list):
        r.errors.append(f"'initial.{mode}' must be a list (or one mapping to broadcast, relative only)")
        return mode, ()
    if n is not None and len(raw) != n:
        r.errors.append(f"'initial.{mode}' has {len(raw)} entries for {n} followers")
    items = []
    for j, item in enumerate(raw):
        where = f"initial.{mode}[{j}]"
        if not isinstance(item, dict):
            r.errors.append(f"'{where}' must be a mapping")
            continue
        if mode == "relative":
            r.unknown(item, {"d", "beta", "gamma"}, where)
            items.append(
                (
                    r.value(item, "d", "length", where),
                    r.value(item, "beta", "angle", where),
                    r.value(item, "gamma", "angle", where, required=False, default=0.0),
                )
            )
        else:
            r.unknown(item, {"x", "y", "phi"}, where)
            x = r.value(item, "x", "length", where)
            y = r.value(item, "y", "length", where)
            phi = r.value(item, "phi", "angle", where)
            if None not in (x, y, phi):
                items.append(Pose(x, y, phi))
    return mode, tuple(items)


def config_to_tree(cfg: Config) -> dict:
    """Inverse of :func:`config_from_tree`, with every quantity in canonical units."""
    q = format_quantity
    tree: dict[str, Any] = {
        "schema_version": cfg.schema_version,
        "platoon": {"n_followers": cfg.n_followers, "d_des": q(cfg.d_des, "length")},
        "constraints": {
            "d_col": q(cfg.constraints.d_col, "length"),
            "d_con": q(cfg.constraints.d_con, "length"),
            "beta_con": q(cfg.constraints.beta_con, "angle"),
        },
        "camera": {"range": q(cfg.camera.range, "length"), "aov": q(cfg.camera.aov, "angle")},
        "envelope": {
            "distance": {"decay": q(cfg.l_d, "decay"), "rho_inf": q(cfg.rho_inf_d, "length")},
            "bearing": {"decay": q(cfg.l_beta, "decay"), "rho_inf": q(cfg.rho_inf_beta, "angle")},
            "soft_guard": cfg.soft_guard,
        },
        "gains": {"k_d": cfg.k_d, "k_beta": cfg.k_beta},
    }
    if cfg.vehicles:
        tree["vehicles"] = [
            {
                k: (q(getattr(vo, k), "length") if k == "d_des" else getattr(vo, k))
                for k in ("k_d", "k_beta", "d_des")
                if getattr(vo, k) is not None
            }
            for vo in cfg.vehicles
        ]
    lt = cfg.leader
    if lt.kind == "constant":
        traj = {"kind": "constant", "v0": q(lt.v0, "speed"), "omega0": q(lt.omega0, "rate")}
    elif lt.kind == "sinusoidal":
        traj = {
            "kind": "sinusoidal",
            "v0": q(lt.v0, "speed"),
            "amplitude": q(lt.amplitude, "rate"),
            "frequency": q(lt.frequency, "rate"),
        }
    else:
        traj = {
            "kind": "schedule",
            "breakpoints": [
                {"t": q(t, "time"), "v": q(v, "speed"), "omega": q(w, "rate")}
                for t, v, w in lt.breakpoints
            ],
        }
    lp = cfg.leader_pose
    tree["leader"] = {
        "pose": {"x": q(lp.x, "length"), "y": q(lp.y, "length"), "phi": q(lp.phi, "angle")},
        "trajectory": traj,
    }
    if cfg.initial_mode == "relative":
        tree["initial"] = {
            "relative": [
                {"d": q(d, "length"), "beta": q(b, "angle"), "gamma": q(g, "angle")}
                for d, b, g in cfg.initial
            ]
        }
    else:
        tree["initial"] = {
            "absolute": [
                {"x": q(p.x, "length"), "y": q(p.y, "length"), "phi": q(p.phi, "angle")}
                for p in cfg.initial
            ]
        }
    sim = {
        "dt": q(cfg.dt, "time"),
        "duration": q(cfg.duration, "time"),
        "integrator": cfg.integrator,
        "breach_policy": cfg.breach_policy,
        "steady_state_window": cfg.steady_state_window,
    }
    if cfg.saturation is not None:
        v_max, w_max, mode = cfg.saturation
        sim["saturation"] = {"mode": mode}
        if math.isfinite(v_max):
            sim["saturation"]["v_max"] = q(v_max, "speed")
        if math.isfinite(w_max):
            sim["saturation"]["omega_max"] = q(w_max, "rate")
    tree["simulation"] = sim
    o = cfg.output
    tree["output"] = {
        "trace": o.trace,
        "report": o.report,
        "plot_data": o.plot_data,
        "figures": o.figures,
        "decimation": o.decimation,
    }
    return tree


def serialize_config(cfg: Config) -> str:
    return yaml.safe_dump(config_to_tree(cfg), sort_keys=False)


def set_path(tree: dict, path: str, value) -> None:
    """Replace the numeric leaf at dotted ``path`` (list indices allowed, e.g. ``vehicles.0.k_d``)."""
    keys = path.split(".")
    node: Any = tree
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.get(k)
        if node is None:
            raise ConfigError([f"config path '{path}' does not exist"])
    last = keys[-1]
    try:
        current = node[int(last)] if isinstance(node, list) else node[last]
    except (KeyError, IndexError, ValueError, TypeError):
        raise ConfigError([f"config path '{path}' does not exist"]) from None
    if isinstance(current, bool) or not (
        isinstance(current, (int, float)) or (isinstance(current, str) and _QUANTITY.match(current))
    ):
        raise ConfigError([f"config path '{path}' is not numeric (holds {current!r})"])
    if isinstance(value, (int, float)) and isinstance(current, str):
        unit = _QUANTITY.match(current).group(2)
        kind = next((k for k, units in UNITS.items() if unit in units), None) if unit else None
        if kind:
            value = f"{value!r} {CANONICAL[kind]}"  # bare numbers are SI in the leaf's dimension
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def parse_axis_values(text: str) -> list:
    """Split a comma-separated sweep value list, checking each item is numeric."""
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError(["sweep axis has an empty value list"])
    out = []
    for s in items:
        m = _QUANTITY.match(s)
        if not m:
            raise ConfigError([f"sweep value {s!r} is not numeric"])
        out.append(float(m.group(1)) if not m.group(2) else s)
    return out


def reference_config_text(name: str = "reference.yaml") -> str:
    """Text of a configuration bundled with the package."""
    return resources.files("platoon_ppc").joinpath("data", name).read_text()


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read())
