"""Self-checking oracle suite used by ``platoon-ppc verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .envelope import Envelope, derive_bounds, inverse_transform, modulation, transform
from .geometry import Constraints
from .simulator import Scenario, error_dynamics_rhs, finite_difference_audit, run, vector_form_rhs

# reference constraint set and envelopes
REF_CONSTRAINTS = Constraints(0.0375, 2.0, math.radians(45.0))
REF_D_DES = 0.75


def reference_envelopes() -> dict[str, Envelope]:
    ml, mu, mbl, mbu = derive_bounds(REF_D_DES, REF_CONSTRAINTS)
    return {
        "distance": Envelope(ml, mu, 0.5, 0.0625),
        "bearing": Envelope(mbl, mbu, 0.5, math.radians(1.15)),
    }


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{flag}] {self.name}: {self.value:.3e} vs tol {self.tolerance:.1e}{extra}"


def envelope_grid(env: Envelope, points: int = 10001, coverage: float = 0.999) -> np.ndarray:
    """Evenly spaced normalized errors covering ``coverage`` of (-m_lower, m_upper), centred."""
    width = env.m_lower + env.m_upper
    margin = 0.5 * (1.0 - coverage) * width
    return np.linspace(-env.m_lower + margin, env.m_upper - margin, points)


def richardson_derivative(f, x: float, h: float) -> float:
    """Central difference with one Richardson step (fourth order)."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def check_derivative_identity(env: Envelope, name: str, tol: float = 1e-6) -> CheckResult:
    h = 1e-6 * (env.m_lower + env.m_upper)
    worst = 0.0
    worst_xi = 0.0
    for xi in envelope_grid(env).tolist():
        r = modulation(xi, env)
        fd = richardson_derivative(lambda z: transform(z, env), xi, h)
        rel = abs(r - fd) / r
        if rel > worst:
            worst, worst_xi = rel, xi
    return CheckResult(f"derivative identity [{name}]", worst, tol, worst <= tol, f"worst at xi={worst_xi:.6g}")


def check_round_trip(env: Envelope, name: str, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for xi in envelope_grid(env).tolist():
        back = inverse_transform(transform(xi, env), env)
        scale = abs(xi) if xi != 0 else 1.0
        worst = max(worst, abs(back - xi) / scale)
    return CheckResult(f"transform round trip [{name}]", worst, tol, worst <= tol)


def random_states(rng: np.random.Generator, n: int, constraints: Constraints = REF_CONSTRAINTS):
    d = rng.uniform(constraints.d_col, constraints.d_con, n)
    d[d <= constraints.d_col] = constraints.d_con / 2  # open interval
    beta = rng.uniform(-constraints.beta_con, constraints.beta_con, n)
    gamma = rng.uniform(-math.pi, math.pi, n)
    v = rng.uniform(-0.5, 0.5, n)
    omega = rng.uniform(-1.0, 1.0, n)
    v0 = rng.uniform(-0.5, 0.5)
    return d, beta, gamma, v, omega, v0


def check_vector_form(sizes=(1, 2, 3, 8), samples: int = 1000, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in sizes:
        for _ in range(samples):
            d, beta, gamma, v, omega, v0 = random_states(rng, n)
            ed, eb = error_dynamics_rhs(d.tolist(), beta.tolist(), gamma.tolist(), v.tolist(), omega.tolist(), v0)
            vd, vb = vector_form_rhs(d, beta, gamma, v, omega, v0)
            worst = max(worst, float(np.max(np.abs(vd - ed))), float(np.max(np.abs(vb - eb))))
    return CheckResult(
        f"stacked vs vector-form error dynamics (N in {list(sizes)}, {samples} states each)",
        worst, tol, worst <= tol,
    )


def check_audit(scenario: Scenario, tol: float = 5e-3, bearing_sign: float = 1.0) -> list[CheckResult]:
    res = run(scenario)
    audit = finite_difference_audit(res.trace, bearing_sign=bearing_sign)
    label = "" if bearing_sign > 0 else " (reversed bearing convention)"
    out = []
    for channel in ("distance", "bearing"):
        a = audit[channel]
        ok = a["max"] <= tol
        out.append(
            CheckResult(
                f"finite-difference audit [{channel}]{label}",
                a["max"], tol, ok, f"at t={a['t']}, vehicle {a.get('vehicle')}",
            )
        )
    return out


def dt_sweep(scenario: Scenario, dts=(4e-3, 2e-3, 1e-3), duration: float | None = None):
    """Audit residual maxima for each dt. Returns rows (dt, distance, bearing)."""
    rows = []
    for dt in dts:
        sc = replace(scenario, dt=dt, duration=scenario.duration if duration is None else duration)
        audit = finite_difference_audit(run(sc).trace)
        rows.append((dt, audit["distance"]["max"], audit["bearing"]["max"]))
    return rows


def check_convergence(rows, min_ratio: float = 3.0) -> list[CheckResult]:
    out = []
    for col, channel in ((1, "distance"), (2, "bearing")):
        ratios = [a[col] / b[col] for a, b in zip(rows, rows[1:])]
        worst = min(ratios)
        out.append(
            CheckResult(
                f"audit convergence order [{channel}] (residual ratio per dt halving)",
                worst, min_ratio, worst >= min_ratio, "ratios " + ", ".join(f"{r:.2f}" for r in ratios),
            )
        )
    return out


def run_checks(scenario: Scenario, bearing_sign: float = 1.0) -> list[CheckResult]:
    envs = reference_envelopes()
    results = []
    for name, env in envs.items():
        results.append(check_derivative_identity(env, name))
        results.append(check_round_trip(env, name))
    results.append(check_vector_form())
    results.extend(check_audit(scenario, bearing_sign=bearing_sign))
    return results
