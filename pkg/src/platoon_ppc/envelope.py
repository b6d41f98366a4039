"""Performance envelopes: decaying bounds, normalization and the log barrier transform.

An error channel e(t) is kept inside ``-m_lower * rho(t) < e < m_upper * rho(t)``
where ``rho`` decays exponentially from 1 to ``rho_inf / max(m_lower, m_upper)``.
Dividing by ``rho`` gives the normalized error ``xi`` on the fixed interval
``(-m_lower, m_upper)``; :func:`transform` maps that interval onto the real line.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import ConfigError, EnvelopeBreach
from .geometry import Constraints

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Envelope:
    """Asymmetric bounds plus exponential performance function.

    ``rho_inf`` is in raw error units (metres or radians); the dimensionless
    floor of ``rho`` is ``rho_inf / max(m_lower, m_upper)``.
    """

    m_lower: float
    m_upper: float
    l: float
    rho_inf: float
    floor: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        errors = []
        for name in ("m_lower", "m_upper", "l", "rho_inf"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                errors.append(f"envelope {name} must be positive and finite, got {val!r}")
        if not errors and not self.rho_inf < max(self.m_lower, self.m_upper):
            errors.append(
                f"rho_inf={self.rho_inf!r} must be below max(m_lower, m_upper)="
                f"{max(self.m_lower, self.m_upper)!r}"
            )
        if errors:
            raise ConfigError(errors)
        # dimensionless steady-state level of rho
        object.__setattr__(self, "floor", self.rho_inf / max(self.m_lower, self.m_upper))

    def bounds(self, t: float) -> tuple[float, float]:
        """Absolute error bounds (lower, upper) at time t."""
        r = rho(self, t)
        return -self.m_lower * r, self.m_upper * r


def derive_bounds(d_des: float, c: Constraints) -> tuple[float, float, float, float]:
    """(m_lower_d, m_upper_d, m_lower_beta, m_upper_beta) from the collision/connectivity limits."""
    if not c.d_col < d_des < c.d_con:
        raise ConfigError(
            f"desired distance {d_des!r} must lie strictly between d_col={c.d_col!r} "
            f"and d_con={c.d_con!r}"
        )
    return d_des - c.d_col, c.d_con - d_des, c.beta_con, c.beta_con


def rho(env: Envelope, t: float) -> float:
    if t < 0:
        raise ValueError(f"performance function undefined for negative time {t!r}")
    # written around expm1 so that rho(0) is exactly 1
    return 1.0 + (1.0 - env.floor) * math.expm1(-env.l * t)


def rho_dot(env: Envelope, t: float) -> float:
    return -env.l * (1.0 - env.floor) * math.exp(-env.l * t)


def normalize(e: float, rho_t: float) -> float:
    if not rho_t > 0:
        raise ValueError(f"performance function value must be positive, got {rho_t!r}")
    return e / rho_t


def inside(xi: float, env: Envelope) -> bool:
    return -env.m_lower < xi < env.m_upper


def _guard(xi: float, env: Envelope, soft_guard: float) -> float:
    if inside(xi, env):
        return xi
    if soft_guard > 0:
        if env.m_upper <= xi <= env.m_upper + soft_guard:
            log.warning("xi=%r within soft guard of upper bound %r; clamped", xi, env.m_upper)
            return env.m_upper - soft_guard
        if -env.m_lower - soft_guard <= xi <= -env.m_lower:
            log.warning("xi=%r within soft guard of lower bound %r; clamped", xi, -env.m_lower)
            return -env.m_lower + soft_guard
    raise EnvelopeBreach(xi, env.m_lower, env.m_upper)


def transform(xi: float, env: Envelope, soft_guard: float = 0.0) -> float:
    """eps = ln((1 + xi/m_lower) / (1 - xi/m_upper)).

    Raises :class:`EnvelopeBreach` on or outside the boundary. A positive
    ``soft_guard`` clamps breaches no further than that past the boundary
    back inside and logs a warning instead.
    """
    xi = _guard(xi, env, soft_guard)
    return math.log1p(xi / env.m_lower) - math.log1p(-xi / env.m_upper)


def inverse_transform(eps: float, env: Envelope) -> float:
    """Inverse of :func:`transform`: xi = (e^eps - 1) / (e^eps / m_upper + 1 / m_lower)."""
    if eps > 700.0:
        return env.m_upper
    return math.expm1(eps) / (math.exp(eps) / env.m_upper + 1.0 / env.m_lower)


def modulation(xi: float, env: Envelope, soft_guard: float = 0.0) -> float:
    """d(eps)/d(xi), strictly positive on the open interval."""
    xi = _guard(xi, env, soft_guard)
    return (1.0 / env.m_lower + 1.0 / env.m_upper) / (
        (1.0 + xi / env.m_lower) * (1.0 - xi / env.m_upper)
    )


def check_envelope(e: float, env: Envelope, t: float) -> bool:
    """True iff -m_lower*rho(t) < e < m_upper*rho(t).

    Evaluated on the normalized error so it agrees exactly with the domain of
    :func:`transform`.
    """
    return inside(normalize(e, rho(env, t)), env)


def validate_initial(e0_d, e0_beta, envelopes) -> list[dict]:
    """Check every follower's initial errors against its envelopes at t=0.

    ``envelopes`` is a sequence of (env_d, env_beta) pairs, one per follower,
    indexed from vehicle 1. Returns one dict per violation (empty list if the
    platoon is admissible).
    """
    violations = []
    for i, (ed, eb, (env_d, env_b)) in enumerate(zip(e0_d, e0_beta, envelopes), start=1):
        for channel, e, env in (("distance", ed, env_d), ("bearing", eb, env_b)):
            if not check_envelope(e, env, 0.0):
                violations.append(
                    {
                        "vehicle": i,
                        "channel": channel,
                        "value": e,
                        "lower": -env.m_lower,
                        "upper": env.m_upper,
                    }
                )
    return violations
