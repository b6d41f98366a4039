"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid configuration. ``errors`` holds every problem found, not just the first."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InitialConditionError(ConfigError):
    """Initial platoon state violates the collision/connectivity region.

    ``violations`` is a list of dicts with keys vehicle, channel, value, lower, upper.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msgs = [
            f"vehicle {v['vehicle']}: {v['channel']} = {v['value']!r} not in "
            f"({v['lower']!r}, {v['upper']!r})"
            for v in self.violations
        ]
        super().__init__(msgs)


class DegenerateGeometryError(ValueError):
    """Two vehicles share the same position, so bearing is undefined."""


class NumericError(ValueError):
    """Non-finite input where a finite number is required."""


class EnvelopeBreach(ArithmeticError):
    """A normalized error reached or left its admissible interval (-m_lower, m_upper)."""

    def __init__(self, xi, m_lower, m_upper, t=None, vehicle=None, channel=None):
        self.xi = xi
        self.m_lower = m_lower
        self.m_upper = m_upper
        self.t = t
        self.vehicle = vehicle
        self.channel = channel
        where = ""
        if vehicle is not None:
            where = f"vehicle {vehicle} "
        if channel is not None:
            where += f"[{channel}] "
        when = f" at t={t!r}" if t is not None else ""
        super().__init__(
            f"{where}envelope breach: xi={xi!r} outside ({-m_lower!r}, {m_upper!r}){when}"
        )

    def with_context(self, t=None, vehicle=None, channel=None):
        return EnvelopeBreach(
            self.xi,
            self.m_lower,
            self.m_upper,
            t=self.t if t is None else t,
            vehicle=self.vehicle if vehicle is None else vehicle,
            channel=self.channel if channel is None else channel,
        )
