import math

import click

INFINITY_TOKENS = {"inf", "+inf", "infinity", "+infinity"}


def parse_energy(raw) -> float:
    """Energies are dimensionless (beta * E); the token 'inf' means the W -> infinity limit."""
    if isinstance(raw, str):
        token = raw.strip().lower()
        if token in INFINITY_TOKENS:
            return math.inf
        try:
            raw = float(token)
        except ValueError:
            raise ValueError(f"Invalid energy value {raw!r}")
    value = float(raw)
    if math.isnan(value) or value == -math.inf:
        raise ValueError(f"Invalid energy value {raw!r}")
    return value


def format_energy(value: float):
    return "inf" if math.isinf(value) else value


def is_probability(value: float) -> bool:
    return math.isfinite(value) and 0.0 <= value <= 1.0


def validate_instance_params(delta: float, w: float, q: float) -> str | None:
    if not math.isfinite(delta):
        return "delta must be finite"
    if delta < 0:
        return "delta must be non-negative"
    if w < delta:
        return "w must be greater than or equal to delta"
    if not is_probability(q):
        return "q must lie in [0, 1]"
    return None


class EnergyType(click.ParamType):
    name = "energy"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            return parse_energy(value)
        except ValueError as exc:
            self.fail(str(exc), param, ctx)


class ProbabilityListType(click.ParamType):
    name = "q-list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return list(value)
        try:
            values = [float(item) for item in value.split(",") if item.strip()]
        except ValueError:
            self.fail(f"Invalid probability list {value!r}", param, ctx)
        if not values:
            self.fail("At least one q value is required", param, ctx)
        for item in values:
            if not is_probability(item):
                self.fail(f"q value {item} is outside [0, 1]", param, ctx)
        return values


ENERGY = EnergyType()
PROBABILITY_LIST = ProbabilityListType()
