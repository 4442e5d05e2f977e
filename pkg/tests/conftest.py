import math

import numpy as np
import pytest

from aoisched import (
    Source,
    SystemSpec,
    exponential,
    indicator,
    linear,
    logarithmic,
    power,
    table,
)

# the twelve benchmark settings: sources, per-source p, reference (dp, whittle)
TABLE_SETTINGS = {
    "A1": (((linear(13), 1.0), (power(1, 2), 1.0)), (21.95, 21.95)),
    "A2": (((linear(13), 0.9), (power(1, 2), 0.5)), (36.12, 36.28)),
    "B1": (((power(1, 2), 1.0), (exponential(3), 1.0)), (8.48, 8.48)),
    "B2": (((power(1, 2), 0.65), (exponential(3), 0.8)), (23.16, 23.37)),
    "C1": (((power(0.5, 3), 1.0), (logarithmic(10), 1.0)), (5.69, 5.69)),
    "C2": (((power(0.5, 3), 0.55), (logarithmic(10), 0.75)), (21.54, 21.54)),
    "D1": (((power(1, 2), 1.0), (exponential(3), 1.0), (power(1, 4), 1.0)), (44.23, 44.23)),
    "D2": (((power(1, 2), 0.66), (exponential(3), 0.8), (power(1, 4), 0.75)), (161.19, 161.39)),
    "E1": (
        ((power(1, 3), 1.0), (exponential(2), 1.0), (linear(15), 1.0), (power(1, 2), 1.0)),
        (73.36, 73.36),
    ),
    "E2": (
        ((power(1, 3), 0.7), (exponential(2), 0.9), (linear(15), 0.67), (power(1, 2), 0.8)),
        (129.02, 130.94),
    ),
    "F1": (
        (
            (power(1, 3), 1.0),
            (exponential(math.e), 1.0),
            (linear(15), 1.0),
            (power(1, 2), 1.0),
        ),
        (87.66, 87.66),
    ),
    "F2": (
        (
            (power(1, 3), 0.8),
            (exponential(math.e), 0.85),
            (linear(15), 0.75),
            (power(1, 2), 0.66),
        ),
        (158.35, 159.81),
    ),
}
# F1's whittle reference differs from its dp reference
TABLE_SETTINGS["F1"] = (TABLE_SETTINGS["F1"][0], (87.66, 88.27))


def system_for(name: str) -> SystemSpec:
    sources, _ = TABLE_SETTINGS[name]
    return SystemSpec(tuple(Source(f, p) for f, p in sources))


def references_for(name: str):
    return TABLE_SETTINGS[name][1]


@pytest.fixture
def rng():
    return np.random.default_rng(20250117)


ALL_KINDS = ("linear", "power", "exponential", "logarithmic", "indicator", "table")


def random_cost(rng, kinds=ALL_KINDS, p_for_exponential=None):
    """One random cost function; exponential bases respect bounded cost for
    the given p when provided."""
    kind = kinds[rng.integers(len(kinds))]
    w = float(rng.uniform(0.5, 10.0))
    if kind == "linear":
        return linear(w)
    if kind == "power":
        return power(w, float(rng.uniform(1.0, 3.0)))
    if kind == "exponential":
        hi = 3.0
        if p_for_exponential is not None and p_for_exponential < 1.0:
            hi = min(hi, 0.95 / (1.0 - p_for_exponential))
        if hi <= 1.05:
            return linear(w)  # no admissible base; fall back
        return exponential(float(rng.uniform(1.05, hi)), float(rng.uniform(0.5, 3.0)))
    if kind == "logarithmic":
        return logarithmic(float(rng.uniform(1.0, 20.0)))
    if kind == "indicator":
        return indicator(int(rng.integers(1, 30)), w)
    vals = np.cumsum(rng.uniform(0.0, 2.0, size=int(rng.integers(1, 12))))
    return table(tuple(float(v) for v in vals))


def random_cost_and_p(rng, kinds=ALL_KINDS):
    p = float(rng.uniform(0.15, 1.0))
    if rng.random() < 0.25:
        p = 1.0
    return random_cost(rng, kinds=kinds, p_for_exponential=p), p
