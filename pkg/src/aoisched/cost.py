"""Age-cost functions: non-negative, non-decreasing maps from integer age to cost.

Six parametric variants are supported. All of them are immutable after
construction and evaluate elementwise over numpy arrays, so callers may share
them freely across threads.

    linear(w)            f(x) = w * x
    power(w, e)          f(x) = w * x**e
    exponential(b, w)    f(x) = w * b**x          (b > 1)
    logarithmic(w, b)    f(x) = w * log_b(x)      (natural log by default)
    indicator(thr, w)    f(x) = w * 1{x >= thr}
    table(values)        tabulated, constant extension past the last entry

Evaluations that would exceed ``OVERFLOW_LIMIT`` raise :class:`CostRangeError`
instead of returning infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CostRangeError, DomainError

OVERFLOW_LIMIT = 1e300

KINDS = ("linear", "power", "exponential", "logarithmic", "indicator", "table")


@dataclass(frozen=True)
class CostFunction:
    """One age-cost function, tagged by variant kind.

    Use the module-level factories (:func:`linear`, :func:`power`, ...) rather
    than constructing instances directly.
    """

    kind: str
    weight: float = 1.0
    exponent: float = 1.0
    base: float = math.e
    threshold: int = 1
    values: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown cost-function kind {self.kind!r}")
        if self.kind != "table" and self.weight <= 0:
            raise DomainError("weight must be positive")
        if self.kind == "power" and self.exponent <= 0:
            raise DomainError("exponent must be positive")
        if self.kind in ("exponential", "logarithmic") and self.base <= 1:
            raise DomainError("base must exceed 1")
        if self.kind == "indicator" and (self.threshold < 1 or int(self.threshold) != self.threshold):
            raise DomainError("indicator threshold must be a positive integer")
        if self.kind == "table":
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise DomainError("table needs at least one value")
            if any(v < 0 for v in vals):
                raise DomainError("table values must be non-negative")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise DomainError("table values must be non-decreasing")
            object.__setattr__(self, "values", vals)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, age):
        return evaluate(self, age)

    @property
    def is_bounded_function(self) -> bool:
        """True when f has a finite supremum (indicator and table variants)."""
        return self.kind in ("indicator", "table")

    @property
    def plateau_start(self) -> int:
        """Smallest age from which f is constant; only for bounded variants."""
        if self.kind == "indicator":
            return int(self.threshold)
        if self.kind == "table":
            vals = self.values
            k = len(vals)
            while k > 1 and vals[k - 2] == vals[-1]:
                k -= 1
            return k
        raise DomainError(f"{self.kind} cost has no plateau")

    def growth_ratio_bound(self, x: int) -> float:
        """Upper bound on f(y+1)/f(y) over all y >= x (used for series tails).

        Only meaningful where f(x) > 0; callers must start tail bounds past
        any zero-valued prefix (log at age 1, indicator below threshold,
        leading zeros of a table).
        """
        if x < 1:
            raise DomainError("x must be >= 1")
        k = self.kind
        if k == "linear":
            return (x + 1) / x
        if k == "power":
            return ((x + 1) / x) ** self.exponent
        if k == "exponential":
            return self.base
        if k == "logarithmic":
            if x < 2:
                raise DomainError("log growth bound needs x >= 2")
            return math.log(x + 1) / math.log(x)
        # indicator / table: constant once on the plateau
        if x >= self.plateau_start:
            return 1.0
        raise DomainError(f"growth bound of {k} undefined before its plateau")

    # -- config records -----------------------------------------------------

    def to_config(self) -> dict:
        """Tagged record, e.g. {"kind": "linear", "weight": 13}."""
        k = self.kind
        if k == "linear":
            return {"kind": k, "weight": self.weight}
        if k == "power":
            return {"kind": k, "weight": self.weight, "exponent": self.exponent}
        if k == "exponential":
            return {"kind": k, "base": self.base, "weight": self.weight}
        if k == "logarithmic":
            base = "e" if self.base == math.e else self.base
            return {"kind": k, "weight": self.weight, "base": base}
        if k == "indicator":
            return {"kind": k, "threshold": self.threshold, "weight": self.weight}
        return {"kind": k, "values": list(self.values)}


def linear(weight: float) -> CostFunction:
    return CostFunction("linear", weight=float(weight))


def power(weight: float, exponent: float) -> CostFunction:
    return CostFunction("power", weight=float(weight), exponent=float(exponent))


def exponential(base: float, weight: float = 1.0) -> CostFunction:
    return CostFunction("exponential", base=float(base), weight=float(weight))


def logarithmic(weight: float, base: float = math.e) -> CostFunction:
    return CostFunction("logarithmic", weight=float(weight), base=float(base))


def indicator(threshold: int, weight: float = 1.0) -> CostFunction:
    return CostFunction("indicator", threshold=int(threshold), weight=float(weight))


def table(values) -> CostFunction:
    return CostFunction("table", values=tuple(values))


_FIELDS = {
    "linear": (("weight",), ()),
    "power": (("weight", "exponent"), ()),
    "exponential": (("base",), ("weight",)),
    "logarithmic": (("weight",), ("base",)),
    "indicator": (("threshold",), ("weight",)),
    "table": (("values",), ()),
}


def from_config(record: dict) -> CostFunction:
    """Build a cost function from its tagged config record."""
    rec = dict(record)
    kind = rec.pop("kind", None)
    if kind not in KINDS:
        raise DomainError(f"cost record needs a valid 'kind', got {kind!r}")
    required, optional = _FIELDS[kind]
    missing = [name for name in required if name not in rec]
    if missing:
        raise DomainError(f"cost record for {kind!r} is missing fields {missing}")
    unknown = sorted(set(rec) - set(required) - set(optional))
    if unknown:
        raise DomainError(f"cost record for {kind!r} has unknown fields {unknown}")
    if kind == "logarithmic" and rec.get("base") in ("e", "E"):
        rec["base"] = math.e
    builders = {
        "linear": lambda: linear(rec["weight"]),
        "power": lambda: power(rec["weight"], rec["exponent"]),
        "exponential": lambda: exponential(rec["base"], rec.get("weight", 1.0)),
        "logarithmic": lambda: logarithmic(rec["weight"], rec.get("base", math.e)),
        "indicator": lambda: indicator(rec["threshold"], rec.get("weight", 1.0)),
        "table": lambda: table(rec["values"]),
    }
    return builders[kind]()


# -- operations -------------------------------------------------------------


def _check_ages(age):
    ages = np.asarray(age)
    if ages.size == 0:
        return ages.astype(float)
    if not np.issubdtype(ages.dtype, np.number):
        raise DomainError(f"age must be numeric, got {ages.dtype}")
    if np.any(ages < 1) or np.any(ages != np.floor(ages)):
        raise DomainError("age must be a positive integer (>= 1)")
    return ages.astype(float)


def evaluate(f: CostFunction, age):
    """f(age); elementwise over arrays. Raises DomainError for age < 1 and
    CostRangeError when the result would exceed OVERFLOW_LIMIT."""
    x = _check_ages(age)
    scalar = np.isscalar(age) or (isinstance(age, np.ndarray) and age.ndim == 0)
    k = f.kind
    if k == "linear":
        out = f.weight * x
    elif k == "power":
        out = f.weight * x ** f.exponent
    elif k == "exponential":
        # cap the age argument before exponentiating so no inf is produced
        cap = (math.log(OVERFLOW_LIMIT) - math.log(f.weight)) / math.log(f.base)
        if np.any(x > cap):
            bad = int(np.min(np.asarray(x)[np.asarray(x) > cap]))
            raise CostRangeError(
                f"exponential cost exceeds {OVERFLOW_LIMIT:g} from age {bad}"
            )
        out = f.weight * f.base ** x
    elif k == "logarithmic":
        out = f.weight * np.log(x) / math.log(f.base)
    elif k == "indicator":
        out = f.weight * (x >= f.threshold)
    else:  # table
        vals = np.asarray(f.values)
        idx = np.minimum(x.astype(np.int64) - 1, len(vals) - 1)
        out = vals[idx]
    out = np.asarray(out, dtype=float)
    if np.any(out > OVERFLOW_LIMIT):
        bad = int(np.min(x[out > OVERFLOW_LIMIT]))
        raise CostRangeError(f"{k} cost exceeds {OVERFLOW_LIMIT:g} at age {bad}")
    return float(out) if scalar else out


def prefix_sum(f: CostFunction, h: int) -> float:
    """Sum of f(1..h), accumulated with a compensated (exact fsum) sum."""
    if h < 1 or int(h) != h:
        raise DomainError("h must be a positive integer")
    return math.fsum(evaluate(f, np.arange(1, int(h) + 1)))


def prefix_array(f: CostFunction, h: int) -> np.ndarray:
    """Cumulative sums [f(1), f(1)+f(2), ..., sum f(1..h)]."""
    if h < 1:
        raise DomainError("h must be a positive integer")
    return np.cumsum(evaluate(f, np.arange(1, int(h) + 1)))


def max_representable_age(f: CostFunction) -> Optional[int]:
    """Largest age whose cost stays within OVERFLOW_LIMIT (None: no limit
    below astronomically large ages)."""
    if f.kind == "exponential":
        return int((math.log(OVERFLOW_LIMIT) - math.log(f.weight)) / math.log(f.base))
    if f.kind == "power":
        limit = (OVERFLOW_LIMIT / f.weight) ** (1.0 / f.exponent)
        return int(limit) if limit < 2**62 else None
    if f.kind == "linear":
        limit = OVERFLOW_LIMIT / f.weight
        return int(limit) if limit < 2**62 else None
    return None


@dataclass(frozen=True)
class BoundedCost:
    """Outcome of the bounded-cost admissibility test with its diagnostic."""

    bounded: bool
    ratio: float
    reason: str

    def __bool__(self):
        return self.bounded


def is_bounded_cost(f: CostFunction, p: float) -> BoundedCost:
    """Decide whether sum_h f(h) (1-p)^h is finite, in closed form.

    Every sub-exponential variant converges for any p > 0. The exponential
    variant converges iff base * (1-p) < 1. The governing geometric ratio is
    reported as the diagnostic.
    """
    if not 0 < p <= 1:
        raise DomainError(f"success probability must be in (0, 1], got {p}")
    q = 1.0 - p
    if f.kind == "exponential":
        ratio = f.base * q
        if ratio < 1:
            return BoundedCost(True, ratio, f"geometric ratio base*(1-p) = {ratio:.6g} < 1")
        return BoundedCost(False, ratio, f"geometric ratio base*(1-p) = {ratio:.6g} >= 1")
    return BoundedCost(True, q, f"sub-exponential cost, geometric factor (1-p) = {q:.6g} < 1")
