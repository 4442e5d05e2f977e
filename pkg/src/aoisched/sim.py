"""Slotted-time simulation of scheduling policies.

Each run starts from the all-ones age vector. Every slot accrues the cost of
the pre-action ages, the policy picks one source, and that source's age
resets to 1 on a Bernoulli(p) success while every other age grows by one.
Ages are never truncated here (only the DP box truncates); an overflow guard
trips if any age passes 10^6.

Randomness is fully reproducible: run r of a simulation seeded with s draws
its channel uniforms from a counter-based Philox stream keyed by (s, r, 0)
and its policy uniforms, when the policy is randomized, from (s, r, 1).
Runs therefore commute: any worker partition of the runs produces
bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cost as costmod
from .cost import OVERFLOW_LIMIT
from .errors import CostRangeError, DomainError, NonCyclicError
from .policies import (
    FixedCycle,
    MaxAge,
    RoundRobin,
    StationaryRandomized,
    SystemSpec,
    Tabular,
    Whittle,
    decide,
    is_deterministic,
    time_period,
    whittle_index_table,
)

AGE_GUARD = 10**6


def _index_table_width(spec: SystemSpec, wanted: int) -> int:
    """Widest whittle table the cost functions can represent, capped at
    `wanted`. The index at age h needs f(h+1), hence the -1."""
    width = wanted
    for s in spec.sources:
        cap = costmod.max_representable_age(s.cost)
        if cap is not None:
            width = min(width, cap - 1)
    if width < 1:
        raise CostRangeError("cost functions overflow below age 2; no index table possible")
    return width


@dataclass(frozen=True)
class SimulationResult:
    """Monte Carlo estimate of the time-average cost of a policy."""

    mean_cost: float
    stderr: float
    runs: int
    horizon: int
    seed: int
    per_source_costs: tuple

    def __post_init__(self):
        object.__setattr__(self, "per_source_costs", tuple(float(c) for c in self.per_source_costs))


@dataclass(frozen=True)
class Cycle:
    """A repeating block of (age vector, action) pairs with its exact cost."""

    states: tuple
    actions: tuple
    average_cost: float

    def __post_init__(self):
        if len(self.states) != len(self.actions) or not self.states:
            raise DomainError("cycle needs equally many states and actions, at least one")
        object.__setattr__(self, "states", tuple(tuple(int(x) for x in s) for s in self.states))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    @property
    def length(self) -> int:
        return len(self.states)


def _channel_stream(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed & (2**64 - 1), spawn_key=(run, 0)))
    )


def _policy_stream(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed & (2**64 - 1), spawn_key=(run, 1)))
    )


def simulate(
    spec: SystemSpec,
    policy,
    horizon: int,
    runs: int = 1,
    seed: int = 0,
    workers: int = 1,
) -> SimulationResult:
    """Simulate `runs` independent episodes of `horizon` slots.

    Returns the mean and standard error (over runs) of the per-slot average
    cost, plus the per-source breakdown of the mean. Identical (seed, config)
    inputs give bit-identical results at any worker count.
    """
    if horizon < 1 or runs < 1:
        raise DomainError("horizon and runs must be positive")
    n = spec.n_sources
    needs_table = isinstance(policy, (Whittle, Tabular))
    table = (
        whittle_index_table(spec, _index_table_width(spec, horizon + 1))
        if needs_table
        else None
    )

    totals = np.empty(runs)
    per_src = np.empty((runs, n))
    chunks = _run_chunks(runs, workers)
    if len(chunks) == 1:
        lo, hi = chunks[0]
        totals[lo:hi], per_src[lo:hi] = _simulate_chunk(spec, policy, horizon, seed, lo, hi, table)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futs = {
                pool.submit(_simulate_chunk, spec, policy, horizon, seed, lo, hi, table): (lo, hi)
                for lo, hi in chunks
            }
            for fut, (lo, hi) in futs.items():
                totals[lo:hi], per_src[lo:hi] = fut.result()

    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return SimulationResult(
        mean_cost=mean,
        stderr=stderr,
        runs=runs,
        horizon=horizon,
        seed=seed,
        per_source_costs=tuple(per_src.mean(axis=0)),
    )


def _run_chunks(runs, workers):
    workers = max(1, min(int(workers), runs))
    bounds = np.linspace(0, runs, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def _simulate_chunk(spec, policy, horizon, seed, lo, hi, table):
    """Simulate runs [lo, hi) in lockstep; returns per-run (total, per-source)."""
    n = spec.n_sources
    r = hi - lo
    probs = spec.probabilities
    u_chan = np.stack([_channel_stream(seed, run).random(horizon) for run in range(lo, hi)])
    randomized = isinstance(policy, StationaryRandomized)
    if randomized:
        if len(policy.probs) != n:
            raise DomainError("randomized probs length must match source count")
        u_pol = np.stack([_policy_stream(seed, run).random(horizon) for run in range(lo, hi)])
        cum = np.cumsum(policy.probs)

    ages = np.ones((r, n), dtype=np.int64)
    acc = np.zeros((r, n))
    rows = np.arange(r)
    for t in range(horizon):
        for i, s in enumerate(spec.sources):
            try:
                acc[:, i] += s.cost(ages[:, i])
            except CostRangeError as e:
                raise CostRangeError(f"slot {t + 1}, source {i + 1}: {e}") from None
        try:
            acts = _decide_vector(policy, spec, ages, t, table, u_pol[:, t] if randomized else None, cum if randomized else None)
        except CostRangeError as e:
            raise CostRangeError(f"slot {t + 1}: {e}") from None
        success = u_chan[:, t] < probs[acts]
        ages += 1
        ages[rows[success], acts[success]] = 1
        if ages.max() > AGE_GUARD:
            raise CostRangeError(f"age exceeded {AGE_GUARD} at slot {t + 1}")
    return acc.sum(axis=1) / horizon, acc / horizon


def _decide_vector(policy, spec, ages, t, table, u_pol, cum):
    """Vectorized decisions for a block of runs at slot t."""
    r, n = ages.shape
    if isinstance(policy, Whittle):
        if ages.max() > table.shape[1]:
            # past the representable index range; scalar path raises properly
            return np.array([decide(policy, spec, ages[j], t) for j in range(r)])
        vals = table[np.arange(n)[None, :], ages - 1]
        return np.argmax(vals, axis=1)
    if isinstance(policy, MaxAge):
        return np.argmax(ages, axis=1)
    if isinstance(policy, RoundRobin):
        return np.full(r, policy.resolved_order(n)[t % n])
    if isinstance(policy, FixedCycle):
        a = policy.actions[t % len(policy.actions)]
        if not 0 <= a < n:
            raise DomainError(f"cycle action {a} out of range for {n} sources")
        return np.full(r, a)
    if isinstance(policy, StationaryRandomized):
        return np.minimum(np.searchsorted(cum, u_pol, side="right"), n - 1)
    if isinstance(policy, Tabular):
        return np.array([decide(policy, spec, ages[j], t, index_table=table) for j in range(r)])
    raise DomainError(f"unknown policy {policy!r}")


# -- exact evaluation of deterministic policies -------------------------------


def detect_cycle(spec: SystemSpec, policy, max_steps: int = 100_000) -> Cycle:
    """Iterate a deterministic policy on reliable channels from all-ones until
    a state recurs; returns the recurrent cycle and its exact average cost
    (the transient prefix does not contribute).

    Time-cyclic policies (round robin, fixed cycles) recur on (state, phase)
    pairs so their period is respected.
    """
    if not spec.reliable:
        raise DomainError("cycle detection requires all channels reliable")
    if not is_deterministic(policy):
        raise DomainError("cycle detection requires a deterministic policy")
    n = spec.n_sources
    period = time_period(policy, n)
    table = (
        whittle_index_table(spec, _index_table_width(spec, 4096))
        if isinstance(policy, (Whittle, Tabular))
        else None
    )

    seen = {}
    states, acts = [], []
    ages = (1,) * n
    for step in range(max_steps):
        key = (ages, step % period)
        if key in seen:
            start = seen[key]
            cyc_states = tuple(states[start:])
            cyc_acts = tuple(acts[start:])
            avg = math.fsum(spec.state_cost(s) for s in cyc_states) / len(cyc_states)
            return Cycle(states=cyc_states, actions=cyc_acts, average_cost=avg)
        seen[key] = step
        a = decide(policy, spec, ages, t=step, index_table=table)
        states.append(ages)
        acts.append(a)
        grown = [x + 1 for x in ages]
        grown[a] = 1
        ages = tuple(grown)
    raise NonCyclicError(f"no state recurrence within {max_steps} steps")


def per_slot_costs(spec: SystemSpec, policy, horizon: int) -> np.ndarray:
    """Exact pre-action cost of each slot for a deterministic policy on
    reliable channels (a single noiseless trajectory)."""
    if not spec.reliable:
        raise DomainError("exact slot costs require reliable channels")
    if not is_deterministic(policy):
        raise DomainError("exact slot costs require a deterministic policy")
    table = (
        whittle_index_table(spec, _index_table_width(spec, horizon + 1))
        if isinstance(policy, (Whittle, Tabular))
        else None
    )
    ages = (1,) * spec.n_sources
    out = np.empty(horizon)
    for t in range(horizon):
        out[t] = spec.state_cost(ages)
        a = decide(policy, spec, ages, t=t, index_table=table)
        grown = [x + 1 for x in ages]
        grown[a] = 1
        ages = tuple(grown)
    return out


# -- divergence probe ----------------------------------------------------------


def _saturating_cost(f, ages):
    """f(ages) capped at OVERFLOW_LIMIT instead of raising (probe use only)."""
    ages = np.asarray(ages)
    if f.kind == "exponential":
        cap = (math.log(OVERFLOW_LIMIT) - math.log(f.weight)) / math.log(f.base)
        return np.where(ages > cap, OVERFLOW_LIMIT, f.weight * f.base ** np.minimum(ages, cap))
    return np.minimum(costmod.evaluate(f, ages), OVERFLOW_LIMIT)


def divergence_probe(
    spec: SystemSpec,
    policy: StationaryRandomized,
    horizons,
    n_seeds: int = 100,
    seed: int = 0,
    aggregate: str = "median",
) -> np.ndarray:
    """Running-average cost of a stationary randomized policy at a sequence of
    increasing horizons, used to exhibit unbounded growth.

    aggregate="median" simulates n_seeds independent episodes and reports the
    per-horizon median of the running averages (costs saturate at 1e300, so
    growth past any finite bar is still visible). aggregate="expectation"
    returns the exact expected running averages in closed form from the
    geometric age distribution each source has under the policy.
    """
    if not isinstance(policy, StationaryRandomized):
        raise DomainError("the divergence probe takes a stationary randomized policy")
    horizons = [int(h) for h in horizons]
    if not horizons or any(b <= a for a, b in zip(horizons, horizons[1:])) or horizons[0] < 1:
        raise DomainError("horizons must be a strictly increasing positive sequence")
    if aggregate == "expectation":
        return _probe_expectation(spec, policy, horizons)
    if aggregate != "median":
        raise DomainError(f"unknown aggregate {aggregate!r}")

    n = spec.n_sources
    tmax = horizons[-1]
    probs = spec.probabilities
    cum = np.cumsum(policy.probs)
    u_chan = np.stack([_channel_stream(seed, run).random(tmax) for run in range(n_seeds)])
    u_pol = np.stack([_policy_stream(seed, run).random(tmax) for run in range(n_seeds)])
    ages = np.ones((n_seeds, n), dtype=np.int64)
    acc = np.zeros(n_seeds)
    rows = np.arange(n_seeds)
    marks = {}
    for t in range(tmax):
        for i, s in enumerate(spec.sources):
            acc += _saturating_cost(s.cost, ages[:, i])
        np.minimum(acc, OVERFLOW_LIMIT, out=acc)
        acts = np.minimum(np.searchsorted(cum, u_pol[:, t], side="right"), n - 1)
        success = u_chan[:, t] < probs[acts]
        ages += 1
        ages[rows[success], acts[success]] = 1
        if (t + 1) in horizons:
            marks[t + 1] = np.median(acc / (t + 1))
    return np.array([marks[h] for h in horizons])


def _probe_expectation(spec, policy, horizons):
    """Exact expected running averages: under an i.i.d. randomized policy each
    source is renewed independently each slot with probability q = prob * p,
    so its age at slot t is truncated-geometric."""
    tmax = horizons[-1]
    t = np.arange(1, tmax + 1)
    per_slot = np.zeros(tmax)
    for i, s in enumerate(spec.sources):
        q = policy.probs[i] * s.p
        if q >= 1.0:
            per_slot += s.cost(1)
            continue
        if q <= 0.0:
            raise DomainError(f"source {i + 1} is never scheduled; expectation diverges")
        ages = np.arange(1, tmax + 1)
        f_vals = _saturating_cost(s.cost, ages)
        geo = q * (1.0 - q) ** (ages - 1.0)
        interior = np.concatenate(([0.0], np.cumsum(f_vals * geo)[:-1]))
        boundary = f_vals * (1.0 - q) ** (t - 1.0)
        per_slot += interior + boundary
    np.minimum(per_slot, OVERFLOW_LIMIT, out=per_slot)
    running = np.minimum(np.cumsum(per_slot), OVERFLOW_LIMIT) / t
    return running[[h - 1 for h in horizons]]
