"""Exact finite-horizon dynamic programming over a truncated age box.

States are age vectors with every coordinate clamped to [1, a_max]; a clamped
coordinate self-absorbs on non-service (min(A+1, a_max)). Backward induction
charges the stage cost on the pre-action state of each slot, so the solution
value is the exact expected total cost of the first `horizon` slots, and the
reported optimal average is that total divided by the horizon.

A forward pass under the computed policy measures how much probability mass
ever touches a clamped coordinate; that truncation report is the audit trail
for the box size. The backward pass is pure per-state arithmetic with argmin
ties resolved to the lowest source index, so results are bit-identical at any
parallelism degree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapacityError, DomainError, NonCyclicError
from .policies import SystemSpec, Tabular, validate_ages

TRUNCATION_WARN_LEVEL = 1e-6
DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes


def default_a_max(n_sources: int) -> int:
    """Box size defaults: generous for small N, tighter as the state count
    explodes; the truncation report audits the choice either way."""
    if n_sources <= 2:
        return 30
    if n_sources == 3:
        return 20
    return 15


@dataclass(frozen=True)
class TruncatedBox:
    """Per-source age cap and source count; state count is a_max ** N."""

    a_max: int
    n_sources: int

    def __post_init__(self):
        if self.a_max < 2:
            raise DomainError("a_max must be at least 2")
        if self.n_sources < 1:
            raise DomainError("n_sources must be positive")

    @property
    def shape(self) -> tuple:
        return (self.a_max,) * self.n_sources

    @property
    def state_count(self) -> int:
        return self.a_max**self.n_sources

    def contains(self, ages) -> bool:
        arr = np.asarray(ages)
        return bool(np.all(arr >= 1) and np.all(arr <= self.a_max))

    def state_index(self, ages) -> int:
        return int(np.ravel_multi_index(tuple(np.asarray(ages) - 1), self.shape))

    def ages_of(self, index: int) -> tuple:
        return tuple(int(c) + 1 for c in np.unravel_index(index, self.shape))


@dataclass
class DpSolution:
    """Optimal cost plus the stage-1 greedy policy and the truncation audit.

    For reliable specs the solution also records the realized trajectory of
    the time-varying optimal policy, which is what cycle extraction uses: at
    exact-tie states the per-stage greedy tables can oscillate with the
    period of the underlying reset cycle, so freezing any single stage table
    into a stationary policy may realize a strictly worse cycle.
    """

    optimal_average_cost: float
    horizon: int
    initial_state: tuple
    box: TruncatedBox
    stage1_actions: np.ndarray  # int8 greedy action per state at stage 1
    truncation_report: float
    stage_costs: np.ndarray  # expected pre-action cost per slot under the policy
    warnings: tuple = ()
    trajectory: Optional[tuple] = field(default=None, repr=False)
    stage_actions: Optional[np.ndarray] = field(default=None, repr=False)

    def action(self, ages) -> int:
        """Stage-1 greedy action at an in-box age vector."""
        if not self.box.contains(ages):
            raise DomainError(f"ages {tuple(ages)} outside the solved box")
        return int(self.stage1_actions[self.box.state_index(ages)])

    def as_tabular_policy(self, fallback=None) -> Tabular:
        """The stage-1 greedy table as a simulatable policy."""
        table = {
            self.box.ages_of(s): int(a)
            for s, a in enumerate(self.stage1_actions)
        }
        if fallback is None:
            from .policies import Whittle

            fallback = Whittle()
        return Tabular(table=table, fallback=fallback)


def _estimate_bytes(box: TruncatedBox, horizon: int, retain_stage_tables: bool) -> int:
    m, n = box.state_count, box.n_sources
    per_state = (n + 3) * 8  # value, stage cost, fail index, N action values
    per_state += (n + 1) * 8  # success index arrays
    total = m * per_state + m * horizon  # int8 per-stage actions
    if retain_stage_tables:
        total += m * horizon
    return total


def finite_horizon_dp(
    spec: SystemSpec,
    horizon: int,
    box: Optional[TruncatedBox] = None,
    initial=None,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    retain_stage_tables: bool = False,
) -> DpSolution:
    """Backward induction over `horizon` slots from `initial` (all ones by
    default). Raises CapacityError before allocating anything if the memory
    estimate exceeds `memory_budget`; attaches a warning to the solution when
    the truncation report exceeds 1e-6.
    """
    if horizon < 1:
        raise DomainError("horizon must be positive")
    n = spec.n_sources
    if box is None:
        box = TruncatedBox(default_a_max(n), n)
    if box.n_sources != n:
        raise DomainError("box source count does not match the spec")
    if initial is None:
        initial = (1,) * n
    initial = tuple(int(a) for a in validate_ages(spec, initial))
    if not box.contains(initial):
        raise DomainError(f"initial state {initial} outside the box")

    need = _estimate_bytes(box, horizon, retain_stage_tables)
    if need > memory_budget:
        raise CapacityError(
            f"DP estimate {need / 2**20:.0f} MiB exceeds budget {memory_budget / 2**20:.0f} MiB"
        )

    m = box.state_count
    shape = box.shape
    coords = np.stack(np.unravel_index(np.arange(m), shape))  # (N, m), 0-based
    stage_cost = np.zeros(m)
    for i, s in enumerate(spec.sources):
        stage_cost += s.cost(coords[i] + 1)

    aged = np.minimum(coords + 1, box.a_max - 1)
    fail_idx = np.ravel_multi_index(tuple(aged), shape)
    succ_idx = np.empty((n, m), dtype=np.intp)
    for i in range(n):
        c = aged.copy()
        c[i] = 0
        succ_idx[i] = np.ravel_multi_index(tuple(c), shape)

    probs = spec.probabilities
    actions = np.empty((horizon, m), dtype=np.int8)
    V = np.zeros(m)
    q = np.empty((n, m))
    for t in range(horizon - 1, -1, -1):
        v_fail = V[fail_idx]
        for i in range(n):
            if probs[i] == 1.0:
                q[i] = V[succ_idx[i]]
            else:
                q[i] = probs[i] * V[succ_idx[i]] + (1.0 - probs[i]) * v_fail
        a = np.argmin(q, axis=0)  # first minimum: lowest source index
        actions[t] = a
        V = stage_cost + np.take_along_axis(q, a[None, :], axis=0)[0]

    s0 = box.state_index(initial)
    total = float(V[s0])

    touched, per_stage = _forward_truncation_pass(
        box, actions, probs, succ_idx, fail_idx, stage_cost, s0
    )
    trajectory = _realized_trajectory(box, actions, initial) if spec.reliable else None

    notes = ()
    if touched > TRUNCATION_WARN_LEVEL:
        msg = (
            f"truncation report {touched:.3g} exceeds {TRUNCATION_WARN_LEVEL:g}; "
            f"consider a larger a_max than {box.a_max}"
        )
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes = (msg,)

    return DpSolution(
        optimal_average_cost=total / horizon,
        horizon=horizon,
        initial_state=initial,
        box=box,
        stage1_actions=actions[0].copy(),
        truncation_report=touched,
        stage_costs=per_stage,
        warnings=notes,
        trajectory=trajectory,
        stage_actions=actions if retain_stage_tables else None,
    )


def _realized_trajectory(box, actions, initial) -> tuple:
    """(state, action) path of the time-varying optimal policy; deterministic,
    so only meaningful for reliable channels."""
    ages = initial
    out = []
    for t in range(actions.shape[0]):
        a = int(actions[t][box.state_index(ages)])
        out.append((ages, a))
        grown = [min(x + 1, box.a_max) for x in ages]
        grown[a] = 1
        ages = tuple(grown)
    return tuple(out)


def _forward_truncation_pass(box, actions, probs, succ_idx, fail_idx, stage_cost, s0):
    """Propagate the state distribution under the per-stage greedy actions.

    Mass entering a state with any clamped coordinate is siphoned off and
    counted, so the report is the probability of ever touching the cap.
    Also records the expected pre-action stage cost per slot.
    """
    m = box.state_count
    horizon = actions.shape[0]
    at_cap = np.zeros(m, dtype=bool)
    coords = np.stack(np.unravel_index(np.arange(m), box.shape))
    for i in range(box.n_sources):
        at_cap |= coords[i] == box.a_max - 1

    d = np.zeros(m)
    d[s0] = 1.0
    touched = float(d[at_cap].sum())
    d[at_cap] = 0.0
    per_stage = np.empty(horizon)
    for t in range(horizon):
        per_stage[t] = float(d @ stage_cost)
        nxt = np.zeros(m)
        a = actions[t]
        for i in range(len(probs)):
            sel = np.nonzero(a == i)[0]
            if not sel.size:
                continue
            w = d[sel]
            if probs[i] == 1.0:
                np.add.at(nxt, succ_idx[i][sel], w)
            else:
                np.add.at(nxt, succ_idx[i][sel], probs[i] * w)
                np.add.at(nxt, fail_idx[sel], (1.0 - probs[i]) * w)
        touched += float(nxt[at_cap].sum())
        nxt[at_cap] = 0.0
        d = nxt
    return touched, per_stage


def finite_horizon_dp_auto(
    spec: SystemSpec,
    horizon: int,
    a_max: Optional[int] = None,
    max_doublings: int = 2,
    **kwargs,
) -> DpSolution:
    """finite_horizon_dp with the box doubled until the truncation report is
    clean, the doubling budget runs out, or the next doubling would blow the
    memory budget; the best solution obtained is returned (with its warning
    when the report stayed above threshold)."""
    if a_max is None:
        a_max = default_a_max(spec.n_sources)
    best = None
    for attempt in range(max_doublings + 1):
        quiet = attempt < max_doublings  # only the final size may warn aloud
        try:
            with warnings.catch_warnings():
                if quiet:
                    warnings.simplefilter("ignore", RuntimeWarning)
                sol = finite_horizon_dp(
                    spec, horizon, TruncatedBox(a_max, spec.n_sources), **kwargs
                )
        except CapacityError:
            if best is None:
                raise
            return best
        best = sol
        if sol.truncation_report <= TRUNCATION_WARN_LEVEL:
            return sol
        a_max *= 2
    return best


def extract_cycle_policy(sol: DpSolution, spec: SystemSpec):
    """The recurrent cycle realized by the optimal policy; reliable only.

    Looks for the minimal period of the solution's realized (state, action)
    trajectory over a mid-horizon window, away from the initial transient and
    from end-of-horizon effects. The exact cycle average cost is independent
    of the discarded transient.
    """
    from .sim import Cycle  # local import to avoid a module cycle

    if not spec.reliable:
        raise DomainError("cycle extraction requires all channels reliable")
    if spec.n_sources != sol.box.n_sources:
        raise DomainError("solution was computed for a different source count")
    if sol.trajectory is None:
        raise DomainError("solution carries no realized trajectory (unreliable solve?)")

    horizon = len(sol.trajectory)
    lo = min(horizon // 4, 50)
    hi = horizon - max(2, horizon // 50)
    window = sol.trajectory[lo:hi]
    if len(window) < 4:
        raise NonCyclicError(f"horizon {horizon} leaves no mid-horizon window")
    # Smallest period with a long clean stretch somewhere in the window; ties
    # at equal-cost states can cause occasional phase slips between rotations
    # of the optimal cycle, so global periodicity is too strict.
    n = len(window)
    for d in range(1, n // 3 + 1):
        match = [window[i] == window[i + d] for i in range(n - d)]
        best_len, run, start, best_start = 0, 0, 0, 0
        for i, ok in enumerate(match):
            if ok:
                if run == 0:
                    start = i
                run += 1
                if run > best_len:
                    best_len, best_start = run, start
            else:
                run = 0
        if best_len >= min(max(2 * d, 8), n - d):
            cyc = window[best_start : best_start + d]
            avg = math.fsum(spec.state_cost(s) for s, _ in cyc) / d
            return Cycle(
                states=tuple(s for s, _ in cyc),
                actions=tuple(a for _, a in cyc),
                average_cost=avg,
            )
    raise NonCyclicError(
        f"optimal trajectory shows no period within the {n}-slot window; "
        "box too small or horizon too short"
    )
