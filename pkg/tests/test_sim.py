import math

import numpy as np
import pytest

from aoisched import cost
from aoisched.errors import CostRangeError, DomainError, NonCyclicError
from aoisched.policies import (
    FixedCycle,
    MaxAge,
    RoundRobin,
    Source,
    StationaryRandomized,
    SystemSpec,
    Whittle,
)
from aoisched.sim import detect_cycle, divergence_probe, per_slot_costs, simulate

from conftest import references_for, system_for


def two_exponential():
    return SystemSpec((Source(cost.exponential(3)), Source(cost.exponential(3))))


class TestSimulate:
    def test_round_robin_exponential_pair(self):
        # slot 1 costs 6 at ages (1,1); every later slot costs exactly 12
        res = simulate(two_exponential(), RoundRobin(), horizon=500, runs=1, seed=0)
        assert res.mean_cost == pytest.approx((6 + 499 * 12) / 500, abs=1e-12)
        assert res.stderr == 0.0
        assert res.per_source_costs[0] + res.per_source_costs[1] == pytest.approx(
            res.mean_cost
        )

    def test_reliable_deterministic_runs_have_zero_stderr(self):
        res = simulate(system_for("A1"), Whittle(), horizon=200, runs=5, seed=3)
        assert res.stderr == 0.0

    def test_stochastic_runs_have_positive_stderr(self):
        res = simulate(system_for("A2"), Whittle(), horizon=200, runs=20, seed=3)
        assert res.stderr > 0.0

    def test_reproducible_bit_identical(self):
        a = simulate(system_for("B2"), Whittle(), horizon=300, runs=40, seed=9)
        b = simulate(system_for("B2"), Whittle(), horizon=300, runs=40, seed=9)
        assert a == b

    def test_workers_do_not_change_results(self):
        one = simulate(system_for("C2"), Whittle(), horizon=200, runs=30, seed=5, workers=1)
        four = simulate(system_for("C2"), Whittle(), horizon=200, runs=30, seed=5, workers=4)
        assert one == four

    def test_seed_changes_stochastic_results(self):
        a = simulate(system_for("A2"), Whittle(), horizon=200, runs=10, seed=1)
        b = simulate(system_for("A2"), Whittle(), horizon=200, runs=10, seed=2)
        assert a.mean_cost != b.mean_cost

    def test_quadrupling_runs_roughly_halves_stderr(self):
        spec = system_for("A2")
        ratios = []
        for rep in range(10):
            small = simulate(spec, Whittle(), horizon=300, runs=60, seed=100 + rep)
            big = simulate(spec, Whittle(), horizon=300, runs=240, seed=2000 + rep)
            ratios.append(big.stderr / small.stderr)
        assert 0.5 * 0.8 <= float(np.median(ratios)) <= 0.5 * 1.2

    def test_overflow_identifies_slot_and_source(self):
        # a single exponential source scheduled never (cycle on the other)
        spec = SystemSpec((Source(cost.linear(1)), Source(cost.exponential(3))))
        with pytest.raises(CostRangeError, match=r"slot \d+, source 2"):
            simulate(spec, FixedCycle((0,)), horizon=1000, runs=1, seed=0)

    def test_randomized_policy_simulates(self):
        res = simulate(
            two_exponential(),
            StationaryRandomized((0.5, 0.5)),
            horizon=30,
            runs=8,
            seed=7,
        )
        assert res.mean_cost > 12.0  # randomized is worse than round robin here


class TestDetectCycle:
    def test_identical_linear_sources_alternate(self):
        spec = SystemSpec((Source(cost.linear(1)), Source(cost.linear(1))))
        cyc = detect_cycle(spec, Whittle())
        assert cyc.length == 2
        assert cyc.average_cost == pytest.approx(3.0)

    def test_b1_whittle_cycle_cost(self):
        cyc = detect_cycle(system_for("B1"), Whittle())
        ref, _ = references_for("B1")
        assert cyc.average_cost == pytest.approx(ref, rel=0.01)
        assert cyc.average_cost == pytest.approx(8.5, abs=1e-12)

    def test_a1_whittle_cycle_has_leader_then_follower_form(self):
        from aoisched.structure import parse_two_source_cycle

        cyc = detect_cycle(system_for("A1"), Whittle())
        form = parse_two_source_cycle(cyc)
        assert form.leader == 0
        assert form.k == cyc.length - 1

    def test_cycle_transitions_close(self):
        cyc = detect_cycle(system_for("C1"), Whittle())
        n = cyc.length
        for i in range(n):
            s, a = cyc.states[i], cyc.actions[i]
            expect = [x + 1 for x in s]
            expect[a] = 1
            assert tuple(expect) == cyc.states[(i + 1) % n]

    def test_fixed_cycle_policy_detected_with_phase(self):
        spec = system_for("A1")
        cyc = detect_cycle(spec, FixedCycle((0, 0, 1)))
        assert cyc.length == 3
        from aoisched.structure import two_source_cycle_cost

        assert cyc.average_cost == pytest.approx(
            two_source_cycle_cost(cost.linear(13), cost.power(1, 2), 2), abs=1e-12
        )

    def test_unreliable_rejected(self):
        with pytest.raises(DomainError):
            detect_cycle(system_for("A2"), Whittle())

    def test_randomized_rejected(self):
        with pytest.raises(DomainError):
            detect_cycle(two_exponential(), StationaryRandomized((0.5, 0.5)))

    def test_max_steps_guard(self):
        with pytest.raises(NonCyclicError):
            detect_cycle(system_for("A1"), Whittle(), max_steps=2)

    def test_simulation_converges_to_cycle_cost(self):
        for name in ("A1", "B1", "C1"):
            spec = system_for(name)
            cyc = detect_cycle(spec, Whittle())
            res = simulate(spec, Whittle(), horizon=500, runs=1, seed=0)
            assert res.mean_cost == pytest.approx(cyc.average_cost, rel=0.01)

    def test_max_age_policy_cycles(self):
        cyc = detect_cycle(system_for("A1"), MaxAge())
        assert cyc.length == 2  # max-age ignores costs: plain alternation


class TestPerSlotCosts:
    def test_round_robin_holds_at_twelve_from_slot_two(self):
        costs = per_slot_costs(two_exponential(), RoundRobin(), 50)
        assert costs[0] == pytest.approx(6.0)
        assert np.allclose(costs[1:], 12.0)


class TestDivergenceProbe:
    def test_median_running_average_strictly_increases(self):
        probe = divergence_probe(
            two_exponential(),
            StationaryRandomized((0.5, 0.5)),
            [10, 20, 40],
            n_seeds=100,
            seed=1,
        )
        assert probe[0] < probe[1] < probe[2]

    def test_linear_costs_stay_bounded(self):
        spec = SystemSpec((Source(cost.linear(1)), Source(cost.linear(1))))
        probe = divergence_probe(
            spec, StationaryRandomized((0.5, 0.5)), [50, 100, 200], n_seeds=50, seed=2
        )
        # linear costs under a positive-probability randomized policy settle
        assert probe[-1] < 20.0
        assert abs(probe[-1] - probe[-2]) < 2.0

    def test_expectation_mode_matches_geometric_closed_form(self):
        probe = divergence_probe(
            two_exponential(), StationaryRandomized((0.5, 0.5)), [5, 10], aggregate="expectation"
        )
        # per source, E[3^A(t)] = 4 * 1.5^t - 3 when scheduled w.p. 1/2
        t = np.arange(1, 11)
        per_slot = 2 * (4 * 1.5**t - 3)
        expect = np.cumsum(per_slot) / t
        assert probe[0] == pytest.approx(expect[4], rel=1e-12)
        assert probe[1] == pytest.approx(expect[9], rel=1e-12)

    def test_expectation_saturates_instead_of_overflowing(self):
        probe = divergence_probe(
            two_exponential(),
            StationaryRandomized((0.5, 0.5)),
            [2000],
            aggregate="expectation",
        )
        assert math.isfinite(probe[0])
        assert probe[0] > 1e100

    def test_requires_randomized_policy(self):
        with pytest.raises(DomainError):
            divergence_probe(two_exponential(), RoundRobin(), [10])
