import numpy as np
import pytest

from aoisched import cost
from aoisched.errors import AdmissibilityError, DomainError, MissingStateError
from aoisched.policies import (
    FixedCycle,
    MaxAge,
    RoundRobin,
    Source,
    StationaryRandomized,
    SystemSpec,
    Tabular,
    Whittle,
    decide,
    whittle_index_table,
)


def two_linear():
    return SystemSpec((Source(cost.linear(1)), Source(cost.linear(1))))


def setting_a1():
    return SystemSpec((Source(cost.linear(13)), Source(cost.power(1, 2))))


class TestSystemSpec:
    def test_needs_a_source(self):
        with pytest.raises(DomainError):
            SystemSpec(())

    def test_probability_range(self):
        with pytest.raises(DomainError):
            Source(cost.linear(1), 0.0)

    def test_bounded_check_names_source(self):
        spec = SystemSpec((Source(cost.linear(1), 0.5), Source(cost.exponential(3), 0.5)))
        with pytest.raises(AdmissibilityError, match="source 2"):
            spec.require_bounded()

    def test_state_cost(self):
        assert setting_a1().state_cost((2, 3)) == 26 + 9


class TestWhittleDecisions:
    def test_larger_age_wins(self):
        assert decide(Whittle(), two_linear(), (1, 4)) == 1

    def test_tie_breaks_to_lowest_index(self):
        assert decide(Whittle(), two_linear(), (3, 3)) == 0

    def test_equal_index_values_prefer_first_source(self):
        # both indices equal 13 at ages (1, 2) for the 13x / x^2 pair
        spec = setting_a1()
        from aoisched.decoupled import whittle_reliable

        assert whittle_reliable(cost.linear(13), 1) == 13.0
        assert whittle_reliable(cost.power(1, 2), 2) == 13.0
        assert decide(Whittle(), spec, (1, 2)) == 0

    def test_unreliable_uses_channel_probability(self):
        spec = SystemSpec((Source(cost.linear(1), 0.5), Source(cost.linear(1), 1.0)))
        # same ages: reliable source has the higher index (p scales it down)
        assert decide(Whittle(), spec, (3, 3)) == 1


class TestIndexTable:
    def test_linear_reliable_values(self):
        spec = SystemSpec((Source(cost.linear(1)),))
        assert np.array_equal(whittle_index_table(spec, 4), [[1, 3, 6, 10]])

    def test_constant_cost_all_zero(self):
        spec = SystemSpec((Source(cost.table([5.0])),))
        assert np.array_equal(whittle_index_table(spec, 3), [[0, 0, 0]])

    def test_linear_half_probability(self):
        spec = SystemSpec((Source(cost.linear(1), 0.5),))
        assert np.allclose(whittle_index_table(spec, 3), [[1.0, 2.5, 4.5]], rtol=1e-12)

    def test_rows_non_decreasing(self):
        table = whittle_index_table(setting_a1(), 200)
        assert np.all(np.diff(table, axis=1) >= 0)

    def test_divergent_source_rejected(self):
        spec = SystemSpec((Source(cost.exponential(3), 0.5),))
        with pytest.raises(AdmissibilityError, match="source 1"):
            whittle_index_table(spec, 5)

    def test_table_matches_scalar_decisions(self, rng):
        spec = setting_a1()
        table = whittle_index_table(spec, 64)
        for _ in range(50):
            ages = tuple(int(a) for a in rng.integers(1, 64, size=2))
            assert decide(Whittle(), spec, ages, index_table=table) == decide(
                Whittle(), spec, ages
            )


class TestOtherPolicies:
    def test_round_robin_visits_each_source_once_per_lap(self):
        spec = SystemSpec(tuple(Source(cost.linear(1)) for _ in range(4)))
        seen = [decide(RoundRobin(), spec, (1, 1, 1, 1), t=t) for t in range(8)]
        assert seen == [0, 1, 2, 3, 0, 1, 2, 3]

    def test_round_robin_custom_order(self):
        spec = two_linear()
        assert decide(RoundRobin(order=(1, 0)), spec, (1, 1), t=0) == 1

    def test_fixed_cycle(self):
        spec = two_linear()
        pol = FixedCycle((0, 0, 1))
        assert [decide(pol, spec, (1, 1), t=t) for t in range(6)] == [0, 0, 1, 0, 0, 1]

    def test_max_age(self):
        assert decide(MaxAge(), two_linear(), (2, 5)) == 1
        assert decide(MaxAge(), two_linear(), (5, 5)) == 0

    def test_randomized_needs_rng(self):
        pol = StationaryRandomized((0.5, 0.5))
        with pytest.raises(DomainError):
            decide(pol, two_linear(), (1, 1))
        rng = np.random.default_rng(0)
        assert decide(pol, two_linear(), (1, 1), rng=rng) in (0, 1)

    def test_randomized_probs_validated(self):
        with pytest.raises(DomainError):
            StationaryRandomized((0.6, 0.6))

    def test_tabular_with_whittle_fallback(self):
        spec = setting_a1()
        pol = Tabular({(1, 1): 1})
        assert decide(pol, spec, (1, 1)) == 1
        assert decide(pol, spec, (1, 3)) == decide(Whittle(), spec, (1, 3))

    def test_tabular_without_fallback_raises(self):
        pol = Tabular({(1, 1): 0}, fallback=None)
        with pytest.raises(MissingStateError):
            decide(pol, two_linear(), (2, 2))

    def test_age_vector_validated(self):
        with pytest.raises(DomainError):
            decide(Whittle(), two_linear(), (0, 1))
        with pytest.raises(DomainError):
            decide(Whittle(), two_linear(), (1, 1, 1))


class TestArgmaxInvariance:
    def test_common_monotone_shift_preserves_decisions(self, rng):
        # adding the same strictly increasing transform of the index value to
        # every source changes nothing: decisions see only comparisons
        spec = setting_a1()
        table = whittle_index_table(spec, 50)
        shifted = np.arcsinh(table) * 3.0 + 1.0  # strictly increasing map
        for _ in range(200):
            ages = rng.integers(1, 51, size=2)
            base = int(np.argmax(table[[0, 1], ages - 1]))
            moved = int(np.argmax(shifted[[0, 1], ages - 1]))
            assert base == moved

    def test_scaling_one_source_changes_only_argmax(self, rng):
        spec = two_linear()
        table = whittle_index_table(spec, 50)
        boosted = table.copy()
        boosted[0] *= 3.0
        for _ in range(100):
            ages = rng.integers(1, 51, size=2)
            vals = boosted[[0, 1], ages - 1]
            assert int(np.argmax(vals)) == (0 if vals[0] >= vals[1] else 1)


def test_whittle_is_strong_switch_by_construction(rng):
    # any index policy built from non-decreasing tables satisfies dominance
    from aoisched.structure import check_strong_switch

    for _ in range(25):
        n = int(rng.integers(2, 5))
        tables = np.cumsum(rng.uniform(0, 2, size=(n, 40)), axis=1)
        states = rng.integers(1, 40, size=(200, n))
        actions = np.argmax(tables[np.arange(n)[None, :], states - 1], axis=1)
        pairs = {tuple(int(x) for x in s): int(a) for s, a in zip(states, actions)}
        assert check_strong_switch(list(pairs.items())) == []
