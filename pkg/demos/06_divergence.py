"""Why coin-flip scheduling fails for steep costs.

Two identical 3^x sources, perfectly reliable channel. Round robin keeps both
ages in {1, 2} and pays exactly 12 per slot forever. A stationary randomized
policy flips a fair coin each slot, so one source occasionally goes unserved
for a long stretch, and 3^age makes every such stretch ruinous: the expected
running average grows without bound. No fixed scheduling probabilities can
fix this; the failure is the policy class, not the tuning.
"""

from aoisched import cost
from aoisched.policies import RoundRobin, Source, StationaryRandomized, SystemSpec
from aoisched.sim import divergence_probe, per_slot_costs

spec = SystemSpec((Source(cost.exponential(3)), Source(cost.exponential(3))))
coin = StationaryRandomized((0.5, 0.5))
horizons = [10, 20, 40, 60, 120, 240]

print("Round robin, per-slot cost (deterministic):")
slots = per_slot_costs(spec, RoundRobin(), 8)
print("  slots 1..8:", slots.tolist(), " -> constant 12 from slot 2 on")

print()
print("Coin-flip policy, running average cost:")
medians = divergence_probe(spec, coin, horizons, n_seeds=200, seed=7)
expect = divergence_probe(spec, coin, horizons, aggregate="expectation")
print(f"{'horizon':>8} {'median of 200 runs':>20} {'exact expectation':>20}")
for h, m, e in zip(horizons, medians, expect):
    print(f"{h:>8} {m:>20.1f} {e:>20.4g}")

print()
ratio = medians[-1] / 12.0
print(f"by horizon {horizons[-1]} the median run already pays {ratio:.0f}x round robin,")
print("and the expectation is astronomically worse: the tail of long unserved")
print("stretches dominates it. Growth continues without bound in the horizon.")
