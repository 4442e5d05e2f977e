"""Age-cost functions: the six variants and the bounded-cost admissibility test.

An age of information process counts the slots since a monitor last heard
from a source; a cost function turns that staleness into a price. This walk
shows each supported shape and when a shape is even admissible over a lossy
channel.
"""

import numpy as np

from aoisched import cost

ages = np.arange(1, 11)

print("Six cost shapes evaluated on ages 1..10")
print("=" * 55)
for f in (
    cost.linear(13),
    cost.power(1, 2),
    cost.exponential(3),
    cost.logarithmic(10),
    cost.indicator(5, weight=4),
    cost.table([0, 1, 1, 7]),
):
    vals = cost.evaluate(f, ages)
    print(f"{f.kind:>12}: " + " ".join(f"{v:8.2f}" for v in vals))

print()
print("Prefix sums (used by every index formula)")
print(f"  sum of 13x over 1..4        = {cost.prefix_sum(cost.linear(13), 4)}")
print(f"  sum of 3^x over 1..3        = {cost.prefix_sum(cost.exponential(3), 3)}")

print()
print("Bounded-cost admissibility over a Bernoulli(p) channel")
print("  the tail sum f(h) (1-p)^h must converge, else no policy has finite cost")
for f, label, p in (
    (cost.exponential(3), "3^x", 0.5),
    (cost.exponential(3), "3^x", 0.8),
    (cost.exponential(2), "2^x", 0.9),
    (cost.power(1, 4), "x^4", 0.1),
):
    chk = cost.is_bounded_cost(f, p)
    verdict = "admissible" if chk else "DIVERGES"
    print(f"  {label} at p={p}: {verdict:<10} ({chk.reason})")

print()
print("Evaluations stay finite by construction: costs above 1e300 raise instead")
try:
    cost.evaluate(cost.exponential(3), 700)
except Exception as e:
    print(f"  3^700 -> {type(e).__name__}: {e}")
