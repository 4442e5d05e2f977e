"""Cross-checking the index against a value-iteration oracle.

Nothing here trusts the index formulas: a relative value iteration solves the
single-source problem numerically on a truncated age chain. The solver's
threshold must invert the index, its average cost must match the closed
forms, and charging exactly W(h) must leave it indifferent at age h. That
indifference is the definition of the index, so the oracle certifies it.
"""

from aoisched import cost
from aoisched.decoupled import (
    DecoupledProblem,
    decoupled_value_iteration,
    optimal_threshold,
    threshold_policy_average_cost,
    whittle_index,
)

f, p = cost.power(1, 2), 0.6

print("Value iteration vs index inversion, x^2 source at p = 0.6")
print(f"{'charge':>8} {'VI threshold':>13} {'inverted':>9} {'VI avg cost':>12} {'closed form':>12}")
for C in (0.5, 4.0, 12.0, 40.0, 150.0):
    prob = DecoupledProblem(f, p, C)
    sol = decoupled_value_iteration(prob)
    inv = optimal_threshold(prob)
    lam = threshold_policy_average_cost(f, p, sol.policy.threshold, C)
    print(
        f"{C:>8} {str(sol.policy.threshold):>13} {str(inv.threshold):>9} "
        f"{sol.average_cost:>12.6f} {lam:>12.6f}"
    )

print()
print("Charging exactly W(h) makes ages h and h+1 equally good thresholds")
for h in (1, 3, 6, 10):
    C = float(whittle_index(f, p, h, tol=1e-13))
    sol = decoupled_value_iteration(DecoupledProblem(f, p, C))
    lam_h = threshold_policy_average_cost(f, p, h, C, tol=1e-14)
    lam_h1 = threshold_policy_average_cost(f, p, h + 1, C, tol=1e-14)
    print(
        f"  h={h:>2}: C=W(h)={C:>10.4f}  VI threshold={sol.policy.threshold}"
        f"  lambda({h})-lambda({h + 1}) = {lam_h - lam_h1:+.2e}"
    )

print()
print("Differential costs are non-decreasing in age (waiting never helps)")
sol = decoupled_value_iteration(DecoupledProblem(f, p, 12.0))
S = sol.differential_costs[:10]
print("  S(1..10) =", " ".join(f"{v:.3f}" for v in S))
