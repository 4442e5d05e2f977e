"""Benchmark settings: exact DP optimum vs the whittle policy.

Each bundled config pairs the whittle policy against the exact finite-horizon
optimum on the same sources, horizon 500, from all-ones. Reliable settings
evaluate deterministically; lossy ones average 500 seeded Monte Carlo runs.
With four sources the whittle policy can be strictly (if barely) suboptimal;
the F1 setting exhibits the gap.

Run everything with `aoisched tables` (minutes). This demo keeps to the
two-source settings plus the F1 gap so it finishes in seconds.
"""

import dataclasses
import sys

from aoisched.config import bundled_config
from aoisched.runner import run_experiment

NAMES = ["table1_A1", "table1_B1", "table1_C1", "table1_A2"]

print(f"{'setting':<12} {'dp':>10} {'whittle':>12} {'note'}")
for name in NAMES:
    config = bundled_config(name)
    if config.runs > 1:
        config = dataclasses.replace(config, runs=100)  # demo speed
    bundle = run_experiment(config)
    dp = bundle.dp_solution.optimal_average_cost
    w = bundle.policy_results[0].result
    note = "exact" if w.stderr == 0 else f"+-{w.stderr:.2f} over {w.runs} runs"
    print(f"{name:<12} {dp:>10.3f} {w.mean_cost:>12.3f} {note}")
    sys.stdout.flush()

print()
print("Four sources (x^3, e^x, 15x, x^2): the whittle policy is merely close")
bundle = run_experiment(bundled_config("table2_F1"))
dp = bundle.dp_solution.optimal_average_cost
w = bundle.policy_results[0].result.mean_cost
print(f"  optimal {dp:.3f} vs whittle {w:.3f}: gap {w - dp:+.3f}")
print(
    f"  steady cycles: optimal {bundle.dp_cycle.average_cost:.3f}"
    f" (length {bundle.dp_cycle.length}) vs whittle"
    f" {bundle.policy_results[0].cycle.average_cost:.3f}"
    f" (length {bundle.policy_results[0].cycle.length})"
)
