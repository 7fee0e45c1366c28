"""Two-stage plans when entries have different prices.

The greedy plan takes the cheapest rows and then the cheapest column basis
given those rows. On the small 4 x 4 cost table it pays one unit more than
the best plan; on the 6 x 6 family its ratio to the optimum approaches two.
"""
from activemc import CostModel, ObservationOracle, optimal_two_stage, named_fixture, run_erhc
from activemc.linalg import Tolerance

exact = Tolerance(exact=True)

for name in ("erhc-greedy-gap", "erhc-greedy-optimal"):
    fx = named_fixture(name)
    res = run_erhc(ObservationOracle(fx.matrix, cost=CostModel.per_entry(fx.costs)), 1, tol=exact)
    best = optimal_two_stage(fx.matrix, fx.costs, 1, exact)
    plan = res.details["plan"]
    print(f"{name}: greedy rows {plan.rows} cols {plan.columns} cost {res.stats.cost:g}; "
          f"best rows {best.rows} cols {best.columns} cost {best.cost:g}")

print()
print("  eps   greedy     best   ratio")
for eps in (1.0, 0.5, 0.25, 0.1, 0.01):
    fx = named_fixture("erhc-tightness", eps=eps)
    g = run_erhc(ObservationOracle(fx.matrix, cost=CostModel.per_entry(fx.costs)), 1, tol=exact).stats.cost
    b = optimal_two_stage(fx.matrix, fx.costs, 1, exact).cost
    print(f"{eps:5.2f} {g:8.3f} {b:8.3f} {g / b:7.4f}")
