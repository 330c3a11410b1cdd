"""
The after-tax market route.

Computes optimal holdings in the after-tax assets, maps them back to the
ordinary savings account and bond, and compares with the direct route.
"""

import numpy as np

from taxhedge.grid import TimeGrid
from taxhedge.hedging import GridKernel, build_kernels
from taxhedge.market_sim import (
    HedgeContext,
    OptimalStrategy,
    after_tax_optimal_holdings,
    after_tax_strategy_map,
    simulate_scenario,
)
from taxhedge.scenario import disability

sc = disability()
grid = TimeGrid.uniform(10.0, 100)
paths = simulate_scenario(sc, grid, seed=4, n_paths=20)
ctx = HedgeContext.build(paths, sc, GridKernel.build(sc.model, sc.payments, sc.taxexp, sc.vasicek, grid.times, 65))
h0, h1 = OptimalStrategy().holdings(ctx)

kernels = build_kernels(sc.model, sc.payments, sc.taxexp, sc.vasicek, grid.times, 65)
h0c, h1c = after_tax_optimal_holdings(paths, sc, kernels)
g0, g1 = after_tax_strategy_map(paths, h0c, h1c)

print("max |bond money, after-tax route - direct route|:", np.abs((g1 - h1) * paths.bond_prices).max())
print("max |savings money difference|:                  ", np.abs((g0 - h0) * paths.savings).max())
v_after = h0c * paths.after_tax_savings + h1c * paths.after_tax_bond
print("max |value difference|:                          ", np.abs(v_after - ctx.optimal_value).max())

p = 0
print(f"\npath {p}: t, state, bond units (after-tax), bond units (mapped), bond units (direct)")
for k in range(0, grid.n + 1, 20):
    print(f"{grid.times[k]:5.1f} {int(paths.states[p, k])} {h1c[p, k]:10.5f} {g1[p, k]:10.5f} {h1[p, k]:10.5f}")
