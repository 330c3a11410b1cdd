"""
Reserves and optimal holdings for a ten-year term insurance.

Shows how the reserve and the bond position depend on the short rate, and
how taxation and expenses move them relative to the untaxed contract.
"""

import numpy as np

from taxhedge.hedging import build_kernels, optimal_strategy
from taxhedge.scenario import term_insurance

taxed = term_insurance()
plain = taxed.without_tax_and_expenses()

print("reserve of the alive state at t=0 for several short rates")
print(f"{'r':>8} {'taxed':>12} {'untaxed':>12}")
rates = np.array([0.0, 0.015, 0.03, 0.045, 0.06])
columns = [build_kernels(s.model, s.payments, s.taxexp, s.vasicek, [0.0])[0].reserves(rates)[:, 0] for s in (taxed, plain)]
for r, v_taxed, v_plain in zip(rates, *columns):
    print(f"{r:8.3f} {v_taxed:12.6f} {v_plain:12.6f}")

print("\noptimal holdings along t at r=0.03 (accumulated rate 0.03 t)")
print(f"{'t':>5} {'value':>10} {'h0':>10} {'h1 taxed':>10} {'h1 untaxed':>11}")
for t in (0.0, 2.5, 5.0, 7.5, 9.5):
    args = lambda s: (s.model, s.payments, s.taxexp, s.vasicek, 0, t, 0.03, 0.03 * t)
    a, b = optimal_strategy(*args(taxed)), optimal_strategy(*args(plain))
    print(f"{t:5.1f} {a.value:10.6f} {a.h0:10.6f} {a.h1:10.6f} {b.h1:11.6f}")

print("\nAt nonnegative rates the taxed contract holds more of the bond than the untaxed one.")
