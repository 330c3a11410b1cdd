"""Simulated joint paths of the short rate, the contract state and the assets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import TimeGrid


@dataclass(frozen=True, eq=False)
class ScenarioPaths:
    """
    A batch of joint trajectories on ``grid``.

    Node arrays have shape ``(P, n+1)``, step arrays ``(P, n)``. Jumps are
    flat arrays sorted by path and then time.
    """

    grid: TimeGrid
    gamma: float
    rates: np.ndarray
    brownian_increments: np.ndarray
    accumulated_rate: np.ndarray
    states: np.ndarray
    jump_path: np.ndarray
    jump_time: np.ndarray
    jump_from: np.ndarray
    jump_to: np.ndarray
    bond_prices: np.ndarray
    savings: np.ndarray
    after_tax_savings: np.ndarray
    after_tax_bond: np.ndarray
    accumulated_expense_rate: np.ndarray
    expense_rate_at_jumps: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.rates.shape[0]

    @property
    def jumps(self):
        return self.jump_path, self.jump_time, self.jump_from, self.jump_to

    @property
    def discounted_bond(self) -> np.ndarray:
        """``S1* = S1 / S0``."""
        return self.bond_prices / self.savings

    @property
    def after_tax_discounted_bond(self) -> np.ndarray:
        """``S1-check* = S1-check / S0-check``."""
        return self.after_tax_bond / self.after_tax_savings

    @property
    def log_modified_discount(self) -> np.ndarray:
        """``-int ((1 - gamma) r - delta)``: log of ``1 / S0-check`` at the nodes."""
        return -(1.0 - self.gamma) * self.accumulated_rate + self.accumulated_expense_rate

    def log_modified_discount_at_jumps(self) -> np.ndarray:
        """Same quantity at each jump time; the rate integral is interpolated linearly."""
        if len(self.jump_time) == 0:
            return np.zeros(0)
        return (
            -(1.0 - self.gamma) * self.rate_integral_at_jumps() + self.expense_rate_at_jumps
        )

    def rate_integral_at_jumps(self) -> np.ndarray:
        times = self.grid.times
        jt = self.jump_time
        col = np.searchsorted(times, jt, side="left")
        lo = np.maximum(col - 1, 0)
        w = (jt - times[lo]) / np.where(col > lo, times[col] - times[lo], 1.0)
        a = self.accumulated_rate[self.jump_path, lo]
        b = self.accumulated_rate[self.jump_path, col]
        return a + w * (b - a)

    def select(self, idx) -> "ScenarioPaths":
        """Sub-batch with the given path indices (in the given order)."""
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        remap = np.full(self.n_paths, -1)
        remap[idx] = np.arange(len(idx))
        keep = remap[self.jump_path] >= 0
        new_path = remap[self.jump_path[keep]]
        order = np.lexsort((self.jump_time[keep], new_path))
        return ScenarioPaths(
            grid=self.grid,
            gamma=self.gamma,
            rates=self.rates[idx],
            brownian_increments=self.brownian_increments[idx],
            accumulated_rate=self.accumulated_rate[idx],
            states=self.states[idx],
            jump_path=new_path[order],
            jump_time=self.jump_time[keep][order],
            jump_from=self.jump_from[keep][order],
            jump_to=self.jump_to[keep][order],
            bond_prices=self.bond_prices[idx],
            savings=self.savings[idx],
            after_tax_savings=self.after_tax_savings[idx],
            after_tax_bond=self.after_tax_bond[idx],
            accumulated_expense_rate=self.accumulated_expense_rate[idx],
            expense_rate_at_jumps=self.expense_rate_at_jumps[keep][order],
        )
