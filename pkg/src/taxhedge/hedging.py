"""
State-wise reserves, the risk-minimizing strategy and its GKW integrands.

For the Vasicek market with a bond expiring at ``T`` the strategy is

    h1(t) = int_t^T B(t, s) F^{1-g}(t, r, s) Y_{Z(t-)}(t, s) ds / (B(t, T) F(t, r, T))
    h0(t) = (V_{Z(t)}(t) - h1(t) S1(t)) / S0(t)

with ``V_i(t) = int_t^T F^{1-g}(t, r, s) Y_i(t, s) ds``. The ratio
``F_r(t, r, s) / F_r(t, r, T)`` has been reduced to ``B(t, s) F(t, r, s) /
(B(t, T) F(t, r, T))``.

All integrals in ``s`` use composite Simpson on the pieces between knots of
the intensities, payment functions and expense rates, so the integrand is
smooth on every piece.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial.chebyshev import chebvander
from scipy.integrate import simpson

from .cashflow import PaymentSpec, TaxExpenseSpec, modified_cashflow_curve
from .markov import MarkovModel
from .term_structure import (
    VasicekParams,
    affine_coefficients,
    bond_price,
    bond_price_tax_scaled,
)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


class QuadratureRule(NamedTuple):
    """Nodes, weights and the point at which step functions are sampled."""

    nodes: np.ndarray
    weights: np.ndarray
    sample_times: np.ndarray
    pieces: tuple[np.ndarray, ...]


def simpson_weights(x: np.ndarray) -> np.ndarray:
    """Weights of ``scipy.integrate.simpson`` on the nodes ``x``."""
    return simpson(np.eye(len(x)), x=x, axis=-1)


def quadrature_rule(t: float, horizon: float, knots, quad_points: int) -> QuadratureRule:
    """
    Composite Simpson rule on ``[t, horizon]`` split at ``knots``.

    A single piece gets exactly ``quad_points`` nodes; otherwise nodes are
    shared out in proportion to piece length with at least three per piece.
    """
    if quad_points < 2:
        raise ValueError("quad_points must be at least 2")
    if t > horizon:
        raise ValueError("t must not exceed the horizon")
    if t == horizon:
        empty = np.zeros(0)
        return QuadratureRule(empty, empty, empty, ())
    knots = np.asarray(knots, dtype=float)
    inner = knots[(knots > t) & (knots < horizon)]
    edges = np.concatenate([[t], inner, [horizon]])
    span = horizon - t
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        if len(edges) == 2:
            m = quad_points
        else:
            m = max(3, int(round(quad_points * (b - a) / span)))
        pieces.append(np.linspace(a, b, m))
    nodes = np.concatenate(pieces)
    weights = np.concatenate([simpson_weights(x) for x in pieces])
    sample = np.concatenate([np.full(len(x), 0.5 * (x[0] + x[-1])) for x in pieces])
    return QuadratureRule(nodes, weights, sample, tuple(pieces))


def _knots(model: MarkovModel, payments: PaymentSpec, taxexp: TaxExpenseSpec) -> np.ndarray:
    funcs = list(payments.sojourn_rates) + list(payments.transition_payments.values())
    funcs += list(taxexp.expense_rates) + list(model.intensities.values())
    k = np.concatenate([f.knots for f in funcs]) if funcs else np.zeros(0)
    return np.unique(k[np.isfinite(k)])


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HedgeKernel:
    """
    Everything in the reserve and strategy integrals that does not depend on
    the short rate, for a fixed evaluation time ``t``.
    """

    t: float
    horizon: float
    gamma: float
    params: VasicekParams
    rule: QuadratureRule
    cashflow: np.ndarray  # (Q, n) Y_i(t, s_q)
    a_tax: np.ndarray  # (Q,) A of the (1 - gamma)-scaled model
    b: np.ndarray  # (Q,) B(t, s_q)
    bond_a: float
    bond_b: float

    @classmethod
    def build(
        cls,
        model: MarkovModel,
        payments: PaymentSpec,
        taxexp: TaxExpenseSpec,
        params: VasicekParams,
        t: float,
        quad_points: int = 200,
        knots=None,
    ) -> "HedgeKernel":
        horizon = model.horizon
        if not 0.0 <= t <= horizon:
            raise ValueError("t must lie in [0, T]")
        if knots is None:
            knots = _knots(model, payments, taxexp)
        rule = quadrature_rule(t, horizon, knots, quad_points)
        if len(rule.nodes):
            y = modified_cashflow_curve(model, payments, taxexp, t, rule.nodes, rule.sample_times)
        else:
            y = np.zeros((0, model.n_states))
        c = 1.0 - taxexp.gamma
        a_tax, b = affine_coefficients(params.scaled(c), rule.nodes - t)
        bond_a, bond_b = affine_coefficients(params, horizon - t)
        return cls(
            float(t), horizon, taxexp.gamma, params, rule, y, a_tax, b, float(bond_a), float(bond_b)
        )

    @property
    def n_states(self) -> int:
        return self.cashflow.shape[1]

    def tax_scaled_discount(self, r) -> np.ndarray:
        """``F^{1-g}(t, r, s_q)``, shape ``r.shape + (Q,)``."""
        r = np.asarray(r, dtype=float)[..., None]
        return np.exp(self.a_tax - self.b * ((1.0 - self.gamma) * r))

    def reserves(self, r) -> np.ndarray:
        """``V_i(t)`` for every state; shape ``r.shape + (n,)``."""
        return self.tax_scaled_discount(r) @ (self.rule.weights[:, None] * self.cashflow)

    def bond_holdings(self, r) -> np.ndarray:
        """``h1`` for every pre-jump state; zero at the horizon."""
        r = np.asarray(r, dtype=float)
        if self.t >= self.horizon:
            return np.zeros(r.shape + (self.n_states,))
        num = self.tax_scaled_discount(r) @ ((self.rule.weights * self.b)[:, None] * self.cashflow)
        bond = np.exp(self.bond_a - self.bond_b * r)
        return num / (self.bond_b * bond)[..., None]

    def reserve_rate_sensitivity(self, r) -> np.ndarray:
        """``dV_i/dr = int F_r^{1-g}(t, r, s) Y_i(t, s) ds`` via the bond pricer."""
        r = np.asarray(r, dtype=float)
        if self.t >= self.horizon:
            return np.zeros(r.shape + (self.n_states,))
        quote = bond_price_tax_scaled(
            self.params, self.gamma, self.t, r[..., None], self.rule.nodes
        )
        dr = np.asarray(quote.rate_sensitivity)
        return dr @ (self.rule.weights[:, None] * self.cashflow)


def build_kernels(model, payments, taxexp, params, times, quad_points: int = 200) -> list[HedgeKernel]:
    """One ``HedgeKernel`` per time in ``times``."""
    knots = _knots(model, payments, taxexp)
    return [
        HedgeKernel.build(model, payments, taxexp, params, float(t), quad_points, knots)
        for t in np.asarray(times, dtype=float)
    ]


_CHEB_POINTS = 25
_CHEB_TOL = 1e-13
_CHEB_TAIL = 1e-14


@dataclass(frozen=True, eq=False)
class GridKernel:
    """
    ``HedgeKernel`` data stacked for every node of a time grid.

    Built once per (scenario, grid, quadrature) and shared by all simulated
    batches. Rows are zero-padded to a common width.
    """

    times: np.ndarray
    gamma: float
    weighted_cashflow: np.ndarray  # (n+1, Q, S) w * Y
    weighted_b_cashflow: np.ndarray  # (n+1, Q, S) w * B * Y
    a_tax: np.ndarray  # (n+1, Q)
    b: np.ndarray  # (n+1, Q)
    bond_a: np.ndarray  # (n+1,)
    bond_b: np.ndarray  # (n+1,)
    quad_points: int

    @classmethod
    def build(
        cls,
        model: MarkovModel,
        payments: PaymentSpec,
        taxexp: TaxExpenseSpec,
        params: VasicekParams,
        times,
        quad_points: int = 200,
    ) -> "GridKernel":
        kernels = build_kernels(model, payments, taxexp, params, times, quad_points)
        return cls.from_kernels(kernels, taxexp.gamma, quad_points)

    @classmethod
    def from_kernels(cls, kernels, gamma: float, quad_points: int) -> "GridKernel":
        times = np.array([k.t for k in kernels])
        width = max(len(k.rule.nodes) for k in kernels)
        n_t, n_s = len(times), kernels[0].n_states
        wy = np.zeros((n_t, width, n_s))
        wby = np.zeros((n_t, width, n_s))
        a_tax = np.zeros((n_t, width))
        b = np.zeros((n_t, width))
        for row, k in enumerate(kernels):
            q = len(k.rule.nodes)
            w = k.rule.weights[:, None]
            wy[row, :q] = w * k.cashflow
            wby[row, :q] = w * k.b[:, None] * k.cashflow
            a_tax[row, :q] = k.a_tax
            b[row, :q] = k.b
        bond_a = np.array([k.bond_a for k in kernels])
        bond_b = np.array([k.bond_b for k in kernels])
        return cls(times, gamma, wy, wby, a_tax, b, bond_a, bond_b, quad_points)

    def _exact(self, k: int, r: np.ndarray, weights: np.ndarray) -> np.ndarray:
        disc = np.multiply.outer(-(1.0 - self.gamma) * r, self.b[k])
        disc += self.a_tax[k]
        np.exp(disc, out=disc)
        return disc @ weights

    def _interpolated(self, k: int, r: np.ndarray, weights: np.ndarray) -> np.ndarray | None:
        """
        Chebyshev interpolant in ``r`` over the range of ``r``.

        Both numerators are entire in ``r``, so degree 24 is exact to rounding
        for any realistic rate spread. Trailing coefficients above rounding
        level, or a mismatch with the exact sum at the extreme rates, return
        ``None`` and the caller falls back to the exact sum.
        """
        m = _CHEB_POINTS
        if r.size <= 2 * m:
            return None
        lo, hi = float(r.min()), float(r.max())
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        if half == 0.0:
            return np.broadcast_to(self._exact(k, r[:1], weights), (r.size, weights.shape[1])).copy()
        theta = np.pi * (np.arange(m) + 0.5) / m
        values = self._exact(k, mid + half * np.cos(theta), weights)
        coef = (2.0 / m) * np.cos(np.outer(np.arange(m), theta)) @ values
        coef[0] *= 0.5
        scale = np.maximum(np.abs(values).max(axis=0), np.finfo(float).tiny)
        # the trailing coefficients bound the truncation error
        if np.max(np.abs(coef[-3:]) / scale) > _CHEB_TAIL:
            return None
        out = chebvander((r - mid) / half, m - 1) @ coef
        probe = np.array([int(np.argmin(r)), int(np.argmax(r)), r.size // 2])
        exact = self._exact(k, r[probe], weights)
        scale = np.maximum(np.abs(exact).max(axis=0), np.finfo(float).tiny)
        if np.max(np.abs(out[probe] - exact) / scale) > _CHEB_TOL:
            return None
        return out

    def evaluate(self, rates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Reserves and bond holdings along rate paths.

        ``rates`` has shape ``(P, n+1)``; returns two arrays of shape
        ``(P, n+1, S)``.
        """
        rates = np.asarray(rates, dtype=float)
        n_p, n_t = rates.shape
        if n_t != len(self.times):
            raise ValueError("rate paths do not match the kernel grid")
        n_s = self.weighted_cashflow.shape[-1]
        reserves = np.zeros((n_p, n_t, n_s))
        holdings = np.zeros((n_p, n_t, n_s))
        both = np.concatenate([self.weighted_cashflow, self.weighted_b_cashflow], axis=2)
        for k in range(n_t):
            if self.bond_b[k] == 0.0:
                continue
            r = rates[:, k]
            out = self._interpolated(k, r, both[k])
            if out is None:
                out = self._exact(k, r, both[k])
            reserves[:, k] = out[:, :n_s]
            bond = self.bond_b[k] * np.exp(self.bond_a[k] - self.bond_b[k] * r)
            holdings[:, k] = out[:, n_s:] / bond[:, None]
        return reserves, holdings


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


class ReserveCurve(NamedTuple):
    """``values[q, i] = V_i(times[q])`` at the rates ``rates[q]``."""

    times: np.ndarray
    rates: np.ndarray
    values: np.ndarray
    quad_points: int
    rule: str = "composite Simpson split at knots"


class StrategyPoint(NamedTuple):
    h0: float
    h1: float
    value: float


class GKWIntegrands(NamedTuple):
    """``xi[i]`` per pre-jump state; ``v[j, k]`` per transition (zero diagonal)."""

    xi: np.ndarray
    v: np.ndarray


def reserve(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    params: VasicekParams,
    i: int,
    t: float,
    r,
    quad_points: int = 200,
):
    """State-wise prospective reserve ``V_i(t)`` at short rate ``r``."""
    kernel = HedgeKernel.build(model, payments, taxexp, params, t, quad_points)
    out = kernel.reserves(r)[..., i]
    return float(out) if np.ndim(out) == 0 else out


def reserve_curve(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    params: VasicekParams,
    times,
    rates,
    quad_points: int = 200,
) -> ReserveCurve:
    times = np.asarray(times, dtype=float)
    rates = np.broadcast_to(np.asarray(rates, dtype=float), times.shape)
    knots = _knots(model, payments, taxexp)
    values = np.stack(
        [
            HedgeKernel.build(model, payments, taxexp, params, t, quad_points, knots).reserves(r)
            for t, r in zip(times, rates)
        ]
    ) if len(times) else np.zeros((0, model.n_states))
    return ReserveCurve(times, np.array(rates), values, quad_points)


def optimal_strategy(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    params: VasicekParams,
    state: int,
    t: float,
    r: float,
    accumulated_rate: float,
    quad_points: int = 200,
    state_pre: int | None = None,
) -> StrategyPoint:
    """
    Risk-minimizing holdings at ``t``.

    ``state`` is ``Z(t)`` (used for the value) and ``state_pre`` is ``Z(t-)``
    (used for the bond holding); they differ only at a jump time.
    """
    if state_pre is None:
        state_pre = state
    if t >= model.horizon:
        return StrategyPoint(0.0, 0.0, 0.0)
    kernel = HedgeKernel.build(model, payments, taxexp, params, t, quad_points)
    value = float(kernel.reserves(r)[state])
    h1 = float(kernel.bond_holdings(r)[state_pre])
    s1 = float(bond_price(params, t, r, model.horizon).value)
    h0 = (value - h1 * s1) / np.exp(accumulated_rate)
    return StrategyPoint(float(h0), h1, value)


def gkw_integrands(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    params: VasicekParams,
    t: float,
    r: float,
    accumulated_rate: float,
    accumulated_expense: float,
    quad_points: int = 200,
) -> GKWIntegrands:
    """
    Integrands of the GKW decomposition of the modified intrinsic value.

    ``accumulated_rate`` is ``int_0^t r`` and ``accumulated_expense`` is
    ``int_0^t delta_{Z(u)}(u) du`` on the realised path.
    """
    g = taxexp.gamma
    kernel = HedgeKernel.build(model, payments, taxexp, params, t, quad_points)
    growth = np.exp(g * accumulated_rate + accumulated_expense)
    xi = (1.0 - g) * growth * kernel.bond_holdings(r)
    v_res = kernel.reserves(r)
    discount = np.exp(-(1.0 - g) * accumulated_rate + accumulated_expense)
    sum_at_risk = payments.transition_matrix(t) + v_res[None, :] - v_res[:, None]
    np.fill_diagonal(sum_at_risk, 0.0)
    return GKWIntegrands(xi, discount * sum_at_risk)
