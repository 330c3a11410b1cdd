"""
Insurance payments, tax and expense streams, and expected modified cash flows.

Benefits less premiums follow

    dA^b(t) = b_{Z(t)}(t) dt + sum_{j != k} b_jk(t) dN_jk(t),   A^b(0) = initial premium.

The expected expense-modified cash flow from state ``i`` is

    Y_i(t, s) = sum_j p^{-delta}_ij(t, s) (b_j(s) + sum_k mu_jk(s) b_jk(s))

where ``p^{-delta}`` carries the weight ``exp(+int delta)``. The Markov engine
works with weight ``exp(-int delta)``, so this module passes negated expense
rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .functions import PiecewiseConstant, PiecewiseTable, as_function
from .markov import (
    DeflationSpec,
    MarkovModel,
    deflated_transitions_along,
    deflated_transitions_forward,
)


@dataclass(frozen=True, eq=False)
class PaymentSpec:
    """
    Deterministic payment functions.

    Parameters
    ----------
    initial_premium : float
        ``A^b(0)``; negative for a premium received.
    sojourn_rates : per-state rates ``b_j(t)``.
    transition_payments : mapping ``(j, k) -> b_jk(t)``.
    """

    initial_premium: float
    sojourn_rates: tuple[PiecewiseConstant, ...]
    transition_payments: Mapping[tuple[int, int], PiecewiseConstant] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.initial_premium):
            raise ValueError("initial_premium must be finite")
        object.__setattr__(self, "initial_premium", float(self.initial_premium))
        object.__setattr__(self, "sojourn_rates", tuple(as_function(f) for f in self.sojourn_rates))
        n = len(self.sojourn_rates)
        clean = {}
        for (j, k), f in dict(self.transition_payments).items():
            if not (0 <= j < n and 0 <= k < n) or j == k:
                raise ValueError(f"invalid transition payment ({j}, {k})")
            clean[(int(j), int(k))] = as_function(f)
        object.__setattr__(self, "transition_payments", clean)

    @classmethod
    def zero(cls, n_states: int) -> "PaymentSpec":
        return cls(0.0, tuple(PiecewiseConstant.zero() for _ in range(n_states)))

    @property
    def n_states(self) -> int:
        return len(self.sojourn_rates)

    def scaled(self, c: float) -> "PaymentSpec":
        return PaymentSpec(
            c * self.initial_premium,
            tuple(c * f for f in self.sojourn_rates),
            {key: c * f for key, f in self.transition_payments.items()},
        )

    def transition_matrix(self, t) -> np.ndarray:
        """``b_jk(t)`` as an array of shape ``t.shape + (n, n)`` with zero diagonal."""
        t = np.asarray(t, dtype=float)
        n = self.n_states
        out = np.zeros(t.shape + (n, n))
        for (j, k), f in self.transition_payments.items():
            out[..., j, k] = f(t)
        return out


@dataclass(frozen=True, eq=False)
class TaxExpenseSpec:
    """Flat tax rate ``gamma`` and state-wise expense rates ``delta_j(t)``."""

    gamma: float
    expense_rates: tuple[PiecewiseConstant, ...]

    def __post_init__(self):
        g = float(self.gamma)
        if not (np.isfinite(g) and 0.0 <= g < 1.0):
            raise ValueError("gamma must lie in [0,1)")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "expense_rates", tuple(as_function(f) for f in self.expense_rates))

    @classmethod
    def none(cls, n_states: int) -> "TaxExpenseSpec":
        return cls(0.0, tuple(PiecewiseConstant.zero() for _ in range(n_states)))

    @property
    def n_states(self) -> int:
        return len(self.expense_rates)

    def deflation(self) -> DeflationSpec:
        """Engine deflation giving weight ``exp(+int delta)``."""
        return DeflationSpec(tuple(-f for f in self.expense_rates))

    def is_trivial(self) -> bool:
        return self.gamma == 0.0 and all(f.is_zero() for f in self.expense_rates)


def _check_sizes(model: MarkovModel, payments: PaymentSpec, taxexp: TaxExpenseSpec):
    if payments.n_states != model.n_states or taxexp.n_states != model.n_states:
        raise ValueError("payments and expenses must cover every state of the model")


def payment_rate(model: MarkovModel, payments: PaymentSpec, s) -> np.ndarray:
    """``c_j(s) = b_j(s) + sum_k mu_jk(s) b_jk(s)``, shape ``s.shape + (n,)``."""
    s = np.asarray(s, dtype=float)
    sojourn = np.stack([f(s) for f in payments.sojourn_rates], axis=-1)
    lump = (model.intensity_matrix(s) * payments.transition_matrix(s)).sum(axis=-1)
    return sojourn + lump


def expected_modified_cashflow(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    i: int,
    t: float,
    s: float,
    steps: int = 200,
) -> float:
    """``Y_i^{-delta}(t, s)`` with deflated probabilities from the RK4 forward solver."""
    _check_sizes(model, payments, taxexp)
    p = deflated_transitions_forward(model, taxexp.deflation(), t, s, steps)
    return float(p[i] @ payment_rate(model, payments, s))


def modified_cashflow_curve(
    model: MarkovModel,
    payments: PaymentSpec,
    taxexp: TaxExpenseSpec,
    t: float,
    nodes,
    rate_times=None,
) -> np.ndarray:
    """
    ``Y_i^{-delta}(t, s)`` for all states at each ``s`` in ``nodes``.

    ``rate_times`` (same length as ``nodes``) selects where the payment
    functions are sampled; quadrature passes a point inside the piece so that
    nodes sitting on a knot see the piece's own value. Returns
    ``(len(nodes), n)``.
    """
    _check_sizes(model, payments, taxexp)
    nodes = np.asarray(nodes, dtype=float)
    p = deflated_transitions_along(model, taxexp.deflation(), t, nodes)
    c = payment_rate(model, payments, nodes if rate_times is None else rate_times)
    return np.einsum("qij,qj->qi", p, c)


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------


class StateIntegrals(NamedTuple):
    """
    Exact ``int_0^t f_{Z(u)}(u) du`` for a table of state-wise functions.

    ``at_nodes`` has shape ``(P, n+1, m)``; ``at_jumps`` has shape ``(J, m)``
    and is evaluated at each recorded jump time.
    """

    at_nodes: np.ndarray
    at_jumps: np.ndarray


def integrate_along_states(table: PiecewiseTable, times, states, jumps) -> StateIntegrals:
    """
    Integrate state-indexed step functions along simulated paths.

    ``table`` has shape ``(n_states, m)``. With ``G_j`` the antiderivative of
    ``f_j``, the path integral to ``t`` equals ``G_{Z(t)}(t) - G_{Z(0)}(0)``
    plus ``G_from(tau) - G_to(tau)`` for every jump ``tau <= t``.
    """
    jp, jt, jf, jto = jumps
    times = np.asarray(times, dtype=float)
    n_paths, n_nodes = states.shape
    g_nodes = table.antiderivative(times)  # (n+1, S, m)
    base = g_nodes[np.arange(n_nodes)[None, :], states]  # (P, n+1, m)
    base = base - g_nodes[0][states[:, :1]]
    m = base.shape[-1]
    if len(jp) == 0:
        return StateIntegrals(base, np.zeros((0, m)))
    g_jump = table.antiderivative(jt)  # (J, S, m)
    idx = np.arange(len(jp))
    offset = g_jump[idx, jf] - g_jump[idx, jto]
    col = np.searchsorted(times, jt, side="left")
    add = np.zeros((n_paths, n_nodes + 1, m))
    np.add.at(add, (jp, col), offset)
    at_nodes = base + np.cumsum(add, axis=1)[:, :-1]
    # per-path running sum of offsets, inclusive of the jump itself
    cs = np.cumsum(offset, axis=0)
    first = np.searchsorted(jp, jp, side="left")
    running = cs - (cs[first] - offset[first])
    z0 = states[jp, 0]
    at_jumps = g_jump[idx, jto] - g_nodes[0][z0] + running
    return StateIntegrals(at_nodes, at_jumps)


def _sojourn_table(payments: PaymentSpec) -> PiecewiseTable:
    return PiecewiseTable(payments.sojourn_rates, (payments.n_states, 1))


def _expense_table(taxexp: TaxExpenseSpec) -> PiecewiseTable:
    return PiecewiseTable(taxexp.expense_rates, (taxexp.n_states, 1))


def accumulate_benefit_payments(payments: PaymentSpec, path) -> np.ndarray:
    """
    Step-wise increments of ``A^b`` along ``path``; shape ``(P, n+1)``.

    Column 0 holds ``A^b(0)``. Column ``k+1`` holds the payments in
    ``(t_k, t_{k+1}]``: the exact sojourn integral plus ``b_jk(tau)`` for every
    jump in the step.
    """
    times = path.grid.times
    states = path.states
    if payments.n_states <= int(states.max(initial=0)):
        raise ValueError("payment spec does not cover the simulated states")
    jumps = path.jumps
    soj = integrate_along_states(_sojourn_table(payments), times, states, jumps).at_nodes[..., 0]
    out = np.zeros(states.shape)
    out[:, 0] = payments.initial_premium
    out[:, 1:] = np.diff(soj, axis=1)
    jp, jt, jf, jto = jumps
    if len(jp):
        lump = payments.transition_matrix(jt)[np.arange(len(jp)), jf, jto]
        col = np.searchsorted(times, jt, side="left")
        np.add.at(out, (jp, col), lump)
    return out


class TaxExpenseIncrements(NamedTuple):
    """Per-step tax and expense payments, shape ``(P, n)``; both start at 0."""

    tax: np.ndarray
    expense: np.ndarray


def accumulate_tax_expense_payments(h0, h1, path, taxexp: TaxExpenseSpec) -> TaxExpenseIncrements:
    """
    Tax and expense payments of the holdings ``(h0, h1)`` along ``path``.

    Holdings ``h[:, k]`` are kept over ``(t_k, t_{k+1}]``. Tax is
    ``gamma * (h0 dS0 + h1 dS1)`` and expenses are ``V(t_k) * int delta(Z)``
    over the step, with the expense rate integrated exactly along the state
    path.
    """
    h0 = np.asarray(h0, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    s0 = path.savings
    s1 = path.bond_prices
    n = s0.shape[1] - 1
    if h0.shape[-1] not in (n, n + 1) or h1.shape != h0.shape:
        raise ValueError("holdings do not match the path grid")
    h0 = np.broadcast_to(h0[..., :n], s0[:, :n].shape)
    h1 = np.broadcast_to(h1[..., :n], s0[:, :n].shape)
    if taxexp.n_states <= int(path.states.max(initial=0)):
        raise ValueError("expense spec does not cover the simulated states")
    gains = h0 * np.diff(s0, axis=1) + h1 * np.diff(s1, axis=1)
    if all(f.is_zero() for f in taxexp.expense_rates):
        return TaxExpenseIncrements(taxexp.gamma * gains, np.zeros_like(gains))
    acc = integrate_along_states(_expense_table(taxexp), path.grid.times, path.states, path.jumps).at_nodes[..., 0]
    value = h0 * s0[:, :n] + h1 * s1[:, :n]
    return TaxExpenseIncrements(taxexp.gamma * gains, value * np.diff(acc, axis=1))
