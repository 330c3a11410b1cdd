"""Scenario bundles and the reference scenarios used in tests and demos."""

from __future__ import annotations

from dataclasses import dataclass

from .cashflow import PaymentSpec, TaxExpenseSpec
from .functions import PiecewiseConstant as PC
from .markov import MarkovModel
from .term_structure import VasicekParams

REFERENCE_VASICEK = VasicekParams(kappa=0.1, theta=0.03, sigma=0.01, r0=0.03)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Market, contract and tax/expense specification sharing one horizon."""

    vasicek: VasicekParams
    model: MarkovModel
    payments: PaymentSpec
    taxexp: TaxExpenseSpec

    def __post_init__(self):
        n = self.model.n_states
        if self.payments.n_states != n:
            raise ValueError("payments must cover every state")
        if self.taxexp.n_states != n:
            raise ValueError("expense rates must cover every state")

    @property
    def horizon(self) -> float:
        return self.model.horizon

    @property
    def n_states(self) -> int:
        return self.model.n_states

    def with_taxexp(self, taxexp: TaxExpenseSpec) -> "Scenario":
        return Scenario(self.vasicek, self.model, self.payments, taxexp)

    def without_tax_and_expenses(self) -> "Scenario":
        return self.with_taxexp(TaxExpenseSpec.none(self.n_states))

    def with_vasicek(self, vasicek: VasicekParams) -> "Scenario":
        return Scenario(vasicek, self.model, self.payments, self.taxexp)


def term_insurance(
    mortality: float = 0.01,
    benefit: float = 1.0,
    horizon: float = 10.0,
    gamma: float = 0.153,
    expense_alive: float = 0.005,
    vasicek: VasicekParams = REFERENCE_VASICEK,
    premium_rate: float = 0.0,
    initial_premium: float = 0.0,
) -> Scenario:
    """Two states (alive, dead); ``benefit`` paid on death before ``horizon``."""
    model = MarkovModel(2, {(0, 1): mortality}, horizon, ("alive", "dead"))
    payments = PaymentSpec(initial_premium, (-premium_rate, 0.0), {(0, 1): benefit})
    taxexp = TaxExpenseSpec(gamma, (expense_alive, 0.0))
    return Scenario(vasicek, model, payments, taxexp)


def annuity(
    rate: float = 1.0,
    horizon: float = 10.0,
    gamma: float = 0.153,
    expense: float = 0.003,
    vasicek: VasicekParams = REFERENCE_VASICEK,
    initial_premium: float = 0.0,
) -> Scenario:
    """Single state paying ``rate`` continuously; no insurance risk."""
    model = MarkovModel(1, {}, horizon, ("active",))
    payments = PaymentSpec(initial_premium, (rate,))
    taxexp = TaxExpenseSpec(gamma, (expense,))
    return Scenario(vasicek, model, payments, taxexp)


def disability(
    horizon: float = 10.0,
    gamma: float = 0.153,
    vasicek: VasicekParams = REFERENCE_VASICEK,
) -> Scenario:
    """
    Four states (active, disabled, dead, lapsed) with age-banded intensities.

    Premiums are paid while active, a disability annuity while disabled, and
    a death benefit on death from either living state.
    """
    mu = {
        (0, 1): PC([0.0, 4.0, 7.0, horizon], [0.02, 0.035, 0.05]),
        (0, 2): PC([0.0, 5.0, horizon], [0.005, 0.009]),
        (0, 3): PC([0.0, 3.0, horizon], [0.04, 0.02]),
        (1, 0): PC([0.0, 5.0, horizon], [0.3, 0.15]),
        (1, 2): PC([0.0, 5.0, horizon], [0.02, 0.03]),
    }
    model = MarkovModel(4, mu, horizon, ("active", "disabled", "dead", "lapsed"))
    payments = PaymentSpec(
        0.0,
        (-0.05, PC([0.0, 6.0, horizon], [1.0, 0.8]), 0.0, 0.0),
        {(0, 2): 1.0, (1, 2): 1.0, (0, 3): PC([0.0, 3.0, horizon], [0.0, 0.05])},
    )
    taxexp = TaxExpenseSpec(gamma, (0.002, PC([0.0, 5.0, horizon], [0.004, 0.006]), 0.0, 0.0))
    return Scenario(vasicek, model, payments, taxexp)
