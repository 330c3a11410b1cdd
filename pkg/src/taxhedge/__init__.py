"""
Risk-minimizing hedging of multi-state life insurance payments in a Vasicek
bond market with a flat tax on investment returns and state-wise expenses.
"""

__version__ = "0.1.0"

from .cashflow import (
    PaymentSpec,
    TaxExpenseSpec,
    accumulate_benefit_payments,
    accumulate_tax_expense_payments,
    expected_modified_cashflow,
)
from .functions import PiecewiseConstant
from .grid import TimeGrid
from .hedging import (
    GKWIntegrands,
    ReserveCurve,
    StrategyPoint,
    gkw_integrands,
    optimal_strategy,
    reserve,
    reserve_curve,
)
from .markov import (
    DeflationSpec,
    MarkovModel,
    deflated_transitions_backward,
    deflated_transitions_forward,
    simulate_state_path,
)
from .market_sim import (
    CostDiagnostics,
    OptimalStrategy,
    PerturbedStrategy,
    ZeroStrategy,
    after_tax_strategy_map,
    estimate_modified_risk,
    run_experiment,
    run_strategy,
    simulate_scenario,
    standard_perturbations,
    two_step_check,
)
from .scenario import Scenario, annuity, disability, term_insurance
from .scenario_io import ConfigError, ResultTable, ScenarioConfig, parse_scenario
from .term_structure import (
    BondQuote,
    VasicekParams,
    bond_price,
    bond_price_tax_scaled,
    simulate_short_rate,
)

__all__ = [
    "BondQuote",
    "ConfigError",
    "CostDiagnostics",
    "DeflationSpec",
    "GKWIntegrands",
    "MarkovModel",
    "OptimalStrategy",
    "PaymentSpec",
    "PerturbedStrategy",
    "PiecewiseConstant",
    "ReserveCurve",
    "ResultTable",
    "Scenario",
    "ScenarioConfig",
    "StrategyPoint",
    "TaxExpenseSpec",
    "TimeGrid",
    "VasicekParams",
    "ZeroStrategy",
    "accumulate_benefit_payments",
    "accumulate_tax_expense_payments",
    "after_tax_strategy_map",
    "annuity",
    "bond_price",
    "bond_price_tax_scaled",
    "deflated_transitions_backward",
    "deflated_transitions_forward",
    "disability",
    "estimate_modified_risk",
    "expected_modified_cashflow",
    "gkw_integrands",
    "optimal_strategy",
    "parse_scenario",
    "reserve",
    "reserve_curve",
    "run_experiment",
    "run_strategy",
    "simulate_scenario",
    "simulate_short_rate",
    "simulate_state_path",
    "standard_perturbations",
    "term_insurance",
    "two_step_check",
]
