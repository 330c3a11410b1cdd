"""
Joint simulation of rates, contract states and assets, and the cost accounting
of trading strategies in the presence of taxes and expenses.

Discrete conventions
--------------------
Holdings ``h[:, k]`` are chosen at ``t_k`` and kept over ``(t_k, t_{k+1}]``;
``V[:, k] = h0 S0 + h1 S1`` at ``t_k`` is the portfolio value after
rebalancing and after payments. Over a step the undiscounted cost grows by

    V_{k+1} - h_k . S_{k+1} + gamma h_k . dS + V_k int delta + dA^b

``C*`` discounts this with ``1/S0`` and ``C~`` with ``1/S0-check``, both taken
at ``t_{k+1}`` for the portfolio part. Sojourn payments are discounted at the
step midpoint (log-linear), transition payments at the jump time. Expense
rates and sojourn payments are integrated exactly along the state path.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .cashflow import (
    PaymentSpec,
    _expense_table,
    _sojourn_table,
    accumulate_tax_expense_payments,
    integrate_along_states,
)
from .functions import PiecewiseConstant, PiecewiseTable
from .grid import TimeGrid
from .hedging import GridKernel
from .markov import simulate_state_path
from .paths import ScenarioPaths
from .rng import spawn
from .scenario import Scenario
from .term_structure import bond_price, bond_variance_integral, simulate_short_rate

BATCH_SIZE = 2000


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _as_grid(grid) -> TimeGrid:
    return grid if isinstance(grid, TimeGrid) else TimeGrid(np.asarray(grid, dtype=float))


def simulate_scenario(scenario: Scenario, grid, seed=None, n_paths: int = 1) -> ScenarioPaths:
    """
    Simulate ``n_paths`` joint trajectories.

    The short rate is exact OU; the state process is simulated independently
    by thinning from two child seeds of ``seed``. The after-tax bond follows
    its exact log-dynamics

        d log S1-check = (1 - g) d log S1 + (1/2)(1 - g) g (sigma B(t, T))^2 dt - delta dt.
    """
    grid = _as_grid(grid)
    horizon = scenario.horizon
    if abs(grid.horizon - horizon) > 1e-12 * max(1.0, horizon):
        raise ValueError("grid must end at the scenario horizon (bond maturity)")
    rate_seed, state_seed = spawn(seed, 2)
    params = scenario.vasicek
    short = simulate_short_rate(params, grid, rate_seed, n_paths)
    sp = simulate_state_path(scenario.model, grid, 0, state_seed, n_paths)
    times = grid.times
    s0 = np.exp(short.integrated_rate)
    s1 = np.asarray(bond_price(params, times, short.rates, horizon).value)
    gamma = scenario.taxexp.gamma
    jumps = (sp.jump_path, sp.jump_time, sp.jump_from, sp.jump_to)
    expense = integrate_along_states(_expense_table(scenario.taxexp), times, sp.states, jumps)
    acc_exp = expense.at_nodes[..., 0]
    s0_check = np.exp((1.0 - gamma) * short.integrated_rate - acc_exp)
    qv = bond_variance_integral(params, grid, horizon)
    dlog = (1.0 - gamma) * np.diff(np.log(s1), axis=1) + 0.5 * (1.0 - gamma) * gamma * qv
    dlog = dlog - np.diff(acc_exp, axis=1)
    log_s1c = np.log(s1[:, :1]) + np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(dlog, axis=1)], axis=1
    )
    return ScenarioPaths(
        grid=grid,
        gamma=gamma,
        rates=short.rates,
        brownian_increments=short.brownian_increments,
        accumulated_rate=short.integrated_rate,
        states=sp.states,
        jump_path=sp.jump_path,
        jump_time=sp.jump_time,
        jump_from=sp.jump_from,
        jump_to=sp.jump_to,
        bond_prices=s1,
        savings=s0,
        after_tax_savings=s0_check,
        after_tax_bond=np.exp(log_s1c),
        accumulated_expense_rate=acc_exp,
        expense_rate_at_jumps=expense.at_jumps[:, 0],
    )


class DiscountedBenefits(NamedTuple):
    """``A^b(0)`` and per-step discounted benefit payments, shape ``(P, n)``."""

    initial: float
    steps: np.ndarray


def discounted_benefits(
    paths: ScenarioPaths, payments: PaymentSpec, log_disc: np.ndarray, log_disc_jumps: np.ndarray
) -> DiscountedBenefits:
    """Benefit increments weighted by ``exp(log_disc)``."""
    times = paths.grid.times
    soj = integrate_along_states(_sojourn_table(payments), times, paths.states, paths.jumps)
    soj = np.diff(soj.at_nodes[..., 0], axis=1)
    mid = np.exp(0.5 * (log_disc[:, :-1] + log_disc[:, 1:]))
    steps = soj * mid
    jp, jt, jf, jto = paths.jumps
    if len(jp):
        lump = payments.transition_matrix(jt)[np.arange(len(jp)), jf, jto]
        col = np.searchsorted(times, jt, side="left") - 1
        np.add.at(steps, (jp, col), lump * np.exp(log_disc_jumps))
    return DiscountedBenefits(payments.initial_premium, steps)


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class HedgeContext:
    """
    Paths plus everything strategy-independent: reserves and optimal bond
    holdings for every state, discounted benefits, and per-step asset
    coefficients used by the cost reductions.
    """

    paths: ScenarioPaths
    scenario: Scenario
    reserves: np.ndarray  # (P, n+1, S)
    bond_holdings: np.ndarray  # (P, n+1, S)
    optimal_value: np.ndarray = field(init=False, repr=False)
    optimal_bond_holding: np.ndarray = field(init=False, repr=False)
    benefits_modified: DiscountedBenefits = field(init=False, repr=False)
    benefits_classic: DiscountedBenefits = field(init=False, repr=False)
    _coef: dict = field(init=False, repr=False)

    def __post_init__(self):
        p, sc = self.paths, self.scenario
        st = p.states.astype(np.intp)[..., None]
        self.optimal_value = np.take_along_axis(self.reserves, st, axis=-1)[..., 0]
        self.optimal_bond_holding = np.take_along_axis(self.bond_holdings, st, axis=-1)[..., 0]
        self.benefits_modified = discounted_benefits(
            p, sc.payments, p.log_modified_discount, p.log_modified_discount_at_jumps()
        )
        self.benefits_classic = discounted_benefits(
            p, sc.payments, -p.accumulated_rate, -p.rate_integral_at_jumps()
        )
        self._coef = {}

    @classmethod
    def build(cls, paths: ScenarioPaths, scenario: Scenario, kernel: GridKernel) -> "HedgeContext":
        if not np.array_equal(kernel.times, paths.grid.times):
            raise ValueError("kernel grid does not match the path grid")
        v, h = kernel.evaluate(paths.rates)
        return cls(paths, scenario, v, h)

    def coefficients(self) -> dict:
        """
        Step weights such that, with ``V = h0 S0 + h1 S1``,

            C~(T) - C~(0) = sum d_mod V_{k+1} + sum m0 h0_k + sum m1 h1_k + benefits
            A*(T) - A(0)  = sum w0 h0_k + sum w1 h1_k + benefits
        """
        if not self._coef:
            p, g = self.paths, self.scenario.taxexp.gamma
            s0, s1 = p.savings, p.bond_prices
            de = np.diff(p.accumulated_expense_rate, axis=1)
            ds0, ds1 = np.diff(s0, axis=1), np.diff(s1, axis=1)
            d_mod = np.exp(p.log_modified_discount[:, 1:])
            d_s0 = 1.0 / s0[:, 1:]
            self._coef = dict(
                d_mod=d_mod,
                m0=d_mod * (-s0[:, 1:] + g * ds0 + s0[:, :-1] * de),
                m1=d_mod * (-s1[:, 1:] + g * ds1 + s1[:, :-1] * de),
                w0=d_s0 * (g * ds0 + s0[:, :-1] * de),
                w1=d_s0 * (g * ds1 + s1[:, :-1] * de),
            )
        return self._coef


def _rowdot(a, b):
    return np.einsum("pk,pk->p", a, b)


def strategy_totals(ctx: HedgeContext, h0: np.ndarray, h1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``C~(T) - C~(0)`` and ``A*(T)`` per path, without building cost paths."""
    p = ctx.paths
    c = ctx.coefficients()
    value = h0 * p.savings + h1 * p.bond_prices
    cost = (
        _rowdot(c["d_mod"], value[:, 1:])
        + _rowdot(c["m0"], h0[:, :-1])
        + _rowdot(c["m1"], h1[:, :-1])
        + ctx.benefits_modified.steps.sum(axis=1)
    )
    total = (
        ctx.scenario.payments.initial_premium
        + ctx.benefits_classic.steps.sum(axis=1)
        + _rowdot(c["w0"], h0[:, :-1])
        + _rowdot(c["w1"], h1[:, :-1])
    )
    return cost, total


class Strategy:
    """Supplier of predictable holdings ``(h0, h1)``, each of shape ``(P, n+1)``."""

    name = "strategy"

    def holdings(self, ctx: HedgeContext) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


def _cash_from_value(ctx: HedgeContext, value, h1):
    p = ctx.paths
    return (value - h1 * p.bond_prices) / p.savings


class OptimalStrategy(Strategy):
    """The risk-minimizing strategy; holdings at ``t_k`` use ``Z(t_k)`` and ``r(t_k)``."""

    name = "optimal"

    def holdings(self, ctx):
        h1 = ctx.optimal_bond_holding
        return _cash_from_value(ctx, ctx.optimal_value, h1), h1


class ZeroStrategy(Strategy):
    name = "zero"

    def holdings(self, ctx):
        z = np.zeros_like(ctx.paths.savings)
        return z, z.copy()


@dataclass(eq=False)
class PerturbedStrategy(Strategy):
    """
    Optimal strategy with a bond-holding bump and an optional initial value shift.

    ``bump(ctx, h1_opt) -> dh1`` returns an array of shape ``(P, n+1)``; the
    bump is switched off at the horizon. The portfolio value equals the
    optimal one except for ``value_shift`` added at time 0, so the strategy
    stays 0-admissible.
    """

    name: str
    bump: Callable[[HedgeContext, np.ndarray], np.ndarray] | None = None
    value_shift: float = 0.0

    def holdings(self, ctx):
        h1 = ctx.optimal_bond_holding.copy()
        if self.bump is not None:
            d = np.asarray(self.bump(ctx, h1), dtype=float)
            d = np.broadcast_to(d, h1.shape).copy()
            d[:, -1] = 0.0
            h1 = h1 + d
        value = ctx.optimal_value.copy()
        value[:, 0] += self.value_shift
        return _cash_from_value(ctx, value, h1), h1


def standard_perturbations(scale: float = 1.0, value_scale: float = 0.01) -> list[PerturbedStrategy]:
    """
    Twenty-four perturbations of the optimal strategy.

    Bumps are relative to the optimal holding at time 0 (``a``) or to the
    running optimal holding. ``scale`` multiplies every bump.
    """

    def a0(ctx, h):
        return float(np.mean(np.abs(h[:, 0]))) or 1.0

    def tfrac(ctx):
        t = ctx.paths.grid.times
        return (t / t[-1])[None, :]

    def rdev(ctx):
        v = ctx.scenario.vasicek
        sd = v.sigma / np.sqrt(2.0 * v.kappa) or 1.0  # stationary standard deviation
        return (ctx.paths.rates - v.theta) / sd

    out: list[PerturbedStrategy] = []
    for eps in (0.02, 0.1, 0.5):
        for sign in (1, -1):
            out.append(PerturbedStrategy(f"relative{sign * eps:+g}", lambda c, h, e=sign * eps * scale: e * h))
            out.append(
                PerturbedStrategy(f"constant{sign * eps:+g}", lambda c, h, e=sign * eps * scale: e * a0(c, h))
            )
    for eps in (0.1, -0.1):
        out.append(
            PerturbedStrategy(f"ramp_up{eps:+g}", lambda c, h, e=eps * scale: e * a0(c, h) * tfrac(c))
        )
        out.append(
            PerturbedStrategy(
                f"ramp_down{eps:+g}", lambda c, h, e=eps * scale: e * a0(c, h) * (1 - tfrac(c))
            )
        )
    out.append(PerturbedStrategy("sign_flip", lambda c, h: -2.0 * h))
    out.append(PerturbedStrategy("cash_only", lambda c, h: -h))
    out.append(PerturbedStrategy("rate_linked+0.1", lambda c, h, e=0.1 * scale: e * a0(c, h) * rdev(c)))
    out.append(
        PerturbedStrategy(
            "oscillating+0.1",
            lambda c, h, e=0.1 * scale: e * a0(c, h) * np.sin(2 * np.pi * tfrac(c)),
        )
    )
    out.append(
        PerturbedStrategy(
            "state_linked+0.2",
            lambda c, h, e=0.2 * scale: e * a0(c, h) * (c.paths.states != 0),
        )
    )
    out.append(PerturbedStrategy("value+", None, value_shift=value_scale))
    out.append(PerturbedStrategy("value-", None, value_shift=-value_scale))
    out.append(
        PerturbedStrategy("relative+0.1_value+", lambda c, h, e=0.1 * scale: e * h, value_shift=value_scale)
    )
    return out


# ---------------------------------------------------------------------------
# Cost accounting
# ---------------------------------------------------------------------------


def _transition_pairs(scenario: Scenario):
    return sorted(key for key, f in scenario.model.intensities.items() if not f.is_zero())


def residual_increments(ctx: HedgeContext) -> np.ndarray:
    """
    ``sum_jk v_jk(t_k) (dN_jk - compensator)`` per step, shape ``(P, n)``.

    ``v_jk`` is evaluated at the left end of each step.
    """
    paths, scenario = ctx.paths, ctx.scenario
    pairs = _transition_pairs(scenario)
    n_p, n_nodes = paths.states.shape
    out = np.zeros((n_p, n_nodes - 1))
    if not pairs:
        return out
    times = paths.grid.times
    n_s = scenario.n_states
    zero = PiecewiseConstant.zero()
    funcs = []
    for j in range(n_s):
        for pair in pairs:
            funcs.append(scenario.model.intensities[pair] if pair[0] == j else zero)
    table = PiecewiseTable(funcs, (n_s, len(pairs)))
    comp = np.diff(integrate_along_states(table, times, paths.states, paths.jumps).at_nodes, axis=1)
    counts = np.zeros_like(comp)
    jp, jt, jf, jto = paths.jumps
    if len(jp):
        index = {pair: q for q, pair in enumerate(pairs)}
        pid = np.array([index[(a, b)] for a, b in zip(jf.tolist(), jto.tolist())], dtype=int)
        col = np.searchsorted(times, jt, side="left") - 1
        np.add.at(counts, (jp, col, pid), 1.0)
    disc = np.exp(paths.log_modified_discount[:, :-1])
    res = ctx.reserves[:, :-1]
    bjk = scenario.payments.transition_matrix(times[:-1])
    for q, (j, k) in enumerate(pairs):
        v = disc * (bjk[:, j, k][None, :] + res[..., k] - res[..., j])
        out += v * (counts[..., q] - comp[..., q])
    return out


@dataclass(eq=False)
class CostDiagnostics:
    """
    Cost processes of one strategy on a batch of paths.

    Node arrays are ``(P, n+1)``, step arrays ``(P, n)``.
    """

    times: np.ndarray
    value: np.ndarray
    modified_cost: np.ndarray
    discounted_cost: np.ndarray
    tax: np.ndarray
    expense: np.ndarray
    benefits: np.ndarray
    total_payments_discounted: np.ndarray
    residual: np.ndarray | None = None

    @property
    def initial_cost(self) -> np.ndarray:
        return self.modified_cost[:, 0]

    @property
    def terminal_cost(self) -> np.ndarray:
        return self.modified_cost[:, -1]

    @property
    def cost_change(self) -> np.ndarray:
        """``C~(T) - C~(0)`` per path."""
        return self.modified_cost[:, -1] - self.modified_cost[:, 0]

    @property
    def risk_estimate(self) -> "Estimate":
        """Monte Carlo ``R~(h, 0)`` over the batch."""
        return mean_estimate(self.cost_change**2)


def run_strategy(
    paths: ScenarioPaths,
    strategy: Strategy,
    scenario: Scenario,
    ctx: HedgeContext | None = None,
    kernel: GridKernel | None = None,
    quad_points: int = 200,
) -> CostDiagnostics:
    """Accumulate undiscounted, discounted and modified costs of ``strategy``."""
    if ctx is None:
        if kernel is None:
            kernel = GridKernel.build(
                scenario.model, scenario.payments, scenario.taxexp, scenario.vasicek,
                paths.grid.times, quad_points,
            )
        ctx = HedgeContext.build(paths, scenario, kernel)
    if ctx.paths is not paths:
        raise ValueError("context was built for different paths")
    h0, h1 = strategy.holdings(ctx)
    if h0.shape != paths.savings.shape or h1.shape != paths.savings.shape:
        raise ValueError("strategy holdings do not match the path grid")
    s0, s1 = paths.savings, paths.bond_prices
    value = h0 * s0 + h1 * s1
    te = accumulate_tax_expense_payments(h0, h1, paths, scenario.taxexp)
    before = h0[:, :-1] * s0[:, 1:] + h1[:, :-1] * s1[:, 1:]
    port = value[:, 1:] - before + te.tax + te.expense

    log_mod = paths.log_modified_discount
    log_s0 = -paths.accumulated_rate
    ben_mod, ben_s0 = ctx.benefits_modified, ctx.benefits_classic
    c0 = value[:, 0] + scenario.payments.initial_premium
    d_mod = np.exp(log_mod[:, 1:]) * port + ben_mod.steps
    d_star = np.exp(log_s0[:, 1:]) * port + ben_s0.steps
    modified = np.concatenate([c0[:, None], c0[:, None] + np.cumsum(d_mod, axis=1)], axis=1)
    discounted = np.concatenate([c0[:, None], c0[:, None] + np.cumsum(d_star, axis=1)], axis=1)
    total = (
        scenario.payments.initial_premium
        + ben_s0.steps.sum(axis=1)
        + (np.exp(log_s0[:, 1:]) * (te.tax + te.expense)).sum(axis=1)
    )
    return CostDiagnostics(
        times=paths.grid.times,
        value=value,
        modified_cost=modified,
        discounted_cost=discounted,
        tax=te.tax,
        expense=te.expense,
        benefits=ben_s0.steps,
        total_payments_discounted=total,
        residual=residual_increments(ctx),
    )


# ---------------------------------------------------------------------------
# After-tax market
# ---------------------------------------------------------------------------


def after_tax_strategy_map(paths: ScenarioPaths, h0_check, h1_check) -> tuple[np.ndarray, np.ndarray]:
    """
    Map after-tax holdings to before-tax holdings with the same value.

    ``h1 = (S1-check / S1) h1-check`` and ``h0`` is chosen so that
    ``h0 S0 + h1 S1 = h0-check S0-check + h1-check S1-check``.
    """
    s0, s1 = paths.savings, paths.bond_prices
    s0c, s1c = paths.after_tax_savings, paths.after_tax_bond
    if np.any(s0 <= 0) or np.any(s1 <= 0):
        raise FloatingPointError("non-positive asset price on a simulated path")
    h1 = s1c / s1 * np.asarray(h1_check)
    value = np.asarray(h0_check) * s0c + np.asarray(h1_check) * s1c
    h0 = (value - h1 * s1) / s0
    return h0, h1


def after_tax_optimal_holdings(paths: ScenarioPaths, scenario: Scenario, kernels) -> tuple[np.ndarray, np.ndarray]:
    """
    Risk-minimizing holdings in the after-tax market with ``S0-check`` as numeraire.

    The bond holding is the ratio of the diffusion coefficients of the
    modified intrinsic value ``V / S0-check`` and of ``S1-check*``:

        h1-check = V_r F(t, r, T) / (S0-check (1 - g) S1-check* F_r(t, r, T))

    with ``V_r`` from the tax-scaled bond sensitivities.
    """
    g = scenario.taxexp.gamma
    n_p, n_t = paths.rates.shape
    if len(kernels) != n_t:
        raise ValueError("need one kernel per grid node")
    states = paths.states.astype(np.intp)
    value = np.zeros((n_p, n_t))
    dv = np.zeros((n_p, n_t))
    for k, kern in enumerate(kernels):
        r = paths.rates[:, k]
        value[:, k] = np.take_along_axis(kern.reserves(r), states[:, k, None], axis=1)[:, 0]
        dv[:, k] = np.take_along_axis(kern.reserve_rate_sensitivity(r), states[:, k, None], axis=1)[:, 0]
    times = paths.grid.times
    quote = bond_price(scenario.vasicek, times, paths.rates, scenario.horizon)
    f, f_r = np.asarray(quote.value), np.asarray(quote.rate_sensitivity)
    disc = 1.0 / paths.after_tax_savings
    s1c_star = paths.after_tax_discounted_bond
    with np.errstate(divide="ignore", invalid="ignore"):
        h1c = np.where(f_r != 0.0, disc * dv * f / ((1.0 - g) * s1c_star * f_r), 0.0)
    h0c = disc * value - h1c * s1c_star
    return h0c, h1c


# ---------------------------------------------------------------------------
# Batched experiments
# ---------------------------------------------------------------------------


def thread_count(threads: int | None = None) -> int:
    """Worker count: explicit value, else ``TAXHEDGE_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("TAXHEDGE_THREADS", "").strip()
        threads = int(env) if env else 1
    return max(1, int(threads))


class Estimate(NamedTuple):
    value: float
    standard_error: float
    n_paths: int


def mean_estimate(x) -> Estimate:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two paths for a standard error")
    return Estimate(float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(x.size)), int(x.size))


@dataclass(eq=False)
class ExperimentResult:
    """Per-path outputs concatenated in batch order."""

    cost_change: dict[str, np.ndarray]
    total_payments: dict[str, np.ndarray]
    residual: np.ndarray
    bond_martingale: np.ndarray
    after_tax_bond_martingale: np.ndarray
    cross_variation: np.ndarray
    initial_value: float
    initial_premium: float
    n_paths: int

    def risk(self, name: str = "optimal") -> Estimate:
        return mean_estimate(self.cost_change[name] ** 2)

    def residual_risk(self) -> Estimate:
        return mean_estimate(self.residual**2)


def _batch_sizes(n_paths: int, batch_size: int) -> list[int]:
    full, rest = divmod(n_paths, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def run_experiment(
    scenario: Scenario,
    grid,
    n_paths: int,
    seed,
    strategies: Mapping[str, Strategy] | None = None,
    quad_points: int = 200,
    kernel: GridKernel | None = None,
    threads: int | None = None,
    batch_size: int = BATCH_SIZE,
) -> ExperimentResult:
    """
    Simulate ``n_paths`` in fixed-size batches and evaluate ``strategies``.

    Batch ``b`` uses the ``b``-th child of ``SeedSequence(seed)``, so results
    are identical for any worker count.
    """
    grid = _as_grid(grid)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if strategies is None:
        strategies = {"optimal": OptimalStrategy()}
    if kernel is None:
        kernel = GridKernel.build(
            scenario.model, scenario.payments, scenario.taxexp, scenario.vasicek, grid.times, quad_points
        )
    sizes = _batch_sizes(n_paths, batch_size)
    seeds = spawn(seed, len(sizes))

    def work(b):
        paths = simulate_scenario(scenario, grid, seeds[b], sizes[b])
        ctx = HedgeContext.build(paths, scenario, kernel)
        cost, total = {}, {}
        for name, strat in strategies.items():
            h0, h1 = strat.holdings(ctx)
            cost[name], total[name] = strategy_totals(ctx, h0, h1)
        dl = residual_increments(ctx)
        ds = np.diff(paths.discounted_bond, axis=1)
        return dict(
            cost=cost,
            total=total,
            residual=dl.sum(axis=1),
            bond=paths.discounted_bond[:, -1] - paths.discounted_bond[:, 0],
            after_tax=paths.after_tax_discounted_bond[:, -1] - paths.after_tax_discounted_bond[:, 0],
            cross=(dl * ds).sum(axis=1),
        )

    workers = min(thread_count(threads), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(b) for b in range(len(sizes))]

    cat = lambda key: np.concatenate([p[key] for p in parts])  # noqa: E731
    names = list(strategies)
    v0 = float(kernel.evaluate(np.full((1, len(grid)), scenario.vasicek.r0))[0][0, 0, 0])
    return ExperimentResult(
        cost_change={n: np.concatenate([p["cost"][n] for p in parts]) for n in names},
        total_payments={n: np.concatenate([p["total"][n] for p in parts]) for n in names},
        residual=cat("residual"),
        bond_martingale=cat("bond"),
        after_tax_bond_martingale=cat("after_tax"),
        cross_variation=cat("cross"),
        initial_value=v0,
        initial_premium=scenario.payments.initial_premium,
        n_paths=n_paths,
    )


def estimate_modified_risk(
    scenario: Scenario,
    strategy: Strategy,
    grid,
    n_paths: int,
    seed,
    quad_points: int = 200,
    threads: int | None = None,
) -> Estimate:
    """Monte Carlo estimate of ``E[(C~(T) - C~(0))^2]`` with its standard error."""
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    res = run_experiment(
        scenario, grid, n_paths, seed, {"s": strategy}, quad_points=quad_points, threads=threads
    )
    return mean_estimate(res.cost_change["s"] ** 2)


class TwoStepReport(NamedTuple):
    """``E[A*(T)]`` against ``A(0) + V_0(0)``."""

    simulated: float
    standard_error: float
    intrinsic: float
    gap: float
    n_paths: int

    @property
    def z_score(self) -> float:
        return self.gap / self.standard_error if self.standard_error > 0 else 0.0

    @property
    def consistent(self) -> bool:
        return abs(self.gap) <= 3.0 * self.standard_error + 1e-12


def two_step_report(result: ExperimentResult, name: str = "optimal") -> TwoStepReport:
    est = mean_estimate(result.total_payments[name])
    target = result.initial_premium + result.initial_value
    return TwoStepReport(est.value, est.standard_error, target, est.value - target, est.n_paths)


def two_step_check(
    scenario: Scenario,
    grid,
    n_paths: int,
    seed,
    quad_points: int = 200,
    threads: int | None = None,
) -> TwoStepReport:
    """
    Classic discounted total payments ``A*(T)`` of benefits, taxes and
    expenses under the optimal strategy, compared with ``A(0) + V_0(0)``.
    """
    res = run_experiment(scenario, grid, n_paths, seed, quad_points=quad_points, threads=threads)
    return two_step_report(res)
