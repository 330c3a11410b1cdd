"""
Scenario configuration, result tables and the batch runners behind the CLI.

A configuration is a JSON document validated against ``SCHEMA`` and then
checked semantically (state names, segment ordering, parameter ranges). All
problems are collected and reported together with the path of the offending
field, and nothing is computed from an invalid document.

Step functions are written either as a single number (constant on
``[0, T]``) or as a list of ``{"start", "end", "value"}`` segments; gaps
between segments are zero.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, NamedTuple, Sequence

import jsonschema
import numpy as np

from .cashflow import PaymentSpec, TaxExpenseSpec
from .functions import PiecewiseConstant
from .grid import TimeGrid
from .hedging import GridKernel, build_kernels
from .markov import MarkovModel
from .market_sim import (
    HedgeContext,
    OptimalStrategy,
    mean_estimate,
    run_experiment,
    run_strategy,
    simulate_scenario,
    standard_perturbations,
    two_step_report,
)
from .scenario import Scenario
from .term_structure import VasicekParams

__all__ = [
    "SCHEMA",
    "OUTPUTS",
    "ConfigError",
    "NumericalError",
    "Segment",
    "FlowEntry",
    "ScenarioConfig",
    "parse_scenario",
    "ResultTable",
    "HedgeReport",
    "run_reserves",
    "run_hedge_report",
    "run_two_step",
    "config_digest",
    "write_outputs",
]

OUTPUTS = ("reserves", "strategy_paths", "risk_report", "two_step")

DEFAULTS = dict(grid=1000, quadrature=200, paths=100_000, seed=0, illustration_paths=3, perturbation_scale=1.0)

_STEP_FUNCTION = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["start", "end", "value"],
                "additionalProperties": False,
                "properties": {
                    "start": {"type": "number"},
                    "end": {"type": "number"},
                    "value": {"type": "number"},
                },
            },
        },
    ]
}

_STATE_NAME = {"type": "string", "minLength": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "taxhedge scenario",
    "type": "object",
    "required": ["horizon", "vasicek", "markov", "payments"],
    "additionalProperties": False,
    "properties": {
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "vasicek": {
            "type": "object",
            "required": ["kappa", "theta", "sigma", "r0"],
            "additionalProperties": False,
            "properties": {
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "theta": {"type": "number"},
                "sigma": {"type": "number", "minimum": 0},
                "r0": {"type": "number"},
            },
        },
        "markov": {
            "type": "object",
            "required": ["states"],
            "additionalProperties": False,
            "properties": {
                "states": {"type": "array", "items": _STATE_NAME, "minItems": 1, "uniqueItems": True},
                "intensities": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to", "rate"],
                        "additionalProperties": False,
                        "properties": {"from": _STATE_NAME, "to": _STATE_NAME, "rate": _STEP_FUNCTION},
                    },
                },
            },
        },
        "payments": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "initial_premium": {"type": "number"},
                "sojourn": {"type": "object", "additionalProperties": _STEP_FUNCTION},
                "transitions": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to", "amount"],
                        "additionalProperties": False,
                        "properties": {"from": _STATE_NAME, "to": _STATE_NAME, "amount": _STEP_FUNCTION},
                    },
                },
            },
        },
        "tax_expense": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number"},
                "expenses": {"type": "object", "additionalProperties": _STEP_FUNCTION},
            },
        },
        "grid": {"type": "integer", "minimum": 1},
        "quadrature": {"type": "integer", "minimum": 2},
        "monte_carlo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "paths": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            },
        },
        "outputs": {"type": "array", "items": {"enum": list(OUTPUTS)}, "uniqueItems": True},
        "reporting": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "rate_scenarios": {"type": "array", "items": {"type": "number"}},
                "illustration_paths": {"type": "integer", "minimum": 0},
                "perturbation_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ConfigError(ValueError):
    """Validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class NumericalError(ArithmeticError):
    """A computed output contains non-finite values."""


class Segment(NamedTuple):
    start: float
    end: float
    value: float


class FlowEntry(NamedTuple):
    """Step function attached to a transition ``source -> target``."""

    source: str
    target: str
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, fully defaulted scenario. The first state is the initial state."""

    horizon: float
    vasicek: VasicekParams
    states: tuple[str, ...]
    intensities: tuple[FlowEntry, ...]
    initial_premium: float
    sojourn: tuple[tuple[Segment, ...], ...]
    transitions: tuple[FlowEntry, ...]
    gamma: float
    expenses: tuple[tuple[Segment, ...], ...]
    grid: int = DEFAULTS["grid"]
    quadrature: int = DEFAULTS["quadrature"]
    paths: int = DEFAULTS["paths"]
    seed: int = DEFAULTS["seed"]
    outputs: tuple[str, ...] = OUTPUTS
    reporting_steps: int | None = None
    rate_scenarios: tuple[float, ...] = ()
    illustration_paths: int = DEFAULTS["illustration_paths"]
    perturbation_scale: float = DEFAULTS["perturbation_scale"]

    # -- conversions -------------------------------------------------------

    def to_dict(self) -> dict:
        """Document form; ``parse_scenario`` of its JSON returns an equal config."""

        def fn(segs):
            return [{"start": s.start, "end": s.end, "value": s.value} for s in segs]

        v = self.vasicek
        out = {
            "horizon": self.horizon,
            "vasicek": {"kappa": v.kappa, "theta": v.theta, "sigma": v.sigma, "r0": v.r0},
            "markov": {
                "states": list(self.states),
                "intensities": [{"from": e.source, "to": e.target, "rate": fn(e.segments)} for e in self.intensities],
            },
            "payments": {
                "initial_premium": self.initial_premium,
                "sojourn": {name: fn(s) for name, s in zip(self.states, self.sojourn)},
                "transitions": [
                    {"from": e.source, "to": e.target, "amount": fn(e.segments)} for e in self.transitions
                ],
            },
            "tax_expense": {
                "gamma": self.gamma,
                "expenses": {name: fn(s) for name, s in zip(self.states, self.expenses)},
            },
            "grid": self.grid,
            "quadrature": self.quadrature,
            "monte_carlo": {"paths": self.paths, "seed": self.seed},
            "outputs": list(self.outputs),
            "reporting": {
                "rate_scenarios": list(self.rate_scenarios),
                "illustration_paths": self.illustration_paths,
                "perturbation_scale": self.perturbation_scale,
            },
        }
        if self.reporting_steps is not None:
            out["reporting"]["steps"] = self.reporting_steps
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def with_overrides(self, seed=None, paths=None, grid=None) -> "ScenarioConfig":
        """Apply command-line overrides and re-validate the result."""
        changes = {k: v for k, v in dict(seed=seed, paths=paths, grid=grid).items() if v is not None}
        if not changes:
            return self
        return parse_scenario(json.dumps(replace(self, **changes).to_dict()))

    def _index(self, name: str) -> int:
        return self.states.index(name)

    def scenario(self) -> Scenario:
        n = len(self.states)
        t_end = self.horizon
        model = MarkovModel(
            n,
            {(self._index(e.source), self._index(e.target)): _step(e.segments) for e in self.intensities},
            t_end,
            self.states,
        )
        payments = PaymentSpec(
            self.initial_premium,
            tuple(_step(s) for s in self.sojourn),
            {(self._index(e.source), self._index(e.target)): _step(e.segments) for e in self.transitions},
        )
        taxexp = TaxExpenseSpec(self.gamma, tuple(_step(s) for s in self.expenses))
        return Scenario(self.vasicek, model, payments, taxexp)

    def time_grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.horizon, self.grid)

    def reporting_times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, (self.reporting_steps or self.grid) + 1)


def _step(segments: Sequence[Segment]) -> PiecewiseConstant:
    """Step function with zero in every gap and outside the segments."""
    if not segments:
        return PiecewiseConstant.zero()
    knots = [segments[0].start]
    values = []
    for seg in segments:
        if seg.start > knots[-1]:
            knots.append(seg.start)
            values.append(0.0)
        knots.append(seg.end)
        values.append(seg.value)
    return PiecewiseConstant(knots, values)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _where(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<document>"


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path, message: str):
        self.errors.append(f"{_where(path)}: {message}")


def _segments(raw, horizon: float, path, errs: _Collector, nonneg: bool) -> tuple[Segment, ...]:
    if isinstance(raw, (int, float)):
        raw = [{"start": 0.0, "end": horizon, "value": raw}]
    segs = []
    prev_end = -math.inf
    for k, item in enumerate(raw):
        seg = Segment(float(item["start"]), float(item["end"]), float(item["value"]))
        where = list(path) + [k]
        label = f"segment [{seg.start:g}, {seg.end:g})"
        if seg.start < 0:
            errs.add(where, f"{label} starts before 0")
        if seg.end > horizon:
            errs.add(where, f"{label} ends after the horizon {horizon:g}")
        if seg.end <= seg.start:
            errs.add(where, f"{label} has non-increasing breakpoints")
        elif seg.start < prev_end:
            errs.add(where, f"{label} overlaps the previous segment; breakpoints must be increasing")
        if nonneg and seg.value < 0:
            errs.add(where, f"{label} has negative value {seg.value:g}")
        prev_end = max(prev_end, seg.end)
        segs.append(seg)
    return tuple(segs)


def _flows(items, key, states, horizon, path, errs, nonneg) -> tuple[FlowEntry, ...]:
    out = []
    seen = set()
    for k, item in enumerate(items):
        where = list(path) + [k]
        ok = True
        for end in ("from", "to"):
            if item[end] not in states:
                errs.add(where + [end], f"unknown state '{item[end]}'")
                ok = False
        if ok and item["from"] == item["to"]:
            errs.add(where, "a transition must connect two different states")
        pair = (item["from"], item["to"])
        if pair in seen:
            errs.add(where, f"duplicate entry for {pair[0]} -> {pair[1]}")
        seen.add(pair)
        segs = _segments(item[key], horizon, where + [key], errs, nonneg)
        out.append(FlowEntry(item["from"], item["to"], segs))
    return tuple(out)


def _per_state(mapping, states, horizon, path, errs, nonneg) -> tuple[tuple[Segment, ...], ...]:
    for name in mapping:
        if name not in states:
            errs.add(list(path) + [name], f"unknown state '{name}'")
    return tuple(
        _segments(mapping[s], horizon, list(path) + [s], errs, nonneg) if s in mapping else ()
        for s in states
    )


def parse_scenario(text: str | bytes) -> ScenarioConfig:
    """
    Parse and validate a scenario document.

    Raises ``ConfigError`` listing every schema and semantic problem.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError([f"<document>: not valid UTF-8 ({exc.reason})"]) from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError([f"<document>: invalid JSON: {exc}"]) from None

    schema_errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if schema_errors:
        msgs = []
        for e in schema_errors:
            best = jsonschema.exceptions.best_match(e.context) if e.context else e
            msgs.append(f"{_where(best.absolute_path)}: {best.message}")
        raise ConfigError(msgs)

    errs = _Collector()
    horizon = float(doc["horizon"])
    states = tuple(doc["markov"]["states"])
    v = doc["vasicek"]
    vasicek = VasicekParams(v["kappa"], v["theta"], v["sigma"], v["r0"])

    intensities = _flows(doc["markov"].get("intensities", []), "rate", states, horizon,
                         ["markov", "intensities"], errs, nonneg=True)
    pay = doc["payments"]
    sojourn = _per_state(pay.get("sojourn", {}), states, horizon, ["payments", "sojourn"], errs, nonneg=False)
    transitions = _flows(pay.get("transitions", []), "amount", states, horizon,
                         ["payments", "transitions"], errs, nonneg=False)
    te = doc.get("tax_expense", {})
    gamma = float(te.get("gamma", 0.0))
    if not 0.0 <= gamma < 1.0:
        errs.add(["tax_expense", "gamma"], "gamma must lie in [0,1)")
    expenses = _per_state(te.get("expenses", {}), states, horizon, ["tax_expense", "expenses"], errs, nonneg=True)

    mc = doc.get("monte_carlo", {})
    rep = doc.get("reporting", {})
    if errs.errors:
        raise ConfigError(errs.errors)
    return ScenarioConfig(
        horizon=horizon,
        vasicek=vasicek,
        states=states,
        intensities=intensities,
        initial_premium=float(pay.get("initial_premium", 0.0)),
        sojourn=sojourn,
        transitions=transitions,
        gamma=gamma,
        expenses=expenses,
        grid=int(doc.get("grid", DEFAULTS["grid"])),
        quadrature=int(doc.get("quadrature", DEFAULTS["quadrature"])),
        paths=int(mc.get("paths", DEFAULTS["paths"])),
        seed=int(mc.get("seed", DEFAULTS["seed"])),
        outputs=tuple(doc.get("outputs", OUTPUTS)),
        reporting_steps=rep.get("steps"),
        rate_scenarios=tuple(float(r) for r in rep.get("rate_scenarios", ())),
        illustration_paths=int(rep.get("illustration_paths", DEFAULTS["illustration_paths"])),
        perturbation_scale=float(rep.get("perturbation_scale", DEFAULTS["perturbation_scale"])),
    )


def config_digest(config: ScenarioConfig) -> str:
    """SHA-256 of the canonical JSON form."""
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Result tables
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class ResultTable:
    """
    Rectangular table of named columns.

    Written as RFC 4180 CSV (CRLF line ends, header row) with floats at 17
    significant digits. Non-finite floats are refused at construction.
    """

    def __init__(self, columns: Sequence[str], data: Sequence[Sequence]):
        columns = tuple(columns)
        if len(columns) != len(data):
            raise ValueError("one data column per name is required")
        if len(set(columns)) != len(columns):
            raise ValueError("column names must be unique")
        cols = []
        for name, col in zip(columns, data):
            col = list(col) if not isinstance(col, np.ndarray) else col
            if isinstance(col, np.ndarray) and col.dtype.kind == "f" and not np.all(np.isfinite(col)):
                raise NumericalError(f"non-finite value in column '{name}'")
            if isinstance(col, list) and any(isinstance(x, float) and not math.isfinite(x) for x in col):
                raise NumericalError(f"non-finite value in column '{name}'")
            cols.append(col)
        lengths = {len(c) for c in cols}
        if len(lengths) > 1:
            raise ValueError("columns differ in length")
        self.columns = columns
        self._data = cols

    @property
    def n_rows(self) -> int:
        return len(self._data[0]) if self._data else 0

    def column(self, name: str):
        return self._data[self.columns.index(name)]

    def rows(self):
        for i in range(self.n_rows):
            yield tuple(c[i] for c in self._data)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for row in self.rows():
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_csv().encode("utf-8"))


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def run_reserves(config: ScenarioConfig) -> ResultTable:
    """
    State-wise reserves at the reporting nodes.

    Columns ``t``, ``r`` (the mean short rate at ``t``) and ``V_<state>``,
    followed by ``V_<state>@r=<rate>`` for every requested rate scenario.
    """
    sc = config.scenario()
    times = config.reporting_times()
    kernels = build_kernels(sc.model, sc.payments, sc.taxexp, sc.vasicek, times, config.quadrature)
    mean_rate = np.asarray(sc.vasicek.mean(times), dtype=float)
    columns = ["t", "r"]
    data = [times, mean_rate]
    base = np.stack([k.reserves(r) for k, r in zip(kernels, mean_rate)])
    for i, name in enumerate(config.states):
        columns.append(f"V_{name}")
        data.append(base[:, i])
    for rate in config.rate_scenarios:
        vals = np.stack([k.reserves(rate) for k in kernels])
        for i, name in enumerate(config.states):
            columns.append(f"V_{name}@r={rate!r}")
            data.append(vals[:, i])
    return ResultTable(columns, data)


class HedgeReport(NamedTuple):
    paths: ResultTable
    risk: ResultTable
    perturbations: ResultTable


def _kernel(config: ScenarioConfig, sc: Scenario, grid: TimeGrid) -> GridKernel:
    return GridKernel.build(sc.model, sc.payments, sc.taxexp, sc.vasicek, grid.times, config.quadrature)


def _illustration(config, sc, grid, kernel) -> ResultTable:
    n = config.illustration_paths
    cols = ["t", "path", "r", "state", "S0", "S1", "h0", "h1", "V", "dC_modified"]
    if n == 0:
        return ResultTable(cols, [[] for _ in cols])
    paths = simulate_scenario(sc, grid, np.random.SeedSequence([config.seed, 1]), n)
    ctx = HedgeContext.build(paths, sc, kernel)
    strat = OptimalStrategy()
    h0, h1 = strat.holdings(ctx)
    diag = run_strategy(paths, strat, sc, ctx=ctx)
    dc = np.concatenate([diag.modified_cost[:, :1], np.diff(diag.modified_cost, axis=1)], axis=1)
    m = len(grid)
    names = np.asarray(config.states, dtype=object)
    return ResultTable(
        cols,
        [
            np.tile(grid.times, n),
            np.repeat(np.arange(n), m),
            paths.rates.ravel(),
            list(names[paths.states.astype(np.intp).ravel()]),
            paths.savings.ravel(),
            paths.bond_prices.ravel(),
            h0.ravel(),
            h1.ravel(),
            diag.value.ravel(),
            dc.ravel(),
        ],
    )


def run_hedge_report(config: ScenarioConfig, threads: int | None = None) -> HedgeReport:
    """
    Illustration paths of the optimal strategy plus a Monte Carlo risk report.

    ``risk`` has columns ``quantity, value, standard_error``. ``perturbations``
    compares the optimal risk with every standard perturbation: ``excess`` is
    the paired mean of the squared-cost difference and ``within_band`` flags
    ``R(opt) <= R(pert) + 2 * combined standard error``.
    """
    sc = config.scenario()
    grid = config.time_grid()
    kernel = _kernel(config, sc, grid)
    table = _illustration(config, sc, grid, kernel)

    perts = standard_perturbations(scale=config.perturbation_scale)
    strategies = {"optimal": OptimalStrategy(), **{p.name: p for p in perts}}
    res = run_experiment(sc, grid, config.paths, config.seed, strategies, kernel=kernel, threads=threads)

    opt_sq = res.cost_change["optimal"] ** 2
    quantities = [
        ("cost_change_mean", mean_estimate(res.cost_change["optimal"])),
        ("risk_optimal", mean_estimate(opt_sq)),
        ("risk_residual", mean_estimate(res.residual**2)),
        ("risk_minus_residual", mean_estimate(opt_sq - res.residual**2)),
        ("bond_martingale", mean_estimate(res.bond_martingale)),
        ("after_tax_bond_martingale", mean_estimate(res.after_tax_bond_martingale)),
        ("residual_bond_covariation", mean_estimate(res.cross_variation)),
    ]
    risk = ResultTable(
        ["quantity", "value", "standard_error"],
        [
            [q for q, _ in quantities] + ["initial_value", "n_paths"],
            [e.value for _, e in quantities] + [res.initial_value, float(res.n_paths)],
            [e.standard_error for _, e in quantities] + [0.0, 0.0],
        ],
    )

    r_opt = mean_estimate(opt_sq)
    names, risks, ses, excess, excess_se, combined, ok = [], [], [], [], [], [], []
    for name in strategies:
        sq = res.cost_change[name] ** 2
        est = mean_estimate(sq)
        diff = mean_estimate(sq - opt_sq) if name != "optimal" else None
        comb = math.hypot(est.standard_error, r_opt.standard_error) if name != "optimal" else 0.0
        names.append(name)
        risks.append(est.value)
        ses.append(est.standard_error)
        excess.append(diff.value if diff else 0.0)
        excess_se.append(diff.standard_error if diff else 0.0)
        combined.append(comb)
        ok.append(r_opt.value <= est.value + 2.0 * comb)
    pert_table = ResultTable(
        ["strategy", "risk", "standard_error", "excess", "excess_standard_error",
         "combined_standard_error", "within_band"],
        [names, risks, ses, excess, excess_se, combined, ok],
    )
    return HedgeReport(table, risk, pert_table)


def run_two_step(config: ScenarioConfig, threads: int | None = None) -> ResultTable:
    """
    Both sides of the two-step identity at time 0.

    One row per side: ``simulated`` is the mean of ``A*(T)`` under the optimal
    strategy and ``intrinsic`` is ``A(0) + V_0(0)``; ``gap`` is their
    difference with its standard error.
    """
    sc = config.scenario()
    grid = config.time_grid()
    kernel = _kernel(config, sc, grid)
    res = run_experiment(sc, grid, config.paths, config.seed, kernel=kernel, threads=threads)
    rep = two_step_report(res)
    return ResultTable(
        ["quantity", "value", "standard_error"],
        [
            ["simulated", "intrinsic", "gap", "z_score", "n_paths"],
            [rep.simulated, rep.intrinsic, rep.gap, rep.z_score, float(rep.n_paths)],
            [rep.standard_error, 0.0, rep.standard_error, 0.0, 0.0],
        ],
    )


def write_outputs(out_dir, command: str, config: ScenarioConfig, tables: dict[str, ResultTable], version: str) -> Path:
    """
    Write ``tables`` as CSV files plus ``config.json`` and ``manifest.json``.

    The manifest records the config hash, seed, version and the SHA-256 of
    every written file; it contains no timestamps, so identical runs produce
    identical bytes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    cfg_bytes = config.to_json().encode("utf-8")
    (out / "config.json").write_bytes(cfg_bytes)
    files["config.json"] = hashlib.sha256(cfg_bytes).hexdigest()
    for name, table in tables.items():
        data = table.to_csv().encode("utf-8")
        (out / f"{name}.csv").write_bytes(data)
        files[f"{name}.csv"] = hashlib.sha256(data).hexdigest()
    manifest = {
        "command": command,
        "config_sha256": config_digest(config),
        "seed": config.seed,
        "version": version,
        "files": files,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
