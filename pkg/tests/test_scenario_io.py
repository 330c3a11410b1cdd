import copy
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from taxhedge.cli import main
from taxhedge.scenario_io import (
    DEFAULTS,
    ConfigError,
    NumericalError,
    ResultTable,
    config_digest,
    parse_scenario,
    run_hedge_report,
    run_reserves,
    run_two_step,
)

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"

MINIMAL = {
    "horizon": 10,
    "vasicek": {"kappa": 0.1, "theta": 0.03, "sigma": 0.01, "r0": 0.03},
    "markov": {"states": ["alive", "dead"], "intensities": [{"from": "alive", "to": "dead", "rate": 0.01}]},
    "payments": {"transitions": [{"from": "alive", "to": "dead", "amount": 1}]},
}


def doc(**changes):
    d = copy.deepcopy(MINIMAL)
    for key, value in changes.items():
        d[key] = value
    return d


def parse(d):
    return parse_scenario(json.dumps(d))


def errors_of(d):
    with pytest.raises(ConfigError) as info:
        parse(d)
    return info.value.errors


# --- parsing ----------------------------------------------------------------


def test_defaults_applied():
    c = parse(MINIMAL)
    assert c.grid == DEFAULTS["grid"] and c.quadrature == DEFAULTS["quadrature"]
    assert c.paths == DEFAULTS["paths"] and c.seed == DEFAULTS["seed"]
    assert c.gamma == 0.0
    assert c.reporting_times().size == c.grid + 1
    sc = c.scenario()
    assert sc.n_states == 2
    assert sc.model.intensity_matrix(3.0)[0, 1] == 0.01


@pytest.mark.parametrize("name", ["term_insurance", "annuity", "disability"])
def test_demo_configs_validate(name):
    c = parse_scenario((CONFIGS / f"{name}.json").read_bytes())
    assert c.scenario().n_states == len(c.states)


def test_gamma_out_of_range():
    d = doc(tax_expense={"gamma": 1.0})
    assert errors_of(d) == ["tax_expense.gamma: gamma must lie in [0,1)"]


def test_segment_past_horizon_is_named():
    d = doc()
    d["payments"]["transitions"][0]["amount"] = [{"start": 0, "end": 12, "value": 1}]
    (msg,) = errors_of(d)
    assert msg.startswith("payments.transitions[0].amount[0]:")
    assert "after the horizon" in msg


def test_all_errors_reported_together():
    d = doc(tax_expense={"gamma": -0.2, "expenses": {"ghost": 0.1}})
    d["markov"]["intensities"][0]["rate"] = [
        {"start": 0, "end": 6, "value": 0.01},
        {"start": 5, "end": 10, "value": -0.02},
    ]
    errs = errors_of(d)
    assert len(errs) >= 4
    joined = "\n".join(errs)
    for fragment in ("gamma", "ghost", "overlap", "negative"):
        assert fragment in joined


def test_schema_errors_carry_paths():
    d = doc(grid=0)
    d["vasicek"]["kappa"] = -1
    errs = errors_of(d)
    assert any(e.startswith("grid:") for e in errs)
    assert any(e.startswith("vasicek.kappa:") for e in errs)


@pytest.mark.parametrize("text", ['{"horizon": NaN}', "not json", b"\xff\xfe"])
def test_malformed_documents(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_gaps_between_segments_are_zero():
    d = doc()
    d["payments"]["sojourn"] = {"alive": [{"start": 2, "end": 4, "value": 0.5}]}
    sc = parse(d).scenario()
    assert [float(sc.payments.sojourn_rates[0](t)) for t in (1.0, 3.0, 5.0)] == [0.0, 0.5, 0.0]


def test_round_trip_and_digest():
    c = parse_scenario((CONFIGS / "disability.json").read_bytes())
    again = parse_scenario(c.to_json())
    assert again == c
    assert config_digest(again) == config_digest(c)
    assert config_digest(c.with_overrides(seed=c.seed + 1)) != config_digest(c)


def test_overrides_are_validated():
    c = parse(MINIMAL)
    assert c.with_overrides(paths=10, grid=5).paths == 10
    with pytest.raises(ConfigError):
        c.with_overrides(paths=1)


# --- tables -----------------------------------------------------------------


def test_csv_format():
    t = ResultTable(["name", "x", "n", "flag"], [["a", "b"], [0.1, 1 / 3], [1, 2], [True, False]])
    text = t.to_csv()
    assert text == "name,x,n,flag\r\na,0.10000000000000001,1,1\r\nb,0.33333333333333331,2,0\r\n"
    assert float(text.split("\r\n")[2].split(",")[1]) == 1 / 3


def test_non_finite_values_refused():
    with pytest.raises(NumericalError):
        ResultTable(["x"], [np.array([1.0, np.inf])])
    with pytest.raises(NumericalError):
        ResultTable(["x"], [[float("nan")]])


# --- runners ----------------------------------------------------------------


def test_reserves_vanish_without_payments():
    d = doc(grid=10, quadrature=9)
    d["payments"] = {}
    t = run_reserves(parse(d))
    assert not np.any(t.column("V_alive")) and not np.any(t.column("V_dead"))


def test_reserves_closed_form_with_flat_rate():
    d = doc(grid=20, quadrature=65, tax_expense={"gamma": 0.153, "expenses": {"alive": 0.005}})
    d["vasicek"] = {"kappa": 0.1, "theta": 0.03, "sigma": 0.0, "r0": 0.03}
    d["reporting"] = {"rate_scenarios": [0.03]}
    t = run_reserves(parse(d))
    tau = 10 - t.column("t")
    c = (1 - 0.153) * 0.03 + 0.01 - 0.005
    exact = 0.01 * (1 - np.exp(-c * tau)) / c
    assert np.allclose(t.column("V_alive"), exact, rtol=1e-6, atol=1e-15)
    assert np.array_equal(t.column("V_alive"), t.column("V_alive@r=0.03"))
    assert t.column("V_alive")[-1] == 0.0


def test_hedge_report_tables():
    c = parse_scenario((CONFIGS / "term_insurance.json").read_bytes()).with_overrides(paths=200, grid=40)
    rep = run_hedge_report(c, threads=1)
    assert rep.paths.columns[:4] == ("t", "path", "r", "state")
    assert rep.paths.n_rows == c.illustration_paths * 41
    assert rep.perturbations.n_rows >= 20
    assert "quantity" in rep.risk.columns


def test_two_step_table():
    c = parse_scenario((CONFIGS / "annuity.json").read_bytes()).with_overrides(paths=300, grid=50)
    t = run_two_step(c, threads=1)
    rows = dict(zip(t.column("quantity"), t.column("value")))
    assert rows["n_paths"] == 300
    assert rows["gap"] == pytest.approx(rows["simulated"] - rows["intrinsic"], abs=1e-15)


# --- command line -----------------------------------------------------------


def write_config(tmp_path, d, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return path


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "--config", str(CONFIGS / "disability.json")]) == 0
    bad = doc(tax_expense={"gamma": 2})
    assert main(["validate", "--config", str(write_config(tmp_path, bad))]) == 2
    assert "gamma must lie in [0,1)" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "absent.json")]) == 2


def test_cli_numerical_failure(tmp_path):
    d = doc(grid=10, quadrature=9, reporting={"rate_scenarios": [-1.0]})
    d["payments"]["transitions"][0]["amount"] = 1e308
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code = main(["reserves", "--config", str(write_config(tmp_path, d)), "--out", str(tmp_path / "o")])
    assert code == 3


def test_cli_reserves_manifest_and_rerun(tmp_path):
    cfg = write_config(tmp_path, doc(grid=50, quadrature=33))
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["reserves", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    manifest = json.loads((outs[0] / "manifest.json").read_text())
    assert manifest["command"] == "reserves" and manifest["seed"] == 5
    assert set(manifest["files"]) == {"config.json", "reserves.csv"}
    for name in ("manifest.json", "reserves.csv", "config.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert parse_scenario((outs[0] / "config.json").read_bytes()).seed == 5


def test_cli_hedge_and_two_step(tmp_path):
    cfg = CONFIGS / "term_insurance.json"
    flags = ["--config", str(cfg), "--paths", "100", "--grid", "20"]
    assert main(["hedge", *flags, "--out", str(tmp_path / "h")]) == 0
    assert {p.name for p in (tmp_path / "h").iterdir()} >= {"strategy_paths.csv", "risk_report.csv", "perturbations.csv"}
    assert main(["two-step", *flags, "--out", str(tmp_path / "t")]) == 0
    assert (tmp_path / "t" / "two_step.csv").read_bytes().startswith(b"quantity,value,standard_error\r\n")
