import csv
import io
import json
import math
from contextlib import redirect_stdout

import pytest

from boasbuck.bbsystem import builtin_system
from boasbuck.lab import (
    CATALOG,
    ExperimentResult,
    ExperimentSpec,
    emit_csv,
    load_specs,
    read_csv,
    run,
    run_bv_decay,
    run_uniform_convergence,
)
from boasbuck.lab.cli import main
from boasbuck.lab.experiments import CSV_COLUMNS, fit_rate
from boasbuck.moments import central_moments

EXP1 = builtin_system("exp1")
SMALL = dict(n_grid=(10, 20, 40), x_grid=(0.5, 1.0))


def run_cli(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, buf.getvalue()


# -- spec -------------------------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [
    {"n_grid": (20, 10)}, {"n_grid": (1, 10)}, {"x_grid": (60.0,)}, {"x_grid": (-1.0,)},
    {"checks": ("nope",)}, {"operator": "bernstein"},
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ExperimentSpec(**kwargs)


def test_spec_unknown_function():
    with pytest.raises(KeyError):
        ExperimentSpec(fn="gamma_ray")


def test_spec_dict_round_trip():
    spec = ExperimentSpec(fn="sqrt", checks=("uniform", "modulus"), **SMALL)
    assert ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_catalog_contents():
    assert {"one", "s", "s2", "sqrt", "exp_neg", "abs_s_minus_1", "piecewise"} <= set(CATALOG)


# -- runners ----------------------------------------------------------------------------


def test_uniform_constant_is_exact():
    res = run_uniform_convergence(ExperimentSpec(fn="one", uniform_tol=1e-8, **SMALL))
    assert all(r.abs_err <= 1e-8 for r in res.rows)
    assert res.passed


def test_uniform_identity_exact_for_exp1():
    res = run_uniform_convergence(ExperimentSpec(fn="s", **SMALL))
    assert max(r.abs_err for r in res.rows) <= 1e-7


def test_uniform_square_error_is_mu2():
    res = run_uniform_convergence(ExperimentSpec(fn="s2", n_grid=(11, 41, 160), x_grid=(0.5, 1.0, 5.0)))
    for r in res.rows:
        assert r.abs_err == pytest.approx(central_moments(EXP1, r.n, r.x)[1], abs=1e-6)
    at41 = [r for r in res.rows if r.n == 41 and r.x == 1.0][0]
    assert at41.abs_err == pytest.approx(0.1, rel=1e-8)


def test_bv_decay_reports_pieces():
    res = run_bv_decay(ExperimentSpec(fn="abs_s_minus_1", checks=("bv-decay",), n_grid=(10, 40, 160, 640),
                                      x_grid=(1.0,)))
    notes = [dict(kv.split("=") for kv in r.note.split(";")) for r in res.rows]
    # at the kink, psi_x removes the jump; the one-sided pieces are constant
    assert all(float(d["var_left"]) == 0.0 and float(d["var_right"]) == 0.0 for d in notes)
    assert all(float(d["fprime_jump"]) == 2.0 for d in notes)
    assert res.rows[-1].abs_err < res.rows[0].abs_err
    assert res.passed


def test_bv_decay_needs_piecewise():
    with pytest.raises(ValueError):
        run_bv_decay(ExperimentSpec(fn="sqrt", checks=("bv-decay",), **SMALL))


def test_failing_tolerance_is_reported():
    res = run_uniform_convergence(ExperimentSpec(fn="s2", uniform_tol=1e-9, **SMALL))
    assert not res.passed
    assert any(not a.passed for a in res.assertions)


def test_fit_rate_recovers_slope():
    ns = [10, 20, 40, 80, 160, 320, 640]
    slope, resid = fit_rate(ns, [3.0 * n ** -0.5 for n in ns])
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert resid < 1e-12
    assert all(math.isnan(v) for v in fit_rate(ns, [0.0] * 7))


# -- csv --------------------------------------------------------------------------------


def test_csv_header_only(tmp_path):
    path = emit_csv(ExperimentResult("empty", "EXP-1", "one"), tmp_path / "e.csv")
    text = path.read_text(encoding="utf-8")
    assert text == ",".join(CSV_COLUMNS) + "\n"


def test_csv_grid_rows_and_round_trip(tmp_path):
    res = run_uniform_convergence(ExperimentSpec(fn="sqrt", n_grid=(10, 20, 40), x_grid=(0.5, 2.0)))
    path = emit_csv(res, tmp_path / "u.csv")
    back = read_csv(path)
    assert len(back) == 6
    mem = sorted(res.rows, key=lambda r: (r.n, r.x))
    for a, b in zip(mem, back):
        assert (a.n, a.x) == (b.n, b.x)
        for u, v in zip(a[5:10], b[5:10]):
            assert (math.isnan(u) and math.isnan(v)) or v == pytest.approx(u, rel=1e-9, abs=1e-300)
    with path.open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert "e" in rows[1][5] and len(rows[1][5].split("e")[0].replace(".", "").lstrip("-")) >= 10


def test_csv_deterministic(tmp_path):
    spec = ExperimentSpec(fn="exp_neg", checks=("uniform", "modulus", "weighted"), **SMALL)
    a = emit_csv(run(spec), tmp_path / "a.csv").read_bytes()
    b = emit_csv(run(spec), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_csv_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_csv(ExperimentResult("e", "s", "f"), tmp_path / "missing" / "x.csv")


def test_load_specs_forms(tmp_path):
    one = ExperimentSpec(fn="sqrt", **SMALL).to_dict()
    p = tmp_path / "s.json"
    p.write_text(json.dumps(one))
    assert len(load_specs(p)) == 1
    assert len(load_specs({"experiments": [one, one]})) == 2


# -- CLI --------------------------------------------------------------------------------


def test_cli_validate_builtin():
    code, out = run_cli("validate", "exp1")
    assert code == 0
    assert "PASS" in out or "pass" in out.lower()


def test_cli_validate_missing_file():
    assert run_cli("validate", "/nonexistent/system.json")[0] == 2


def test_cli_theta_prints_poisson_weights():
    code, out = run_cli("theta", "exp1", "--y", "4", "--J", "6")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["j"]) for r in rows] == list(range(7))
    w = [float(r["weight"]) for r in rows]
    assert w[2] == pytest.approx(2.0 * math.exp(-2.0), rel=1e-12)
    assert w[1] == 0.0


def test_cli_moments():
    code, out = run_cli("moments", "exp2", "--n", "10", "--x", "1.5")
    assert code == 0
    assert out.splitlines()[0] == "operator,moment,closed_form,numeric,abs_diff"


def test_cli_apply():
    code, out = run_cli("apply", "exp1", "--op", "durrmeyer", "--fn", "s2", "--n", "2", "--x", "1")
    assert code == 0
    assert float(out.split()[0].split("=")[1]) == pytest.approx(5.0, rel=1e-10)


def test_cli_experiment_pass_and_fail(tmp_path):
    ok = ExperimentSpec(fn="one", uniform_tol=1e-8, **SMALL).to_dict()
    bad = ExperimentSpec(fn="s2", uniform_tol=1e-9, **SMALL).to_dict()
    for spec, expected in ((ok, 0), (bad, 1)):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec))
        out = tmp_path / "out.csv"
        code, _ = run_cli("experiment", str(p), "--out", str(out))
        assert code == expected
        assert len(read_csv(out)) == 6


def test_cli_experiment_bad_spec(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"fn": "sqrt", "n_grid": [40, 10]}))
    assert run_cli("experiment", str(p))[0] == 2


def test_cli_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
