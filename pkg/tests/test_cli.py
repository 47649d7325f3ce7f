import csv
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from garza import cli
from garza.core import Design
from garza.io import (ConfigError, compile_expression, design_from_json, dump_design, load_design,
                      load_model, model_from_json)
from garza import taylor

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *args):
    code = cli.main([str(a) for a in args])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def cfg(name):
    return CONFIGS / name


def test_check_cheb_polynomial(capsys):
    code, js = run(capsys, "check-cheb", "--model", cfg("quadratic.json"))
    assert code == 0 and js["verdict"] == "CHEB_PLUS"


def test_check_cheb_rational_roots_above(capsys):
    code, js = run(capsys, "check-cheb", "--model", cfg("rational_roots_above.json"))
    assert code == 0
    assert js["cleared_system_verdict"] == "CHEB_MINUS"
    assert js["root_prediction"] == "CHEB_MINUS_EXPECTED"
    assert js["verdict"] == "CHEB_PLUS"        # the Psi system itself, with Q^4 in front


def test_check_cheb_oscillating_fails(capsys):
    code, js = run(capsys, "check-cheb", "--model", cfg("sine_system.json"))
    assert code == 1 and js["verdict"] == "FAIL" and js["witness"] is not None


def test_check_cheb_indeterminate_exit_code(capsys, tmp_path):
    m = tmp_path / "m.json"
    # 2 max(x, 0): a weak Chebyshev system, determinants vanish on the left half
    m.write_text(json.dumps({"type": "expression", "psi": ["x + sqrt(x*x)"], "domain": [-1, 1]}))
    code, js = run(capsys, "check-cheb", "--model", m)
    assert js["verdict"] == "INDETERMINATE" and code == 2


def test_check_cheb_writes_f_trace(capsys, tmp_path):
    trace = tmp_path / "F.csv"
    run(capsys, "check-cheb", "--model", cfg("quadratic.json"), "--csv", trace)
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["x", "F"] and len(rows) == 202
    assert float(rows[1][1]) == pytest.approx(24.0)          # 1 * 2 * 3 * 4


def test_improve_base_fixture(capsys, tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    code = cli.main(["improve", "--model", str(cfg("linear.json")), "--design", str(cfg("base_design.json")),
                     "--out", str(out), "--csv", str(table)])
    js = json.loads(out.read_text(encoding="utf-8"))
    assert code == 0
    assert js["improved"]["support"] == pytest.approx([0, 1])
    assert js["improved"]["weights"] == pytest.approx([0.625, 0.375], abs=1e-8)
    assert js["criteria_after"]["D"] >= js["criteria_before"]["D"]
    assert js["criteria_after"]["A"] >= js["criteria_before"]["A"]
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["design", "support", "weight"] and len(rows) == 5


def test_improve_admissible_fixture_echoes_design(capsys):
    code, js = run(capsys, "improve", "--model", cfg("linear.json"), "--design", cfg("principal_design.json"))
    assert code == 0 and js["case_tag"] == "ALREADY_ADMISSIBLE"
    assert js["improved"] == js["original"]


def test_improve_rational_random_design(capsys):
    code, js = run(capsys, "improve", "--model", cfg("rational_roots_below.json"), "--design", cfg("random5.json"))
    assert code == 0
    assert len(js["improved"]["support"]) <= 3 and js["loewner_certificate"] >= -1e-8
    assert js["improved"]["support"][0] == 0.0


def test_wrong_direction_exits_one(capsys):
    code = cli.main(["improve", "--model", str(cfg("linear.json")), "--design", str(cfg("base_design.json")),
                     "--direction", "lower"])
    assert code == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("d1, d2, verdict, code", [
    ("point_mass.json", "two_point.json", "INDEFINITE", 1),
    ("base_design.json", "base_design.json", "EQUAL", 0),
    ("base_design.json", "family_p055.json", "GEQ", 0),
])
def test_compare(capsys, d1, d2, verdict, code):
    c, js = run(capsys, "compare", "--model", cfg("linear.json"), "--design", cfg(d1), "--design2", cfg(d2))
    assert c == code and js["verdict"] == verdict
    assert len(js["eigenvalues"]) == 2 and "D" in js["criteria_design2"]


def test_admissible_command(capsys):
    code, js = run(capsys, "admissible", "--model", cfg("linear.json"), "--design", cfg("point_mass.json"))
    assert code == 0 and js["status"] == "PROVEN_UNIMPROVABLE"


def test_catalog(capsys):
    code, js = run(capsys, "catalog")
    assert code == 0 and set(js["models"]) == {"polynomial", "weighted", "rational", "expression"}


def test_missing_file_is_reported(capsys):
    assert cli.main(["check-cheb", "--model", "nope.json"]) == 1
    assert "no such file" in capsys.readouterr().err


def test_missing_argument_is_reported(capsys):
    assert cli.main(["improve", "--model", str(cfg("linear.json"))]) == 1
    assert "--design" in capsys.readouterr().err


def test_parse_error_has_line_and_column(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "polynomial",\n "degree": }')
    with pytest.raises(ConfigError, match="line 2 column"):
        load_model(bad)


@pytest.mark.parametrize("obj, msg", [
    ({"type": "polynomial", "domain": [0, 1]}, "degree"),
    ({"type": "nonsense", "domain": [0, 1]}, "unknown model type"),
    ({"type": "polynomial", "degree": 1, "domain": [1, 0]}, "A < B"),
    ({"type": "rational", "l": 1, "s": 1, "denominator": [-2.0], "domain": [0, 1]}, "root"),
    ({"type": "weighted", "p": 3, "efficiency": "cubic", "domain": [0, 1]}, "unknown efficiency"),
])
def test_model_field_errors(obj, msg):
    with pytest.raises(ConfigError, match=msg):
        model_from_json(obj)


def test_nested_params_and_domain_object():
    m = model_from_json({"type": "rational", "params": {"l": 1, "s": 1, "numerator": [2.0],
                                                        "denominator": [0.5]}, "domain": {"A": 0, "B": 1}})
    assert m.theta == (2.0, 0.5)


def test_design_weights_default_to_uniform():
    d = design_from_json({"support": [0.2, 0.4, 0.6, 0.8]})
    assert np.allclose(d.weights, 0.25)


def test_design_outside_model_domain(tmp_path):
    f = tmp_path / "d.json"
    f.write_text('{"support": [0.5, 1.5]}')
    from garza.core import IntervalDomain
    with pytest.raises(ConfigError, match="outside"):
        load_design(f, IntervalDomain(0, 1))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False) , min_size=1, max_size=8, unique=True),
       st.data())
def test_design_json_round_trip(points, data):
    w = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=len(points), max_size=len(points))))
    d = Design.create(points, w)
    text = dump_design(d)
    again = design_from_json(json.loads(text))
    assert dump_design(again) == text


def test_expression_functions_work_on_arrays_and_jets():
    f = compile_expression("exp(-x) * sin(2*pi*x) + x**2 / 3")
    x = np.linspace(0, 1, 5)
    assert np.allclose(f(x), np.exp(-x) * np.sin(2 * np.pi * x) + x**2 / 3)
    d = taylor.derivatives(f, np.array([0.0]), 1)
    assert d[1, 0] == pytest.approx(2 * np.pi)
    assert np.allclose(compile_expression("2")(x), 2.0)


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "open('f')", "[x]", "x if x else 1",
                                  "lambda: 1", "y + 1", "'a'", "sin(x, x)"])
def test_expressions_reject_anything_else(text):
    with pytest.raises(ConfigError):
        compile_expression(text)


def test_run_config_validates_tolerances():
    with pytest.raises(ConfigError):
        cli.RunConfig("improve", tol_mom=0.0)
