import json
import subprocess
import sys

import pytest

from wavedecay.bounds import DEFAULT_SEED
from wavedecay.cli import main

SMALL_GRID = ["--u-max", "40", "--per-unit", "8"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_lemma1_default(capsys, tmp_path):
    out_path = tmp_path / "l1.json"
    code, _, _ = run(capsys, "verify-lemma1", "--p", "3", "--q", "2", "--A", "1", "--output", str(out_path))
    assert code == 0
    rep = json.loads(out_path.read_text())
    assert rep["report"]["analytic_C"] == 0.625
    assert rep["report"]["pass"] is True and rep["pass"] is True
    assert rep["report"]["measured_sup"] == pytest.approx(0.49952400206227343, rel=1e-10)
    assert rep["axis_slope"]["pass"] is True
    assert rep["seed"] == DEFAULT_SEED == rep["report"]["seed"]


def test_verify_lemma2_reports_printed_constant_violation(capsys):
    code, out, _ = run(capsys, "verify-lemma2", "--p", "1", "--q", "3", "--lambda", "3")
    rep = json.loads(out)
    assert rep["constants"]["nu"] == 2.0 and rep["constants"]["C"] == 1.375
    assert rep["report"]["measured_sup"] == pytest.approx(1.9925192930885267, rel=1e-10)
    assert rep["axis_slope"]["pass"] is True
    # the measured sup exceeds the printed constant, so the run fails
    assert code == 1 and rep["pass"] is False


def test_verify_lemma2_corrected_constant_passes(capsys):
    code, out, _ = run(capsys, "verify-lemma2", "--constant", "corrected", *SMALL_GRID)
    assert code == 0
    rep = json.loads(out)
    assert rep["report"]["analytic_C"] == 11.0 and rep["constant_choice"] == "corrected"
    assert rep["axis_slope"] is None


@pytest.mark.parametrize("argv, message", [
    (["iterate", "--kind", "semilinear", "--p", "2.2"], "requires p > 1+sqrt(2)"),
    (["iterate", "--kind", "potential", "--lambda", "2"], "requires λ > 2"),
    (["verify-lemma1", "--p", "2", "--q", "2"], "requires p > 2"),
    (["verify-lemma2", "--lambda", "2"], "requires λ > 2"),
])
def test_hypothesis_violations_are_usage_errors(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == 2 and message in err and out == ""


def test_allow_out_of_hypothesis(capsys):
    code, out, _ = run(capsys, "verify-lemma1", "--p", "2", "--q", "2", "--allow-out-of-hypothesis", *SMALL_GRID)
    rep = json.loads(out)
    assert rep["constants"] is None and rep["report"] is None
    assert code == 0


def test_reports_are_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["verify-lemma1", *SMALL_GRID, "--seed", "5", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["report"]["seed"] == 5
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json", "b.json"]


def test_plot_data_and_field_csv(capsys, tmp_path):
    plot, field = tmp_path / "plot.csv", tmp_path / "field.csv"
    code, _, _ = run(capsys, "verify-lemma1", *SMALL_GRID, "--samples", "50", "--plot-data", str(plot),
                     "--field-csv", str(field))
    assert code == 0
    lines = plot.read_text().splitlines()
    assert lines[0] == "t,r,phi,weighted_phi" and len(lines) == 51
    t, r, phi, wphi = map(float, lines[1].split(","))
    assert wphi == pytest.approx(abs(phi) * (1 + t + r) * (1 + abs(t - r)))
    assert field.read_text().startswith("u,v,t,r,psi,phi\n")


def test_csv_format_writes_field(capsys):
    code, out, _ = run(capsys, "verify-lemma1", *SMALL_GRID, "--format", "csv")
    assert code == 0 and out.startswith("u,v,t,r,psi,phi\n")


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('seed = 7\nsamples = 100\n[iterate]\nkind = "potential"\nlambda = 3\n'
                   'u-max = 40\nper-unit = 8\nsteps = 2\nconstant = "corrected"\n')
    code, out, _ = run(capsys, "--config", str(cfg), "iterate", "--format", "json")
    rep = json.loads(out)
    assert code == 0
    assert rep["kind"] == "potential" and rep["seed"] == 7 and len(rep["steps"]) == 2
    code, out, _ = run(capsys, "--config", str(cfg), "iterate", "--format", "json", "--steps", "3", "--seed", "9")
    rep = json.loads(out)
    assert len(rep["steps"]) == 3 and rep["seed"] == 9


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit) as exc:
        main(["--config", str(cfg), "verify-lemma1"])
    assert exc.value.code == 2
    assert "bogus" in capsys.readouterr().err


def test_iterate_csv_trace(capsys):
    code, out, _ = run(capsys, "iterate", "--p", "3", "--A", "0.1", *SMALL_GRID, "--steps", "3")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "step,C_n,diff_norm,ratio" and len(lines) == 5


def test_iterate_printed_potential_exits_nonzero(capsys):
    code, out, _ = run(capsys, "iterate", "--kind", "potential", "--V0", "0.1", "--lambda", "3", "--epsilon", "1",
                       *SMALL_GRID, "--steps", "2", "--format", "json")
    assert code == 1 and json.loads(out)["steps"][0]["induction_ok"] is False


def test_compare_command(capsys):
    code, out, _ = run(capsys, "compare", "--points", "5", "--majorant-samples", "256")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] is True and len(rep["points"]) == 5
    assert rep["majorant"]["passed"] is True


def test_compare_csv(capsys):
    code, out, _ = run(capsys, "compare", "--points", "3", "--majorant-samples", "128", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "t,x1,x2,x3,phi1,phi2,margin"


def test_inequality_suite_command(capsys):
    code, out, _ = run(capsys, "inequality-suite", "--count", "20")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] is True and rep["count"] == 20


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wavedecay", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("wavedecay ")
