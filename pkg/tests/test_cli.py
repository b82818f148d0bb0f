"""End-to-end CLI runs against temp directories: artifacts and exit codes."""

import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from motlab import cli, jsonio
from motlab.lp import LpNumericalError
from motlab.measures import CallQuoteCurve, Peacock, dirac, measure
from motlab.pathspace import asian_payoff, lookback_max_payoff, step_path

GRID3 = (F(0), F(1, 2), F(1))
PEACOCK3 = Peacock(GRID3, (dirac(1),
                           measure([F(1, 2), F(3, 2)], [F(1, 2), F(1, 2)]),
                           measure([0, 1, 2], [F(1, 4), F(1, 2), F(1, 4)])))


def _write(tmp_path, name, obj):
    path = tmp_path / name
    jsonio.write_json(path, obj)
    return str(path)


def _peacock_file(tmp_path, peacock=PEACOCK3, name="peacock.json"):
    return _write(tmp_path, name, jsonio.peacock_to_obj(peacock))


def _payoff_file(tmp_path, payoff, name="payoff.json"):
    return _write(tmp_path, name, jsonio.payoff_to_obj(payoff))


# ---------- validate ----------


def test_validate_accepts_good_peacock(tmp_path, capsys):
    inp = _peacock_file(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["validate", "--input", inp, "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("VALID:")
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "valid"
    assert report["source_kind"] == "peacock"
    assert all(p["holds"] for p in report["pairs"])
    cfg = json.loads((out / "run_config.json").read_text())
    assert cfg["command"] == "validate"
    assert len(cfg["inputs"]["input"]["sha256"]) == 64


def test_validate_reports_convex_order_witness(tmp_path, capsys):
    doc = {"dim": 1, "times": [0, 1],
           "marginals": [jsonio.measure_to_obj(measure([0, 2],
                                                       [F(1, 2), F(1, 2)])),
                         jsonio.measure_to_obj(dirac(1))]}
    inp = _write(tmp_path, "shrinking.json", doc)
    out = tmp_path / "out"
    assert cli.main(["validate", "--input", inp, "--out", str(out)]) == 1
    assert "INVALID" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "invalid"
    assert "convex order" in report["witness"]


def test_validate_reports_barycenter_drift(tmp_path, capsys):
    doc = {"dim": 1, "times": [0, 1],
           "marginals": [jsonio.measure_to_obj(dirac(1)),
                         jsonio.measure_to_obj(dirac(2))]}
    assert cli.main(["validate", "--input",
                     _write(tmp_path, "drift.json", doc)]) == 1
    assert "barycenter" in capsys.readouterr().out


def test_validate_requires_increasing_times(tmp_path, capsys):
    doc = {"dim": 1, "times": [0, "1/2", "1/2"],
           "marginals": [jsonio.measure_to_obj(dirac(1))] * 3}
    assert cli.main(["validate", "--input",
                     _write(tmp_path, "flat.json", doc)]) == 1
    assert "strictly increasing" in capsys.readouterr().out


def test_validate_missing_file_is_config_error(tmp_path):
    assert cli.main(["validate", "--input", str(tmp_path / "nope.json")]) == 2


def test_validate_unrecognized_document(tmp_path):
    assert cli.main(["validate", "--input",
                     _write(tmp_path, "junk.json", {"foo": 1})]) == 2


def test_validate_quote_curves_calibrate_then_check(tmp_path, capsys):
    curve = CallQuoteCurve(1.0, (0.0, 1.0, 2.0), (1.0, 0.25, 0.0), 1.0)
    inp = _write(tmp_path, "quotes.json",
                 {"curves": [jsonio.quotes_to_obj(curve)]})
    out = tmp_path / "out"
    assert cli.main(["validate", "--input", inp, "--out", str(out)]) == 0
    assert "source quotes" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    assert report["source_kind"] == "quotes"
    assert [jsonio.dec_num(t) for t in report["times"]] == [0, 1]   # pricing date prepended


def test_validate_rejects_nonconvex_quotes(tmp_path, capsys):
    curve = CallQuoteCurve(1.0, (0.0, 1.0, 2.0), (1.0, 0.8, 0.0), 1.0)
    inp = _write(tmp_path, "bad_quotes.json",
                 {"curves": [jsonio.quotes_to_obj(curve)]})
    assert cli.main(["validate", "--input", inp]) == 1
    assert "INVALID" in capsys.readouterr().out


# ---------- price ----------


def _run_price(tmp_path, outname, extra=()):
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, lookback_max_payoff(GRID3, 0))
    out = tmp_path / outname
    rc = cli.main(["price", "--input", inp, "--payoff", pay,
                   "--out", str(out), *extra])
    return rc, out


def test_price_writes_result_and_config(tmp_path, capsys):
    rc, out = _run_price(tmp_path, "out", ("--no-figures",))
    assert rc == 0
    text = capsys.readouterr().out
    assert "price interval" in text
    result = json.loads((out / "result.json").read_text())
    assert result["status"] == "optimal"
    lower, upper = result["interval"]["lower"], result["interval"]["upper"]
    # running max of |path| on this instance sits between E|X_1| and the cap
    assert 1.0 - 1e-9 <= lower <= upper <= 2.0 + 1e-9
    assert result["normalization"] == {"lo": 0.0, "hi": 2.0}
    hat = result["normalized_interval"]
    assert float(jsonio.dec_num(hat["lower"])) <= float(jsonio.dec_num(hat["upper"]))
    assert set(result["certificates"]) == {"upper", "lower"}
    assert not (out / "plan_upper.png").exists()


def test_price_runs_are_reproducible(tmp_path):
    rc1, out1 = _run_price(tmp_path, "out_a", ("--no-figures",))
    rc2, out2 = _run_price(tmp_path, "out_b", ("--no-figures",))
    assert rc1 == rc2 == 0
    for name in ("result.json", "run_config.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_price_renders_plan_figure(tmp_path):
    rc, out = _run_price(tmp_path, "out_fig")
    assert rc == 0
    assert (out / "plan_upper.png").stat().st_size > 0


def test_price_rejects_mismatched_payoff_grid(tmp_path):
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, asian_payoff((F(0), F(1))))
    assert cli.main(["price", "--input", inp, "--payoff", pay]) == 1


def test_price_rejects_penalized_mode(tmp_path):
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, asian_payoff(GRID3))
    assert cli.main(["price", "--input", inp, "--payoff", pay,
                     "--mode", "penalized:1"]) == 2


def test_price_from_quote_curves(tmp_path):
    curve = CallQuoteCurve(1.0, (0.0, 1.0, 2.0), (1.0, 0.25, 0.0), 1.0)
    inp = _write(tmp_path, "quotes.json",
                 {"curves": [jsonio.quotes_to_obj(curve)]})
    pay = _payoff_file(tmp_path, asian_payoff((F(0), F(1))))
    out = tmp_path / "out"
    assert cli.main(["price", "--input", inp, "--payoff", pay,
                     "--out", str(out), "--no-figures"]) == 0
    result = json.loads((out / "result.json").read_text())
    lo = float(result["interval"]["lower"])
    hi = float(result["interval"]["upper"])
    assert lo <= hi


def test_solver_failure_maps_to_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise LpNumericalError("synthetic pivot breakdown")
    monkeypatch.setattr(cli, "price_interval", boom)
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, asian_payoff(GRID3))
    assert cli.main(["price", "--input", inp, "--payoff", pay]) == 3


# ---------- lattice ----------


def test_lattice_random_paths(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["lattice", "--input", "random:3:5", "--n", "3,4",
                     "--out", str(out), "--no-figures"]) == 0
    assert "median rho" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["median_rho"]) == {"3", "4"}
    assert summary["paths"] == 3
    lines = (out / "lattice.csv").read_text().splitlines()
    assert lines[0].startswith("source,n,rho,norm_ok,member")
    assert len(lines) == 1 + 2 * 3              # header + levels x paths


def test_lattice_fixture_spec(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["lattice", "--input", "fixture:sko_stopo:4",
                     "--n", "4", "--out", str(out), "--no-figures"]) == 0
    lines = (out / "lattice.csv").read_text().splitlines()
    assert len(lines) == 1 + 3                  # family carries three paths
    assert all("True" in ln for ln in lines[1:])


def test_lattice_decay_figure(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["lattice", "--input", "random:2:0", "--n", "3..5",
                     "--out", str(out)]) == 0
    assert (out / "lattice_decay.png").stat().st_size > 0


def test_lattice_json_path_input(tmp_path):
    w = step_path(1, [(F(1, 4), F(3, 2))])
    inp = _write(tmp_path, "path.json", jsonio.path_to_obj(w))
    out = tmp_path / "out"
    assert cli.main(["lattice", "--input", inp, "--n", "5",
                     "--out", str(out), "--no-figures"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["paths"] == 1
    assert summary["median_rho"]["5"] >= 0.0


def test_lattice_bad_specs(tmp_path):
    assert cli.main(["lattice", "--input", "fixture:unheard_of:3",
                     "--n", "3"]) == 2
    assert cli.main(["lattice", "--input", "fixture:sko_stopo",
                     "--n", "3"]) == 2
    assert cli.main(["lattice", "--input", "random:2:0", "--n", "5..3"]) == 2


# ---------- stability ----------


def test_stability_sweep_artifacts(tmp_path, capsys):
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, lookback_max_payoff(GRID3, 0))
    out = tmp_path / "out"
    assert cli.main(["stability", "--input", inp, "--payoff", pay,
                     "--radii", "0.1,0", "--seeds", "0,1",
                     "--out", str(out), "--no-figures"]) == 0
    assert "monotone trend" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["median_eps"]) == {"0.1", "0.0"}
    assert summary["median_eps"]["0.0"] == 0.0
    assert summary["base_lower"] <= summary["base_upper"]
    lines = (out / "stability.csv").read_text().splitlines()
    assert lines[0] == "radius,seed,lower,upper,eps,w1_shift,status"
    zero_rows = [ln for ln in lines[1:] if ln.startswith("0.0,")]
    assert zero_rows and all("unchanged" in ln for ln in zero_rows)


# ---------- dn ----------

TREE_DOC = {"level": 1, "dim": 1, "times": [0, 1], "cap": 2, "j_max": 1}


def test_dn_ladder_run(tmp_path, capsys):
    inp = _write(tmp_path, "tree.json", TREE_DOC)
    pay = _payoff_file(tmp_path, asian_payoff((F(0), F(1))))
    out = tmp_path / "out"
    assert cli.main(["dn", "--input", inp, "--payoff", pay,
                     "--n", "1,2", "--out", str(out), "--no-figures"]) == 0
    assert "nodes" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["command"] == "dn"
    assert summary["leaves"] >= 2
    assert summary["v0"] >= 0.0
    lines = (out / "dn.csv").read_text().splitlines()
    assert lines[0] == "n,value,expected_drift,gap_to_V0"
    assert len(lines) == 3


def test_dn_penalty_figure(tmp_path):
    inp = _write(tmp_path, "tree.json", TREE_DOC)
    pay = _payoff_file(tmp_path, asian_payoff((F(0), F(1))))
    out = tmp_path / "out"
    assert cli.main(["dn", "--input", inp, "--payoff", pay,
                     "--n", "1,2", "--out", str(out)]) == 0
    assert (out / "dn.png").stat().st_size > 0


def test_dn_requires_tree_document(tmp_path):
    inp = _peacock_file(tmp_path)
    pay = _payoff_file(tmp_path, asian_payoff((F(0), F(1))))
    assert cli.main(["dn", "--input", inp, "--payoff", pay]) == 2


# ---------- environment and entry points ----------


def test_thread_env_rejected_when_not_integer(tmp_path, monkeypatch):
    monkeypatch.setenv("MOTLAB_THREADS", "three")
    assert cli.main(["validate", "--input", _peacock_file(tmp_path)]) == 2
    monkeypatch.setenv("MOTLAB_THREADS", "0")
    assert cli.main(["validate", "--input", _peacock_file(tmp_path)]) == 2


def test_thread_env_recorded_in_run_config(tmp_path, monkeypatch):
    monkeypatch.setenv("MOTLAB_THREADS", "2")
    out = tmp_path / "out"
    assert cli.main(["validate", "--input", _peacock_file(tmp_path),
                     "--out", str(out)]) == 0
    cfg = json.loads((out / "run_config.json").read_text())
    assert cfg["threads"] == 2


def test_version_flag_exits_zero():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0


def test_module_entry_point_runs_in_subprocess(tmp_path):
    inp = _peacock_file(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "motlab.cli",
                           "validate", "--input", inp],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert proc.stdout.startswith("VALID:")
