import csv
import io
import json
import os
import subprocess
import sys

import pytest

from blockfade.cli import fmt, main, parse_pairs, render_csv, typed_params
from blockfade.errors import ParseError
from blockfade.figures import run_figure

FIG4_CHANNEL = ["sigmaH2=0.9", "sigmaN2=0.4", "Ebar=17", "sigmaE2=0.1", "nc=20", "B=400", "eps=0.1"]


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text, sep=","):
    return list(csv.DictReader(io.StringIO(text), delimiter=sep))


def test_waterfill_fixture(capsys):
    code, out, _ = run(["waterfill", "sigmaH2=0.1", "sigmaN2=4", "pbar_dB=5"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert float(r["capacity"]) == pytest.approx(0.6892, abs=5e-5)


def test_missing_key_is_usage_error(capsys):
    code, _, err = run(["waterfill", "sigmaH2=0.1", "pbar_dB=5"], capsys)
    assert code == 2
    msg = json.loads(err.strip())
    assert msg["error"] == "ParseError" and "sigmaN2" in msg["message"]


def test_unknown_key_rejected(capsys):
    code, _, err = run(["waterfill", "sigmaH2=0.1", "sigmaN2=4", "pbar=1", "colour=red"], capsys)
    assert code == 2 and "colour" in err


def test_bad_value(capsys):
    code, _, err = run(["waterfill", "sigmaH2=abc", "sigmaN2=4", "pbar=1"], capsys)
    assert code == 2 and json.loads(err)["error"] == "ParseError"


def test_domain_error_exit_one(capsys):
    code, _, err = run(["waterfill", "sigmaH2=0.1", "sigmaN2=-4", "pbar=1"], capsys)
    assert code == 1 and json.loads(err)["error"] == "DomainError"


def test_unknown_figure(capsys):
    code, _, err = run(["figure", "fig9"], capsys)
    assert code == 2 and json.loads(err)["error"] == "UnknownFigure"


def test_discrete_law_and_config_file(tmp_path, capsys):
    cfg = tmp_path / "wf.cfg"
    cfg.write_text("# constant channel\natoms=1\nprobs=1\nsigmaN2=1\npbar=5\n")
    code, out, _ = run(["waterfill", "--config", str(cfg), "pbar=1"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert r["lambda"] == "2" and r["capacity"] == "1"


def test_bounds_eh(capsys):
    code, out, _ = run(["bounds", "constraint=eh", *FIG4_CHANNEL], capsys)
    r = rows(out)[0]
    assert code == 0
    assert abs(float(r["alpha"]) - 0.104) < 0.02
    assert 843 <= float(r["save_slots"]) <= 849


def test_bounds_pp_tsv(capsys):
    code, out, _ = run(["bounds", "sigmaH2=0.1", "sigmaN2=4", "pbar_dB=5", "nc=10", "B=1000", "eps=0.05",
                        "alpha=0.5", "--tsv"], capsys)
    r = rows(out, "\t")[0]
    assert code == 0 and r["constraint"] == "PP"
    assert float(r["constant"]) == pytest.approx(9.0087, abs=1e-4)


def test_bounds_bad_constraint(capsys):
    code, _, _ = run(["bounds", "constraint=zz", "sigmaH2=0.1", "sigmaN2=4", "pbar=1", "nc=1", "B=1", "eps=0.1"],
                     capsys)
    assert code == 2


def test_moddev(capsys):
    code, out, _ = run(["moddev", "constraint=eh", *FIG4_CHANNEL], capsys)
    r = rows(out)[0]
    assert code == 0 and float(r["lo"]) > 0 and float(r["hi"]) > 0


def test_figure_single_row(tmp_path, capsys):
    out_path = tmp_path / "f1.csv"
    code, out, _ = run(["figure", "fig1", "B=950", "--out", str(out_path)], capsys)
    assert code == 0 and out.strip() == str(out_path)
    data = rows(out_path.read_text())
    assert len(data) == 1 and data[0]["B"] == "950"
    assert list(data[0]) == ["B", "capacity", "ap_ub_pp", "lb_pp", "no_csit", "tic_ap", "tic_pp"]
    meta = json.loads((tmp_path / "f1.csv.json").read_text())
    assert meta["overrides"] == {"B": "950"}
    assert meta["parameters"]["B"] == [950]
    assert meta["parameters"]["sigmaN2"] == 4.0


def test_figure_range_override(capsys):
    code, out, _ = run(["figure", "fig4", "Ebar=1:5:2"], capsys)
    assert [r["Ebar"] for r in rows(out)] == ["1", "3", "5"]


def test_figure_unknown_parameter(capsys):
    code, _, _ = run(["figure", "fig4", "pbar=3"], capsys)
    assert code == 2


def test_output_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BLOCKFADE_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(["figure", "fig5", "B=450"], capsys)
    assert code == 0
    assert (tmp_path / "fig5.csv").exists() and (tmp_path / "fig5.csv.json").exists()


def test_simulate_deterministic(tmp_path, capsys):
    args = ["simulate", "save-transmit", *FIG4_CHANNEL, "seed=7", "trials=600", "save_slots=0"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["workers=3", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_trace(tmp_path, capsys):
    tr = tmp_path / "trace.csv"
    code, out, _ = run(["simulate", "save-transmit", *FIG4_CHANNEL, "trials=2", "save_slots=5",
                        "--trace", str(tr)], capsys)
    assert code == 0
    lines = tr.read_text().splitlines()
    assert lines[0] == "slot,arrival,buffer,symbol_energy,outage"
    assert len(lines) == 1 + 5 + 8000


def test_simulate_violation(capsys):
    code, out, _ = run(["simulate", "power-violation", "sigmaH2=0.1", "sigmaN2=4", "pbar_dB=5", "nc=10", "B=1000",
                        "eps=0.05", "trials=200"], capsys)
    r = rows(out)[0]
    assert code == 0 and r["bound_vacuous"] == "1" and r["note"] == "bound vacuous"


def test_format_and_helpers():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(12) == "12" and fmt(True) == "1" and fmt(None) == ""
    assert render_csv(["a", "b"], [[1.5, "x"]]) == "a,b\n1.5,x\n"
    with pytest.raises(ParseError):
        parse_pairs(["novalue"], "test")
    p = typed_params({"pbar_dB": "10"}, {"pbar"}, {"pbar": float})
    assert p["pbar"] == pytest.approx(10.0)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "blockfade", "waterfill", "sigmaH2=0.1", "sigmaN2=4", "pbar_dB=5"],
                          capture_output=True, text=True, env={**os.environ, "BLOCKFADE_OUTPUT_DIR": ""})
    assert proc.returncode == 0 and "0.689171614" in proc.stdout


def test_fig1_capacity_column():
    cols, data, _ = run_figure("fig1")
    i = cols.index("capacity")
    assert all(abs(r[i] - 0.6892) <= 5e-4 for r in data)
    assert len(cols) == 7 and len(data) == 11


def test_fig3_columns():
    cols, data, _ = run_figure("fig3", {"pbar": [5.0]})
    assert cols[0] == "pbar" and "lb_pp_sh0.4" in cols and "no_csit_sh0.1" in cols
    assert len(data) == 1


def test_fig2_ap_above_pp_lower():
    cols, data, _ = run_figure("fig2")
    ap, lb = cols.index("ap_ub_pp"), cols.index("lb_pp")
    assert all(r[ap] >= r[lb] for r in data)
