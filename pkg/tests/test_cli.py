import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from modelscope.cli import main
from modelscope.serialize import read_json

ART = Path(__file__).parent.parent / "data" / "artificialeg.csv"


def run_cli(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_fit_prints_full_table():
    res = run_cli("fit", "--data", ART, "--response", "y")
    assert res.exit_code == 0
    assert "(Intercept)" in res.output
    assert "x8" in res.output


def test_fit_submodel():
    res = run_cli("fit", "--data", ART, "--response", "y", "--model", "x8")
    assert res.exit_code == 0
    assert "y~x8" in res.output
    assert "logLik: -105.72" in res.output


def test_step_backward():
    res = run_cli("step", "--data", ART, "--response", "y")
    assert res.exit_code == 0
    lines = [l for l in res.output.splitlines() if l.startswith("*")]
    assert lines == ["* y~x1+x2+x3+x4+x5+x6+x7+x9"]


def test_vis_run_and_rerun_bit_identical(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    args = ["vis", "--data", ART, "--response", "y", "--B", 25, "--seed", 11]
    assert run_cli(*args, "--out", out1).exit_code == 0
    assert run_cli(*args, "--out", out2, "--cores", 2).exit_code == 0
    b1 = (out1 / "vis.json").read_bytes()
    b2 = (out2 / "vis.json").read_bytes()
    assert b1 == b2
    payload = read_json(out1 / "vis.json")
    assert payload["config"]["B"] == 25
    assert payload["config"]["seed"] == 11
    assert payload["config"]["nbest"] == 5


def test_vis_validation_exit_codes(tmp_path):
    res = CliRunner().invoke(main, ["vis", "--data", str(ART), "--response", "y",
                                    "--B", "0", "--seed", "1"])
    assert res.exit_code == 2
    res = CliRunner().invoke(main, ["vis", "--data", str(ART), "--response", "y", "--B", "5"])
    assert res.exit_code == 2  # missing seed
    res = CliRunner().invoke(main, ["af", "--data", str(ART), "--response", "y",
                                    "--seed", "1", "--c-max", "0"])
    assert res.exit_code == 2


def test_missing_column_is_runtime_error(tmp_path):
    res = CliRunner().invoke(main, ["fit", "--data", str(ART), "--response", "zz"])
    assert res.exit_code == 1
    err = json.loads(res.output.strip().splitlines()[-1])
    assert err["error"] == "MissingColumn"


@pytest.mark.slow
def test_vis_all_plots_counts(tmp_path):
    out = tmp_path / "r"
    res = run_cli("vis", "--data", ART, "--response", "y", "--B", 5, "--seed", 3,
                  "--nbest", "all", "--plots", "--out", out)
    assert res.exit_code == 0
    payload = read_json(out / "vis.json")
    n_models = sum(len(b["models"]) for b in payload["original_table"])
    assert n_models == 2 ** 10  # nine columns plus the injected RV
    for name in ("lvk.svg", "boot.svg", "vip.svg"):
        assert (out / "plots" / name).exists()


@pytest.mark.slow
def test_af_run_and_export(tmp_path):
    out = tmp_path / "af"
    res = run_cli("af", "--data", ART, "--response", "y", "--B", 12, "--n-c", 8,
                  "--seed", 5, "--out", out, "--plots")
    assert res.exit_code == 0
    payload = read_json(out / "af.json")
    assert set(payload["curves"]) == {"best_only_true", "best_only_false"}
    assert (out / "plots" / "af.svg").exists()
    res2 = run_cli("export", "--run", out)
    assert res2.exit_code == 0
