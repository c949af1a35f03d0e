"""命令行、产物输出与汇总"""
import csv
import io
import json

import pytest

from app.cli import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main
from app.output import format_float, report_csv, report_json, write_report
from app.report import build_report
from models.report import ExperimentReport


@pytest.fixture
def quad_config(tmp_path):
    path = tmp_path / "quad.json"
    path.write_text(
        json.dumps({"potential": {"kind": "quadratic"}, "beta": 2.0, "N": 16, "samples": 60, "chains": 2}),
        encoding="utf-8",
    )
    return path


def run(*argv):
    return main([*map(str, argv), "--quiet"])


# ============================================
# 产物格式
# ============================================

def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(None) == ""
    assert format_float(float("nan")) == ""
    assert format_float(2.0) == "2"


def test_report_csv_quoting():
    report = ExperimentReport(name="demo")
    report.add_abs_row("cov", 0.25, 0.0, 0.5, {"E_i": 0.0, "E_j": 1.0})
    report.add_info("note", None, {"label": 'a,"b"'})
    text = report_csv(report)
    assert text.endswith("\r\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["quantity", "inputs", "predicted", "estimated", "stderr", "z_score", "gate", "passed"]
    assert rows[1][0] == "cov"
    assert json.loads(rows[1][1]) == {"E_i": 0.0, "E_j": 1.0}
    assert rows[1][3] == "0.25"
    assert rows[1][7] == "true"
    assert json.loads(rows[2][1]) == {"label": 'a,"b"'}
    assert rows[2][3] == "" and rows[2][7] == ""


def test_report_json_sanitizes():
    report = ExperimentReport(name="demo", notes={"bad": float("inf"), "nested": [float("nan"), 1.0]})
    document = json.loads(report_json(report))
    assert document["notes"] == {"bad": None, "nested": [None, 1.0]}
    assert document["verdict"] == "PASS"


def test_write_report_files(tmp_path):
    report = ExperimentReport(name="wegner")
    for delta, value in ((0.5, 1.0), (0.25, 0.5), (0.125, 0.25)):
        report.add_window_row("mean_count", value, None, 4 * delta + 0.5, {"delta": delta})
    paths = write_report(report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["wegner.csv", "wegner.json", "wegner.svg"]
    first = (tmp_path / "wegner.svg").read_bytes()
    write_report(report, tmp_path)
    assert (tmp_path / "wegner.svg").read_bytes() == first


# ============================================
# 子命令
# ============================================

def test_equilibrium_command(tmp_path, quad_config):
    out = tmp_path / "eq.json"
    assert run("equilibrium", "--config", quad_config, "--out", out) == EXIT_OK
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["A"] == pytest.approx(-2.0, abs=1e-8)
    assert data["B"] == pytest.approx(2.0, abs=1e-8)
    assert data["quad_order"] == 64
    rows = list(csv.reader(io.StringIO((tmp_path / "eq_density.csv").read_text(encoding="utf-8"))))
    assert rows[0] == ["t", "rho"]
    assert len(rows) == 1002


def test_verify_loops_is_deterministic(tmp_path, quad_config):
    first, second = tmp_path / "a", tmp_path / "b"
    codes = {
        run("verify-loops", "--config", quad_config, "--seed", 7, "--out", first, "--threads", 1),
        run("verify-loops", "--config", quad_config, "--seed", 7, "--out", second, "--threads", 3),
    }
    assert codes <= {EXIT_OK, EXIT_FAILED}
    assert (first / "verify-loops.csv").read_bytes() == (second / "verify-loops.csv").read_bytes()
    assert (first / "verify-loops.json").exists()


def test_sample_command_uses_cache(tmp_path, quad_config, monkeypatch):
    cache = tmp_path / "cache"
    assert run("sample", "--config", quad_config, "--cache", cache, "--out", tmp_path) == EXIT_OK
    summary = json.loads((tmp_path / "sample.json").read_text(encoding="utf-8"))
    assert summary["sets"][0]["samples"] == 120

    import services.sampler.chains as chains

    def fail(*args, **kwargs):
        raise AssertionError("不应重新采样")

    monkeypatch.setattr(chains, "_run_one_chain", fail)
    assert run("sample", "--config", quad_config, "--cache", cache, "--out", tmp_path) == EXIT_OK


def test_oracle_command(tmp_path):
    config = tmp_path / "n1.json"
    config.write_text(json.dumps({"N": 1}), encoding="utf-8")
    out = tmp_path / "oracle.json"
    assert run("oracle", "--config", config, "--observable", "trace2", "--out", out) == EXIT_OK
    assert json.loads(out.read_text(encoding="utf-8"))["value"] == pytest.approx(1.0, abs=1e-8)


def test_oracle_rejects_large_N(tmp_path, quad_config):
    assert run("oracle", "--config", quad_config, "--out", tmp_path) == EXIT_ERROR


def test_malformed_config(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"betta": 2}), encoding="utf-8")
    assert run("equilibrium", "--config", config, "--out", tmp_path) == EXIT_ERROR
    assert run("equilibrium", "--config", tmp_path / "missing.json") == EXIT_ERROR


def test_corrupted_cache_is_an_error(tmp_path, quad_config):
    cache = tmp_path / "cache"
    assert run("sample", "--config", quad_config, "--cache", cache, "--out", tmp_path) == EXIT_OK
    victim = next(cache.rglob("*.bin"))
    victim.write_bytes(b"BROKEN!!" + victim.read_bytes()[8:])
    assert run("sample", "--config", quad_config, "--cache", cache, "--out", tmp_path) == EXIT_ERROR


# ============================================
# 汇总
# ============================================

def _write(outdir, name, passed):
    report = ExperimentReport(name=name, claim=f"{name} claim")
    report.add_abs_row("x", 0.0 if passed else 1.0, 0.0, 0.5)
    write_report(report, outdir, plot=False)


def test_report_empty_directory(tmp_path):
    assert run("report", tmp_path) == EXIT_ERROR


def test_report_single_pass(tmp_path):
    _write(tmp_path, "clt", True)
    text, passed = build_report(tmp_path)
    assert passed
    assert "PASS" in text
    assert "clt claim" in text
    assert run("report", tmp_path) == EXIT_OK
    assert (tmp_path / "summary.md").exists()


def test_report_mixed_verdicts(tmp_path):
    _write(tmp_path, "clt", True)
    _write(tmp_path, "wegner", False)
    assert run("report", tmp_path) == EXIT_FAILED
    assert "FAIL" in (tmp_path / "summary.md").read_text(encoding="utf-8")
