import json
import os
import subprocess
import sys

import pytest

RUN = [sys.executable, "-m", "geodesicj.cli"]


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        RUN + list(args), capture_output=True, text=True, env=env, timeout=500
    )


def test_usage_error_exit_2():
    assert run_cli("classes", "-1").returncode == 2
    assert run_cli("classes", "9").returncode == 2
    assert run_cli("j", "0", "-1").returncode == 2
    assert run_cli("nonsense").returncode == 2


def test_classes_output():
    out = run_cli("classes", "5")
    assert out.returncode == 0
    assert "2 classes" in out.stdout
    assert "t=9, u=4" in out.stdout
    out = run_cli("classes", "2")
    assert "1 classes" in out.stdout
    out = run_cli("classes", "82")
    assert out.returncode == 0 and "4 classes" in out.stdout and "paired with" in out.stdout
    out = run_cli("classes", "1")
    assert out.returncode == 0 and "2 classes" in out.stdout


def test_classes_json_deterministic():
    a = run_cli("classes", "5", "--json")
    b = run_cli("classes", "5", "--json")
    assert a.returncode == 0
    assert a.stdout == b.stdout
    data = json.loads(a.stdout)
    assert data["N"] == "5" and len(data["reps"]) == 2


def test_j_and_inverse():
    out = run_cli("j", "0", "1")
    assert out.returncode == 0
    assert out.stdout.split()[0].startswith("1728.0")
    out = run_cli("invertj", "1728", "0")
    xs = out.stdout.split()
    assert abs(float(xs[0])) < 1e-12 and abs(float(xs[1]) - 1) < 1e-12
    out = run_cli("j", "2", "1")
    assert out.stdout.split()[0].startswith("1728.0")


def test_lambda_value():
    out = run_cli("lambda", "0", "1")
    assert out.returncode == 0
    assert out.stdout.split()[0].startswith("0.5")


def test_lemniscate_pass_and_fail():
    assert run_cli("lemniscate", "--samples", "32").returncode == 0
    out = run_cli("lemniscate", "--samples", "16", "--tol", "1e-300")
    assert out.returncode == 1
    assert "raise --prec" in out.stdout


def test_env_override_prec():
    out = run_cli("lemniscate", "--samples", "16", env_extra={"GEODESICJ_PREC": "32"})
    assert out.returncode == 2  # below the minimum precision


def test_zn_quick(tmp_path):
    out = run_cli(
        "zn", "2", "--skip-cover", "--samples", "40", "--out", str(tmp_path),
        "--prec", "160",
    )
    assert out.returncode == 0, out.stdout + out.stderr
    assert (tmp_path / "zn_2.csv").exists()
    report = json.loads((tmp_path / "zn_2_report.json").read_text())
    assert report["N"] == 2 and all(r["passed"] for r in report["reports"])


def test_zn_svg_two_colors(tmp_path):
    out = run_cli(
        "zn", "5", "--skip-cover", "--samples", "40", "--out", str(tmp_path),
        "--format", "svg", "--prec", "160",
    )
    assert out.returncode == 0, out.stdout + out.stderr
    text = (tmp_path / "zn_5.svg").read_text()
    assert text.count("<polyline") == 2
    assert "#1f4fbf" in text and "#c02a2a" in text
    assert "intersections:" in out.stdout and "1728" in out.stdout


def test_algtest_exp_circle():
    out = run_cli("algtest", "--exp", "L", "0.5")
    assert out.returncode == 0
    assert "WeaklyBialgebraic(degree=2" in out.stdout
    assert "Strong" in out.stdout


def test_algtest_vertical():
    out = run_cli("algtest", "--vertical", "0", "--dmax", "2", "--samples", "250",
                  "--prec", "160")
    assert out.returncode == 0
    assert "WeaklyBialgebraic(degree=1" in out.stdout


def test_algtest_requires_input():
    assert run_cli("algtest").returncode == 2
