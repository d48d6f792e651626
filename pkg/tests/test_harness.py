import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pacreach import DomainError, Ellipsoid, SampleBatch, UniformBall, conformal_index, scores
from pacreach.cli import main
from pacreach.harness import (
    ExperimentConfig,
    cmd_bridge,
    cmd_sample,
    load_config,
    run_fig2,
    run_fig3,
)

CONFIG = str(Path(__file__).resolve().parents[1] / "configs" / "duffing.toml")


def quick(**kw):
    # short horizon keeps harness tests fast
    base = dict(t1=0.5, h=0.01, n_train=300, m_test=300, repetitions=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_load_config_file_and_overrides(tmp_path):
    cfg = load_config(CONFIG)
    assert cfg == ExperimentConfig(out_dir="out")
    cfg = load_config(CONFIG, seed=7, out_dir=str(tmp_path))
    assert cfg.seed == 7 and cfg.out_dir == str(tmp_path)


def test_load_config_tables(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        'seed = 3\n[initial]\nkind = "box"\nlow = [0, 0]\nhigh = [1, 2]\n'
        '[disturbance]\nkind = "box"\nlow = [-0.1]\nhigh = [0.1]\n[experiment]\nrepetitions = 2\n'
    )
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.repetitions == 2
    assert cfg.initial.high == (1, 2) and cfg.disturbance.low == (-0.1,)


def test_config_validation(tmp_path):
    with pytest.raises(DomainError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(DomainError):
        ExperimentConfig(fig3_fit="other")
    path = tmp_path / "bad.toml"
    path.write_text("[experiment]\nbogus = 1\n")
    with pytest.raises(DomainError):
        load_config(path)


def test_sample_point_mass(tmp_path):
    cfg = quick(initial=UniformBall(center=(0.2, 0.1), radius=0.0), out_dir=str(tmp_path))
    batch, path = cmd_sample(cfg, 3)
    lines = open(path).read().splitlines()
    assert lines[0] == "x1,x2" and len(lines) == 4
    assert lines[1] == lines[2] == lines[3]


def test_sample_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["sample", "--config", CONFIG, "-n", "1500", "--seed", "42", "--out-dir", str(a)]) == 0
    assert main(["sample", "--config", CONFIG, "-n", "1500", "--seed", "42", "--out-dir", str(b)]) == 0
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert main(["sample", "-n", "0", "--out-dir", str(tmp_path)]) == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("x1,x2\n0,0\n1,1\n2,2\n3,3\n")
    assert main(["fit", str(flat), "--out-dir", str(tmp_path)]) == 3
    assert "do not span" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["certify"])
    assert info.value.code == 2


def test_fit_unit_circle(tmp_path, capsys):
    pts = tmp_path / "circle.csv"
    pts.write_text("x1,x2\n1,0\n-1,0\n0,1\n0,-1\n")
    out = tmp_path / "e.json"
    assert main(["fit", str(pts), "-o", str(out)]) == 0
    E = Ellipsoid.from_json(out.read_text())
    np.testing.assert_allclose(E.A, np.eye(2), atol=1e-6)
    assert json.loads(capsys.readouterr().out)["n_x"] == 2


def test_fit_duffing_file_contains_all(tmp_path):
    assert main(["sample", "-n", "1500", "--out-dir", str(tmp_path)]) == 0
    assert main(["fit", str(tmp_path / "samples.csv"), "--out-dir", str(tmp_path)]) == 0
    E = Ellipsoid.from_json((tmp_path / "ellipsoid.json").read_text())
    batch = SampleBatch.from_csv(tmp_path / "samples.csv")
    assert np.max(E.score(batch)) <= 1e-9


def certify(tmp_path, capsys, *args):
    code = main(["certify", str(tmp_path / "unit.json"), str(tmp_path / "s.csv"), "--out-dir", str(tmp_path), *args])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


@pytest.fixture
def unit_files(tmp_path):
    (tmp_path / "unit.json").write_text(Ellipsoid(np.eye(2), np.zeros(2)).to_json())
    pts = np.random.default_rng(0).uniform(-0.6, 0.6, (100, 2))
    SampleBatch(pts).to_csv(tmp_path / "s.csv")
    return tmp_path


def test_certify_methods(unit_files, capsys):
    code, ho = certify(unit_files, capsys, "--method", "holdout", "--beta", "0.05")
    assert code == 0 and ho["violations"] == 0
    assert ho["epsilon"] == pytest.approx(0.029513, abs=1e-6)
    assert json.loads((unit_files / "certificate.json").read_text()) == ho
    _, ec = certify(unit_files, capsys, "--method", "empirical-conformal", "--beta", "0.05")
    assert abs(ec["epsilon"] - ho["epsilon"]) <= 1e-9
    code, sc = certify(unit_files, capsys, "--method", "scenario-discard", "--beta", "0.05", "--alpha", "0.2")
    batch = SampleBatch.from_csv(unit_files / "s.csv")
    from pacreach import max_discard_k

    k = max_discard_k(100, 0.2, 0.05)
    assert sc["threshold"] == scores(Ellipsoid(np.eye(2), np.zeros(2)), batch).order_statistic(100 - k)
    code, cp = certify(unit_files, capsys, "--method", "split-conformal", "--beta", "0.05", "--alpha", "0.1")
    assert code == 0 and cp["violations"] == 100 - conformal_index(100, 0.1)
    assert (unit_files / "adjusted.json").exists()


def test_certify_insufficient_calibration(unit_files, capsys):
    code, _ = certify(unit_files, capsys, "--method", "split-conformal", "--alpha", "0.001")
    assert code == 4
    code, _ = certify(unit_files, capsys, "--method", "split-conformal")
    assert code == 2


def test_fig2_rows_and_determinism(tmp_path):
    cfg = quick()
    rows = run_fig2(cfg, tmp_path / "a.csv")
    run_fig2(cfg, tmp_path / "b.csv")
    assert len(rows) == 6
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "run_id,method,k,epsilon"
    for i in range(0, 6, 2):
        (r1, m1, k1, e1), (r2, m2, k2, e2) = rows[i], rows[i + 1]
        assert r1 == r2 and (m1, m2) == ("holdout", "empirical-conformal")
        assert k1 == k2 and abs(e1 - e2) <= 1e-9
    assert len(run_fig2(quick(repetitions=1))) == 2
    refit = run_fig2(quick(refit=True))
    assert len(refit) == 6


def test_fig2_default_support():
    rows = run_fig2(ExperimentConfig(repetitions=5))
    assert all(0.012 <= r[3] <= 0.035 for r in rows)


def test_fig3_small(tmp_path):
    res = run_fig3(ExperimentConfig(), "small", tmp_path / "f.csv", tmp_path / "f.svg")
    (m1, K1, r1, t1, vb1, va1), (m2, K2, r2, t2, vb2, va2) = res.rows
    assert (m1, m2) == ("split-conformal", "scenario-discard")
    assert K1 == K2 == 1047 and r1 == 51 and abs(r2 - 6) <= 1
    assert vb1 == vb2 and va1 < va2 <= vb2
    svg = (tmp_path / "f.svg").read_text()
    assert svg.count("<path") == 4 and svg.startswith("<svg")
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "method,K,removed_count,threshold,volume_before,volume_after"


def test_fig3_separate_fit_runs():
    res = run_fig3(quick(fig3_fit="separate"), K=500)
    assert res.rows[0][4] == res.rows[1][4]
    assert res.rows[0][5] < res.rows[0][4]


def test_fig3_large():
    res = run_fig3(ExperimentConfig(), "large")
    (_, K, r1, t1, _, _), (_, _, r2, t2, _, _) = res.rows
    assert K == 72347 and r1 == 3616 and abs(r2 - 3231) <= 2
    s = np.sort(res.initial.score(res.batch))
    assert abs(t1 - t2) < 0.05 * (s[-1] - s[0])


def test_bridge_command(tmp_path, capsys):
    reports, joint = cmd_bridge(0.05)
    assert all(r.passed for r in reports if r.theorem == "thm4")
    thm5 = [r for r in reports if r.theorem == "thm5"]
    assert thm5[0].mode == "exact" and thm5[0].passed
    assert thm5[1].mode == "approximate"
    assert not joint["feasible"]
    assert main(["bridge", "--beta", "1e-9", "--out-dir", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "bridge.json").read_text())
    assert len(data["reports"]) == len(reports)
    assert "joint parameterization" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "pacreach", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("sample", "fit", "certify", "bridge", "fig2", "fig3"):
        assert cmd in out.stdout
