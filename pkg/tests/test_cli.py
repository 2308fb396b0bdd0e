import json
import math

import pytest
from click.testing import CliRunner

from randloop.cli import main


def run(tmp_path, task, cfg, name="cfg.json", args=()):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out = tmp_path / f"out_{name}_{task}"
    runner = CliRunner()
    result = runner.invoke(main, [task, "--config", str(path),
                                  "--out", str(out), *args])
    return result, out


def load_summary(out):
    return json.loads((out / "summary.json").read_text())


BASE = {"graph": {"kind": "chain", "n": 2}, "two_s": 1, "u": 1.0,
        "beta": 1.0, "seed": 7}


def test_ed_task(tmp_path):
    result, out = run(tmp_path, "ed", BASE)
    assert result.exit_code == 0
    s = load_summary(out)
    assert s["Z"] == pytest.approx(3 + math.exp(-2), abs=1e-9)
    assert s["ground_energy"] == pytest.approx(0.0, abs=1e-12)
    assert (out / "detail.csv").exists()


def test_sample_task(tmp_path):
    cfg = {**BASE, "n_realizations": 500}
    result, out = run(tmp_path, "sample", cfg)
    assert result.exit_code == 0
    s = load_summary(out)
    assert s["expected_mean"] == 1.0
    assert abs(s["mean_events"] - 1.0) < 0.2
    assert len(json.loads((out / "events.json").read_text())) == 500


def test_verify_z_task_and_figure(tmp_path):
    cfg = {**BASE, "sampler": {"n_samples": 20000}}
    result, out = run(tmp_path, "verify-z", cfg)
    assert result.exit_code == 0
    s = load_summary(out)
    assert s["all_pass"] is True
    assert s["comparisons"][0]["exact"] == pytest.approx(3 + math.exp(-2))
    assert (out / "figure.png").stat().st_size > 0


def test_verify_z_no_figures(tmp_path):
    cfg = {**BASE, "sampler": {"n_samples": 20000}}
    result, out = run(tmp_path, "verify-z", cfg, args=["--no-figures"])
    assert result.exit_code == 0
    assert not (out / "figure.png").exists()


def test_verify_z_byte_identical_reruns(tmp_path):
    cfg = {**BASE, "sampler": {"n_samples": 5000}}
    _, out1 = run(tmp_path, "verify-z", cfg, name="a.json")
    _, out2 = run(tmp_path, "verify-z", cfg, name="b.json")
    assert (out1 / "summary.json").read_bytes() == \
        (out2 / "summary.json").read_bytes()
    assert (out1 / "detail.csv").read_bytes() == \
        (out2 / "detail.csv").read_bytes()


def test_verify_z_detects_mismatch(tmp_path):
    # uniform theta = 3 weights against the S = 1/2 oracle: Y != Z, so the
    # comparison must fail statistically
    cfg = {**BASE, "family": "uniform", "theta": 3.0,
           "sampler": {"n_samples": 20000}}
    result, out = run(tmp_path, "verify-z", cfg)
    assert result.exit_code == 1
    assert load_summary(out)["all_pass"] is False


def test_correlate_task(tmp_path):
    cfg = {**BASE, "u": 0.5, "sampler": {"n_samples": 40000}}
    result, out = run(tmp_path, "correlate", cfg)
    assert result.exit_code == 0
    s = load_summary(out)
    names = {c["observable"] for c in s["comparisons"]}
    assert names == {"S1S1", "S2S2", "S3S3"}
    assert (out / "figure.png").exists()


def test_correlate_tilde_task(tmp_path):
    cfg = {"graph": {"kind": "chain", "n": 2}, "two_s": 2, "u": 0.5,
           "beta": 1.0, "seed": 5, "family": "field_directed",
           "sampler": {"n_samples": 40000}}
    result, out = run(tmp_path, "correlate", cfg)
    assert result.exit_code == 0
    names = {c["observable"] for c in load_summary(out)["comparisons"]}
    assert names == {"S3S3", "nematic"}


def test_gibbs_check_task(tmp_path):
    cfg = {**BASE, "beta": 0.5, "h": [0.2, -0.1],
           "sampler": {"n_samples": 20000}}
    result, out = run(tmp_path, "gibbs-check", cfg)
    assert result.exit_code == 0
    s = load_summary(out)
    assert s["n_failing_entries"] == 0
    assert s["n_entries"] == 16


def test_configs_check_task(tmp_path):
    cfg = {"graph": {"kind": "chain", "n": 3}, "two_s": 1, "u": 0.5,
           "beta": 1.0, "seed": 2, "n_realizations": 25}
    result, out = run(tmp_path, "configs-check", cfg)
    assert result.exit_code == 0
    assert load_summary(out)["all_pass"] is True


def test_macro_loop_task(tmp_path):
    cfg = {"graph": {"kind": "chain", "n": 2}, "two_s": 1, "u": 0.5,
           "beta": 1.0, "betas": [0.5, 1.0], "seed": 3, "family": "uniform",
           "theta": 2.0, "sampler": {"n_samples": 5000}}
    result, out = run(tmp_path, "macro-loop", cfg)
    assert result.exit_code == 0
    s = load_summary(out)
    assert [p["beta"] for p in s["points"]] == [0.5, 1.0]
    assert all(0 < p["mean"] <= 1 for p in s["points"])
    assert (out / "figure.png").exists()


def test_validation_errors(tmp_path):
    result, _ = run(tmp_path, "ed", {**BASE, "beta": 0.0})
    assert result.exit_code == 2
    result, _ = run(tmp_path, "ed", {**BASE, "u": 1.5})
    assert result.exit_code == 2
    result, _ = run(tmp_path, "ed", {**BASE, "task": "sample"})
    assert result.exit_code == 2
    result, _ = run(tmp_path, "ed", {**BASE, "h": [0.1]})
    assert result.exit_code == 2
    result, _ = run(tmp_path, "correlate", {**BASE, "h": [0.1, 0.2]})
    assert result.exit_code == 2


def test_invalid_json_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    result = CliRunner().invoke(main, ["ed", "--config", str(path)])
    assert result.exit_code == 2


def test_seed_override_flag_and_env(tmp_path):
    result, out = run(tmp_path, "sample", {**BASE, "n_realizations": 5},
                      args=["--seed", "99"])
    assert result.exit_code == 0
    assert load_summary(out)["seed"] == 99

    path = tmp_path / "env.json"
    path.write_text(json.dumps({**BASE, "n_realizations": 5}))
    out = tmp_path / "out_env"
    result = CliRunner().invoke(main, ["sample", "--config", str(path),
                                       "--out", str(out)],
                                env={"RANDLOOP_SEED": "123"})
    assert result.exit_code == 0
    assert load_summary(out)["seed"] == 123
