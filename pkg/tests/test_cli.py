import subprocess
import sys

import numpy as np
import pytest

from ssmlab import cli
from ssmlab.ssm_core import softplus


def run_cli(argv):
    """Invoke the CLI entry point in-process; normalize SystemExit to a code."""
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)


CONVERGE_SMALL = ["converge", "--seed", "3", "--pairs", "2", "--taus", "0.0625,0.03125", "--scales", "1,4"]


def test_converge_writes_csv(tmp_path, capsys):
    out = tmp_path / "records.csv"
    assert run_cli(CONVERGE_SMALL + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "pair_id,flavor,method,tau,scale,rel_max_error,abs_max_error,bound,order_fit_group"
    assert len(lines) == 33  # header + 2 pairs x 2 flavors x 2 methods x 2 taus x 2 scales
    stdout = capsys.readouterr().out
    assert "wrote 32 rows" in stdout
    assert "median" in stdout.lower()


def test_converge_reruns_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_cli(CONVERGE_SMALL + ["--out", str(a)])
    run_cli(CONVERGE_SMALL + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_converge_thread_count_does_not_change_output(tmp_path, monkeypatch):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_cli(CONVERGE_SMALL + ["--out", str(a), "--threads", "1"])
    monkeypatch.setenv("SSMLAB_THREADS", "3")
    run_cli(CONVERGE_SMALL + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run_cli(["converge", "--seed", "0", "--pairs", "0", "--out", str(tmp_path / "x.csv")]) == 1
    assert "pairs" in capsys.readouterr().err
    assert run_cli(["no-such-command"]) == 1
    assert run_cli([]) == 1
    assert run_cli(["converge", "--pairs", "2", "--out", str(tmp_path / "x.csv")]) == 1  # seed is required
    assert run_cli(["converge", "--seed", "-1", "--pairs", "2", "--out", str(tmp_path / "x.csv")]) == 1


def test_gen_dynsys_csv_layout(tmp_path):
    out = tmp_path / "traj.csv"
    assert run_cli(["gen-dynsys", "--kind", "vdp", "--count", "3", "--seed", "21", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "sample_id,kind,param_json,t,x"
    assert len(lines) == 1 + 3 * 101
    blobs = {line.split(",")[2] for line in lines[1:]}
    assert len(blobs) == 3
    assert all(blob.startswith("mu=") for blob in blobs)
    sample_ids = [line.split(",")[0] for line in lines[1:]]
    assert sample_ids == ["0"] * 101 + ["1"] * 101 + ["2"] * 101


def test_gen_dynsys_pinned_params_noise_free_decay(tmp_path):
    out = tmp_path / "ou.csv"
    code = run_cli(
        [
            "gen-dynsys",
            "--kind",
            "ou",
            "--count",
            "2",
            "--seed",
            "5",
            "--params",
            "theta=1,sigma=0",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    assert all(row[2] == "theta=1;sigma=0" for row in rows)
    for sample_id in ("0", "1"):
        t = np.array([float(r[3]) for r in rows if r[0] == sample_id])
        x = np.array([float(r[4]) for r in rows if r[0] == sample_id])
        assert len(t) == 101
        np.testing.assert_allclose(x, x[0] * np.exp(-t), rtol=2e-3)
        np.testing.assert_allclose(x, x[0] * (1.0 - 0.001) ** (10.0 * np.arange(101)), rtol=1e-12)


def test_gen_dynsys_bad_params_exit_1(tmp_path, capsys):
    code = run_cli(
        ["gen-dynsys", "--kind", "vdp", "--count", "1", "--seed", "0", "--params", "mu=-1", "--out", str(tmp_path / "x.csv")]
    )
    assert code == 1
    assert "mu" in capsys.readouterr().err


METRIC_SMALL = ["metric", "--kind", "vdp", "--count", "6", "--seed", "21", "--lags", "2", "--far-pair-samples", "2000"]


def test_metric_csv_layout(tmp_path, capsys):
    out = tmp_path / "mu.csv"
    assert run_cli(METRIC_SMALL + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    # header + 3 etas x 2 lags + aggregate header + 3 aggregate rows
    assert len(lines) == 1 + 6 + 1 + 3
    assert lines[0] == "eta,lag,mu"
    assert lines[7] == "eta,mu_total"
    assert "spearman(eta, mu_lag1)" in capsys.readouterr().out


def test_metric_is_deterministic_and_increasing_in_eta(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_cli(METRIC_SMALL + ["--out", str(a)])
    run_cli(METRIC_SMALL + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    totals = [float(line.split(",")[1]) for line in lines[8:]]
    assert totals == sorted(totals)  # smoother embeddings score higher here


def test_metric_rejects_impossible_gap(tmp_path, capsys):
    code = run_cli(
        ["metric", "--kind", "vdp", "--count", "4", "--seed", "0", "--lags", "99", "--horizon", "1", "--out", str(tmp_path / "x.csv")]
    )
    assert code == 1
    assert "gap" in capsys.readouterr().err


def test_metric_rejects_bad_eta(tmp_path, capsys):
    code = run_cli(METRIC_SMALL + ["--etas", "0,1.5", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "eta" in capsys.readouterr().err


STAGE_SMALL = ["stagewise", "--seed", "21", "--samples", "40", "--strides", "4,2,1", "--delta", "0.04"]


def test_stagewise_csv(tmp_path, capsys):
    out = tmp_path / "stages.csv"
    assert run_cli(STAGE_SMALL + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "stage,stride,delta,epochs,cum_wall_time_s,train_mse,val_mse"
    assert len(lines) == 4
    deltas = [float(line.split(",")[2]) for line in lines[1:]]
    assert deltas == [0.04, 0.02, 0.01]
    times = [float(line.split(",")[4]) for line in lines[1:]]
    assert times == sorted(times) and times[0] > 0.0
    assert "stage" in capsys.readouterr().out


def test_stagewise_timing_none_is_byte_reproducible(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_cli(STAGE_SMALL + ["--timing", "none", "--out", str(a)])
    run_cli(STAGE_SMALL + ["--timing", "none", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert all(line.split(",")[4] == "0" for line in a.read_text().splitlines()[1:])


def test_stagewise_epoch_length_mismatch_exits_1(tmp_path, capsys):
    code = run_cli(STAGE_SMALL + ["--epochs", "1,1", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "epoch" in capsys.readouterr().err.lower()


def test_bounds_modes(capsys):
    assert run_cli(["bounds", "--s4", "--bnorm", "1", "--cnorm", "1", "--delta", "1", "--anorm", "1", "--lu", "1"]) == 0
    out = capsys.readouterr().out
    assert "s4 error coefficient: 1.7182818284590451" in out

    b_delta = -4.600166601821351
    s6_flags = ["--bnorm", "1.3", "--cnorm", "0.7", "--wdelta", "0", "--bdelta", repr(b_delta), "--anorm", "2", "--lu", "3", "--mu", "1.5"]
    assert run_cli(["bounds", "--s6"] + s6_flags) == 0
    s6_value = float(capsys.readouterr().out.split(":")[1])
    m_delta = float(softplus(b_delta))  # the gated formula derives its step bound from bdelta
    general_flags = [
        "--lu", "3", "--lb", "1.3", "--lc", "0.7", "--ldelta", "0",
        "--mu", "1.5", "--mb", "1.95", "--mc", "1.05", "--mdelta", repr(m_delta), "--anorm", "2",
    ]
    assert run_cli(["bounds", "--general"] + general_flags) == 0
    general_value = float(capsys.readouterr().out.split(":")[1])
    assert s6_value == pytest.approx(general_value, rel=1e-9)


def test_bounds_flag_validation(capsys):
    assert run_cli(["bounds", "--s4", "--bnorm", "1"]) == 1
    err = capsys.readouterr().err
    assert "--s4 needs" in err and "--cnorm" in err
    assert run_cli(["bounds", "--s4", "--s6"]) == 1
    capsys.readouterr()
    assert run_cli(["bounds", "--s4", "--bnorm", "1", "--cnorm", "1", "--delta", "1", "--anorm", "0", "--lu", "1"]) == 1
    assert "a_norm" in capsys.readouterr().err


def test_config_file_expansion(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# small convergence run\n"
        "seed = 3\n"
        "pairs = 2\n"
        "taus = 0.0625,0.03125\n"
        "scales = 1,4\n"
    )
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run_cli(["converge", "--config", str(cfg), "--out", str(a)]) == 0
    run_cli(CONVERGE_SMALL + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_config_file_explicit_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 3\npairs = 1\ntaus = 0.0625,0.03125\nscales = 1,4\n")
    out = tmp_path / "a.csv"
    assert run_cli(["converge", "--config", str(cfg), "--pairs", "2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 33


def test_config_file_missing_exits_1(tmp_path, capsys):
    code = run_cli(["converge", "--config", str(tmp_path / "nope.cfg"), "--seed", "0", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "config" in capsys.readouterr().err.lower()


def test_module_entry_point_runs_in_subprocess(tmp_path):
    out = tmp_path / "records.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "ssmlab.cli"] + CONVERGE_SMALL + ["--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "wrote 32 rows" in proc.stdout
    assert out.exists()
