import io

import pytest

from fracspde import __version__
from fracspde.cli import ConfigError, main, parse_config, read_config_file


@pytest.fixture(autouse=True)
def _no_worker_env(monkeypatch):
    monkeypatch.delenv("FRACSPDE_WORKERS", raising=False)


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


def test_happy_path():
    cfg = parse_config(["convergence", "--alpha", "0.5", "--levels", "2:6", "--realizations", "200", "--seed", "42"])
    assert (cfg.alpha, cfg.levels, cfg.I, cfg.seed) == (0.5, (2, 3, 4, 5, 6), 200, 42)
    assert cfg.tau_ref == 2.0**-13 and cfg.M == 64


def test_alpha_out_of_range_names_range():
    with pytest.raises(ConfigError) as exc:
        parse_config(["convergence", "--alpha", "2.5"])
    assert exc.value.key == "alpha" and "(0, 2)" in str(exc.value)


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("seed = 1\nalpha = 1.3  # diffusion-wave\n", encoding="utf-8")
    cfg = parse_config(["convergence", "--config", str(f), "--seed", "7"])
    assert cfg.seed == 7 and cfg.alpha == 1.3
    assert cfg.sources["seed"] == "flag" and cfg.sources["alpha"] == "file"
    assert parse_config(["convergence", "--config", str(f)]).seed == 1
    assert parse_config(["convergence"], config_file=f).seed == 1


def test_env_sets_default_workers(monkeypatch, tmp_path):
    monkeypatch.setenv("FRACSPDE_WORKERS", "3")
    assert parse_config(["convergence"]).workers == 3
    f = tmp_path / "w.cfg"
    f.write_text("workers = 2\n")
    assert parse_config(["convergence", "--config", str(f)]).workers == 2
    assert parse_config(["convergence", "--config", str(f), "--workers", "5"]).workers == 5
    monkeypatch.setenv("FRACSPDE_WORKERS", "zero")
    with pytest.raises(ConfigError):
        parse_config(["convergence"])


@pytest.mark.parametrize(
    "text,key",
    [("bogus = 1\n", "bogus"), ("M = ten\n", "M"), ("M = 1\n", "M"), ("levels = 6:2\n", "levels"), ("no equals sign\n", "line 1")],
)
def test_file_errors(tmp_path, text, key):
    f = tmp_path / "bad.cfg"
    f.write_text(text)
    with pytest.raises(ConfigError) as exc:
        parse_config(["convergence", "--config", str(f)])
    assert exc.value.key == key


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "absent.cfg")


def test_power_of_two_syntax():
    assert parse_config(["convergence", "--tau-ref", "2^-10"]).tau_ref == 2.0**-10
    assert parse_config(["field-stats", "--tau", "2**-5"]).tau == 2.0**-5


def test_subcommand_defaults():
    fs = parse_config(["field-stats"])
    assert (fs.M, fs.epsilon, fs.I) == (32, 0.1, 1000)


@pytest.mark.parametrize(
    "argv",
    [["convergence", "--alpha", "0"], ["convergence", "--seed", "-1"], ["weights", "--n", "x"], ["nosuch"], ["weights", "--levels", "2:4"]],
)
def test_bad_invocations_exit_nonzero(argv, capsys):
    code, _ = run(argv)
    assert code != 0


def test_parabolic_needs_alpha_one():
    code, _ = run(["convergence", "--example", "parabolic_stochastic", "--alpha", "0.5"])
    assert code == 2


def test_weights_csv():
    code, out = run(["weights", "--alpha", "0.5", "--n", "3"])
    assert code == 0
    assert out == "j,b_j\n0,1.0\n1,-0.5\n2,-0.125\n3,-0.0625\n"


def test_kernel_csv():
    code, out = run(["kernel", "--alpha", "0.5", "--lambda", "9.8696", "--tmax", "1", "--points", "4"])
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,F_ml,F_contour,abs_diff" and len(lines) == 5
    assert all(float(l.split(",")[3]) < 1e-8 for l in lines[1:])


@pytest.mark.parametrize("disc", ["modal", "fem"])
def test_solve_csv(disc):
    code, out = run(["solve", "--discretization", disc, "--M", "8", "--steps", "16", "--epsilon", "0.1"])
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x,u" and len(lines) == 10
    assert lines[1] == "0.0,0.0" and lines[-1] == "1.0,0.0"


def test_convergence_outputs_and_byte_identical_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["convergence", "--levels", "2:4", "--tau-ref", "2^-6", "--realizations", "8", "--M", "8", "--workers", "2"]
    code, out = run(argv + ["--out", str(a)])
    assert code == 0 and "order" in out
    assert sorted(p.name for p in a.iterdir()) == ["convergence.csv", "manifest.txt", "plot.gp"]
    manifest = (a / "manifest.txt").read_text()
    assert f"# version = v{__version__}" in manifest and "tau_ref = 0.015625" in manifest
    code, _ = run(["convergence", "--config", str(a / "manifest.txt"), "--out", str(b), "--workers", "1"])
    assert code == 0
    assert (a / "convergence.csv").read_bytes() == (b / "convergence.csv").read_bytes()
    csv = (a / "convergence.csv").read_bytes()
    assert b"\r" not in csv and csv.startswith(b"k,tau,E_tau,stderr,ratio,order\n")
    plot = (a / "plot.gp").read_text()
    assert "logscale xy" in plot and "convergence.csv" in plot


def test_field_stats_outputs(tmp_path):
    code, _ = run(["field-stats", "--realizations", "6", "--M", "8", "--tau", "2^-3", "--out", str(tmp_path)])
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["field.csv", "manifest.txt", "plot.gp"]
    plot = (tmp_path / "plot.gp").read_text()
    assert "multiplot layout 1,2" in plot and "sample 3" in plot
    assert (tmp_path / "field.csv").read_text().startswith("x,mean,std,sample1,sample2,sample3,exact\n")


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _ = run(["field-stats", "--realizations", "3", "--M", "4", "--tau", "0.5", "--out", str(blocker / "sub")])
    assert code == 1


def test_selftest_passes():
    code, out = run(["selftest"])
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6 and all(l.startswith("PASS") for l in lines)


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "fracspde", "weights", "--alpha", "1", "--n", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "j,b_j\n0,1.0\n1,0.0\n2,0.0\n"
