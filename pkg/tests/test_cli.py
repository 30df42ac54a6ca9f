import json
from pathlib import Path

import numpy as np
import pytest

from magnon_bloch import cli, io
from magnon_bloch.config import PROFILES, ConfigError, parse_config

SMALL = """
[geometry]
total_sites = 21

[model]
Delta = {delta}
B = 0.2

[time]
periods = {periods}
samples_per_period = 64
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_profiles_fill_defaults():
    cfg = parse_config("[model]\nDelta = -1.5\n", "desk")
    assert (cfg.total_sites, cfg.B, cfg.periods, cfg.samples_per_period) == (41, 0.1, 1, 256)
    cfg = parse_config("[model]\nDelta = -1.5\n", "paper")
    assert (cfg.total_sites, cfg.B, cfg.periods, cfg.samples_per_period) == (101, 0.05, 4, 256)
    assert cfg.snapshots == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert cfg.exponent == 0.5 and cfg.positions == (-1, 0)
    assert set(PROFILES) == {"desk", "paper"}


def test_sweep_list():
    cfg = parse_config("[model]\nDelta = [0, -1, -1.5, -5]\n")
    assert cfg.deltas == (0.0, -1.0, -1.5, -5.0)
    with pytest.raises(ConfigError, match="single Delta"):
        cfg.delta


@pytest.mark.parametrize("text,line,msg", [
    ("[model]\nDelta = -1.5\n[time]\nperiods = 0\n", 3, "zero length"),
    ("[model]\nDelta = -1.5\n\n[geometry]\ntotal_sites = 40\n", 5, "odd"),
    ("[model]\nDelta = -1.5\nGamma = 2\n", 3, "unknown key"),
    ("[model]\nB = 0.1\n", 1, "model.Delta"),
    ("[model]\nDelta = 'big'\n", 2, "number"),
    ("[model]\nDelta = 1\n[initial]\npositions = [0, 0]\n", 4, "distinct"),
    ("[model]\nDelta = 1\n[extra]\nx = 1\n", 3, "unknown section"),
    ("[model]\nDelta = 1\n[propagator]\nmethod = 'rk4'\n", 4, "propagator.method"),
])
def test_config_errors_name_the_line(text, line, msg):
    with pytest.raises(ConfigError, match=msg) as info:
        parse_config(text, source="run.toml")
    assert f"run.toml:{line}:" in str(info.value)


def test_zero_field_rejected_for_dynamics(tmp_path, capsys):
    cfg = write(tmp_path, "[model]\nDelta = 0.0\nB = 0.0\n")
    assert run("evolve", "--config", cfg, "--out", tmp_path / "out") == 2
    err = capsys.readouterr().err
    assert "run.toml:3" in err and "nonzero" in err


def test_unwritable_output(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(delta=0.0, periods=1))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run("evolve", "--config", cfg, "--out", blocker / "sub") == 2
    assert "output directory" in capsys.readouterr().err


def test_evolve_outputs(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta=0.0, periods=1))
    out = tmp_path / "ev"
    assert run("evolve", "--config", cfg, "--out", out) == 0
    assert len(list(out.glob("C_t*.csv"))) == 5
    assert len(list(out.glob("Gamma_t*.csv"))) == 5
    dist = io.read_table(out / "distribution.csv")
    assert len(dist["t"]) == 65
    assert dist["t_over_TB"][-1] == pytest.approx(1.0)
    assert [k for k in dist][2:] == [str(s) for s in range(-10, 11)]
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        assert io.sha256(out / name) == digest
    assert manifest["results"]["con7_max_residual"] <= 1e-10
    assert manifest["parameters"]["Delta"] == [0.0]
    assert (out / "plot.py").exists()
    C = np.loadtxt(out / "C_t0.0000.csv", delimiter=",", skiprows=1)[:, 1:]
    np.testing.assert_array_equal(np.diag(C), 0.25)


def test_reruns_are_bit_identical(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta=-1.5, periods=1))
    for name in ("a", "b"):
        assert run("evolve", "--config", cfg, "--out", tmp_path / name) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_writes_subdirectories(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta="[0.0, -1.0, -1.5, -5.0]", periods=4)
                + "\n[observables]\ncorrelations = false\npair_correlations = false\n")
    out = tmp_path / "sweep"
    assert run("evolve", "--config", cfg, "--out", out, "--propagator", "krylov") == 0
    dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
    assert dirs == ["Delta_+0", "Delta_-1", "Delta_-1.5", "Delta_-5"]
    for d in dirs:
        F = io.read_table(out / d / "fidelity.csv")["fidelity"]
        assert len(F) == 257 and F[0] == pytest.approx(1.0)


def test_analyze_two_peaks(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta=-1.5, periods=4).replace("21", "41"))
    assert run("evolve", "--config", cfg, "--out", tmp_path / "ev") == 0
    out = tmp_path / "an"
    assert run("analyze", "--input", tmp_path / "ev" / "deviation.csv", "--column", "D", "--out", out) == 0
    peaks = io.read_table(out / "peaks.csv")["omega_peak"]
    bin_width = json.loads((out / "gradient.json").read_text())["bin_width"]
    assert bin_width == pytest.approx(0.05)
    assert np.min(np.abs(peaks - 0.2)) <= bin_width
    assert np.min(np.abs(peaks - 0.4)) <= bin_width
    assert list(io.read_table(out / "spectrum.csv")) == ["omega", "magnitude"]


def test_analyze_missing_column(tmp_path, capsys):
    table = io.write_columns(tmp_path / "x.csv", ["t", "y"], [np.arange(32.0), np.sin(np.arange(32.0))])
    assert run("analyze", "--input", table, "--column", "z", "--out", tmp_path / "o") == 2
    assert "no column" in capsys.readouterr().err


def test_spectrum_command(tmp_path):
    cfg = write(tmp_path, "[geometry]\ntotal_sites = 15\n[model]\nDelta = -5.0\n")
    out = tmp_path / "sp"
    assert run("spectrum", "--config", cfg, "--out", out) == 0
    table = io.read_table(out / "spectrum.csv")
    assert list(table) == ["alpha", "K", "E", "bound_flag", "P"]
    assert table["bound_flag"].sum() == 15
    assert table["P"].sum() == pytest.approx(1.0, abs=1e-10)


def test_effective_command(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta=-5.0, periods=1))
    out = tmp_path / "ef"
    assert run("effective", "--config", cfg, "--out", out) == 0
    table = io.read_table(out / "effective.csv")
    assert {"centroid_full", "centroid_eff", "D_full", "D_eff"} <= set(table)
    summary = json.loads((out / "manifest.json").read_text())["results"]
    assert summary["max_centroid_difference_first_period"] <= 0.5


@pytest.mark.parametrize("variant", ["reflect", "flip-field"])
def test_symmetry_command(tmp_path, variant):
    cfg = write(tmp_path, SMALL.format(delta=-1.5, periods=1) + "\n[symmetry]\ntrace = [2, 3]\n")
    out = tmp_path / variant
    assert run("symmetry", "--config", cfg, "--out", out, "--variant", variant) == 0
    report = json.loads((out / "symmetry.json").read_text())
    assert report["variant"] == variant
    assert report["run_b"]["Delta"] == 1.5
    trace = io.read_table(out / "trace.csv")
    assert len(trace["t"]) == 65
    if variant == "reflect":
        assert report["trace"]["sites_b"] == [-4, -3]
    else:
        assert report["max_deviation"] <= 1e-9


def test_zero_interaction_symmetry_is_exact(tmp_path):
    cfg = write(tmp_path, SMALL.format(delta=0.0, periods=1))
    assert run("symmetry", "--config", cfg, "--out", tmp_path / "s", "--variant", "flip-field") == 0
    assert json.loads((tmp_path / "s" / "symmetry.json").read_text())["max_deviation"] <= 1e-12


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.toml")),
                         ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    from magnon_bloch.config import load_config

    cfg = load_config(path, "paper")
    assert cfg.total_sites % 2 == 1 and cfg.deltas
