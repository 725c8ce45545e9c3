import pytest
from click.testing import CliRunner

from phasemod import experiments
from phasemod.cli_io import read_grid
from phasemod.constants import TOOL_VERSION
from phasemod.errors import ConvergenceError
from phasemod.main import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert TOOL_VERSION in result.output


def test_taylor_fourier_writes_table(runner, tmp_path):
    result = runner.invoke(cli, ["taylor-fourier", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "✅ Saved" in result.output
    grid = read_grid(tmp_path / "taylor-fourier.csv")
    assert grid.z.shape == (4, 10)
    assert (tmp_path / "taylor-fourier.summary.csv").is_file()


def test_coupler_sweep_from_config(runner, tmp_path):
    config = tmp_path / "coupler.toml"
    config.write_text("[sweep]\ndynamics = false\npoints = 8\n", encoding="utf-8")
    result = runner.invoke(cli, ["coupler-sweep", "--config", str(config), "--out", str(tmp_path), "--quiet"])
    assert result.exit_code == 0, result.output
    assert "✅" not in result.output
    grid = read_grid(tmp_path / "coupler-sweep.csv")
    assert grid.x.size == 8
    assert grid.metadata["zero_coupling_flux"] == "none"


def test_invalid_config_exits_with_2(runner, tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[pulse1]\nphi_tilde = 0.6\n", encoding="utf-8")
    result = runner.invoke(cli, ["phase-sweep", "--config", str(config), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "❌" in result.output
    assert not (tmp_path / "phase-sweep.csv").exists()


def test_transfer_requires_table(runner, tmp_path):
    result = runner.invoke(cli, ["transfer", "--out", str(tmp_path)])
    assert result.exit_code == 2
    missing = runner.invoke(cli, ["transfer", "--transfer", str(tmp_path / "none.csv"), "--out", str(tmp_path)])
    assert missing.exit_code == 2
    assert "❌" in missing.output


def test_transfer_runs(runner, tmp_path):
    table = tmp_path / "attenuation.csv"
    table.write_text("omega_p,factor\n0.05,1.0\n0.5,0.6\n", encoding="utf-8")
    result = runner.invoke(cli, ["transfer", "--transfer", str(table), "--out", str(tmp_path), "--quiet"])
    assert result.exit_code == 0, result.output
    grid = read_grid(tmp_path / "transfer.csv")
    assert grid.x.size == 7


def test_numeric_failure_exits_with_3(runner, tmp_path, monkeypatch):
    def fail(cfg, workers, progress):
        raise ConvergenceError("dressed resonance did not settle")

    monkeypatch.setattr(experiments, "run_coupler_sweep", fail)
    result = runner.invoke(cli, ["coupler-sweep", "--out", str(tmp_path)])
    assert result.exit_code == 3
    assert "did not settle" in result.output


def test_unknown_profile_exits_with_2(runner, tmp_path):
    result = runner.invoke(cli, ["spectrum", "--profile", "no-such-device", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "unknown profile" in result.output
