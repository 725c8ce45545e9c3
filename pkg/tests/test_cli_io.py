import math

import numpy as np
import pytest

from phasemod.cli_io import (
    available_profiles,
    build_config,
    config_hash,
    deep_merge,
    load_profile,
    load_transfer_table,
    parse_config,
    read_config_from_grid,
    read_grid,
    summary_path,
    write_grid,
)
from phasemod.constants import SummaryRow, SweepGrid
from phasemod.errors import ConfigError


def write_toml(tmp_path, text, name="experiment.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_bundled_profiles_validate():
    names = available_profiles()
    assert "paper-device" in names
    for name in names:
        cfg = load_profile(name)
        assert cfg.system.g == pytest.approx(0.0105)


def test_sweet_spot_profile():
    cfg = load_profile("sweet-spot-first-order")
    assert cfg.name == "sweet-spot-first-order"
    assert all(p.is_sweet for p in cfg.pulses)
    assert cfg.pulses[1].phi_tilde == pytest.approx(0.13)
    assert cfg.sweep.dt == pytest.approx(1.25e-11)
    assert cfg.coupler is not None


def test_override_merges_over_profile(tmp_path):
    path = write_toml(tmp_path, "[pulse2]\nphi_tilde = 0.05\n[sweep]\npoints = 5\n")
    cfg = parse_config(path, "sweet-spot-first-order")
    assert cfg.pulses[1].phi_tilde == pytest.approx(0.05)
    assert cfg.pulses[1].omega_p == pytest.approx(0.0708)
    assert cfg.sweep.points == 5
    assert cfg.sweep.order == 1


def test_coupler_block_is_optional():
    data = {
        "system": {"q1": {"e_c": 0.24, "e_j1": 8.5, "e_j2": 8.5}, "q2": {"e_c": 0.24, "e_j1": 8.3, "e_j2": 8.3}},
        "pulse1": {"phi_bar": 0.1},
        "pulse2": {"phi_bar": 0.1},
    }
    cfg = build_config(data, profile=None)
    assert cfg.coupler is None
    assert cfg.system.alpha1 == pytest.approx(-0.248)


def test_pulse_outside_flux_domain(tmp_path):
    path = write_toml(tmp_path, "[pulse1]\nphi_bar = 0.0\nphi_tilde = 0.6\n")
    with pytest.raises(ConfigError, match="pulses"):
        parse_config(path)


@pytest.mark.parametrize("text", ["[sweep\npoints = 3\n", "[sweep]\naxis = 'time'\n"])
def test_malformed_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        parse_config(write_toml(tmp_path, text))


def test_missing_file_and_profile(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="unknown profile"):
        load_profile("no-such-device")


def test_deep_merge_keeps_siblings():
    merged = deep_merge({"a": {"b": 1, "c": 2}, "d": [1]}, {"a": {"b": 3}, "d": [2, 3]})
    assert merged == {"a": {"b": 3, "c": 2}, "d": [2, 3]}


def test_config_hash_is_stable():
    first, second = load_profile("paper-device"), load_profile("paper-device")
    assert config_hash(first) == config_hash(second)
    changed = build_config({"sweep": {"points": 7}})
    assert config_hash(changed) != config_hash(first)


def sample_grid():
    return SweepGrid(
        x_name="dphi (rad)",
        y_name="time (s)",
        x=np.linspace(0.0, math.pi, 3),
        y=np.array([0.0, 1e-9]),
        z=np.array([[1.0, 0.5, float("nan")], [0.25, 1 / 3, 0.0]]),
        summary=(
            SummaryRow(x=0.0, value=0.02, uncertainty=1e-4, analytic=0.021),
            SummaryRow(x=1.5, value=0.0, analytic=1e-5, flag="cancellation"),
            SummaryRow(x=3.1, value=float("nan"), flag="invalid: coupler below qubits"),
        ),
        metadata={"order": "1", "t_final_s": "3.5e-07"},
    )


def test_grid_round_trip(tmp_path):
    cfg = load_profile()
    grid = sample_grid()
    path = write_grid(grid, tmp_path / "out" / "phase.csv", cfg)
    assert summary_path(path).name == "phase.summary.csv"

    loaded = read_grid(path)
    assert loaded.x_name == grid.x_name
    np.testing.assert_array_equal(loaded.x, grid.x)
    np.testing.assert_array_equal(loaded.y, grid.y)
    np.testing.assert_array_equal(loaded.z, grid.z)
    assert loaded.metadata == grid.metadata
    assert [r.flag for r in loaded.summary] == ["", "cancellation", "invalid: coupler below qubits"]
    assert [r.x for r in loaded.summary] == [r.x for r in grid.summary]
    assert loaded.summary[0].analytic == 0.021
    assert math.isnan(loaded.summary[2].value)
    assert read_config_from_grid(path) == cfg


def test_empty_grid(tmp_path):
    grid = SweepGrid(x_name="x", y_name="y", x=[], y=[], z=np.empty((0, 0)))
    path = write_grid(grid, tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8").splitlines()[-1] == "x,y,z"
    assert read_grid(path).z.size == 0
    with pytest.raises(ConfigError):
        read_config_from_grid(path)


def test_transfer_table_with_header(tmp_path):
    path = tmp_path / "transfer.csv"
    path.write_text("omega_p,factor\n0.1,1.0\n0.2,0.8\n0.4,0.5\n", encoding="utf-8")
    table = load_transfer_table(path)
    assert table.frequencies == (0.1, 0.2, 0.4)
    assert table.factors == (1.0, 0.8, 0.5)


@pytest.mark.parametrize(
    "text",
    [
        "0.2,1.0\n0.1,0.8\n",
        "0.1,1.0\n0.2,1.5\n",
        "0.1,1.0,3\n0.2,0.5,3\n",
        "0.1,1.0\n",
    ],
)
def test_transfer_table_errors(tmp_path, text):
    path = tmp_path / "transfer.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_transfer_table(path)
