"""End-to-end CLI smoke tests through main(argv) and the console script."""

import subprocess
import sys

import pytest

from ia_das.cli import main

SWEEP_YAML = """
shape: {users: 3, tx_antennas: 2, rx_antennas: 2, streams: 1, rrus: 2}
sweep:
  snr_db: [0, 10]
  constraint_modes: [unconstrained]
solver: {max_iters: 400}
trials: 4
"""

CLUSTER_YAML = """
shape: {users: 7, tx_antennas: 5, rx_antennas: 2, streams: 1, rrus: 5}
cell:
  bin_edges_m: [0, 150, 300]
  drops_per_bin: 2
  grid_points: 3
  arms: [rru_selection, colocated]
solver: {max_iters: 60, strict_max_iters: 60}
trials: 2
"""


@pytest.fixture
def sweep_cfg(tmp_path):
    p = tmp_path / "sweep.yaml"
    p.write_text(SWEEP_YAML)
    return str(p)


@pytest.fixture
def cluster_cfg(tmp_path):
    p = tmp_path / "cluster.yaml"
    p.write_text(CLUSTER_YAML)
    return str(p)


def test_properness_prints_table_and_writes_csv(tmp_path, capsys):
    out = tmp_path / "prop.csv"
    assert main(["properness", "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "classification" in table and "strictly_feasible" in table
    lines = out.read_text().splitlines()
    assert lines[0] == "# command: properness"
    assert lines[2].startswith("shape,users,tx_antennas")
    assert len(lines) == 3 + 6  # two comments + header + default shape list


def test_sweep_to_stdout(sweep_cfg, capsys):
    assert main(["sweep", "--config", sweep_cfg]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "# command: sweep"
    assert lines[2].split(",")[:4] == ["experiment", "shape", "constraint_mode", "snr_db"]
    assert len(lines) == 3 + 2  # one arm, two SNR points
    assert out.endswith("\n")


def test_sweep_csv_bytes_are_reproducible(sweep_cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", sweep_cfg, "--out", str(a)]) == 0
    assert main(["sweep", "--config", sweep_cfg, "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_override_changes_numbers(sweep_cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", sweep_cfg, "--seed", "1", "--out", str(a)]) == 0
    assert main(["sweep", "--config", sweep_cfg, "--seed", "2", "--out", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_trials_override_shows_in_rows(sweep_cfg, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["sweep", "--config", sweep_cfg, "--trials", "3", "--out", str(out)]) == 0
    data = out.read_text().splitlines()[3:]
    cols = out.read_text().splitlines()[2].split(",")
    idx = cols.index("trials")
    assert all(line.split(",")[idx] == "3" for line in data)


def test_backoff_predict_smoke(sweep_cfg, tmp_path):
    out = tmp_path / "bp.csv"
    assert main(["backoff-predict", "--config", sweep_cfg, "--out", str(out)]) == 0
    text = out.read_text()
    assert "backoff_predicted" in text and "high_snr_valid" in text


def test_rate_vs_distance_smoke(cluster_cfg, tmp_path):
    out = tmp_path / "dist.csv"
    assert main(["rate-vs-distance", "--config", cluster_cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[2].split(",")[3] == "distance_m"
    assert len(lines) == 3 + 2 * 2  # two arms, two bins


def test_cellmap_smoke(cluster_cfg, tmp_path):
    out = tmp_path / "map.csv"
    assert main(["cellmap", "--config", cluster_cfg, "--out", str(out)]) == 0
    header = out.read_text().splitlines()[2].split(",")
    assert header[3:5] == ["grid_x", "grid_y"]


def test_unknown_config_key_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("solver: {tolerance: 1e-9}\n")
    assert main(["sweep", "--config", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_invalid_override_exits_2(sweep_cfg):
    assert main(["sweep", "--config", sweep_cfg, "--trials", "0"]) == 2


def test_cluster_shape_mismatch_exits_2(sweep_cfg):
    # the sweep shape has 3 users; the cluster needs 7
    assert main(["rate-vs-distance", "--config", sweep_cfg]) == 2


def test_console_script_runs_in_subprocess(sweep_cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "ia_das.cli", "sweep", "--config", sweep_cfg],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("# command: sweep")
