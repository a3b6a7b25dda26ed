import csv
import json

import pytest

from drcbf.cli import main
from drcbf.harness import CSV_COLUMNS, DATA_DIR, DEFAULT_CONFIG


@pytest.fixture
def short_config(tmp_path):
    text = DEFAULT_CONFIG.read_text().replace("horizon = 25.0", "horizon = 2.0")
    path = tmp_path / "short.toml"
    path.write_text(text)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_default_config_is_bundled():
    assert DEFAULT_CONFIG.parent == DATA_DIR and DEFAULT_CONFIG.exists()


def test_simulate(tmp_path, short_config):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(short_config), "--out", str(out), "--seed", "4"]) == 0
    rows = _rows(out / "trajectory.csv")
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 1 + 21
    summary = json.loads((out / "summary.json").read_text())
    assert summary["min_h"] > 0


def test_simulate_filter_override(tmp_path, short_config):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(short_config), "--out", str(out), "--filter", "none"]) == 0
    modes = {r[CSV_COLUMNS.index("mode")] for r in _rows(out / "trajectory.csv")[1:]}
    assert modes <= {"inactive", "terminal"}


def test_montecarlo(tmp_path, short_config):
    out = tmp_path / "mc"
    assert main(["montecarlo", "--config", str(short_config), "--out", str(out), "--runs", "3"]) == 0
    stats = json.loads((out / "stats.json").read_text())
    assert {"filter", "runs", "min", "max", "mean", "collisions"} <= set(stats)
    assert stats["runs"] == 3 and stats["filter"] == "reach"
    rows = _rows(out / "min_h.csv")
    assert rows[0] == ["seed", "min_h", "final_distance_to_goal"] and len(rows) == 4


def test_margins(tmp_path):
    out = tmp_path / "m"
    assert main(["margins", "--out", str(out)]) == 0
    rows = _rows(out / "margins.csv")
    assert rows[0] == ["t", "margin"] and len(rows) == 11
    mags = [abs(float(r[1])) for r in rows[1:]]
    assert mags == sorted(mags)


def test_reach(tmp_path, short_config):
    out = tmp_path / "r"
    assert main(["reach", "--config", str(short_config), "--out", str(out)]) == 0
    rows = _rows(out / "reach.csv")
    assert len(rows) == 1 + 20 and len(rows[0]) == 9
    for r in rows[1:]:
        v = [float(c) for c in r[1:]]
        assert all(lo <= hi for lo, hi in zip(v[::2], v[1::2]))


def test_constants(tmp_path):
    out = tmp_path / "c"
    assert main(["constants", "--out", str(out), "--samples", "200"]) == 0
    data = json.loads((out / "constants.json").read_text())
    assert data["meta"]["samples"] == 200
    assert all(data[k] > 0 for k in ("l_Lf", "l_Lg", "l_alpha", "l_Lp", "Delta"))


def test_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[nonsense]\nx = 1\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == 2
    assert main(["montecarlo", "--runs", "0", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("argv", [[], ["fly"], ["simulate", "--filter", "magic"], ["montecarlo", "--runs", "x"]])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
