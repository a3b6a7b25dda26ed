import math

import numpy as np
import pytest

from drcbf.barrier import ObstacleSpec
from drcbf.dynamics import BoxSet
from drcbf.harness import (CSV_COLUMNS, ConfigError, ControllerGains, load_config, margin_sweep, monte_carlo,
                           perf_controller, run_episode, scenario_from_dict, trajectory_csv)
from drcbf.margins import reach_margin_bound

BOX = BoxSet([-1, -2], [1, 2])
GOAL = np.array([45.0, 21.0])


def test_perf_controller_examples():
    np.testing.assert_array_equal(perf_controller([45.0, 21.0, 0.3, 0.0], GOAL, BOX), [0.0, 0.0])
    u = perf_controller([0.0, 21.0, 0.0, 0.5], GOAL, BOX)
    assert u[0] == 0.0 and u[1] > 0
    # goal to the left: heading error +pi/2, gain 2 -> pi, clipped to 1
    u = perf_controller([45.0, 0.0, 0.0, 0.0], GOAL, BOX)
    assert u[0] == 1.0
    u = perf_controller([45.0, 0.0, 0.0, 0.0], GOAL, BOX, ControllerGains(k_theta=0.1))
    assert u[0] == pytest.approx(0.1 * math.pi / 2)


def test_wrap_avoids_full_turn():
    # heading just below pi, goal just above -pi direction: small correction
    u = perf_controller([10.0, 0.0, math.pi - 0.05, 0.0], [0.0, -0.1], BOX, ControllerGains(k_theta=1.0))
    assert abs(u[0]) < 0.1


def test_default_config(default_scenario):
    sc = default_scenario
    np.testing.assert_array_equal(sc.start, [5, 25, 0, 0])
    np.testing.assert_array_equal(sc.goal, [45, 21])
    assert (sc.obstacle.x_o, sc.obstacle.y_o, sc.obstacle.D) == (32.5, 25.0, 5.0)
    assert sc.T == 0.1 and sc.horizon == 25.0 and sc.n_steps == 250
    assert sc.uncertainty.gamma == pytest.approx(0.3 * math.sqrt(2))
    assert sc.uncertainty.epsilon == pytest.approx(0.5 * math.sqrt(2))
    assert sc.estimates is not None and sc.estimates.meta["samples"] == 20000


def _write(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


def test_config_errors(tmp_path, default_scenario):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[scenario\nx = 1"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[bogus]\nx = 1\n"))
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[scenario]\nstart = [5.0, 25.0, 0.0, 0.0]\n"))
    with pytest.raises(ConfigError):
        default_scenario.replace(start=np.array([32.0, 25.0, 0.0, 0.0]))
    with pytest.raises(ConfigError):
        default_scenario.replace(horizon=2.05)
    with pytest.raises(ConfigError):
        default_scenario.replace(filter="magic")


def test_record_structure(default_scenario):
    sc = default_scenario.replace(horizon=5.0)
    tr = run_episode(sc, seed=3)
    assert tr.n_records == sc.n_steps + 1
    assert np.all(np.diff(tr.t) > 0)
    np.testing.assert_allclose(np.diff(tr.t), sc.T, atol=1e-12)
    counts = tr.mode_counts()
    assert sum(counts.values()) == sc.n_steps + 1 and counts["terminal"] == 1
    assert tr.mode[-1] == "terminal" and np.all(np.isnan(tr.u[-1]))
    assert tr.tube_violations == 0


def test_determinism(default_scenario):
    sc = default_scenario.replace(horizon=3.0)
    assert trajectory_csv(run_episode(sc, seed=11)) == trajectory_csv(run_episode(sc, seed=11))
    assert trajectory_csv(run_episode(sc, seed=11)) != trajectory_csv(run_episode(sc, seed=12))


def test_unfiltered_far_from_obstacle(default_scenario):
    sc = default_scenario.replace(filter="none", obstacle=ObstacleSpec(25.0, 45.0, 5.0),
                                uncertainty=type(default_scenario.uncertainty).zero(4, 2))
    tr = run_episode(sc)
    assert set(tr.mode) == {"inactive", "terminal"}
    k = int(np.argmin(tr.h))
    assert 0 < k < tr.n_records - 1
    assert np.all(np.diff(tr.h[: k + 1]) <= 1e-9)
    assert tr.h[-1] > tr.h[k] + 100.0


def test_csv_format(default_scenario):
    text = trajectory_csv(run_episode(default_scenario.replace(horizon=1.0), seed=5))
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0].startswith("t,x,y,theta,v,xhat,yhat,u1,u2,h,psi1,slack,mode,box_xlo,box_xhi")
    assert len(lines) == 12
    row = lines[3].split(",")
    assert len(row) == len(CSV_COLUMNS)
    for cell in row:
        if cell not in ("inactive", "active", "clamped_infeasible", "terminal"):
            mant = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mant) <= 9


def test_monte_carlo_single_run(default_scenario):
    sc = default_scenario.replace(horizon=2.0)
    stats = monte_carlo(sc, 1)
    tr = run_episode(sc, seed=stats.episodes[0].seed)
    d = stats.to_dict()
    assert d["min"] == d["max"] == d["mean"] == tr.min_h
    with pytest.raises(ValueError):
        monte_carlo(sc, 0)


def test_monte_carlo_parallel_matches_serial(default_scenario):
    sc = default_scenario.replace(horizon=2.0)
    a = monte_carlo(sc, 4).to_dict()
    b = monte_carlo(sc, 4, workers=2).to_dict()
    assert a == b


@pytest.mark.parametrize("kind", ["ct", "sd"])
def test_lipschitz_filters_stay_safe(default_scenario, kind):
    stats = monte_carlo(default_scenario.replace(filter=kind), 5)
    assert stats.collisions == 0


def test_reach_trace_consistency(default_scenario):
    for seed in range(5):
        tr = run_episode(default_scenario, seed=seed)
        assert tr.tube_violations == 0 and tr.dense_points == 250 * 11
        for k in range(tr.n_records - 1):
            assert np.all(tr.x[k + 1] >= tr.box_lo[k] - 1e-9) and np.all(tr.x[k + 1] <= tr.box_hi[k] + 1e-9)


def test_margin_sweep(default_scenario):
    rows = margin_sweep(default_scenario)
    assert len(rows) == 10
    np.testing.assert_allclose([t for t, _ in rows], np.arange(1, 11) * 0.01)
    mags = [abs(m) for _, m in rows]
    assert all(b >= a for a, b in zip(mags, mags[1:]))
    with pytest.raises(ValueError):
        margin_sweep(default_scenario, [0.02, 0.01])
    with pytest.raises(ValueError):
        margin_sweep(default_scenario, [0.0, 0.01])


def test_margin_sweep_small_t_limit(default_scenario):
    sc = default_scenario
    unc = sc.uncertainty
    (t, m), = margin_sweep(sc, [1e-7])
    init = BoxSet(sc.start - unc.meas_box.hi, sc.start - unc.meas_box.lo)
    m0 = reach_margin_bound(sc.make_chain(), init, sc.start, sc.input_box, unc.dist_box)
    assert m == pytest.approx(m0, abs=1e-3)


def test_goal_liveness(robust_stats):
    assert robust_stats.to_dict()["closer_to_goal"] >= 95


def test_single_integrator_scenario():
    cfg = {
        "scenario": {"system": "single_integrator", "start": [0.0, 0.0], "goal": [20.0, 0.5], "T": 0.1,
                     "horizon": 20.0, "filter": "reach"},
        "obstacle": {"center": [10.0, 0.0], "D": 2.0},
        "inputs": {"lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
        "uncertainty": {"dist_lo": [-0.1, -0.1], "dist_hi": [0.1, 0.1], "meas_lo": [-0.1, -0.1],
                        "meas_hi": [0.1, 0.1]},
        "barrier": {"p": [1.0]},
    }
    sc = scenario_from_dict(cfg)
    stats = monte_carlo(sc, 5)
    assert stats.collisions == 0 and stats.tube_violations == 0
