import json
from pathlib import Path

import numpy as np
import pytest

import rcamp

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def small_scenario():
    return {
        "name": "py_smoke",
        "seed": 1,
        "grid": {"cells": [40, 20], "resolution": 0.5},
        "aps": [{"id": "a", "position": [2, 5]}],
        "start": [2, 5],
        "goal": [18, 5],
        "max_ticks": 300,
    }


def test_path_loss_reference_values():
    assert rcamp.deterministic_rss(0, 0, 10, 0) == pytest.approx(-70.0)
    assert rcamp.deterministic_rss(0, 0, 0.5, 0) == pytest.approx(-40.0)


def test_predict_interpolates_and_reverts():
    samples = np.array([[0.0, 0.0, -55.0]])
    queries = np.array([[0.0, 0.0], [1e3, 1e3]])
    mean, var, conf = rcamp.predict(samples, queries, c_mean=-70, sigma_e=5, sigma_w=3, sigma_n=1e-6)
    assert mean[0] == pytest.approx(-55.0, abs=1e-3)
    assert mean[1] == pytest.approx(-70.0)
    assert var[1] == pytest.approx(25.0)
    assert 0.0 <= conf.min() and conf.max() <= 1.0


def test_empty_window_is_an_error():
    with pytest.raises(rcamp.UntrainedModel):
        rcamp.predict(np.zeros((0, 3)), np.zeros((1, 2)))


def test_optimizer_does_not_degrade():
    rng = np.random.default_rng(0)
    xy = rng.uniform(0, 20, size=(30, 2))
    rss = -60 - 0.5 * xy[:, 0] + rng.normal(0, 1, 30)
    s = np.column_stack([xy, rss])
    r = rcamp.optimize_hyperparams(s)
    assert r["lml"] >= r["lml_initial"]
    assert r["lml"] == pytest.approx(rcamp.log_marginal_likelihood(s, r["c_mean"], r["sigma_e"], r["sigma_w"], r["sigma_n"]))


def test_plan_around_a_wall_and_unreachable():
    walls = np.zeros((20, 20), dtype=bool)
    walls[0:15, 10] = True
    r = rcamp.plan(walls, 1.0, (2.5, 2.5), (17.5, 2.5), seed=3)
    assert r["status"] == "ok"
    assert max(y for _, y in r["waypoints"]) > 14
    walls[:, 10] = True
    assert rcamp.plan(walls, 1.0, (2.5, 2.5), (17.5, 2.5))["status"] == "unreachable"


def test_scenario_validation_names_field():
    bad = small_scenario()
    del bad["aps"]
    with pytest.raises(rcamp.ScenarioError, match="aps"):
        rcamp.load_scenario(bad)


def test_run_reaches_goal_and_writes_artifacts(tmp_path):
    summary, trace = rcamp.run(small_scenario(), out=tmp_path, dump_every=20)
    assert summary["outcome"] == "goal_reached"
    assert trace.shape == (summary["ticks"], 4)
    assert (tmp_path / "rss.csv").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["scenario"] == "py_smoke"


def test_runs_are_deterministic():
    a = rcamp.run(small_scenario(), seed=5)
    b = rcamp.run(small_scenario(), seed=5)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_bundled_scenarios_resolve():
    for p in sorted(SCENARIOS.glob("*.json")):
        cfg = rcamp.load_scenario(p)
        assert cfg["name"] == p.stem
