import math

import pytest

import rawle


def tiny(**overrides):
    cfg = rawle.default_config("allotment")
    cfg.update(t_max="10", hidden_units="8", batch_size="8", train_episodes="2", eval_episodes="5")
    cfg.update({k: str(v) for k, v in overrides.items()})
    return cfg


def test_defaults():
    cfg = rawle.default_config("allotment")
    assert cfg["grid_width"] == "16"
    assert cfg["scenario"] == "allotment"
    assert rawle.default_config()["grid_width"] == "8"


def test_init_episode():
    state = rawle.init_episode(rawle.default_config(), 7)
    assert (state["width"], state["height"]) == (8, 4)
    assert len(state["agents"]) == 4
    assert len(state["berries"]) == 12
    assert all(a["health"] == 5.0 for a in state["agents"])
    assert state["agents"][0]["wellbeing"] == pytest.approx(500.0)
    assert rawle.init_episode(rawle.default_config(), 7) == state


def test_metrics_and_stats():
    assert rawle.gini([1, 0, 0, 0]) == 0.75
    assert rawle.social_welfare([1, 2, 3]) == 6
    assert rawle.min_experience([510, 490, 505, 500]) == (490, 1)
    assert rawle.min_experience([0, 0]) is None
    assert rawle.sanction([500, 490], [500, 500], False) == pytest.approx(0.4)
    assert rawle.sanction([500, 490], [500, 490], True) == pytest.approx(-0.4)
    u, p = rawle.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0 and p == pytest.approx(0.1)
    assert rawle.cohens_d([1, 1], [2, 2]) is None
    assert rawle.effect_magnitude(1.58) == "large"
    assert rawle.huber(4.0, 1.0) == 2.5
    assert rawle.fitness(2, 1.5, 0.9, 3) == pytest.approx(2.187)


def test_bad_config():
    with pytest.raises(ValueError):
        rawle.init_episode({"scenario": "desert"}, 1)


def test_run_experiment(tmp_path):
    out = rawle.run_experiment(tiny(), str(tmp_path))
    assert set(out) == {"baseline", "rawle"}
    eps = out["rawle"]["episodes"]
    assert len(eps) == 5
    assert all(0 <= e["gini_wellbeing"] <= 1 for e in eps)
    assert (tmp_path / "stats.csv").exists()
    rows = rawle.stats_from_dir(str(tmp_path))
    again = rawle.compute_stats(out["baseline"]["episodes"], eps)
    gini = next(r for r in rows if r["metric"] == "inequality" and r["variable"] == "wellbeing")
    gini2 = next(r for r in again if r["metric"] == "inequality" and r["variable"] == "wellbeing")
    assert math.isclose(gini["p"], gini2["p"], rel_tol=1e-9)
    assert rawle.run_experiment(tiny()) == rawle.run_experiment(tiny())
