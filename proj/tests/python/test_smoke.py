import json
import math
import os
import tempfile

import pytest

import agentcritic as ac


def test_alpha_and_normalization():
    assert ac.alpha_schedule(0, 0.6, 0.95) == 1.0
    assert ac.alpha_schedule(5, 0.6, 0.95) == pytest.approx(0.95**5, abs=1e-12)
    assert ac.alpha_schedule(10, 0.6, 0.95) == 0.6
    assert ac.normalize_scores([2.0, 2.0]) == [0.5, 0.5]
    assert ac.normalize_scores([1.0, 3.0, 2.0]) == [0.0, 1.0, 0.5]


def test_select_action_matches_python_combination():
    p = [math.exp(-0.1), math.exp(-0.7), math.exp(-2.0)]
    q = [0.1, 0.9, 0.4]
    sel = ac.select_action(p, q, t=3)
    alpha = max(0.6, 0.95**3)

    def mm(v):
        lo, hi = min(v), max(v)
        return [(x - lo) / (hi - lo) for x in v]

    combined = [alpha * a + (1 - alpha) * b for a, b in zip(mm(p), mm(q))]
    assert sel["alpha"] == pytest.approx(alpha)
    assert sel["index"] == max(range(3), key=lambda i: combined[i])
    assert [r["combined"] for r in sel["scored"]] == pytest.approx(combined)
    assert ac.select_action(p, q, t=0, static_alpha=0.0)["index"] == 1


def test_grounding_and_embedding():
    e = ac.embed_text("go north")
    assert len(e) == 256
    assert ac.cosine_similarity(e, e) == pytest.approx(1.0)
    actions, warnings = ac.map_to_valid([("Go North", -0.1), ("fly away", -0.5)], ["go north", "go south", "look"], k=5)
    texts = [a["action"] for a in actions]
    assert texts[0] == "go north"
    assert len(texts) == 2 and len(set(texts)) == 2
    assert actions[1]["origin"] == "mapped"
    assert warnings == []


def test_fixtures_and_errors():
    assert set(ac.fixture_names()) == {"lab3", "lab5-sparse", "lab7"}
    spec = json.loads(ac.fixture_json("lab3"))
    assert spec["n_rooms"] == 3
    assert ac.optimal_path_length("lab3", "key-to-box") == 4
    with pytest.raises(ac.ConfigError):
        ac.fixture_json("lab9")
    with pytest.raises(ValueError):
        ac.select_action([1.0], [1.0, 2.0], t=0)


def test_cli_pipeline_and_critic_scoring():
    with tempfile.TemporaryDirectory() as d:
        rc, _, err = ac.run_cli(["pipeline", "--out", d, "--seed", "3", "--collect-episodes", "40",
                                 "--epochs", "2", "--batch-size", "16", "--hidden-dim", "8",
                                 "--embed-dim", "4", "--vocab-size", "256", "--episodes", "4", "--jobs", "1"])
        assert rc == 0, err
        critic = ac.CriticModel(os.path.join(d, "critic.json"))
        q = critic.score("key-to-box", "Put the key in the box.", "You are in room 0 of 3.", "", "You see a key.",
                         ["take key", "go right"])
        assert len(q) == 2 and all(math.isfinite(x) for x in q)
        assert math.isfinite(critic.value("key-to-box", "Put the key in the box.", "x", "", ""))
        assert ac.run_cli(["run", "--bogus"])[0] == 2
        with pytest.raises(ac.IoError):
            ac.CriticModel(os.path.join(d, "missing.json"))
