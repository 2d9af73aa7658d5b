import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from mosattack.api import app

client = TestClient(app)

RATINGS = [[3, 4, 2, 5], [3, 4, 2, 4], [2, 4, 3, 5], [3, 5, 2, 5], [1, 1, 5, 1]]
SMALL_EXPERIMENT = {
    "experiment": {"n_datasets": 2, "methods": ["noopt", "MAZ"], "master_seed": 3},
    "pool": {"n_subjects": 100, "n_items": 100},
    "ga": {"population_size": 6, "generations": 2},
}


def test_health_and_methods():
    assert client.get("/health").json()["status"] == "ok"
    assert client.get("/methods").json()["methods"][0] == "NoOpt"


def test_simulate():
    body = {"pool": {"preset": "koniq-like", "n_subjects": 50, "n_items": 50}, "n_subjects": 5, "n_items": 4, "seed": 1}
    out = client.post("/simulate", json=body).json()
    assert np.shape(out["ratings"]) == (5, 4) and len(out["truth"]) == 4
    assert client.post("/simulate", json=body).json() == out


def test_simulate_inline_pool():
    pool = {"source": "inline", "biases": [0, 0], "inconsistencies": [0, 0], "mos_values": [4.6]}
    out = client.post("/simulate", json={"pool": pool, "n_subjects": 2, "n_items": 1}).json()
    assert out["ratings"] == [[5], [5]]


def test_detect():
    out = client.post("/detect", json={"method": "maz", "ratings": RATINGS}).json()
    assert out["method"] == "MAZ" and out["removed"] == [4]
    assert out["inlier_mask"] == [True] * 4 + [False]


def test_detect_config_override():
    body = {"method": "MAZ", "ratings": RATINGS, "config": {"maz_threshold": 100.0}}
    assert client.post("/detect", json=body).json()["removed"] == []


@pytest.mark.parametrize(
    "body",
    [
        {"method": "ZREC", "ratings": RATINGS},
        {"method": "XYZ", "ratings": RATINGS},
        {"method": "MAZ", "ratings": [[0, 6]]},
        {"method": "MAZ", "ratings": [[1, 2], [3]]},
    ],
)
def test_detect_rejects(body):
    assert client.post("/detect", json=body).status_code == 400


def test_unknown_field_and_bad_config():
    assert client.post("/detect", json={"method": "MAZ", "ratings": RATINGS, "bogus": 1}).status_code == 422
    bad = {"method": "MAZ", "ratings": RATINGS, "config": {"lpcc_threshold": -1}}
    assert client.post("/detect", json=bad).status_code == 422


@pytest.mark.parametrize("method", ["mos", "sureal", "esqr", "zrec"])
def test_reconstruct(method):
    out = client.post("/reconstruct", json={"method": method, "ratings": RATINGS}).json()
    assert len(out["scores"]) == 4
    if method != "mos":
        assert sum(out["row_weights"]) == pytest.approx(1)


def test_reconstruct_mask():
    body = {"method": "mos", "ratings": RATINGS, "mask": [True] * 4 + [False]}
    assert client.post("/reconstruct", json=body).json()["scores"][3] == 4.75
    body["method"] = "zrec"
    assert client.post("/reconstruct", json=body).status_code == 400


def test_attack():
    body = {"method": "KB", "ratings": RATINGS, "truth": [3, 4, 2, 5], "n_attackers": 2,
            "ga": {"population_size": 6, "generations": 3, "seed": 4}}
    out = client.post("/attack", json=body).json()
    assert np.shape(out["best_attack"]) == (2, 4)
    assert len(out["history"]) == 4
    assert out == client.post("/attack", json=body).json()


def test_attack_failure_is_500():
    body = {"method": "HB", "ratings": RATINGS, "truth": [3, 4, 2, 5], "n_attackers": 1,
            "ga": {"population_size": 4, "generations": 1}, "hard": {"hb_outlier_count": 6}}
    resp = TestClient(app, raise_server_exceptions=False).post("/attack", json=body)
    assert resp.status_code == 500


def test_experiments():
    spam = client.post("/experiments/spammers", json=SMALL_EXPERIMENT).json()
    assert spam["kind"] == "spammers" and len(spam["aggregates"]) == 2
    worst = client.post("/experiments/worst-case", json=SMALL_EXPERIMENT).json()
    assert worst["kind"] == "worst-case"
    abl = client.post("/experiments/ablation", json={**SMALL_EXPERIMENT, "method": "maz"}).json()
    assert len(abl["ga_values"]) == len(abl["random_values"]) == 18


def test_experiment_validation():
    bad = {**SMALL_EXPERIMENT, "experiment": {"methods": ["nope"]}}
    assert client.post("/experiments/spammers", json=bad).status_code == 422
    bad = {**SMALL_EXPERIMENT, "pool": {"preset": "unknown"}}
    assert client.post("/experiments/spammers", json=bad).status_code == 422
