import pytest
from fastapi.testclient import TestClient

from uavlc.main import app
from uavlc.schemas.scenario import ScenarioSchema


@pytest.fixture
def client():
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_initial_only_run_on_random_drop(client):
    response = client.post(
        "/api/v1/runs/",
        json={"scheme": "initial-only", "seed": 3, "counts": {"user_count": 4, "ris_count": 2}},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "success"
    data = body["data"]
    assert data["scheme"] == "initial-only"
    assert data["outer_iters"] == 1
    assert len(data["solution"]["user_assoc"][0]) == 4
    assert len(data["solution"]["phases"]) == 2
    assert data["total_power_W"] == pytest.approx(sum(data["solution"]["powers"]))


def test_posted_scenario_is_used(client, bundled):
    document = ScenarioSchema.from_domain(bundled).model_dump(mode="json")
    response = client.post("/api/v1/runs/", json={"scheme": "initial-only", "seed": 0, "scenario": document})
    assert response.status_code == 200
    assert len(response.json()["data"]["solution"]["deployment"]) == bundled.uav_count


def test_invalid_scenario_gets_failure_envelope(client, bundled):
    document = ScenarioSchema.from_domain(bundled).model_dump(mode="json")
    document["ris_height"] = 30.0
    response = client.post("/api/v1/runs/", json={"scheme": "initial-only", "scenario": document})
    assert response.status_code == 422
    body = response.json()
    assert body["status"] == "failure"
    assert body["error"]["code"] == 422
    assert "ris_height" in body["error"]["message"]


def test_unknown_scheme_is_rejected(client):
    response = client.post("/api/v1/runs/", json={"scheme": "scheme9"})
    assert response.status_code == 422
    body = response.json()
    assert body["status"] == "failure"
    assert body["error"]["message"].startswith("scheme:")
