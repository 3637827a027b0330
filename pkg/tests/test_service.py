"""HTTP layer: endpoint wiring, error envelopes, status codes."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from spatialmem.config import EngineConfig
from spatialmem.engine import Engine
from spatialmem.service import create_app

DIM = 64
TUESDAY = "2024-01-02T08:30:00Z"
NOW = "2024-01-03T12:00:00Z"


def seed_record(mid, **overrides):
    record = {
        "record": "seed",
        "id": mid,
        "user_id": "u1",
        "created_at": TUESDAY,
        "space_label": "home",
        "scene_description": "a potted plant on a desk",
        "referent": "potted plant",
        "query_text": "Remind me to water the plant on Tuesdays",
        "response_text": "Plant watering on Tuesdays.",
        "source_kind": "static",
        "confidence": 10,
        "gps": {"lat": 40.7302, "lon": -73.9901},
    }
    record.update(overrides)
    return record


def capture_body(transcript=None, **overrides):
    body = {
        "user_id": "u1",
        "gps": {"lat": 40.7302, "lon": -73.9901},
        "timestamp": NOW,
        "transcript": transcript,
        "scene_text": "a potted plant on a desk",
        "space_label": "home",
    }
    body.update(overrides)
    return body


@pytest.fixture
def client(tmp_path):
    engine = Engine(EngineConfig(data_dir=str(tmp_path), embedding_dim=DIM))
    app = create_app(engine=engine, static_dir=None)
    return TestClient(app, raise_server_exceptions=False)


@pytest.fixture
def seeded(client):
    response = client.post("/v1/seed", json={"records": [seed_record("m-000001")]})
    assert response.status_code == 200
    assert response.json() == {"stored": 1}
    return client


def test_health(client):
    body = client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert "version" in body


def test_query_roundtrip(seeded):
    response = seeded.post("/v1/query", json=capture_body("plant?"))
    assert response.status_code == 200
    body = response.json()
    assert body["kind"] == "answer"
    assert body["response"]["answer_text"] == "Plant watering on Tuesdays."
    assert body["routing"] == "static"
    assert body["response"]["mode"]["granularity"] == "partial"
    assert body["response"]["needs_verification"] is False


def test_silent_ask_omits_transcript(seeded):
    response = seeded.post("/v1/query", json=capture_body(None))
    assert response.status_code == 200
    body = response.json()
    assert body["response"]["mode"]["granularity"] == "zero"
    assert body["response"]["answer_text"] == "Plant watering on Tuesdays."


def test_remember_then_verify_flow(seeded):
    queued = seeded.post(
        "/v1/remember", json=capture_body("Remember that I watered the plant today")
    ).json()
    assert queued["kind"] == "remembrance_pending"
    vid = queued["verification_id"]

    pending = seeded.get("/v1/pending", params={"user_id": "u1"}).json()["pending"]
    assert [e["id"] for e in pending] == [vid]
    assert pending[0]["kind"] == "store_memory"

    resolved = seeded.post(
        "/v1/verify",
        json={"user_id": "u1", "verification_id": vid, "accept": True, "now": NOW},
    ).json()
    assert resolved["outcome"] == "stored"

    memories = seeded.get("/v1/memories", params={"user_id": "u1"}).json()["memories"]
    assert len(memories) == 2
    assert all("embeddings" not in m for m in memories)
    stored = [m for m in memories if m["id"] == resolved["memory_id"]][0]
    assert stored["response_text"] == "I watered the plant today"


def test_forget_then_reject_keeps_memory(seeded):
    queued = seeded.post(
        "/v1/forget", json=capture_body("remove the memory on the plant")
    ).json()
    assert queued["kind"] == "removal_pending"
    assert "potted plant" in queued["summary"]

    resolved = seeded.post(
        "/v1/verify",
        json={
            "user_id": "u1",
            "verification_id": queued["verification_id"],
            "accept": False,
            "now": NOW,
        },
    ).json()
    assert resolved["outcome"] == "rejected"
    memories = seeded.get("/v1/memories", params={"user_id": "u1"}).json()["memories"]
    assert [m["id"] for m in memories] == ["m-000001"]


def test_error_envelope_wrong_endpoint(seeded):
    response = seeded.post(
        "/v1/remember", json=capture_body("What is the capital of France?")
    )
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "wrong_endpoint"


def test_error_envelope_not_found(client):
    response = client.post(
        "/v1/verify",
        json={"user_id": "u1", "verification_id": "v-404404", "accept": True},
    )
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "not_found"


def test_error_envelope_invalid_gps(seeded):
    response = seeded.post(
        "/v1/query", json=capture_body("plant?", gps={"lat": 140.0, "lon": 0.0})
    )
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "invalid_argument"


def test_seed_conflict_maps_to_409(seeded):
    response = seeded.post("/v1/seed", json={"records": [seed_record("m-000001")]})
    assert response.status_code == 409
    assert response.json()["error"]["code"] == "conflict"


def test_bad_timestamp_rejected(client):
    response = client.post("/v1/query", json=capture_body("plant?", timestamp="noonish"))
    assert response.status_code == 400


def test_image_payload_is_base64_checked(client):
    response = client.post(
        "/v1/query", json=capture_body(None, scene_text=None, image_b64="@@@not-b64@@@")
    )
    assert response.status_code == 400
