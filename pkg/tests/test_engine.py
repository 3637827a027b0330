"""End-to-end engine behavior: dispatch, gating side effects, seeding."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from spatialmem.config import EngineConfig
from spatialmem.domain import GeoPoint, Granularity, PendingKind, QueryType, SourceKind
from spatialmem.encoder import RawCapture
from spatialmem.engine import Engine
from spatialmem.errors import (
    ConflictError,
    InvalidArgumentError,
    NotFoundError,
    WrongEndpointError,
)

DIM = 64
HOME = GeoPoint(40.7302, -73.9901)
BUS_STOP = GeoPoint(40.7350, -73.9850)
TUESDAY = "2024-01-02T08:30:00Z"
NOW = datetime(2024, 1, 3, 12, 0, tzinfo=timezone.utc)


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
        "gps": {"lat": HOME.lat, "lon": HOME.lon},
    }
    record.update(overrides)
    return record


def bus_record(mid="m-000002"):
    return seed_record(
        mid,
        space_label="bus stop",
        scene_description="a bus stop sign on a street",
        referent="M11 bus",
        query_text="When does the next M11 bus arrive?",
        response_text="M11 arrives at 4:55 PM",
        source_kind="live",
        gps={"lat": BUS_STOP.lat, "lon": BUS_STOP.lon},
    )


@pytest.fixture
def engine(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path), embedding_dim=DIM)
    return Engine(config)


@pytest.fixture
def seeded(engine):
    engine.seed([seed_record("m-000001"), bus_record()])
    return engine


def capture(transcript=None, *, gps=HOME, scene="a potted plant on a desk",
            space_label="home", ts=NOW, user="u1"):
    return RawCapture(
        user_id=user,
        gps=gps,
        timestamp=ts,
        transcript=transcript,
        scene_text=scene,
        space_label=space_label,
    )


def corpus_bytes(engine, user="u1"):
    path = engine.store_for(user).path
    return path.read_bytes() if path.exists() else b""


def test_partial_query_recalls_stored_answer(seeded):
    before = corpus_bytes(seeded)
    outcome = seeded.handle_query(capture("plant?"))
    assert outcome.kind == "answer"
    assert outcome.response.answer_text == "Plant watering on Tuesdays."
    assert outcome.routing is SourceKind.STATIC
    assert outcome.response.mode.granularity is Granularity.PARTIAL
    assert outcome.stored_memory_id is None
    # A verbatim recall leaves the corpus untouched.
    assert corpus_bytes(seeded) == before


def test_silent_ask_recalls_from_scene_alone(seeded):
    outcome = seeded.handle_query(capture(None))
    assert outcome.response.mode.granularity is Granularity.ZERO
    assert outcome.response.answer_text == "Plant watering on Tuesdays."
    assert outcome.response.referenced_memory_ids[0] == "m-000001"


def test_live_query_refreshes_and_stores_new_episode(seeded):
    outcome = seeded.handle_query(
        capture("M11 bus?", gps=BUS_STOP, scene="a bus stop sign on a street",
                space_label="bus stop")
    )
    assert outcome.routing is SourceKind.LIVE
    assert outcome.response.answer_text == "M11 arrives at 5:10 PM"
    assert outcome.stored_memory_id == "m-000003"
    stored = seeded.store_for("u1").get("m-000003")
    assert stored.response_text == "M11 arrives at 5:10 PM"
    assert stored.source_kind is SourceKind.LIVE
    assert stored.created_at == NOW


def test_fresh_query_queues_low_confidence_answer(seeded):
    before = corpus_bytes(seeded)
    outcome = seeded.handle_query(capture("What is the capital of France?"))
    assert outcome.routing is SourceKind.FRESH
    assert outcome.response.needs_verification is True
    assert outcome.verification_id is not None
    assert corpus_bytes(seeded) == before

    result = seeded.resolve_verification(
        "u1", outcome.verification_id, True,
        replacement_answer="Paris, confirmed by me.", now=NOW,
    )
    stored = seeded.store_for("u1").get(result.memory_id)
    assert stored.response_text == "Paris, confirmed by me."
    assert stored.confidence == 7


def test_query_dispatches_remembrance_to_pending(seeded):
    before = corpus_bytes(seeded)
    outcome = seeded.handle_query(capture("Remember that I watered the plant today"))
    assert outcome.kind == "remembrance_pending"
    assert outcome.classification.query_type is QueryType.REMEMBRANCE
    assert outcome.verification_id is not None
    assert corpus_bytes(seeded) == before

    result = seeded.resolve_verification("u1", outcome.verification_id, True, now=NOW)
    assert result.outcome == "stored"
    stored = seeded.store_for("u1").get(result.memory_id)
    assert stored.response_text == "I watered the plant today"
    assert stored.confidence == 10


def test_accepted_note_is_recallable_by_partial_query(engine):
    outcome = engine.handle_query(
        capture("Remember that the assignment is due Friday",
                scene="a classroom desk with papers", space_label="classroom")
    )
    engine.resolve_verification("u1", outcome.verification_id, True, now=NOW)
    recall = engine.handle_query(
        capture("assignment?", scene="a classroom desk with papers",
                space_label="classroom")
    )
    assert recall.response.answer_text == "the assignment is due Friday"
    assert recall.routing is SourceKind.STATIC


def test_query_dispatches_removal_to_pending(seeded):
    outcome = seeded.handle_query(capture("remove the memory on the plant"))
    assert outcome.kind == "removal_pending"
    assert "potted plant" in outcome.summary
    assert len(seeded.memories("u1")) == 2

    seeded.resolve_verification("u1", outcome.verification_id, True, now=NOW)
    assert [m.id for m in seeded.memories("u1")] == ["m-000002"]


def test_removal_on_empty_corpus_is_not_found(engine):
    with pytest.raises(NotFoundError):
        engine.handle_query(capture("forget the plant note"))


def test_handle_remember_accepts_bare_note(seeded):
    outcome = seeded.handle_remember(
        capture("I need unsweetened soy milk from Walmart", scene="a store aisle",
                space_label="walmart")
    )
    assert outcome.kind == "remembrance_pending"
    entry = seeded.queue_for("u1").get(outcome.verification_id)
    assert entry.kind is PendingKind.STORE_MEMORY
    assert entry.payload["query_text"] == "I need unsweetened soy milk from Walmart"


def test_handle_remember_rejects_questions_and_removals(seeded):
    with pytest.raises(WrongEndpointError):
        seeded.handle_remember(capture("What is the capital of France?"))
    with pytest.raises(WrongEndpointError):
        seeded.handle_remember(capture("remove the memory on the plant"))
    with pytest.raises(InvalidArgumentError):
        seeded.handle_remember(capture("   "))


def test_malformed_gps_has_no_side_effects(seeded):
    before = corpus_bytes(seeded)
    bad = RawCapture(
        user_id="u1", gps=GeoPoint(140.0, -73.9), timestamp=NOW, transcript="plant?"
    )
    with pytest.raises(InvalidArgumentError):
        seeded.handle_query(bad)
    assert corpus_bytes(seeded) == before
    assert len(seeded.queue_for("u1")) == 0


def test_user_id_must_be_path_safe(engine):
    with pytest.raises(InvalidArgumentError):
        engine.handle_query(capture("plant?", user="../u1"))


def test_users_are_isolated(engine):
    engine.seed([seed_record("m-000001")])
    engine.seed([seed_record("m-000001", user_id="u2")])
    assert len(engine.memories("u1")) == 1
    assert len(engine.memories("u2")) == 1
    assert engine.store_for("u1").path != engine.store_for("u2").path


def test_seed_is_all_or_nothing(engine):
    bad = seed_record("m-000002")
    del bad["query_text"]
    with pytest.raises(InvalidArgumentError) as err:
        engine.seed([seed_record("m-000001"), bad])
    assert "seed record 2" in str(err.value)
    assert len(engine.memories("u1")) == 0


def test_seed_rejects_duplicate_ids(engine):
    with pytest.raises(ConflictError):
        engine.seed([seed_record("m-000001"), seed_record("m-000001")])
    engine.seed([seed_record("m-000001")])
    with pytest.raises(ConflictError):
        engine.seed([seed_record("m-000001")])


def test_seed_assigns_ids_when_omitted(engine):
    record = seed_record("")
    del record["id"]
    engine.seed([record])
    assert [m.id for m in engine.memories("u1")] == ["m-000001"]


def test_seed_empty_is_zero(engine):
    assert engine.seed([]) == 0
