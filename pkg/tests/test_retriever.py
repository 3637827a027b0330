"""Retrieval: frozen RRF values, dimension rules, and oracle equivalence."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest

from helpers import BASE_TS, make_memory, random_corpus
from oracles import (
    haversine_oracle_m,
    law_of_cosines_km,
    retrieval_oracle,
    rrf_fuse_oracle,
)
from spatialmem import retriever
from spatialmem.domain import (
    DimensionSketch,
    GeoPoint,
    Granularity,
    NO_CONSTRAINT,
    QueryClassification,
    QueryType,
    SourceKind,
    TemporalConstraint,
    TemporalKind,
)
from spatialmem.errors import InvalidArgumentError
from spatialmem.providers import ProviderSuite, StubEmbedder
from spatialmem.retriever import RetrieverConfig, fuse_rrf, haversine_m, refresh_live

DIM = 64
QA = QueryClassification(QueryType.QUESTION_ANSWERING, Granularity.PARTIAL)
ZERO = QueryClassification(QueryType.QUESTION_ANSWERING, Granularity.ZERO)


@pytest.fixture
def embedder():
    return StubEmbedder(dim=DIM)


@pytest.fixture
def suite(embedder):
    s = ProviderSuite.stub(dim=DIM)
    s.embedder = embedder
    return s


def sketch_at(lat, lon, transcript=None, scene="a desk", referent=None, ts=None):
    return DimensionSketch(
        space_label="somewhere",
        scene_description=scene,
        referent=referent,
        timestamp=ts or BASE_TS,
        gps=GeoPoint(lat, lon),
        transcript=transcript,
    )


def test_haversine_frozen_values():
    one_deg_lon = haversine_m(GeoPoint(0, 0), GeoPoint(0, 1))
    one_deg_lat = haversine_m(GeoPoint(0, 0), GeoPoint(1, 0))
    assert abs(one_deg_lon - 111195.0) / 111195.0 < 0.005
    assert abs(one_deg_lat - 111195.0) / 111195.0 < 0.005
    assert haversine_m(GeoPoint(0, 0), GeoPoint(0, 0)) == 0.0


def test_haversine_agrees_with_independent_formula():
    rng = random.Random(5)
    for _ in range(200):
        lat1, lon1 = rng.uniform(-89, 89), rng.uniform(-179, 179)
        lat2, lon2 = lat1 + rng.uniform(-2, 2), lon1 + rng.uniform(-2, 2)
        ours = haversine_m(GeoPoint(lat1, lon1), GeoPoint(lat2, lon2)) / 1000.0
        other = law_of_cosines_km(lat1, lon1, lat2, lon2)
        assert ours == pytest.approx(other, abs=0.05)  # formulas agree to ~50 m


def test_haversine_symmetry_and_zero_self():
    rng = random.Random(17)
    for _ in range(300):
        a = GeoPoint(rng.uniform(-90, 90), rng.uniform(-180, 180))
        b = GeoPoint(rng.uniform(-90, 90), rng.uniform(-180, 180))
        assert haversine_m(a, b) == haversine_m(b, a)
        assert haversine_m(a, b) >= 0.0
        assert haversine_m(a, a) == 0.0


def test_rank_by_gps_radius_cutoff(embedder):
    config = RetrieverConfig()
    near = make_memory(embedder, "m-000001", lat=40.7302, lon=-73.9901)
    # ~100 m north; one degree of latitude is ~111.2 km.
    near.sketch.gps = GeoPoint(40.7302 + 0.0009, -73.9901)
    far = make_memory(embedder, "m-000002", lat=40.7302 + 0.045, lon=-73.9901)
    probe = sketch_at(40.7302, -73.9901)
    assert retriever.rank_by_gps(probe, [near, far], config) == ["m-000001"]


def test_rank_by_semantic_identical_embedding_first(embedder, suite):
    target = make_memory(embedder, "m-000001", query="wasabi soy sauce")
    other = make_memory(
        embedder, "m-000002", created_at=BASE_TS + timedelta(hours=1), query="printer badge"
    )
    probe = sketch_at(0, 0, transcript="wasabi soy sauce")
    ranked = retriever.rank_by_semantic(probe, [other, target], "text", suite)
    assert ranked[0] == "m-000001"


def test_rank_by_semantic_exhausted_without_source(embedder, suite):
    corpus = [make_memory(embedder, "m-000001")]
    probe = sketch_at(0, 0, transcript=None)
    assert retriever.rank_by_semantic(probe, corpus, "text", suite) == []


def test_rank_by_time_weekday_filter(embedder):
    tue = make_memory(embedder, "m-000001", created_at=datetime(2024, 1, 2, 9, tzinfo=timezone.utc))
    wed = make_memory(embedder, "m-000002", created_at=datetime(2024, 1, 3, 9, tzinfo=timezone.utc))
    constraint = TemporalConstraint(kind=TemporalKind.WEEKDAY, weekday="Tuesday")
    assert retriever.rank_by_time([tue, wed], constraint) == ["m-000001"]


def test_rank_by_time_same_instant_falls_back_to_id_order(embedder):
    a = make_memory(embedder, "m-000002")
    b = make_memory(embedder, "m-000001")
    assert retriever.rank_by_time([a, b], NO_CONSTRAINT) == ["m-000001", "m-000002"]


def test_fuse_rrf_frozen_two_list_example():
    config = RetrieverConfig(rrf_constant=60.0)
    fused = fuse_rrf([["m1", "m2"], ["m1", "m2"]], config)
    assert fused[0][0] == "m1"
    assert fused[0][1] == 2.0 / 61.0
    assert fused[1][0] == "m2"
    assert fused[1][1] == 2.0 / 62.0


def test_fuse_rrf_single_list_preserves_order_and_scores():
    config = RetrieverConfig(rrf_constant=60.0)
    fused = fuse_rrf([["a", "b", "c"]], config)
    assert [mid for mid, _ in fused] == ["a", "b", "c"]
    assert fused[0][1] == 1.0 / 61.0


def test_fuse_rrf_absent_elsewhere_exact_score():
    config = RetrieverConfig(rrf_constant=60.0)
    fused = fuse_rrf([["solo"], [], ["other"]], config)
    scores = dict(fused)
    assert scores["solo"] == 1.0 / 61.0


def test_fuse_rrf_matches_oracle_on_random_ranklists():
    rng = random.Random(23)
    config = RetrieverConfig()
    for _ in range(50):
        universe = [f"m-{i:04d}" for i in range(rng.randint(1, 40))]
        lists = []
        for _ in range(rng.randint(1, 5)):
            sample = rng.sample(universe, k=rng.randint(0, len(universe)))
            lists.append(sample)
        got = fuse_rrf(lists, config)
        want = rrf_fuse_oracle(lists, config.rrf_constant, config.k_final)
        assert got == want


def test_retrieve_matches_oracle_on_random_corpora(embedder, suite):
    rng = random.Random(31)
    config = RetrieverConfig()
    for case in range(30):
        corpus = random_corpus(embedder, rng, rng.randint(1, 60))
        center = corpus[rng.randrange(len(corpus))].sketch.gps
        transcript = rng.choice([None, "plant desk?", "bus stop milk", "wire panel?"])
        scene = rng.choice(["", "market shelf sauce", "desk window keys"])
        referent = rng.choice([None, "plant", "panel port"])
        sketch = sketch_at(
            center.lat, center.lon, transcript=transcript, scene=scene, referent=referent
        )
        classification = QA if transcript else ZERO
        got = retriever.retrieve(sketch, classification, corpus, config, suite)

        want = retrieval_oracle(
            corpus,
            gps=sketch.gps,
            constraint=NO_CONSTRAINT,
            text_vec=embedder.embed(transcript) if transcript else None,
            scene_vec=embedder.embed(scene) if scene else None,
            referent_vec=embedder.embed(referent) if referent else None,
            k_final=config.k_final,
            rrf_constant=config.rrf_constant,
            gps_radius_m=config.gps_radius_m,
            min_support=config.min_support,
        )
        assert [c.memory_id for c in got.candidates] == want["order"], f"case {case}"
        for c in got.candidates:
            assert c.score == want["scores"][c.memory_id]
        assert got.routing.value == want["routing"]
        assert got.exhausted_dimensions == want["exhausted"]
        assert len(got.candidates) <= config.k_final


def test_retrieve_weekday_filter_is_hard(embedder, suite):
    rng = random.Random(47)
    config = RetrieverConfig()
    for _ in range(25):
        corpus = random_corpus(embedder, rng, rng.randint(3, 40))
        anchor = corpus[0].sketch.gps
        sketch = sketch_at(anchor.lat, anchor.lon, transcript="what happens on tuesdays?")
        got = retriever.retrieve(sketch, QA, corpus, config, suite)
        for c in got.candidates:
            assert c.memory.created_at.weekday() == 1  # Tuesday


def test_retrieve_full_without_markers_bypasses_store(embedder, suite):
    corpus = [make_memory(embedder, "m-000001")]
    sketch = sketch_at(40.7302, -73.9901, transcript="When does the next M11 bus arrive?")
    full = QueryClassification(QueryType.QUESTION_ANSWERING, Granularity.FULL)
    got = retriever.retrieve(sketch, full, corpus, RetrieverConfig(), suite)
    assert got.candidates == []
    assert got.routing is SourceKind.FRESH


def test_retrieve_full_with_first_person_marker_reaches_store(embedder, suite):
    memory = make_memory(
        embedder,
        "m-000001",
        query="I need unsweetened soy milk from Walmart",
        referent="unsweetened soy milk",
    )
    sketch = sketch_at(
        40.7302, -73.9901, transcript="What did I say about buying something from Walmart?"
    )
    full = QueryClassification(QueryType.QUESTION_ANSWERING, Granularity.FULL)
    got = retriever.retrieve(sketch, full, [memory], RetrieverConfig(), suite)
    assert [c.memory_id for c in got.candidates] == ["m-000001"]


def test_route_knowledge_rules(embedder):
    config = RetrieverConfig()
    live = make_memory(embedder, "m-000001", source=SourceKind.LIVE)
    static = make_memory(embedder, "m-000002")
    make = lambda m, score: retriever.Candidate(m.id, score, {}, m)
    assert retriever.route_knowledge([], config) is SourceKind.FRESH
    assert retriever.route_knowledge([make(live, 1 / 61)], config) is SourceKind.LIVE
    assert retriever.route_knowledge([make(static, 1 / 61)], config) is SourceKind.STATIC
    assert retriever.route_knowledge([make(static, config.min_support / 2)], config) is SourceKind.FRESH


def test_refresh_live_uses_snippet(embedder, suite):
    memory = make_memory(
        embedder,
        "m-000001",
        query="When does the next M11 bus arrive?",
        referent="M11 bus",
        source=SourceKind.LIVE,
        response="M11 arrives at 4:55 PM",
    )
    text, note = refresh_live(memory, suite)
    assert text == "M11 arrives at 5:10 PM"
    assert note is None
    assert suite.web_search.call_count == 1


def test_refresh_live_outage_falls_back_with_note(embedder, suite):
    memory = make_memory(
        embedder,
        "m-000001",
        query="When does the next M11 bus arrive?",
        referent="M11 bus",
        source=SourceKind.LIVE,
        response="M11 arrives at 4:55 PM",
    )
    suite.web_search.outage = True
    text, note = refresh_live(memory, suite)
    assert text == "M11 arrives at 4:55 PM"
    assert note is not None and "last stored answer" in note


def test_refresh_live_empty_results_fall_back_with_note(embedder, suite):
    memory = make_memory(
        embedder,
        "m-000001",
        query="unknown live topic",
        referent=None,
        source=SourceKind.LIVE,
        response="previous answer",
    )
    text, note = refresh_live(memory, suite)
    assert text == "previous answer"
    assert note is not None


def test_refresh_live_rejects_static_memory(embedder, suite):
    memory = make_memory(embedder, "m-000001", source=SourceKind.STATIC)
    with pytest.raises(InvalidArgumentError):
        refresh_live(memory, suite)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        RetrieverConfig(k_final=0)
    with pytest.raises(InvalidArgumentError):
        RetrieverConfig(rrf_constant=0.0)
    with pytest.raises(InvalidArgumentError):
        RetrieverConfig(active_dimensions=("gps", "mood"))
