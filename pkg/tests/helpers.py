"""Shared builders for tests: deterministic memories and corpora."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from spatialmem.domain import (
    DimensionSketch,
    EmbeddingSet,
    GeoPoint,
    SourceKind,
    SpatialMemory,
)
from spatialmem.providers import StubEmbedder

BASE_TS = datetime(2024, 1, 1, 9, 0, tzinfo=timezone.utc)

_WORDS = [
    "plant", "desk", "bus", "stop", "milk", "walmart", "sauce", "shelf",
    "panel", "wire", "port", "book", "coffee", "meeting", "keys", "badge",
    "printer", "charger", "ticket", "window", "door", "garden", "market",
]


def embed_sources(query_text: str, scene: str, referent: str | None, space_label: str):
    text_src = query_text
    scene_src = scene or space_label
    referent_src = referent or scene_src
    return text_src, scene_src, referent_src


def make_memory(
    embedder: StubEmbedder,
    mid: str,
    *,
    user_id: str = "u1",
    created_at: datetime | None = None,
    lat: float = 40.7302,
    lon: float = -73.9901,
    space_label: str = "home",
    scene: str = "a desk by the window",
    referent: str | None = None,
    query: str = "what is here?",
    response: str = "a stored note",
    source: SourceKind = SourceKind.STATIC,
    confidence: int = 10,
) -> SpatialMemory:
    created = created_at or BASE_TS
    text_src, scene_src, referent_src = embed_sources(query, scene, referent, space_label)
    return SpatialMemory(
        id=mid,
        user_id=user_id,
        created_at=created,
        sketch=DimensionSketch(
            space_label=space_label,
            scene_description=scene,
            referent=referent,
            timestamp=created,
            gps=GeoPoint(lat, lon),
            intent=None,
            transcript=query,
        ),
        query_text=query,
        response_text=response,
        source_kind=source,
        confidence=confidence,
        embeddings=EmbeddingSet(
            text=embedder.embed(text_src),
            scene=embedder.embed(scene_src),
            referent=embedder.embed(referent_src),
        ),
    )


def random_memory(embedder: StubEmbedder, rng: random.Random, mid: str, **overrides) -> SpatialMemory:
    words = rng.sample(_WORDS, k=rng.randint(1, 4))
    query = " ".join(words) + "?"
    scene_words = rng.sample(_WORDS, k=rng.randint(2, 5))
    params = dict(
        user_id="u1",
        created_at=BASE_TS + timedelta(hours=rng.randint(0, 24 * 200), minutes=rng.randint(0, 59)),
        lat=rng.uniform(-80, 80),
        lon=rng.uniform(-170, 170),
        space_label=rng.choice(_WORDS),
        scene=" ".join(scene_words),
        referent=rng.choice([None, " ".join(rng.sample(_WORDS, k=rng.randint(1, 2)))]),
        query=query,
        response="note about " + words[0],
        source=rng.choice([SourceKind.STATIC, SourceKind.LIVE]),
        confidence=rng.randint(7, 10),
    )
    params.update(overrides)
    return make_memory(embedder, mid, **params)


def random_corpus(embedder: StubEmbedder, rng: random.Random, size: int, **overrides):
    return [random_memory(embedder, rng, f"m-{i + 1:06d}", **overrides) for i in range(size)]
