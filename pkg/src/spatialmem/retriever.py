"""Multi-dimension episodic retrieval.

Each active dimension (gps, text, scene, referent, time) produces a
ranklist over the corpus snapshot; Reciprocal Rank Fusion merges them and
the top-of-fused result decides knowledge routing (static / live / fresh).

Hard filters are conjunctive: a weekday constraint removes non-matching
memories from every dimension, and the GPS radius bounds the gps ranklist.
A dimension with nothing to rank is reported as exhausted, never an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

from .domain import (
    DimensionSketch,
    GeoPoint,
    Granularity,
    QueryClassification,
    QueryType,
    RECALL_VERBS,
    SourceKind,
    SpatialMemory,
    TemporalConstraint,
    TemporalKind,
    WEEKDAY_NAMES,
    tokenize,
)
from .encoder import extract_temporal
from .errors import InvalidArgumentError, MalformedOutputError, ProviderTransportError
from .providers import ProviderSuite

EARTH_RADIUS_KM = 6371.0

ALL_DIMENSIONS = ("gps", "text", "scene", "referent", "time")

# Corpus-size bound used to place the minimum-support floor: a fused score
# this low is only possible by ranking at or past the bound in every list.
MIN_SUPPORT_CORPUS_CAP = 500


@dataclass(frozen=True)
class RetrieverConfig:
    k_final: int = 5
    rrf_constant: float = 60.0
    gps_radius_m: float = 150.0
    active_dimensions: tuple[str, ...] = ALL_DIMENSIONS

    def __post_init__(self):
        if self.k_final < 1:
            raise InvalidArgumentError("k_final must be >= 1")
        if self.rrf_constant <= 0:
            raise InvalidArgumentError("rrf_constant must be > 0")
        bad = [d for d in self.active_dimensions if d not in ALL_DIMENSIONS]
        if bad:
            raise InvalidArgumentError(f"unknown dimensions: {bad}")

    @property
    def min_support(self) -> float:
        return 1.0 / (self.rrf_constant + self.k_final * MIN_SUPPORT_CORPUS_CAP)


@dataclass
class Candidate:
    memory_id: str
    score: float
    ranks: dict[str, int]
    memory: SpatialMemory


@dataclass
class CandidateSet:
    candidates: list[Candidate]
    routing: SourceKind
    exhausted_dimensions: list[str]
    constraint: TemporalConstraint

    @property
    def top(self) -> Optional[Candidate]:
        return self.candidates[0] if self.candidates else None


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters (haversine, R = 6371.0 km)."""
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dp = math.radians(b.lat - a.lat)
    dl = math.radians(b.lon - a.lon)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * 1000.0 * math.asin(math.sqrt(h))


def _epoch(created: datetime) -> float:
    return created.timestamp()


def rank_by_gps(
    sketch: DimensionSketch, corpus: Sequence[SpatialMemory], config: RetrieverConfig
) -> list[str]:
    rows = []
    for memory in corpus:
        distance = haversine_m(sketch.gps, memory.sketch.gps)
        if distance <= config.gps_radius_m:
            rows.append((distance, -_epoch(memory.created_at), memory.id))
    rows.sort()
    return [mid for _, _, mid in rows]


_FIELD_SOURCES = {
    "text": lambda sketch: sketch.transcript,
    "scene": lambda sketch: sketch.scene_description,
    "referent": lambda sketch: sketch.referent,
}


def rank_by_semantic(
    sketch: DimensionSketch,
    corpus: Sequence[SpatialMemory],
    fieldname: str,
    providers: ProviderSuite,
) -> list[str]:
    if fieldname not in _FIELD_SOURCES:
        raise InvalidArgumentError(f"unknown semantic field {fieldname!r}")
    source = _FIELD_SOURCES[fieldname](sketch)
    if not source or not source.strip():
        return []
    query_vec = providers.embedder.embed(source)
    rows = []
    for memory in corpus:
        stored = getattr(memory.embeddings, fieldname)
        cos = sum(x * y for x, y in zip(query_vec, stored))
        if cos <= 0.0:
            continue
        rows.append((-cos, -_epoch(memory.created_at), memory.id))
    rows.sort()
    return [mid for _, _, mid in rows]


def rank_by_time(
    corpus: Sequence[SpatialMemory], constraint: TemporalConstraint
) -> list[str]:
    rows = corpus
    if constraint.kind is TemporalKind.WEEKDAY:
        rows = [
            m for m in corpus if WEEKDAY_NAMES[m.created_at.weekday()] == constraint.weekday
        ]
    ordered = sorted(rows, key=lambda m: (-_epoch(m.created_at), m.id))
    return [m.id for m in ordered]


def fuse_rrf(
    ranklists: Sequence[Sequence[str]],
    config: RetrieverConfig,
    created_at: Optional[dict[str, datetime]] = None,
) -> list[tuple[str, float]]:
    """score(m) = sum of 1/(rrf_constant + rank) over lists containing m,
    ranks 1-based; sorted score desc, newer first, id ascending; top k."""
    scores: dict[str, float] = {}
    for ranklist in ranklists:
        for rank, mid in enumerate(ranklist, start=1):
            scores[mid] = scores.get(mid, 0.0) + 1.0 / (config.rrf_constant + rank)

    def sort_key(mid: str):
        created = created_at.get(mid) if created_at else None
        created_part = -_epoch(created) if created is not None else 0.0
        return (-scores[mid], created_part, mid)

    ordered = sorted(scores, key=sort_key)
    return [(mid, scores[mid]) for mid in ordered[: config.k_final]]


def route_knowledge(
    candidates: list[Candidate], config: RetrieverConfig
) -> SourceKind:
    if not candidates or candidates[0].score < config.min_support:
        return SourceKind.FRESH
    if candidates[0].memory.source_kind is SourceKind.LIVE:
        return SourceKind.LIVE
    return SourceKind.STATIC


def personal_recall(transcript: Optional[str]) -> bool:
    """Full questions reach the store only with first-person markers."""
    tokens = set(tokenize(transcript or ""))
    if "my" in tokens:
        return True
    return "i" in tokens and bool(tokens & RECALL_VERBS)


def retrieve(
    sketch: DimensionSketch,
    classification: QueryClassification,
    corpus: Sequence[SpatialMemory],
    config: RetrieverConfig,
    providers: ProviderSuite,
) -> CandidateSet:
    if classification.query_type is not QueryType.QUESTION_ANSWERING:
        raise InvalidArgumentError("retrieve handles question answering only")
    constraint = extract_temporal(sketch.transcript)

    if classification.granularity is Granularity.FULL and not personal_recall(sketch.transcript):
        return CandidateSet(
            candidates=[],
            routing=SourceKind.FRESH,
            exhausted_dimensions=list(config.active_dimensions),
            constraint=constraint,
        )

    eligible = list(corpus)
    if constraint.kind is TemporalKind.WEEKDAY:
        eligible = [
            m for m in eligible if WEEKDAY_NAMES[m.created_at.weekday()] == constraint.weekday
        ]

    ranklists: dict[str, list[str]] = {}
    for dim in config.active_dimensions:
        if dim == "gps":
            ranklists[dim] = rank_by_gps(sketch, eligible, config)
        elif dim == "time":
            ranklists[dim] = rank_by_time(eligible, constraint)
        else:
            ranklists[dim] = rank_by_semantic(sketch, eligible, dim, providers)

    created_map = {m.id: m.created_at for m in corpus}
    fused = fuse_rrf(
        [ranklists[d] for d in config.active_dimensions],
        config,
        created_at=created_map,
    )
    by_id = {m.id: m for m in corpus}
    candidates = []
    for mid, score in fused:
        ranks = {}
        for dim in config.active_dimensions:
            if mid in ranklists[dim]:
                ranks[dim] = ranklists[dim].index(mid) + 1
        candidates.append(Candidate(memory_id=mid, score=score, ranks=ranks, memory=by_id[mid]))

    return CandidateSet(
        candidates=candidates,
        routing=route_knowledge(candidates, config),
        exhausted_dimensions=[d for d in config.active_dimensions if not ranklists[d]],
        constraint=constraint,
    )


def refresh_live(
    memory: SpatialMemory, providers: ProviderSuite
) -> tuple[str, Optional[str]]:
    """One search call; first snippet wins. Returns (text, staleness note);
    the note is set when the stored response had to stand in."""
    if memory.source_kind is not SourceKind.LIVE:
        raise InvalidArgumentError(
            f"memory {memory.id} is {memory.source_kind.value}, not live"
        )
    query = memory.query_text
    if memory.sketch.referent:
        query = f"{memory.query_text} {memory.sketch.referent}"
    try:
        results = providers.web_search.search(query)
    except (ProviderTransportError, MalformedOutputError):
        return (
            memory.response_text,
            "live refresh failed; showing the last stored answer",
        )
    if not results:
        return (
            memory.response_text,
            "live refresh returned nothing current; showing the last stored answer",
        )
    return results[0].snippet, None
