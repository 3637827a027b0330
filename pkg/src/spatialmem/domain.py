"""Shared vocabulary for the engine: core record types, the word/time
utilities every module leans on, and the closed keyword lists that make
classification and phrase extraction deterministic.

Design notes
------------
- A "word" is a whitespace-separated token; punctuation stays attached.
- Timestamps are timezone-aware UTC instants everywhere. Serialized form is
  ISO-8601 with a trailing ``Z``.
- Keyword lists are module constants so tests can pin behavior exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from .errors import InvalidArgumentError

EMBEDDING_DIM = 256
CONFIDENCE_MIN = 1
CONFIDENCE_MAX = 10
ANSWER_WORD_CAP = 30

WEEKDAY_NAMES = (
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
)

# Trigger phrases are matched case-insensitively on whitespace-normalized text.
REMEMBRANCE_TRIGGERS = ("remember that", "can you note", "remind me", "note that")
REMOVAL_TRIGGERS = ("remove the memory", "forget", "delete the memory")

# Weak signals that make QA-vs-Remembrance ambiguous enough to ask the
# language model (full trigger phrases above always win without it).
REMEMBRANCE_HINT_WORDS = frozenset({"remember", "note", "noted", "save"})

RECENCY_PHRASES = ("last time", "recently", "yesterday")

WH_WORDS = frozenset({"what", "when", "where", "who", "whom", "whose", "which", "why", "how"})

AUX_VERBS = frozenset(
    {
        "do", "does", "did", "can", "could", "will", "would", "should",
        "shall", "may", "might", "must", "is", "are", "was", "were", "am",
        "have", "has", "had",
    }
)

# Function words skipped during phrase extraction. Ordinals and relative
# directions are included so position qualifiers ("second from the left")
# do not leak into referents.
STOPWORDS = frozenset(
    {
        "a", "an", "the", "this", "that", "these", "those",
        "i", "you", "we", "he", "she", "it", "they", "me", "us", "them",
        "my", "your", "our", "his", "her", "its", "their", "mine",
        "of", "on", "in", "at", "to", "for", "from", "with", "by", "about",
        "into", "onto", "over", "under", "near", "beside", "behind",
        "and", "or", "but", "so", "if", "as", "than", "then",
        "be", "been", "being", "not", "no", "yes", "please",
        "some", "any", "something", "anything", "someone", "anyone",
        "there", "here", "now", "today", "tomorrow",
        "next", "last", "first", "second", "third", "fourth", "fifth",
        "left", "right", "top", "bottom", "front", "back",
        "up", "down", "out", "off",
    }
    | WH_WORDS
    | AUX_VERBS
)

# Common action verbs; they terminate noun-phrase runs during extraction.
VERB_WORDS = frozenset(
    {
        "arrive", "arrives", "arrived", "arriving",
        "buy", "buys", "buying", "bought",
        "need", "needs", "needed",
        "want", "wants", "wanted",
        "get", "gets", "getting", "got",
        "go", "goes", "going", "went",
        "say", "says", "said", "saying",
        "ask", "asks", "asked", "asking",
        "mention", "mentions", "mentioned",
        "tell", "tells", "told",
        "note", "notes", "noted",
        "remember", "remembers", "remembered",
        "remind", "reminds", "reminded",
        "forget", "forgets", "forgot",
        "remove", "removes", "removed",
        "delete", "deletes", "deleted",
        "connect", "connects", "connected",
        "water", "waters", "watered", "watering",
        "check", "checks", "checked",
        "bring", "brings", "brought",
        "take", "takes", "took",
        "put", "puts",
        "see", "sees", "saw", "seen",
        "look", "looks", "looked",
        "compare", "compares", "compared",
        "submit", "submits", "submitted",
        "review", "reviews", "reviewed",
        "visit", "visits", "visited",
        "leave", "leaves", "left",
        "start", "starts", "started",
        "finish", "finishes", "finished",
        "pick", "picks", "picked",
    }
)

# Attribute-like words: when a transcript names only an attribute, the
# referent comes from the scene instead.
ATTRIBUTE_WORDS = frozenset(
    {
        "sugar", "salt", "sodium", "fat", "protein", "calories", "calorie",
        "price", "prices", "cost", "costs",
        "schedule", "schedules", "hours", "deadline",
        "content", "contents", "ingredients", "ingredient", "nutrition",
        "temperature", "weather",
    }
)

# Topics whose stored answers go stale; episodes about them are marked Live.
LIVE_TOPIC_KEYWORDS = frozenset(
    {
        "bus", "train", "subway", "transit", "traffic", "flight",
        "schedule", "schedules", "weather", "forecast",
        "price", "prices", "stock", "hours", "open", "closing",
    }
)

# Verbs that, together with "I", mark a full question as personal recall.
RECALL_VERBS = frozenset(
    {"say", "said", "ask", "asked", "mention", "mentioned", "tell", "told", "note", "noted"}
)

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")
_CLAUSE_SPLIT_RE = re.compile(r"[^\w'\s]+")


class QueryType(str, Enum):
    QUESTION_ANSWERING = "question_answering"
    REMEMBRANCE = "remembrance"
    REMOVAL = "removal"


class Granularity(str, Enum):
    FULL = "full"
    PARTIAL = "partial"
    ZERO = "zero"


class SourceKind(str, Enum):
    STATIC = "static"
    LIVE = "live"
    FRESH = "fresh"


class TemporalKind(str, Enum):
    NONE = "none"
    WEEKDAY = "weekday"
    RECENCY = "recency"


class PendingKind(str, Enum):
    STORE_MEMORY = "store_memory"
    REMOVE_MEMORY = "remove_memory"
    LOW_CONFIDENCE_ANSWER = "low_confidence_answer"


def word_count(text: str) -> int:
    """Count whitespace-separated tokens; punctuation stays attached."""
    return len(text.split())


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens (apostrophes kept inside words)."""
    return [t.strip("'") for t in _TOKEN_RE.findall(text.lower()) if t.strip("'")]


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    if not isinstance(value, str) or not value.strip():
        raise InvalidArgumentError("timestamp must be a non-empty ISO-8601 string")
    raw = value.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"bad timestamp {value!r}: {exc}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def weekday_of(timestamp: datetime | str) -> str:
    """Civil-calendar weekday name of the instant, evaluated in UTC."""
    if isinstance(timestamp, str):
        timestamp = parse_timestamp(timestamp)
    if timestamp.tzinfo is None:
        timestamp = timestamp.replace(tzinfo=timezone.utc)
    return WEEKDAY_NAMES[timestamp.astimezone(timezone.utc).weekday()]


def reduction_percent(full_words: int, partial_words: int) -> float:
    """Percentage decrease in word count from a full to a partial utterance."""
    if full_words < 1:
        raise InvalidArgumentError("full_words must be >= 1")
    if partial_words < 0:
        raise InvalidArgumentError("partial_words must be >= 0")
    return 100.0 * (full_words - partial_words) / full_words


def canonical_json(record: dict) -> str:
    """Stable one-line serialization used for every persisted record."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def validate(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise InvalidArgumentError(f"latitude {self.lat} out of range [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise InvalidArgumentError(f"longitude {self.lon} out of range [-180, 180]")

    def to_dict(self) -> dict:
        return {"lat": self.lat, "lon": self.lon}

    @classmethod
    def from_dict(cls, data: dict) -> "GeoPoint":
        try:
            point = cls(lat=float(data["lat"]), lon=float(data["lon"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"bad gps payload {data!r}") from exc
        point.validate()
        return point


@dataclass
class DimensionSketch:
    """Snapshot of the user's context at one instant."""

    space_label: str
    scene_description: str
    timestamp: datetime
    gps: GeoPoint
    referent: Optional[str] = None
    intent: Optional[str] = None
    transcript: Optional[str] = None

    def validate(self, for_retrieval: bool = False) -> None:
        self.gps.validate()
        if self.timestamp is None:
            raise InvalidArgumentError("sketch timestamp is required")
        if not self.space_label:
            raise InvalidArgumentError("sketch space_label is required")
        if for_retrieval and not self.scene_description:
            raise InvalidArgumentError("scene_description required for retrieval sketches")

    def to_dict(self) -> dict:
        return {
            "space_label": self.space_label,
            "scene_description": self.scene_description,
            "referent": self.referent,
            "timestamp": format_timestamp(self.timestamp),
            "gps": self.gps.to_dict(),
            "intent": self.intent,
            "transcript": self.transcript,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionSketch":
        return cls(
            space_label=data["space_label"],
            scene_description=data.get("scene_description") or "",
            referent=data.get("referent"),
            timestamp=parse_timestamp(data["timestamp"]),
            gps=GeoPoint.from_dict(data["gps"]),
            intent=data.get("intent"),
            transcript=data.get("transcript"),
        )


@dataclass
class EmbeddingSet:
    text: list[float]
    scene: list[float]
    referent: list[float]

    def validate(self, dim: int) -> None:
        for name, vec in (("text", self.text), ("scene", self.scene), ("referent", self.referent)):
            if len(vec) != dim:
                raise InvalidArgumentError(f"{name} embedding has dim {len(vec)}, expected {dim}")
            norm = sum(x * x for x in vec) ** 0.5
            if abs(norm - 1.0) > 1e-6:
                raise InvalidArgumentError(f"{name} embedding norm {norm} not within 1e-6 of 1")

    def to_dict(self) -> dict:
        return {"text": self.text, "scene": self.scene, "referent": self.referent}

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingSet":
        return cls(
            text=[float(x) for x in data["text"]],
            scene=[float(x) for x in data["scene"]],
            referent=[float(x) for x in data["referent"]],
        )


@dataclass
class SpatialMemory:
    """One persisted episode: a sketch bound to a query, response, and source."""

    id: str
    user_id: str
    created_at: datetime
    sketch: DimensionSketch
    query_text: str
    response_text: str
    source_kind: SourceKind
    confidence: int
    embeddings: EmbeddingSet

    def validate(self, dim: int = EMBEDDING_DIM) -> None:
        if not self.id:
            raise InvalidArgumentError("memory id is required")
        if not self.user_id:
            raise InvalidArgumentError("memory user_id is required")
        if not (CONFIDENCE_MIN <= self.confidence <= CONFIDENCE_MAX):
            raise InvalidArgumentError(f"confidence {self.confidence} outside [1, 10]")
        self.sketch.validate()
        self.embeddings.validate(dim)

    def to_dict(self) -> dict:
        return {
            "record": "memory",
            "id": self.id,
            "user_id": self.user_id,
            "created_at": format_timestamp(self.created_at),
            "sketch": self.sketch.to_dict(),
            "query_text": self.query_text,
            "response_text": self.response_text,
            "source_kind": self.source_kind.value,
            "confidence": self.confidence,
            "embeddings": self.embeddings.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpatialMemory":
        return cls(
            id=data["id"],
            user_id=data["user_id"],
            created_at=parse_timestamp(data["created_at"]),
            sketch=DimensionSketch.from_dict(data["sketch"]),
            query_text=data["query_text"],
            response_text=data["response_text"],
            source_kind=SourceKind(data["source_kind"]),
            confidence=int(data["confidence"]),
            embeddings=EmbeddingSet.from_dict(data["embeddings"]),
        )


@dataclass(frozen=True)
class QueryClassification:
    query_type: QueryType
    granularity: Optional[Granularity] = None

    def to_dict(self) -> dict:
        return {
            "query_type": self.query_type.value,
            "granularity": self.granularity.value if self.granularity else None,
        }


@dataclass(frozen=True)
class TemporalConstraint:
    kind: TemporalKind
    weekday: Optional[str] = None
    raw: str = ""

    def __post_init__(self):
        if self.kind is TemporalKind.WEEKDAY and self.weekday not in WEEKDAY_NAMES:
            raise InvalidArgumentError(f"bad weekday {self.weekday!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "weekday": self.weekday, "raw": self.raw}


NO_CONSTRAINT = TemporalConstraint(kind=TemporalKind.NONE)


@dataclass
class ComposedResponse:
    answer_text: str
    rationale: str
    confidence: int
    needs_verification: bool
    referenced_memory_ids: list[str]
    mode: QueryClassification

    def validate(self, threshold: int) -> None:
        if word_count(self.answer_text) > ANSWER_WORD_CAP:
            raise InvalidArgumentError("answer exceeds the 30-word cap")
        if not self.rationale:
            raise InvalidArgumentError("rationale must be non-empty")
        if not (CONFIDENCE_MIN <= self.confidence <= CONFIDENCE_MAX):
            raise InvalidArgumentError(f"confidence {self.confidence} outside [1, 10]")
        if self.needs_verification != (self.confidence < threshold):
            raise InvalidArgumentError("needs_verification must mirror the threshold rule")

    def to_dict(self) -> dict:
        return {
            "answer_text": self.answer_text,
            "rationale": self.rationale,
            "confidence": self.confidence,
            "needs_verification": self.needs_verification,
            "referenced_memory_ids": list(self.referenced_memory_ids),
            "mode": self.mode.to_dict(),
        }


@dataclass
class PendingVerification:
    id: str
    kind: PendingKind
    payload: dict
    summary: str
    created_at: datetime
    expires_at: datetime

    def to_dict(self) -> dict:
        return {
            "record": "pending",
            "id": self.id,
            "kind": self.kind.value,
            "payload": self.payload,
            "summary": self.summary,
            "created_at": format_timestamp(self.created_at),
            "expires_at": format_timestamp(self.expires_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PendingVerification":
        return cls(
            id=data["id"],
            kind=PendingKind(data["kind"]),
            payload=data["payload"],
            summary=data["summary"],
            created_at=parse_timestamp(data["created_at"]),
            expires_at=parse_timestamp(data["expires_at"]),
        )


def split_clauses(text: str) -> list[list[str]]:
    """Split text into punctuation-bounded clauses of original-case tokens."""
    clauses = []
    for part in _CLAUSE_SPLIT_RE.split(text):
        tokens = [t.strip("'") for t in _TOKEN_RE.findall(part) if t.strip("'")]
        if tokens:
            clauses.append(tokens)
    return clauses
