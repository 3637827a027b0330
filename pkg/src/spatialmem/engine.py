"""Composition root: one object that owns per-user stores and pending
queues and runs the full pipeline (classify, encode, retrieve, compose,
gate) for each request.

Side effects per request are limited to appending a high-confidence
episode or enqueueing a pending verification; everything else is
read-only. Writes for a given user are serialized behind a lock.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .composer import ComposeDetails, compose
from .config import EngineConfig
from .decoder import classify, interrogative_frame, strip_note_prefix
from .domain import (
    DimensionSketch,
    EmbeddingSet,
    GeoPoint,
    LIVE_TOPIC_KEYWORDS,
    PendingKind,
    PendingVerification,
    QueryClassification,
    QueryType,
    SourceKind,
    SpatialMemory,
    ComposedResponse,
    parse_timestamp,
    tokenize,
)
from .encoder import RawCapture, encode
from .errors import (
    ConflictError,
    InvalidArgumentError,
    WrongEndpointError,
)
from .providers import ProviderSuite
from .retriever import CandidateSet, retrieve
from .store import MemoryStore
from .verification import (
    Resolution,
    VerificationQueue,
    begin_removal,
    summarize_memory,
)

# User ids become file names, so they must stay path-safe.
_USER_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


@dataclass
class QueryOutcome:
    """Everything the service layer needs to shape a reply."""

    kind: str  # "answer" | "remembrance_pending" | "removal_pending"
    classification: QueryClassification
    response: Optional[ComposedResponse] = None
    routing: Optional[SourceKind] = None
    verification_id: Optional[str] = None
    summary: Optional[str] = None
    stored_memory_id: Optional[str] = None


class Engine:
    def __init__(
        self, config: EngineConfig, providers: Optional[ProviderSuite] = None
    ) -> None:
        config.validate()
        self.config = config
        self.providers = providers if providers is not None else config.build_providers()
        self.data_dir = Path(config.data_dir)
        self._stores: dict[str, MemoryStore] = {}
        self._queues: dict[str, VerificationQueue] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- per-user state ----------------------------------------------------

    def _check_user(self, user_id: str) -> str:
        if not _USER_ID_RE.match(user_id or ""):
            raise InvalidArgumentError(
                "user_id must be alphanumeric with '-' or '_' separators"
            )
        return user_id

    def store_for(self, user_id: str) -> MemoryStore:
        user_id = self._check_user(user_id)
        with self._registry_lock:
            if user_id not in self._stores:
                self._stores[user_id] = MemoryStore(
                    self.data_dir / f"{user_id}.memlog",
                    dim=self.config.embedding_dim,
                    confidence_threshold=self.config.confidence_threshold,
                )
            return self._stores[user_id]

    def queue_for(self, user_id: str) -> VerificationQueue:
        user_id = self._check_user(user_id)
        with self._registry_lock:
            if user_id not in self._queues:
                self._queues[user_id] = VerificationQueue(
                    self.data_dir / f"{user_id}.pending",
                    ttl_hours=self.config.verification_ttl_hours,
                )
            return self._queues[user_id]

    def _lock_for(self, user_id: str) -> threading.Lock:
        with self._registry_lock:
            if user_id not in self._locks:
                self._locks[user_id] = threading.Lock()
            return self._locks[user_id]

    # -- episode construction ----------------------------------------------

    def _embeddings_for(self, query_text: str, sketch: DimensionSketch) -> EmbeddingSet:
        embed = self.providers.embedder.embed
        scene_src = sketch.scene_description or sketch.space_label
        referent_src = sketch.referent or scene_src
        return EmbeddingSet(
            text=embed(query_text or scene_src),
            scene=embed(scene_src),
            referent=embed(referent_src),
        )

    def build_episode(
        self,
        user_id: str,
        sketch: DimensionSketch,
        query_text: str,
        response_text: str,
        source_kind: SourceKind,
        confidence: int,
        created_at: datetime,
        memory_id: str = "",
    ) -> SpatialMemory:
        return SpatialMemory(
            id=memory_id,
            user_id=user_id,
            created_at=created_at,
            sketch=sketch,
            query_text=query_text,
            response_text=response_text,
            source_kind=source_kind,
            confidence=confidence,
            embeddings=self._embeddings_for(query_text, sketch),
        )

    @staticmethod
    def _topic_source(query_text: str, referent: Optional[str]) -> SourceKind:
        tokens = set(tokenize(query_text)) | set(tokenize(referent or ""))
        if tokens & LIVE_TOPIC_KEYWORDS:
            return SourceKind.LIVE
        return SourceKind.STATIC

    # -- request handlers ----------------------------------------------------

    def handle_query(self, capture: RawCapture) -> QueryOutcome:
        capture.validate()
        self._check_user(capture.user_id)
        transcript = (capture.transcript or "").strip()
        classification = classify(transcript, self.providers)
        if classification.query_type is QueryType.REMOVAL:
            return self._start_removal(capture, classification)
        if classification.query_type is QueryType.REMEMBRANCE:
            return self._enqueue_note(capture, classification)
        return self._answer(capture, classification)

    def _answer(
        self, capture: RawCapture, classification: QueryClassification
    ) -> QueryOutcome:
        sketch = encode(capture, self.providers)
        store = self.store_for(capture.user_id)
        queue = self.queue_for(capture.user_id)
        with self._lock_for(capture.user_id):
            candidates = retrieve(
                sketch,
                classification,
                store.list(),
                self.config.retriever_config(),
                self.providers,
            )
            response, details = compose(
                sketch,
                candidates,
                classification,
                self.providers,
                self.config.confidence_threshold,
            )
            outcome = QueryOutcome(
                kind="answer",
                classification=classification,
                response=response,
                routing=candidates.routing,
            )
            if response.needs_verification:
                episode = self.build_episode(
                    capture.user_id,
                    sketch,
                    details.effective_query,
                    response.answer_text,
                    self._answer_source(candidates, details),
                    response.confidence,
                    capture.timestamp,
                )
                summary = (
                    f'Unverified answer to "{details.effective_query}": '
                    f'"{response.answer_text}"'
                )
                outcome.verification_id = queue.enqueue(
                    PendingKind.LOW_CONFIDENCE_ANSWER,
                    episode.to_dict(),
                    summary,
                    capture.timestamp,
                )
                outcome.summary = summary
            elif self._is_new_knowledge(candidates, details):
                episode = self.build_episode(
                    capture.user_id,
                    sketch,
                    details.effective_query,
                    response.answer_text,
                    self._answer_source(candidates, details),
                    response.confidence,
                    capture.timestamp,
                    memory_id=store.next_id(),
                )
                store.append(episode)
                outcome.stored_memory_id = episode.id
            return outcome

    @staticmethod
    def _is_new_knowledge(candidates: CandidateSet, details: ComposeDetails) -> bool:
        """A verbatim recall of a stored answer adds nothing; refreshed,
        revised, or provider-composed answers do."""
        if candidates.routing is SourceKind.FRESH:
            return True
        if candidates.routing is SourceKind.LIVE:
            return details.stale_note is None
        return details.revised

    def _answer_source(
        self, candidates: CandidateSet, details: ComposeDetails
    ) -> SourceKind:
        if candidates.routing is SourceKind.LIVE:
            return SourceKind.LIVE
        referent = None
        if candidates.candidates:
            referent = candidates.top.memory.sketch.referent
        return self._topic_source(details.effective_query, referent)

    def _enqueue_note(
        self, capture: RawCapture, classification: QueryClassification
    ) -> QueryOutcome:
        transcript = (capture.transcript or "").strip()
        if not transcript:
            raise InvalidArgumentError("nothing to remember: transcript is empty")
        sketch = encode(capture, self.providers)
        note = strip_note_prefix(transcript) or transcript
        episode = self.build_episode(
            capture.user_id,
            sketch,
            note,
            note,
            SourceKind.STATIC,
            confidence=10,
            created_at=capture.timestamp,
        )
        summary = summarize_memory(episode, self.providers)
        queue = self.queue_for(capture.user_id)
        with self._lock_for(capture.user_id):
            verification_id = queue.enqueue(
                PendingKind.STORE_MEMORY, episode.to_dict(), summary, capture.timestamp
            )
        return QueryOutcome(
            kind="remembrance_pending",
            classification=classification,
            verification_id=verification_id,
            summary=summary,
        )

    def _start_removal(
        self, capture: RawCapture, classification: QueryClassification
    ) -> QueryOutcome:
        store = self.store_for(capture.user_id)
        queue = self.queue_for(capture.user_id)
        with self._lock_for(capture.user_id):
            verification_id, summary = begin_removal(
                capture.transcript or "",
                store,
                queue,
                self.providers,
                capture.timestamp,
            )
        return QueryOutcome(
            kind="removal_pending",
            classification=classification,
            verification_id=verification_id,
            summary=summary,
        )

    def handle_remember(self, capture: RawCapture) -> QueryOutcome:
        capture.validate()
        self._check_user(capture.user_id)
        transcript = (capture.transcript or "").strip()
        if not transcript:
            raise InvalidArgumentError("nothing to remember: transcript is empty")
        classification = classify(transcript, self.providers)
        if classification.query_type is QueryType.REMOVAL:
            raise WrongEndpointError(
                "transcript asks to remove a memory; use the forget endpoint"
            )
        if classification.query_type is QueryType.QUESTION_ANSWERING and interrogative_frame(
            transcript
        ):
            raise WrongEndpointError(
                "transcript is a question; use the query endpoint"
            )
        return self._enqueue_note(
            capture, QueryClassification(QueryType.REMEMBRANCE)
        )

    def handle_forget(self, capture: RawCapture) -> QueryOutcome:
        capture.validate()
        self._check_user(capture.user_id)
        if not (capture.transcript or "").strip():
            raise InvalidArgumentError("removal needs a transcript to match against")
        return self._start_removal(capture, QueryClassification(QueryType.REMOVAL))

    # -- verification and inspection -----------------------------------------

    def resolve_verification(
        self,
        user_id: str,
        verification_id: str,
        accept: bool,
        replacement_answer: Optional[str] = None,
        now: Optional[datetime] = None,
    ) -> Resolution:
        store = self.store_for(user_id)
        queue = self.queue_for(user_id)
        moment = now if now is not None else datetime.now(timezone.utc)
        with self._lock_for(user_id):
            return queue.resolve(
                verification_id, accept, store, moment, replacement_answer
            )

    def pending(
        self, user_id: str, now: Optional[datetime] = None
    ) -> list[PendingVerification]:
        queue = self.queue_for(user_id)
        with self._lock_for(user_id):
            return queue.list_pending(now)

    def memories(self, user_id: str) -> list[SpatialMemory]:
        return self.store_for(user_id).list()

    # -- seeding ---------------------------------------------------------------

    _SEED_REQUIRED = (
        "user_id",
        "created_at",
        "space_label",
        "scene_description",
        "query_text",
        "response_text",
        "source_kind",
        "confidence",
        "gps",
    )

    def seed(self, records: list[dict]) -> int:
        """Two-phase bulk load: validate every record (nothing stored on any
        failure), then append them all as verified."""
        episodes: list[SpatialMemory] = []
        seen_ids: set[tuple[str, str]] = set()
        for line_no, record in enumerate(records, start=1):
            try:
                episodes.append(self._seed_episode(record))
            except (KeyError, ValueError, TypeError) as exc:
                raise InvalidArgumentError(f"seed record {line_no}: {exc}") from exc
            except InvalidArgumentError as exc:
                raise InvalidArgumentError(f"seed record {line_no}: {exc}") from exc
            episode = episodes[-1]
            key = (episode.user_id, episode.id)
            if episode.id:
                if key in seen_ids:
                    raise ConflictError(
                        f"seed record {line_no}: duplicate id {episode.id!r}"
                    )
                store = self.store_for(episode.user_id)
                if episode.id in {m.id for m in store.list()}:
                    raise ConflictError(
                        f"seed record {line_no}: id {episode.id!r} already stored"
                    )
                seen_ids.add(key)
        for episode in episodes:
            store = self.store_for(episode.user_id)
            with self._lock_for(episode.user_id):
                if not episode.id:
                    episode.id = store.next_id()
                store.append(episode, verified=True)
        return len(episodes)

    def _seed_episode(self, record: dict) -> SpatialMemory:
        if record.get("record") not in (None, "seed"):
            raise InvalidArgumentError(
                f"expected a seed record, got {record.get('record')!r}"
            )
        missing = [k for k in self._SEED_REQUIRED if k not in record]
        if missing:
            raise InvalidArgumentError("missing fields: " + ", ".join(missing))
        self._check_user(record["user_id"])
        created_at = parse_timestamp(record["created_at"])
        query_text = record["query_text"]
        sketch = DimensionSketch(
            space_label=record["space_label"],
            scene_description=record["scene_description"],
            referent=record.get("referent"),
            timestamp=created_at,
            gps=GeoPoint.from_dict(record["gps"]),
            intent=record.get("intent"),
            transcript=record.get("transcript", query_text),
        )
        episode = self.build_episode(
            record["user_id"],
            sketch,
            query_text,
            record["response_text"],
            SourceKind(record["source_kind"]),
            int(record["confidence"]),
            created_at,
            memory_id=record.get("id", ""),
        )
        if episode.id:
            episode.validate(self.config.embedding_dim)
        return episode
