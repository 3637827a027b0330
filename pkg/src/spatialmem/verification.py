"""Human-in-the-loop gate for memory mutation.

Every store, removal, and low-confidence answer waits here as a pending
entry until the wearer accepts or rejects it. Entries persist to
`<user_id>.pending` in the same line-record format as the memory log, so
the queue survives restarts. Unresolved entries expire after a TTL and
count as rejections.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Optional

from .domain import (
    PendingKind,
    PendingVerification,
    SpatialMemory,
    canonical_json,
    format_timestamp,
    parse_timestamp,
    weekday_of,
)
from .errors import (
    CorruptRecordError,
    InvalidArgumentError,
    MalformedOutputError,
    NotFoundError,
    PersistenceError,
    ProviderTransportError,
    UnsupportedInputError,
)
from .providers import LMTask, ProviderSuite
from .store import MemoryStore

FORMAT_NAME = "pending"
FORMAT_VERSION = 1
DEFAULT_TTL_HOURS = 24
LOW_MATCH_SCORE = 0.3


@dataclass(frozen=True)
class Resolution:
    """What happened when a pending entry was resolved."""

    verification_id: str
    outcome: str  # "stored" | "removed" | "rejected" | "expired"
    memory_id: Optional[str] = None


def _header_record() -> dict:
    return {"record": "header", "format": FORMAT_NAME, "version": FORMAT_VERSION}


class VerificationQueue:
    """Append-only pending queue with resolved markers.

    A pending entry stays in the file forever; resolving it appends a
    marker line rather than rewriting. Ids keep counting past resolved
    entries so they are never reused within one file.
    """

    def __init__(self, path: str | Path, ttl_hours: int = DEFAULT_TTL_HOURS) -> None:
        if ttl_hours <= 0:
            raise InvalidArgumentError("ttl_hours must be positive")
        self.path = Path(path)
        self.ttl = timedelta(hours=ttl_hours)
        self.load_warnings: list[str] = []
        self._pending: dict[str, PendingVerification] = {}
        self._max_seq = 0
        self._header_written = False
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        if not lines:
            return
        last = len(lines)
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                if line_no == last:
                    self.load_warnings.append(
                        f"line {line_no}: truncated or torn record skipped"
                    )
                    continue
                raise CorruptRecordError(f"line {line_no}: unparseable record", line_no)
            self._apply_record(record, line_no)
        self._header_written = True

    def _apply_record(self, record: dict, line_no: int) -> None:
        kind = record.get("record")
        if kind == "header":
            if record.get("format") != FORMAT_NAME:
                raise PersistenceError(
                    f"unexpected file format {record.get('format')!r}"
                )
            if record.get("version") != FORMAT_VERSION:
                raise PersistenceError(
                    f"unsupported pending-file version {record.get('version')!r}"
                )
            return
        if kind == "pending":
            try:
                entry = PendingVerification.from_dict(record)
            except (KeyError, ValueError) as exc:
                raise CorruptRecordError(
                    f"line {line_no}: bad pending record ({exc})", line_no
                ) from exc
            self._pending[entry.id] = entry
            self._track_seq(entry.id)
            return
        if kind == "resolved":
            self._pending.pop(record.get("id", ""), None)
            self._track_seq(record.get("id", ""))
            return
        raise CorruptRecordError(
            f"line {line_no}: unknown record type {kind!r}", line_no
        )

    def _track_seq(self, verification_id: str) -> None:
        if verification_id.startswith("v-"):
            try:
                self._max_seq = max(self._max_seq, int(verification_id[2:]))
            except ValueError:
                pass

    def _write_line(self, record: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as handle:
            if not self._header_written:
                handle.write(canonical_json(_header_record()) + "\n")
                self._header_written = True
            handle.write(canonical_json(record) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def __len__(self) -> int:
        return len(self._pending)

    def enqueue(
        self, kind: PendingKind, payload: dict, summary: str, now: datetime
    ) -> str:
        if not summary or not summary.strip():
            raise InvalidArgumentError("summary must be non-empty")
        if not isinstance(payload, dict):
            raise InvalidArgumentError("payload must be a dict")
        if kind is PendingKind.REMOVE_MEMORY:
            if not payload.get("memory_id"):
                raise InvalidArgumentError("removal payload needs a memory_id")
        else:
            if payload.get("record") != "memory":
                raise InvalidArgumentError(f"{kind.value} payload must be a memory record")
        self._max_seq += 1
        entry = PendingVerification(
            id=f"v-{self._max_seq:06d}",
            kind=kind,
            payload=payload,
            summary=summary.strip(),
            created_at=now,
            expires_at=now + self.ttl,
        )
        self._write_line(entry.to_dict())
        self._pending[entry.id] = entry
        return entry.id

    def get(self, verification_id: str) -> PendingVerification:
        entry = self._pending.get(verification_id)
        if entry is None:
            raise NotFoundError(f"no pending verification {verification_id!r}")
        return entry

    def list_pending(self, now: Optional[datetime] = None) -> list[PendingVerification]:
        """Pending entries, oldest first. With `now`, expired ones are
        swept out (marked resolved as expired) before listing."""
        if now is not None:
            for entry in list(self._pending.values()):
                if entry.expires_at <= now:
                    self._mark_resolved(entry.id, "expired", now)
        return sorted(self._pending.values(), key=lambda e: (e.created_at, e.id))

    def _mark_resolved(self, verification_id: str, outcome: str, now: datetime) -> None:
        self._write_line(
            {
                "record": "resolved",
                "id": verification_id,
                "outcome": outcome,
                "resolved_at": format_timestamp(now),
            }
        )
        self._pending.pop(verification_id, None)

    def resolve(
        self,
        verification_id: str,
        accept: bool,
        store: MemoryStore,
        now: datetime,
        replacement_answer: Optional[str] = None,
    ) -> Resolution:
        entry = self.get(verification_id)
        if entry.expires_at <= now:
            self._mark_resolved(entry.id, "expired", now)
            return Resolution(entry.id, "expired")
        if not accept:
            self._mark_resolved(entry.id, "rejected", now)
            return Resolution(entry.id, "rejected")

        if entry.kind is PendingKind.REMOVE_MEMORY:
            store.delete(entry.payload["memory_id"])
            self._mark_resolved(entry.id, "removed", now)
            return Resolution(entry.id, "removed", memory_id=entry.payload["memory_id"])

        payload = dict(entry.payload)
        if entry.kind is PendingKind.LOW_CONFIDENCE_ANSWER:
            if replacement_answer and replacement_answer.strip():
                payload["response_text"] = replacement_answer.strip()
            # The wearer vouched for the answer, so it enters the corpus
            # at the gate threshold rather than its original score.
            payload["confidence"] = max(payload["confidence"], store.confidence_threshold)
        if not payload.get("id"):
            payload["id"] = store.next_id()
        memory = SpatialMemory.from_dict(payload)
        store.append(memory, verified=True)
        self._mark_resolved(entry.id, "stored", now)
        return Resolution(entry.id, "stored", memory_id=memory.id)


def _summary_date(created_at: datetime) -> str:
    return f"{weekday_of(created_at)}, {created_at.date().isoformat()}"


def _local_summary(memory: SpatialMemory, low_match: bool) -> str:
    subject = memory.sketch.referent or memory.sketch.space_label
    gist = memory.query_text
    text = (
        f"Memory about {subject} at {memory.sketch.space_label} "
        f'from {_summary_date(memory.created_at)}: "{gist}"'
    )
    if low_match:
        text += " (low match confidence)"
    return text


def summarize_memory(
    memory: SpatialMemory, providers: ProviderSuite, low_match: bool = False
) -> str:
    """One-sentence digest used on removal cards. Falls back to a local
    template when the language model is unavailable."""
    inputs = {
        "referent": memory.sketch.referent or memory.sketch.space_label,
        "space_label": memory.sketch.space_label,
        "date": _summary_date(memory.created_at),
        "gist": memory.query_text,
        "low_match": "true" if low_match else "false",
    }
    try:
        result = providers.language_model.complete_structured(LMTask.SUMMARIZE, inputs)
        summary = str(result["summary"]).strip()
        if summary:
            return summary
    except (ProviderTransportError, MalformedOutputError, UnsupportedInputError, KeyError):
        pass
    return _local_summary(memory, low_match)


def begin_removal(
    query_text: str,
    store: MemoryStore,
    queue: VerificationQueue,
    providers: ProviderSuite,
    now: datetime,
) -> tuple[str, str]:
    """Pick the best-matching memory for a removal request and queue it
    for confirmation. Nothing is deleted until the wearer accepts."""
    if len(store) == 0:
        raise NotFoundError("no memories to remove")
    memory, score = store.find_best_match(query_text, providers)
    low_match = score < LOW_MATCH_SCORE
    summary = summarize_memory(memory, providers, low_match=low_match)
    verification_id = queue.enqueue(
        PendingKind.REMOVE_MEMORY,
        {"memory_id": memory.id, "match_score": round(score, 6)},
        summary,
        now,
    )
    return verification_id, summary
