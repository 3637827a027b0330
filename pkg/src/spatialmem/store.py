"""Durable per-user episodic memory store.

Format: one UTF-8 JSON record per line in ``<data_dir>/<user_id>.memlog``.
The first line is a header carrying the format version and embedding
dimension; memories are appended as they are accepted; deletes append a
tombstone line. ``flush()`` compacts the log (tombstones drop out).

Write gating: ``append`` refuses memories below the confidence threshold
unless the caller passes ``verified=True`` (the verification module does;
nothing else should).

Corruption policy: a bad line in the middle of the file is an error naming
the line; a bad final line is treated as a torn append — intact records
load and the problem is reported in ``load_warnings``.
"""

from __future__ import annotations

import logging
import os
import threading
from pathlib import Path
from typing import Optional

import json

from .domain import SpatialMemory, canonical_json, tokenize
from .errors import (
    ConflictError,
    CorruptRecordError,
    GateError,
    InvalidArgumentError,
    NotFoundError,
    PersistenceError,
)
from .providers import ProviderSuite

logger = logging.getLogger(__name__)

FORMAT_NAME = "memlog"
FORMAT_VERSION = 1
DEFAULT_CONFIDENCE_THRESHOLD = 7


def _header_record(dim: int) -> dict:
    return {"record": "header", "format": FORMAT_NAME, "version": FORMAT_VERSION, "dim": dim}


class MemoryStore:
    """Single-writer, multi-reader episodic store backed by one log file."""

    def __init__(self, path: str | Path, dim: int = 256,
                 confidence_threshold: int = DEFAULT_CONFIDENCE_THRESHOLD):
        self.path = Path(path)
        self.dim = dim
        self.confidence_threshold = confidence_threshold
        self.load_warnings: list[str] = []
        self._records: dict[str, SpatialMemory] = {}
        self._order: dict[str, int] = {}
        self._seq = 0
        self._tail = None
        self._lock = threading.Lock()
        self._header_written = False
        if self.path.exists():
            self._load()

    # -- loading ------------------------------------------------------------

    def _load(self) -> None:
        try:
            raw = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(f"cannot read {self.path}: {exc}") from exc
        lines = raw.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            return
        last_index = len(lines)
        for line_no, line in enumerate(lines, start=1):
            is_final = line_no == last_index
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError(f"record is {type(record).__name__}, not an object")
                self._apply_record(record, line_no)
            except CorruptRecordError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                if is_final:
                    warning = f"line {line_no}: truncated or torn record skipped ({exc})"
                    self.load_warnings.append(warning)
                    logger.warning("%s: %s", self.path, warning)
                    return
                raise CorruptRecordError(
                    f"{self.path} line {line_no}: {exc}", line_no=line_no
                ) from exc

    def _apply_record(self, record: dict, line_no: int) -> None:
        kind = record.get("record")
        if line_no == 1:
            if kind != "header":
                raise ValueError("first line must be the header record")
            if record.get("format") != FORMAT_NAME:
                raise ValueError(f"unknown format {record.get('format')!r}")
            if record.get("version") != FORMAT_VERSION:
                raise PersistenceError(
                    f"{self.path}: version {record.get('version')} needs migration; "
                    f"this build reads version {FORMAT_VERSION}"
                )
            self.dim = int(record["dim"])
            self._header_written = True
            return
        if kind == "memory":
            memory = SpatialMemory.from_dict(record)
            memory.validate(self.dim)
            self._records[memory.id] = memory
            self._order[memory.id] = self._seq
            self._seq += 1
            if self._tail is None or memory.created_at > self._tail:
                self._tail = memory.created_at
        elif kind == "tombstone":
            target = record["id"]
            self._records.pop(target, None)
            self._order.pop(target, None)
        elif kind == "header":
            raise ValueError("duplicate header record")
        else:
            raise ValueError(f"unknown record kind {kind!r}")

    # -- writing ------------------------------------------------------------

    def _write_line(self, record: dict) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                if not self._header_written:
                    fh.write(canonical_json(_header_record(self.dim)) + "\n")
                    self._header_written = True
                fh.write(canonical_json(record) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot write {self.path}: {exc}") from exc

    def next_id(self) -> str:
        highest = 0
        for mid in self._records:
            if mid.startswith("m-"):
                suffix = mid[2:]
                if suffix.isdigit():
                    highest = max(highest, int(suffix))
        return f"m-{highest + 1:06d}"

    def append(self, memory: SpatialMemory, verified: bool = False) -> str:
        with self._lock:
            memory.validate(self.dim)
            if memory.id in self._records:
                raise ConflictError(f"memory id {memory.id} already exists")
            if not verified and memory.confidence < self.confidence_threshold:
                raise GateError(
                    f"confidence {memory.confidence} is below {self.confidence_threshold}; "
                    "storing requires verification"
                )
            if self._tail is not None and memory.created_at < self._tail:
                # Keep the log monotonic; the capture instant survives in
                # the sketch's own timestamp.
                memory.created_at = self._tail
            self._write_line(memory.to_dict())
            self._records[memory.id] = memory
            self._order[memory.id] = self._seq
            self._seq += 1
            self._tail = memory.created_at
            return memory.id

    def get(self, memory_id: str) -> SpatialMemory:
        try:
            return self._records[memory_id]
        except KeyError:
            raise NotFoundError(f"no memory with id {memory_id}") from None

    def delete(self, memory_id: str) -> bool:
        with self._lock:
            if memory_id not in self._records:
                raise NotFoundError(f"no memory with id {memory_id}")
            self._write_line({"record": "tombstone", "id": memory_id})
            del self._records[memory_id]
            del self._order[memory_id]
            return True

    def list(self, user_id: Optional[str] = None) -> list[SpatialMemory]:
        rows = [
            m for m in self._records.values() if user_id is None or m.user_id == user_id
        ]
        rows.sort(key=lambda m: (m.created_at, self._order[m.id]))
        return rows

    def __len__(self) -> int:
        return len(self._records)

    def find_best_match(
        self, query_text: str, providers: ProviderSuite
    ) -> tuple[SpatialMemory, float]:
        """Half semantic (cosine, shifted to [0,1]), half keyword Jaccard."""
        if not query_text or not query_text.strip():
            raise InvalidArgumentError("query_text must be non-empty")
        if not self._records:
            raise NotFoundError("the memory corpus is empty")
        query_vec = providers.embedder.embed(query_text)
        query_tokens = set(tokenize(query_text))
        best: Optional[tuple[float, SpatialMemory]] = None
        for memory in self._records.values():
            cos = sum(a * b for a, b in zip(query_vec, memory.embeddings.text))
            semantic = (cos + 1.0) / 2.0
            memory_tokens = set(tokenize(memory.query_text))
            union = query_tokens | memory_tokens
            jaccard = len(query_tokens & memory_tokens) / len(union) if union else 0.0
            score = 0.5 * semantic + 0.5 * jaccard
            key = (score, memory.created_at, memory.id)
            if best is None or key > (best[0], best[1].created_at, best[1].id):
                best = (score, memory)
        return best[1], best[0]

    def flush(self) -> int:
        """Compact the log: header plus live records, atomically replaced."""
        with self._lock:
            rows = sorted(
                self._records.values(), key=lambda m: (m.created_at, self._order[m.id])
            )
            tmp_path = self.path.with_suffix(self.path.suffix + ".tmp")
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(tmp_path, "w", encoding="utf-8") as fh:
                    fh.write(canonical_json(_header_record(self.dim)) + "\n")
                    for memory in rows:
                        fh.write(canonical_json(memory.to_dict()) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp_path, self.path)
            except OSError as exc:
                raise PersistenceError(f"cannot flush {self.path}: {exc}") from exc
            self._header_written = True
            return len(rows)
