"""Fixture-driven scenario execution.

A scenario file is a JSON-lines script: a header, then steps that query,
remember, forget, or resolve verifications against one engine. Each step
carries a frozen ``expect`` block; running the scenario checks the live
engine against every expectation and produces one result record per step.

Replay logs are JSON lines too (header, one result per step, footer) so a
second run over the same fixtures can be compared byte for byte. Wall-clock
latency is only recorded when explicitly requested, since it would break
that equality.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO

from .domain import GeoPoint, canonical_json, parse_timestamp, reduction_percent
from .encoder import RawCapture
from .engine import Engine, QueryOutcome
from .errors import InvalidArgumentError, PersistenceError

FIXTURES_DIR = Path(__file__).parent / "fixtures"
PERSONA_FIXTURE = FIXTURES_DIR / "persona_a.jsonl"
SCENARIO_FIXTURE = FIXTURES_DIR / "scenario_suite.jsonl"

FIXTURE_FORMATS = ("persona", "scenario")
FIXTURE_VERSION = 1


def load_fixture(path: str | Path) -> tuple[dict, list[dict]]:
    """Read a fixture file into (header, records), validating the frame."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise PersistenceError(f"cannot read fixture {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise PersistenceError(f"{path} line {line_no}: {exc}") from exc
    if not records:
        raise PersistenceError(f"fixture {path} is empty")
    header, rest = records[0], records[1:]
    if header.get("record") != "header" or header.get("format") not in FIXTURE_FORMATS:
        raise PersistenceError(f"fixture {path} lacks a persona/scenario header")
    if header.get("version") != FIXTURE_VERSION:
        raise PersistenceError(
            f"fixture {path} is version {header.get('version')!r}; "
            f"this build reads version {FIXTURE_VERSION}"
        )
    return header, rest


def capture_from_body(body: dict) -> RawCapture:
    """Build the engine's capture input from one step (or request) body."""
    try:
        gps = GeoPoint.from_dict(body["gps"])
        timestamp = parse_timestamp(body["timestamp"])
        user_id = body["user_id"]
    except KeyError as exc:
        raise InvalidArgumentError(f"capture body missing {exc.args[0]!r}") from exc
    image = None
    if body.get("image_b64"):
        try:
            image = base64.b64decode(body["image_b64"], validate=True)
        except (ValueError, TypeError) as exc:
            raise InvalidArgumentError(f"image_b64 is not valid base64: {exc}") from exc
    return RawCapture(
        user_id=user_id,
        gps=gps,
        timestamp=timestamp,
        transcript=body.get("transcript"),
        scene_text=body.get("scene_text"),
        image=image,
        space_label=body.get("space_label"),
    )


def outcome_view(outcome: QueryOutcome) -> dict:
    """Flatten an engine outcome into the comparable record shape."""
    view = {
        "kind": outcome.kind,
        "query_type": outcome.classification.query_type.value,
        "granularity": (
            outcome.classification.granularity.value
            if outcome.classification.granularity
            else None
        ),
        "routing": outcome.routing.value if outcome.routing else None,
        "verification_id": outcome.verification_id,
        "summary": outcome.summary,
        "stored_memory_id": outcome.stored_memory_id,
    }
    if outcome.response is not None:
        referenced = list(outcome.response.referenced_memory_ids)
        view.update(
            {
                "answer_text": outcome.response.answer_text,
                "rationale": outcome.response.rationale,
                "confidence": outcome.response.confidence,
                "needs_verification": outcome.response.needs_verification,
                "referenced_memory_ids": referenced,
                "top_memory_id": referenced[0] if referenced else None,
            }
        )
    return view


def execute_step(engine: Engine, step: dict) -> dict:
    action = step.get("action")
    body = step.get("body") or {}
    if action == "verify":
        resolution = engine.resolve_verification(
            body["user_id"],
            body["verification_id"],
            bool(body["accept"]),
            replacement_answer=body.get("replacement_answer"),
            now=parse_timestamp(body["now"]) if body.get("now") else None,
        )
        return {"outcome": resolution.outcome, "memory_id": resolution.memory_id}
    capture = capture_from_body(body)
    if action == "query":
        outcome = engine.handle_query(capture)
    elif action == "remember":
        outcome = engine.handle_remember(capture)
    elif action == "forget":
        outcome = engine.handle_forget(capture)
    else:
        raise InvalidArgumentError(f"unknown scenario action {action!r}")
    return outcome_view(outcome)


def matches(expected: dict, actual: dict) -> bool:
    """Every expected key must be present in the actual view and equal."""
    return all(actual.get(key) == value for key, value in expected.items())


@dataclass
class StepResult:
    step_id: str
    action: str
    ok: bool
    expected: dict
    actual: dict
    pair: Optional[str] = None
    role: Optional[str] = None
    transcript_words: int = 0

    def to_record(self, latency_ms: Optional[float] = None) -> dict:
        record = {
            "record": "result",
            "step": self.step_id,
            "action": self.action,
            "ok": self.ok,
            "expected": self.expected,
            "actual": self.actual,
            "pair": self.pair,
            "role": self.role,
            "transcript_words": self.transcript_words,
        }
        if latency_ms is not None:
            record["latency_ms"] = round(latency_ms, 3)
        return record


def run_step(engine: Engine, step: dict) -> StepResult:
    expected = step.get("expect") or {}
    actual = execute_step(engine, step)
    transcript = (step.get("body") or {}).get("transcript") or ""
    return StepResult(
        step_id=step.get("id", "?"),
        action=step.get("action", "?"),
        ok=matches(expected, actual),
        expected=expected,
        actual=actual,
        pair=step.get("pair"),
        role=step.get("role"),
        transcript_words=len(transcript.split()),
    )


def run_scenario(engine: Engine, steps: Iterable[dict]) -> list[StepResult]:
    return [run_step(engine, step) for step in steps]


def write_replay_log(
    handle: TextIO,
    header: dict,
    results: list[StepResult],
    latencies_ms: Optional[list[float]] = None,
) -> bool:
    """Emit the replay log; returns True when every step matched."""
    passed = sum(1 for r in results if r.ok)
    failed = len(results) - passed
    handle.write(
        canonical_json(
            {
                "record": "replay_header",
                "fixture": header.get("name", "scenario"),
                "persona": header.get("persona"),
                "user_id": header.get("user_id"),
                "steps": len(results),
            }
        )
        + "\n"
    )
    for i, result in enumerate(results):
        latency = latencies_ms[i] if latencies_ms is not None else None
        handle.write(canonical_json(result.to_record(latency)) + "\n")
    handle.write(
        canonical_json(
            {
                "record": "replay_footer",
                "passed": passed,
                "failed": failed,
                "ok": failed == 0,
            }
        )
        + "\n"
    )
    return failed == 0


def read_replay_log(path: str | Path) -> list[dict]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise PersistenceError(f"cannot read replay log {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise PersistenceError(f"{path} line {line_no}: {exc}") from exc
    return records


def summarize_log(records: list[dict]) -> dict:
    """Aggregate a replay log: pass counts, top-1 accuracy by granularity,
    and the word-count reduction across full/partial utterance pairs."""
    results = [r for r in records if r.get("record") == "result"]
    if not results:
        raise InvalidArgumentError("replay log contains no result records")

    by_granularity: dict[str, dict[str, int]] = {}
    for r in results:
        expected = r.get("expected") or {}
        if r.get("action") != "query" or not expected.get("top_memory_id"):
            continue
        gran = expected.get("granularity") or "unknown"
        bucket = by_granularity.setdefault(gran, {"total": 0, "top1_correct": 0})
        bucket["total"] += 1
        actual = r.get("actual") or {}
        if actual.get("top_memory_id") == expected.get("top_memory_id"):
            bucket["top1_correct"] += 1

    pairs: dict[str, dict[str, int]] = {}
    for r in results:
        if r.get("pair") and r.get("role") in ("full", "partial"):
            pairs.setdefault(r["pair"], {})[r["role"]] = r.get("transcript_words", 0)
    reductions = {}
    for name, roles in sorted(pairs.items()):
        if "full" in roles and "partial" in roles and roles["full"] >= 1:
            reductions[name] = reduction_percent(roles["full"], roles["partial"])
    mean_reduction = (
        sum(reductions.values()) / len(reductions) if reductions else None
    )

    latencies = [r["latency_ms"] for r in results if "latency_ms" in r]
    summary = {
        "steps": len(results),
        "passed": sum(1 for r in results if r.get("ok")),
        "failed": sum(1 for r in results if not r.get("ok")),
        "top1_by_granularity": by_granularity,
        "pair_reductions": reductions,
        "mean_reduction_percent": (
            round(mean_reduction, 1) if mean_reduction is not None else None
        ),
    }
    if latencies:
        summary["latency_ms"] = {
            "mean": round(sum(latencies) / len(latencies), 3),
            "max": round(max(latencies), 3),
        }
    return summary
