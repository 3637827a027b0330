"""Turns a candidate set into the final concise answer.

Routing decides the answer source: stored response text (static), a fresh
search snippet (live), or a provider completion (fresh). When the user's
current focus differs from what the best memory is about and that memory's
query carries an attribute word, the prior question is rebuilt around the
new referent before answering (proactive intent revision).

Every path ends the same way: brevity cap, confidence scoring on the final
text, a non-empty "why here / why now" rationale.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional

from .domain import (
    ANSWER_WORD_CAP,
    ATTRIBUTE_WORDS,
    ComposedResponse,
    DimensionSketch,
    QueryClassification,
    SourceKind,
    SpatialMemory,
    TemporalKind,
    tokenize,
    weekday_of,
    word_count,
)
from .errors import (
    InvalidArgumentError,
    MalformedOutputError,
    ProviderTransportError,
    RevisionUnavailableError,
    UnanswerableError,
    UnsupportedInputError,
)
from .providers import LMTask, ProviderSuite
from .retriever import CandidateSet, refresh_live

logger = logging.getLogger(__name__)

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")

# Referents count as "the same thing" when they share at least half their
# token vocabulary; below that the focus has shifted.
REFERENT_SHIFT_JACCARD = 0.5


@dataclass
class ComposeDetails:
    """Side-channel facts the orchestration layer needs (what question was
    actually answered, whether revision happened) without widening the
    user-facing response type."""

    effective_query: str
    revised: bool = False
    prior_referent: Optional[str] = None
    stale_note: Optional[str] = None


def referent_shift(current: Optional[str], prior: Optional[str]) -> bool:
    if not current or not prior:
        return False
    a, b = set(tokenize(current)), set(tokenize(prior))
    if not a or not b:
        return False
    jaccard = len(a & b) / len(a | b)
    return jaccard < REFERENT_SHIFT_JACCARD


def enforce_brevity(text: str) -> str:
    """Cap at 30 words: whole sentences when any fit, else a hard cut."""
    if word_count(text) <= ANSWER_WORD_CAP:
        return text
    sentences = _SENTENCE_SPLIT.split(text.strip())
    kept: list[str] = []
    total = 0
    for sentence in sentences:
        n = word_count(sentence)
        if total + n > ANSWER_WORD_CAP:
            break
        kept.append(sentence)
        total += n
    if kept:
        return " ".join(kept)
    words = text.split()[:ANSWER_WORD_CAP]
    words[-1] = words[-1] + "..."
    return " ".join(words)


def revise_intent(
    prior: SpatialMemory, sketch: DimensionSketch, providers: ProviderSuite
) -> str:
    """Rebuild the prior query around the current referent, keeping the
    attribute being asked about."""
    if not prior.sketch.referent or not sketch.referent:
        raise RevisionUnavailableError("both referents must be present to revise")
    prior_tokens = set(tokenize(prior.query_text))
    if not (prior_tokens & ATTRIBUTE_WORDS):
        raise RevisionUnavailableError("prior query carries no attribute to preserve")
    try:
        out = providers.language_model.complete_structured(
            LMTask.REVISE_INTENT,
            {
                "prior_query": prior.query_text,
                "prior_referent": prior.sketch.referent,
                "new_referent": sketch.referent,
            },
        )
        revised = str(out["revised_query"]).strip()
    except (UnsupportedInputError, KeyError) as exc:
        raise RevisionUnavailableError(f"prior query could not be rewritten: {exc}") from exc
    except (ProviderTransportError, MalformedOutputError) as exc:
        raise RevisionUnavailableError(f"revision provider unavailable: {exc}") from exc
    if not revised:
        raise RevisionUnavailableError("revision produced empty text")
    return revised


def validate(
    answer: str,
    candidates: CandidateSet,
    sketch: DimensionSketch,
    providers: ProviderSuite,
) -> int:
    """Confidence 1-10 for the final answer text.

    Penalty rule (also the local fallback if the provider misbehaves):
    start at 10; no supporting candidate -7; weekday constraint unmet -2;
    referent mismatch with the top candidate -2; floor 1.
    """
    if not answer:
        raise InvalidArgumentError("cannot validate an empty answer")
    support = len(candidates.candidates)
    temporal_unmet = (
        candidates.constraint.kind is TemporalKind.WEEKDAY and support == 0
    )
    top = candidates.top
    mismatch = bool(
        top and sketch.referent and top.memory.sketch.referent
        and referent_shift(sketch.referent, top.memory.sketch.referent)
    )
    inputs = {
        "answer": answer,
        "support_count": str(support),
        "temporal_unmet": "true" if temporal_unmet else "false",
        "referent_mismatch": "true" if mismatch else "false",
    }
    try:
        out = providers.language_model.complete_structured(LMTask.VALIDATE, inputs)
        score = int(out["confidence"])
        if not (1 <= score <= 10):
            raise MalformedOutputError(f"confidence {score} out of range")
        return score
    except (ProviderTransportError, MalformedOutputError, UnsupportedInputError,
            KeyError, ValueError) as exc:
        logger.debug("validator provider failed (%s); using the local rule", exc)
        score = 10
        if support == 0:
            score -= 7
        if temporal_unmet:
            score -= 2
        if mismatch:
            score -= 2
        return max(1, min(10, score))


def _fresh_question(sketch: DimensionSketch) -> str:
    if sketch.transcript:
        return sketch.transcript
    if sketch.referent:
        return sketch.referent
    return sketch.scene_description or sketch.space_label


def _ask_model(question: str, providers: ProviderSuite) -> str:
    out = providers.language_model.complete_structured(
        LMTask.COMPOSE_ANSWER, {"question": question}
    )
    answer = str(out.get("answer", "")).strip()
    if not answer:
        raise MalformedOutputError("provider returned an empty answer")
    return answer


def _memory_rationale(candidates: CandidateSet, memory: SpatialMemory) -> str:
    top = candidates.top
    dims = [d for d in ("gps", "text", "scene", "referent", "time") if d in top.ranks]
    day = weekday_of(memory.created_at)
    date = memory.created_at.date().isoformat()
    return (
        f"Matched {', '.join(dims)} from your memory of {memory.sketch.space_label} "
        f"on {day}, {date}."
    )


def compose(
    sketch: DimensionSketch,
    candidates: CandidateSet,
    classification: QueryClassification,
    providers: ProviderSuite,
    threshold: int,
) -> tuple[ComposedResponse, ComposeDetails]:
    routing = candidates.routing
    details = ComposeDetails(effective_query=_fresh_question(sketch))

    if routing is SourceKind.FRESH:
        try:
            draft = _ask_model(details.effective_query, providers)
        except (ProviderTransportError, MalformedOutputError) as exc:
            raise UnanswerableError(
                "no stored memory matched and the knowledge provider was unavailable",
                rationale="No prior memory matched; the general-knowledge provider "
                f"could not be reached ({exc.code}).",
            ) from exc
        rationale = "No prior memory matched; answered from general knowledge."
    elif routing is SourceKind.LIVE:
        top = candidates.top.memory
        draft, stale_note = refresh_live(top, providers)
        details.stale_note = stale_note
        rationale = _memory_rationale(candidates, top)
        rationale += (
            f" {stale_note.capitalize()}." if stale_note
            else " Refreshed from a live search just now."
        )
    else:
        top = candidates.top.memory
        draft = top.response_text
        rationale = _memory_rationale(candidates, top)
        if referent_shift(sketch.referent, top.sketch.referent):
            try:
                revised = revise_intent(top, sketch, providers)
                draft = _ask_model(revised, providers)
                details.effective_query = revised
                details.revised = True
                details.prior_referent = top.sketch.referent
                rationale += (
                    f" You previously asked about {top.sketch.referent}; "
                    f"that question was adapted to {sketch.referent}."
                )
            except RevisionUnavailableError as exc:
                logger.debug("intent revision unavailable: %s", exc)
            except (ProviderTransportError, MalformedOutputError) as exc:
                logger.debug("revision answer unavailable (%s); using stored text", exc)

    answer = enforce_brevity(draft)
    confidence = validate(answer, candidates, sketch, providers)
    response = ComposedResponse(
        answer_text=answer,
        rationale=rationale,
        confidence=confidence,
        needs_verification=confidence < threshold,
        referenced_memory_ids=[c.memory_id for c in candidates.candidates],
        mode=classification,
    )
    response.validate(threshold)
    return response, details
