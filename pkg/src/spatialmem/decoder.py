"""Utterance decoding: query type and granularity.

The rule path is authoritative for trigger phrases; the language model is
consulted only when a transcript carries a weak memory-saving hint without a
full trigger, and any provider failure falls back to the rule result.
"""

from __future__ import annotations

import logging
from typing import Optional

from .domain import (
    AUX_VERBS,
    Granularity,
    QueryClassification,
    QueryType,
    REMEMBRANCE_HINT_WORDS,
    REMEMBRANCE_TRIGGERS,
    REMOVAL_TRIGGERS,
    WH_WORDS,
    tokenize,
    word_count,
)
from .errors import SpatialMemError
from .providers import LMTask, ProviderSuite

logger = logging.getLogger(__name__)

# Longest-first so "remember that" wins over the bare "remember".
NOTE_PREFIXES = (
    "can you note that",
    "can you note",
    "remember that",
    "remember to",
    "note that",
    "remind me to",
    "remind me",
    "remember",
    "note",
)

FULL_WORD_FLOOR = 6


def normalize_utterance(transcript: Optional[str]) -> str:
    if not transcript:
        return ""
    return " ".join(transcript.split())


def interrogative_frame(transcript: str) -> bool:
    """Wh-word anywhere, or an auxiliary-fronted opening."""
    tokens = tokenize(transcript)
    if not tokens:
        return False
    if tokens[0] in WH_WORDS or tokens[0] in AUX_VERBS:
        return True
    return any(t in WH_WORDS for t in tokens)


def granularity_of(transcript: Optional[str]) -> Granularity:
    text = normalize_utterance(transcript)
    if not text:
        return Granularity.ZERO
    if interrogative_frame(text) and word_count(text) >= FULL_WORD_FLOOR:
        return Granularity.FULL
    return Granularity.PARTIAL


def strip_note_prefix(transcript: str) -> Optional[str]:
    """Return the note body after a memory-saving prefix, or None."""
    text = normalize_utterance(transcript)
    lowered = text.lower()
    for prefix in NOTE_PREFIXES:
        if lowered.startswith(prefix):
            rest = text[len(prefix):].strip()
            # Swallow a dangling connective left by the shorter prefixes.
            low_rest = rest.lower()
            for connective in ("that ", "to ", ", "):
                if low_rest.startswith(connective):
                    rest = rest[len(connective):].strip()
                    break
            return rest
    return None


def classify(
    transcript: Optional[str],
    providers: Optional[ProviderSuite] = None,
) -> QueryClassification:
    """Type the utterance; granularity only accompanies question answering."""
    text = normalize_utterance(transcript)
    if not text:
        return QueryClassification(QueryType.QUESTION_ANSWERING, Granularity.ZERO)
    lowered = text.lower()
    if any(t in lowered for t in REMOVAL_TRIGGERS):
        return QueryClassification(QueryType.REMOVAL)
    if any(t in lowered for t in REMEMBRANCE_TRIGGERS):
        return QueryClassification(QueryType.REMEMBRANCE)

    rule_result = QueryClassification(QueryType.QUESTION_ANSWERING, granularity_of(text))
    tokens = tokenize(lowered)
    ambiguous = any(t in REMEMBRANCE_HINT_WORDS for t in tokens)
    if ambiguous and providers is not None:
        try:
            out = providers.language_model.complete_structured(
                LMTask.CLASSIFY, {"transcript": text}
            )
            refined = QueryType(out["query_type"])
        except (SpatialMemError, KeyError, ValueError) as exc:
            logger.debug("classification refinement unavailable: %s", exc)
            return rule_result
        if refined is QueryType.QUESTION_ANSWERING:
            return rule_result
        return QueryClassification(refined)
    return rule_result
