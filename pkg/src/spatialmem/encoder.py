"""Builds a DimensionSketch from a raw capture: scene text (or captioned
image), space label, referent, temporal constraint, and note intent.

Phrase extraction is a deliberately small rule: split on punctuation, walk
tokens, and keep maximal runs of content words (stopwords, verbs, and
attribute words all break a run). The longest run wins; ties go to the
earliest. No parser, no model.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional

from .decoder import normalize_utterance, strip_note_prefix
from .domain import (
    ATTRIBUTE_WORDS,
    DimensionSketch,
    GeoPoint,
    NO_CONSTRAINT,
    RECENCY_PHRASES,
    STOPWORDS,
    TemporalConstraint,
    TemporalKind,
    VERB_WORDS,
    WEEKDAY_NAMES,
    split_clauses,
)
from .errors import InvalidArgumentError, MissingContextError
from .providers import ProviderSuite

_GEOHASH_BASE32 = "0123456789bcdefghjkmnpqrstuvwxyz"


@dataclass
class RawCapture:
    """One client request worth of context. GPS and timestamp are mandatory;
    scene may arrive as text or as an image payload to be captioned."""

    user_id: str
    gps: GeoPoint
    timestamp: datetime
    transcript: Optional[str] = None
    scene_text: Optional[str] = None
    image: Optional[bytes] = None
    space_label: Optional[str] = None

    def validate(self) -> None:
        if not self.user_id:
            raise InvalidArgumentError("capture user_id is required")
        if self.gps is None:
            raise InvalidArgumentError("capture gps is required")
        self.gps.validate()
        if self.timestamp is None:
            raise InvalidArgumentError("capture timestamp is required")


def content_runs(text: str) -> list[list[str]]:
    """Maximal runs of adjacent content tokens, original casing kept."""
    runs: list[list[str]] = []
    for clause in split_clauses(text):
        current: list[str] = []
        for token in clause:
            lowered = token.lower()
            if lowered in STOPWORDS or lowered in VERB_WORDS or lowered in ATTRIBUTE_WORDS:
                if current:
                    runs.append(current)
                    current = []
                continue
            current.append(token)
        if current:
            runs.append(current)
    return runs


def longest_run(text: str) -> Optional[str]:
    runs = content_runs(text)
    if not runs:
        return None
    best = max(runs, key=len)  # max() keeps the earliest on ties
    return " ".join(best)


def first_run(text: str) -> Optional[str]:
    runs = content_runs(text)
    return " ".join(runs[0]) if runs else None


def geohash_cell(gps: GeoPoint, precision: int = 6) -> str:
    """Standard base-32 geohash of the point, labeled as a cell."""
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    bits = []
    even = True
    while len(bits) < precision * 5:
        if even:
            mid = (lon_lo + lon_hi) / 2
            if gps.lon >= mid:
                bits.append(1)
                lon_lo = mid
            else:
                bits.append(0)
                lon_hi = mid
        else:
            mid = (lat_lo + lat_hi) / 2
            if gps.lat >= mid:
                bits.append(1)
                lat_lo = mid
            else:
                bits.append(0)
                lat_hi = mid
        even = not even
    chars = []
    for i in range(0, len(bits), 5):
        value = 0
        for bit in bits[i : i + 5]:
            value = (value << 1) | bit
        chars.append(_GEOHASH_BASE32[value])
    return "cell:" + "".join(chars)


def extract_referent(transcript: Optional[str], scene_description: str) -> Optional[str]:
    """Longest noun phrase of the transcript; attribute-only transcripts
    defer to the scene; absent only when both sources yield nothing."""
    text = normalize_utterance(transcript)
    if text:
        body = strip_note_prefix(text)
        if body is not None:
            text = body
        phrase = longest_run(text)
        if phrase:
            return phrase
    if scene_description:
        return longest_run(scene_description)
    return None


def extract_temporal(transcript: Optional[str]) -> TemporalConstraint:
    text = normalize_utterance(transcript).lower()
    if not text:
        return NO_CONSTRAINT
    for token in text.split():
        cleaned = token.strip(".,!?;:")
        for day in WEEKDAY_NAMES:
            low = day.lower()
            if cleaned == low or cleaned == low + "s":
                return TemporalConstraint(kind=TemporalKind.WEEKDAY, weekday=day, raw=cleaned)
    for phrase in RECENCY_PHRASES:
        if phrase in text:
            return TemporalConstraint(kind=TemporalKind.RECENCY, raw=phrase)
    return NO_CONSTRAINT


def extract_intent(transcript: Optional[str]) -> Optional[str]:
    """Verb phrase of a memory-saving note; None for anything else."""
    text = normalize_utterance(transcript)
    if not text:
        return None
    body = strip_note_prefix(text)
    if body is None:
        return None
    tokens = body.split()
    for i, token in enumerate(tokens):
        if token.lower().strip(".,!?;:") in VERB_WORDS:
            return " ".join(tokens[i:])
    return body or None


def encode(capture: RawCapture, providers: ProviderSuite) -> DimensionSketch:
    """Bind a raw capture into a dimension sketch."""
    capture.validate()
    transcript = normalize_utterance(capture.transcript) or None

    scene_description = (capture.scene_text or "").strip()
    if not scene_description and capture.image:
        scene_description = providers.scene_describer.describe_scene(capture.image)
    if not transcript and not scene_description:
        raise MissingContextError(
            "a context-only request needs scene text or an image to anchor on"
        )

    space_label = (capture.space_label or "").strip()
    if not space_label and scene_description:
        space_label = first_run(scene_description) or ""
    if not space_label:
        space_label = geohash_cell(capture.gps)

    return DimensionSketch(
        space_label=space_label,
        scene_description=scene_description,
        referent=extract_referent(transcript, scene_description),
        timestamp=capture.timestamp,
        gps=capture.gps,
        intent=extract_intent(transcript),
        transcript=transcript,
    )
