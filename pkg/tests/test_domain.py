"""Frozen-value and invariant tests for the shared vocabulary module."""

from __future__ import annotations

import random
from datetime import datetime, timezone

import pytest

from spatialmem import domain
from spatialmem.errors import InvalidArgumentError


def test_word_count_frozen_values():
    assert domain.word_count("") == 0
    assert domain.word_count("M11 bus?") == 2
    assert domain.word_count("What is the sugar content of the wasabi soy sauce?") == 10


def test_word_count_whitespace_invariance():
    rng = random.Random(7)
    words = ["alpha", "beta", "gamma,", "delta?"]
    for _ in range(50):
        n = rng.randint(0, 6)
        picked = [rng.choice(words) for _ in range(n)]
        spaced = ""
        for w in picked:
            spaced += w + " " * rng.randint(1, 4)
        padded = " " * rng.randint(0, 3) + spaced
        assert domain.word_count(padded) == n


def test_weekday_of_frozen_values():
    assert domain.weekday_of(datetime(2024, 1, 1, 12, 0, tzinfo=timezone.utc)) == "Monday"
    assert domain.weekday_of(datetime(2024, 1, 2, 12, 0, tzinfo=timezone.utc)) == "Tuesday"
    assert domain.weekday_of("2024-01-01T12:00:00Z") == "Monday"


def test_weekday_of_is_deterministic():
    instant = datetime(2023, 6, 15, 8, 30, tzinfo=timezone.utc)
    assert domain.weekday_of(instant) == domain.weekday_of(instant)


def test_reduction_percent_frozen_values():
    assert domain.reduction_percent(10, 1) == 90.0
    assert domain.reduction_percent(4, 2) == 50.0
    for n in (1, 3, 17):
        assert domain.reduction_percent(n, n) == 0.0


def test_reduction_percent_rejects_zero_full():
    with pytest.raises(InvalidArgumentError):
        domain.reduction_percent(0, 0)


def test_reduction_percent_properties():
    rng = random.Random(11)
    for _ in range(200):
        full = rng.randint(1, 60)
        assert domain.reduction_percent(full, 0) == 100.0
        a = rng.randint(0, full)
        b = rng.randint(0, full)
        lo, hi = min(a, b), max(a, b)
        assert domain.reduction_percent(full, lo) >= domain.reduction_percent(full, hi)


def test_tokenize_keeps_apostrophes_and_lowercases():
    assert domain.tokenize("Don't forget the M11 Bus!") == ["don't", "forget", "the", "m11", "bus"]


def test_split_clauses_breaks_on_punctuation():
    clauses = domain.split_clauses("shelf of sauces, wasabi soy sauce in center")
    assert clauses == [["shelf", "of", "sauces"], ["wasabi", "soy", "sauce", "in", "center"]]


def test_timestamp_round_trip():
    raw = "2024-03-05T09:30:00Z"
    parsed = domain.parse_timestamp(raw)
    assert parsed.tzinfo is not None
    assert domain.format_timestamp(parsed) == raw
    shifted = domain.parse_timestamp("2024-03-05T04:30:00-05:00")
    assert shifted == parsed


def test_geopoint_range_validation():
    domain.GeoPoint(45.0, -73.0).validate()
    with pytest.raises(InvalidArgumentError):
        domain.GeoPoint(91.0, 0.0).validate()
    with pytest.raises(InvalidArgumentError):
        domain.GeoPoint(0.0, 181.0).validate()


def test_composed_response_gating_invariant():
    mode = domain.QueryClassification(domain.QueryType.QUESTION_ANSWERING, domain.Granularity.PARTIAL)
    good = domain.ComposedResponse(
        answer_text="Plant watering on Tuesdays.",
        rationale="Matched scene and referent from your memory of home.",
        confidence=10,
        needs_verification=False,
        referenced_memory_ids=["m-000001"],
        mode=mode,
    )
    good.validate(threshold=7)
    bad = domain.ComposedResponse(
        answer_text="ok",
        rationale="r",
        confidence=3,
        needs_verification=False,
        referenced_memory_ids=[],
        mode=mode,
    )
    with pytest.raises(InvalidArgumentError):
        bad.validate(threshold=7)


def test_composed_response_word_cap_enforced_by_validator():
    mode = domain.QueryClassification(domain.QueryType.QUESTION_ANSWERING, domain.Granularity.FULL)
    long_answer = " ".join(["word"] * 31)
    resp = domain.ComposedResponse(
        answer_text=long_answer,
        rationale="r",
        confidence=9,
        needs_verification=False,
        referenced_memory_ids=[],
        mode=mode,
    )
    with pytest.raises(InvalidArgumentError):
        resp.validate(threshold=7)
