"""Sketch building: referent/temporal extraction and scene handling."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from spatialmem import encoder
from spatialmem.domain import GeoPoint, TemporalKind
from spatialmem.encoder import RawCapture
from spatialmem.errors import InvalidArgumentError, MissingContextError
from spatialmem.providers import ProviderSuite, STUB_IMAGE_PAYLOADS

TS = datetime(2024, 5, 6, 9, 0, tzinfo=timezone.utc)
HOME = GeoPoint(40.7302, -73.9901)


def make_suite():
    return ProviderSuite.stub(dim=64)


def capture(**kwargs) -> RawCapture:
    base = dict(user_id="u1", gps=HOME, timestamp=TS)
    base.update(kwargs)
    return RawCapture(**base)


def test_referent_attribute_word_defers_to_scene():
    got = encoder.extract_referent("sugar?", "shelf of sauces, wasabi soy sauce in center")
    assert got == "wasabi soy sauce"


def test_referent_scene_fallback_without_transcript():
    assert encoder.extract_referent(None, "a potted plant on a desk") == "potted plant"


def test_referent_from_full_question():
    assert encoder.extract_referent("When does the next M11 bus arrive?", "anything") == "M11 bus"


def test_referent_from_note_body():
    got = encoder.extract_referent(
        "Remember that I need unsweetened soy milk from Walmart", "a kitchen counter"
    )
    assert got == "unsweetened soy milk"


def test_referent_absent_when_no_sources():
    assert encoder.extract_referent("what is this?", "") is None


def test_temporal_weekday_from_plural():
    got = encoder.extract_temporal("Remind me to water the plant on Tuesdays")
    assert got.kind is TemporalKind.WEEKDAY
    assert got.weekday == "Tuesday"


def test_temporal_none_for_plain_fragment():
    assert encoder.extract_temporal("plant?").kind is TemporalKind.NONE


def test_temporal_recency_keyword():
    got = encoder.extract_temporal("what did I ask recently")
    assert got.kind is TemporalKind.RECENCY


def test_temporal_never_weekday_without_day_token():
    texts = ["plant?", "buy milk tomorrow", "the week after next", "tuesdayish plans"]
    for text in texts:
        assert encoder.extract_temporal(text).kind is not TemporalKind.WEEKDAY


def test_encode_uses_scene_text_and_extracts_fields():
    sketch = encoder.encode(
        capture(transcript="M11 bus?", scene_text="bus stop on 5th Ave"), make_suite()
    )
    assert sketch.referent == "M11 bus"
    assert sketch.scene_description == "bus stop on 5th Ave"
    assert sketch.transcript == "M11 bus?"
    assert sketch.space_label == "bus stop"


def test_encode_captions_image_when_no_scene_text():
    sketch = encoder.encode(
        capture(image=STUB_IMAGE_PAYLOADS["bus-stop"]), make_suite()
    )
    assert sketch.scene_description == "a bus stop sign on a street"
    assert sketch.transcript is None


def test_encode_silent_ask_without_scene_is_missing_context():
    with pytest.raises(MissingContextError):
        encoder.encode(capture(), make_suite())


def test_encode_note_intent_is_verb_phrase():
    sketch = encoder.encode(
        capture(
            transcript="Remember that I need unsweetened soy milk from Walmart",
            scene_text="a kitchen counter",
        ),
        make_suite(),
    )
    assert sketch.intent == "need unsweetened soy milk from Walmart"


def test_encode_plain_question_has_no_intent():
    sketch = encoder.encode(
        capture(transcript="M11 bus?", scene_text="bus stop on 5th Ave"), make_suite()
    )
    assert sketch.intent is None


def test_encode_space_label_prefers_supplied_then_scene_then_cell():
    suite = make_suite()
    supplied = encoder.encode(
        capture(scene_text="a potted plant on a desk", space_label="home desk"), suite
    )
    assert supplied.space_label == "home desk"

    derived = encoder.encode(capture(scene_text="a potted plant on a desk"), suite)
    assert derived.space_label == "potted plant"

    cell = encoder.encode(capture(transcript="hello there friend", scene_text=""), suite)
    assert cell.space_label.startswith("cell:")


def test_geohash_cell_known_value():
    # Cross-checked against an independent bit-interleaving computation.
    assert encoder.geohash_cell(GeoPoint(40.7302, -73.9901)) == "cell:dr5rsq"


def test_geohash_cell_groups_nearby_points():
    a = encoder.geohash_cell(GeoPoint(40.73020, -73.99010))
    b = encoder.geohash_cell(GeoPoint(40.73021, -73.99011))
    far = encoder.geohash_cell(GeoPoint(48.8566, 2.3522))
    assert a == b
    assert a != far


def test_encode_validates_gps():
    with pytest.raises(InvalidArgumentError):
        encoder.encode(
            capture(gps=GeoPoint(95.0, 0.0), scene_text="a desk"), make_suite()
        )


def test_content_runs_break_on_verbs_and_ordinals():
    runs = encoder.content_runs("connect the wire to the port second from the left")
    assert runs == [["wire"], ["port"]]
