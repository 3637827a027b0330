#!/usr/bin/env python3
"""Regenerate the shipped persona and scenario fixtures.

The persona is a hand-authored 45-memory corpus across four spaces (home,
bus stop, corner bistro, classroom-adjacent errands); the scenario walks
twenty steps over it: recall at full/partial/zero granularity, a weekday
filter, a live refresh, a proactive intent revision, note capture through
the verification gate, a removal, and a general-knowledge fallback.

Retrieval expectations (candidate order, routing) are frozen from the
brute-force oracle in tests/oracles.py, never copied from the engine;
answers, confidences, and ids are designed constants. The script aborts
if the engine, the oracle, and the design disagree anywhere.

Run from the repository root:

    python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from spatialmem.config import EngineConfig
from spatialmem.domain import canonical_json, parse_timestamp
from spatialmem.encoder import encode, extract_temporal
from spatialmem.engine import Engine
from spatialmem.replay import (
    FIXTURES_DIR,
    capture_from_body,
    execute_step,
    run_scenario,
)

from oracles import retrieval_oracle  # noqa: E402  (tests/ added to sys.path above)

USER = "wearer-a"

HOME = ("home", 40.7302, -73.9901)
BUS = ("bus stop", 40.735, -73.985)
BISTRO = ("corner bistro", 40.728, -73.998)
MARKET = ("supermarket", 40.72, -74.005)
CLASSROOM = ("classroom", 40.74, -73.98)


def seed(mid, created, loc, scene, referent, query, response=None,
         source="static", confidence=10):
    return {
        "record": "seed",
        "id": mid,
        "user_id": USER,
        "created_at": created,
        "space_label": loc[0],
        "gps": {"lat": loc[1], "lon": loc[2]},
        "scene_description": scene,
        "referent": referent,
        "query_text": query,
        "response_text": response if response is not None else query,
        "source_kind": source,
        "confidence": confidence,
    }


PERSONA = [
    seed("m-000001", "2023-12-01T09:00:00Z", HOME,
         "a row of brass mailboxes in the lobby", "mailbox code",
         "The mailbox code is 4427."),
    seed("m-000002", "2023-12-01T18:30:00Z", HOME,
         "a router with blinking lights", "wifi password",
         "The wifi password is maplesyrup42."),
    seed("m-000003", "2023-12-02T10:00:00Z", BISTRO,
         "a chrome espresso machine behind the counter", "espresso",
         "The espresso here is strong but smooth."),
    seed("m-000004", "2023-12-03T09:15:00Z", BUS,
         "a small newsstand beside the crosswalk", "newsstand",
         "The newsstand sells metro cards until 9 PM."),
    seed("m-000005", "2023-12-05T08:45:00Z", BUS,
         "a bus stop sign on a street", "M11 bus",
         "When does the next M11 bus arrive?", "M11 arrives at 4:55 PM",
         source="live", confidence=9),
    seed("m-000006", "2023-12-06T13:00:00Z", BISTRO,
         "shelf of sauces, wasabi soy sauce in center", "wasabi soy sauce",
         "What is the sugar content of the wasabi soy sauce?",
         "Wasabi soy sauce has about 2 grams of sugar per serving.",
         confidence=9),
    seed("m-000007", "2023-12-07T11:00:00Z", HOME,
         "an old radiator under the window", "radiator valve",
         "The radiator valve sticks; turn it gently."),
    seed("m-000008", "2023-12-08T09:30:00Z", BISTRO,
         "a basket of croissants by the register", "croissants",
         "Croissants sell out by ten most mornings."),
    seed("m-000009", "2023-12-09T14:00:00Z", BUS,
         "a row of benches along the curb", "bench",
         "The third bench has a loose plank."),
    seed("m-000010", "2023-12-10T16:20:00Z", HOME,
         "a thermostat dial in the hallway", "thermostat",
         "Set the thermostat to 68 in the evening."),
    seed("m-000011", "2023-12-11T12:00:00Z", BISTRO,
         "a wobbly table near the big window", "corner table",
         "The corner table wobbles; pick another."),
    seed("m-000012", "2023-12-12T13:30:00Z", BISTRO,
         "a waiter carrying trays", "Marco",
         "Marco works the lunch shift on weekdays."),
    seed("m-000013", "2023-12-13T10:00:00Z", BUS,
         "a streetlight above the shelter", "streetlight",
         "The streetlight flickers after rain."),
    seed("m-000014", "2023-12-14T09:00:00Z", HOME,
         "a breaker box behind winter coats", "breaker box",
         "The breaker box is behind the coats."),
    seed("m-000015", "2023-12-15T15:40:00Z", BISTRO,
         "a chalkboard listing soups", "lentil soup",
         "Thursday soup is lentil and very salty."),
    seed("m-000016", "2023-12-16T11:30:00Z", HOME,
         "a hallway drawer by the door", "spare house keys",
         "My spare house keys are in the hallway drawer."),
    seed("m-000017", "2023-12-17T10:10:00Z", BUS,
         "a crosswalk button on a pole", "crossing signal",
         "The crossing signal skips if you press twice."),
    seed("m-000018", "2023-12-18T14:00:00Z", BISTRO,
         "a handwritten sign taped to the register", "card minimum",
         "Card payments need a ten dollar minimum."),
    seed("m-000019", "2023-12-19T08:30:00Z", HOME,
         "a potted plant on a desk", "potted plant",
         "Remind me to water the plant on Tuesdays",
         "Plant watering on Tuesdays."),
    seed("m-000020", "2023-12-20T09:45:00Z", BUS,
         "a ticket kiosk with a cracked screen", "ticket kiosk",
         "The ticket kiosk rejects crumpled bills."),
    seed("m-000021", "2023-12-21T17:00:00Z", HOME,
         "cleaning supplies under a sink", "vacuum filters",
         "Vacuum filters are under the sink."),
    seed("m-000022", "2023-12-22T12:15:00Z", BISTRO,
         "a teapot steaming on the counter", "jasmine tea",
         "The jasmine tea steeps for four minutes."),
    seed("m-000023", "2023-12-23T08:00:00Z", HOME,
         "a gym bag by the front door", "gym",
         "When does the gym open on weekdays?",
         "The gym opens at 6 AM on weekdays.",
         source="live", confidence=9),
    seed("m-000024", "2023-12-24T10:30:00Z", BUS,
         "pigeons pecking near a bakery door", "pigeons",
         "Pigeons gather near the bakery door."),
    seed("m-000025", "2023-12-25T09:00:00Z", HOME,
         "a mirrored medicine cabinet", "allergy pills",
         "Allergy pills are in the medicine cabinet."),
    seed("m-000026", "2023-12-26T08:30:00Z", HOME,
         "garbage bins at the curb", "trash pickup",
         "Trash pickup moved to early mornings."),
    seed("m-000027", "2023-12-27T18:00:00Z", HOME,
         "an empty carton of soy milk on the counter", "unsweetened soy milk",
         "I need unsweetened soy milk from Walmart."),
    seed("m-000028", "2023-12-28T11:00:00Z", BISTRO,
         "folded patio chairs by a fence", "patio chairs",
         "The patio chairs stack near the fence."),
    seed("m-000029", "2023-12-29T13:45:00Z", BUS,
         "a plaid scarf tied to a railing", "lost scarf",
         "A lost scarf hangs on the railing."),
    seed("m-000030", "2023-12-30T10:00:00Z", HOME,
         "token machines in the laundry room", "laundry tokens",
         "Laundry tokens cost two dollars each."),
    seed("m-000031", "2023-12-30T15:00:00Z", BISTRO,
         "a brunch menu clipped to a stand", "weekend brunch",
         "Weekend brunch starts at nine thirty."),
    seed("m-000032", "2023-12-31T09:30:00Z", BUS,
         "a fare card reader at the shelter", "fare card",
         "My fare card balance was eleven dollars."),
    seed("m-000033", "2023-12-31T16:00:00Z", HOME,
         "a crowded bookshelf in the living room", "paperbacks",
         "Paperbacks go on the lower bookshelf."),
    seed("m-000034", "2024-01-01T10:00:00Z", BISTRO,
         "a barista at the espresso bar", "barista",
         "The barista knows my usual order."),
    seed("m-000035", "2024-01-01T14:30:00Z", HOME,
         "a squeaky back door", "door hinge",
         "The back door hinge needs oil."),
    seed("m-000036", "2024-01-02T09:00:00Z", BUS,
         "orange cones around broken pavement", "sidewalk construction",
         "Sidewalk construction blocks the north exit."),
    seed("m-000037", "2024-01-02T12:00:00Z", BISTRO,
         "trays of pastries behind glass", "pastry case",
         "The pastry case is restocked around noon."),
    seed("m-000038", "2024-01-02T15:00:00Z", HOME,
         "a frosted kitchen window", "window latch",
         "The kitchen window latch sticks when cold."),
    seed("m-000039", "2024-01-03T10:30:00Z", BUS,
         "a painted mural on a brick wall", "mural",
         "A new mural covers the old posters."),
    seed("m-000040", "2024-01-03T16:00:00Z", BISTRO,
         "a wifi sign behind the register", "cafe wifi",
         "The cafe wifi needs a receipt code."),
    seed("m-000041", "2024-01-04T09:00:00Z", HOME,
         "stacked boxes in a closet", "lightbulbs",
         "The hallway closet holds extra lightbulbs."),
    seed("m-000042", "2024-01-04T13:00:00Z", BUS,
         "folding tables with produce crates", "farmers market",
         "The farmers market sets up on Fridays."),
    seed("m-000043", "2024-01-05T11:00:00Z", BISTRO,
         "napkin dispensers on a sideboard", "napkins",
         "Extra napkins live under the counter."),
    seed("m-000044", "2024-01-05T17:30:00Z", HOME,
         "an open maintenance panel with labeled ports", "wire",
         "Connect the wire to the port second from the left."),
    seed("m-000045", "2024-01-06T10:00:00Z", BISTRO,
         "a pepper mill and salt grinder", "salt grinder",
         "Ask for the salt grinder at the bar."),
]


def body(ts, loc, transcript=None, scene=None):
    out = {
        "user_id": USER,
        "gps": {"lat": loc[1], "lon": loc[2]},
        "timestamp": ts,
        "space_label": loc[0],
    }
    if transcript is not None:
        out["transcript"] = transcript
    if scene is not None:
        out["scene_text"] = scene
    return out


def answer(granularity, routing, top, text, confidence, stored=None,
           verification=None, summary=None, referenced=None):
    out = {
        "kind": "answer",
        "query_type": "question_answering",
        "granularity": granularity,
        "routing": routing,
        "top_memory_id": top,
        "answer_text": text,
        "confidence": confidence,
        "needs_verification": verification is not None,
        "stored_memory_id": stored,
        "verification_id": verification,
    }
    if summary is not None:
        out["summary"] = summary
    if referenced is not None:
        out["referenced_memory_ids"] = referenced
    return out


PLANT_SCENE = "a potted plant on a desk"
PANEL_SCENE = "an open maintenance panel with labeled ports"
BUS_SCENE = "a bus stop sign on a street"
MARKET_SCENE = "a supermarket aisle with canned goods"
SAUCE_SCENE = "shelf of sauces, wasabi soy sauce in center"
KEYS_SCENE = "a hallway drawer by the door"
DESK_SCENE = "a worksheet on a classroom desk"

WASABI_FACT = "Wasabi soy sauce has about 2 grams of sugar per serving."
TERIYAKI_FACT = "Teriyaki sauce has about 9 grams of sugar per serving."
WATER_FACT = "Water boils at 100 degrees Celsius at sea-level pressure."
NOTE_SUMMARY = ('Memory about assignment at classroom from Wednesday, '
                '2024-01-10: "the assignment is due on Friday"')
GYM_SUMMARY = ('Memory about gym at home from Saturday, 2023-12-23: '
               '"When does the gym open on weekdays?"')
FRESH_SUMMARY = ('Unverified answer to "What is the boiling point of water?": '
                 f'"{WATER_FACT}"')

STEP_SPECS = [
    {
        "id": "S01", "action": "query", "oracle": True,
        "pair": "R3", "role": "full",
        "body": body("2024-01-10T09:00:00Z", HOME,
                     "When must I water my plant?", PLANT_SCENE),
        "design": answer("full", "static", "m-000019",
                         "Plant watering on Tuesdays.", 10),
    },
    {
        "id": "S02", "action": "query", "oracle": True,
        "pair": "R3", "role": "partial",
        "body": body("2024-01-10T09:05:00Z", HOME,
                     "water my plant?", PLANT_SCENE),
        "design": answer("partial", "static", "m-000019",
                         "Plant watering on Tuesdays.", 10),
    },
    {
        "id": "S03", "action": "query", "oracle": True,
        "body": body("2024-01-10T09:30:00Z", HOME, None, PANEL_SCENE),
        "design": answer("zero", "static", "m-000044",
                         "Connect the wire to the port second from the left.", 8),
    },
    {
        "id": "S04", "action": "query", "oracle": True,
        "body": body("2024-01-10T10:05:00Z", BUS, "M11 bus?", BUS_SCENE),
        "design": answer("partial", "live", "m-000005",
                         "M11 arrives at 5:10 PM", 10, stored="m-000046"),
    },
    {
        "id": "S05", "action": "query", "oracle": True,
        "pair": "R2", "role": "full",
        "body": body("2024-01-10T11:00:00Z", MARKET,
                     "What did I say about the soy milk?", MARKET_SCENE),
        "design": answer("full", "static", "m-000027",
                         "I need unsweetened soy milk from Walmart.", 10),
    },
    {
        "id": "S06", "action": "query", "oracle": True,
        "pair": "R2", "role": "partial",
        "body": body("2024-01-10T11:05:00Z", MARKET, "soy milk?", MARKET_SCENE),
        "design": answer("partial", "static", "m-000027",
                         "I need unsweetened soy milk from Walmart.", 10),
    },
    {
        "id": "S07", "action": "query", "oracle": True,
        "body": body("2024-01-10T12:30:00Z", BISTRO, "sugar?",
                     "a shelf of teriyaki sauce"),
        "design": answer("partial", "static", "m-000006",
                         TERIYAKI_FACT, 8, stored="m-000047"),
    },
    {
        "id": "S08", "action": "query", "oracle": True,
        "pair": "R1", "role": "full",
        "body": body("2024-01-10T13:00:00Z", HOME,
                     "Where did I put my spare house keys last night?",
                     KEYS_SCENE),
        "design": answer("full", "static", "m-000016",
                         "My spare house keys are in the hallway drawer.", 10),
    },
    {
        "id": "S09", "action": "query", "oracle": True,
        "pair": "R1", "role": "partial",
        "body": body("2024-01-10T13:05:00Z", HOME, "keys?", KEYS_SCENE),
        "design": answer("partial", "static", "m-000016",
                         "My spare house keys are in the hallway drawer.", 8),
    },
    {
        "id": "S10", "action": "query", "oracle": True,
        "body": body("2024-01-10T13:30:00Z", HOME,
                     "What was my plant reminder from Tuesday?", PLANT_SCENE),
        "design": answer("full", "static", "m-000019",
                         "Plant watering on Tuesdays.", 8),
    },
    {
        "id": "S11", "action": "query", "oracle": False,
        "body": body("2024-01-10T14:00:00Z", CLASSROOM,
                     "Remember that the assignment is due on Friday",
                     DESK_SCENE),
        "design": {
            "kind": "remembrance_pending",
            "query_type": "remembrance",
            "granularity": None,
            "verification_id": "v-000001",
            "summary": NOTE_SUMMARY,
        },
    },
    {
        "id": "S12", "action": "verify", "oracle": False,
        "body": {"user_id": USER, "verification_id": "v-000001",
                 "accept": True, "now": "2024-01-10T14:10:00Z"},
        "design": {"outcome": "stored", "memory_id": "m-000048"},
    },
    {
        "id": "S13", "action": "query", "oracle": True,
        "body": body("2024-01-10T14:15:00Z", CLASSROOM, "assignment?",
                     DESK_SCENE),
        "design": answer("partial", "static", "m-000048",
                         "the assignment is due on Friday", 10),
    },
    {
        "id": "S14", "action": "query", "oracle": False,
        "body": body("2024-01-10T14:30:00Z", HOME,
                     "remove the memory about the gym schedule"),
        "design": {
            "kind": "removal_pending",
            "query_type": "removal",
            "granularity": None,
            "verification_id": "v-000002",
            "summary": GYM_SUMMARY,
        },
    },
    {
        "id": "S15", "action": "verify", "oracle": False,
        "body": {"user_id": USER, "verification_id": "v-000002",
                 "accept": True, "now": "2024-01-10T14:35:00Z"},
        "design": {"outcome": "removed", "memory_id": "m-000023"},
    },
    {
        "id": "S16", "action": "query", "oracle": False,
        "body": body("2024-01-10T14:50:00Z", HOME,
                     "What is the boiling point of water?"),
        "design": answer("full", "fresh", None, WATER_FACT, 3,
                         verification="v-000003", summary=FRESH_SUMMARY,
                         referenced=[]),
    },
    {
        "id": "S17", "action": "verify", "oracle": False,
        "body": {"user_id": USER, "verification_id": "v-000003",
                 "accept": False, "now": "2024-01-10T14:55:00Z"},
        "design": {"outcome": "rejected", "memory_id": None},
    },
    {
        "id": "S18", "action": "query", "oracle": True,
        "body": body("2024-01-10T15:00:00Z", BUS, "M11 bus?", BUS_SCENE),
        "design": answer("partial", "live", "m-000046",
                         "M11 arrives at 5:10 PM", 10, stored="m-000049"),
    },
    {
        "id": "S19", "action": "query", "oracle": True,
        "body": body("2024-01-10T16:00:00Z", BISTRO, None, SAUCE_SCENE),
        "design": answer("zero", "static", "m-000047",
                         WASABI_FACT, 8, stored="m-000050"),
    },
    {
        "id": "S20", "action": "query", "oracle": True,
        "body": body("2024-01-10T17:00:00Z", MARKET,
                     "What did I say about buying something from Walmart?",
                     "a row of grocery shelves with soy milk cartons"),
        "design": answer("full", "static", "m-000027",
                         "I need unsweetened soy milk from Walmart.", 8),
    },
]


def fail(step_id: str, message: str) -> None:
    raise SystemExit(f"{step_id}: {message}")


def oracle_for(engine: Engine, step_body: dict) -> dict:
    corpus = engine.memories(USER)
    capture = capture_from_body(step_body)
    sketch = encode(capture, engine.providers)
    embed = engine.providers.embedder.embed
    text_vec = embed(sketch.transcript) if sketch.transcript else None
    scene_vec = (
        embed(sketch.scene_description) if sketch.scene_description.strip() else None
    )
    referent_vec = embed(sketch.referent) if sketch.referent else None
    return retrieval_oracle(
        corpus,
        gps=sketch.gps,
        constraint=extract_temporal(sketch.transcript),
        text_vec=text_vec,
        scene_vec=scene_vec,
        referent_vec=referent_vec,
    )


def build_steps() -> list[dict]:
    tmp = tempfile.TemporaryDirectory()
    engine = Engine(EngineConfig(data_dir=tmp.name))
    stored = engine.seed([dict(r) for r in PERSONA])
    if stored != len(PERSONA):
        raise SystemExit(f"seeded {stored} of {len(PERSONA)} persona records")

    steps = []
    for spec in STEP_SPECS:
        sid = spec["id"]
        expect = dict(spec["design"])
        if spec["oracle"]:
            oracle = oracle_for(engine, spec["body"])
            if not oracle["order"]:
                fail(sid, "oracle produced no candidates")
            if oracle["order"][0] != expect["top_memory_id"]:
                fail(sid, f"oracle top-1 {oracle['order'][0]}, "
                          f"designed {expect['top_memory_id']}")
            if oracle["routing"] != expect["routing"]:
                fail(sid, f"oracle routing {oracle['routing']}, "
                          f"designed {expect['routing']}")
            expect["referenced_memory_ids"] = oracle["order"]

        actual = execute_step(engine, {"action": spec["action"], "body": spec["body"]})
        for key, value in expect.items():
            if actual.get(key) != value:
                fail(sid, f"{key}: designed {value!r}, engine gave {actual.get(key)!r}")

        step = {"record": "step", "id": sid, "action": spec["action"],
                "body": spec["body"], "expect": expect}
        if spec.get("pair"):
            step["pair"] = spec["pair"]
            step["role"] = spec["role"]
        steps.append(step)

    final_ids = [m.id for m in engine.memories(USER)]
    wanted = [f"m-{i:06d}" for i in range(1, 51) if i != 23]
    if final_ids != wanted:
        raise SystemExit(f"final corpus ids {final_ids} != {wanted}")
    tmp.cleanup()
    return steps


def revalidate(steps: list[dict]) -> None:
    """Replay the freshly built scenario against a second engine."""
    tmp = tempfile.TemporaryDirectory()
    engine = Engine(EngineConfig(data_dir=tmp.name))
    engine.seed([dict(r) for r in PERSONA])
    results = run_scenario(engine, steps)
    bad = [r.step_id for r in results if not r.ok]
    if bad:
        raise SystemExit(f"revalidation failed at steps: {', '.join(bad)}")
    tmp.cleanup()


def check_reduction_pairs(steps: list[dict]) -> None:
    words = {}
    for step in steps:
        if step.get("pair"):
            transcript = step["body"]["transcript"]
            words.setdefault(step["pair"], {})[step["role"]] = len(transcript.split())
    expected = {"R1": (10, 1), "R2": (8, 2), "R3": (6, 3)}
    for pair, (full, partial) in expected.items():
        got = (words[pair]["full"], words[pair]["partial"])
        if got != (full, partial):
            raise SystemExit(f"pair {pair}: word counts {got}, designed {(full, partial)}")
    mean = sum(100.0 * (f - p) / f for f, p in expected.values()) / len(expected)
    if round(mean, 1) != 71.7:
        raise SystemExit(f"mean pair reduction {mean:.3f}%, designed 71.7%")


def write_fixtures(steps: list[dict]) -> None:
    FIXTURES_DIR.mkdir(parents=True, exist_ok=True)
    persona_path = FIXTURES_DIR / "persona_a.jsonl"
    with open(persona_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json({"record": "header", "format": "persona",
                                 "version": 1, "name": "persona_a",
                                 "user_id": USER}) + "\n")
        for record in PERSONA:
            fh.write(canonical_json(record) + "\n")
    scenario_path = FIXTURES_DIR / "scenario_suite.jsonl"
    with open(scenario_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json({"record": "header", "format": "scenario",
                                 "version": 1, "name": "scenario_suite",
                                 "persona": "persona_a.jsonl",
                                 "user_id": USER}) + "\n")
        for step in steps:
            fh.write(canonical_json(step) + "\n")
    print(f"wrote {persona_path} ({len(PERSONA)} records)")
    print(f"wrote {scenario_path} ({len(steps)} steps)")


def main() -> None:
    for i, record in enumerate(PERSONA, start=1):
        if record["id"] != f"m-{i:06d}":
            raise SystemExit(f"persona record {i} has id {record['id']}")
    timestamps = [parse_timestamp(r["created_at"]) for r in PERSONA]
    if timestamps != sorted(timestamps):
        raise SystemExit("persona records must be in chronological order")

    steps = build_steps()
    check_reduction_pairs(steps)
    revalidate(steps)
    write_fixtures(steps)


if __name__ == "__main__":
    main()
