"""Command-line front end.

Subcommands: ``serve`` runs the HTTP API, ``seed`` bulk-loads a persona
file, ``replay`` executes the scenario suite against a throwaway engine
and writes a JSON-lines log, ``report`` summarizes such a log, and
``corpus`` lists or prunes one user's stored memories.

``corpus rm`` deletes directly (operator maintenance); user-facing removal
goes through the verification flow instead.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path
from time import perf_counter
from typing import Optional

from .config import EngineConfig, load_config
from .domain import format_timestamp
from .engine import Engine
from .errors import InvalidArgumentError, SpatialMemError
from .replay import (
    PERSONA_FIXTURE,
    SCENARIO_FIXTURE,
    load_fixture,
    read_replay_log,
    run_step,
    summarize_log,
    write_replay_log,
)

# Field-reported reference numbers printed alongside replay summaries for
# comparison; the suite never asserts against them.
REFERENCE_TOP1 = {"full": 95.4, "partial": 86.7, "zero": 83.3}
REFERENCE_CONTEXT_ONLY_REDUCTION = 49.8


def _config_from(args: argparse.Namespace) -> EngineConfig:
    config = load_config(getattr(args, "config", None))
    if getattr(args, "data_dir", None):
        config.data_dir = args.data_dir
    if getattr(args, "host", None):
        config.host = args.host
    if getattr(args, "port", None):
        config.port = args.port
    config.validate()
    return config


def _load_typed_fixture(path: Path, expected_format: str) -> tuple[dict, list[dict]]:
    header, records = load_fixture(path)
    if header.get("format") != expected_format:
        raise InvalidArgumentError(
            f"{path} is a {header.get('format')!r} fixture; expected {expected_format!r}"
        )
    return header, records


def cmd_serve(args: argparse.Namespace) -> int:
    config = _config_from(args)
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


def cmd_seed(args: argparse.Namespace) -> int:
    config = _config_from(args)
    _, records = _load_typed_fixture(Path(args.file), "persona")
    engine = Engine(config)
    count = engine.seed(records)
    print(f"stored {count} memories under {config.data_dir}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    scenario_path = Path(args.scenario) if args.scenario else SCENARIO_FIXTURE
    header, steps = _load_typed_fixture(scenario_path, "scenario")

    if args.persona:
        persona_path = Path(args.persona)
    elif header.get("persona"):
        persona_path = scenario_path.parent / header["persona"]
    else:
        persona_path = PERSONA_FIXTURE
    _, seeds = _load_typed_fixture(persona_path, "persona")

    with tempfile.TemporaryDirectory(prefix="spatialmem-replay-") as tmp:
        config = _config_from(args)
        config.data_dir = tmp
        engine = Engine(config)
        engine.seed(seeds)
        results = []
        latencies: Optional[list[float]] = [] if args.latency else None
        for step in steps:
            started = perf_counter()
            results.append(run_step(engine, step))
            if latencies is not None:
                latencies.append((perf_counter() - started) * 1000.0)

    log_header = {
        "name": header.get("name", scenario_path.stem),
        "persona": persona_path.name,
        "user_id": header.get("user_id"),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            ok = write_replay_log(handle, log_header, results, latencies)
    else:
        ok = write_replay_log(sys.stdout, log_header, results, latencies)
    if not ok:
        failed = [r.step_id for r in results if not r.ok]
        print(f"replay failed at: {', '.join(failed)}", file=sys.stderr)
    return 0 if ok else 1


def cmd_report(args: argparse.Namespace) -> int:
    summary = summarize_log(read_replay_log(args.log))
    print(
        f"replay: {summary['steps']} steps, "
        f"{summary['passed']} passed, {summary['failed']} failed"
    )
    if summary["top1_by_granularity"]:
        print("top-1 accuracy by granularity (reference in parentheses):")
        for gran in ("full", "partial", "zero"):
            bucket = summary["top1_by_granularity"].get(gran)
            if not bucket:
                continue
            pct = 100.0 * bucket["top1_correct"] / bucket["total"]
            ref = REFERENCE_TOP1.get(gran)
            ref_text = f" (ref {ref}%)" if ref is not None else ""
            print(
                f"  {gran:8} {bucket['top1_correct']}/{bucket['total']} "
                f"= {pct:.1f}%{ref_text}"
            )
    if summary["pair_reductions"]:
        parts = ", ".join(
            f"{name} {value:.1f}%" for name, value in summary["pair_reductions"].items()
        )
        print(f"word-count reduction across utterance pairs: {parts}")
        print(
            f"  mean {summary['mean_reduction_percent']}% "
            f"(ref context-only {REFERENCE_CONTEXT_ONLY_REDUCTION}%)"
        )
    if "latency_ms" in summary:
        stats = summary["latency_ms"]
        print(f"latency: mean {stats['mean']} ms, max {stats['max']} ms")
    return 0


def cmd_corpus(args: argparse.Namespace) -> int:
    config = _config_from(args)
    engine = Engine(config)
    if args.corpus_cmd == "ls":
        rows = engine.memories(args.user)
        for memory in rows:
            print(
                f"{memory.id}  {format_timestamp(memory.created_at)}  "
                f"{memory.source_kind.value:<6}  conf={memory.confidence:<2}  "
                f"{memory.sketch.space_label}: {memory.query_text}"
            )
        print(f"{len(rows)} memories for {args.user}")
        return 0
    engine.store_for(args.user).delete(args.id)
    print(f"removed {args.id}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatialmem",
        description="Episodic spatial memory engine for wearable capture-and-recall.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="path to a JSON config file")
        p.add_argument("--data-dir", help="override the configured data directory")

    serve = sub.add_parser("serve", help="run the HTTP API")
    common(serve)
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(func=cmd_serve)

    seed = sub.add_parser("seed", help="bulk-load a persona fixture")
    common(seed)
    seed.add_argument("file", help="persona fixture (JSON lines with header)")
    seed.set_defaults(func=cmd_seed)

    replay = sub.add_parser(
        "replay", help="run a scenario fixture against a fresh engine"
    )
    common(replay)
    replay.add_argument(
        "scenario", nargs="?", help="scenario fixture (defaults to the shipped suite)"
    )
    replay.add_argument("--persona", help="persona fixture to seed before replaying")
    replay.add_argument("--out", help="write the replay log here instead of stdout")
    replay.add_argument(
        "--latency",
        action="store_true",
        help="record per-step wall-clock latency (breaks byte-stable logs)",
    )
    replay.set_defaults(func=cmd_replay)

    report = sub.add_parser("report", help="summarize a replay log")
    report.add_argument("log", help="replay log written by the replay command")
    report.set_defaults(func=cmd_report)

    corpus = sub.add_parser("corpus", help="inspect or prune a user's memories")
    corpus_sub = corpus.add_subparsers(dest="corpus_cmd", required=True)
    ls = corpus_sub.add_parser("ls", help="list stored memories")
    common(ls)
    ls.add_argument("--user", required=True)
    ls.set_defaults(func=cmd_corpus)
    rm = corpus_sub.add_parser("rm", help="delete one memory by id")
    common(rm)
    rm.add_argument("--user", required=True)
    rm.add_argument("--id", required=True)
    rm.set_defaults(func=cmd_corpus)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpatialMemError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
