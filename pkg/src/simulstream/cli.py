"""Command-line surface: simulate, eval, datagen, bench.

Exit status is 0 on success, 1 on a validation error, and 2 on a backend
or protocol error; failures print one machine-readable JSON object on
stderr so callers never have to scrape tracebacks.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .backends import MockAsrBackend, MockMtBackend, load_mock_script
from .core import BackendError, InvalidArgumentError, ProtocolError
from .datagen import GenConfig, generate_samples, load_corpus, write_samples
from .metrics import (
    evaluate,
    read_emission_log,
    read_reference_segments,
    write_emission_log,
)
from .pipeline import Pipeline, apply_overrides, preset_config, read_trace
from .wire import WireAsrBackend, WireChannel, WireMtBackend, DEFAULT_TIMEOUT_S

_TABLE_COLUMNS = ("mean_s", "median_s", "p90_s", "p95_s", "p99_s", "max_s")
_TABLE_HEADERS = ("M", "mdn", "p90", "p95", "p99", "max")


def _load_json(path: str | Path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InvalidArgumentError(f"{path}: expected a JSON object")
    return obj


def _build_backends(config: dict, config_dir: Path):
    backend = config.get("backend", {"kind": "mock"})
    if not isinstance(backend, dict) or "kind" not in backend:
        raise InvalidArgumentError("config 'backend' must be an object with 'kind'")
    kind = backend["kind"]
    closers = []
    if kind == "mock":
        script_path = config.get("mock_script")
        if not script_path:
            raise InvalidArgumentError("config needs 'mock_script' for mock backends")
        scripts = load_mock_script(config_dir / script_path)
        return MockAsrBackend(scripts.asr), MockMtBackend(scripts.mt), closers
    if kind == "wire":
        command = backend.get("command")
        if not isinstance(command, list) or not all(
            isinstance(c, str) for c in command
        ):
            raise InvalidArgumentError("wire backend needs 'command': [str, ...]")
        channel = WireChannel.spawn(command)
        closers.append(channel.close)
        timeout = float(backend.get("timeout_s", DEFAULT_TIMEOUT_S))
        measure = bool(backend.get("measure_compute", False))
        return (
            WireAsrBackend(channel, timeout, measure),
            WireMtBackend(channel, timeout, measure),
            closers,
        )
    raise InvalidArgumentError(f"unknown backend kind {kind!r}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config_raw = _load_json(args.config)
    mode = config_raw.get("table3", "adapted")
    config = preset_config(mode, seed=int(config_raw.get("seed", 0)))
    config = apply_overrides(config, config_raw.get("overrides", {}))
    events = read_trace(args.trace)
    asr_backend, mt_backend, closers = _build_backends(
        config_raw, Path(args.config).parent
    )
    try:
        pipeline = Pipeline(config, asr_backend, mt_backend)
        records, summary = pipeline.run_trace(events)
    finally:
        for close in closers:
            close()
    write_emission_log(records, args.out)
    summary_path = args.summary or f"{args.out}.summary.json"
    Path(summary_path).write_text(
        json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    log = read_emission_log(args.log)
    refs = read_reference_segments(args.refs)
    report = evaluate(log, refs)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_datagen(args: argparse.Namespace) -> int:
    result = load_corpus(args.corpus)
    if result.malformed:
        for lineno, reason in result.malformed:
            print(
                json.dumps({"warning": "malformed line", "line": lineno, "reason": reason}),
                file=sys.stderr,
            )
    config = GenConfig(
        max_context=args.max_context,
        min_context=args.min_context,
        prefix_rate=args.prefix_rate,
        seed=args.seed,
    )
    samples, stats = generate_samples(result.documents, config, args.samples)
    source_path, target_path, stats_path = write_samples(samples, stats, args.out_prefix)
    print(
        json.dumps(
            {
                "source": str(source_path),
                "target": str(target_path),
                "stats": str(stats_path),
                **stats.to_dict(),
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    refs = read_reference_segments(args.refs)
    runs = []
    for log_path in args.logs:
        log = read_emission_log(log_path)
        report = evaluate(log, refs)
        runs.append({"log": str(log_path), "nca": report["nca"], "ca": report["ca"]})
    comparison = {"runs": runs}
    if args.json:
        Path(args.json).write_text(
            json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    name_width = max(len(run["log"]) for run in runs) + 2
    header = "run".ljust(name_width) + "mode  " + "".join(
        h.rjust(9) for h in _TABLE_HEADERS
    )
    print(header)
    for run in runs:
        for mode in ("nca", "ca"):
            row = run["log"].ljust(name_width) + mode.upper().ljust(6)
            row += "".join(f"{run[mode][c]:9.3f}" for c in _TABLE_COLUMNS)
            print(row)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulstream",
        description="Deterministic simultaneous speech translation control plane",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replay an audio trace through the pipeline")
    p.add_argument("trace", help="JSONL trace of audio availability events")
    p.add_argument("config", help="JSON pipeline configuration")
    p.add_argument("out", help="output emission log (JSONL)")
    p.add_argument("--summary", help="summary JSON path (default: OUT.summary.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score an emission log against references")
    p.add_argument("log", help="emission log (JSONL)")
    p.add_argument("refs", help="reference segments (JSONL)")
    p.add_argument("--out", help="also write the report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("datagen", help="generate prefix training samples")
    p.add_argument("corpus", help="document-aligned bitext ('src ||| tgt' lines)")
    p.add_argument("out_prefix", help="output prefix for .src/.tgt/.stats.json")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix-rate", type=float, default=0.5)
    p.add_argument("--min-context", type=int, default=1)
    p.add_argument("--max-context", type=int, default=10)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("bench", help="compare latency reports across runs")
    p.add_argument("logs", nargs="+", help="emission logs (JSONL)")
    p.add_argument("--refs", required=True, help="reference segments (JSONL)")
    p.add_argument("--json", help="also write the comparison JSON here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BackendError, ProtocolError) as exc:
        kind = "backend-error" if isinstance(exc, BackendError) else "protocol-error"
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return 2
    except (InvalidArgumentError, OSError) as exc:
        kind = "io-error" if isinstance(exc, OSError) else "invalid-argument"
        print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
