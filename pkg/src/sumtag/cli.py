"""Command-line entry point: evaluate, split, summarize, tag, run, bench.

Exit codes: 0 on success, 1 on validation errors (bad flags, bad config,
malformed inputs), 2 on runtime failures (backend or pipeline errors).
Human-readable tables print by default; ``--format json-lines`` emits one
JSON object per record for scripting. Commands never mutate their
inputs; everything lands at explicitly named paths or on stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from .backends import BackendError, SummaryFailure, summarize_batch
from .bench import (
    DEFAULT_BATCH_SIZES,
    OPERATING_POINT_BATCH_SIZE,
    point_record,
    run_benchmark,
    write_plot_data,
    write_sweep,
)
from .config import (
    ConfigError,
    load_run_config,
    make_backend,
    validate_for_run,
    validate_for_summarize,
)
from .dataset import (
    DatasetError,
    load_instruction_dataset,
    split_dataset,
    write_split_manifests,
)
from .metrics import EvalOptions, Smoothing, evaluate_corpus, format_score
from .ner import (
    BracketFormatError,
    Gazetteer,
    GazetteerError,
    render_bracketed,
    tag_entities,
)
from .pipeline import (
    DocumentSourceError,
    JsonlSink,
    PipelineAborted,
    read_documents,
    run_pipeline,
)
from .textcore import CHAR_SCHEME, WORD_SCHEME, contains_cjk

_VALIDATION_ERRORS = (
    ConfigError,
    DatasetError,
    GazetteerError,
    BracketFormatError,
    DocumentSourceError,
    ValueError,
    FileNotFoundError,
)


class _Parser(argparse.ArgumentParser):
    """argparse with the usage-error exit code pinned to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_lines(path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {p}")
    return p.read_text(encoding="utf-8").splitlines()


def _pick_scheme(choice: str, texts: list[str]):
    if choice == "word":
        return WORD_SCHEME
    if choice == "char":
        return CHAR_SCHEME
    return CHAR_SCHEME if any(contains_cjk(t) for t in texts) else WORD_SCHEME


def _emit(text: str, output: str | None) -> None:
    if output:
        out = Path(output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_evaluate(args) -> int:
    predictions = _read_lines(args.predictions)
    references = _read_lines(args.references)
    if len(predictions) != len(references):
        raise ValueError(
            f"line count mismatch: {len(predictions)} predictions vs "
            f"{len(references)} references"
        )
    scheme = _pick_scheme(args.tokenization, predictions + references)
    options = EvalOptions(
        max_order=args.max_order,
        smoothing=Smoothing.ADD_EPSILON if args.smoothing == "add-epsilon" else Smoothing.NONE,
    )
    report = evaluate_corpus(list(zip(predictions, references)), scheme, options)
    if args.format == "json-lines":
        payload = {
            "num_pairs": report.num_pairs,
            "bleu4": report.bleu4,
            "rouge1": vars(report.rouge1),
            "rouge2": vars(report.rouge2),
            "rougeL": vars(report.rougeL),
        }
        _emit(json.dumps(payload, sort_keys=True) + "\n", args.output)
    else:
        lines = [
            f"pairs   {report.num_pairs}",
            f"bleu4   {format_score(report.bleu4)}",
        ]
        for name, triple in (
            ("rouge1", report.rouge1),
            ("rouge2", report.rouge2),
            ("rougeL", report.rougeL),
        ):
            lines.append(
                f"{name}  P {format_score(triple.precision)}  "
                f"R {format_score(triple.recall)}  F1 {format_score(triple.f1)}"
            )
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def _parse_ratios(raw: str) -> tuple[int, int, int]:
    parts = raw.split(":")
    if len(parts) != 3:
        raise ValueError(f"ratios must look like A:B:C, got {raw!r}")
    try:
        a, b, c = (int(part) for part in parts)
    except ValueError:
        raise ValueError(f"ratios must be integers, got {raw!r}") from None
    return a, b, c


def _cmd_split(args) -> int:
    examples = load_instruction_dataset(args.dataset)
    split = split_dataset(examples, _parse_ratios(args.ratios), args.seed)
    write_split_manifests(split, args.out)
    counts = {
        "train": len(split.train),
        "validation": len(split.validation),
        "test": len(split.test),
    }
    if args.format == "json-lines":
        payload = {"seed": split.seed, "ratios": list(split.ratios), "counts": counts}
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        for name, count in counts.items():
            sys.stdout.write(f"{name}  {count}\n")
    return 0


def _cmd_summarize(args) -> int:
    config = load_run_config(args.config, overrides=_overrides(args))
    validate_for_summarize(config)
    backend, clock = make_backend(config)
    documents = list(read_documents(args.input))
    batch_size = args.batch_size or OPERATING_POINT_BATCH_SIZE
    results, _timings = summarize_batch(
        documents, config.template, config.generation, backend, batch_size, clock
    )
    lines = []
    for result in results:
        if isinstance(result, SummaryFailure):
            lines.append(json.dumps(
                {"document_id": result.document_id, "error": result.error},
                ensure_ascii=False, sort_keys=True,
            ))
        elif args.format == "json-lines":
            lines.append(json.dumps(
                {
                    "document_id": result.document_id,
                    "summary": result.summary_text,
                    "latency_s": result.latency_s,
                    "backend": result.backend_name,
                },
                ensure_ascii=False, sort_keys=True,
            ))
        else:
            lines.append(f"{result.document_id}\t{result.summary_text}")
    _emit("\n".join(lines) + ("\n" if lines else ""), args.output)
    return 0


def _cmd_tag(args) -> int:
    gazetteer = Gazetteer.from_file(
        args.gazetteer, case_sensitive=not args.case_insensitive
    )
    if args.input == "-":
        text = sys.stdin.read()
    else:
        p = Path(args.input)
        if not p.is_file():
            raise FileNotFoundError(f"input file not found: {p}")
        text = p.read_text(encoding="utf-8")
    tagged = tag_entities(text, gazetteer)
    if args.format == "json-lines":
        payload = {
            "text": tagged.text,
            "bracketed": render_bracketed(tagged),
            "tags": sorted(label.rendered for label in tagged.tags),
            "spans": [
                {
                    "start": span.start,
                    "end": span.end,
                    "label": span.label.rendered,
                    "surface": span.surface,
                }
                for span in tagged.spans
            ],
        }
        _emit(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n", args.output)
    else:
        _emit(render_bracketed(tagged), args.output)
    return 0


def _cmd_run(args) -> int:
    config = load_run_config(args.config, overrides=_overrides(args))
    validate_for_run(config)
    backend, clock = make_backend(config)
    gazetteer = Gazetteer.from_file(
        config.gazetteer_path, case_sensitive=config.gazetteer_case_sensitive
    )
    documents = read_documents(args.input)
    with contextlib.ExitStack() as stack:
        sinks = {
            name: stack.enter_context(JsonlSink(name, path))
            for name, path in config.sinks.items()
        }
        try:
            stats = run_pipeline(
                documents,
                backend=backend,
                template=config.template,
                params=config.generation,
                gazetteer=gazetteer,
                rules=config.rules,
                sinks=sinks,
                default_sink=config.default_sink,
                failed_sink=config.failed_sink,
                parallelism=config.parallelism,
                clock=clock,
            )
        except PipelineAborted as exc:
            sys.stderr.write(f"aborted: {exc}\n")
            sys.stderr.write(_stats_line(exc.stats, args.format))
            return 2
    sys.stdout.write(_stats_line(stats, args.format))
    return 0


def _stats_line(stats, fmt: str) -> str:
    if fmt == "json-lines":
        return json.dumps(
            {
                "ingested": stats.ingested,
                "delivered": stats.delivered,
                "defaulted": stats.defaulted,
                "failed": stats.failed,
            },
            sort_keys=True,
        ) + "\n"
    return (
        f"ingested   {stats.ingested}\n"
        f"delivered  {stats.delivered}\n"
        f"defaulted  {stats.defaulted}\n"
        f"failed     {stats.failed}\n"
    )


def _parse_batch_sizes(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ValueError(f"batch sizes must be comma-separated integers, got {raw!r}") from None


def _cmd_bench(args) -> int:
    config = load_run_config(args.config, overrides=_overrides(args))
    validate_for_summarize(config)
    backend, clock = make_backend(config)
    workload = list(read_documents(args.workload))
    batch_sizes = (
        _parse_batch_sizes(args.batch_sizes) if args.batch_sizes else config.bench.batch_sizes
    )
    warmup = args.warmup if args.warmup is not None else config.bench.warmup_steps
    sweep = run_benchmark(
        backend,
        workload,
        batch_sizes,
        warmup,
        template=config.template,
        params=config.generation,
        clock=clock,
    )
    if args.output:
        write_sweep(sweep, args.output)
    if args.plot_data:
        write_plot_data(sweep, args.plot_data)
    if args.format == "json-lines":
        for point in sweep.points:
            sys.stdout.write(json.dumps(point_record(point), sort_keys=True) + "\n")
    else:
        sys.stdout.write("batch_size  steps/s     samples/s\n")
        for point in sweep.points:
            marker = "  *" if point.batch_size == OPERATING_POINT_BATCH_SIZE else ""
            sys.stdout.write(
                f"{point.batch_size:<10}  {point.steps_per_sec:<10.6g}  "
                f"{point.samples_per_sec:<10.6g}{marker}\n"
            )
    if not sweep.complete:
        sys.stderr.write(f"sweep incomplete: {sweep.error}\n")
        return 2
    return 0


def _overrides(args) -> dict:
    return {
        "backend_kind": getattr(args, "backend_kind", None),
        "base_url": getattr(args, "base_url", None),
        "model": getattr(args, "model", None),
        "parallelism": getattr(args, "parallelism", None),
    }


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML config file (or set SUMTAG_CONFIG)")
    parser.add_argument("--backend-kind", help="override backend.kind")
    parser.add_argument("--base-url", help="override backend.base_url")
    parser.add_argument("--model", help="override backend.model")


def _add_format_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format",
        choices=("table", "json-lines"),
        default="table",
        help="output format (default: table)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sumtag",
        description="Summarize, tag, route, and evaluate documents.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    evaluate = commands.add_parser(
        "evaluate", help="score predictions against references (BLEU-4, ROUGE-1/2/L)"
    )
    evaluate.add_argument("--predictions", required=True, help="text file, one prediction per line")
    evaluate.add_argument("--references", required=True, help="text file, one reference per line")
    evaluate.add_argument(
        "--tokenization",
        choices=("auto", "word", "char"),
        default="auto",
        help="auto picks char-level when the corpus contains CJK text",
    )
    evaluate.add_argument("--max-order", type=int, default=4, help="BLEU n-gram order")
    evaluate.add_argument(
        "--smoothing",
        choices=("none", "add-epsilon"),
        default="none",
        help="replace zero BLEU match counts with a small epsilon",
    )
    evaluate.add_argument("--output", help="write the report here instead of stdout")
    _add_format_flag(evaluate)
    evaluate.set_defaults(func=_cmd_evaluate)

    split = commands.add_parser(
        "split", help="deterministic train/validation/test manifests"
    )
    split.add_argument("--dataset", required=True, help="instruction dataset (JSON array)")
    split.add_argument("--ratios", default="8:1:1", help="integer ratios A:B:C (default 8:1:1)")
    split.add_argument("--seed", type=int, default=0, help="shuffle seed")
    split.add_argument("--out", required=True, help="manifest output directory")
    _add_format_flag(split)
    split.set_defaults(func=_cmd_split)

    summarize_cmd = commands.add_parser(
        "summarize", help="summarize documents with the configured backend"
    )
    _add_backend_flags(summarize_cmd)
    summarize_cmd.add_argument("--input", required=True, help="JSONL documents or a directory")
    summarize_cmd.add_argument("--output", help="write results here instead of stdout")
    summarize_cmd.add_argument(
        "--batch-size", type=int, help=f"default {OPERATING_POINT_BATCH_SIZE}"
    )
    _add_format_flag(summarize_cmd)
    summarize_cmd.set_defaults(func=_cmd_summarize)

    tag = commands.add_parser("tag", help="bracket-tag entities from a gazetteer")
    tag.add_argument("--gazetteer", required=True, help="surface<TAB>LABEL file")
    tag.add_argument("--input", required=True, help="UTF-8 text file, or - for stdin")
    tag.add_argument(
        "--case-insensitive",
        action="store_true",
        help="fold case when matching word-script entries",
    )
    tag.add_argument("--output", help="write tagged text here instead of stdout")
    _add_format_flag(tag)
    tag.set_defaults(func=_cmd_tag)

    run = commands.add_parser("run", help="run the full summarize-tag-route pipeline")
    _add_backend_flags(run)
    run.add_argument("--input", required=True, help="JSONL documents or a directory")
    run.add_argument("--parallelism", type=int, help="override config parallelism")
    _add_format_flag(run)
    run.set_defaults(func=_cmd_run)

    bench = commands.add_parser(
        "bench", help="sweep batch sizes and report steps/s and samples/s"
    )
    _add_backend_flags(bench)
    bench.add_argument("--workload", required=True, help="JSONL documents or a directory")
    bench.add_argument(
        "--batch-sizes",
        help=f"comma-separated (default {','.join(str(b) for b in DEFAULT_BATCH_SIZES)})",
    )
    bench.add_argument("--warmup", type=int, help="warmup steps per batch size (default 1)")
    bench.add_argument("--output", help="write the sweep as JSON lines")
    bench.add_argument("--plot-data", help="write tab-separated plot columns")
    _add_format_flag(bench)
    bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except BrokenPipeError:
        return 2
    except (BackendError, PipelineAborted, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        sys.stderr.write(f"unexpected error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
