"""End-to-end document flow: summarize, tag, derive topic tags, route, persist.

Every ingested document ends in exactly one of three states: delivered
(at least one routing rule fired and its sinks were written), defaulted
(no rule fired; the record went to the default sink), or failed
(summarization or a sink write broke; the cause lands in the failed
sink). Routing fans out: all rules whose required labels are a subset of
the summary's topic tags fire, and the destination set is their union.

Sinks are append-only line-delimited JSON files, one record per
delivery, each carrying the document id so out-of-order completion can
be reassociated. Documents may be processed concurrently up to a
parallelism bound; all routing, counting, and sink writes happen on the
coordinating thread, so each sink sees strictly serialized writes.
"""

from __future__ import annotations

import enum
import json
import threading
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .backends import Backend, GenerationParams, PromptTemplate, summarize
from .clock import MONOTONIC, Clock
from .ner import EntityLabel, Gazetteer, TaggedText, render_bracketed, tag_entities


class LanguageHint(enum.Enum):
    AUTO = "auto"
    ENGLISH = "en"
    CHINESE = "zh"


class DocumentSourceError(Exception):
    """A document source could not be read or contained a malformed record."""


class PipelineAborted(Exception):
    """The document source failed mid-run; carries the stats gathered so far."""

    def __init__(self, message: str, stats: "RunStats"):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class Document:
    id: str
    body: str
    language_hint: LanguageHint = LanguageHint.AUTO
    source: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.body:
            raise ValueError(f"document {self.id!r} has an empty body")


@dataclass(frozen=True)
class TaggedSummary:
    document_id: str
    summary: str
    tagged: TaggedText
    latency_s: float

    @property
    def topic_tags(self) -> frozenset[EntityLabel]:
        return self.tagged.tags


@dataclass(frozen=True)
class RoutingRule:
    name: str
    required_labels: frozenset[EntityLabel]
    destination: str

    def __post_init__(self) -> None:
        if not self.required_labels:
            raise ValueError(f"rule {self.name!r} must require at least one label")

    def fires(self, summary: TaggedSummary) -> bool:
        return self.required_labels <= summary.topic_tags


@dataclass
class RunStats:
    ingested: int = 0
    delivered: int = 0
    defaulted: int = 0
    failed: int = 0


class Sink(Protocol):
    name: str

    def write(self, record: Mapping) -> None: ...


class JsonlSink:
    """Append-only line-delimited JSON sink; writes are serialized and flushed."""

    def __init__(self, name: str, path: str | Path):
        self.name = name
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("a", encoding="utf-8")
        self._lock = threading.Lock()

    def write(self, record: Mapping) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self._handle.write(line + "\n")
            self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "JsonlSink":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def process_document(
    doc: Document,
    backend: Backend,
    template: PromptTemplate,
    params: GenerationParams,
    gazetteer: Gazetteer,
    clock: Clock = MONOTONIC,
) -> TaggedSummary:
    """Summarize then tag one document; summarization errors propagate."""
    result = summarize(doc, template, params, backend, clock)
    start = clock.now()
    tagged = tag_entities(result.summary_text, gazetteer)
    tagging_latency = clock.now() - start
    return TaggedSummary(
        document_id=doc.id,
        summary=result.summary_text,
        tagged=tagged,
        latency_s=result.latency_s + tagging_latency,
    )


def route(
    summary: TaggedSummary, rules: Sequence[RoutingRule], default: str
) -> set[str]:
    """Union of destinations of all firing rules; {default} when none fire."""
    destinations = {rule.destination for rule in rules if rule.fires(summary)}
    return destinations if destinations else {default}


def summary_record(summary: TaggedSummary) -> dict:
    """The JSON shape persisted per delivery."""
    return {
        "document_id": summary.document_id,
        "summary": summary.summary,
        "bracketed": render_bracketed(summary.tagged),
        "tags": sorted(label.rendered for label in summary.topic_tags),
        "spans": [
            {
                "start": span.start,
                "end": span.end,
                "label": span.label.rendered,
                "surface": span.surface,
            }
            for span in summary.tagged.spans
        ],
        "latency_s": summary.latency_s,
    }


def _validate_destinations(
    rules: Sequence[RoutingRule], sinks: Mapping[str, Sink], default_sink: str, failed_sink: str
) -> None:
    for rule in rules:
        if rule.destination not in sinks:
            raise ValueError(
                f"rule {rule.name!r} routes to unknown sink {rule.destination!r}"
            )
    if default_sink not in sinks:
        raise ValueError(f"default sink {default_sink!r} is not configured")
    if failed_sink not in sinks:
        raise ValueError(f"failed sink {failed_sink!r} is not configured")


def run_pipeline(
    documents: Iterable[Document],
    *,
    backend: Backend,
    template: PromptTemplate,
    params: GenerationParams,
    gazetteer: Gazetteer,
    rules: Sequence[RoutingRule],
    sinks: Mapping[str, Sink],
    default_sink: str,
    failed_sink: str = "failed",
    parallelism: int = 1,
    clock: Clock = MONOTONIC,
) -> RunStats:
    """Drive every document through summarize-tag-route-persist.

    Documents run concurrently up to ``parallelism``; a failed document
    is recorded in the failed sink and never halts the run. A source
    read failure drains the documents already in flight and raises
    :class:`PipelineAborted` with the partial stats.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    _validate_destinations(rules, sinks, default_sink, failed_sink)

    stats = RunStats()

    def record_failure(doc_id: str, error: str) -> None:
        stats.failed += 1
        try:
            sinks[failed_sink].write({"document_id": doc_id, "error": error})
        except Exception:  # noqa: BLE001 - failure sink is best-effort
            pass

    def finish(doc_id: str, future: Future) -> None:
        try:
            summary = future.result()
        except Exception as exc:  # noqa: BLE001 - per-document isolation by contract
            record_failure(doc_id, f"{type(exc).__name__}: {exc}")
            return
        fired = {rule.destination for rule in rules if rule.fires(summary)}
        destinations = fired if fired else {default_sink}
        record = summary_record(summary)
        try:
            for destination in sorted(destinations):
                sinks[destination].write(record)
        except Exception as exc:  # noqa: BLE001 - sink write failure fails the document
            record_failure(doc_id, f"sink write failed: {type(exc).__name__}: {exc}")
            return
        if fired:
            stats.delivered += 1
        else:
            stats.defaulted += 1

    source = iter(documents)
    source_error: Exception | None = None
    exhausted = False
    pending: dict[Future, str] = {}
    window = parallelism * 2

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        while True:
            while not exhausted and source_error is None and len(pending) < window:
                try:
                    doc = next(source)
                except StopIteration:
                    exhausted = True
                except Exception as exc:  # noqa: BLE001 - source abort contract
                    source_error = exc
                else:
                    stats.ingested += 1
                    future = pool.submit(
                        process_document, doc, backend, template, params, gazetteer, clock
                    )
                    pending[future] = doc.id
            if not pending:
                break
            done, _ = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                finish(pending.pop(future), future)

    if source_error is not None:
        raise PipelineAborted(
            f"document source failed: {type(source_error).__name__}: {source_error}",
            stats,
        ) from source_error
    return stats


def _document_from_record(record: Mapping, lineno: int) -> Document:
    if not isinstance(record, Mapping):
        raise DocumentSourceError(f"line {lineno}: expected an object")
    doc_id = record.get("id")
    body = record.get("body")
    if not isinstance(doc_id, str) or not doc_id:
        raise DocumentSourceError(f"line {lineno}: missing or empty 'id'")
    if not isinstance(body, str) or not body:
        raise DocumentSourceError(f"line {lineno}: missing or empty 'body'")
    hint_raw = record.get("language_hint", "auto")
    try:
        hint = LanguageHint(hint_raw)
    except ValueError:
        raise DocumentSourceError(
            f"line {lineno}: unknown language_hint {hint_raw!r}"
        ) from None
    source = record.get("source")
    if source is not None and not isinstance(source, str):
        raise DocumentSourceError(f"line {lineno}: 'source' must be a string")
    return Document(id=doc_id, body=body, language_hint=hint, source=source)


def read_documents(path: str | Path) -> Iterator[Document]:
    """Yield documents from a JSONL file or a directory of UTF-8 text files.

    For a directory, each regular file becomes one document with the file
    stem as its id, in sorted filename order. Malformed JSONL records
    raise :class:`DocumentSourceError` at the offending line, which a
    running pipeline reports as an aborted source.
    """
    p = Path(path)
    if p.is_dir():
        for child in sorted(p.iterdir()):
            if child.is_file():
                yield Document(id=child.stem, body=child.read_text(encoding="utf-8"),
                               source=str(child))
        return
    if not p.is_file():
        raise DocumentSourceError(f"document source not found: {p}")
    with p.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DocumentSourceError(f"line {lineno}: invalid JSON: {exc}") from exc
            yield _document_from_record(record, lineno)
