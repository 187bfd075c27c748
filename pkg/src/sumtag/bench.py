"""Throughput/latency benchmark: sweep batch sizes against any backend.

For each batch size the harness runs optional warmup steps (excluded
from timing), then pushes the whole workload through
:func:`~sumtag.backends.summarize_batch` and derives two rates from a
monotonic clock: samples per second (workload size / elapsed) and steps
per second (step count / elapsed). When the workload is an exact
multiple of the batch size, samples_per_sec = batch_size * steps_per_sec
by definition.

Absolute numbers are hardware-bound, so the harness pairs with
:class:`~sumtag.backends.LatencyModelBackend` to reproduce the
throughput-vs-latency trade-off at desk scale: step duration grows
linearly with batch size, hence steps/sec falls and samples/sec rises
monotonically across a sweep. The same harness runs unmodified against a
live HTTP backend.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .backends import (
    Backend,
    GenerationParams,
    PromptTemplate,
    SummaryFailure,
    summarize_batch,
)
from .clock import MONOTONIC, Clock

DEFAULT_BATCH_SIZES = (1, 2, 4, 8, 16, 32)

#: Batch size highlighted as the recommended operating point in reports.
OPERATING_POINT_BATCH_SIZE = 16

_DEFAULT_TEMPLATE = PromptTemplate("{text}")


@dataclass(frozen=True)
class BenchmarkPoint:
    batch_size: int
    total_samples: int
    total_steps: int
    elapsed_s: float
    samples_per_sec: float
    steps_per_sec: float


@dataclass(frozen=True)
class BenchmarkSweep:
    points: tuple[BenchmarkPoint, ...]
    backend_name: str
    config: Mapping[str, Any]
    complete: bool = True
    error: str | None = None


def derive_rates(
    total_samples: int, total_steps: int, elapsed_s: float
) -> tuple[float, float]:
    """(samples_per_sec, steps_per_sec); refuses non-positive elapsed time."""
    if elapsed_s <= 0:
        raise ValueError(f"elapsed time must be positive, got {elapsed_s}")
    return total_samples / elapsed_s, total_steps / elapsed_s


def run_benchmark(
    backend: Backend,
    workload: Sequence,
    batch_sizes: Sequence[int] = DEFAULT_BATCH_SIZES,
    warmup_steps: int = 1,
    *,
    template: PromptTemplate = _DEFAULT_TEMPLATE,
    params: GenerationParams = GenerationParams(),
    clock: Clock = MONOTONIC,
) -> BenchmarkSweep:
    """Measure one :class:`BenchmarkPoint` per batch size over a fixed workload.

    A backend failure at any point aborts the sweep: the points measured
    so far are returned with ``complete=False`` and the cause in
    ``error``. A zero measured elapsed time is a configuration error and
    raises instead.
    """
    if not batch_sizes:
        raise ValueError("batch_sizes must be non-empty")
    if list(batch_sizes) != sorted(set(batch_sizes)) or any(b < 1 for b in batch_sizes):
        raise ValueError(f"batch sizes must be strictly increasing positives, got {batch_sizes}")
    if len(workload) < max(batch_sizes):
        raise ValueError(
            f"workload of {len(workload)} documents is smaller than the largest "
            f"batch size {max(batch_sizes)}"
        )
    if warmup_steps < 0:
        raise ValueError(f"warmup_steps must be >= 0, got {warmup_steps}")

    config = {
        "batch_sizes": list(batch_sizes),
        "warmup_steps": warmup_steps,
        "workload_size": len(workload),
    }
    points: list[BenchmarkPoint] = []
    for batch_size in batch_sizes:
        for _ in range(warmup_steps):
            warm_results, _timings = summarize_batch(
                workload[:batch_size], template, params, backend, batch_size, clock
            )
            failure = _first_failure(warm_results)
            if failure is not None:
                return _aborted(points, backend, config, batch_size, failure)
        results, timings = summarize_batch(
            workload, template, params, backend, batch_size, clock
        )
        failure = _first_failure(results)
        if failure is not None:
            return _aborted(points, backend, config, batch_size, failure)
        samples_per_sec, steps_per_sec = derive_rates(
            len(workload), timings.num_steps, timings.total_elapsed_s
        )
        assert timings.num_steps == math.ceil(len(workload) / batch_size)
        points.append(
            BenchmarkPoint(
                batch_size=batch_size,
                total_samples=len(workload),
                total_steps=timings.num_steps,
                elapsed_s=timings.total_elapsed_s,
                samples_per_sec=samples_per_sec,
                steps_per_sec=steps_per_sec,
            )
        )
    return BenchmarkSweep(tuple(points), backend.name, config)


def _first_failure(results: Sequence) -> SummaryFailure | None:
    for result in results:
        if isinstance(result, SummaryFailure):
            return result
    return None


def _aborted(
    points: Sequence[BenchmarkPoint],
    backend: Backend,
    config: Mapping[str, Any],
    batch_size: int,
    failure: SummaryFailure,
) -> BenchmarkSweep:
    return BenchmarkSweep(
        tuple(points),
        backend.name,
        config,
        complete=False,
        error=f"batch size {batch_size}, document {failure.document_id!r}: {failure.error}",
    )


def point_record(point: BenchmarkPoint) -> dict:
    return {
        "batch_size": point.batch_size,
        "total_samples": point.total_samples,
        "total_steps": point.total_steps,
        "elapsed_s": point.elapsed_s,
        "samples_per_sec": point.samples_per_sec,
        "steps_per_sec": point.steps_per_sec,
    }


def write_sweep(sweep: BenchmarkSweep, path: str | Path) -> None:
    """Line-delimited sweep report: one point per line plus a trailer record."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8") as handle:
        for point in sweep.points:
            handle.write(json.dumps(point_record(point), sort_keys=True) + "\n")
        trailer = {
            "backend": sweep.backend_name,
            "complete": sweep.complete,
            "config": dict(sweep.config),
        }
        if sweep.error:
            trailer["error"] = sweep.error
        handle.write(json.dumps(trailer, sort_keys=True) + "\n")


def write_plot_data(sweep: BenchmarkSweep, path: str | Path) -> None:
    """Tab-separated columns (batch_size, steps_per_sec, samples_per_sec)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = ["batch_size\tsteps_per_sec\tsamples_per_sec"]
    for point in sweep.points:
        lines.append(f"{point.batch_size}\t{point.steps_per_sec!r}\t{point.samples_per_sec!r}")
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
