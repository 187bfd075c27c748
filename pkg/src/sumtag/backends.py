"""Summarization backends: an OpenAI-compatible chat client plus deterministic mocks.

The HTTP backend speaks the chat-completions wire subset most inference
servers expose: POST ``{base_url}/v1/chat/completions`` with ``model``,
``messages`` and generation parameters, reading
``choices[0].message.content`` back. Transport errors and 5xx/429
responses are retried with exponential backoff up to ``params.retries``
extra attempts; other non-success statuses fail immediately with the
status and a body excerpt.

The mocks need no server: ``FirstSentenceBackend`` extracts the
document's first sentence, ``EchoKeywordsBackend`` returns the lexicon
terms found in the document, and ``LatencyModelBackend`` simulates an
inference server whose step duration grows linearly with batch size on a
:class:`~sumtag.clock.SimulatedClock`.

Batches are processed in consecutive steps of at most ``batch_size``
documents; requests within a step may run concurrently, steps never do.
A failed document occupies its slot in the results as a
:class:`SummaryFailure`, so output order and length always match input.
"""

from __future__ import annotations

import abc
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING

import httpx

from .clock import MONOTONIC, Clock

if TYPE_CHECKING:
    from .pipeline import Document


class BackendError(Exception):
    """A backend failed to produce a generation."""


class EmptyGenerationError(BackendError):
    """The backend answered with empty text; points at a model or template problem."""


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body with exactly one ``{text}`` placeholder."""

    template: str
    system_preamble: str | None = None

    def __post_init__(self) -> None:
        count = self.template.count("{text}")
        if count != 1:
            raise ValueError(
                f"template must contain exactly one '{{text}}' placeholder, found {count}"
            )

    def render(self, text: str) -> str:
        return self.template.replace("{text}", text)


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int = 256
    temperature: float = 0.0
    timeout_s: float = 60.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be non-negative, got {self.temperature}")
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be positive, got {self.timeout_s}")
        if not 0 <= self.retries <= 10:
            raise ValueError(f"retries must lie in [0, 10], got {self.retries}")


@dataclass(frozen=True)
class SummaryResult:
    document_id: str
    summary_text: str
    latency_s: float
    backend_name: str


@dataclass(frozen=True)
class SummaryFailure:
    """Error slot for one document in a batch result."""

    document_id: str
    error: str


@dataclass(frozen=True)
class BatchTimings:
    step_sizes: tuple[int, ...]
    step_durations_s: tuple[float, ...]

    @property
    def num_steps(self) -> int:
        return len(self.step_sizes)

    @property
    def total_elapsed_s(self) -> float:
        return sum(self.step_durations_s)


class Backend(abc.ABC):
    """A summarization engine shareable across concurrent callers."""

    name: str = "backend"

    @abc.abstractmethod
    def generate(
        self,
        prompt: str,
        document: str,
        params: GenerationParams,
        system: str | None = None,
    ) -> str:
        """Produce a summary. ``prompt`` is the rendered instruction; extractive
        mocks read the raw ``document`` instead."""

    def generate_batch(
        self,
        prompts: Sequence[str],
        documents: Sequence[str],
        params: GenerationParams,
        system: str | None = None,
    ) -> list[str | Exception]:
        """One step: all items in flight concurrently, per-item errors in place."""
        with ThreadPoolExecutor(max_workers=max(1, len(prompts))) as pool:
            futures = [
                pool.submit(self.generate, prompt, document, params, system)
                for prompt, document in zip(prompts, documents)
            ]
            results: list[str | Exception] = []
            for future in futures:
                try:
                    results.append(future.result())
                except Exception as exc:  # noqa: BLE001 - slot-level capture by contract
                    results.append(exc)
            return results


# Sentence terminators for the extractive mock. Full-width terminators end a
# sentence unconditionally (CJK text has no following space); ASCII ones only
# before whitespace or end of text, so "3.14" stays intact.
_FULLWIDTH_ENDS = "。！？"
_ASCII_ENDS = ".!?"


def first_sentence(text: str) -> str:
    stripped = text.strip()
    for index, ch in enumerate(stripped):
        if ch in _FULLWIDTH_ENDS:
            return stripped[: index + 1]
        if ch in _ASCII_ENDS and (index + 1 == len(stripped) or stripped[index + 1].isspace()):
            return stripped[: index + 1]
    return stripped


class FirstSentenceBackend(Backend):
    """Extractive mock: the summary is the document's first sentence."""

    name = "mock-first-sentence"

    def __init__(self, delay_s: float = 0.0):
        self.delay_s = delay_s

    def generate(
        self,
        prompt: str,
        document: str,
        params: GenerationParams,
        system: str | None = None,
    ) -> str:
        if self.delay_s > 0:
            time.sleep(self.delay_s)
        return first_sentence(document)


class EchoKeywordsBackend(Backend):
    """Mock that returns the lexicon terms present in the document.

    Matches are reported in order of first occurrence, space-joined; a
    document matching nothing yields empty text, which ``summarize``
    reports as an :class:`EmptyGenerationError`.
    """

    name = "mock-echo-keywords"

    def __init__(self, lexicon: Sequence[str], delay_s: float = 0.0):
        self.lexicon = tuple(lexicon)
        self.delay_s = delay_s

    def generate(
        self,
        prompt: str,
        document: str,
        params: GenerationParams,
        system: str | None = None,
    ) -> str:
        if self.delay_s > 0:
            time.sleep(self.delay_s)
        hits = [(document.find(term), term) for term in self.lexicon]
        found = sorted((pos, term) for pos, term in hits if pos != -1)
        seen: set[str] = set()
        ordered: list[str] = []
        for _, term in found:
            if term not in seen:
                seen.add(term)
                ordered.append(term)
        return " ".join(ordered)


class LatencyModelBackend(Backend):
    """Simulated server: step duration = fixed_overhead + per_sample_cost * batch size.

    Advances a :class:`~sumtag.clock.SimulatedClock` instead of sleeping, so
    sweeps over any operating point finish instantly. The fixed overhead
    amortizes over larger batches (throughput rises) while each step takes
    longer (step rate falls).
    """

    name = "mock-latency-model"

    def __init__(self, clock, fixed_overhead_s: float = 4.0, per_sample_cost_s: float = 1.0):
        if fixed_overhead_s <= 0 or per_sample_cost_s <= 0:
            raise ValueError("latency model constants must be positive")
        self.clock = clock
        self.fixed_overhead_s = fixed_overhead_s
        self.per_sample_cost_s = per_sample_cost_s

    def step_duration(self, batch_size: int) -> float:
        return self.fixed_overhead_s + self.per_sample_cost_s * batch_size

    def generate(
        self,
        prompt: str,
        document: str,
        params: GenerationParams,
        system: str | None = None,
    ) -> str:
        self.clock.advance(self.step_duration(1))
        return first_sentence(document)

    def generate_batch(
        self,
        prompts: Sequence[str],
        documents: Sequence[str],
        params: GenerationParams,
        system: str | None = None,
    ) -> list[str | Exception]:
        self.clock.advance(self.step_duration(len(documents)))
        return [first_sentence(document) for document in documents]


class HttpBackend(Backend):
    """Wire client for an OpenAI-compatible chat-completions endpoint."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        backoff_base_s: float = 0.25,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.backoff_base_s = backoff_base_s
        self.name = f"http:{model}"
        self._client = client or httpx.Client()

    def _payload(self, prompt: str, params: GenerationParams, system: str | None) -> dict:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        return {
            "model": self.model,
            "messages": messages,
            "max_tokens": params.max_new_tokens,
            "temperature": params.temperature,
        }

    def _extract_content(self, data: object) -> str:
        try:
            content = data["choices"][0]["message"]["content"]  # type: ignore[index]
        except (KeyError, IndexError, TypeError):
            raise BackendError(
                "malformed chat-completion response: missing choices[0].message.content"
            ) from None
        if not isinstance(content, str):
            raise BackendError("malformed chat-completion response: content is not a string")
        return content

    def generate(
        self,
        prompt: str,
        document: str,
        params: GenerationParams,
        system: str | None = None,
    ) -> str:
        url = f"{self.base_url}/v1/chat/completions"
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = self._payload(prompt, params, system)

        attempts = params.retries + 1
        last_error = ""
        for attempt in range(attempts):
            try:
                response = self._client.post(
                    url, json=payload, headers=headers, timeout=params.timeout_s
                )
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.is_success:
                    return self._extract_content(response.json())
                excerpt = response.text[:200]
                message = f"HTTP {response.status_code}: {excerpt}"
                if response.status_code < 500 and response.status_code != 429:
                    raise BackendError(message)
                last_error = message
            if attempt + 1 < attempts:
                time.sleep(self.backoff_base_s * 2**attempt)
        raise BackendError(f"request failed after {attempts} attempts; last: {last_error}")


def summarize(
    document: "Document",
    template: PromptTemplate,
    params: GenerationParams,
    backend: Backend,
    clock: Clock = MONOTONIC,
) -> SummaryResult:
    """Summarize one document, measuring wall-clock latency on ``clock``."""
    prompt = template.render(document.body)
    start = clock.now()
    text = backend.generate(prompt, document.body, params, template.system_preamble)
    latency = clock.now() - start
    if not text.strip():
        raise EmptyGenerationError(
            f"backend {backend.name} returned an empty generation for document {document.id!r}"
        )
    return SummaryResult(
        document_id=document.id,
        summary_text=text,
        latency_s=latency,
        backend_name=backend.name,
    )


def summarize_batch(
    documents: Sequence["Document"],
    template: PromptTemplate,
    params: GenerationParams,
    backend: Backend,
    batch_size: int,
    clock: Clock = MONOTONIC,
) -> tuple[list[SummaryResult | SummaryFailure], BatchTimings]:
    """Process documents in consecutive steps of at most ``batch_size``.

    Results keep input order and length; a document that fails occupies
    its slot as a :class:`SummaryFailure`. Each result's latency is its
    step's duration.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    results: list[SummaryResult | SummaryFailure] = []
    step_sizes: list[int] = []
    step_durations: list[float] = []
    for offset in range(0, len(documents), batch_size):
        step_docs = documents[offset : offset + batch_size]
        prompts = [template.render(doc.body) for doc in step_docs]
        bodies = [doc.body for doc in step_docs]
        start = clock.now()
        try:
            outputs: list[str | Exception] = backend.generate_batch(
                prompts, bodies, params, template.system_preamble
            )
        except Exception as exc:  # noqa: BLE001 - step failure fails every slot in it
            outputs = [exc] * len(step_docs)
        duration = clock.now() - start
        step_sizes.append(len(step_docs))
        step_durations.append(duration)
        for doc, output in zip(step_docs, outputs):
            if isinstance(output, Exception):
                results.append(SummaryFailure(doc.id, f"{type(output).__name__}: {output}"))
            elif not output.strip():
                results.append(SummaryFailure(doc.id, "empty generation"))
            else:
                results.append(
                    SummaryResult(
                        document_id=doc.id,
                        summary_text=output,
                        latency_s=duration,
                        backend_name=backend.name,
                    )
                )
    return results, BatchTimings(tuple(step_sizes), tuple(step_durations))
