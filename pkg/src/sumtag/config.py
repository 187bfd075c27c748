"""Run configuration: one YAML file, overridable by environment and flags.

Precedence is flags > environment > file. Recognized environment
variables: ``SUMTAG_CONFIG`` (config file path), ``SUMTAG_BACKEND_KIND``,
``SUMTAG_BASE_URL``, ``SUMTAG_MODEL``, ``SUMTAG_API_KEY``,
``SUMTAG_PARALLELISM``. Relative paths inside the file resolve against
the file's own directory.

Example file::

    backend:
      kind: mock-first-sentence   # http | mock-first-sentence |
                                  # mock-echo-keywords | mock-latency-model
      base_url: http://localhost:8000
      model: my-model
      keywords: [alpha, beta]     # mock-echo-keywords
      delay_s: 0.0                # per-sample delay of the sentence/keyword mocks
      fixed_overhead_s: 4.0       # mock-latency-model
      per_sample_cost_s: 1.0      # mock-latency-model
    generation:
      max_new_tokens: 256
      temperature: 0.0
      timeout_s: 60
      retries: 2
    prompt:
      template: "Summarize the following document in one sentence: {text}"
      system: "You are a precise summarizer."
    gazetteer: gazetteer.tsv
    gazetteer_case_sensitive: true
    rules:
      - name: algorithms-desk
        require: [ALGORITHM]
        destination: algorithms
    sinks:
      algorithms: out/algorithms.jsonl
      general: out/general.jsonl
      failed: out/failed.jsonl
    default_sink: general
    failed_sink: failed
    parallelism: 2
    bench:
      batch_sizes: [1, 2, 4, 8, 16, 32]
      warmup_steps: 1
"""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends import (
    Backend,
    EchoKeywordsBackend,
    FirstSentenceBackend,
    GenerationParams,
    HttpBackend,
    LatencyModelBackend,
    PromptTemplate,
)
from .bench import DEFAULT_BATCH_SIZES
from .clock import Clock, MonotonicClock, SimulatedClock
from .ner import EntityLabel, UnknownLabelError
from .pipeline import RoutingRule

BACKEND_KINDS = ("http", "mock-first-sentence", "mock-echo-keywords", "mock-latency-model")

DEFAULT_TEMPLATE = "Summarize the following document in one sentence: {text}"


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


@dataclass
class BackendSettings:
    kind: str = "mock-first-sentence"
    base_url: str | None = None
    model: str | None = None
    api_key: str | None = None
    keywords: tuple[str, ...] = ()
    delay_s: float = 0.0
    fixed_overhead_s: float = 4.0
    per_sample_cost_s: float = 1.0


@dataclass
class BenchSettings:
    batch_sizes: tuple[int, ...] = DEFAULT_BATCH_SIZES
    warmup_steps: int = 1


@dataclass
class RunConfig:
    backend: BackendSettings = field(default_factory=BackendSettings)
    generation: GenerationParams = field(default_factory=GenerationParams)
    template: PromptTemplate = field(default_factory=lambda: PromptTemplate(DEFAULT_TEMPLATE))
    gazetteer_path: Path | None = None
    gazetteer_case_sensitive: bool = True
    rules: tuple[RoutingRule, ...] = ()
    sinks: dict[str, Path] = field(default_factory=dict)
    default_sink: str = "general"
    failed_sink: str = "failed"
    parallelism: int = 1
    bench: BenchSettings = field(default_factory=BenchSettings)


def _require(mapping: Mapping, key: str, kind: type, where: str):
    value = mapping.get(key)
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: missing or invalid {key!r}")
    return value


def _parse_labels(names, where: str) -> frozenset[EntityLabel]:
    if not isinstance(names, list) or not names:
        raise ConfigError(f"{where}: 'require' must be a non-empty list of labels")
    labels = set()
    for name in names:
        try:
            labels.add(EntityLabel.parse(str(name)))
        except UnknownLabelError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return frozenset(labels)


def _parse_rules(raw) -> tuple[RoutingRule, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError("'rules' must be a list")
    rules = []
    for index, entry in enumerate(raw):
        where = f"rules[{index}]"
        if not isinstance(entry, Mapping):
            raise ConfigError(f"{where}: expected a mapping")
        name = str(_require(entry, "name", str, where))
        destination = str(_require(entry, "destination", str, where))
        required = _parse_labels(entry.get("require"), where)
        rules.append(RoutingRule(name=name, required_labels=required, destination=destination))
    return tuple(rules)


def _parse_generation(raw) -> GenerationParams:
    if raw is None:
        return GenerationParams()
    if not isinstance(raw, Mapping):
        raise ConfigError("'generation' must be a mapping")
    try:
        return GenerationParams(
            max_new_tokens=int(raw.get("max_new_tokens", 256)),
            temperature=float(raw.get("temperature", 0.0)),
            timeout_s=float(raw.get("timeout_s", 60.0)),
            retries=int(raw.get("retries", 2)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid generation parameters: {exc}") from exc


def _parse_backend(raw) -> BackendSettings:
    if raw is None:
        return BackendSettings()
    if not isinstance(raw, Mapping):
        raise ConfigError("'backend' must be a mapping")
    settings = BackendSettings(
        kind=str(raw.get("kind", "mock-first-sentence")),
        base_url=raw.get("base_url"),
        model=raw.get("model"),
        keywords=tuple(str(k) for k in raw.get("keywords", []) or []),
        delay_s=float(raw.get("delay_s", 0.0)),
        fixed_overhead_s=float(raw.get("fixed_overhead_s", 4.0)),
        per_sample_cost_s=float(raw.get("per_sample_cost_s", 1.0)),
    )
    if settings.kind not in BACKEND_KINDS:
        raise ConfigError(
            f"unknown backend kind {settings.kind!r}; expected one of {', '.join(BACKEND_KINDS)}"
        )
    return settings


def _parse_template(raw) -> PromptTemplate:
    if raw is None:
        return PromptTemplate(DEFAULT_TEMPLATE)
    if not isinstance(raw, Mapping):
        raise ConfigError("'prompt' must be a mapping")
    template = raw.get("template", DEFAULT_TEMPLATE)
    system = raw.get("system")
    try:
        return PromptTemplate(str(template), None if system is None else str(system))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_bench(raw) -> BenchSettings:
    if raw is None:
        return BenchSettings()
    if not isinstance(raw, Mapping):
        raise ConfigError("'bench' must be a mapping")
    sizes = raw.get("batch_sizes", list(DEFAULT_BATCH_SIZES))
    if not isinstance(sizes, list) or not all(isinstance(b, int) for b in sizes):
        raise ConfigError("'bench.batch_sizes' must be a list of integers")
    return BenchSettings(
        batch_sizes=tuple(sizes),
        warmup_steps=int(raw.get("warmup_steps", 1)),
    )


def load_run_config(
    path: str | Path | None = None,
    *,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, object] | None = None,
) -> RunConfig:
    """Parse the YAML config and merge environment and flag overrides.

    ``overrides`` keys (all optional): ``backend_kind``, ``base_url``,
    ``model``, ``parallelism``.
    """
    env = os.environ if env is None else env
    overrides = overrides or {}

    raw: Mapping = {}
    base_dir = Path.cwd()
    if path is None:
        path = env.get("SUMTAG_CONFIG")
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            loaded = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {p}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, Mapping):
            raise ConfigError(f"config file must hold a mapping at top level: {p}")
        raw = loaded
        base_dir = p.parent

    backend = _parse_backend(raw.get("backend"))
    if env.get("SUMTAG_BACKEND_KIND"):
        backend.kind = env["SUMTAG_BACKEND_KIND"]
    if env.get("SUMTAG_BASE_URL"):
        backend.base_url = env["SUMTAG_BASE_URL"]
    if env.get("SUMTAG_MODEL"):
        backend.model = env["SUMTAG_MODEL"]
    if env.get("SUMTAG_API_KEY"):
        backend.api_key = env["SUMTAG_API_KEY"]
    if overrides.get("backend_kind"):
        backend.kind = str(overrides["backend_kind"])
    if overrides.get("base_url"):
        backend.base_url = str(overrides["base_url"])
    if overrides.get("model"):
        backend.model = str(overrides["model"])
    if backend.kind not in BACKEND_KINDS:
        raise ConfigError(
            f"unknown backend kind {backend.kind!r}; expected one of {', '.join(BACKEND_KINDS)}"
        )

    parallelism = raw.get("parallelism", 1)
    if env.get("SUMTAG_PARALLELISM"):
        parallelism = env["SUMTAG_PARALLELISM"]
    if overrides.get("parallelism") is not None:
        parallelism = overrides["parallelism"]
    try:
        parallelism = int(parallelism)
    except (TypeError, ValueError):
        raise ConfigError(f"parallelism must be an integer, got {parallelism!r}") from None
    if parallelism < 1:
        raise ConfigError(f"parallelism must be >= 1, got {parallelism}")

    gazetteer_raw = raw.get("gazetteer")
    gazetteer_path = None if gazetteer_raw is None else (base_dir / str(gazetteer_raw))

    sinks_raw = raw.get("sinks") or {}
    if not isinstance(sinks_raw, Mapping):
        raise ConfigError("'sinks' must be a mapping of name to path")
    sinks = {str(name): base_dir / str(p) for name, p in sinks_raw.items()}

    return RunConfig(
        backend=backend,
        generation=_parse_generation(raw.get("generation")),
        template=_parse_template(raw.get("prompt")),
        gazetteer_path=gazetteer_path,
        gazetteer_case_sensitive=bool(raw.get("gazetteer_case_sensitive", True)),
        rules=_parse_rules(raw.get("rules")),
        sinks=sinks,
        default_sink=str(raw.get("default_sink", "general")),
        failed_sink=str(raw.get("failed_sink", "failed")),
        parallelism=parallelism,
        bench=_parse_bench(raw.get("bench")),
    )


def validate_for_run(config: RunConfig) -> None:
    """Everything the full pipeline needs; raises :class:`ConfigError` early."""
    if config.gazetteer_path is None:
        raise ConfigError("'gazetteer' path is required to run the pipeline")
    if not config.gazetteer_path.is_file():
        raise ConfigError(f"gazetteer file not found: {config.gazetteer_path}")
    if not config.sinks:
        raise ConfigError("at least one sink must be configured")
    for rule in config.rules:
        if rule.destination not in config.sinks:
            raise ConfigError(
                f"rule {rule.name!r} routes to unknown sink {rule.destination!r}"
            )
    if config.default_sink not in config.sinks:
        raise ConfigError(f"default sink {config.default_sink!r} is not configured")
    if config.failed_sink not in config.sinks:
        raise ConfigError(f"failed sink {config.failed_sink!r} is not configured")
    validate_for_summarize(config)


def validate_for_summarize(config: RunConfig) -> None:
    """Backend reachability requirements shared by summarize/bench/run."""
    if config.backend.kind == "http":
        if not config.backend.base_url:
            raise ConfigError("backend.base_url is required for the http backend")
        if not config.backend.model:
            raise ConfigError("backend.model is required for the http backend")
    if config.backend.kind == "mock-echo-keywords" and not config.backend.keywords:
        raise ConfigError("backend.keywords is required for the echo-keywords mock")


def make_backend(config: RunConfig) -> tuple[Backend, Clock]:
    """Instantiate the configured backend with the clock benchmarks should use."""
    settings = config.backend
    if settings.kind == "http":
        validate_for_summarize(config)
        return (
            HttpBackend(settings.base_url, settings.model, api_key=settings.api_key),
            MonotonicClock(),
        )
    if settings.kind == "mock-first-sentence":
        return FirstSentenceBackend(delay_s=settings.delay_s), MonotonicClock()
    if settings.kind == "mock-echo-keywords":
        validate_for_summarize(config)
        return EchoKeywordsBackend(settings.keywords, delay_s=settings.delay_s), MonotonicClock()
    if settings.kind == "mock-latency-model":
        clock = SimulatedClock()
        backend = LatencyModelBackend(
            clock,
            fixed_overhead_s=settings.fixed_overhead_s,
            per_sample_cost_s=settings.per_sample_cost_s,
        )
        return backend, clock
    raise ConfigError(f"unknown backend kind {settings.kind!r}")
