"""Document summarization-and-tagging pipeline engine.

Text goes in, routed structured records come out: a pluggable backend
condenses each document to a short summary, a gazetteer tagger marks
entity spans in it, the labels become topic tags, and tag-based rules
fan the record out to named sinks. The same package ships the
evaluation side: BLEU-4 and ROUGE-1/2/L scoring, deterministic dataset
splits, and a batch-size throughput/latency benchmark harness.
"""

from .backends import (
    Backend,
    BackendError,
    BatchTimings,
    EchoKeywordsBackend,
    EmptyGenerationError,
    FirstSentenceBackend,
    GenerationParams,
    HttpBackend,
    LatencyModelBackend,
    PromptTemplate,
    SummaryFailure,
    SummaryResult,
    summarize,
    summarize_batch,
)
from .bench import (
    BenchmarkPoint,
    BenchmarkSweep,
    derive_rates,
    run_benchmark,
)
from .clock import MonotonicClock, SimulatedClock
from .config import ConfigError, RunConfig, load_run_config, make_backend
from .dataset import (
    DatasetError,
    DatasetSplit,
    InstructionExample,
    holdout_split,
    load_instruction_dataset,
    split_dataset,
    write_split_manifests,
)
from .metrics import (
    BleuReport,
    EvalOptions,
    EvaluationReport,
    RougeTriple,
    Smoothing,
    bleu_corpus,
    evaluate_corpus,
    rouge_l,
    rouge_n,
)
from .ner import (
    BracketFormatError,
    EntityLabel,
    EntitySpan,
    Gazetteer,
    GazetteerError,
    TaggedText,
    UnknownLabelError,
    parse_bracketed,
    render_bracketed,
    tag_entities,
)
from .pipeline import (
    Document,
    DocumentSourceError,
    JsonlSink,
    LanguageHint,
    PipelineAborted,
    RoutingRule,
    RunStats,
    TaggedSummary,
    process_document,
    read_documents,
    route,
    run_pipeline,
)
from .textcore import (
    CHAR_SCHEME,
    WORD_SCHEME,
    NGramCounts,
    TokenizationScheme,
    TokenKind,
    TokenSequence,
    lcs_length,
    ngram_counts,
    tokenize,
)

__version__ = "0.1.0"
