"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict
lines. Tolerances are pinned here and nowhere else.
"""

from __future__ import annotations

import json
import math
import random
import time
from pathlib import Path

import pytest

import sumtag.dataset
from oracles import bleu_oracle, lcs_brute_force, rouge_l_oracle
from sumtag.backends import (
    BackendError,
    FirstSentenceBackend,
    GenerationParams,
    LatencyModelBackend,
    PromptTemplate,
)
from sumtag.bench import run_benchmark
from sumtag.cli import main
from sumtag.clock import SimulatedClock
from sumtag.dataset import InstructionExample, split_dataset, write_split_manifests
from sumtag.metrics import Smoothing, bleu_corpus, rouge_l, rouge_n
from sumtag.ner import (
    EntityLabel,
    EntitySpan,
    Gazetteer,
    TaggedText,
    parse_bracketed,
    render_bracketed,
    tag_entities,
)
from sumtag.pipeline import Document, JsonlSink, RoutingRule, run_pipeline
from sumtag.textcore import CHAR_SCHEME, WORD_SCHEME, tokenize

from test_metrics import BLEU_CASES
from test_ner import random_tagged_text

README = Path(__file__).parent.parent / "README.md"


def _passed(number: int, description: str) -> None:
    print(f"ACCEPTANCE {number} PASS - {description}")


def test_criterion_1_metric_identity_suite():
    """bleu(s, s) = 100 and all ROUGE F1(s, s) = 100, exactly, on 200 random sequences."""
    started = time.perf_counter()
    rng = random.Random(11)
    english = ["the", "cat", "sat", "mat", "power", "grid", "fault", "alpha", "beta"]
    chinese = "新的算法可以改进电力系统数据分析模型"
    for index in range(200):
        length = rng.randint(4, 50)
        if index % 2 == 0:
            text = " ".join(rng.choice(english) for _ in range(length))
            seq = tokenize(text, WORD_SCHEME)
        else:
            text = "".join(rng.choice(chinese) for _ in range(length))
            seq = tokenize(text, CHAR_SCHEME)
        assert len(seq) == length
        assert bleu_corpus([seq], [[seq]]).bleu == 100.0
        assert rouge_n(seq, seq, 1).f1 == 100.0
        assert rouge_n(seq, seq, 2).f1 == 100.0
        assert rouge_l(seq, seq).f1 == 100.0
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"identity suite took {elapsed:.2f}s"
    _passed(1, f"metric identity on 200 random sequences in {elapsed:.2f}s")


def test_criterion_2_bleu_oracle_equivalence():
    """>= 10 hand-derived cases match the from-definition oracle within 1e-9 relative."""
    assert len(BLEU_CASES) >= 10
    for name, cands, refs, max_order, smoothed in BLEU_CASES:
        smoothing = Smoothing.ADD_EPSILON if smoothed else Smoothing.NONE
        report = bleu_corpus(cands, refs, max_order=max_order, smoothing=smoothing)
        expected, expected_precisions, expected_bp = bleu_oracle(
            cands, refs, max_order=max_order, smoothed=smoothed
        )
        assert report.bleu == pytest.approx(expected, rel=1e-9, abs=1e-12), name
        assert report.brevity_penalty == pytest.approx(expected_bp, rel=1e-9), name
        for got, want in zip(report.precisions, expected_precisions):
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12), name

    # the two named anchor cases, from hand arithmetic
    clipped = bleu_corpus(
        [tuple("the the the the the the the".split())],
        [[tuple("the cat is on the mat".split())]],
    )
    assert clipped.precisions[0] == pytest.approx(2 / 7, rel=1e-9)
    assert clipped.bleu == 0.0
    brevity = bleu_corpus(
        [tuple("the cat sat".split())],
        [[tuple("the cat sat on the mat".split())]],
    )
    assert brevity.brevity_penalty == pytest.approx(math.exp(-1), rel=1e-9)
    assert brevity.bleu == 0.0
    _passed(2, f"{len(BLEU_CASES)} hand-derived BLEU cases match the oracle at 1e-9")


def test_criterion_3_rouge_l_oracle_equivalence():
    """DP ROUGE-L equals brute-force subsequence enumeration exactly, 1000+ trials."""
    rng = random.Random(33)
    vocab = ["a", "b", "c", "d", "猫", "狗"]
    trials = 1000
    for _ in range(trials):
        cand = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
        ref = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
        triple = rouge_l(cand, ref)
        p, r, f1 = rouge_l_oracle(cand, ref)
        assert (triple.precision, triple.recall, triple.f1) == (p, r, f1)
        if cand and ref:
            from sumtag.textcore import lcs_length

            assert lcs_length(cand, ref) == lcs_brute_force(cand, ref)
    _passed(3, f"ROUGE-L equals the brute-force oracle on {trials} random pairs")


def test_criterion_4_split_determinism_and_size_law(tmp_path):
    """4,905 records at 8:1:1 split as (3924, 490, 491), byte-identically per seed."""
    examples = [
        InstructionExample(id=i, instruction=f"i{i}", input="", output=f"o{i}")
        for i in range(4905)
    ]
    split = split_dataset(examples, (8, 1, 1), seed=42)
    sizes = (len(split.train), len(split.validation), len(split.test))
    assert sizes == (3924, 490, 491)

    write_split_manifests(split, tmp_path / "first")
    write_split_manifests(split_dataset(examples, (8, 1, 1), seed=42), tmp_path / "second")
    for name in ("train.ids", "validation.ids", "test.ids", "metadata.json"):
        assert (tmp_path / "first" / name).read_bytes() == (
            tmp_path / "second" / name
        ).read_bytes()

    # a 405-record test part is not derivable from the 8:1:1 ratio at N=4905:
    # floor gives 490, the remainder rule 491, plain rounding 490 or 491.
    assert 405 not in sizes
    assert 405 not in {math.floor(4905 / 10), math.ceil(4905 / 10), round(4905 / 10)}
    # ...and the behavior is documented where the rule lives, not silently patched.
    assert "405" in sumtag.dataset.__doc__
    _passed(4, "4905 @ 8:1:1 -> (3924, 490, 491), byte-identical reruns, 405 documented")


def test_criterion_5_benchmark_identity_and_shape():
    """Identity at 1e-9 per batch size; monotone sweep; 0.05 steps/s -> 0.8 samples/s."""
    started = time.perf_counter()
    clock = SimulatedClock()
    # 4 + 16 * 1 = 20 s per step at batch 16 -> 0.05 steps/s
    backend = LatencyModelBackend(clock, fixed_overhead_s=4.0, per_sample_cost_s=1.0)
    workload = [Document(id=f"w{i}", body=f"Doc {i} text. Tail.") for i in range(96)]
    sweep = run_benchmark(
        backend,
        workload,
        (1, 2, 4, 8, 16, 32),
        warmup_steps=1,
        template=PromptTemplate("{text}"),
        params=GenerationParams(),
        clock=clock,
    )
    assert sweep.complete

    for point in sweep.points:
        assert point.samples_per_sec == pytest.approx(
            point.batch_size * point.steps_per_sec, rel=1e-9
        )
    steps = [p.steps_per_sec for p in sweep.points]
    samples = [p.samples_per_sec for p in sweep.points]
    assert all(a > b for a, b in zip(steps, steps[1:])), "steps/s must strictly decrease"
    assert all(a < b for a, b in zip(samples, samples[1:])), "samples/s must strictly increase"

    at16 = next(p for p in sweep.points if p.batch_size == 16)
    assert at16.steps_per_sec == pytest.approx(0.05, abs=1e-9)
    assert at16.samples_per_sec == pytest.approx(0.8, abs=1e-6)

    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"benchmark criterion took {elapsed:.2f}s"
    _passed(5, f"sweep identity, shape, and the 0.05/0.8 point in {elapsed:.2f}s")


def test_criterion_6_bracket_round_trip(fixtures_dir):
    """parse(render(t)) = t on 500 random tagged texts; render(parse(s)) = s on the fixture."""
    rng = random.Random(66)
    for _ in range(500):
        tagged = random_tagged_text(rng)
        assert parse_bracketed(render_bracketed(tagged)) == tagged

    annotated = (fixtures_dir / "zh_annotated.txt").read_text(encoding="utf-8").rstrip("\n")
    assert render_bracketed(parse_bracketed(annotated)) == annotated
    _passed(6, "500 random round trips plus byte-identical fixture reconstruction")


class _InjectedFailureBackend(FirstSentenceBackend):
    name = "mock-failing"

    def __init__(self, fail_marker: str):
        super().__init__()
        self.fail_marker = fail_marker

    def generate(self, prompt, document, params, system=None):
        if self.fail_marker in document:
            raise BackendError("injected failure")
        return super().generate(prompt, document, params, system)


def test_criterion_7_pipeline_conservation(tmp_path):
    """ingested = delivered + defaulted + failed; fired rules' sinks hold the records."""
    gazetteer = Gazetteer({
        "算法": EntityLabel.ALGORITHM,
        "电力系统": EntityLabel.ORGANIZATION,
        "数据": EntityLabel.CONCEPT_TERM,
    })
    rules = (
        RoutingRule("algo", frozenset({EntityLabel.ALGORITHM}), "algo-desk"),
        RoutingRule("infra", frozenset({EntityLabel.ORGANIZATION}), "infra-desk"),
        RoutingRule(
            "joint",
            frozenset({EntityLabel.ALGORITHM, EntityLabel.CONCEPT_TERM}),
            "joint-desk",
        ),
    )
    bodies = [
        "算法真快。尾部。",
        "电力系统稳定。尾部。",
        "算法和数据配合。尾部。",
        "nothing tagged at all. tail.",
        "FAIL 算法。尾部。",
    ]
    template = PromptTemplate("{text}")
    params = GenerationParams()
    backend = _InjectedFailureBackend("FAIL")
    rng = random.Random(77)

    for trial in range(4):
        n = rng.choice([0, 7, 60, 200])
        documents = [
            Document(id=f"t{trial}-d{i}", body=rng.choice(bodies)) for i in range(n)
        ]
        run_dir = tmp_path / f"trial{trial}"
        sink_names = ("algo-desk", "infra-desk", "joint-desk", "general", "failed")
        sinks = {name: JsonlSink(name, run_dir / f"{name}.jsonl") for name in sink_names}
        try:
            stats = run_pipeline(
                documents,
                backend=backend,
                template=template,
                params=params,
                gazetteer=gazetteer,
                rules=rules,
                sinks=sinks,
                default_sink="general",
                failed_sink="failed",
                parallelism=rng.randint(1, 4),
            )
        finally:
            for sink in sinks.values():
                sink.close()

        assert stats.ingested == n
        assert stats.ingested == stats.delivered + stats.defaulted + stats.failed

        persisted = {
            name: {
                json.loads(line)["document_id"]
                for line in (run_dir / f"{name}.jsonl").read_text(encoding="utf-8").splitlines()
            }
            for name in sink_names
        }
        # the mock is deterministic: recompute each document's fired rules
        for doc in documents:
            if "FAIL" in doc.body:
                assert doc.id in persisted["failed"]
                continue
            summary_tags = tag_entities(
                backend.generate("", doc.body, params), gazetteer
            ).tags
            fired = {rule.destination for rule in rules if rule.required_labels <= summary_tags}
            for destination in fired or {"general"}:
                assert doc.id in persisted[destination], (doc.id, destination)
    _passed(7, "conservation and fired-rule delivery over randomized failing runs")


def test_criterion_8_evaluate_validated_by_golden_corpus(fixtures_dir, capsys):
    """End-to-end evaluate matches the oracle-derived golden corpus report."""
    golden = json.loads((fixtures_dir / "eval_golden.json").read_text(encoding="utf-8"))
    code = main([
        "evaluate",
        "--predictions", str(fixtures_dir / "eval_predictions.txt"),
        "--references", str(fixtures_dir / "eval_references.txt"),
        "--tokenization", "word",
        "--format", "json-lines",
    ])
    out = capsys.readouterr().out
    assert code == 0
    report = json.loads(out)
    assert report["num_pairs"] == golden["num_pairs"] == 20
    assert report["bleu4"] == pytest.approx(golden["bleu4"], rel=1e-9)
    for metric in ("rouge1", "rouge2", "rougeL"):
        for field in ("precision", "recall", "f1"):
            assert report[metric][field] == pytest.approx(
                golden[metric][field], rel=1e-9
            ), (metric, field)

    # absolute published benchmark scores are declared out of scope, in writing
    readme = README.read_text(encoding="utf-8").lower()
    assert "reproduc" in readme and "score" in readme
    with capsys.disabled():
        _passed(8, "evaluate end-to-end matches the oracle-derived 20-pair golden corpus")
