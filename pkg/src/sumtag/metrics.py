"""BLEU-4 and ROUGE-1/2/L scoring on the 0-100 scale, with corpus aggregation.

BLEU is computed at corpus level: clipped n-gram matches and candidate
totals are summed over all pairs before each precision is formed, and the
brevity penalty uses the summed candidate length against the summed
per-pair effective reference length (the reference closest in length to
the candidate, ties going to the shorter one). ROUGE triples are
macro-averaged: the unweighted mean of per-pair precision/recall/F1.

Any zero n-gram precision makes BLEU 0 unless epsilon smoothing is
enabled, which substitutes a small constant for zero *match* counts (a
zero n-gram *total* still yields 0 regardless). Scores stay full
precision internally; rounding happens only at presentation.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from .textcore import TokenizationScheme, lcs_length, ngram_counts, tokenize

Tokens = Sequence[str]


class Smoothing(enum.Enum):
    NONE = "none"
    ADD_EPSILON = "add-epsilon"


@dataclass(frozen=True)
class BleuReport:
    bleu: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    candidate_length: int
    effective_reference_length: int
    max_order: int


@dataclass(frozen=True)
class RougeTriple:
    """Precision/recall/F1 on the 0-100 scale."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_fractions(cls, precision: float, recall: float) -> RougeTriple:
        """Build from ratios in [0, 1]; F1 is 0 when both ratios are 0."""
        if precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        return cls(100.0 * precision, 100.0 * recall, 100.0 * f1)


@dataclass(frozen=True)
class EvaluationReport:
    bleu4: float
    rouge1: RougeTriple
    rouge2: RougeTriple
    rougeL: RougeTriple
    num_pairs: int


@dataclass(frozen=True)
class EvalOptions:
    max_order: int = 4
    smoothing: Smoothing = Smoothing.NONE


def _closest_reference_length(candidate_length: int, reference_lengths: Sequence[int]) -> int:
    return min(reference_lengths, key=lambda r: (abs(r - candidate_length), r))


def bleu_corpus(
    candidates: Sequence[Tokens],
    references: Sequence[Sequence[Tokens]],
    max_order: int = 4,
    smoothing: Smoothing = Smoothing.NONE,
    epsilon: float = 1e-9,
) -> BleuReport:
    """Corpus-level BLEU of token sequences against per-pair reference lists."""
    if len(candidates) != len(references):
        raise ValueError(
            f"candidate/reference count mismatch: {len(candidates)} vs {len(references)}"
        )
    if not candidates:
        raise ValueError("BLEU needs at least one candidate/reference pair")
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")

    matches = [0] * max_order
    totals = [0] * max_order
    candidate_length = 0
    reference_length = 0

    for cand, refs in zip(candidates, references):
        if not refs:
            raise ValueError("every candidate needs at least one reference")
        candidate_length += len(cand)
        reference_length += _closest_reference_length(len(cand), [len(r) for r in refs])
        for n in range(1, max_order + 1):
            cand_counts = ngram_counts(cand, n).counts
            if not cand_counts:
                continue
            max_ref_counts: Counter = Counter()
            for ref in refs:
                for gram, count in ngram_counts(ref, n).counts.items():
                    if count > max_ref_counts[gram]:
                        max_ref_counts[gram] = count
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(
                min(count, max_ref_counts[gram]) for gram, count in cand_counts.items()
            )

    precisions = []
    for matched, total in zip(matches, totals):
        if total == 0:
            precisions.append(0.0)
        elif matched == 0:
            precisions.append(epsilon / total if smoothing is Smoothing.ADD_EPSILON else 0.0)
        else:
            precisions.append(matched / total)

    if candidate_length == 0:
        brevity_penalty = 0.0
    elif candidate_length >= reference_length:
        brevity_penalty = 1.0
    else:
        brevity_penalty = math.exp(1.0 - reference_length / candidate_length)

    if all(p > 0.0 for p in precisions):
        log_mean = math.fsum(math.log(p) for p in precisions) / max_order
        score = 100.0 * brevity_penalty * math.exp(log_mean)
    else:
        score = 0.0

    return BleuReport(
        bleu=score,
        precisions=tuple(precisions),
        brevity_penalty=brevity_penalty,
        candidate_length=candidate_length,
        effective_reference_length=reference_length,
        max_order=max_order,
    )


def rouge_n(candidate: Tokens, reference: Tokens, n: int) -> RougeTriple:
    """N-gram overlap triple; degenerate inputs give zeros, never errors."""
    cand_counts = ngram_counts(candidate, n).counts
    ref_counts = ngram_counts(reference, n).counts
    overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return RougeTriple.from_fractions(precision, recall)


def rouge_l(candidate: Tokens, reference: Tokens) -> RougeTriple:
    """Longest-common-subsequence triple; an empty side gives zeros."""
    if not len(candidate) or not len(reference):
        return RougeTriple.from_fractions(0.0, 0.0)
    lcs = lcs_length(candidate, reference)
    return RougeTriple.from_fractions(lcs / len(candidate), lcs / len(reference))


def _mean_triple(triples: Sequence[RougeTriple]) -> RougeTriple:
    n = len(triples)
    return RougeTriple(
        precision=math.fsum(t.precision for t in triples) / n,
        recall=math.fsum(t.recall for t in triples) / n,
        f1=math.fsum(t.f1 for t in triples) / n,
    )


def evaluate_corpus(
    pairs: Sequence[tuple[str, str]],
    scheme: TokenizationScheme,
    options: EvalOptions = EvalOptions(),
) -> EvaluationReport:
    """Tokenize (candidate, reference) text pairs under one scheme and score them.

    BLEU is corpus-level with a single reference per pair; the ROUGE
    triples are unweighted means of the per-pair triples.
    """
    if not pairs:
        raise ValueError("evaluation needs at least one candidate/reference pair")
    candidates = [tokenize(cand, scheme) for cand, _ in pairs]
    references = [tokenize(ref, scheme) for _, ref in pairs]

    bleu = bleu_corpus(
        candidates,
        [[ref] for ref in references],
        max_order=options.max_order,
        smoothing=options.smoothing,
    )
    rouge1 = _mean_triple([rouge_n(c, r, 1) for c, r in zip(candidates, references)])
    rouge2 = _mean_triple([rouge_n(c, r, 2) for c, r in zip(candidates, references)])
    rougeL = _mean_triple([rouge_l(c, r) for c, r in zip(candidates, references)])

    return EvaluationReport(
        bleu4=bleu.bleu,
        rouge1=rouge1,
        rouge2=rouge2,
        rougeL=rougeL,
        num_pairs=len(pairs),
    )


def format_score(value: float) -> str:
    """Half-even rounding to two decimals, used only when printing scores."""
    return f"{round(value, 2):.2f}"
