"""Corpus BLEU-4 with clipped n-gram precisions and the brevity penalty."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from multiseq.errors import UsageError
from multiseq.metrics.score import CorpusScore

NGRAM_ORDER = 4

Tokens = Sequence[str]


def extract_ngrams(tokens: Tokens, max_order: int = NGRAM_ORDER) -> Counter[tuple[str, ...]]:
    ngrams: Counter[tuple[str, ...]] = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            ngrams[tuple(tokens[i : i + n])] += 1
    return ngrams


def ref_stats(output: Tokens, refs: Sequence[Tokens]) -> tuple[Counter[tuple[str, ...]], int]:
    """Maximum reference count per n-gram and the reference length closest to ``output``.

    Equally close references resolve to the shorter one.
    """
    ngrams: Counter[tuple[str, ...]] = Counter()
    closest_diff = None
    closest_len = 0
    for ref in refs:
        diff = abs(len(output) - len(ref))
        if closest_diff is None or diff < closest_diff:
            closest_diff = diff
            closest_len = len(ref)
        elif diff == closest_diff and len(ref) < closest_len:
            closest_len = len(ref)
        for ngram, count in extract_ngrams(ref).items():
            ngrams[ngram] = max(ngrams[ngram], count)
    return ngrams, closest_len


@dataclass
class BleuStats:
    correct: list[int]
    total: list[int]
    sys_len: int
    ref_len: int

    def __add__(self, other: BleuStats) -> BleuStats:
        return BleuStats(
            [a + b for a, b in zip(self.correct, other.correct)],
            [a + b for a, b in zip(self.total, other.total)],
            self.sys_len + other.sys_len,
            self.ref_len + other.ref_len,
        )


def sentence_stats(output: Tokens, refs: Sequence[Tokens]) -> BleuStats:
    if not refs:
        msg = "every hypothesis needs at least one reference"
        raise UsageError(msg)
    ref_ngrams, ref_len = ref_stats(output, refs)
    correct = [0] * NGRAM_ORDER
    total = [0] * NGRAM_ORDER
    for ngram, count in extract_ngrams(output).items():
        n = len(ngram)
        total[n - 1] += count
        correct[n - 1] += min(count, ref_ngrams[ngram])
    return BleuStats(correct, total, len(output), ref_len)


def compute_bleu(stats: BleuStats, add_one: bool = False) -> float:
    """BLEU in ``[0, 1]`` from sufficient statistics.

    ``add_one`` adds one to the matches and totals of orders 2 and up
    (sentence-level smoothing). Without it any order with no matches, or no
    n-grams at all, gives 0.
    """
    log_sum = 0.0
    for n in range(1, NGRAM_ORDER + 1):
        correct = stats.correct[n - 1]
        total = stats.total[n - 1]
        if add_one and n > 1:
            correct += 1
            total += 1
        if total == 0 or correct == 0:
            return 0.0
        log_sum += math.log(correct / total)
    brevity_penalty = 1.0
    if stats.sys_len < stats.ref_len:
        brevity_penalty = math.exp(1 - stats.ref_len / stats.sys_len) if stats.sys_len else 0.0
    return brevity_penalty * math.exp(log_sum / NGRAM_ORDER)


def sentence_bleu(output: Tokens, refs: Sequence[Tokens]) -> float:
    """Add-one smoothed sentence BLEU, for diagnostics only."""
    return compute_bleu(sentence_stats(output, refs), add_one=True)


def bleu(hypotheses: Sequence[Tokens], reference_sets: Sequence[Sequence[Tokens]]) -> CorpusScore:
    """Unsmoothed corpus BLEU-4.

    ``reference_sets[i]`` holds every reference of hypothesis ``i``. Sentence
    values in the result are add-one smoothed sentence BLEU.
    """
    if not hypotheses:
        msg = "cannot score an empty corpus"
        raise UsageError(msg)
    if len(hypotheses) != len(reference_sets):
        msg = f"{len(hypotheses)} hypotheses but {len(reference_sets)} reference sets"
        raise UsageError(msg)
    total = BleuStats([0] * NGRAM_ORDER, [0] * NGRAM_ORDER, 0, 0)
    sentences = []
    for output, refs in zip(hypotheses, reference_sets):
        stats = sentence_stats(output, refs)
        total = total + stats
        sentences.append(compute_bleu(stats, add_one=True))
    return CorpusScore(
        "BLEU",
        compute_bleu(total),
        sentences,
        {
            "correct": total.correct,
            "total": total.total,
            "sys_len": total.sys_len,
            "ref_len": total.ref_len,
            "sentence_smoothing": "add-1",
        },
    )
