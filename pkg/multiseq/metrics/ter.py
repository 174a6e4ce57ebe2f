"""Translation error rate with greedy block shifts, and HTER over a corpus."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Optional

from multiseq.errors import UsageError
from multiseq.metrics.score import CorpusScore

logger = logging.getLogger(__name__)

Tokens = Sequence[str]

# Longest reference, and hypothesis, whose shifts are searched exhaustively.
EXACT_SHIFT_LENGTH = 6
EXACT_SHIFT_HYP_LENGTH = 10


def edit_distance(hyp: Tokens, ref: Tokens) -> int:
    """Word-level Levenshtein distance (insert, delete, substitute all cost 1)."""
    previous = list(range(len(ref) + 1))
    for i in range(1, len(hyp) + 1):
        current = [i] + [0] * len(ref)
        for j in range(1, len(ref) + 1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (hyp[i - 1] != ref[j - 1]),
            )
        previous = current
    return previous[-1]


def _matched_words(hyp: Tokens, ref: Tokens) -> list[bool]:
    """Hypothesis positions matched exactly along one minimal alignment."""
    rows, cols = len(hyp), len(ref)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(rows + 1):
        table[i][0] = i
    for j in range(cols + 1):
        table[0][j] = j
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]),
            )
    matched = [False] * rows
    i, j = rows, cols
    while i > 0 and j > 0:
        same = hyp[i - 1] == ref[j - 1]
        if table[i][j] == table[i - 1][j - 1] + (not same):
            matched[i - 1] = same
            i, j = i - 1, j - 1
        elif table[i][j] == table[i - 1][j] + 1:
            i -= 1
        else:
            j -= 1
    return matched


def _occurrences(block: Tokens, ref: Tokens) -> list[int]:
    width = len(block)
    return [j for j in range(len(ref) - width + 1) if list(ref[j : j + width]) == list(block)]


def _best_shift(
    hyp: list[str],
    ref: Tokens,
    current: int,
    max_block_size: Optional[int],
    max_shift_distance: Optional[int],
) -> Optional[tuple[int, list[str]]]:
    matched = _matched_words(hyp, ref)
    best: Optional[tuple[int, list[str]]] = None
    longest = len(hyp) if max_block_size is None else min(max_block_size, len(hyp))
    for start in range(len(hyp)):
        for width in range(1, min(longest, len(hyp) - start) + 1):
            if all(matched[start : start + width]):
                continue
            block = hyp[start : start + width]
            anchors = _occurrences(block, ref)
            if not anchors:
                continue
            rest = hyp[:start] + hyp[start + width :]
            destinations = set()
            for j in anchors:
                for p in range(len(rest) + 1):
                    left_ok = j > 0 and p > 0 and rest[p - 1] == ref[j - 1]
                    right_ok = j + width < len(ref) and p < len(rest) and rest[p] == ref[j + width]
                    edge_ok = (j == 0 and p == 0) or (j + width == len(ref) and p == len(rest))
                    if left_ok or right_ok or edge_ok:
                        destinations.add(p)
            for p in sorted(destinations):
                if p == start:
                    continue
                if max_shift_distance is not None and abs(p - start) > max_shift_distance:
                    continue
                candidate = rest[:p] + block + rest[p:]
                distance = edit_distance(candidate, ref)
                if current - distance > 1 and (best is None or distance < best[0]):
                    best = (distance, candidate)
    return best


def _block_moves(
    words: tuple[str, ...], max_block_size: Optional[int], max_shift_distance: Optional[int]
) -> Iterator[tuple[str, ...]]:
    """Every sequence one block move away from ``words``."""
    longest = len(words) if max_block_size is None else min(max_block_size, len(words))
    for start in range(len(words)):
        for width in range(1, min(longest, len(words) - start) + 1):
            block = words[start : start + width]
            rest = words[:start] + words[start + width :]
            for p in range(len(rest) + 1):
                if p == start:
                    continue
                if max_shift_distance is not None and abs(p - start) > max_shift_distance:
                    continue
                yield rest[:p] + block + rest[p:]


def _exhaustive_shifts(
    hyp: Tokens,
    ref: Tokens,
    bound: tuple[int, int],
    max_block_size: Optional[int],
    max_shift_distance: Optional[int],
) -> tuple[int, int]:
    """Lowest ``(distance, shifts)`` over all block-move sequences, searched breadth first.

    ``bound`` is a known solution. Shifts keep the bag of words, so the edit
    distance never drops below the bag difference; that floor stops the search.
    """
    floor = max(len(hyp), len(ref)) - sum((Counter(hyp) & Counter(ref)).values())
    best = bound
    frontier = {tuple(hyp)}
    seen = set(frontier)
    depth = 0
    while frontier and depth + 1 + floor < sum(best):
        depth += 1
        reached = set()
        for state in frontier:
            for moved in _block_moves(state, max_block_size, max_shift_distance):
                if moved in seen:
                    continue
                seen.add(moved)
                reached.add(moved)
                distance = edit_distance(moved, ref)
                if distance + depth < sum(best):
                    best = (distance, depth)
        frontier = reached
    return best


@dataclass(frozen=True)
class TerStats:
    edits: int
    ref_length: int
    shifts: int

    @property
    def rate(self) -> float:
        return self.edits / self.ref_length


def ter_stats(
    hyp: Tokens,
    ref: Tokens,
    max_block_size: Optional[int] = None,
    max_shift_distance: Optional[int] = None,
) -> TerStats:
    """Edits of ``hyp`` against one reference.

    Shifts are applied greedily: each round takes the block move with the
    largest edit-distance reduction, as long as the reduction exceeds the cost
    of the shift itself. A shifted block must contain a word the current
    alignment does not match and must occur in the reference.

    References of at most ``EXACT_SHIFT_LENGTH`` words (with hypotheses of at
    most ``EXACT_SHIFT_HYP_LENGTH``) are then searched over all block moves, so
    short sentences get the minimal edit count.
    """
    if not ref:
        msg = "TER needs a non-empty reference"
        raise UsageError(msg)
    words = list(hyp)
    distance = edit_distance(words, ref)
    shifts = 0
    while distance > 0:
        move = _best_shift(words, ref, distance, max_block_size, max_shift_distance)
        if move is None:
            break
        distance, words = move
        shifts += 1
    exact = len(ref) <= EXACT_SHIFT_LENGTH and len(words) <= EXACT_SHIFT_HYP_LENGTH
    if exact:
        distance, shifts = _exhaustive_shifts(
            hyp, ref, (distance, shifts), max_block_size, max_shift_distance
        )
    return TerStats(distance + shifts, len(ref), shifts)


def ter(
    hyp: Tokens,
    references: Sequence[Tokens],
    max_block_size: Optional[int] = None,
    max_shift_distance: Optional[int] = None,
) -> float:
    """Lowest TER of ``hyp`` over ``references``."""
    return best_ter_stats(hyp, references, max_block_size, max_shift_distance).rate


def best_ter_stats(
    hyp: Tokens,
    references: Sequence[Tokens],
    max_block_size: Optional[int] = None,
    max_shift_distance: Optional[int] = None,
) -> TerStats:
    if not references:
        msg = "TER needs at least one reference"
        raise UsageError(msg)
    candidates = [ter_stats(hyp, ref, max_block_size, max_shift_distance) for ref in references]
    return min(candidates, key=lambda s: s.rate)


def corpus_ter(
    hypotheses: Sequence[Tokens],
    reference_sets: Sequence[Sequence[Tokens]],
    macro: bool = False,
    metric: str = "TER",
) -> CorpusScore:
    """Corpus TER: total edits over total reference length, or the sentence mean with ``macro``."""
    if len(hypotheses) != len(reference_sets):
        msg = f"{len(hypotheses)} hypotheses but {len(reference_sets)} reference sets"
        raise UsageError(msg)
    if not hypotheses:
        msg = "cannot score an empty corpus"
        raise UsageError(msg)
    stats = [best_ter_stats(h, refs) for h, refs in zip(hypotheses, reference_sets)]
    edits = sum(s.edits for s in stats)
    length = sum(s.ref_length for s in stats)
    sentences = [s.rate for s in stats]
    value = sum(sentences) / len(sentences) if macro else edits / length
    logger.debug("%s over %d sentences: %d edits / %d words", metric, len(stats), edits, length)
    return CorpusScore(
        metric,
        value,
        sentences,
        {
            "edits": edits,
            "ref_length": length,
            "shifts": sum(s.shifts for s in stats),
            "average": "macro" if macro else "micro",
        },
    )


def hter_corpus(
    hypotheses: Sequence[Tokens], post_edits: Sequence[Tokens], macro: bool = False
) -> CorpusScore:
    """HTER: TER of each hypothesis against its human post-edit, micro-averaged by default."""
    if len(hypotheses) != len(post_edits):
        msg = f"{len(hypotheses)} hypotheses but {len(post_edits)} post-edits"
        raise UsageError(msg)
    return corpus_ter(hypotheses, [[pe] for pe in post_edits], macro=macro, metric="HTER")
