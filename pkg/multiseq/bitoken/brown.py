"""Exchange-algorithm Brown clustering.

Tokens are assigned to ``K`` classes so that the mutual information between
the classes of adjacent tokens is maximal. Starting from a round-robin
assignment by frequency rank, every token is moved to the class that raises
the objective most, until a full pass makes no move or the iteration budget
runs out.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from multiseq.errors import DatasetError, UsageError
from multiseq.numerics.rng import make_rng

logger = logging.getLogger(__name__)

UNK_CLASS = "<unk>"
MIN_GAIN = 1e-9


def _xlogx(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def class_objective(bigrams: np.ndarray) -> float:
    """Average mutual information of a class bigram count matrix (natural log)."""
    total = float(bigrams.sum())
    if total == 0:
        return 0.0
    left = bigrams.sum(axis=1)
    right = bigrams.sum(axis=0)
    numerator = _xlogx(bigrams).sum() - _xlogx(left).sum() - _xlogx(right).sum()
    return float(numerator / total + np.log(total))


@dataclass
class Clustering:
    """Token to class map; class labels are the decimal class ids."""

    classes: dict[str, int]
    num_classes: int
    counts: dict[str, int] = field(default_factory=dict)

    def label(self, token: str) -> str:
        index = self.classes.get(token)
        return UNK_CLASS if index is None else str(index)

    def members(self, index: int) -> list[str]:
        return sorted(t for t, c in self.classes.items() if c == index)

    def save(self, path: Union[str, Path]) -> None:
        """Write ``class<TAB>token<TAB>count`` lines, grouped by class."""
        rows = sorted(
            self.classes.items(), key=lambda item: (item[1], -self.counts.get(item[0], 0), item[0])
        )
        text = "".join(f"{c}\t{t}\t{self.counts.get(t, 0)}\n" for t, c in rows)
        Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> Clustering:
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            msg = f"cannot read clustering {path}: {exc}"
            raise DatasetError(msg) from exc
        classes: dict[str, int] = {}
        counts: dict[str, int] = {}
        for number, line in enumerate(lines, 1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not (fields[0].isdigit() and fields[2].isdigit()):  # noqa: PLR2004
                msg = f"{path}:{number}: expected 'class<TAB>token<TAB>count'"
                raise DatasetError(msg)
            classes[fields[1]] = int(fields[0])
            counts[fields[1]] = int(fields[2])
        return cls(classes, max(classes.values(), default=-1) + 1, counts)


@dataclass
class ClusteringResult:
    clustering: Clustering
    objective: float
    trace: list[float]
    iterations: int
    moves: int


class _ExchangeState:
    def __init__(self, corpus: Sequence[Sequence[str]], num_classes: int) -> None:
        counts = Counter(t for sentence in corpus for t in sentence)
        self.types = sorted(counts, key=lambda t: (-counts[t], t))
        self.counts = counts
        index = {t: i for i, t in enumerate(self.types)}
        pair_counts: Counter[tuple[int, int]] = Counter()
        for sentence in corpus:
            for left, right in zip(sentence, sentence[1:]):
                pair_counts[index[left], index[right]] += 1

        size = len(self.types)
        successors: list[dict[int, int]] = [{} for _ in range(size)]
        predecessors: list[dict[int, int]] = [{} for _ in range(size)]
        for (u, v), c in pair_counts.items():
            successors[u][v] = c
            predecessors[v][u] = c
        self.successors = [
            (np.array(list(d), dtype=np.int64), np.array(list(d.values()), dtype=np.float64))
            for d in successors
        ]
        self.predecessors = [
            (np.array(list(d), dtype=np.int64), np.array(list(d.values()), dtype=np.float64))
            for d in predecessors
        ]
        self.self_loops = np.array([successors[w].get(w, 0) for w in range(size)], dtype=np.float64)
        self.left_counts = np.array([sum(d.values()) for d in successors], dtype=np.float64)
        self.right_counts = np.array([sum(d.values()) for d in predecessors], dtype=np.float64)
        self.total = float(sum(pair_counts.values()))

        self.num_classes = num_classes
        self.assignment = np.arange(size, dtype=np.int64) % num_classes
        self.sizes = np.bincount(self.assignment, minlength=num_classes)
        self.bigrams = np.zeros((num_classes, num_classes), dtype=np.float64)
        for (u, v), c in pair_counts.items():
            self.bigrams[self.assignment[u], self.assignment[v]] += c

    def objective(self) -> float:
        return class_objective(self.bigrams)

    def _neighbour_classes(self, word: int) -> tuple[np.ndarray, np.ndarray]:
        k = self.num_classes
        succ_ids, succ_counts = self.successors[word]
        pred_ids, pred_counts = self.predecessors[word]
        keep_s = succ_ids != word
        keep_p = pred_ids != word
        out = np.bincount(self.assignment[succ_ids[keep_s]], succ_counts[keep_s], minlength=k)
        into = np.bincount(self.assignment[pred_ids[keep_p]], pred_counts[keep_p], minlength=k)
        return out, into

    def _shift(self, word: int, cls: int, out: np.ndarray, into: np.ndarray, sign: float) -> None:
        self.bigrams[cls, :] += sign * out
        self.bigrams[:, cls] += sign * into
        self.bigrams[cls, cls] += sign * self.self_loops[word]

    def move_gains(self, word: int) -> np.ndarray:
        """Objective change of moving ``word`` into each class; zero for its own class."""
        current = int(self.assignment[word])
        lw = self.left_counts[word]
        rw = self.right_counts[word]
        # Margins are sums over class members, so only the receiving class changes.
        left = self.bigrams.sum(axis=1)
        right = self.bigrams.sum(axis=0)
        left[current] -= lw
        right[current] -= rw

        out, into = self._neighbour_classes(word)
        self._shift(word, current, out, into, -1.0)
        m = self.bigrams
        loop = self.self_loops[word]

        # f-sum change of each candidate row b and column b, then fix the diagonal.
        out_cols = np.nonzero(out)[0]
        in_rows = np.nonzero(into)[0]
        rows = (_xlogx(m[:, out_cols] + out[out_cols]) - _xlogx(m[:, out_cols])).sum(axis=1)
        cols = (_xlogx(m[in_rows, :] + into[in_rows, None]) - _xlogx(m[in_rows, :])).sum(axis=0)
        diag = np.diag(m).copy()
        counted = _xlogx(diag + out) + _xlogx(diag + into) - 2 * _xlogx(diag)
        exact = _xlogx(diag + out + into + loop) - _xlogx(diag)
        margins = (_xlogx(left + lw) - _xlogx(left)) + (_xlogx(right + rw) - _xlogx(right))
        score = rows + cols + (exact - counted) - margins

        self._shift(word, current, out, into, 1.0)
        return (score - score[current]) / self.total

    def best_move(self, word: int) -> tuple[int, float]:
        """Best class for ``word`` and the objective gain of moving it there."""
        gains = self.move_gains(word)
        best = int(np.argmax(gains))
        return best, float(gains[best])

    def move(self, word: int, target: int) -> None:
        current = int(self.assignment[word])
        out, into = self._neighbour_classes(word)
        self._shift(word, current, out, into, -1.0)
        self.assignment[word] = target
        self._shift(word, target, out, into, 1.0)
        self.sizes[current] -= 1
        self.sizes[target] += 1


def brown_cluster(
    corpus: Iterable[Sequence[str]],
    num_classes: int,
    max_iterations: int = 20,
    seed: Optional[int] = None,
) -> ClusteringResult:
    """Cluster the token types of ``corpus`` into ``num_classes`` classes.

    Tokens start in class ``rank % num_classes`` by descending frequency (ties
    by string). Passes visit tokens in frequency order, or in a seeded shuffle
    of it when ``seed`` is given. A move is taken only if it raises the objective
    and leaves no class empty.
    """
    sentences = [list(s) for s in corpus]
    distinct = len({t for s in sentences for t in s})
    if distinct == 0:
        msg = "cannot cluster an empty corpus"
        raise UsageError(msg)
    if num_classes < 2:  # noqa: PLR2004
        msg = f"need at least 2 classes, got {num_classes}"
        raise UsageError(msg)
    if num_classes > distinct:
        msg = f"{num_classes} classes requested but the corpus has only {distinct} token types"
        raise UsageError(msg)

    state = _ExchangeState(sentences, num_classes)
    objective = state.objective()
    trace = [objective]
    order = np.arange(len(state.types))
    rng = make_rng(seed) if seed is not None else None
    iterations = moves = 0
    while iterations < max_iterations and state.total > 0:
        iterations += 1
        moved = 0
        visit = rng.permutation(order) if rng is not None else order
        for word in visit:
            word = int(word)
            if state.sizes[state.assignment[word]] <= 1:
                continue
            target, gain = state.best_move(word)
            if gain > MIN_GAIN and target != state.assignment[word]:
                state.move(word, target)
                objective = state.objective()
                trace.append(objective)
                moved += 1
        moves += moved
        logger.info("exchange pass %d: %d moves, objective %.6f", iterations, moved, objective)
        if moved == 0:
            break

    classes = {t: int(state.assignment[i]) for i, t in enumerate(state.types)}
    clustering = Clustering(classes, num_classes, dict(state.counts))
    return ClusteringResult(clustering, state.objective(), trace, iterations, moves)


def classify_corpus(corpus: Iterable[Sequence[str]], clustering: Clustering) -> list[list[str]]:
    """Replace every token by its class label; unknown tokens get ``<unk>``."""
    return [[clustering.label(t) for t in sentence] for sentence in corpus]
