"""Witten-Bell n-gram language models and the ARPA text format."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from multiseq.errors import DatasetError, UsageError

logger = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
NO_PROB = -99.0
ARPA_DECIMALS = 10

Ngram = tuple[str, ...]


class CountsForHistory:
    """Counts of the words seen after one history."""

    def __init__(self) -> None:
        self.word_to_count: dict[str, int] = defaultdict(int)
        self.total_count = 0

    def add_count(self, word: str, count: int = 1) -> None:
        self.word_to_count[word] += count
        self.total_count += count

    @property
    def distinct(self) -> int:
        return len(self.word_to_count)


class WittenBellLM:
    """Interpolated Witten-Bell model over sentences wrapped in ``<s> ... </s>``.

    ``P(w | h) = (c(h, w) + T(h) * P(w | h')) / (c(h) + T(h))`` where ``T(h)``
    is the number of distinct words seen after ``h`` and ``h'`` drops the
    oldest word of ``h``. The empty history interpolates with the uniform
    distribution over the vocabulary (every predicted type, ``</s>`` included).
    """

    def __init__(self, order: int) -> None:
        if order < 1:
            msg = f"n-gram order must be >= 1, got {order}"
            raise UsageError(msg)
        self.order = order
        self.counts: list[dict[Ngram, CountsForHistory]] = [
            defaultdict(CountsForHistory) for _ in range(order)
        ]
        self.vocab: set[str] = set()

    def add_sentence(self, tokens: Sequence[str]) -> None:
        padded = [BOS, *tokens, EOS]
        for position in range(1, len(padded)):
            word = padded[position]
            self.vocab.add(word)
            for hist_len in range(min(self.order - 1, position) + 1):
                history = tuple(padded[position - hist_len : position])
                self.counts[hist_len][history].add_count(word)

    @classmethod
    def train(cls, corpus: Iterable[Sequence[str]], order: int = 3) -> WittenBellLM:
        model = cls(order)
        sentences = 0
        for sentence in corpus:
            model.add_sentence(sentence)
            sentences += 1
        if sentences == 0:
            msg = "cannot train a language model on an empty corpus"
            raise UsageError(msg)
        logger.info(
            "trained order-%d Witten-Bell model on %d sentences, %d types",
            order,
            sentences,
            len(model.vocab),
        )
        return model

    def prob(self, word: str, history: Sequence[str] = ()) -> float:
        """Interpolated probability of ``word`` after ``history`` (0 for unknown words)."""
        if word not in self.vocab:
            return 0.0
        history = tuple(history)[-(self.order - 1) :] if self.order > 1 else ()
        return self._prob(word, history)

    def _prob(self, word: str, history: Ngram) -> float:
        if history:
            lower = self._prob(word, history[1:])
        else:
            lower = 1.0 / len(self.vocab)
        stats = self.counts[len(history)].get(history)
        if stats is None or stats.total_count == 0:
            return lower
        seen = stats.word_to_count.get(word, 0)
        return (seen + stats.distinct * lower) / (stats.total_count + stats.distinct)

    def backoff_weight(self, history: Ngram) -> float:
        """Mass left to unseen words, ``(1 - sum_seen P(w|h)) / (1 - sum_seen P(w|h'))``.

        With interpolation this ratio reduces to ``T(h) / (c(h) + T(h))``.
        """
        stats = self.counts[len(history)].get(history)
        if stats is None or stats.total_count == 0:
            return 1.0
        return stats.distinct / (stats.total_count + stats.distinct)

    def to_arpa(self) -> ArpaModel:
        """Backoff form of the model; probabilities are identical to :meth:`prob`."""
        model = ArpaModel(self.order)
        for hist_len in range(self.order):
            for history, stats in self.counts[hist_len].items():
                for word in stats.word_to_count:
                    model.log_probs[(*history, word)] = math.log10(self._prob(word, history))
        histories = {h for level in self.counts[1:] for h in level}
        for history in histories:
            if history == (BOS,):
                model.log_probs.setdefault(history, NO_PROB)
            if history in model.log_probs:
                model.backoffs[history] = math.log10(self.backoff_weight(history))
        return model


@dataclass
class ArpaModel:
    """An n-gram model in backoff form, as stored in an ARPA file."""

    order: int
    log_probs: dict[Ngram, float] = field(default_factory=dict)
    backoffs: dict[Ngram, float] = field(default_factory=dict)

    @property
    def vocab(self) -> set[str]:
        return {ngram[0] for ngram in self.log_probs if len(ngram) == 1}

    def log10_prob(self, word: str, history: Sequence[str] = ()) -> float:
        """log10 P(word | history) with standard backoff; ``-inf`` for unknown words."""
        context = tuple(history)[-(self.order - 1) :] if self.order > 1 else ()
        penalty = 0.0
        while True:
            value = self.log_probs.get((*context, word))
            if value is not None:
                return penalty + value
            if not context:
                return float("-inf")
            penalty += self.backoffs.get(context, 0.0)
            context = context[1:]

    def sentence_log10(self, tokens: Sequence[str]) -> tuple[float, int, int]:
        """Total log10 probability of ``tokens`` plus ``</s>``, scored words and OOV count."""
        history: list[str] = [BOS]
        total = 0.0
        scored = oov = 0
        for word in [*tokens, EOS]:
            value = self.log10_prob(word, history)
            if math.isinf(value):
                oov += 1
                history = []
                continue
            total += value
            scored += 1
            history.append(word)
        return total, scored, oov

    def perplexity(self, corpus: Iterable[Sequence[str]]) -> float:
        total = 0.0
        scored = 0
        for sentence in corpus:
            value, count, _ = self.sentence_log10(sentence)
            total += value
            scored += count
        if scored == 0:
            msg = "perplexity needs at least one in-vocabulary token"
            raise UsageError(msg)
        return 10.0 ** (-total / scored)

    def to_text(self) -> str:
        by_order: list[list[Ngram]] = [[] for _ in range(self.order)]
        for ngram in self.log_probs:
            by_order[len(ngram) - 1].append(ngram)
        lines = ["\\data\\"]
        lines += [f"ngram {n + 1}={len(grams)}" for n, grams in enumerate(by_order)]
        for n, grams in enumerate(by_order):
            lines += ["", f"\\{n + 1}-grams:"]
            for ngram in sorted(grams):
                line = f"{self.log_probs[ngram]:.{ARPA_DECIMALS}f}\t{' '.join(ngram)}"
                if ngram in self.backoffs:
                    line += f"\t{self.backoffs[ngram]:.{ARPA_DECIMALS}f}"
                lines.append(line)
        lines += ["", "\\end\\", ""]
        return "\n".join(lines)

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, source: str = "<arpa>") -> ArpaModel:
        counts: dict[int, int] = {}
        model = cls(0)
        section = 0
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line == "\\data\\":
                continue
            if line == "\\end\\":
                break
            if line.startswith("ngram ") and section == 0:
                n, _, value = line[6:].partition("=")
                counts[int(n)] = int(value)
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                section = int(line[1:].split("-", 1)[0])
                continue
            fields = line.split("\t") if "\t" in line else line.split()
            if section == 0 or len(fields) < 2:  # noqa: PLR2004
                msg = f"{source}:{number}: unexpected line {raw!r}"
                raise DatasetError(msg)
            if "\t" in line:
                words = tuple(fields[1].split())
                extra = fields[2:]
            else:
                words = tuple(fields[1 : 1 + section])
                extra = fields[1 + section :]
            if len(words) != section:
                msg = f"{source}:{number}: expected a {section}-gram"
                raise DatasetError(msg)
            model.log_probs[words] = float(fields[0])
            if extra:
                model.backoffs[words] = float(extra[0])
        model.order = max(counts, default=0)
        for n, expected in counts.items():
            found = sum(1 for g in model.log_probs if len(g) == n)
            if found != expected:
                msg = f"{source}: header announces {expected} {n}-grams, found {found}"
                raise DatasetError(msg)
        return model

    @classmethod
    def read(cls, path: Union[str, Path]) -> ArpaModel:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            msg = f"cannot read ARPA file {path}: {exc}"
            raise DatasetError(msg) from exc
        return cls.from_text(text, str(path))


def train_class_lm(corpus: Iterable[Sequence[str]], order: int = 3) -> ArpaModel:
    """Witten-Bell LM over a (class-label) corpus, in ARPA backoff form."""
    return WittenBellLM.train(corpus, order).to_arpa()
