"""Greedy and beam-search generation.

Both routines drive any object implementing :class:`StepModel`; a trained model
provides one through :meth:`multiseq.seqmodel.Seq2SeqModel.bind`. Scores are raw
sums of natural-log token probabilities accumulated in float64, with no length
normalization. Score ties are broken towards the lexicographically smallest
token-id sequence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from multiseq.errors import UsageError

logger = logging.getLogger(__name__)


class StepModel(Protocol):
    vocab_size: int
    eos_id: int
    bos_id: int

    def initial_state(self) -> np.ndarray:
        """Decoder state of shape ``(1, H)``."""
        ...

    def step(self, states: np.ndarray, previous: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance ``B`` hypotheses; returns states ``(B, H)`` and log-probabilities ``(B, V)``."""
        ...


@dataclass(eq=False)
class Hypothesis:
    tokens: tuple[int, ...]
    score: float
    state: np.ndarray
    finished: bool = False

    @property
    def output(self) -> list[int]:
        """Tokens with the terminating EOS removed."""
        return list(self.tokens[:-1] if self.finished else self.tokens)

    def sort_key(self) -> tuple[float, tuple[int, ...]]:
        return (-self.score, self.tokens)

    def rank(self) -> tuple[bool, float]:
        """Order of decode results: any finished hypothesis outranks an unfinished one."""
        return (self.finished, self.score)


@dataclass
class BeamResult:
    best: Hypothesis
    finished: list[Hypothesis] = field(default_factory=list)
    active: list[Hypothesis] = field(default_factory=list)

    def nbest(self, n: int) -> list[Hypothesis]:
        """Up to ``n`` finished hypotheses, best first, padded with unfinished ones."""
        ranked = sorted(self.finished, key=Hypothesis.sort_key)
        ranked += sorted(self.active, key=Hypothesis.sort_key)
        return ranked[:n]


def _check_max_len(max_len: int) -> None:
    if max_len < 1:
        msg = f"max_len must be >= 1, got {max_len}"
        raise UsageError(msg)


def greedy_search(model: StepModel, max_len: int) -> Hypothesis:
    _check_max_len(max_len)
    state = model.initial_state()
    previous = np.array([model.bos_id], dtype=np.int64)
    tokens: list[int] = []
    score = 0.0
    for _ in range(max_len):
        state, log_probs = model.step(state, previous)
        token = int(np.argmax(log_probs[0]))
        score += float(log_probs[0, token])
        tokens.append(token)
        if token == model.eos_id:
            return Hypothesis(tuple(tokens), score, state[0], finished=True)
        previous = np.array([token], dtype=np.int64)
    return Hypothesis(tuple(tokens), score, state[0])


def greedy_decode(model: StepModel, max_len: int) -> list[int]:
    """Emit the argmax token until EOS or ``max_len`` steps (EOS counts as a step)."""
    return greedy_search(model, max_len).output


def _top_candidates(totals: np.ndarray, width: int) -> np.ndarray:
    """Flat indices of every candidate scoring at least the ``width``-th best total."""
    flat = totals.ravel()
    if flat.size <= width:
        return np.arange(flat.size)
    threshold = np.partition(flat, flat.size - width)[flat.size - width]
    return np.nonzero(flat >= threshold)[0]


def beam_search(model: StepModel, width: int = 10, max_len: int = 100) -> BeamResult:
    """Beam search keeping ``width`` candidates per step.

    Hypotheses ending in EOS leave the beam and are kept. The search stops when
    the best finished score beats every active score, when the beam empties, or
    after ``max_len`` steps. The best finished hypothesis wins; without one, the
    best unfinished hypothesis is returned (see :meth:`Hypothesis.rank`).
    """
    if width < 1:
        msg = f"beam width must be >= 1, got {width}"
        raise UsageError(msg)
    _check_max_len(max_len)

    active = [Hypothesis((), 0.0, model.initial_state()[0])]
    finished: list[Hypothesis] = []
    for step in range(max_len):
        states = np.stack([h.state for h in active])
        previous = np.array(
            [h.tokens[-1] if h.tokens else model.bos_id for h in active], dtype=np.int64
        )
        new_states, log_probs = model.step(states, previous)
        totals = np.array([h.score for h in active], dtype=np.float64)[:, None] + log_probs
        vocab = totals.shape[1]

        candidates = []
        for flat_index in _top_candidates(totals, width):
            row, token = divmod(int(flat_index), vocab)
            candidates.append((float(totals[row, token]), active[row].tokens + (token,), row))
        candidates.sort(key=lambda c: (-c[0], c[1]))

        active = []
        for score, tokens, row in candidates[:width]:
            done = tokens[-1] == model.eos_id
            hypothesis = Hypothesis(tokens, score, new_states[row], finished=done)
            (finished if done else active).append(hypothesis)

        if not active:
            break
        if finished and max(f.score for f in finished) > max(a.score for a in active):
            logger.debug("beam converged after %d steps", step + 1)
            break

    pool = finished or active
    best = min(pool, key=Hypothesis.sort_key)
    return BeamResult(best, finished, active)


def beam_decode(model: StepModel, width: int = 10, max_len: int = 100) -> list[int]:
    return beam_search(model, width, max_len).best.output
