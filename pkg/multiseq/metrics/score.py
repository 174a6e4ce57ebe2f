"""Result record shared by the scorers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class CorpusScore:
    """A corpus-level score with its per-sentence values and sufficient statistics.

    ``value`` is a rate in ``[0, 1]`` for BLEU and ``>= 0`` for TER/HTER; use
    :meth:`display` for the x100 form reports print.
    """

    metric: str
    value: float
    sentences: list[float] = field(default_factory=list)
    support: dict[str, Any] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.sentences)

    def display(self, digits: int = 2) -> str:
        return f"{100.0 * self.value:.{digits}f}"

    def format(self) -> str:
        return f"{self.metric} = {self.display()} ({self.count} sentences)"

    def __str__(self) -> str:
        return self.format()
