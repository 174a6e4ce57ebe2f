"""Score reports over hypothesis files, per-sentence tables and system comparisons."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from multiseq.errors import UsageError
from multiseq.metrics.bleu import bleu
from multiseq.metrics.score import CorpusScore
from multiseq.metrics.ter import corpus_ter, hter_corpus
from multiseq.pipeline.dataset import read_lines

logger = logging.getLogger(__name__)

METRICS = ("bleu", "ter", "hter")

Tokens = list[str]


def read_corpus(path: Union[str, Path]) -> list[Tokens]:
    return [line.split() for line in read_lines(str(path))]


def score_corpus(
    hypotheses: Sequence[Tokens],
    reference_sets: Sequence[Sequence[Tokens]],
    metrics: Sequence[str] = ("bleu",),
    macro: bool = False,
) -> list[CorpusScore]:
    """Corpus scores in the order of ``metrics``.

    ``hter`` scores against the first reference of each set (the post-edit);
    ``ter`` takes the best of all references.
    """
    scores = []
    for metric in metrics:
        if metric == "bleu":
            scores.append(bleu(hypotheses, reference_sets))
        elif metric == "ter":
            scores.append(corpus_ter(hypotheses, reference_sets, macro=macro))
        elif metric == "hter":
            if any(not refs for refs in reference_sets):
                msg = "HTER needs a post-edit for every hypothesis"
                raise UsageError(msg)
            scores.append(hter_corpus(hypotheses, [refs[0] for refs in reference_sets], macro))
        else:
            msg = f"unknown metric {metric!r}; expected one of {', '.join(METRICS)}"
            raise UsageError(msg)
    return scores


@dataclass
class Report:
    """Scores of one system."""

    system: str
    scores: list[CorpusScore] = field(default_factory=list)

    def format(self) -> str:
        return "\n".join(f"{self.system}\t{score}" for score in self.scores)

    def sentence_table(self) -> str:
        """TSV with one row per sentence and one x100 column per metric."""
        header = "sentence\t" + "\t".join(s.metric for s in self.scores)
        count = max((s.count for s in self.scores), default=0)
        rows = [
            f"{index + 1}\t" + "\t".join(f"{100 * s.sentences[index]:.2f}" for s in self.scores)
            for index in range(count)
        ]
        return "\n".join([header, *rows]) + "\n"


def evaluate_files(
    hypothesis_path: Union[str, Path],
    reference_paths: Sequence[Union[str, Path]],
    metrics: Sequence[str] = ("bleu",),
    macro: bool = False,
    system: Optional[str] = None,
) -> Report:
    """Score one hypothesis file against one or more aligned reference files.

    Raises:
        UsageError: No reference file, or a reference file whose line count
            differs from the hypothesis file.
    """
    if not reference_paths:
        msg = "at least one reference file is needed"
        raise UsageError(msg)
    hypotheses = read_corpus(hypothesis_path)
    references = [read_corpus(path) for path in reference_paths]
    for path, corpus in zip(reference_paths, references):
        if len(corpus) != len(hypotheses):
            msg = (
                f"{hypothesis_path} has {len(hypotheses)} lines but reference {path} "
                f"has {len(corpus)}"
            )
            raise UsageError(msg)
    reference_sets = [list(refs) for refs in zip(*references)]
    scores = score_corpus(hypotheses, reference_sets, metrics, macro)
    logger.info("scored %s: %s", hypothesis_path, "; ".join(str(s) for s in scores))
    return Report(system or Path(hypothesis_path).name, scores)


def comparison_table(reports: Sequence[Report]) -> str:
    """Systems as rows and metrics as columns, values x100 with two decimals."""
    if not reports:
        msg = "nothing to compare"
        raise UsageError(msg)
    metrics = [s.metric for s in reports[0].scores]
    for report in reports[1:]:
        if [s.metric for s in report.scores] != metrics:
            msg = f"{report.system} was scored with different metrics"
            raise UsageError(msg)
    name_width = max(len("system"), *(len(r.system) for r in reports))
    widths = [max(len(m), 6) for m in metrics]
    lines = [
        "  ".join(["system".ljust(name_width), *(m.rjust(w) for m, w in zip(metrics, widths))])
    ]
    lines += [
        "  ".join(
            [
                report.system.ljust(name_width),
                *(s.display().rjust(w) for s, w in zip(report.scores, widths)),
            ]
        )
        for report in reports
    ]
    return "\n".join(lines) + "\n"
