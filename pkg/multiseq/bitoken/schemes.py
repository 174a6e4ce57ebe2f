"""Class corpora for the bitoken language models.

A scheme name says which tokens end up in the LM corpus:

* ``400bi``: word bitokens clustered into 400 classes.
* ``(200,400)``: source words clustered into 200 classes and target words into
  400 before bitokens are formed; the class bitokens are used as they are.
* ``100bi(200,400)``: the class bitokens of ``(200,400)`` clustered again into 100.
* ``400tgt``: target words clustered into 400 classes, no source side.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Optional

from multiseq.bitoken.alignment import Alignment, extract_bitokens
from multiseq.bitoken.brown import Clustering, brown_cluster, classify_corpus
from multiseq.errors import DatasetError, UsageError

logger = logging.getLogger(__name__)

Corpus = list[list[str]]

_SCHEME = re.compile(r"^(?:(\d+)(bi|tgt))?(?:\((\d+),(\d+)\))?$")


@dataclass(frozen=True)
class BitokenScheme:
    """Class counts of one scheme; ``None`` means the level is not clustered."""

    bitoken_classes: Optional[int] = None
    source_classes: Optional[int] = None
    target_classes: Optional[int] = None
    target_only: bool = False

    def __post_init__(self) -> None:
        if (self.source_classes is None) != (self.target_classes is None):
            msg = "source and target class counts must be given together"
            raise UsageError(msg)
        if self.target_only and (self.bitoken_classes is None or self.source_classes is not None):
            msg = "a target-only scheme takes exactly one class count"
            raise UsageError(msg)
        if self.bitoken_classes is None and self.source_classes is None:
            msg = "a scheme needs at least one class count"
            raise UsageError(msg)

    @classmethod
    def parse(cls, name: str) -> BitokenScheme:
        """Read ``400bi``, ``(200,400)``, ``100bi(200,400)`` or ``400tgt``."""
        match = _SCHEME.match(name.replace(" ", ""))
        if match is None or not any(match.groups()):
            msg = f"unknown bitoken scheme {name!r}"
            raise UsageError(msg)
        count, kind, source, target = match.groups()
        if kind == "tgt" and source is not None:
            msg = f"unknown bitoken scheme {name!r}"
            raise UsageError(msg)
        return cls(
            bitoken_classes=int(count) if count else None,
            source_classes=int(source) if source else None,
            target_classes=int(target) if target else None,
            target_only=kind == "tgt",
        )

    @property
    def name(self) -> str:
        if self.target_only:
            return f"{self.bitoken_classes}tgt"
        pair = f"({self.source_classes},{self.target_classes})" if self.source_classes else ""
        head = f"{self.bitoken_classes}bi" if self.bitoken_classes else ""
        return head + pair


@dataclass
class ClassCorpus:
    """The LM training corpus of a scheme and the clusterings that produced it."""

    scheme: BitokenScheme
    sentences: Corpus
    clusterings: dict[str, Clustering] = field(default_factory=dict)


def read_alignments(lines: Iterable[str]) -> list[Alignment]:
    return [Alignment.parse(line) for line in lines]


def bitoken_corpus(
    sources: Sequence[Sequence[str]],
    targets: Sequence[Sequence[str]],
    alignments: Sequence[Alignment],
) -> Corpus:
    """Bitoken sequence of every sentence pair."""
    if not len(sources) == len(targets) == len(alignments):
        msg = (
            f"{len(sources)} source lines, {len(targets)} target lines and "
            f"{len(alignments)} alignments"
        )
        raise DatasetError(msg)
    return [extract_bitokens(s, t, a) for s, t, a in zip(sources, targets, alignments)]


def class_pair_corpus(
    sources: Sequence[Sequence[str]],
    targets: Sequence[Sequence[str]],
    alignments: Sequence[Alignment],
    source_clustering: Clustering,
    target_clustering: Clustering,
) -> Corpus:
    """Bitokens over word classes: both sides are classified first, links are unchanged."""
    return bitoken_corpus(
        classify_corpus(sources, source_clustering),
        classify_corpus(targets, target_clustering),
        alignments,
    )


def build_class_corpus(
    scheme: BitokenScheme,
    sources: Sequence[Sequence[str]],
    targets: Sequence[Sequence[str]],
    alignments: Sequence[Alignment],
    max_iterations: int = 20,
    seed: Optional[int] = None,
) -> ClassCorpus:
    """Cluster and classify the parallel corpus the way ``scheme`` asks."""
    clusterings: dict[str, Clustering] = {}

    def cluster(name: str, corpus: Corpus, classes: int) -> Corpus:
        logger.info("clustering %s tokens into %d classes", name, classes)
        result = brown_cluster(corpus, classes, max_iterations=max_iterations, seed=seed)
        clusterings[name] = result.clustering
        return classify_corpus(corpus, result.clustering)

    if scheme.target_only:
        assert scheme.bitoken_classes is not None
        sentences = cluster("target", [list(t) for t in targets], scheme.bitoken_classes)
        return ClassCorpus(scheme, sentences, clusterings)

    if scheme.source_classes is not None and scheme.target_classes is not None:
        source_side = cluster("source", [list(s) for s in sources], scheme.source_classes)
        target_side = cluster("target", [list(t) for t in targets], scheme.target_classes)
        sentences = bitoken_corpus(source_side, target_side, alignments)
    else:
        sentences = bitoken_corpus(sources, targets, alignments)

    if scheme.bitoken_classes is not None:
        sentences = cluster("bitoken", sentences, scheme.bitoken_classes)
    return ClassCorpus(scheme, sentences, clusterings)
