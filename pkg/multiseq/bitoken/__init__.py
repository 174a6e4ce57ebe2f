"""Bitokens from word-aligned text, Brown classes and class n-gram language models."""

from multiseq.bitoken.alignment import NULL, Alignment, extract_bitokens
from multiseq.bitoken.brown import (
    UNK_CLASS,
    Clustering,
    ClusteringResult,
    brown_cluster,
    class_objective,
    classify_corpus,
)
from multiseq.bitoken.lm import ArpaModel, WittenBellLM, train_class_lm
from multiseq.bitoken.schemes import (
    BitokenScheme,
    ClassCorpus,
    bitoken_corpus,
    build_class_corpus,
    class_pair_corpus,
    read_alignments,
)

__all__ = [
    "NULL",
    "UNK_CLASS",
    "Alignment",
    "ArpaModel",
    "BitokenScheme",
    "ClassCorpus",
    "Clustering",
    "ClusteringResult",
    "WittenBellLM",
    "bitoken_corpus",
    "brown_cluster",
    "build_class_corpus",
    "class_objective",
    "class_pair_corpus",
    "classify_corpus",
    "extract_bitokens",
    "read_alignments",
    "train_class_lm",
]
