"""BLEU and TER/HTER scorers."""

from multiseq.metrics.bleu import (
    NGRAM_ORDER,
    BleuStats,
    bleu,
    compute_bleu,
    extract_ngrams,
    sentence_bleu,
    sentence_stats,
)
from multiseq.metrics.score import CorpusScore
from multiseq.metrics.ter import (
    TerStats,
    corpus_ter,
    edit_distance,
    hter_corpus,
    ter,
    ter_stats,
)

__all__ = [
    "NGRAM_ORDER",
    "BleuStats",
    "CorpusScore",
    "TerStats",
    "bleu",
    "compute_bleu",
    "corpus_ter",
    "edit_distance",
    "extract_ngrams",
    "hter_corpus",
    "sentence_bleu",
    "sentence_stats",
    "ter",
    "ter_stats",
]
