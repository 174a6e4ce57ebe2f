"""Data loading, training, decoding and scoring workflows."""

from multiseq.pipeline.config import TrainConfig
from multiseq.pipeline.dataset import (
    TASKS,
    Dataset,
    DatasetSpec,
    Example,
    Vocabularies,
    build_vocabularies,
    load_dataset,
    prefetch,
    read_examples,
)
from multiseq.pipeline.evaluate import Report, comparison_table, evaluate_files, score_corpus
from multiseq.pipeline.images import ImageFeatureStore
from multiseq.pipeline.trainer import Trainer, TrainingResult, configure_model, train
from multiseq.pipeline.translate import (
    TranslateOptions,
    Translator,
    translate_files,
    translator_from_checkpoint,
)

__all__ = [
    "TASKS",
    "Dataset",
    "DatasetSpec",
    "Example",
    "ImageFeatureStore",
    "Report",
    "TrainConfig",
    "Trainer",
    "TrainingResult",
    "TranslateOptions",
    "Translator",
    "Vocabularies",
    "build_vocabularies",
    "comparison_table",
    "configure_model",
    "evaluate_files",
    "load_dataset",
    "prefetch",
    "read_examples",
    "score_corpus",
    "train",
    "translate_files",
    "translator_from_checkpoint",
]
