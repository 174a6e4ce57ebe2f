"""Training loop with periodic validation, best-checkpoint selection and early stopping.

Every ``validation_interval`` updates the model greedily decodes the
validation inputs; the checkpoint with the highest corpus BLEU so far is kept
as ``best.ckpt``. Training stops after ``max_epochs``, after ``max_steps`` or
when ``patience`` validations in a row bring no improvement.

The JSON-lines training log holds one header record and one record per
validation. It contains no timestamps, so seeded runs write identical logs.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Any, Optional

from multiseq.errors import ConfigurationError
from multiseq.metrics.bleu import bleu
from multiseq.metrics.score import CorpusScore
from multiseq.numerics.optim import AdamState
from multiseq.pipeline.config import TrainConfig
from multiseq.pipeline.dataset import (
    DEFAULT_VOCAB_SIZE,
    Dataset,
    DatasetSpec,
    load_dataset,
    model_targets,
    prefetch,
)
from multiseq.pipeline.translate import TranslateOptions, Translator
from multiseq.seqmodel.batch import Batch
from multiseq.seqmodel.checkpoint import load_checkpoint, save_checkpoint
from multiseq.seqmodel.config import ModelConfig
from multiseq.seqmodel.model import Seq2SeqModel
from multiseq.seqmodel.params import ModelParams

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.ckpt"
LAST_CHECKPOINT = "last.ckpt"
TRAINING_LOG = "train.jsonl"
LOG_SAMPLES = 3

# Fields of ModelConfig that follow from the data rather than from the user.
DATA_FIELDS = frozenset(
    {"encoder_count", "source_vocab_sizes", "target_vocab_size", "tied_encoders", "use_image"}
)


def configure_model(dataset: Dataset, options: Optional[Mapping[str, Any]] = None) -> ModelConfig:
    """Model configuration for ``dataset`` with the hyperparameters in ``options``.

    Caption datasets (``clc``) always get one encoder shared by all captions.
    """
    options = dict(options or {})
    known = {f.name for f in fields(ModelConfig)} - DATA_FIELDS
    unknown = sorted(set(options) - known)
    if unknown:
        msg = f"unknown model options: {', '.join(unknown)}"
        raise ConfigurationError(msg)
    spec = dataset.spec
    if dataset.images is not None:
        options["image_dim"] = dataset.images.dim
    if spec.task == "clc":
        options["share_encoder_weights"] = True
    return ModelConfig(
        encoder_count=len(spec.sources),
        source_vocab_sizes=dataset.vocabularies.source_sizes,
        target_vocab_size=len(dataset.vocabularies.target),
        tied_encoders=tuple(spec.tied_sources or ()),
        use_image=spec.uses_images,
        **options,
    )


def _progress(batches: Iterable[Batch], enabled: bool, epoch: int) -> Iterable[Batch]:
    if not enabled:
        return batches
    try:
        from tqdm import tqdm
    except ImportError:
        logger.warning("progress bar requested but tqdm is not installed")
        return batches
    return tqdm(batches, desc=f"epoch {epoch}", unit="batch", leave=False)


class TrainingLog:
    """Append-only JSON-lines writer."""

    def __init__(self, handle: IO[str]) -> None:
        self.handle = handle

    def write(self, record: dict[str, Any]) -> None:
        self.handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        self.handle.flush()


@dataclass
class ValidationRecord:
    step: int
    epoch: int
    loss: float
    bleu: float
    best: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "event": "validation",
            "step": self.step,
            "epoch": self.epoch,
            "loss": self.loss,
            "bleu": self.bleu,
            "best": self.best,
        }


@dataclass
class TrainingResult:
    best_checkpoint: Path
    last_checkpoint: Path
    log_path: Path
    best_bleu: float
    steps: int
    epochs: int
    stopped_early: bool
    history: list[ValidationRecord]
    final_bleu: float


class Trainer:
    """Owns one model and updates it on batches of ``train_set``."""

    def __init__(
        self,
        model: Seq2SeqModel,
        train_set: Dataset,
        config: TrainConfig,
        valid_set: Optional[Dataset] = None,
    ) -> None:
        self.model = model
        self.train_set = train_set
        self.valid_set = valid_set if valid_set is not None else train_set
        if valid_set is None:
            logger.warning("no validation set given; validating on the training inputs")
        self.config = config
        self.state = AdamState(learning_rate=config.learning_rate)
        self.translator = Translator.for_dataset(
            model, self.valid_set, TranslateOptions(beam_width=1, max_length=config.max_length)
        )

    def metadata(self, step: int, epoch: int, score: Optional[float]) -> dict[str, Any]:
        return {
            "dataset": self.train_set.spec.to_dict(),
            "vocabularies": self.train_set.vocabularies.to_dict(),
            "train": self.config.to_dict(),
            "seed": self.config.seed,
            "step": step,
            "epoch": epoch,
            "bleu": score,
        }

    def validate(self) -> CorpusScore:
        """Greedy-decode the validation inputs and score them against all their references."""
        outputs = self.translator.translate_dataset(self.valid_set, width=1)
        references = [self.translator.references(e) for e in self.valid_set.examples]
        return bleu(outputs, references)

    def final_score(self, params: ModelParams) -> CorpusScore:
        """Beam-decode the validation inputs with ``params`` at the configured beam width."""
        options = TranslateOptions(
            beam_width=self.config.beam_width, max_length=self.config.max_length
        )
        translator = Translator.for_dataset(Seq2SeqModel(params), self.valid_set, options)
        outputs = translator.translate_dataset(self.valid_set)
        references = [translator.references(e) for e in self.valid_set.examples]
        return bleu(outputs, references)


    def header(self) -> dict[str, Any]:
        samples = [
            " ".join(target)
            for example in self.train_set.examples[:LOG_SAMPLES]
            for target in model_targets(example, self.train_set.spec)[:1]
        ]
        return {
            "event": "start",
            "task": self.train_set.spec.task,
            "examples": len(self.train_set),
            "parameters": self.model.params.scalar_count(),
            "model": self.model.config.to_dict(),
            "train": self.config.to_dict(),
            "sample_targets": samples,
        }

    def _batches(self, epoch: int) -> Iterator[Batch]:
        stream = self.train_set.batches(self.config.batch_size, self.config.seed, epoch)
        yield from _progress(prefetch(stream, self.config.prefetch), self.config.progress, epoch)

    def run(self, log_handle: IO[str]) -> TrainingResult:
        cfg = self.config
        directory = cfg.directory
        directory.mkdir(parents=True, exist_ok=True)
        best_path = directory / BEST_CHECKPOINT
        last_path = directory / LAST_CHECKPOINT
        log = TrainingLog(log_handle)
        log.write(self.header())

        history: list[ValidationRecord] = []
        best_bleu = -1.0
        stale = 0
        step = 0
        epoch = 0
        losses: list[float] = []
        stopped_early = False

        def checkpoint_interval() -> bool:
            nonlocal best_bleu, stale, losses
            score = self.validate().value
            improved = score > best_bleu
            mean_loss = sum(losses) / len(losses) if losses else 0.0
            record = ValidationRecord(step, epoch, mean_loss, score, improved)
            history.append(record)
            log.write(record.to_dict())
            logger.info(
                "step %d epoch %d: loss %.4f, validation BLEU %.2f%s",
                step,
                epoch,
                mean_loss,
                100 * score,
                " (best)" if improved else "",
            )
            if improved:
                best_bleu = score
                stale = 0
                save_checkpoint(best_path, self.model.params, self.metadata(step, epoch, score))
            else:
                stale += 1
            losses = []
            return stale >= cfg.patience

        for epoch in range(1, cfg.max_epochs + 1):
            for batch in self._batches(epoch):
                losses.append(self.model.train_step(batch, self.state, seed=cfg.seed))
                step += 1
                if step % cfg.validation_interval == 0 and checkpoint_interval():
                    stopped_early = True
                    break
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    break
            if stopped_early or (cfg.max_steps is not None and step >= cfg.max_steps):
                break
        if losses:
            stopped_early = checkpoint_interval() or stopped_early

        save_checkpoint(last_path, self.model.params, self.metadata(step, epoch, best_bleu))
        if stopped_early:
            logger.info("stopped after %d validations without improvement", cfg.patience)
        best_params = self.model.params
        if any(record.best for record in history):
            best_params, _ = load_checkpoint(best_path)
        final = self.final_score(best_params).value
        log.write({"event": "final", "step": step, "beam_width": cfg.beam_width, "bleu": final})
        logger.info(
            "best model: validation BLEU %.2f with beam width %d", 100 * final, cfg.beam_width
        )
        return TrainingResult(
            best_path,
            last_path,
            Path(getattr(log_handle, "name", directory / TRAINING_LOG)),
            best_bleu,
            step,
            epoch,
            stopped_early,
            history,
            final,
        )


def train(
    spec: DatasetSpec,
    train_config: TrainConfig,
    model_options: Optional[Mapping[str, Any]] = None,
    valid_spec: Optional[DatasetSpec] = None,
    max_vocab_size: int = DEFAULT_VOCAB_SIZE,
) -> TrainingResult:
    """Train a model on ``spec`` and return where the checkpoints and the log went."""
    train_set = load_dataset(spec, max_vocab_size=max_vocab_size)
    valid_set = None
    if valid_spec is not None:
        valid_set = load_dataset(valid_spec, vocabularies=train_set.vocabularies)
    config = configure_model(train_set, model_options)
    params = ModelParams.initialize(config, seed=train_config.seed)
    logger.info(
        "training %s model with %d parameters on %d examples",
        spec.task,
        params.scalar_count(),
        len(train_set),
    )
    trainer = Trainer(Seq2SeqModel(params), train_set, train_config, valid_set)
    log_path = train_config.directory / TRAINING_LOG
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with log_path.open("w", encoding="utf-8") as handle:
        return trainer.run(handle)
