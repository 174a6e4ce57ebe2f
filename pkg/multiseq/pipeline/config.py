"""Training and decoding options."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional

from multiseq.errors import ConfigurationError


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation schedule of one training run.

    Attributes:
        batch_size: Examples per minibatch.
        max_epochs: Passes over the training data.
        max_steps: Optional cap on updates; training stops at whichever limit comes first.
        validation_interval: Updates between validations.
        patience: Validations without a BLEU improvement before stopping.
        seed: Seeds parameter initialisation, shuffling and dropout.
        learning_rate: Adam step size.
        beam_width: Beam width of the decode of the best model after training; validation
            during training decodes greedily.
        max_length: Longest output a decode may produce.
        checkpoint_dir: Where ``best.ckpt``, ``last.ckpt`` and ``train.jsonl`` go.
        prefetch: Batches prepared ahead on a background thread; 0 disables it.
        progress: Show a tqdm progress bar per epoch (needs the ``progress`` extra).
    """

    batch_size: int = 64
    max_epochs: int = 10
    max_steps: Optional[int] = None
    validation_interval: int = 1000
    patience: int = 10
    seed: int = 0
    learning_rate: float = 1e-3
    beam_width: int = 10
    max_length: int = 100
    checkpoint_dir: str = "checkpoints"
    prefetch: int = 0
    progress: bool = False

    def __post_init__(self) -> None:
        counts = {
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "validation_interval": self.validation_interval,
            "patience": self.patience,
            "beam_width": self.beam_width,
            "max_length": self.max_length,
        }
        if self.max_steps is not None:
            counts["max_steps"] = self.max_steps
        for name, value in counts.items():
            if value < 1:
                msg = f"{name} must be positive, got {value}"
                raise ConfigurationError(msg)
        if self.learning_rate < 0:
            msg = f"learning_rate must be non-negative, got {self.learning_rate}"
            raise ConfigurationError(msg)
        if self.prefetch < 0:
            msg = f"prefetch must be non-negative, got {self.prefetch}"
            raise ConfigurationError(msg)

    @property
    def directory(self) -> Path:
        return Path(self.checkpoint_dir)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)
