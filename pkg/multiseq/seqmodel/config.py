"""Model hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from multiseq.errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """Shape of a multi-encoder attentional model.

    Attributes:
        encoder_count: Number of parallel input sequences.
        source_vocab_sizes: Vocabulary size per encoder.
        target_vocab_size: Decoder vocabulary size.
        embedding_dim: Word embedding width.
        hidden_dim: GRU state width of encoders and decoder.
        attention_dim: Width of the attention space; defaults to ``hidden_dim``.
        dropout: Dropout rate on GRU inputs and outputs during training.
        l2: Coefficient of the L2 loss term.
        use_image: Whether an image feature vector feeds the decoder initial state.
        image_dim: Width of the image feature vector.
        share_encoder_weights: All encoders use one parameter set.
        tied_encoders: Encoders reading target-language text; they share the
            decoder embedding table and vocabulary.
        encoders_in_initial_state: When false, encoder final states do not
            contribute to the decoder initial state (image-only initialisation).
        init_scale: Parameters start uniform in ``[-init_scale, init_scale]``.
    """

    encoder_count: int
    source_vocab_sizes: tuple[int, ...]
    target_vocab_size: int
    embedding_dim: int = 300
    hidden_dim: int = 500
    attention_dim: Optional[int] = None
    dropout: float = 0.5
    l2: float = 1e-8
    use_image: bool = False
    image_dim: int = 4096
    share_encoder_weights: bool = False
    tied_encoders: tuple[int, ...] = field(default_factory=tuple)
    encoders_in_initial_state: bool = True
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_vocab_sizes", tuple(self.source_vocab_sizes))
        object.__setattr__(self, "tied_encoders", tuple(sorted(set(self.tied_encoders))))
        if self.attention_dim is None:
            object.__setattr__(self, "attention_dim", self.hidden_dim)
        self._validate()

    def _validate(self) -> None:
        if self.encoder_count < 1:
            msg = f"encoder_count must be >= 1, got {self.encoder_count}"
            raise ConfigurationError(msg)
        if len(self.source_vocab_sizes) != self.encoder_count:
            msg = (
                f"{self.encoder_count} encoders need {self.encoder_count} source vocabulary "
                f"sizes, got {len(self.source_vocab_sizes)}"
            )
            raise ConfigurationError(msg)
        dims = {
            "target_vocab_size": self.target_vocab_size,
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "attention_dim": self.attention_dim or 0,
            "image_dim": self.image_dim,
        }
        dims.update({f"source_vocab_sizes[{i}]": s for i, s in enumerate(self.source_vocab_sizes)})
        for name, value in dims.items():
            if value <= 0:
                msg = f"{name} must be positive, got {value}"
                raise ConfigurationError(msg)
        if not 0 <= self.dropout < 1:
            msg = f"dropout must be in [0, 1), got {self.dropout}"
            raise ConfigurationError(msg)
        if self.l2 < 0 or self.init_scale < 0:
            msg = "l2 and init_scale must be non-negative"
            raise ConfigurationError(msg)
        if self.share_encoder_weights and len(set(self.source_vocab_sizes)) != 1:
            msg = "shared encoder weights require one source vocabulary for all encoders"
            raise ConfigurationError(msg)
        for index in self.tied_encoders:
            if not 0 <= index < self.encoder_count:
                msg = f"tied encoder index {index} out of range"
                raise ConfigurationError(msg)
            if self.source_vocab_sizes[index] != self.target_vocab_size:
                msg = f"tied encoder {index} must use the target vocabulary"
                raise ConfigurationError(msg)
        if (
            self.share_encoder_weights
            and self.tied_encoders
            and len(self.tied_encoders) != self.encoder_count
        ):
            msg = "with shared encoder weights either all encoders are tied or none"
            raise ConfigurationError(msg)

    @property
    def context_dim(self) -> int:
        return 2 * self.hidden_dim

    def encoder_key(self, index: int) -> int:
        """Index of the parameter set encoder ``index`` reads from."""
        return 0 if self.share_encoder_weights else index

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["source_vocab_sizes"] = list(self.source_vocab_sizes)
        data["tied_encoders"] = list(self.tied_encoders)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelConfig:
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            msg = f"unknown model configuration keys: {', '.join(unknown)}"
            raise ConfigurationError(msg)
        values = dict(data)
        values["source_vocab_sizes"] = tuple(values.get("source_vocab_sizes", ()))
        values["tied_encoders"] = tuple(values.get("tied_encoders", ()))
        try:
            return cls(**values)
        except TypeError as exc:
            msg = f"incomplete model configuration: {exc}"
            raise ConfigurationError(msg) from exc
