"""Named parameter store of the attentional encoder-decoder."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from typing import NamedTuple

import numpy as np

from multiseq.errors import CheckpointError
from multiseq.numerics.rng import make_rng
from multiseq.numerics.tensor import Tensor, default_dtype
from multiseq.seqmodel.config import ModelConfig

logger = logging.getLogger(__name__)

GRU_PARTS = ("input", "recurrent_gates", "recurrent_candidate", "bias")


class GRUWeights(NamedTuple):
    """Fused gate weights: input ``(in, 3H)``, ``U_zr (H, 2H)``, ``U_h (H, H)``, bias ``(3H,)``."""

    input: Tensor
    recurrent_gates: Tensor
    recurrent_candidate: Tensor
    bias: Tensor

    @property
    def hidden_dim(self) -> int:
        return self.recurrent_candidate.shape[0]


def _gru_shapes(prefix: str, input_dim: int, hidden: int) -> dict[str, tuple[int, ...]]:
    return {
        f"{prefix}.input": (input_dim, 3 * hidden),
        f"{prefix}.recurrent_gates": (hidden, 2 * hidden),
        f"{prefix}.recurrent_candidate": (hidden, hidden),
        f"{prefix}.bias": (3 * hidden,),
    }


def parameter_layout(config: ModelConfig) -> tuple[dict[str, tuple[int, ...]], dict[str, str]]:
    """Shapes of the stored parameters and the alias map of every referenced name.

    Returns ``(shapes, aliases)``: ``shapes`` maps each stored name to its shape in
    creation order, ``aliases`` maps every name the model refers to onto the
    stored name it reads.
    """
    n = config.encoder_count
    hidden = config.hidden_dim
    emb = config.embedding_dim
    ctx = config.context_dim
    att = config.attention_dim or hidden
    vocab = config.target_vocab_size

    shapes: dict[str, tuple[int, ...]] = {}
    aliases: dict[str, str] = {}

    def declare(name: str, shape: tuple[int, ...], stored: str) -> None:
        aliases[name] = stored
        if stored == name:
            shapes[name] = shape

    shapes["decoder.embedding"] = (vocab, emb)
    aliases["decoder.embedding"] = "decoder.embedding"
    for i in range(n):
        key = config.encoder_key(i)
        if i in config.tied_encoders:
            declare(f"encoder{i}.embedding", (vocab, emb), "decoder.embedding")
        else:
            declare(
                f"encoder{i}.embedding",
                (config.source_vocab_sizes[i], emb),
                f"encoder{key}.embedding",
            )
        for direction in ("forward", "backward"):
            for name, shape in _gru_shapes(f"encoder{i}.{direction}", emb, hidden).items():
                declare(name, shape, name.replace(f"encoder{i}.", f"encoder{key}.", 1))
        declare(f"attention{i}.W_H", (ctx, att), f"attention{key}.W_H")
    declare("attention.P", (hidden, att), "attention.P")
    declare("attention.v", (att, 1), "attention.v")
    for name, shape in _gru_shapes("decoder", emb + n * ctx, hidden).items():
        declare(name, shape, name)
    declare("output.W_o", (hidden, vocab), "output.W_o")
    for i in range(n):
        declare(f"output.W_a{i}", (ctx, vocab), f"output.W_a{config.encoder_key(i)}")
    if config.encoders_in_initial_state:
        for i in range(n):
            declare(f"init.C{i}", (ctx, hidden), f"init.C{config.encoder_key(i)}")
    if config.use_image:
        declare("init.C_img", (config.image_dim, hidden), "init.C_img")
    declare("init.bias", (hidden,), "init.bias")
    return shapes, aliases


class ModelParams:
    """Every learned matrix of the model, addressable by name.

    Names follow the model equations (``attention0.W_H``, ``output.W_o``, ...).
    Shared and tied parameters are aliases of one stored tensor, so
    :meth:`parameters` lists each trainable array exactly once.
    """

    def __init__(self, config: ModelConfig, tensors: dict[str, Tensor]) -> None:
        shapes, aliases = parameter_layout(config)
        missing = [name for name in shapes if name not in tensors]
        extra = [name for name in tensors if name not in shapes]
        if missing or extra:
            msg = f"parameter set does not match config (missing {missing}, unexpected {extra})"
            raise CheckpointError(msg)
        for name, shape in shapes.items():
            if tensors[name].shape != shape:
                msg = f"parameter {name} has shape {tensors[name].shape}, config expects {shape}"
                raise CheckpointError(msg)
            tensors[name].requires_grad = True
            tensors[name].name = name
        self.config = config
        self._tensors = {name: tensors[name] for name in shapes}
        self._aliases = aliases

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> ModelParams:
        """Uniform ``[-init_scale, init_scale]`` values drawn in layout order from ``seed``."""
        rng = make_rng(seed)
        dtype = default_dtype()
        shapes, _ = parameter_layout(config)
        tensors = {
            name: Tensor(rng.uniform(-config.init_scale, config.init_scale, shape).astype(dtype))
            for name, shape in shapes.items()
        }
        params = cls(config, tensors)
        logger.info(
            "initialised %d parameter arrays (%d scalars)", len(tensors), params.scalar_count()
        )
        return params

    @classmethod
    def zeros(cls, config: ModelConfig) -> ModelParams:
        shapes, _ = parameter_layout(config)
        dtype = default_dtype()
        tensors = {name: Tensor(np.zeros(shape, dtype=dtype)) for name, shape in shapes.items()}
        return cls(config, tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[self._aliases[name]]

    def __contains__(self, name: object) -> bool:
        return name in self._aliases

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def stored_name(self, name: str) -> str:
        return self._aliases[name]

    def referenced_names(self) -> list[str]:
        return list(self._aliases)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return list(self._tensors.items())

    def parameters(self) -> list[Tensor]:
        return list(self._tensors.values())

    def scalar_count(self, prefix: str = "") -> int:
        return sum(t.size for name, t in self._tensors.items() if name.startswith(prefix))

    def gru(self, prefix: str) -> GRUWeights:
        return GRUWeights(*(self[f"{prefix}.{part}"] for part in GRU_PARTS))

    def symbol_table(self) -> dict[str, str]:
        """Where each symbol of the model equations lives.

        Learned matrices map to parameter names; computed quantities map to the
        attribute or operation producing them.
        """
        table = {
            "v": "attention.v",
            "P": "attention.P",
            "W_o": "output.W_o",
            "s": "Seq2SeqModel.decoder_step -> state",
            "s0": "Seq2SeqModel.initial_state",
            "y": "decoder.embedding",
            "init.bias": "init.bias",
        }
        for i in range(self.config.encoder_count):
            table[f"x_{i}"] = f"encoder{i}.embedding"
            table[f"h_{i}"] = f"encoder{i}.forward.input"
            table[f"H_{i}"] = "EncodedSequence.states"
            table[f"a_{i}"] = "Seq2SeqModel.attend -> context"
            table[f"alpha_{i}"] = "Seq2SeqModel.attend -> weights"
            table[f"W_H_{i}"] = f"attention{i}.W_H"
            table[f"W_a_{i}"] = f"output.W_a{i}"
            if self.config.encoders_in_initial_state:
                table[f"C_{i}"] = f"init.C{i}"
        if self.config.use_image:
            table["C_img"] = "init.C_img"
        return table

    def copy(self) -> ModelParams:
        return ModelParams(
            self.config,
            {
                name: Tensor(t.data.copy(), dtype=t.data.dtype.type)
                for name, t in self._tensors.items()
            },
        )
