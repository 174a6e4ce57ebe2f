"""Multi-encoder attentional encoder-decoder built on :mod:`multiseq.numerics`."""

from multiseq.seqmodel.batch import Batch, pad_ids
from multiseq.seqmodel.checkpoint import load_checkpoint, save_checkpoint
from multiseq.seqmodel.config import ModelConfig
from multiseq.seqmodel.model import INFERENCE, BoundDecoder, Dropout, EncodedSequence, Seq2SeqModel
from multiseq.seqmodel.params import GRUWeights, ModelParams, parameter_layout

__all__ = [
    "INFERENCE",
    "Batch",
    "BoundDecoder",
    "Dropout",
    "EncodedSequence",
    "GRUWeights",
    "ModelConfig",
    "ModelParams",
    "Seq2SeqModel",
    "load_checkpoint",
    "pad_ids",
    "parameter_layout",
    "save_checkpoint",
]
