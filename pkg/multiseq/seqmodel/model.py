"""Multi-encoder attentional encoder-decoder.

Every encoder is a bidirectional GRU over its own input sequence. The decoder
attends over each encoder separately and combines the resulting contexts in
its GRU input and in the output layer. The decoder initial state mixes the
encoders' final states and, optionally, an image feature vector.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np

from multiseq.errors import UsageError
from multiseq.numerics import ops
from multiseq.numerics.optim import AdamState, adam_step, l2_penalty
from multiseq.numerics.rng import dropout_mask
from multiseq.numerics.tensor import Tape, Tensor, constant, default_dtype
from multiseq.seqmodel.batch import Batch, pad_ids
from multiseq.seqmodel.gru import gru_cell, masked_update
from multiseq.seqmodel.params import ModelParams
from multiseq.textproc.vocab import BOS_ID, EOS_ID, PAD_ID

logger = logging.getLogger(__name__)

MASK_PENALTY = -1e9


class Dropout:
    """Inverted dropout with a fresh seeded mask per call site.

    A ``seed`` of ``None`` means inference mode and every call is the identity.
    """

    def __init__(self, rate: float, seed: Optional[tuple[int, ...]] = None) -> None:
        self.rate = rate
        self.seed = seed
        self._site = 0

    @property
    def active(self) -> bool:
        return self.seed is not None and self.rate > 0

    def __call__(self, x: Tensor) -> Tensor:
        if not self.active:
            return x
        assert self.seed is not None
        mask = dropout_mask(x.shape, self.rate, (*self.seed, self._site))
        self._site += 1
        return ops.mul(x, mask)


INFERENCE = Dropout(0.0)


@dataclass
class EncodedSequence:
    """Encoder output for a batch.

    Attributes:
        states: ``(N, k, 2H)``; position ``j`` is the forward state after tokens
            ``1..j`` concatenated with the backward state after tokens ``k..j``.
        final: ``(N, 2H)``; forward final state concatenated with backward final state.
        mask: ``(N, k)``; 1 on real tokens, 0 on padding.
        keys: ``states`` projected by the encoder's ``W_H``.
        encoder_index: Which encoder produced it.
    """

    states: Tensor
    final: Tensor
    mask: np.ndarray
    keys: Tensor
    encoder_index: int

    @property
    def length(self) -> int:
        return int(self.states.shape[1])

    @property
    def matrix(self) -> np.ndarray:
        """``(k, 2H)`` state matrix of a single-sequence encoding."""
        return self.states.data[0]


class Seq2SeqModel:
    """Forward computations of the model over a :class:`ModelParams` set."""

    def __init__(self, params: ModelParams) -> None:
        self.params = params
        self.config = params.config

    # encoder

    def encode(
        self, tokens: Sequence[int], encoder_index: int, dropout: Dropout = INFERENCE
    ) -> EncodedSequence:
        """Encode one token sequence (a batch of one)."""
        if len(tokens) == 0:
            msg = f"encoder {encoder_index}: cannot encode an empty sequence"
            raise UsageError(msg)
        return self.encode_batch(pad_ids([tokens]), encoder_index, dropout)

    def encode_batch(
        self, ids: np.ndarray, encoder_index: int, dropout: Dropout = INFERENCE
    ) -> EncodedSequence:
        if not 0 <= encoder_index < self.config.encoder_count:
            count = self.config.encoder_count
            msg = f"encoder index {encoder_index} out of range for {count} encoders"
            raise UsageError(msg)
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2 or ids.shape[1] == 0:  # noqa: PLR2004
            msg = f"encoder {encoder_index}: expected a non-empty (N, k) id matrix, got {ids.shape}"
            raise UsageError(msg)
        real = ids != PAD_ID
        if not real.any(axis=1).all():
            msg = f"encoder {encoder_index}: batch contains an empty sequence"
            raise UsageError(msg)

        dtype = default_dtype()
        batch, steps = ids.shape
        hidden = self.config.hidden_dim
        mask = real.astype(dtype)
        full = bool(real.all())
        masks = [None if full else constant(mask[:, t : t + 1]) for t in range(steps)]

        p = self.params
        embedded = dropout(ops.embedding(p[f"encoder{encoder_index}.embedding"], ids))
        inputs = [ops.take(embedded, t, axis=1) for t in range(steps)]
        forward_gru = p.gru(f"encoder{encoder_index}.forward")
        backward_gru = p.gru(f"encoder{encoder_index}.backward")

        zero = constant(np.zeros((batch, hidden), dtype=dtype))
        forward_states: list[Tensor] = []
        h = zero
        for t in range(steps):
            h = masked_update(h, gru_cell(inputs[t], h, forward_gru), masks[t])
            forward_states.append(h)
        backward_states: list[Optional[Tensor]] = [None] * steps
        h = zero
        for t in reversed(range(steps)):
            h = masked_update(h, gru_cell(inputs[t], h, backward_gru), masks[t])
            backward_states[t] = h

        columns = [
            ops.reshape(ops.concat([f, b]), (batch, 1, 2 * hidden))
            for f, b in zip(forward_states, backward_states)
            if b is not None
        ]
        states = dropout(ops.concat(columns, axis=1))
        first_backward = backward_states[0]
        assert first_backward is not None
        final = ops.concat([forward_states[-1], first_backward])
        keys = ops.matmul(states, p[f"attention{encoder_index}.W_H"])
        return EncodedSequence(states, final, mask, keys, encoder_index)

    # decoder

    def initial_state(self, finals: Sequence[Tensor], image: Optional[Tensor] = None) -> Tensor:
        """``tanh(sum_i final_i C_i + image C_img + bias)`` with shape ``(N, H)``."""
        cfg = self.config
        if len(finals) != cfg.encoder_count:
            msg = f"initial_state expects {cfg.encoder_count} final states, got {len(finals)}"
            raise UsageError(msg)
        if (image is not None) != cfg.use_image:
            msg = "image features must be given exactly when the model uses images"
            raise UsageError(msg)

        total: Optional[Tensor] = None
        if cfg.encoders_in_initial_state:
            for index, final in enumerate(finals):
                term = ops.matmul(final, self.params[f"init.C{index}"])
                total = term if total is None else ops.add(total, term)
        if image is not None:
            term = ops.matmul(image, self.params["init.C_img"])
            total = term if total is None else ops.add(total, term)
        if total is None:
            rows = finals[0].shape[0]
            total = constant(np.zeros((rows, cfg.hidden_dim), dtype=default_dtype()))
        return ops.tanh(ops.add(total, self.params["init.bias"]))

    def attend(self, state: Tensor, encoded: EncodedSequence) -> tuple[Tensor, Tensor]:
        """Context vector ``(N, 2H)`` and attention weights ``(N, k)`` for decoder ``state``.

        Scores are ``v . tanh(P s + W_H h_k)``; padded positions receive no weight.
        A single encoded sequence broadcasts against a batch of states.
        """
        attention_dim = self.config.attention_dim or self.config.hidden_dim
        query = ops.matmul(state, self.params["attention.P"])
        query = ops.reshape(query, (query.shape[0], 1, attention_dim))
        energies = ops.matmul(ops.tanh(ops.add(encoded.keys, query)), self.params["attention.v"])
        rows, steps = energies.shape[0], energies.shape[1]
        scores = ops.reshape(energies, (rows, steps))
        if not encoded.mask.all():
            scores = ops.add(scores, constant((1.0 - encoded.mask) * MASK_PENALTY))
        weights = ops.softmax(scores)
        context = ops.matmul(ops.reshape(weights, (rows, 1, steps)), encoded.states)
        return ops.reshape(context, (rows, self.config.context_dim)), weights

    def decoder_step(
        self,
        state: Tensor,
        previous: np.ndarray,
        contexts: Sequence[Tensor],
        dropout: Dropout = INFERENCE,
    ) -> tuple[Tensor, Tensor]:
        """Advance the decoder by one token; returns the new state and output logits."""
        if len(contexts) != self.config.encoder_count:
            msg = f"decoder_step expects {self.config.encoder_count} contexts, got {len(contexts)}"
            raise UsageError(msg)
        p = self.params
        word = ops.embedding(p["decoder.embedding"], np.asarray(previous, dtype=np.int64))
        step_input = dropout(ops.concat([word, *contexts]))
        new_state = gru_cell(step_input, state, p.gru("decoder"))
        logits = ops.matmul(dropout(new_state), p["output.W_o"])
        for index, context in enumerate(contexts):
            logits = ops.add(logits, ops.matmul(context, p[f"output.W_a{index}"]))
        return new_state, logits

    # training

    def encode_sources(
        self, sources: Sequence[np.ndarray], dropout: Dropout = INFERENCE
    ) -> list[EncodedSequence]:
        if len(sources) != self.config.encoder_count:
            count = self.config.encoder_count
            msg = f"model has {count} encoders, got {len(sources)} input streams"
            raise UsageError(msg)
        return [self.encode_batch(ids, i, dropout) for i, ids in enumerate(sources)]

    def sequence_loss(
        self, batch: Batch, dropout: Dropout = INFERENCE, include_l2: bool = True
    ) -> Tensor:
        """Mean teacher-forced negative log-likelihood per target token, plus the L2 term."""
        targets = np.asarray(batch.targets, dtype=np.int64)
        if targets.ndim != 2 or targets.shape[1] == 0:  # noqa: PLR2004
            msg = "sequence_loss needs non-empty target sequences"
            raise UsageError(msg)
        gold = targets != PAD_ID
        if not gold.any(axis=1).all():
            msg = "sequence_loss: a target sequence has length 0"
            raise UsageError(msg)

        encoded = self.encode_sources(batch.sources, dropout)
        image = constant(batch.images) if batch.images is not None else None
        state = self.initial_state([e.final for e in encoded], image)
        weights = gold.astype(default_dtype())
        previous = np.full(len(targets), BOS_ID, dtype=np.int64)
        total: Optional[Tensor] = None
        for t in range(targets.shape[1]):
            contexts = [self.attend(state, e)[0] for e in encoded]
            state, logits = self.decoder_step(state, previous, contexts, dropout)
            picked = ops.select(ops.log_softmax(logits), targets[:, t])
            term = ops.sum(ops.mul(picked, constant(weights[:, t])))
            total = term if total is None else ops.add(total, term)
            previous = targets[:, t]
        assert total is not None
        loss = ops.scale(total, -1.0 / float(gold.sum()))
        if include_l2 and self.config.l2 > 0:
            loss = ops.add(loss, l2_penalty(self.params.parameters(), self.config.l2))
        return loss

    def train_step(self, batch: Batch, state: AdamState, seed: int = 0) -> float:
        """One forward, backward and Adam update; returns the loss before the update."""
        dropout = Dropout(self.config.dropout, (seed, state.step))
        with Tape() as tape:
            loss = self.sequence_loss(batch, dropout)
        params = self.params.parameters()
        grads = tape.gradient(loss, params)
        adam_step(params, grads, state)
        value = loss.item()
        logger.debug("step %d loss %.6f", state.step, value)
        return value

    # inference

    def bind(
        self, sources: Sequence[Sequence[int]], image: Optional[np.ndarray] = None
    ) -> BoundDecoder:
        """Encode one example and return a step model for the decoding routines."""
        encoded = [self.encode(tokens, i) for i, tokens in enumerate(sources)]
        if len(encoded) != self.config.encoder_count:
            msg = f"model has {self.config.encoder_count} encoders, got {len(encoded)} inputs"
            raise UsageError(msg)
        features = None if image is None else constant(np.asarray(image).reshape(1, -1))
        start = self.initial_state([e.final for e in encoded], features)
        return BoundDecoder(self, encoded, start.data)


class BoundDecoder:
    """Decoder conditioned on one encoded input; advances many hypotheses at once."""

    def __init__(
        self, model: Seq2SeqModel, encoded: list[EncodedSequence], start: np.ndarray
    ) -> None:
        self.model = model
        self.encoded = encoded
        self.start = start
        self.vocab_size = model.config.target_vocab_size
        self.eos_id = EOS_ID
        self.bos_id = BOS_ID

    def initial_state(self) -> np.ndarray:
        return self.start

    def step(self, states: np.ndarray, previous: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """New states ``(B, H)`` and float64 log-probabilities ``(B, V)``."""
        state = constant(states)
        contexts = [self.model.attend(state, e)[0] for e in self.encoded]
        new_state, logits = self.model.decoder_step(state, previous, contexts)
        log_probs = ops.log_softmax(logits).data.astype(np.float64)
        return new_state.data, log_probs

