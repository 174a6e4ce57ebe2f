"""Token vocabularies with a fixed reserved block."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Union

from multiseq.errors import ConfigurationError, DatasetError, UsageError, VocabularyError

logger = logging.getLogger(__name__)

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)


class Vocabulary:
    """Bijection between tokens and ids.

    The reserved tokens occupy the first ids in a fixed order; corpus tokens
    follow. Unknown tokens encode to the ``<unk>`` id.
    """

    def __init__(self, tokens: Sequence[str], reserved: Sequence[str] = RESERVED) -> None:
        self.reserved = tuple(reserved)
        self._id_to_token: list[str] = [*self.reserved]
        self._token_to_id: dict[str, int] = {}
        for index, token in enumerate(self.reserved):
            if token in self._token_to_id:
                msg = f"reserved token {token!r} listed twice"
                raise ConfigurationError(msg)
            self._token_to_id[token] = index
        for token in tokens:
            if token in self._token_to_id:
                if token in self.reserved:
                    msg = f"corpus token {token!r} collides with a reserved token"
                    raise ConfigurationError(msg)
                msg = f"duplicate vocabulary entry {token!r}"
                raise ConfigurationError(msg)
            self._token_to_id[token] = len(self._id_to_token)
            self._id_to_token.append(token)
        self.unk_id = self._token_to_id.get(UNK, UNK_ID)

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: object) -> bool:
        return token in self._token_to_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._id_to_token == other._id_to_token

    def __hash__(self) -> int:
        return hash(tuple(self._id_to_token))

    @property
    def corpus_tokens(self) -> list[str]:
        return self._id_to_token[len(self.reserved) :]

    def token_id(self, token: str) -> int:
        return self._token_to_id.get(token, self.unk_id)

    def token(self, index: int) -> str:
        if not 0 <= index < len(self._id_to_token):
            msg = f"id {index} out of range for vocabulary of size {len(self)}"
            raise VocabularyError(msg)
        return self._id_to_token[index]

    def extend(self, reserved_extra: Sequence[str]) -> Vocabulary:
        """Copy with more reserved tokens appended to the reserved block."""
        for token in reserved_extra:
            if token in self.reserved:
                msg = f"reserved token {token!r} already present"
                raise ConfigurationError(msg)
        return Vocabulary(self.corpus_tokens, (*self.reserved, *reserved_extra))

    def encode(
        self, tokens: Iterable[str], add_bos: bool = False, add_eos: bool = False
    ) -> list[int]:
        ids = [self.token_id(t) for t in tokens]
        if add_bos:
            ids.insert(0, BOS_ID)
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int], strip_special: bool = True) -> list[str]:
        """Tokens for ``ids``; with ``strip_special`` BOS/EOS/PAD are removed."""
        skipped = {PAD_ID, BOS_ID, EOS_ID} if strip_special else set()
        return [self.token(int(i)) for i in ids if int(i) not in skipped]

    def save(self, path: Union[str, Path]) -> None:
        text = "".join(f"{token}\n" for token in self.corpus_tokens)
        Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> Vocabulary:
        """Read a vocabulary file: one corpus token per line, ids follow the reserved block."""
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as exc:
            msg = f"cannot read vocabulary {path}: {exc}"
            raise DatasetError(msg) from exc
        return cls([line for line in lines if line])


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int) -> Vocabulary:
    """Reserved tokens, then the most frequent tokens (ties by string), ``max_size`` in total."""
    if max_size <= len(RESERVED):
        msg = f"max vocabulary size must exceed {len(RESERVED)} reserved tokens, got {max_size}"
        raise UsageError(msg)
    counts: Counter[str] = Counter()
    for sentence in corpus:
        counts.update(t for t in sentence if t not in RESERVED)
    if not counts:
        msg = "cannot build a vocabulary from an empty corpus"
        raise UsageError(msg)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[: max_size - len(RESERVED)]]
    logger.info("vocabulary: %d of %d types kept", len(kept), len(counts))
    return Vocabulary(kept)


def encode_tokens(
    tokens: Sequence[str], vocab: Vocabulary, add_bos: bool = False, add_eos: bool = False
) -> list[int]:
    return vocab.encode(tokens, add_bos=add_bos, add_eos=add_eos)


def decode_ids(ids: Sequence[int], vocab: Vocabulary, strip_special: bool = True) -> list[str]:
    return vocab.decode(ids, strip_special=strip_special)
