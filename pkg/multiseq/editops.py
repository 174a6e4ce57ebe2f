"""Keep/delete/insert edit scripts between an MT sentence and its post-edit.

A script is read left to right against the MT tokens: ``<keep>`` copies the next
MT token, ``<delete>`` skips it and any other token is inserted as is. Scripts
derived here are minimal over insertions and deletions (a substitution costs a
delete plus an insert).
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from multiseq.errors import ConfigurationError, UsageError
from multiseq.textproc.vocab import Vocabulary

logger = logging.getLogger(__name__)

KEEP_TOKEN = "<keep>"
DELETE_TOKEN = "<delete>"


class EditKind(Enum):
    KEEP = "keep"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class EditOp:
    kind: EditKind
    word: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is EditKind.INSERT:
            if not self.word or self.word in (KEEP_TOKEN, DELETE_TOKEN) or self.word.split() != [
                self.word
            ]:
                msg = f"insert needs a single non-empty word, got {self.word!r}"
                raise UsageError(msg)
        elif self.word is not None:
            msg = f"{self.kind.value} carries no word"
            raise UsageError(msg)

    @property
    def token(self) -> str:
        if self.kind is EditKind.KEEP:
            return KEEP_TOKEN
        if self.kind is EditKind.DELETE:
            return DELETE_TOKEN
        assert self.word is not None
        return self.word

    @classmethod
    def from_token(cls, token: str) -> EditOp:
        if token == KEEP_TOKEN:
            return KEEP
        if token == DELETE_TOKEN:
            return DELETE
        return cls(EditKind.INSERT, token)

    def __repr__(self) -> str:
        if self.kind is EditKind.INSERT:
            return f"Insert({self.word})"
        return self.kind.value.capitalize()


KEEP = EditOp(EditKind.KEEP)
DELETE = EditOp(EditKind.DELETE)


def insert(word: str) -> EditOp:
    return EditOp(EditKind.INSERT, word)


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...] = ()

    def __iter__(self) -> Iterator[EditOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def count(self, kind: EditKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    @property
    def source_length(self) -> int:
        """Number of MT tokens the script consumes."""
        return self.count(EditKind.KEEP) + self.count(EditKind.DELETE)

    def tokens(self) -> list[str]:
        return [op.token for op in self.ops]

    def to_text(self) -> str:
        return " ".join(self.tokens())

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> EditScript:
        return cls(tuple(EditOp.from_token(t) for t in tokens))

    @classmethod
    def from_text(cls, line: str) -> EditScript:
        return cls.from_tokens(line.split())


def _distance_table(mt: Sequence[str], pe: Sequence[str]) -> list[list[int]]:
    rows, cols = len(mt), len(pe)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(rows + 1):
        table[i][0] = i
    for j in range(cols + 1):
        table[0][j] = j
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            best = min(table[i - 1][j], table[i][j - 1]) + 1
            if mt[i - 1] == pe[j - 1]:
                best = min(best, table[i - 1][j - 1])
            table[i][j] = best
    return table


def derive_edits(mt: Sequence[str], pe: Sequence[str]) -> EditScript:
    """Minimal script turning ``mt`` into ``pe``.

    The backtrace starts at the end of both sentences and prefers Keep, then
    Delete, then Insert, which fixes one canonical script among the minimal ones.

    Example:
        >>> derive_edits(["a", "b", "c"], ["a", "x", "c"]).to_text()
        '<keep> x <delete> <keep>'
    """
    table = _distance_table(mt, pe)
    i, j = len(mt), len(pe)
    ops: list[EditOp] = []
    while i > 0 or j > 0:
        if i > 0 and j > 0 and mt[i - 1] == pe[j - 1] and table[i][j] == table[i - 1][j - 1]:
            ops.append(KEEP)
            i, j = i - 1, j - 1
        elif i > 0 and table[i][j] == table[i - 1][j] + 1:
            ops.append(DELETE)
            i -= 1
        else:
            ops.append(insert(pe[j - 1]))
            j -= 1
    ops.reverse()
    return EditScript(tuple(ops))


def apply_edits(mt: Sequence[str], script: EditScript) -> list[str]:
    """Run ``script`` over ``mt``; never fails.

    Keep/Delete past the end of ``mt`` are ignored and MT tokens left over when
    the script ends are copied.
    """
    out: list[str] = []
    position = 0
    for op in script:
        if op.kind is EditKind.INSERT:
            assert op.word is not None
            out.append(op.word)
        elif position < len(mt):
            if op.kind is EditKind.KEEP:
                out.append(mt[position])
            position += 1
    out.extend(mt[position:])
    return out


class ScriptVocabulary:
    """Target vocabulary extended with reserved ``<keep>`` and ``<delete>`` tokens."""

    def __init__(self, vocab: Vocabulary) -> None:
        self.vocab = vocab
        self.keep_id = vocab.token_id(KEEP_TOKEN)
        self.delete_id = vocab.token_id(DELETE_TOKEN)

    def __len__(self) -> int:
        return len(self.vocab)

    def encode(self, script: EditScript) -> list[int]:
        return self.vocab.encode(script.tokens())

    def decode(self, ids: Sequence[int]) -> EditScript:
        return EditScript.from_tokens(self.vocab.decode(ids))


def script_vocabulary(vocab: Vocabulary) -> ScriptVocabulary:
    """Add KEEP and DELETE to the reserved block of ``vocab``.

    Raises:
        ConfigurationError: ``vocab`` already reserves or contains either token.
    """
    if KEEP_TOKEN in vocab or DELETE_TOKEN in vocab:
        msg = f"vocabulary already contains {KEEP_TOKEN} or {DELETE_TOKEN}"
        raise ConfigurationError(msg)
    return ScriptVocabulary(vocab.extend((KEEP_TOKEN, DELETE_TOKEN)))


def read_scripts(lines: Sequence[str]) -> list[EditScript]:
    return [EditScript.from_text(line) for line in lines]
