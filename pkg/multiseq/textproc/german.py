"""Reversible German splits: contracted preposition+article and pronoun case endings.

Rules come from a tab-separated table (``surface<TAB>replacement tokens``). A
rule whose replacement contains a token starting with ``-`` is a case-ending
rule (``keinem -> kein -em``); all others are contraction rules
(``zur -> zu der``). Capitalised variants are derived for every rule.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from multiseq.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_RULES = "german_rules.tsv"


@dataclass(frozen=True)
class SplitRule:
    surface: str
    replacement: tuple[str, ...]

    @property
    def is_case_ending(self) -> bool:
        return any(token.startswith("-") for token in self.replacement)

    def capitalized(self) -> SplitRule:
        head, *rest = self.replacement
        surface = self.surface[:1].upper() + self.surface[1:]
        return SplitRule(surface, (head[:1].upper() + head[1:], *rest))


def _parse_rules(lines: Iterable[str], source: str) -> list[SplitRule]:
    rules = []
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        surface, sep, replacement = line.partition("\t")
        tokens = tuple(replacement.split())
        if not sep or not surface.strip() or len(tokens) < 2:  # noqa: PLR2004
            msg = f"{source}:{number}: expected 'surface<TAB>two or more tokens', got {raw!r}"
            raise ConfigurationError(msg)
        rules.append(SplitRule(surface.strip(), tokens))
    return rules


class SplitRuleTable:
    """Ordered split rules with the inverse map used for merging."""

    def __init__(self, rules: Sequence[SplitRule], add_capitalized: bool = True) -> None:
        expanded: list[SplitRule] = []
        seen: set[str] = set()
        for rule in rules:
            variants = [rule]
            if add_capitalized and rule.surface[:1].islower():
                variants.append(rule.capitalized())
            for variant in variants:
                if variant.surface in seen:
                    if variant is rule:
                        msg = f"duplicate split rule for {rule.surface!r}"
                        raise ConfigurationError(msg)
                    continue
                seen.add(variant.surface)
                expanded.append(variant)
        self.rules = tuple(expanded)
        self._split = {rule.surface: rule for rule in self.rules}
        self._merge: dict[tuple[str, ...], str] = {}
        for rule in self.rules:
            if rule.replacement in self._merge:
                other = self._merge[rule.replacement]
                msg = f"rules {other!r} and {rule.surface!r} share a replacement"
                raise ConfigurationError(msg)
            self._merge[rule.replacement] = rule.surface
        self._validate()
        self.endings = frozenset(
            token for rule in self.rules for token in rule.replacement if token.startswith("-")
        )
        self._max_key = max((len(key) for key in self._merge), default=0)

    def _validate(self) -> None:
        keys = list(self._merge)
        for key in keys:
            for other in keys:
                if other != key and other[: len(key)] == key:
                    msg = f"merge key {' '.join(key)!r} is a prefix of {' '.join(other)!r}"
                    raise ConfigurationError(msg)
        for rule in self.rules:
            clash = [t for t in rule.replacement if t in self._split]
            if clash:
                msg = f"replacement of {rule.surface!r} contains the surface form {clash[0]!r}"
                raise ConfigurationError(msg)

    def __len__(self) -> int:
        return len(self.rules)

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<rules>") -> SplitRuleTable:
        return cls(_parse_rules(lines, source))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> SplitRuleTable:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            msg = f"cannot read rule table {path}: {exc}"
            raise ConfigurationError(msg) from exc
        table = cls.from_lines(text.splitlines(), str(path))
        logger.info("loaded %d split rules from %s", len(table), path)
        return table

    def split(self, tokens: Sequence[str], case_endings: bool, contractions: bool) -> list[str]:
        out: list[str] = []
        for token in tokens:
            rule = self._split.get(token)
            if rule is not None and (case_endings if rule.is_case_ending else contractions):
                out.extend(rule.replacement)
            else:
                out.append(token)
        return out

    def merge(self, tokens: Sequence[str]) -> list[str]:
        """Undo both splits left to right; ending tokens without a matching stem are dropped."""
        out: list[str] = []
        position = 0
        while position < len(tokens):
            for width in range(min(self._max_key, len(tokens) - position), 1, -1):
                surface = self._merge.get(tuple(tokens[position : position + width]))
                if surface is not None:
                    out.append(surface)
                    position += width
                    break
            else:
                token = tokens[position]
                if token not in self.endings:
                    out.append(token)
                position += 1
        return out


@lru_cache(maxsize=1)
def default_rules() -> SplitRuleTable:
    """The packaged rule table."""
    resource = resources.files("multiseq.textproc") / "data" / DEFAULT_RULES
    text = resource.read_text("utf-8")
    return SplitRuleTable.from_lines(text.splitlines(), DEFAULT_RULES)


def _resolve(table: Optional[SplitRuleTable]) -> SplitRuleTable:
    return default_rules() if table is None else table


def split_contractions(tokens: Sequence[str], table: Optional[SplitRuleTable] = None) -> list[str]:
    """``["zur"] -> ["zu", "der"]``; other tokens pass through."""
    return _resolve(table).split(tokens, case_endings=False, contractions=True)


def split_pronoun_endings(
    tokens: Sequence[str], table: Optional[SplitRuleTable] = None
) -> list[str]:
    """``["keinem"] -> ["kein", "-em"]``; other tokens pass through."""
    return _resolve(table).split(tokens, case_endings=True, contractions=False)


def split_german(tokens: Sequence[str], table: Optional[SplitRuleTable] = None) -> list[str]:
    return split_pronoun_endings(split_contractions(tokens, table), table)


def merge_german(tokens: Sequence[str], table: Optional[SplitRuleTable] = None) -> list[str]:
    return _resolve(table).merge(tokens)
