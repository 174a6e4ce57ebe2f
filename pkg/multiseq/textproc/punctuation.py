"""Rule-based punctuation fixes applied to post-edited output."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Optional

QUOTE = '"'
TERMINAL = frozenset({".", "!", "?"})


def fix_punctuation(tokens: Sequence[str], mt: Optional[Sequence[str]] = None) -> list[str]:
    """Apply the fixed rule list in order.

    1. An odd number of straight double quotes drops the last quote.
    2. Runs of the same terminal mark (``.``, ``!`` or ``?``) collapse to one.
    3. If ``mt`` ends with a period and the output does not end with ``.``, ``!``
       or ``?``, a period is appended.
    """
    out = list(tokens)
    if out.count(QUOTE) % 2:
        last = len(out) - 1 - out[::-1].index(QUOTE)
        del out[last]

    collapsed: list[str] = []
    for token in out:
        if collapsed and token == collapsed[-1] and token in TERMINAL:
            continue
        collapsed.append(token)

    if mt and mt[-1] == "." and (not collapsed or collapsed[-1] not in TERMINAL):
        collapsed.append(".")
    return collapsed
