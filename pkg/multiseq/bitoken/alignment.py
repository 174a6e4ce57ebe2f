"""Word alignments and bitoken extraction."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from multiseq.errors import AlignmentError

NULL = "NULL"


@dataclass(frozen=True)
class Alignment:
    """0-based ``(source_index, target_index)`` links of one sentence pair."""

    links: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> Alignment:
        return cls(frozenset((int(s), int(t)) for s, t in pairs))

    @classmethod
    def parse(cls, line: str) -> Alignment:
        """Read space-separated ``i-j`` links (source ``i``, target ``j``)."""
        links = set()
        for item in line.split():
            left, sep, right = item.partition("-")
            if not sep or not left.isdigit() or not right.isdigit():
                msg = f"malformed alignment link {item!r}"
                raise AlignmentError(msg)
            links.add((int(left), int(right)))
        return cls(frozenset(links))

    def to_text(self) -> str:
        return " ".join(f"{s}-{t}" for s, t in sorted(self.links))

    def validate(self, source_length: int, target_length: int) -> None:
        for s, t in sorted(self.links):
            if not (0 <= s < source_length and 0 <= t < target_length):
                msg = (
                    f"alignment link {s}-{t} out of bounds for a {source_length}-word source "
                    f"and {target_length}-word target"
                )
                raise AlignmentError(msg)


def _groups(alignment: Alignment) -> list[list[tuple[int, int]]]:
    """Connected components of the link graph, each as target-sorted ``(t, s)`` pairs."""
    parent: dict[tuple[str, int], tuple[str, int]] = {}

    def find(node: tuple[str, int]) -> tuple[str, int]:
        parent.setdefault(node, node)
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for s, t in alignment.links:
        root_s, root_t = find(("s", s)), find(("t", t))
        if root_s != root_t:
            parent[root_s] = root_t

    components: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for s, t in alignment.links:
        components.setdefault(find(("t", t)), []).append((t, s))
    return sorted((sorted(pairs) for pairs in components.values()), key=lambda g: g[0])


def extract_bitokens(
    source: Sequence[str], target: Sequence[str], alignment: Alignment
) -> list[str]:
    """One bitoken per target-side group, in target order.

    An aligned pair becomes ``tgt-src``; an unaligned target word becomes
    ``tgt-NULL``; the pairs of a many-to-many group are joined with ``+`` in
    target order. Unaligned source words produce nothing.

    Example:
        >>> extract_bitokens(["had"], ["hat", "gehabt"], Alignment.parse("0-0 0-1"))
        ['hat-had+gehabt-had']
    """
    alignment.validate(len(source), len(target))
    placed: list[tuple[int, str]] = []
    covered: set[int] = set()
    for group in _groups(alignment):
        placed.append((group[0][0], "+".join(f"{target[t]}-{source[s]}" for t, s in group)))
        covered.update(t for t, _ in group)
    placed.extend((t, f"{target[t]}-{NULL}") for t in range(len(target)) if t not in covered)
    return [token for _, token in sorted(placed)]
