"""Corpus ingestion, vocabularies and the minibatch stream.

Three task layouts share one loader:

``ape``
    sources ``(source, mt)``, one target stream holding the post-edits. The
    model learns the edit script that turns the MT into the post-edit.
``mmt``
    sources ``(source[, smt])``, one target stream, optional images.
``clc``
    five source captions per image, one or more target captions. The caption
    streams share one vocabulary and the model shares one encoder across them.
    Every target caption becomes its own training example; all of them are
    references at validation.

German splits apply to target-language streams: the targets and the sources
listed in ``tied_sources``.
"""

from __future__ import annotations

import logging
import queue
import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, TypeVar

import numpy as np

from multiseq.editops import derive_edits, script_vocabulary
from multiseq.errors import ConfigurationError, DatasetError, UsageError
from multiseq.numerics.rng import make_rng
from multiseq.pipeline.images import ImageFeatureStore
from multiseq.seqmodel.batch import Batch
from multiseq.textproc.german import SplitRuleTable, default_rules
from multiseq.textproc.vocab import Vocabulary, build_vocab

logger = logging.getLogger(__name__)

TASKS = ("ape", "mmt", "clc")
APE_MT_STREAM = 1
CLC_CAPTIONS = 5
BUCKET_BATCHES = 20
DEFAULT_VOCAB_SIZE = 30000

Tokens = list[str]
T = TypeVar("T")


@dataclass(frozen=True)
class DatasetSpec:
    """Where the streams of one split live and how to preprocess them.

    Attributes:
        task: ``ape``, ``mmt`` or ``clc``.
        sources: One text file per encoder.
        targets: Target text files; empty when only decoding.
        tied_sources: Source streams in the target language. Defaults to the MT
            stream for ``ape``.
        image_ids: File with one image id per line.
        image_features: Binary feature matrix (see :mod:`multiseq.pipeline.images`).
        image_index: ``id<TAB>row`` index of the feature matrix.
        split_contractions: Split contracted prepositions on target-language streams.
        split_endings: Split pronoun case endings on target-language streams.
        rules: Optional split-rule table overriding the packaged one.
    """

    task: str
    sources: tuple[str, ...]
    targets: tuple[str, ...] = ()
    tied_sources: Optional[tuple[int, ...]] = None
    image_ids: Optional[str] = None
    image_features: Optional[str] = None
    image_index: Optional[str] = None
    split_contractions: bool = False
    split_endings: bool = False
    rules: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", tuple(str(s) for s in self.sources))
        object.__setattr__(self, "targets", tuple(str(t) for t in self.targets))
        if self.tied_sources is None:
            tied = (APE_MT_STREAM,) if self.task == "ape" else ()
            object.__setattr__(self, "tied_sources", tied)
        else:
            object.__setattr__(self, "tied_sources", tuple(sorted(set(self.tied_sources))))
        self._validate()

    def _validate(self) -> None:
        if self.task not in TASKS:
            msg = f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}"
            raise ConfigurationError(msg)
        if not self.sources:
            msg = "a dataset needs at least one source stream"
            raise ConfigurationError(msg)
        if self.task == "ape" and len(self.sources) != 2:  # noqa: PLR2004
            msg = f"ape needs exactly a source and an MT stream, got {len(self.sources)} sources"
            raise ConfigurationError(msg)
        if self.task == "clc" and len(self.sources) != CLC_CAPTIONS:
            msg = f"clc needs exactly {CLC_CAPTIONS} source captions, got {len(self.sources)}"
            raise ConfigurationError(msg)
        if self.task != "clc" and len(self.targets) > 1:
            msg = f"{self.task} takes one target stream, got {len(self.targets)}"
            raise ConfigurationError(msg)
        for index in self.tied_sources or ():
            if not 0 <= index < len(self.sources):
                msg = f"tied source {index} out of range for {len(self.sources)} sources"
                raise ConfigurationError(msg)
        image_parts = (self.image_ids, self.image_features, self.image_index)
        if any(image_parts) and not all(image_parts):
            msg = "image ids, image features and image index must be given together"
            raise ConfigurationError(msg)

    @property
    def uses_images(self) -> bool:
        return self.image_ids is not None

    @property
    def mt_stream(self) -> Optional[int]:
        return APE_MT_STREAM if self.task == "ape" else None

    @property
    def splits_german(self) -> bool:
        return self.split_contractions or self.split_endings

    def rule_table(self) -> SplitRuleTable:
        return SplitRuleTable.from_file(self.rules) if self.rules else default_rules()

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "tied_sources": list(self.tied_sources or ()),
            "split_contractions": self.split_contractions,
            "split_endings": self.split_endings,
            "rules": self.rules,
            "uses_images": self.uses_images,
        }


@dataclass
class Example:
    """One input with all its target sentences (tokenized and preprocessed)."""

    sources: list[Tokens]
    targets: list[Tokens] = field(default_factory=list)
    image_id: Optional[str] = None


def read_lines(path: str) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        msg = f"cannot read {path}: {exc}"
        raise DatasetError(msg) from exc


def preprocess(tokens: Sequence[str], spec: DatasetSpec, table: SplitRuleTable) -> Tokens:
    return table.split(
        tokens, case_endings=spec.split_endings, contractions=spec.split_contractions
    )


def read_examples(spec: DatasetSpec) -> list[Example]:
    """Read, check and preprocess every stream of ``spec``.

    Raises:
        DatasetError: A file is unreadable or empty, the streams disagree on their
            line counts, or a source line is empty.
    """
    streams = {path: read_lines(path) for path in (*spec.sources, *spec.targets)}
    if spec.image_ids:
        streams[spec.image_ids] = read_lines(spec.image_ids)
    counts = {path: len(lines) for path, lines in streams.items()}
    for path, count in counts.items():
        if count == 0:
            msg = f"{path} is empty"
            raise DatasetError(msg)
    if len(set(counts.values())) != 1:
        listing = ", ".join(f"{path} ({count} lines)" for path, count in counts.items())
        msg = f"streams disagree on the number of lines: {listing}"
        raise DatasetError(msg)

    table = spec.rule_table() if spec.splits_german else None
    tied = set(spec.tied_sources or ())

    def tokens(line: str, german: bool) -> Tokens:
        words = line.split()
        return preprocess(words, spec, table) if german and table is not None else words

    examples = []
    for row in range(next(iter(counts.values()))):
        sources = []
        for index, path in enumerate(spec.sources):
            words = tokens(streams[path][row], index in tied)
            if not words:
                msg = f"{path}:{row + 1}: empty source line"
                raise DatasetError(msg)
            sources.append(words)
        targets = [tokens(streams[path][row], True) for path in spec.targets]
        image_id = streams[spec.image_ids][row].strip() if spec.image_ids else None
        examples.append(Example(sources, targets, image_id))
    logger.info("read %d %s examples from %s", len(examples), spec.task, ", ".join(streams))
    return examples


def model_targets(example: Example, spec: DatasetSpec) -> list[Tokens]:
    """Decoder targets of ``example``: edit scripts for ``ape``, the sentences otherwise."""
    if spec.mt_stream is None:
        return example.targets
    mt = example.sources[spec.mt_stream]
    return [derive_edits(mt, pe).tokens() for pe in example.targets]


@dataclass
class Vocabularies:
    """Encoder vocabularies and the decoder vocabulary.

    Tied sources hold the decoder vocabulary object itself.
    """

    sources: list[Vocabulary]
    target: Vocabulary

    @property
    def source_sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.sources)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sources": [v.corpus_tokens for v in self.sources],
            "source_reserved": [list(v.reserved) for v in self.sources],
            "target": self.target.corpus_tokens,
            "target_reserved": list(self.target.reserved),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Vocabularies:
        target = Vocabulary(data["target"], data["target_reserved"])
        sources = []
        for tokens, reserved in zip(data["sources"], data["source_reserved"]):
            vocab = Vocabulary(tokens, reserved)
            sources.append(target if vocab == target else vocab)
        return cls(sources, target)


def build_vocabularies(
    examples: Sequence[Example], spec: DatasetSpec, max_size: int = DEFAULT_VOCAB_SIZE
) -> Vocabularies:
    """Frequency vocabularies per untied source stream and one for the target language.

    The ``clc`` caption streams share a single source vocabulary.
    The target-language vocabulary counts the targets and every tied source.
    For ``ape`` it is extended with the Keep/Delete tokens.
    """
    if not examples or not examples[0].targets:
        msg = "vocabularies need a corpus with target sentences"
        raise UsageError(msg)
    tied = set(spec.tied_sources or ())
    target_side: list[Tokens] = [t for e in examples for t in e.targets]
    target_side += [e.sources[i] for e in examples for i in sorted(tied)]
    target = build_vocab(target_side, max_size)
    if spec.mt_stream is not None:
        target = script_vocabulary(target).vocab
    untied = [index for index in range(len(spec.sources)) if index not in tied]
    if spec.task == "clc":
        captions = build_vocab((e.sources[i] for e in examples for i in untied), max_size)
        own = {index: captions for index in untied}
    else:
        own = {
            index: build_vocab((e.sources[index] for e in examples), max_size) for index in untied
        }
    sources = [target if index in tied else own[index] for index in range(len(spec.sources))]
    return Vocabularies(sources, target)


@dataclass
class EncodedExample:
    sources: list[list[int]]
    target: list[int]
    image_id: Optional[str] = None


def _bucketed(
    items: list[T], lengths: list[int], batch_size: int, seed: tuple[int, ...]
) -> list[list[T]]:
    rng = make_rng(seed)
    order = [int(i) for i in rng.permutation(len(items))]
    pool = batch_size * BUCKET_BATCHES
    batches: list[list[T]] = []
    for start in range(0, len(order), pool):
        chunk = sorted(order[start : start + pool], key=lambda i: lengths[i])
        batches += [
            [items[i] for i in chunk[k : k + batch_size]] for k in range(0, len(chunk), batch_size)
        ]
    return [batches[int(i)] for i in rng.permutation(len(batches))]


class Dataset:
    """Examples of one split, encoded against fixed vocabularies."""

    def __init__(
        self,
        spec: DatasetSpec,
        examples: list[Example],
        vocabularies: Vocabularies,
        images: Optional[ImageFeatureStore] = None,
    ) -> None:
        if len(vocabularies.sources) != len(spec.sources):
            msg = f"{len(spec.sources)} source streams but {len(vocabularies.sources)} vocabularies"
            raise UsageError(msg)
        if spec.uses_images and images is None:
            msg = "dataset uses images but no feature store was given"
            raise UsageError(msg)
        self.spec = spec
        self.examples = examples
        self.vocabularies = vocabularies
        self.images = images
        if images is not None:
            for example in examples:
                if example.image_id is not None:
                    images.row(example.image_id)

    def __len__(self) -> int:
        return len(self.examples)

    def encode_sources(self, example: Example) -> list[list[int]]:
        return [v.encode(s) for v, s in zip(self.vocabularies.sources, example.sources)]

    def training_examples(self) -> list[EncodedExample]:
        """One encoded example per (input, target sentence) pair."""
        encoded = []
        for example in self.examples:
            sources = self.encode_sources(example)
            for target in model_targets(example, self.spec):
                ids = self.vocabularies.target.encode(target)
                encoded.append(EncodedExample(sources, ids, example.image_id))
        return encoded

    def image_rows(self, ids: Sequence[Optional[str]]) -> Optional[np.ndarray]:
        if self.images is None:
            return None
        return self.images.rows([i for i in ids if i is not None])

    def to_batch(self, items: Sequence[EncodedExample]) -> Batch:
        streams = [[item.sources[i] for item in items] for i in range(len(self.spec.sources))]
        return Batch.from_sequences(
            streams, [item.target for item in items], self.image_rows([i.image_id for i in items])
        )

    def batches(self, batch_size: int, seed: int = 0, epoch: int = 0) -> Iterator[Batch]:
        """Length-bucketed batches in an order fixed by ``(seed, epoch)``."""
        if batch_size < 1:
            msg = f"batch size must be positive, got {batch_size}"
            raise UsageError(msg)
        items = self.training_examples()
        if not items:
            msg = "no training examples: the dataset has no target stream"
            raise UsageError(msg)
        lengths = [len(item.target) for item in items]
        for group in _bucketed(items, lengths, batch_size, (seed, epoch)):
            yield self.to_batch(group)


def load_images(spec: DatasetSpec) -> Optional[ImageFeatureStore]:
    if not spec.uses_images:
        return None
    assert spec.image_features is not None and spec.image_index is not None
    return ImageFeatureStore.load(spec.image_features, spec.image_index)


def load_dataset(
    spec: DatasetSpec,
    vocabularies: Optional[Vocabularies] = None,
    max_vocab_size: int = DEFAULT_VOCAB_SIZE,
) -> Dataset:
    """Read ``spec`` and encode it; vocabularies are built from it when not given."""
    examples = read_examples(spec)
    if vocabularies is None:
        vocabularies = build_vocabularies(examples, spec, max_vocab_size)
    return Dataset(spec, examples, vocabularies, load_images(spec))


_DONE = object()


def prefetch(items: Iterable[T], depth: int) -> Iterator[T]:
    """Produce ``items`` on a background thread, at most ``depth`` ahead of the consumer.

    The order is that of ``items``; an exception in the producer is re-raised
    in the consumer. ``depth`` 0 iterates synchronously.
    """
    if depth <= 0:
        yield from items
        return
    buffer: queue.Queue[Any] = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def offer(item: Any) -> bool:
        while not stop.is_set():
            try:
                buffer.put(item, timeout=0.1)
            except queue.Full:
                continue
            return True
        return False

    def produce() -> None:
        try:
            for item in items:
                if not offer(item):
                    return
            offer(_DONE)
        except BaseException as exc:  # noqa: BLE001
            offer(exc)

    worker = threading.Thread(target=produce, name="multiseq-prefetch", daemon=True)
    worker.start()
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                return
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        worker.join(timeout=1.0)
