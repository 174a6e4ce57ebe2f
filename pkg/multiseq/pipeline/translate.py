"""Decoding a trained checkpoint and the task-specific output post-processing.

For ``ape`` the decoder emits an edit script; the output sentence is
``fix_punctuation(merge_german(apply_edits(mt, script)), mt)``. For the other
tasks the decoded sentence is merged and punctuation-fixed when the model was
trained on split German.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from multiseq.decoding import beam_decode, greedy_decode
from multiseq.editops import EditScript, apply_edits
from multiseq.errors import UsageError
from multiseq.pipeline.dataset import (
    Dataset,
    DatasetSpec,
    Example,
    Vocabularies,
    load_images,
    read_examples,
)
from multiseq.seqmodel.checkpoint import load_checkpoint
from multiseq.seqmodel.model import Seq2SeqModel
from multiseq.seqmodel.params import ModelParams
from multiseq.textproc.german import SplitRuleTable, default_rules
from multiseq.textproc.punctuation import fix_punctuation

logger = logging.getLogger(__name__)

Tokens = list[str]


@dataclass(frozen=True)
class TranslateOptions:
    """How a checkpoint decodes: beam width 1 is greedy search."""

    beam_width: int = 10
    max_length: int = 100

    def __post_init__(self) -> None:
        if self.beam_width < 1 or self.max_length < 1:
            msg = "beam width and max length must be positive"
            raise UsageError(msg)


class Translator:
    """Decode examples of one dataset layout with a model and its vocabularies."""

    def __init__(
        self,
        model: Seq2SeqModel,
        vocabularies: Vocabularies,
        task: str,
        split_german: bool = False,
        rules: Optional[SplitRuleTable] = None,
        options: Optional[TranslateOptions] = None,
    ) -> None:
        self.model = model
        self.vocabularies = vocabularies
        self.task = task
        self.split_german = split_german
        self.rules = rules if rules is not None else default_rules()
        self.options = options or TranslateOptions()

    @classmethod
    def for_dataset(
        cls,
        model: Seq2SeqModel,
        dataset: Dataset,
        options: Optional[TranslateOptions] = None,
    ) -> Translator:
        spec = dataset.spec
        return cls(
            model,
            dataset.vocabularies,
            spec.task,
            spec.splits_german,
            spec.rule_table() if spec.splits_german else None,
            options,
        )

    def check_inputs(self, spec: DatasetSpec) -> None:
        config = self.model.config
        if len(spec.sources) != config.encoder_count:
            msg = (
                f"checkpoint has {config.encoder_count} encoders but "
                f"{len(spec.sources)} input streams were given"
            )
            raise UsageError(msg)
        if spec.uses_images != config.use_image:
            state = "uses" if config.use_image else "does not use"
            msg = f"checkpoint {state} image features; the inputs disagree"
            raise UsageError(msg)
        if spec.task != self.task:
            msg = f"checkpoint was trained for {self.task}, inputs are {spec.task}"
            raise UsageError(msg)

    def decode_ids(
        self, example: Example, image: Optional[np.ndarray] = None, width: Optional[int] = None
    ) -> list[int]:
        width = self.options.beam_width if width is None else width
        sources = [v.encode(s) for v, s in zip(self.vocabularies.sources, example.sources)]
        bound = self.model.bind(sources, image)
        if width == 1:
            return greedy_decode(bound, self.options.max_length)
        return beam_decode(bound, width, self.options.max_length)

    def merge(self, tokens: Sequence[str]) -> Tokens:
        return self.rules.merge(tokens) if self.split_german else list(tokens)

    def postprocess(self, example: Example, decoded: Sequence[str]) -> Tokens:
        """Turn decoder tokens into the output sentence for ``example``."""
        if self.task == "ape":
            mt = example.sources[1]
            edited = apply_edits(mt, EditScript.from_tokens(decoded))
            return fix_punctuation(self.merge(edited), self.merge(mt))
        output = self.merge(decoded)
        return fix_punctuation(output) if self.split_german else output

    def references(self, example: Example) -> list[Tokens]:
        return [self.merge(t) for t in example.targets]

    def translate(
        self, example: Example, image: Optional[np.ndarray] = None, width: Optional[int] = None
    ) -> Tokens:
        ids = self.decode_ids(example, image, width)
        return self.postprocess(example, self.vocabularies.target.decode(ids))

    def translate_dataset(self, dataset: Dataset, width: Optional[int] = None) -> list[Tokens]:
        outputs = []
        for example in dataset.examples:
            image = None
            if dataset.images is not None and example.image_id is not None:
                image = dataset.images.row(example.image_id)
            outputs.append(self.translate(example, image, width))
        logger.info("decoded %d sentences", len(outputs))
        return outputs


def translator_from_checkpoint(
    path: Union[str, Path], options: Optional[TranslateOptions] = None
) -> tuple[Translator, dict[str, Any]]:
    """Rebuild the translator a training run saved, with its metadata."""
    params, metadata = load_checkpoint(path)
    return translator_from_params(params, metadata, options), metadata


def translator_from_params(
    params: ModelParams, metadata: dict[str, Any], options: Optional[TranslateOptions] = None
) -> Translator:
    try:
        dataset = metadata["dataset"]
        vocabularies = Vocabularies.from_dict(metadata["vocabularies"])
    except KeyError as exc:
        msg = f"checkpoint metadata lacks {exc}; it was not written by a training run"
        raise UsageError(msg) from None
    split = bool(dataset.get("split_contractions") or dataset.get("split_endings"))
    rules = SplitRuleTable.from_file(dataset["rules"]) if split and dataset.get("rules") else None
    return Translator(Seq2SeqModel(params), vocabularies, dataset["task"], split, rules, options)


def inputs_spec(metadata: dict[str, Any], sources: Sequence[str], **images: Any) -> DatasetSpec:
    """Dataset layout of decoding inputs, preprocessed like the training data."""
    dataset = metadata["dataset"]
    return DatasetSpec(
        task=dataset["task"],
        sources=tuple(sources),
        tied_sources=tuple(dataset.get("tied_sources", ())),
        split_contractions=dataset.get("split_contractions", False),
        split_endings=dataset.get("split_endings", False),
        rules=dataset.get("rules"),
        **images,
    )


def translate_files(
    checkpoint: Union[str, Path],
    sources: Sequence[str],
    options: Optional[TranslateOptions] = None,
    image_ids: Optional[str] = None,
    image_features: Optional[str] = None,
    image_index: Optional[str] = None,
) -> list[Tokens]:
    """Decode every line of the input streams with a saved checkpoint."""
    translator, metadata = translator_from_checkpoint(checkpoint, options)
    spec = inputs_spec(
        metadata,
        sources,
        image_ids=image_ids,
        image_features=image_features,
        image_index=image_index,
    )
    translator.check_inputs(spec)
    dataset = Dataset(spec, read_examples(spec), translator.vocabularies, load_images(spec))
    return translator.translate_dataset(dataset)


def write_sentences(path: Union[str, Path], sentences: Iterable[Sequence[str]]) -> None:
    Path(path).write_text("".join(" ".join(s) + "\n" for s in sentences), encoding="utf-8")
