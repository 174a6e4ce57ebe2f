"""
Tests for corpus loading, image features, training, decoding and score reports.

Run with: python -m pytest tests/test_pipeline.py -v
Skip the long training runs with: python -m pytest -m "not slow"
"""

import json
import threading
import time
from dataclasses import replace

import numpy as np
import pytest
from conftest import write_lines

from multiseq.errors import (
    CheckpointError,
    ConfigurationError,
    DatasetError,
    ImageIndexError,
    UsageError,
)
from multiseq.pipeline import (
    DatasetSpec,
    ImageFeatureStore,
    Report,
    TrainConfig,
    TranslateOptions,
    Translator,
    Vocabularies,
    build_vocabularies,
    comparison_table,
    configure_model,
    evaluate_files,
    load_dataset,
    prefetch,
    read_examples,
    score_corpus,
    train,
    translate_files,
)
from multiseq.numerics import constant
from multiseq.pipeline.dataset import CLC_CAPTIONS
from multiseq.pipeline.translate import translator_from_params
from multiseq.seqmodel import ModelParams, Seq2SeqModel, load_checkpoint
from multiseq.textproc.vocab import EOS_ID

TINY_MODEL = {"embedding_dim": 4, "hidden_dim": 3, "dropout": 0.0, "l2": 0.0}


@pytest.fixture
def ape_corpus(tmp_path):
    """Source, MT and post-edit streams for automatic post-editing."""
    source = write_lines(
        tmp_path / "train.src",
        ["we go to school", "the house is small", "he had no dog", "the cat sleeps"],
    )
    mt = write_lines(
        tmp_path / "train.mt",
        ["wir gehen zur Schule", "das Haus ist klein", "er hatte keinen Hund", "die Katze schläft"],
    )
    pe = write_lines(
        tmp_path / "train.pe",
        [
            "wir gehen zur Schule .",
            "das Haus ist klein .",
            "er hatte keinen Hund .",
            "die Katze schläft .",
        ],
    )
    return source, mt, pe


def copy_spec(copy_corpus, **overrides):
    source, target = copy_corpus
    values = {"task": "mmt", "sources": (str(source),), "targets": (str(target),)}
    values.update(overrides)
    return DatasetSpec(**values)


def caption_spec(copy_corpus, **overrides):
    source, target = copy_corpus
    values = {"task": "clc", "sources": (str(source),) * CLC_CAPTIONS, "targets": (str(target),)}
    values.update(overrides)
    return DatasetSpec(**values)


def ape_spec(ape_corpus, **overrides):

    source, mt, pe = ape_corpus
    values = {"task": "ape", "sources": (str(source), str(mt)), "targets": (str(pe),)}
    values.update(overrides)
    return DatasetSpec(**values)


def train_config(tmp_path, **overrides):
    values = {
        "batch_size": 2,
        "max_epochs": 3,
        "validation_interval": 2,
        "patience": 100,
        "learning_rate": 0.0,
        "max_length": 6,
        "beam_width": 2,
        "checkpoint_dir": str(tmp_path / "run"),
    }
    values.update(overrides)
    return TrainConfig(**values)


def read_log(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


class TestDatasetSpec:
    """Test dataset layout validation."""

    def test_ape_ties_mt_stream(self, ape_corpus):
        """The MT stream of an ape dataset is in the target language."""
        spec = ape_spec(ape_corpus)
        assert spec.tied_sources == (1,)
        assert spec.mt_stream == 1

    @pytest.mark.parametrize(
        ("overrides", "message"),
        [
            ({"task": "summarize"}, "unknown task"),
            ({"sources": ()}, "at least one source"),
            ({"targets": ("a", "b")}, "one target stream"),
            ({"tied_sources": (3,)}, "out of range"),
            ({"image_ids": "ids.txt"}, "together"),
            ({"task": "clc"}, "exactly 5 source captions"),
        ],
    )
    def test_invalid(self, copy_corpus, overrides, message):
        """Inconsistent layouts raise ConfigurationError."""
        with pytest.raises(ConfigurationError, match=message):
            copy_spec(copy_corpus, **overrides)

    def test_ape_needs_two_sources(self, ape_corpus):
        """An ape dataset reads exactly a source and an MT stream."""
        with pytest.raises(ConfigurationError, match="exactly"):
            ape_spec(ape_corpus, sources=(str(ape_corpus[0]),))

    def test_clc_accepts_several_targets(self, copy_corpus):
        """Caption datasets may list several reference streams."""
        source, target = copy_corpus
        spec = caption_spec(copy_corpus, targets=(str(target), str(source)))
        examples = read_examples(spec)
        assert all(len(e.targets) == 2 for e in examples)


class TestReadExamples:
    """Test corpus ingestion."""

    def test_reads_tokens(self, copy_corpus):
        """Lines become token lists."""
        examples = read_examples(copy_spec(copy_corpus))
        assert len(examples) == 6
        assert examples[0].sources == [["a", "b", "c"]]
        assert examples[0].targets == [["a", "b", "c"]]

    def test_empty_file(self, copy_corpus, tmp_path):
        """An empty stream raises DatasetError naming the file."""
        empty = tmp_path / "empty.tgt"
        empty.write_text("", encoding="utf-8")
        with pytest.raises(DatasetError, match="empty.tgt is empty"):
            read_examples(copy_spec(copy_corpus, targets=(str(empty),)))

    def test_line_count_mismatch(self, copy_corpus, tmp_path):
        """Streams of different lengths raise DatasetError listing both files."""
        short = write_lines(tmp_path / "short.tgt", ["a b"])
        with pytest.raises(DatasetError, match=r"train.src \(6 lines\).*short.tgt \(1 lines\)"):
            read_examples(copy_spec(copy_corpus, targets=(str(short),)))

    def test_empty_source_line(self, tmp_path):
        """Empty source lines are rejected with their position."""
        source = write_lines(tmp_path / "gap.src", ["a", ""])
        target = write_lines(tmp_path / "gap.tgt", ["a", "b"])
        with pytest.raises(DatasetError, match="gap.src:2"):
            read_examples(DatasetSpec("mmt", (str(source),), (str(target),)))

    def test_missing_file(self, tmp_path):
        """Unreadable files raise DatasetError."""
        with pytest.raises(DatasetError, match="cannot read"):
            read_examples(DatasetSpec("mmt", (str(tmp_path / "absent.src"),)))

    def test_german_splits_target_language_only(self, tmp_path):
        """Splits apply to targets and tied sources, not to other sources."""
        source = write_lines(tmp_path / "s.txt", ["zur keinem"])
        target = write_lines(tmp_path / "t.txt", ["zur keinem"])
        spec = DatasetSpec(
            "mmt",
            (str(source),),
            (str(target),),
            split_contractions=True,
            split_endings=True,
        )
        example = read_examples(spec)[0]
        assert example.sources == [["zur", "keinem"]]
        assert example.targets == [["zu", "der", "kein", "-em"]]

    def test_ape_splits_mt(self, ape_corpus):
        """The MT stream of an ape dataset is split like the post-edits."""
        example = read_examples(ape_spec(ape_corpus, split_contractions=True))[0]
        assert example.sources[0] == ["we", "go", "to", "school"]
        assert example.sources[1] == ["wir", "gehen", "zu", "der", "Schule"]


class TestVocabularies:
    """Test vocabulary construction over datasets."""

    def test_ape_vocabulary(self, ape_corpus):
        """The ape target vocabulary holds the edit tokens and is shared with the MT encoder."""
        spec = ape_spec(ape_corpus)
        vocabs = build_vocabularies(read_examples(spec), spec)
        assert vocabs.target.token_id("<keep>") == 4
        assert vocabs.target.token_id("<delete>") == 5
        assert vocabs.sources[1] is vocabs.target
        assert vocabs.sources[0] is not vocabs.target
        assert "Haus" in vocabs.target
        assert "house" not in vocabs.target

    def test_roundtrip_keeps_ties(self, ape_corpus):
        """Serialised vocabularies restore ids and the tied object."""
        spec = ape_spec(ape_corpus)
        vocabs = build_vocabularies(read_examples(spec), spec)
        restored = Vocabularies.from_dict(json.loads(json.dumps(vocabs.to_dict())))
        assert restored.target == vocabs.target
        assert restored.sources[0] == vocabs.sources[0]
        assert restored.sources[1] is restored.target

    def test_needs_targets(self, copy_corpus):
        """Vocabularies cannot be built without target sentences."""
        with pytest.raises(UsageError):
            load_dataset(copy_spec(copy_corpus, targets=()))

    def test_size_limit(self, copy_corpus):
        """The size cap counts the reserved block."""
        dataset = load_dataset(copy_spec(copy_corpus), max_vocab_size=6)
        assert len(dataset.vocabularies.target) == 6

    def test_captions_share_vocabulary(self, copy_corpus):
        """All caption streams of a clc dataset read one source vocabulary."""
        vocabs = load_dataset(caption_spec(copy_corpus)).vocabularies
        assert all(v is vocabs.sources[0] for v in vocabs.sources)

    def test_identical_captions_match_single_encoder(self, copy_corpus):
        """Five identical captions give the contexts of a one-encoder model over that caption."""
        dataset = load_dataset(caption_spec(copy_corpus))
        config = configure_model(dataset, {**TINY_MODEL, "share_encoder_weights": False})
        assert config.share_encoder_weights
        shared = Seq2SeqModel(ModelParams.initialize(config, seed=3))
        single_config = replace(
            config, encoder_count=1, source_vocab_sizes=config.source_vocab_sizes[:1]
        )
        tensors = dict(ModelParams.initialize(single_config, seed=4).named_parameters())
        for name, tensor in shared.params.named_parameters():
            if name.startswith(("encoder0.", "attention0.", "attention.")):
                tensors[name] = tensor
        single = Seq2SeqModel(ModelParams(single_config, tensors))

        ids = dataset.vocabularies.sources[0].encode(["a", "b", "c"])
        state = constant(np.full((1, config.hidden_dim), 0.2))
        reference = single.encode(ids, 0)
        expected, _ = single.attend(state, reference)
        for index in range(CLC_CAPTIONS):
            encoded = shared.encode(ids, index)
            np.testing.assert_array_equal(encoded.states.data, reference.states.data)
            context, _ = shared.attend(state, encoded)
            np.testing.assert_array_equal(context.data, expected.data)



class TestBatches:
    """Test the minibatch stream."""

    def test_every_example_once(self, copy_corpus):
        """An epoch covers each training pair exactly once."""
        dataset = load_dataset(copy_spec(copy_corpus))
        rows = []
        for batch in dataset.batches(batch_size=4, seed=3):
            assert batch.size <= 4
            for row in batch.targets:
                ids = [int(i) for i in row if i != 0]
                assert ids[-1] == EOS_ID
                rows.append(tuple(ids[:-1]))
        expected = [tuple(e.target) for e in dataset.training_examples()]
        assert sorted(rows) == sorted(expected)

    def test_seeded_order(self, copy_corpus):
        """The same seed and epoch give the same batches."""
        dataset = load_dataset(copy_spec(copy_corpus))
        first = [b.targets.tolist() for b in dataset.batches(2, seed=9, epoch=2)]
        second = [b.targets.tolist() for b in dataset.batches(2, seed=9, epoch=2)]
        assert first == second

    def test_ape_targets_are_scripts(self, ape_corpus):
        """Ape examples train on edit scripts."""
        dataset = load_dataset(ape_spec(ape_corpus))
        target = dataset.vocabularies.target
        decoded = target.decode(dataset.training_examples()[0].target)
        assert decoded == ["<keep>"] * 4 + ["."]

    def test_clc_one_example_per_caption(self, copy_corpus):
        """Every caption of a caption dataset is its own training example."""
        source, target = copy_corpus
        dataset = load_dataset(caption_spec(copy_corpus, targets=(str(target), str(source))))
        assert len(dataset.training_examples()) == 12

    def test_bad_batch_size(self, copy_corpus):
        """Batch sizes below one raise UsageError."""
        dataset = load_dataset(copy_spec(copy_corpus))
        with pytest.raises(UsageError):
            next(dataset.batches(0))


class TestImages:
    """Test image feature files."""

    def make_store(self, rows=3, dim=5):
        features = np.arange(rows * dim, dtype=np.float32).reshape(rows, dim)
        return ImageFeatureStore(features, {f"img{i}.jpg": i for i in range(rows)})

    def test_save_load(self, tmp_path):
        """Stored features read back unchanged."""
        store = self.make_store()
        store.save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        loaded = ImageFeatureStore.load(tmp_path / "feat.bin", tmp_path / "index.tsv")
        assert loaded.index == store.index
        assert np.array_equal(loaded.features, store.features)
        assert loaded.dim == 5

    def test_rows(self):
        """Rows come back in the order asked for."""
        store = self.make_store()
        rows = store.rows(["img2.jpg", "img0.jpg"])
        assert rows.shape == (2, 5)
        assert rows[0, 0] == 10.0

    def test_unknown_id(self):
        """Unknown ids raise ImageIndexError."""
        with pytest.raises(ImageIndexError, match="missing.jpg"):
            self.make_store().row("missing.jpg")

    def test_bad_magic(self, tmp_path):
        """Files without the feature magic are rejected."""
        store = self.make_store()
        store.save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        payload = (tmp_path / "feat.bin").read_bytes()
        (tmp_path / "feat.bin").write_bytes(b"JUNK" + payload[4:])
        with pytest.raises(DatasetError, match="not an image-feature file"):
            ImageFeatureStore.load(tmp_path / "feat.bin", tmp_path / "index.tsv")

    def test_size_mismatch(self, tmp_path):
        """A payload that disagrees with the header is rejected."""
        store = self.make_store()
        store.save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        payload = (tmp_path / "feat.bin").read_bytes()
        (tmp_path / "feat.bin").write_bytes(payload[:-4])
        with pytest.raises(DatasetError, match="expected"):
            ImageFeatureStore.load(tmp_path / "feat.bin", tmp_path / "index.tsv")

    def test_index_errors(self, tmp_path):
        """Malformed, duplicate and out-of-range index entries are rejected."""
        store = self.make_store()
        store.save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        index = tmp_path / "index.tsv"
        for text, message in [
            ("img0.jpg 0\n", "expected"),
            ("a\t0\na\t1\n", "twice"),
            ("a\t7\n", "row 7"),
        ]:
            index.write_text(text, encoding="utf-8")
            with pytest.raises(DatasetError, match=message):
                ImageFeatureStore.load(tmp_path / "feat.bin", index)

    def test_dataset_with_images(self, copy_corpus, tmp_path):
        """Image rows travel with their examples into the batches."""
        self.make_store(rows=6, dim=4).save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        ids = write_lines(tmp_path / "ids.txt", [f"img{i}.jpg" for i in range(6)])
        spec = copy_spec(
            copy_corpus,
            image_ids=str(ids),
            image_features=str(tmp_path / "feat.bin"),
            image_index=str(tmp_path / "index.tsv"),
        )
        dataset = load_dataset(spec)
        batch = next(dataset.batches(3))
        assert batch.images.shape == (3, 4)
        config = configure_model(dataset, TINY_MODEL)
        assert config.use_image
        assert config.image_dim == 4

    def test_dataset_unknown_image(self, copy_corpus, tmp_path):
        """An image id missing from the index fails at load time."""
        self.make_store(rows=6, dim=4).save(tmp_path / "feat.bin", tmp_path / "index.tsv")
        ids = write_lines(tmp_path / "ids.txt", [f"img{i}.jpg" for i in range(5)] + ["other.jpg"])
        spec = copy_spec(
            copy_corpus,
            image_ids=str(ids),
            image_features=str(tmp_path / "feat.bin"),
            image_index=str(tmp_path / "index.tsv"),
        )
        with pytest.raises(ImageIndexError, match="other.jpg"):
            load_dataset(spec)


class TestPrefetch:
    """Test the background batch producer."""

    @pytest.mark.parametrize("depth", [0, 1, 3])
    def test_order_preserved(self, depth):
        """Items arrive in production order."""
        assert list(prefetch(iter(range(50)), depth)) == list(range(50))

    def test_exception_propagates(self):
        """A failure in the producer surfaces in the consumer."""

        def produce():
            yield 1
            yield 2
            msg = "broken stream"
            raise ValueError(msg)

        seen = []
        with pytest.raises(ValueError, match="broken stream"):
            for item in prefetch(produce(), 2):
                seen.append(item)
        assert seen == [1, 2]

    def test_early_exit(self):
        """Abandoning the stream stops the producer."""
        stream = prefetch(iter(range(1000)), 2)
        assert next(stream) == 0
        stream.close()

    def test_blocked_producer_released(self):
        """A producer waiting on a full buffer exits once the consumer stops."""
        before = set(threading.enumerate())
        stream = prefetch(iter(range(3)), 1)
        assert next(stream) == 0
        time.sleep(0.3)
        stream.close()
        workers = [t for t in set(threading.enumerate()) - before if t.name == "multiseq-prefetch"]
        assert not [t for t in workers if t.is_alive()]


class TestTrainConfig:
    """Test training option validation."""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"batch_size": 0},
            {"max_epochs": 0},
            {"max_steps": 0},
            {"learning_rate": -1.0},
            {"prefetch": -1},
        ],
    )
    def test_invalid(self, overrides):
        """Impossible schedules raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            TrainConfig(**overrides)

    def test_unknown_model_option(self, copy_corpus):
        """Model options outside the configuration are rejected."""
        dataset = load_dataset(copy_spec(copy_corpus))
        with pytest.raises(ConfigurationError, match="depth"):
            configure_model(dataset, {"depth": 3})


class TestTrainer:
    """Test the training loop."""

    def test_zero_learning_rate(self, copy_corpus, tmp_path):
        """Without updates every validation gives the same BLEU and only the first is best."""
        result = train(copy_spec(copy_corpus), train_config(tmp_path), TINY_MODEL)
        assert result.steps == 9
        assert result.epochs == 3
        assert len(result.history) == 5
        assert len({record.bleu for record in result.history}) == 1
        assert [record.best for record in result.history] == [True, False, False, False, False]
        assert result.best_checkpoint.exists()
        assert result.last_checkpoint.exists()

    def test_log_records(self, copy_corpus, tmp_path):
        """The log holds a start record, one record per validation and the final decode."""
        result = train(copy_spec(copy_corpus), train_config(tmp_path), TINY_MODEL)
        records = read_log(result.log_path)
        assert records[0]["event"] == "start"
        assert records[0]["examples"] == 6
        assert [r["event"] for r in records[1:-1]] == ["validation"] * 5
        assert [r["step"] for r in records[1:-1]] == [2, 4, 6, 8, 9]
        assert records[-1] == {
            "event": "final",
            "step": 9,
            "beam_width": 2,
            "bleu": result.final_bleu,
        }

    def test_final_decode_of_best_model(self, copy_corpus, tmp_path):
        """With beam width 1 the final decode repeats the best greedy validation."""
        config = train_config(tmp_path, beam_width=1)
        result = train(copy_spec(copy_corpus), config, TINY_MODEL)
        assert result.final_bleu == pytest.approx(result.best_bleu)


    def test_patience(self, copy_corpus, tmp_path):
        """Training stops after ``patience`` validations without improvement."""
        config = train_config(tmp_path, validation_interval=1, patience=2, max_epochs=10)
        result = train(copy_spec(copy_corpus), config, TINY_MODEL)
        assert result.stopped_early
        assert result.steps == 3
        assert len(result.history) == 3

    def test_max_steps(self, copy_corpus, tmp_path):
        """The step cap ends training with one final validation."""
        config = train_config(tmp_path, max_steps=4, validation_interval=100)
        result = train(copy_spec(copy_corpus), config, TINY_MODEL)
        assert result.steps == 4
        assert len(result.history) == 1

    def test_checkpoint_metadata(self, copy_corpus, tmp_path):
        """Checkpoints carry what decoding needs."""
        result = train(copy_spec(copy_corpus), train_config(tmp_path), TINY_MODEL)
        params, metadata = load_checkpoint(result.best_checkpoint)
        assert metadata["dataset"]["task"] == "mmt"
        assert metadata["step"] == 2
        assert metadata["seed"] == 0
        assert params.config.hidden_dim == 3

    def test_ape_header_shows_scripts(self, ape_corpus, tmp_path):
        """The start record of an ape run samples edit scripts."""
        result = train(ape_spec(ape_corpus), train_config(tmp_path, max_epochs=1), TINY_MODEL)
        header = read_log(result.log_path)[0]
        assert header["task"] == "ape"
        assert header["sample_targets"][0] == "<keep> <keep> <keep> <keep> ."

    @pytest.mark.slow
    def test_seeded_runs_identical(self, copy_corpus, tmp_path):
        """Two runs with one seed produce the same history and parameters."""
        results = [
            train(
                copy_spec(copy_corpus),
                train_config(tmp_path / name, learning_rate=0.01, max_epochs=4),
                {**TINY_MODEL, "dropout": 0.3},
            )
            for name in ("first", "second")
        ]
        assert results[0].history == results[1].history
        first, _ = load_checkpoint(results[0].last_checkpoint)
        second, _ = load_checkpoint(results[1].last_checkpoint)
        for name in first:
            assert np.array_equal(first[name].data, second[name].data)

    @pytest.mark.slow
    def test_memorizes_small_corpus(self, tmp_path):
        """A small model fits a tiny copy corpus."""
        rng = np.random.default_rng(0)
        words = [f"w{i}" for i in range(8)]
        lines = [" ".join(rng.choice(words, size=int(rng.integers(2, 5)))) for _ in range(16)]
        source = write_lines(tmp_path / "mem.src", lines)
        target = write_lines(tmp_path / "mem.tgt", lines)
        config = train_config(
            tmp_path,
            batch_size=4,
            max_epochs=60,
            validation_interval=40,
            learning_rate=0.01,
        )
        options = {"embedding_dim": 16, "hidden_dim": 32, "dropout": 0.0, "l2": 0.0}
        result = train(DatasetSpec("mmt", (str(source),), (str(target),)), config, options)
        assert result.history[-1].loss < 0.5 * result.history[0].loss


class TestTranslate:
    """Test decoding and output post-processing."""

    def make_translator(self, spec, **options):
        dataset = load_dataset(spec)
        model = Seq2SeqModel(ModelParams.initialize(configure_model(dataset, TINY_MODEL), seed=1))
        return Translator.for_dataset(model, dataset, TranslateOptions(**options)), dataset

    def test_ape_all_keep_is_identity(self, ape_corpus):
        """Keeping every MT token returns the MT sentence."""
        translator, dataset = self.make_translator(ape_spec(ape_corpus, split_contractions=True))
        example = dataset.examples[0]
        decoded = ["<keep>"] * len(example.sources[1])
        assert translator.postprocess(example, decoded) == ["wir", "gehen", "zur", "Schule"]

    def test_ape_edits_applied(self, ape_corpus):
        """Edit tokens are applied to the MT before punctuation fixes."""
        translator, dataset = self.make_translator(ape_spec(ape_corpus))
        example = dataset.examples[1]
        decoded = ["<keep>", "<keep>", "<keep>", "<delete>", "groß", ".", "."]
        assert translator.postprocess(example, decoded) == ["das", "Haus", "ist", "groß", "."]

    def test_mmt_output_merged(self, tmp_path):
        """Split German output is merged back for reports."""
        source = write_lines(tmp_path / "s.txt", ["to the school"])
        target = write_lines(tmp_path / "t.txt", ["zur Schule"])
        spec = DatasetSpec("mmt", (str(source),), (str(target),), split_contractions=True)
        translator, dataset = self.make_translator(spec)
        example = dataset.examples[0]
        assert translator.postprocess(example, ["zu", "der", "Schule", "!", "!"]) == [
            "zur",
            "Schule",
            "!",
        ]
        assert translator.references(example) == [["zur", "Schule"]]

    def test_beam_and_greedy_lengths(self, copy_corpus):
        """Decoded outputs respect the length limit."""
        translator, dataset = self.make_translator(copy_spec(copy_corpus), beam_width=3, max_length=4)
        for output in translator.translate_dataset(dataset):
            assert len(output) <= 4
        greedy = translator.translate_dataset(dataset, width=1)
        assert len(greedy) == len(dataset)

    def test_invalid_options(self):
        """Zero widths and lengths raise UsageError."""
        with pytest.raises(UsageError):
            TranslateOptions(beam_width=0)
        with pytest.raises(UsageError):
            TranslateOptions(max_length=0)

    def test_translate_files(self, copy_corpus, tmp_path):
        """A training checkpoint decodes new input files."""
        result = train(copy_spec(copy_corpus), train_config(tmp_path, max_epochs=1), TINY_MODEL)
        source, _ = copy_corpus
        outputs = translate_files(result.best_checkpoint, [str(source)], TranslateOptions(2, 5))
        assert len(outputs) == 6
        with pytest.raises(UsageError, match="encoders"):
            translate_files(result.best_checkpoint, [str(source), str(source)])

    def test_foreign_checkpoint(self, copy_corpus):
        """Parameters without training metadata cannot be decoded."""
        dataset = load_dataset(copy_spec(copy_corpus))
        params = ModelParams.initialize(configure_model(dataset, TINY_MODEL))
        with pytest.raises(UsageError, match="metadata"):
            translator_from_params(params, {})

    def test_corrupt_checkpoint(self, copy_corpus, tmp_path):
        """Decoding a damaged checkpoint raises CheckpointError."""
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            translate_files(path, [str(copy_corpus[0])])


class TestEvaluate:
    """Test score reports."""

    def test_identical_files(self, tmp_path):
        """A hypothesis equal to its reference scores 100 BLEU and 0 TER."""
        lines = ["the cat sat on the mat", "a dog ran in the park", "it rains all day long"]
        hypothesis = write_lines(tmp_path / "system.txt", lines)
        reference = write_lines(tmp_path / "reference.txt", lines)
        report = evaluate_files(hypothesis, [reference], metrics=("bleu", "ter"))
        assert [s.metric for s in report.scores] == ["BLEU", "TER"]
        assert report.scores[0].value == pytest.approx(1.0)
        assert report.scores[1].value == 0.0
        assert report.format().splitlines()[0] == "system.txt\tBLEU = 100.00 (3 sentences)"

    def test_hter_uses_first_reference(self):
        """HTER scores against the post-edit only."""
        scores = score_corpus([["a", "b"]], [[["a", "c"], ["a", "b"]]], metrics=("ter", "hter"))
        assert scores[0].value == 0.0
        assert scores[1].value == pytest.approx(0.5)

    def test_unknown_metric(self):
        """Unknown metric names raise UsageError."""
        with pytest.raises(UsageError, match="unknown metric"):
            score_corpus([["a"]], [[["a"]]], metrics=("meteor",))

    def test_line_mismatch(self, copy_corpus, tmp_path):
        """References with another line count are rejected."""
        short = write_lines(tmp_path / "short.ref", ["a b c"])
        with pytest.raises(UsageError, match="short.ref has 1"):
            evaluate_files(copy_corpus[0], [short])

    def test_no_reference(self, copy_corpus):
        """At least one reference file is needed."""
        with pytest.raises(UsageError):
            evaluate_files(copy_corpus[0], [])

    def test_sentence_table(self):
        """The per-sentence table has one row per sentence."""
        report = Report("sys", score_corpus([["a", "b"], ["c"]], [[["a", "b"]], [["d"]]], ("ter",)))
        assert report.sentence_table() == "sentence\tTER\n1\t0.00\n2\t100.00\n"

    def test_comparison_table(self):
        """Systems line up under the metric columns."""
        refs = [[["a", "b", "c"]]]
        reports = [
            Report("baseline", score_corpus([["a", "x", "c"]], refs, ("ter",))),
            Report("ape", score_corpus([["a", "b", "c"]], refs, ("ter",))),
        ]
        table = comparison_table(reports).splitlines()
        assert table[0].split() == ["system", "TER"]
        assert table[1].split() == ["baseline", "33.33"]
        assert table[2].split() == ["ape", "0.00"]

    def test_comparison_needs_same_metrics(self):
        """Reports scored differently cannot be compared."""
        refs = [[["a"]]]
        reports = [
            Report("one", score_corpus([["a"]], refs, ("ter",))),
            Report("two", score_corpus([["a"]], refs, ("hter",))),
        ]
        with pytest.raises(UsageError, match="different metrics"):
            comparison_table(reports)
