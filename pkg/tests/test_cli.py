"""
Command-line tests: every command runs through ``main`` with files in a temp dir.

Run with: python -m pytest tests/test_cli.py -v
"""

import pytest
from conftest import write_lines

from multiseq import __version__
from multiseq.bitoken import ArpaModel, Clustering
from multiseq.cli import main, parse_args
from multiseq.config import parse_config_lines
from multiseq.errors import DatasetError
from multiseq.textproc import Vocabulary


def read(path):
    return path.read_text(encoding="utf-8").splitlines()


class TestExitCodes:
    """Test the mapping from failures to exit codes."""

    def test_version(self, capsys):
        """--version prints the version and succeeds."""
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_missing_command(self):
        """No command is a usage error."""
        assert main([]) == 1

    def test_bad_option(self):
        """Unknown options are usage errors."""
        assert main(["score", "--hyp", "a", "--ref", "b", "--bogus"]) == 1

    def test_missing_file(self, tmp_path, capsys):
        """Unreadable inputs are data errors."""
        code = main(["ape-derive", "--mt", str(tmp_path / "no.mt"), "--pe", str(tmp_path / "no.pe")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_mismatched_files(self, tmp_path):
        """Files with different line counts are usage errors."""
        mt = write_lines(tmp_path / "mt.txt", ["a", "b"])
        pe = write_lines(tmp_path / "pe.txt", ["a"])
        assert main(["ape-derive", "--mt", str(mt), "--pe", str(pe)]) == 1

    def test_bad_alignment(self, tmp_path):
        """Malformed alignments are data errors."""
        src = write_lines(tmp_path / "s.txt", ["a"])
        tgt = write_lines(tmp_path / "t.txt", ["b"])
        align = write_lines(tmp_path / "a.txt", ["0:0"])
        args = ["bitoken-extract", "--source", str(src), "--target", str(tgt)]
        assert main([*args, "--alignment", str(align)]) == 2

    def test_undecodable_input(self, tmp_path, capsys):
        """Input that is not UTF-8 is a data error naming the file."""
        bad = tmp_path / "bad.txt"
        bad.write_bytes(b"\xff\xfe zum Haus\n")
        assert main(["preprocess-de", "-i", str(bad), "-o", str(tmp_path / "out.txt")]) == 2
        assert "bad.txt" in capsys.readouterr().err

    def test_undecodable_vocabulary(self, tmp_path):
        """A vocabulary file that is not UTF-8 raises DatasetError."""
        bad = tmp_path / "vocab.txt"
        bad.write_bytes(b"Haus\n\xc3\x28\n")
        with pytest.raises(DatasetError, match="vocab.txt"):
            Vocabulary.load(bad)



class TestEditScriptCommands:
    """Test ape-derive and ape-apply."""

    def test_derive_then_apply(self, tmp_path):
        """Applying derived scripts reproduces the post-edits."""
        mt = write_lines(tmp_path / "mt.txt", ["das Haus ist klein", "er kommt"])
        pe = write_lines(tmp_path / "pe.txt", ["das Haus ist groß .", "er kommt heute"])
        scripts = tmp_path / "scripts.txt"
        applied = tmp_path / "applied.txt"
        assert main(["ape-derive", "--mt", str(mt), "--pe", str(pe), "-o", str(scripts)]) == 0
        assert read(scripts)[1] == "<keep> <keep> heute"
        args = ["ape-apply", "--mt", str(mt), "--scripts", str(scripts), "-o", str(applied)]
        assert main(args) == 0
        assert read(applied) == read(pe)

    def test_apply_postprocess(self, tmp_path):
        """With --postprocess the edited text is merged and punctuation-fixed."""
        mt = write_lines(tmp_path / "mt.txt", ["wir gehen zu der Schule ."])
        scripts = write_lines(tmp_path / "s.txt", ["<keep> <keep> <keep> <keep> <keep> <delete> ! !"])
        out = tmp_path / "out.txt"
        args = ["ape-apply", "--mt", str(mt), "--scripts", str(scripts), "--postprocess"]
        assert main([*args, "-o", str(out)]) == 0
        assert read(out) == ["wir gehen zur Schule !"]

    def test_stdout(self, tmp_path, capsys):
        """Without --output the result goes to stdout."""
        mt = write_lines(tmp_path / "mt.txt", ["a b"])
        pe = write_lines(tmp_path / "pe.txt", ["a c"])
        assert main(["ape-derive", "--mt", str(mt), "--pe", str(pe)]) == 0
        assert capsys.readouterr().out == "<keep> c <delete>\n"


class TestScoreCommand:
    """Test score reports from the command line."""

    @pytest.fixture
    def files(self, tmp_path):
        ref = write_lines(tmp_path / "ref.txt", ["the cat sat on the mat", "a b c"])
        good = write_lines(tmp_path / "good.txt", ["the cat sat on the mat", "a b c"])
        bad = write_lines(tmp_path / "bad.txt", ["the cat sat on a mat", "a x c"])
        return ref, good, bad

    def test_single_system(self, files, capsys):
        """One hypothesis file prints one line per metric."""
        ref, good, _ = files
        args = ["score", "--hyp", str(good), "--ref", str(ref), "--metric", "bleu", "--metric", "ter"]
        assert main(args) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines == ["good.txt\tBLEU = 100.00 (2 sentences)", "good.txt\tTER = 0.00 (2 sentences)"]

    def test_comparison(self, files, capsys):
        """Several hypothesis files print a comparison table."""
        ref, good, bad = files
        args = ["score", "--hyp", str(bad), "--hyp", str(good), "--ref", str(ref), "--metric", "ter"]
        assert main([*args, "--name", "baseline", "--name", "ape"]) == 0
        table = capsys.readouterr().out.splitlines()
        assert table[0].split() == ["system", "TER"]
        assert table[1].split() == ["baseline", "22.22"]
        assert table[2].split() == ["ape", "0.00"]

    def test_sentence_table(self, files, tmp_path):
        """--sentences writes one row per sentence."""
        ref, _, bad = files
        table = tmp_path / "sentences.tsv"
        args = ["score", "--hyp", str(bad), "--ref", str(ref), "--metric", "ter"]
        assert main([*args, "--sentences", str(table)]) == 0
        assert read(table) == ["sentence\tTER", "1\t16.67", "2\t33.33"]

    def test_name_count(self, files):
        """System names must match the hypothesis files."""
        ref, good, _ = files
        assert main(["score", "--hyp", str(good), "--ref", str(ref), "--name", "a", "--name", "b"]) == 1


class TestConfigFile:
    """Test option defaults from config files."""

    def test_config_supplies_options(self, tmp_path, capsys):
        """Config values fill options, repeatable ones included."""
        ref = write_lines(tmp_path / "ref.txt", ["a b c d"])
        hyp = write_lines(tmp_path / "hyp.txt", ["a b x d"])
        config = write_lines(
            tmp_path / "score.cfg",
            [f"hyp = {hyp}", f"--ref = {ref}", "metric = ter hter  # both", "macro = yes"],
        )
        assert main(["score", "--config", str(config)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out == ["hyp.txt\tTER = 25.00 (1 sentences)", "hyp.txt\tHTER = 25.00 (1 sentences)"]

    def test_hash_inside_value(self):
        """Only a "#" at line start or after whitespace opens a comment."""
        lines = ["output = run#3/out.txt  # where", "# full line", "   # indented", "tag=a#b"]
        assert parse_config_lines(lines) == {"output": "run#3/out.txt", "tag": "a#b"}

    def test_command_line_wins(self, tmp_path):
        """Options on the command line override the config file."""
        config = write_lines(tmp_path / "train.cfg", ["hidden-dim = 7", "batch_size = 3"])
        args = parse_args(
            ["train", "--config", str(config), "--task", "mmt", "--source", "s", "--batch-size", "5"]
        )
        assert args.hidden_dim == 7
        assert args.batch_size == 5

    def test_repeatable_command_line_wins(self, tmp_path):
        """Repeatable options from the command line replace the config list."""
        config = write_lines(tmp_path / "score.cfg", ["metric = ter", "ref = r.txt"])
        args = parse_args(["score", "--config", str(config), "--hyp", "h.txt", "--metric", "bleu"])
        assert args.metric == ["bleu"]
        assert args.ref == ["r.txt"]

    @pytest.mark.parametrize(
        "lines",
        [["no_such_option = 1"], ["macro = perhaps"], ["metric = meteor"], ["hyp"], ["a = 1", "a = 2"]],
    )
    def test_invalid_config(self, tmp_path, lines):
        """Bad config files are usage errors."""
        config = write_lines(tmp_path / "bad.cfg", lines)
        assert main(["score", "--config", str(config), "--hyp", "h", "--ref", "r"]) == 1

    def test_missing_config(self, tmp_path):
        """A missing config file is a usage error."""
        assert main(["score", "--config", str(tmp_path / "absent.cfg"), "--hyp", "h", "--ref", "r"]) == 1


class TestTextCommands:
    """Test the German and vocabulary commands."""

    def test_preprocess_postprocess(self, tmp_path):
        """Splitting then merging restores the text."""
        text = write_lines(tmp_path / "de.txt", ["Am Ende sah keiner zur Tür"])
        split = tmp_path / "split.txt"
        merged = tmp_path / "merged.txt"
        assert main(["preprocess-de", "-i", str(text), "-o", str(split)]) == 0
        assert read(split) == ["An dem Ende sah kein -er zu der Tür"]
        args = ["postprocess-de", "-i", str(split), "-o", str(merged), "--no-punctuation"]
        assert main(args) == 0
        assert read(merged) == read(text)

    def test_preprocess_single_kind(self, tmp_path):
        """Each split kind can be turned off."""
        text = write_lines(tmp_path / "de.txt", ["zur keiner"])
        out = tmp_path / "out.txt"
        assert main(["preprocess-de", "-i", str(text), "-o", str(out), "--no-endings"]) == 0
        assert read(out) == ["zu der keiner"]

    def test_postprocess_restores_period(self, tmp_path):
        """Post-processing with the MT restores a final period."""
        text = write_lines(tmp_path / "out.txt", ["zu der Schule"])
        mt = write_lines(tmp_path / "mt.txt", ["zur Schule ."])
        merged = tmp_path / "merged.txt"
        assert main(["postprocess-de", "-i", str(text), "--mt", str(mt), "-o", str(merged)]) == 0
        assert read(merged) == ["zur Schule ."]

    def test_vocab(self, tmp_path):
        """The vocab command writes corpus tokens by frequency."""
        corpus = write_lines(tmp_path / "c.txt", ["b a b", "c b a"])
        out = tmp_path / "vocab.txt"
        assert main(["vocab", "-i", str(corpus), "--max-size", "6", "-o", str(out)]) == 0
        assert read(out) == ["b", "a"]
        assert len(Vocabulary.load(out)) == 6


class TestBitokenCommands:
    """Test bitoken extraction, clustering and class LMs."""

    @pytest.fixture
    def parallel(self, tmp_path):
        src = write_lines(tmp_path / "src.txt", ["the cat", "the dog", "a cat", "a dog sleeps"])
        tgt = write_lines(tmp_path / "tgt.txt", ["die Katze", "der Hund", "eine Katze", "ein Hund schläft"])
        align = write_lines(tmp_path / "align.txt", ["0-0 1-1", "0-0 1-1", "0-0 1-1", "0-0 1-1 2-2"])
        return src, tgt, align

    def test_extract(self, parallel, tmp_path):
        """Bitokens are written one sentence per line."""
        src, tgt, align = parallel
        out = tmp_path / "bitokens.txt"
        args = ["bitoken-extract", "--source", str(src), "--target", str(tgt)]
        assert main([*args, "--alignment", str(align), "-o", str(out)]) == 0
        assert read(out)[0] == "die-the Katze-cat"

    def test_extract_needs_both_clusterings(self, parallel):
        """Class bitokens need source and target clusterings."""
        src, tgt, align = parallel
        args = ["bitoken-extract", "--source", str(src), "--target", str(tgt), "--alignment", str(align)]
        assert main([*args, "--source-classes", "x"]) == 1

    def test_cluster_and_lm(self, parallel, tmp_path):
        """Clustering writes a class file and the class LM reports perplexity."""
        _, tgt, _ = parallel
        classes = tmp_path / "tgt.classes"
        classified = tmp_path / "tgt.cls"
        args = ["brown-cluster", "-i", str(tgt), "--classes", "3", "-o", str(classes)]
        assert main([*args, "--classified", str(classified)]) == 0
        assert Clustering.load(classes).num_classes == 3
        lm = tmp_path / "lm.arpa"
        args = ["class-lm", "-i", str(classified), "-o", str(lm), "--test", str(classified)]
        assert main([*args, "--order", "2"]) == 0
        assert ArpaModel.read(lm).order == 2

    def test_scheme_lm(self, parallel, tmp_path, capsys):
        """A scheme builds its class corpus, saves the clusterings and trains the LM."""
        src, tgt, align = parallel
        lm = tmp_path / "lm.arpa"
        clusters = tmp_path / "clusters"
        args = ["class-lm", "--scheme", "(2,3)", "--source", str(src), "--target", str(tgt)]
        args += ["--alignment", str(align), "--clusters-dir", str(clusters), "-o", str(lm)]
        assert main(args) == 0
        assert sorted(p.name for p in clusters.iterdir()) == [
            "(2,3).source.classes",
            "(2,3).target.classes",
        ]
        assert lm.exists()

    def test_lm_needs_input(self, tmp_path):
        """class-lm without a corpus is a usage error."""
        assert main(["class-lm", "-o", str(tmp_path / "lm.arpa")]) == 1


class TestTrainTranslate:
    """Test the model commands end to end."""

    def test_train_then_translate(self, copy_corpus, tmp_path, capsys):
        """A trained checkpoint decodes the training inputs."""
        source, target = copy_corpus
        run = tmp_path / "run"
        args = ["train", "--task", "mmt", "--source", str(source), "--target", str(target)]
        args += ["--embedding-dim", "4", "--hidden-dim", "3", "--dropout", "0", "--l2", "0"]
        args += ["--batch-size", "3", "--max-epochs", "1", "--checkpoint-dir", str(run)]
        args += ["--max-length", "5"]
        assert main(args) == 0
        out = capsys.readouterr().out
        assert f"best checkpoint\t{run / 'best.ckpt'}" in out
        assert "final BLEU (beam 10)\t" in out
        output = tmp_path / "out.txt"
        args = ["translate", "--checkpoint", str(run / "best.ckpt"), "--source", str(source)]
        assert main([*args, "--beam-width", "2", "--max-length", "5", "-o", str(output)]) == 0
        assert len(read(output)) == 6

    def test_translate_bad_checkpoint(self, copy_corpus, tmp_path):
        """A damaged checkpoint is a data error."""
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage")
        args = ["translate", "--checkpoint", str(bad), "--source", str(copy_corpus[0])]
        assert main(args) == 2

    def test_train_bad_config(self, copy_corpus, tmp_path):
        """Impossible hyperparameters are usage errors."""
        source, target = copy_corpus
        args = ["train", "--task", "mmt", "--source", str(source), "--target", str(target)]
        assert main([*args, "--dropout", "1.5", "--checkpoint-dir", str(tmp_path)]) == 1
