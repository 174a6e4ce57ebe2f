"""
Tests for German splitting and merging, punctuation fixes and vocabularies.

Run with: python -m pytest tests/test_textproc.py -v
"""

import pytest

from multiseq.errors import ConfigurationError, DatasetError, UsageError, VocabularyError
from multiseq.textproc import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    RESERVED,
    UNK_ID,
    SplitRuleTable,
    Vocabulary,
    build_vocab,
    decode_ids,
    default_rules,
    encode_tokens,
    fix_punctuation,
    merge_german,
    split_contractions,
    split_german,
    split_pronoun_endings,
)


class TestGermanSplits:
    """Test the packaged split rules."""

    def test_contractions(self):
        """Contracted prepositions split into preposition and article."""
        assert split_contractions(["am", "Montag", "zur", "Schule"]) == [
            "an",
            "dem",
            "Montag",
            "zu",
            "der",
            "Schule",
        ]

    def test_capitalized_variant(self):
        """Capitalised surfaces split with a capitalised head."""
        assert split_contractions(["Am", "Ende"]) == ["An", "dem", "Ende"]

    def test_pronoun_endings(self):
        """Declinable pronouns split into stem and case ending."""
        assert split_pronoun_endings(["keinem", "unserer", "Hunde"]) == [
            "kein",
            "-em",
            "unser",
            "-er",
            "Hunde",
        ]

    def test_kinds_are_independent(self):
        """Each split only touches its own rules."""
        assert split_contractions(["keinem", "zum"]) == ["keinem", "zu", "dem"]
        assert split_pronoun_endings(["keinem", "zum"]) == ["kein", "-em", "zum"]

    @pytest.mark.parametrize(
        "sentence",
        [
            "Wir gehen am Abend zur Schule",
            "Am Ende hat keiner seinen Hund gesehen",
            "Ich gebe es keinem , auch nicht meinen Eltern",
            "Das Haus ist groß .",
        ],
    )
    def test_merge_inverts_split(self, sentence):
        """Merging a split sentence restores it."""
        tokens = sentence.split()
        assert merge_german(split_german(tokens)) == tokens

    def test_split_idempotent(self):
        """Splitting twice changes nothing more."""
        tokens = "Am Abend sah keiner unseren Hund zur Tür gehen".split()
        once = split_german(tokens)
        assert split_german(once) == once

    def test_orphan_ending_dropped(self):
        """An ending without its stem disappears on merge."""
        assert merge_german(["-em"]) == []
        assert merge_german(["Hund", "-en", "kein"]) == ["Hund", "kein"]

    def test_default_table_cached(self):
        """The packaged table is loaded once."""
        assert default_rules() is default_rules()
        assert len(default_rules()) > 0


class TestRuleTable:
    """Test custom rule tables."""

    def test_custom_rules(self):
        """A table read from lines splits and merges with its own rules."""
        table = SplitRuleTable.from_lines(["# comment", "", "vom\tvon dem", "dieses\tdies -es"])
        assert split_german(["Vom", "dieses"], table) == ["Von", "dem", "dies", "-es"]
        assert merge_german(["Von", "dem", "dies", "-es"], table) == ["Vom", "dieses"]

    def test_from_file(self, tmp_path):
        """Rule files are read as UTF-8."""
        path = tmp_path / "rules.tsv"
        path.write_text("übers\tüber das\n", encoding="utf-8")
        table = SplitRuleTable.from_file(path)
        assert split_contractions(["Übers"], table) == ["Über", "das"]

    def test_missing_file(self, tmp_path):
        """A missing rule file raises ConfigurationError."""
        with pytest.raises(ConfigurationError, match="cannot read"):
            SplitRuleTable.from_file(tmp_path / "absent.tsv")

    @pytest.mark.parametrize(
        ("lines", "message"),
        [
            (["zur zu der"], "expected"),
            (["zur\tzu"], "expected"),
            (["zur\tzu der", "zur\tzu die"], "duplicate"),
            (["zur\tzu der", "zurr\tzu der"], "share a replacement"),
            (["ab\tx y", "abc\tx y z"], "prefix"),
            (["am\tan dem", "dam\tam x"], "surface form"),
        ],
    )
    def test_invalid_tables(self, lines, message):
        """Malformed or ambiguous tables raise ConfigurationError."""
        with pytest.raises(ConfigurationError, match=message):
            SplitRuleTable.from_lines(lines)

    def test_error_names_line(self):
        """Parse errors point at the offending line."""
        with pytest.raises(ConfigurationError, match="rules.tsv:2:"):
            SplitRuleTable.from_lines(["am\tan dem", "broken"], "rules.tsv")


class TestPunctuation:
    """Test the punctuation fixes."""

    def test_odd_quotes(self):
        """An unmatched quote loses its last occurrence."""
        assert fix_punctuation(['"', "Hallo", '"', "Welt", '"']) == ['"', "Hallo", '"', "Welt"]

    def test_even_quotes_kept(self):
        """Balanced quotes are left alone."""
        tokens = ['"', "Hallo", '"']
        assert fix_punctuation(tokens) == tokens

    def test_collapse_repeats(self):
        """Runs of one terminal mark collapse; different marks stay."""
        assert fix_punctuation(["Ja", "gut", "!", "!", "?", "?"]) == ["Ja", "gut", "!", "?"]

    def test_other_marks_not_collapsed(self):
        """Repeated commas, semicolons and colons are left alone."""
        tokens = ["Ja", ",", ",", "gut", ";", ";", ":", ":"]
        assert fix_punctuation(tokens) == tokens

    def test_quotes_not_collapsed(self):
        """Quotes are not collapsible marks."""
        assert fix_punctuation(['"', '"']) == ['"', '"']

    def test_period_from_mt(self):
        """A final MT period is restored when the output lacks a terminal mark."""
        assert fix_punctuation(["Das", "ist", "gut"], ["Das", "ist", "gut", "."]) == [
            "Das",
            "ist",
            "gut",
            ".",
        ]
        assert fix_punctuation(["Wirklich", "?"], ["Wirklich", "."]) == ["Wirklich", "?"]
        assert fix_punctuation(["Gut"], ["Gut", "!"]) == ["Gut"]

    def test_empty(self):
        """Empty input stays empty unless the MT ended with a period."""
        assert fix_punctuation([]) == []
        assert fix_punctuation([], ["."]) == ["."]

    @pytest.mark.parametrize(
        ("tokens", "mt"),
        [
            (['"', "a", ".", ".", '"', '"'], ["a", "."]),
            (["a", ";", ";", ":"], None),
            (["a"], ["b", "."]),
        ],
    )
    def test_idempotent(self, tokens, mt):
        """Fixing fixed output changes nothing."""
        once = fix_punctuation(tokens, mt)
        assert fix_punctuation(once, mt) == once


class TestVocabulary:
    """Test vocabulary construction and encoding."""

    def test_reserved_block(self):
        """Reserved tokens come first in a fixed order."""
        vocab = build_vocab([["a", "a", "b"]], max_size=6)
        assert [vocab.token(i) for i in range(len(vocab))] == [*RESERVED, "a", "b"]
        assert (PAD_ID, BOS_ID, EOS_ID, UNK_ID) == (0, 1, 2, 3)

    def test_frequency_cutoff(self):
        """The most frequent tokens are kept, ties broken by string."""
        vocab = build_vocab([["c", "b", "a", "c"]], max_size=6)
        assert vocab.corpus_tokens == ["c", "a"]

    def test_unknown_encodes_to_unk(self):
        """Unseen tokens map to the unknown id."""
        vocab = build_vocab([["a", "b"]], max_size=10)
        assert encode_tokens(["a", "zzz"], vocab, add_bos=True, add_eos=True) == [
            BOS_ID,
            4,
            UNK_ID,
            EOS_ID,
        ]

    def test_decode_strips_specials(self):
        """Decoding drops padding and sentence markers unless asked not to."""
        vocab = build_vocab([["a", "b"]], max_size=10)
        ids = [BOS_ID, 4, 5, EOS_ID, PAD_ID]
        assert decode_ids(ids, vocab) == ["a", "b"]
        assert decode_ids(ids, vocab, strip_special=False)[0] == RESERVED[BOS_ID]

    def test_bad_id(self):
        """Ids outside the vocabulary raise VocabularyError."""
        vocab = build_vocab([["a"]], max_size=10)
        with pytest.raises(VocabularyError, match="out of range"):
            vocab.token(len(vocab))
        with pytest.raises(VocabularyError):
            vocab.decode([-1])

    def test_extend(self):
        """Extra reserved tokens go right after the standard block."""
        vocab = build_vocab([["a"]], max_size=10).extend(["<keep>", "<delete>"])
        assert vocab.token_id("<keep>") == 4
        assert vocab.token_id("<delete>") == 5
        assert vocab.token_id("a") == 6
        with pytest.raises(ConfigurationError):
            vocab.extend(["<keep>"])

    def test_collisions(self):
        """Corpus tokens may not repeat or shadow reserved ones."""
        with pytest.raises(ConfigurationError, match="collides"):
            Vocabulary(["<unk>"])
        with pytest.raises(ConfigurationError, match="duplicate"):
            Vocabulary(["a", "a"])

    def test_build_errors(self):
        """Too small sizes and empty corpora raise UsageError."""
        with pytest.raises(UsageError):
            build_vocab([["a"]], max_size=4)
        with pytest.raises(UsageError):
            build_vocab([[]], max_size=10)

    def test_save_load(self, tmp_path):
        """A saved vocabulary loads back with the same ids."""
        vocab = build_vocab([["das", "Haus", "das"]], max_size=10)
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        assert Vocabulary.load(path) == vocab

    def test_load_missing(self, tmp_path):
        """A missing file raises DatasetError."""
        with pytest.raises(DatasetError):
            Vocabulary.load(tmp_path / "absent.txt")
