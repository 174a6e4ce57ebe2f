"""German pre/post-processing, punctuation fixes and vocabularies."""

from multiseq.textproc.german import (
    SplitRule,
    SplitRuleTable,
    default_rules,
    merge_german,
    split_contractions,
    split_german,
    split_pronoun_endings,
)
from multiseq.textproc.punctuation import fix_punctuation
from multiseq.textproc.vocab import (
    BOS,
    BOS_ID,
    EOS,
    EOS_ID,
    PAD,
    PAD_ID,
    RESERVED,
    UNK,
    UNK_ID,
    Vocabulary,
    build_vocab,
    decode_ids,
    encode_tokens,
)

__all__ = [
    "BOS",
    "BOS_ID",
    "EOS",
    "EOS_ID",
    "PAD",
    "PAD_ID",
    "RESERVED",
    "UNK",
    "UNK_ID",
    "SplitRule",
    "SplitRuleTable",
    "Vocabulary",
    "build_vocab",
    "decode_ids",
    "default_rules",
    "encode_tokens",
    "fix_punctuation",
    "merge_german",
    "split_contractions",
    "split_german",
    "split_pronoun_endings",
]
