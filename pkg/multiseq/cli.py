"""Command-line interface: ``multiseq <command> [options]``.

Every command accepts ``--config FILE`` with ``key = value`` lines named like
the command's long options; options given on the command line win. Errors
map to exit codes 1 (usage), 2 (data) and 3 (numeric).
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Callable, Optional

from multiseq import __version__
from multiseq.bitoken import (
    ArpaModel,
    BitokenScheme,
    Clustering,
    bitoken_corpus,
    brown_cluster,
    build_class_corpus,
    class_pair_corpus,
    classify_corpus,
    read_alignments,
    train_class_lm,
)
from multiseq.config import read_config_file
from multiseq.editops import apply_edits, derive_edits, read_scripts
from multiseq.errors import ConfigurationError, MultiseqError, UsageError
from multiseq.log import configure_logging
from multiseq.numerics import precision
from multiseq.pipeline.config import TrainConfig
from multiseq.pipeline.dataset import DatasetSpec, read_lines
from multiseq.pipeline.evaluate import METRICS, comparison_table, evaluate_files
from multiseq.pipeline.trainer import train
from multiseq.pipeline.translate import TranslateOptions, translate_files
from multiseq.textproc.german import SplitRuleTable, default_rules
from multiseq.textproc.punctuation import fix_punctuation
from multiseq.textproc.vocab import build_vocab

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], None]
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


# I/O helpers


def _read_corpus(path: str) -> list[list[str]]:
    return [line.split() for line in read_lines(path)]


def _write_lines(path: Optional[str], lines: Iterable[str]) -> None:
    text = "".join(f"{line}\n" for line in lines)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _rules(args: argparse.Namespace) -> SplitRuleTable:
    return SplitRuleTable.from_file(args.rules) if args.rules else default_rules()


# commands


def cmd_train(args: argparse.Namespace) -> None:
    images = {
        "image_ids": args.image_ids,
        "image_features": args.image_features,
        "image_index": args.image_index,
    }
    common = {
        "task": args.task,
        "tied_sources": tuple(args.tied) if args.tied else None,
        "split_contractions": args.split_contractions,
        "split_endings": args.split_endings,
        "rules": args.rules,
    }
    spec = DatasetSpec(sources=tuple(args.source), targets=tuple(args.target), **images, **common)
    valid_spec = None
    if args.valid_source:
        valid_images = dict(images, image_ids=args.valid_image_ids) if args.image_ids else {}
        valid_spec = DatasetSpec(
            sources=tuple(args.valid_source),
            targets=tuple(args.valid_target or ()),
            **valid_images,
            **common,
        )
    train_config = TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        max_steps=args.max_steps,
        validation_interval=args.validation_interval,
        patience=args.patience,
        seed=args.seed,
        learning_rate=args.learning_rate,
        beam_width=args.beam_width,
        max_length=args.max_length,
        checkpoint_dir=args.checkpoint_dir,
        prefetch=args.prefetch,
        progress=args.progress,
    )
    model_options: dict[str, Any] = {
        "embedding_dim": args.embedding_dim,
        "hidden_dim": args.hidden_dim,
        "attention_dim": args.attention_dim,
        "dropout": args.dropout,
        "l2": args.l2,
        "share_encoder_weights": args.share_encoders,
        "encoders_in_initial_state": not args.image_only,
        "init_scale": args.init_scale,
    }
    with precision(args.precision):
        result = train(spec, train_config, model_options, valid_spec, args.max_vocab)
    _write_lines(
        None,
        [
            f"best checkpoint\t{result.best_checkpoint}",
            f"best validation BLEU\t{100 * result.best_bleu:.2f}",
            f"final BLEU (beam {train_config.beam_width})\t{100 * result.final_bleu:.2f}",
            f"updates\t{result.steps}",
            f"training log\t{result.log_path}",
        ],
    )


def cmd_translate(args: argparse.Namespace) -> None:
    options = TranslateOptions(beam_width=args.beam_width, max_length=args.max_length)
    with precision(args.precision):
        outputs = translate_files(
            args.checkpoint,
            args.source,
            options,
            image_ids=args.image_ids,
            image_features=args.image_features,
            image_index=args.image_index,
        )
    _write_lines(args.output, (" ".join(tokens) for tokens in outputs))


def _paired(left: list[list[str]], right: list[list[str]], names: tuple[str, str]) -> None:
    if len(left) != len(right):
        msg = f"{names[0]} has {len(left)} lines but {names[1]} has {len(right)}"
        raise UsageError(msg)


def cmd_ape_derive(args: argparse.Namespace) -> None:
    mt, pe = _read_corpus(args.mt), _read_corpus(args.pe)
    _paired(mt, pe, (args.mt, args.pe))
    _write_lines(args.output, (derive_edits(m, p).to_text() for m, p in zip(mt, pe)))


def cmd_ape_apply(args: argparse.Namespace) -> None:
    mt = _read_corpus(args.mt)
    scripts = read_scripts(read_lines(args.scripts))
    if len(mt) != len(scripts):
        msg = f"{args.mt} has {len(mt)} lines but {args.scripts} has {len(scripts)}"
        raise UsageError(msg)
    table = _rules(args) if args.postprocess else None
    out = []
    for tokens, script in zip(mt, scripts):
        edited = apply_edits(tokens, script)
        if table is not None:
            edited = fix_punctuation(table.merge(edited), table.merge(tokens))
        out.append(" ".join(edited))
    _write_lines(args.output, out)


def cmd_score(args: argparse.Namespace) -> None:
    names = args.name or []
    if names and len(names) != len(args.hyp):
        msg = f"{len(names)} system names for {len(args.hyp)} hypothesis files"
        raise UsageError(msg)
    metrics = args.metric or ["bleu"]
    reports = [
        evaluate_files(hyp, args.ref, metrics, args.macro, names[i] if names else None)
        for i, hyp in enumerate(args.hyp)
    ]
    if args.sentences:
        if len(reports) != 1:
            msg = "--sentences works with a single hypothesis file"
            raise UsageError(msg)
        Path(args.sentences).write_text(reports[0].sentence_table(), encoding="utf-8")
    if len(reports) == 1:
        _write_lines(None, [reports[0].format()])
    else:
        sys.stdout.write(comparison_table(reports))


def cmd_preprocess_de(args: argparse.Namespace) -> None:
    table = _rules(args)
    corpus = _read_corpus(args.input)
    endings, contractions = not args.no_endings, not args.no_contractions
    out = (
        " ".join(table.split(s, case_endings=endings, contractions=contractions)) for s in corpus
    )
    _write_lines(args.output, out)


def cmd_postprocess_de(args: argparse.Namespace) -> None:
    table = _rules(args)
    corpus = _read_corpus(args.input)
    mt = _read_corpus(args.mt) if args.mt else None
    if mt is not None:
        _paired(corpus, mt, (args.input, args.mt))
    out = []
    for index, sentence in enumerate(corpus):
        merged = table.merge(sentence)
        if not args.no_punctuation:
            merged = fix_punctuation(merged, mt[index] if mt is not None else None)
        out.append(" ".join(merged))
    _write_lines(args.output, out)


def _parallel(args: argparse.Namespace) -> tuple[list[list[str]], list[list[str]], list[Any]]:
    sources, targets = _read_corpus(args.source), _read_corpus(args.target)
    alignments = read_alignments(read_lines(args.alignment))
    return sources, targets, alignments


def cmd_bitoken_extract(args: argparse.Namespace) -> None:
    sources, targets, alignments = _parallel(args)
    if (args.source_classes is None) != (args.target_classes is None):
        msg = "--source-classes and --target-classes go together"
        raise UsageError(msg)
    if args.source_classes:
        corpus = class_pair_corpus(
            sources,
            targets,
            alignments,
            Clustering.load(args.source_classes),
            Clustering.load(args.target_classes),
        )
    else:
        corpus = bitoken_corpus(sources, targets, alignments)
    _write_lines(args.output, (" ".join(s) for s in corpus))


def cmd_brown_cluster(args: argparse.Namespace) -> None:
    corpus = _read_corpus(args.input)
    result = brown_cluster(corpus, args.classes, args.max_iterations, args.seed)
    result.clustering.save(args.output)
    logger.info(
        "%d classes after %d passes and %d moves; objective %.6f",
        args.classes,
        result.iterations,
        result.moves,
        result.objective,
    )
    if args.classified:
        classified = classify_corpus(corpus, result.clustering)
        _write_lines(args.classified, (" ".join(s) for s in classified))


def cmd_class_lm(args: argparse.Namespace) -> None:
    if args.scheme:
        if not (args.source and args.target and args.alignment):
            msg = "--scheme needs --source, --target and --alignment"
            raise UsageError(msg)
        sources, targets, alignments = _parallel(args)
        scheme = BitokenScheme.parse(args.scheme)
        built = build_class_corpus(
            scheme, sources, targets, alignments, args.max_iterations, args.seed
        )
        corpus = built.sentences
        if args.clusters_dir:
            directory = Path(args.clusters_dir)
            directory.mkdir(parents=True, exist_ok=True)
            for name, clustering in built.clusterings.items():
                clustering.save(directory / f"{scheme.name}.{name}.classes")
    elif args.input:
        corpus = _read_corpus(args.input)
    else:
        msg = "class-lm needs --input or --scheme"
        raise UsageError(msg)
    model = train_class_lm(corpus, args.order)
    model.write(args.output)
    if args.test:
        perplexity = ArpaModel.read(args.output).perplexity(_read_corpus(args.test))
        _write_lines(None, [f"perplexity\t{perplexity:.4f}"])


def cmd_vocab(args: argparse.Namespace) -> None:
    corpus = [s for path in args.input for s in _read_corpus(path)]
    build_vocab(corpus, args.max_size).save(args.output)


# parser


def _add_train(sub: argparse._SubParsersAction) -> argparse.ArgumentParser:
    p = _command(sub, "train", "train a multi-encoder model")
    p.add_argument("--task", choices=("ape", "mmt", "clc"), required=True)
    p.add_argument("--source", action="append", required=True, help="source stream, repeatable")
    p.add_argument("--target", action="append", default=[], help="target stream, repeatable")
    p.add_argument("--tied", type=int, action="append", help="source stream in target language")
    p.add_argument("--valid-source", action="append")
    p.add_argument("--valid-target", action="append")
    p.add_argument("--image-ids")
    p.add_argument("--image-features")
    p.add_argument("--image-index")
    p.add_argument("--valid-image-ids")
    p.add_argument("--split-contractions", action="store_true")
    p.add_argument("--split-endings", action="store_true")
    p.add_argument("--rules", help="split-rule table replacing the packaged one")
    p.add_argument("--max-vocab", type=int, default=30000)
    p.add_argument("--embedding-dim", type=int, default=300)
    p.add_argument("--hidden-dim", type=int, default=500)
    p.add_argument("--attention-dim", type=int)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-8)
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument(
        "--share-encoders",
        action="store_true",
        help="one encoder for all sources (always on for clc)",
    )
    p.add_argument("--image-only", action="store_true", help="initial state from the image only")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--max-epochs", type=int, default=10)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--validation-interval", type=int, default=1000)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--beam-width", type=int, default=10)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("--checkpoint-dir", default="checkpoints")
    p.add_argument("--prefetch", type=int, default=0)
    p.add_argument("--progress", action="store_true")
    p.add_argument("--precision", type=int, choices=(32, 64), default=32)
    p.set_defaults(handler=cmd_train)
    return p


def _add_translate(sub: argparse._SubParsersAction) -> argparse.ArgumentParser:
    p = _command(sub, "translate", "decode input streams with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", action="append", required=True)
    p.add_argument("--image-ids")
    p.add_argument("--image-features")
    p.add_argument("--image-index")
    p.add_argument("--beam-width", type=int, default=10)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("--precision", type=int, choices=(32, 64), default=32)
    p.add_argument("--output", "-o")
    p.set_defaults(handler=cmd_translate)
    return p


def _add_text_commands(sub: argparse._SubParsersAction) -> list[argparse.ArgumentParser]:
    derive = _command(sub, "ape-derive", "edit scripts from MT and post-edit files")
    derive.add_argument("--mt", required=True)
    derive.add_argument("--pe", required=True)
    derive.add_argument("--output", "-o")
    derive.set_defaults(handler=cmd_ape_derive)

    apply = _command(sub, "ape-apply", "apply edit scripts to MT output")
    apply.add_argument("--mt", required=True)
    apply.add_argument("--scripts", required=True)
    apply.add_argument("--postprocess", action="store_true", help="merge German, fix punctuation")
    apply.add_argument("--rules")
    apply.add_argument("--output", "-o")
    apply.set_defaults(handler=cmd_ape_apply)

    score = _command(sub, "score", "BLEU, TER and HTER reports")
    score.add_argument("--hyp", action="append", required=True, help="hypothesis file, repeatable")
    score.add_argument("--ref", action="append", required=True, help="reference file, repeatable")
    score.add_argument("--metric", action="append", choices=METRICS)
    score.add_argument("--name", action="append", help="system name per --hyp")
    score.add_argument("--macro", action="store_true", help="average TER/HTER per sentence")
    score.add_argument("--sentences", help="write per-sentence scores as TSV")
    score.set_defaults(handler=cmd_score)

    pre = _command(sub, "preprocess-de", "split German contractions and case endings")
    pre.add_argument("--input", "-i", required=True)
    pre.add_argument("--output", "-o")
    pre.add_argument("--rules")
    pre.add_argument("--no-contractions", action="store_true")
    pre.add_argument("--no-endings", action="store_true")
    pre.set_defaults(handler=cmd_preprocess_de)

    post = _command(sub, "postprocess-de", "undo German splits and fix punctuation")
    post.add_argument("--input", "-i", required=True)
    post.add_argument("--output", "-o")
    post.add_argument("--mt", help="MT file whose final periods are restored")
    post.add_argument("--rules")
    post.add_argument("--no-punctuation", action="store_true")
    post.set_defaults(handler=cmd_postprocess_de)

    vocab = _command(sub, "vocab", "build a frequency vocabulary file")
    vocab.add_argument("--input", "-i", action="append", required=True)
    vocab.add_argument("--max-size", type=int, default=30000)
    vocab.add_argument("--output", "-o", required=True)
    vocab.set_defaults(handler=cmd_vocab)
    return [derive, apply, score, pre, post, vocab]


def _add_bitoken_commands(sub: argparse._SubParsersAction) -> list[argparse.ArgumentParser]:
    extract = _command(sub, "bitoken-extract", "bitokens from word-aligned text")
    extract.add_argument("--source", required=True)
    extract.add_argument("--target", required=True)
    extract.add_argument("--alignment", required=True)
    extract.add_argument("--source-classes", help="clustering file for source words")
    extract.add_argument("--target-classes", help="clustering file for target words")
    extract.add_argument("--output", "-o")
    extract.set_defaults(handler=cmd_bitoken_extract)

    cluster = _command(sub, "brown-cluster", "exchange-algorithm Brown clustering")
    cluster.add_argument("--input", "-i", required=True)
    cluster.add_argument("--classes", type=int, required=True)
    cluster.add_argument("--max-iterations", type=int, default=20)
    cluster.add_argument("--seed", type=int)
    cluster.add_argument("--output", "-o", required=True, help="clustering file")
    cluster.add_argument("--classified", help="also write the corpus as class labels")
    cluster.set_defaults(handler=cmd_brown_cluster)

    lm = _command(sub, "class-lm", "Witten-Bell class n-gram LM in ARPA format")
    lm.add_argument("--input", "-i", help="corpus of class labels")
    lm.add_argument("--scheme", help="e.g. 400bi, (200,400), 100bi(200,400), 400tgt")
    lm.add_argument("--source")
    lm.add_argument("--target")
    lm.add_argument("--alignment")
    lm.add_argument("--max-iterations", type=int, default=20)
    lm.add_argument("--seed", type=int)
    lm.add_argument("--clusters-dir", help="save the clusterings the scheme builds")
    lm.add_argument("--order", type=int, default=3)
    lm.add_argument("--test", help="report perplexity on this class corpus")
    lm.add_argument("--output", "-o", required=True)
    lm.set_defaults(handler=cmd_class_lm)
    return [extract, cluster, lm]


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file supplying option defaults")
    common.add_argument("-v", "--verbose", action="count", default=0)
    return common


_COMMON = _common_options()


def _command(sub: argparse._SubParsersAction, name: str, summary: str) -> argparse.ArgumentParser:
    return sub.add_parser(name, help=summary, description=summary, parents=[_COMMON])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiseq",
        description="Multi-encoder translation, post-editing and class language models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_translate(sub)
    _add_text_commands(sub)
    _add_bitoken_commands(sub)
    return parser


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def _config_value(action: argparse.Action, key: str, raw: str) -> Any:
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        lowered = raw.lower()
        if lowered not in _TRUE | _FALSE:
            msg = f"config key {key!r} expects true or false, got {raw!r}"
            raise ConfigurationError(msg)
        return lowered in _TRUE
    convert = action.type if callable(action.type) else str
    repeatable = isinstance(action, argparse._AppendAction)
    try:
        values = [convert(item) for item in (raw.split() if repeatable else [raw])]
    except ValueError as exc:
        msg = f"config key {key!r}: {exc}"
        raise ConfigurationError(msg) from exc
    for value in values:
        if action.choices is not None and value not in action.choices:
            msg = f"config key {key!r}: {value!r} is not one of {list(action.choices)}"
            raise ConfigurationError(msg)
    return values if repeatable else values[0]


def apply_config(command: argparse.ArgumentParser, path: str) -> dict[str, list[Any]]:
    """Install the values of a config file as defaults of ``command``.

    Repeatable options are returned instead: argparse would append command-line
    values to a list default, so the caller fills them in only when the command
    line gives none.
    """
    actions = {a.dest: a for a in command._actions if a.dest not in {"help", "config"}}
    defaults: dict[str, Any] = {}
    lists: dict[str, list[Any]] = {}
    for key, raw in read_config_file(path).items():
        action = actions.get(key)
        if action is None:
            msg = f"{path}: unknown option {key!r} for {command.prog}"
            raise ConfigurationError(msg)
        value = _config_value(action, key, raw)
        action.required = False
        if isinstance(action, argparse._AppendAction):
            lists[key] = value
        else:
            defaults[key] = value
    command.set_defaults(**defaults)
    return lists


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    known, _ = _COMMON.parse_known_args(argv)
    lists: dict[str, list[Any]] = {}
    if known.config:
        commands = _subparsers(parser)
        name = next((arg for arg in argv if arg in commands), None)
        if name is not None:
            lists = apply_config(commands[name], known.config)
    args = parser.parse_args(argv)
    for key, value in lists.items():
        if not getattr(args, key, None):
            setattr(args, key, value)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``multiseq`` command; returns the process exit code."""
    try:
        args = parse_args(argv)
        configure_logging(args.verbose)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments; that code belongs to data errors here
        return 0 if exc.code in (0, None) else UsageError.exit_code
    except MultiseqError as exc:
        configure_logging(0)
        logger.error("%s", exc)  # noqa: TRY400
        return exc.exit_code
    handler: Handler = args.handler
    try:
        handler(args)
    except MultiseqError as exc:
        logger.error("%s", exc)  # noqa: TRY400
        return exc.exit_code
    return 0
