"""Command-line interface.

Subcommands: synth-data, pretrain, compare, extract, train-head, report.
Settings resolve as defaults < ``--config`` JSON file < explicit flags. Logs
go to stderr; stdout carries only deterministic output (tables, seeds and
paths written).

Exit codes: 0 success, 1 usage, 2 data, 3 numeric/training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Callable, NoReturn, Sequence

from .config import PipelineConfig, load_config_file
from .const import (
    CONF_BATCH_SIZE,
    CONF_CUT_INDEX,
    CONF_DATA_SEED,
    CONF_FINETUNE_EPOCHS,
    CONF_FREEZE_PREFIX,
    CONF_IMAGE_SIZE,
    CONF_LEARNING_RATE,
    CONF_MODEL_OUT,
    CONF_NOISE,
    CONF_OUT,
    CONF_PER_CLASS,
    CONF_PRESET,
    CONF_PRETRAIN_EPOCHS,
    CONF_RANDOM_INIT,
    CONF_SEED,
    CONF_SOFTMAX_EPOCHS,
    CONF_SOFTMAX_LR,
    CONF_SOURCE,
    CONF_SOURCE_NOISE,
    CONF_SOURCE_SEED,
    CONF_SPLIT_SEED,
    CONF_SVM_C,
    CONF_SVM_MAX_PASSES,
    CONF_SVM_TOL,
    CONF_TARGET,
    CONF_WEIGHTS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DATA_SEED,
    DEFAULT_FINETUNE_EPOCHS,
    DEFAULT_FREEZE_PREFIX,
    DEFAULT_IMAGE_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NOISE,
    DEFAULT_PER_CLASS,
    DEFAULT_PRESET,
    DEFAULT_PRETRAIN_EPOCHS,
    DEFAULT_REPORT_PATH,
    DEFAULT_SEED,
    DEFAULT_SOFTMAX_EPOCHS,
    DEFAULT_SOFTMAX_LR,
    DEFAULT_SOURCE_NOISE,
    DEFAULT_SOURCE_SEED,
    DEFAULT_SPLIT_SEED,
    DEFAULT_SVM_C,
    DEFAULT_SVM_TOL,
    DOMAIN,
    EXIT_DATA,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    HEAD_SVM,
    HEADS,
)
from .dataset_io import synthesize_dataset, write_dataset_tree
from .errors import (
    ConfigError,
    DataError,
    TransferError,
    UsageError,
)
from .presets import preset_names
from .report import read_report, render_table
from .transfer_pipeline import (
    TransferPipeline,
    load_target_dataset,
    run_extract,
    run_train_head,
)

_LOGGER = logging.getLogger(__name__)

# Parsed attributes that are not pipeline settings
_NON_SETTINGS = {"command", "config", "verbose", "features", "head", "report_path", "out_dir"}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _add(
    parser: argparse.ArgumentParser,
    flag: str,
    dest: str,
    help_text: str,
    default: Any = None,
    **kwargs: Any,
) -> None:
    if kwargs.get("required"):
        suffix = "required"
    else:
        suffix = f"default: {'none' if default is None else default}"
    parser.add_argument(flag, dest=dest, help=f"{help_text} ({suffix})", **kwargs)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with flat settings (default: none)")
    parser.add_argument(
        "--verbose", action="store_true", help="log debug detail to stderr (default: off)"
    )


def _add_data(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--image-size", CONF_IMAGE_SIZE, "network input height and width", DEFAULT_IMAGE_SIZE, type=int)
    _add(parser, "--per-class", CONF_PER_CLASS, "synthetic samples per class", DEFAULT_PER_CLASS, type=int)


def _add_network(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--preset", CONF_PRESET, "network preset", DEFAULT_PRESET, choices=preset_names())
    _add(parser, "--cut-index", CONF_CUT_INDEX, "layer whose activations are the features", "last layer", type=int)
    _add(parser, "--lr", CONF_LEARNING_RATE, "SGD learning rate", DEFAULT_LEARNING_RATE, type=float)
    _add(parser, "--batch-size", CONF_BATCH_SIZE, "SGD minibatch size", DEFAULT_BATCH_SIZE, type=int)
    _add(parser, "--seed", CONF_SEED, "training seed", DEFAULT_SEED, type=int)


def _add_heads(parser: argparse.ArgumentParser) -> None:
    _add(parser, "--svm-c", CONF_SVM_C, "SVM soft-margin penalty C", DEFAULT_SVM_C, type=float)
    _add(parser, "--svm-tol", CONF_SVM_TOL, "SVM KKT tolerance", DEFAULT_SVM_TOL, type=float)
    _add(parser, "--svm-max-passes", CONF_SVM_MAX_PASSES, "SVM pass limit", "10 x samples", type=int)
    _add(parser, "--softmax-lr", CONF_SOFTMAX_LR, "softmax learning rate", DEFAULT_SOFTMAX_LR, type=float)
    _add(parser, "--softmax-epochs", CONF_SOFTMAX_EPOCHS, "softmax epochs", DEFAULT_SOFTMAX_EPOCHS, type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="trashnet-transfer",
        description="Transfer learning with softmax and SVM heads on desk-scale CNNs.",
        argument_default=argparse.SUPPRESS,
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    synth = sub.add_parser(
        "synth-data", help="write a synthetic class tree of PPM images", argument_default=argparse.SUPPRESS
    )
    _add_common(synth)
    synth.add_argument("--out", dest="out_dir", required=True, help="output directory (required)")
    _add_data(synth)
    _add(synth, "--noise", CONF_NOISE, "uniform noise amplitude", DEFAULT_NOISE, type=float)
    _add(synth, "--seed", CONF_DATA_SEED, "generator seed", DEFAULT_DATA_SEED, type=int)

    pretrain = sub.add_parser(
        "pretrain", help="train a preset on the source dataset", argument_default=argparse.SUPPRESS
    )
    _add_common(pretrain)
    _add_network(pretrain)
    _add_data(pretrain)
    _add(pretrain, "--epochs", CONF_PRETRAIN_EPOCHS, "pretraining epochs", DEFAULT_PRETRAIN_EPOCHS, type=int)
    _add(pretrain, "--source", CONF_SOURCE, "source class tree or dataset container", "synthetic")
    _add(pretrain, "--source-seed", CONF_SOURCE_SEED, "synthetic source seed", DEFAULT_SOURCE_SEED, type=int)
    _add(pretrain, "--source-noise", CONF_SOURCE_NOISE, "synthetic source noise", DEFAULT_SOURCE_NOISE, type=float)
    _add(pretrain, "--weights", CONF_WEIGHTS, "weight file to write")

    compare = sub.add_parser(
        "compare", help="fine-tune, then compare softmax and SVM heads", argument_default=argparse.SUPPRESS
    )
    _add_common(compare)
    _add_network(compare)
    _add_data(compare)
    _add_heads(compare)
    _add(compare, "--epochs", CONF_FINETUNE_EPOCHS, "fine-tuning epochs (0 disables)", DEFAULT_FINETUNE_EPOCHS, type=int)
    _add(compare, "--freeze-prefix", CONF_FREEZE_PREFIX, "leading layers kept frozen", DEFAULT_FREEZE_PREFIX, type=int)
    _add(compare, "--split-seed", CONF_SPLIT_SEED, "train/test split seed", DEFAULT_SPLIT_SEED, type=int)
    _add(compare, "--target", CONF_TARGET, "target class tree or dataset container", "synthetic")
    _add(compare, "--data-seed", CONF_DATA_SEED, "synthetic target seed", DEFAULT_DATA_SEED, type=int)
    _add(compare, "--noise", CONF_NOISE, "synthetic target noise", DEFAULT_NOISE, type=float)
    _add(compare, "--weights", CONF_WEIGHTS, "pretrained weight file")
    _add(compare, "--out", CONF_OUT, "report JSON path", DEFAULT_REPORT_PATH)
    _add(compare, "--model-out", CONF_MODEL_OUT, "also write the fine-tuned model and heads here")
    _add(compare, "--random-init", CONF_RANDOM_INIT, "add rows for randomly initialized weights", False, action="store_true")

    extract = sub.add_parser(
        "extract", help="write features of a dataset to a container", argument_default=argparse.SUPPRESS
    )
    _add_common(extract)
    _add_data(extract)
    _add(extract, "--weights", CONF_WEIGHTS, "weight file")
    _add(extract, "--target", CONF_TARGET, "class tree or dataset container", "synthetic")
    _add(extract, "--data-seed", CONF_DATA_SEED, "synthetic dataset seed", DEFAULT_DATA_SEED, type=int)
    _add(extract, "--noise", CONF_NOISE, "synthetic dataset noise", DEFAULT_NOISE, type=float)
    _add(extract, "--cut-index", CONF_CUT_INDEX, "layer whose activations are the features", "from weight file", type=int)
    _add(extract, "--out", CONF_OUT, "feature container to write")

    head = sub.add_parser(
        "train-head", help="train one classifier head on a feature file", argument_default=argparse.SUPPRESS
    )
    _add_common(head)
    head.add_argument("--features", required=True, help="feature container from extract (required)")
    head.add_argument("--head", choices=HEADS, help=f"head to train (default: {HEAD_SVM})")
    _add(head, "--seed", CONF_SEED, "head seed", DEFAULT_SEED, type=int)
    _add_heads(head)
    _add(head, "--out", CONF_OUT, "head container to write")

    report = sub.add_parser(
        "report", help="render a report JSON as a table", argument_default=argparse.SUPPRESS
    )
    _add_common(report)
    report.add_argument("report_path", help="report JSON written by compare")

    return parser


def _settings(args: argparse.Namespace) -> PipelineConfig:
    values: dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        values.update(load_config_file(config_path))
    values.update({k: v for k, v in vars(args).items() if k not in _NON_SETTINGS})
    return PipelineConfig.from_mapping(values)


def _require_out(args: argparse.Namespace, command: str) -> None:
    # The report path default must not be reused for other artifacts
    if getattr(args, CONF_OUT, None) is None:
        raise UsageError(f"{command} requires --out")


def _echo_seeds(config: PipelineConfig, *names: str) -> None:
    seeds = config.seeds()
    for name in names:
        print(f"{name}={seeds[name]}")


def _cmd_synth_data(args: argparse.Namespace) -> int:
    config = _settings(args)
    dataset = synthesize_dataset(
        per_class=config.per_class,
        image_size=config.image_size,
        noise_level=config.noise_level,
        seed=config.data_seed,
    )
    written = write_dataset_tree(dataset, args.out_dir)
    _echo_seeds(config, "data_seed")
    print(f"images={len(written)} classes={dataset.class_count}")
    print(f"out: {args.out_dir}")
    return EXIT_OK


def _cmd_pretrain(args: argparse.Namespace) -> int:
    config = _settings(args)
    path = TransferPipeline(config).run_pretrain()
    _echo_seeds(config, "seed", "source_seed")
    print(f"weights: {path}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _settings(args)
    if config.weights is None:
        raise UsageError("compare requires --weights")
    report = TransferPipeline(config).run_finetune_and_compare()
    sys.stdout.write(render_table(report))
    if config.out is not None:
        print(f"report: {config.out}")
    if config.model_out is not None:
        print(f"model: {config.model_out}")
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    config = _settings(args)
    _require_out(args, "extract")
    if config.weights is None:
        raise UsageError("extract requires --weights")
    assert config.out is not None
    dataset = load_target_dataset(config)
    path = run_extract(config.weights, dataset, config.out, config.cut_index)
    _echo_seeds(config, "data_seed")
    print(f"features: {path}")
    return EXIT_OK


def _cmd_train_head(args: argparse.Namespace) -> int:
    config = _settings(args)
    _require_out(args, "train-head")
    assert config.out is not None
    name = getattr(args, "head", HEAD_SVM)
    path, head = run_train_head(args.features, name, config.heads, config.out)
    _echo_seeds(config, "seed")
    print(f"head={head.name} classes={head.class_count} features={head.feature_dim}")
    print(f"out: {path}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    if getattr(args, "config", None) is not None:
        raise UsageError("report does not take --config")
    sys.stdout.write(render_table(read_report(args.report_path)))
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "synth-data": _cmd_synth_data,
    "pretrain": _cmd_pretrain,
    "compare": _cmd_compare,
    "extract": _cmd_extract,
    "train-head": _cmd_train_head,
    "report": _cmd_report,
}


def _configure_logging(verbose: bool) -> None:
    logger = logging.getLogger(DOMAIN)
    for handler in list(logger.handlers):
        if getattr(handler, "_cli_handler", False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s"))
    handler._cli_handler = True  # type: ignore[attr-defined]
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def exit_code_for(err: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(err, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(err, (DataError, OSError)):
        return EXIT_DATA
    # TrainingError, DomainError, SpecError and pipeline misuse
    return EXIT_NUMERIC


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    command = getattr(args, "command", None)
    if command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(getattr(args, "verbose", False))
    try:
        return COMMANDS[command](args)
    except (TransferError, OSError) as err:
        stage = getattr(err, "stage", None) or command
        print(f"error [{stage}]: {err}", file=sys.stderr)
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
