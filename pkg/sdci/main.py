"""Command-line entry point: ``sdci gen | train | eval | report``."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sdci import config
from sdci.evaluation.evaluate import evaluate_split
from sdci.evaluation.report import load_reports, render_table
from sdci.io.checkpoints import load_checkpoint
from sdci.io.datasets import read_dataset
from sdci.model.sdci import SDCIModel
from sdci.schemas.experiment import ExperimentConfig
from sdci.schemas.presets import get_preset, preset_names
from sdci.simulators.dataset import SPLITS, Dataset, generate_dataset
from sdci.tensor.tensor import precision
from sdci.training.trainer import fit
from sdci.utils.error_handling import EXIT_USAGE, ConfigurationError, handle_command_errors
from sdci.utils.sentry import init_sentry

logger = logging.getLogger(__name__)

CONFIG_SNAPSHOT = "config.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdci", description="State-dependent causal inference experiments")
    sub = parser.add_subparsers(dest="command", metavar="{gen,train,eval,report}")

    def add_config_args(p: argparse.ArgumentParser, required: bool = True) -> None:
        group = p.add_mutually_exclusive_group(required=required)
        group.add_argument("--config", type=Path, help="Experiment config JSON")
        group.add_argument("--preset", choices=preset_names(), help="Named experiment preset")
        p.add_argument("--full", action="store_true", help="Use full-scale preset sizes instead of desk scale")

    gen = sub.add_parser("gen", help="Generate a dataset from an experiment config")
    add_config_args(gen)
    gen.add_argument("--out", type=Path, required=True, help="Output dataset directory")
    gen.add_argument("--workers", type=int, default=None, help="Generation threads (default SDCI_NUM_THREADS)")

    train = sub.add_parser("train", help="Train a model on a generated dataset")
    add_config_args(train, required=False)
    train.add_argument("--data", type=Path, required=True, help="Dataset directory")
    train.add_argument("--out", type=Path, required=True, help="Run directory for checkpoints and metric logs")
    train.add_argument("--resume", type=Path, default=None, help="Checkpoint to continue from")

    ev = sub.add_parser("eval", help="Evaluate a checkpoint (or an untrained config) on one split")
    source = ev.add_mutually_exclusive_group(required=True)
    source.add_argument("--ckpt", type=Path, help="Checkpoint file")
    source.add_argument("--config", type=Path, help="Experiment config JSON, evaluated without training")
    source.add_argument("--preset", choices=preset_names(), help="Named preset, evaluated without training")
    ev.add_argument("--full", action="store_true", help=argparse.SUPPRESS)
    ev.add_argument("--data", type=Path, required=True, help="Dataset directory")
    ev.add_argument("--split", choices=SPLITS, default="test")
    ev.add_argument("--label", default=None, help="Row label in rendered tables")
    ev.add_argument("--out", type=Path, required=True, help="MetricReport JSON output path")

    rep = sub.add_parser("report", help="Render metric JSON files into a table")
    rep.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True, help="MetricReport JSON files")
    rep.add_argument("--splits", nargs="+", default=["train", "test"], help="Split columns to show")
    return parser


def _usage() -> str:
    return build_parser().format_usage()


def load_experiment(path: Optional[Path] = None, preset: Optional[str] = None, full: bool = False) -> ExperimentConfig:
    if preset is not None:
        return get_preset(preset, desk=not full)
    if path is None:
        raise ConfigurationError("either --config or --preset is required")
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
    return ExperimentConfig.model_validate(raw)


def check_dataset_matches(dataset: Dataset, experiment: ExperimentConfig) -> None:
    manifest = dataset.manifest
    expected = {
        "scenario": experiment.scenario,
        "regime": experiment.regime,
        "num_objects": experiment.num_objects,
        "num_timesteps": experiment.num_timesteps,
        "num_states": experiment.num_states,
        "num_edge_types": experiment.num_edge_types,
    }
    found = {key: getattr(manifest, key) for key in expected}
    mismatched = {key: (found[key], value) for key, value in expected.items() if found[key] != value}
    if mismatched:
        details = ", ".join(
            f"{key} is {have} in the dataset, {want} in the config" for key, (have, want) in mismatched.items()
        )
        raise ConfigurationError(f"dataset does not match the experiment config: {details}")


def _write_json(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload + "\n", encoding="utf-8")


@handle_command_errors("Generate dataset", usage=_usage)
def cmd_gen(args: argparse.Namespace) -> None:
    experiment = load_experiment(args.config, args.preset, args.full)
    dataset = generate_dataset(experiment, args.out, workers=args.workers)
    print(f"Wrote {', '.join(f'{k}={len(v)}' for k, v in dataset.splits.items())} samples to {args.out}")


@handle_command_errors("Train model", usage=_usage)
def cmd_train(args: argparse.Namespace) -> None:
    if args.resume is not None:
        experiment = load_checkpoint(args.resume).experiment
    else:
        experiment = load_experiment(args.config, args.preset, args.full)
    dataset = read_dataset(args.data)
    check_dataset_matches(dataset, experiment)
    _write_json(args.out / CONFIG_SNAPSHOT, experiment.model_dump_json(indent=2))
    result = fit(dataset, experiment, out_dir=args.out, resume=args.resume)
    print(f"Trained {experiment.name}: best epoch {result.best_epoch}, validation edge accuracy {result.best_score}")


@handle_command_errors("Evaluate model", usage=_usage)
def cmd_eval(args: argparse.Namespace) -> None:
    if args.ckpt is not None:
        loaded = load_checkpoint(args.ckpt)
        experiment, model = loaded.experiment, loaded.model
    else:
        experiment = load_experiment(args.config, args.preset, args.full)
        with precision(experiment.precision):
            model = SDCIModel(experiment.build_model_config(), seed=experiment.schedule.seed)
    dataset = read_dataset(args.data)
    check_dataset_matches(dataset, experiment)
    with precision(experiment.precision):
        report = evaluate_split(model, dataset[args.split], experiment, split=args.split, label=args.label)
    _write_json(args.out, report.model_dump_json(indent=2))
    print(f"{report.label} [{report.split}]: edge accuracy {report.edge_accuracy.format(digits=2)}")


@handle_command_errors("Render report", usage=_usage)
def cmd_report(args: argparse.Namespace) -> None:
    print(render_table(load_reports(args.inputs), splits=tuple(args.splits)))


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    if init_sentry(command=args.command):
        logger.info("Sentry initialized")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
