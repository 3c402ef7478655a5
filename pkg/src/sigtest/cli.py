"""Command-line interface.

Four commands: ``fit`` (train and report errors), ``test`` (feature
significance on a CSV), ``calibrate`` (scale estimation only), and
``simulate`` (power/size study on the synthetic benchmark).  Reports are
JSON, with a flat per-feature CSV written next to the JSON when --output is
given.  Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric failure; failures emit a one-line error JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import DegenerateScaleError, add_noise_features
from .data import DataError, Dataset, Standardizer, ingest_csv, train_val_test_split
from .network import TrainConfig, TrainingDivergedError, predict_mse
from .network import train as train_network
from .pipeline import METHODS, MethodConfig, run_significance_test
from .simulation import (
    DgpConfig,
    SimulationReport,
    desk_scale_config,
    power_size_experiment,
)
from .statistic import rank_features

TOOL_NAME = "sigtest"


class ConfigError(ValueError):
    """Invalid command-line configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one CLI invocation."""

    command: str
    seed: int = 0
    output: str | None = None
    input: str | None = None
    target: str | None = None
    split: tuple[float, float, float] = (0.7, 0.2, 0.1)
    standardize: bool = True
    level: float = 0.05
    train: TrainConfig = field(default_factory=TrainConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    replications: int = 50
    full_scale: bool = False
    correlated: bool = False
    noise_std: float = 0.01
    n_train: int | None = None
    n_val: int | None = None
    n_test: int | None = None
    archive: str | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse hook
        raise ConfigError(message)


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input CSV path")
    parser.add_argument("--target", required=True, help="target column name")
    parser.add_argument(
        "--split",
        default="0.7,0.2,0.1",
        help="train,val,test fractions (default 0.7,0.2,0.1)",
    )
    parser.add_argument(
        "--standardize",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="center and scale features using train-split moments (default on)",
    )


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--hidden-units", type=int, default=25)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=150, help="maximum epochs")
    parser.add_argument("--patience", type=int, default=5)
    parser.add_argument("--min-delta", type=float, default=1e-5)
    parser.add_argument("--l1", type=float, default=0.0, help="l1 penalty weight")


def _add_method_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=METHODS, default="discretization")
    parser.add_argument("--level", type=float, default=0.05, help="test level")
    parser.add_argument("--noise-features", type=int, default=3)
    parser.add_argument("--samples", type=int, default=10_000, help="null-law draws")
    parser.add_argument("--ensemble-size", type=int, default=500)
    parser.add_argument("--series-order", type=int, default=2)
    parser.add_argument("--full-covariance", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL_NAME, description=__doc__)
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("fit", "train the network and report errors"),
        ("test", "test feature significance on a CSV"),
        ("calibrate", "estimate the null-distribution scale only"),
    ):
        sub = commands.add_parser(name, help=helptext)
        _add_data_options(sub)
        _add_train_options(sub)
        if name != "fit":
            _add_method_options(sub)
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--output", default=None, help="report JSON path")

    sim = commands.add_parser("simulate", help="power/size study on the benchmark")
    _add_train_options(sim)
    _add_method_options(sim)
    sim.add_argument("--replications", type=int, default=None)
    sim.add_argument("--full-scale", action="store_true",
                     help="100k/10k/10k rows and 250 replications")
    sim.add_argument("--correlated", action="store_true")
    sim.add_argument("--noise-std", type=float, default=0.01)
    sim.add_argument("--train-size", type=int, default=None)
    sim.add_argument("--val-size", type=int, default=None)
    sim.add_argument("--test-size", type=int, default=None)
    sim.add_argument("--archive", default=None, help="per-replication CSV path")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output", default=None, help="report JSON path")
    return parser


def _parse_split(raw: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in raw.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse split fractions {raw!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"split needs three fractions, got {raw!r}")
    if any(p <= 0 for p in parts) or abs(sum(parts) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be positive and sum to 1, got {raw!r}")
    return parts


def _resolve(args: argparse.Namespace) -> RunConfig:
    try:
        train = TrainConfig(
            hidden_units=args.hidden_units,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            max_epochs=args.epochs,
            early_stop_patience=args.patience,
            early_stop_min_delta=args.min_delta,
            l1_weight=args.l1,
            seed=args.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    kwargs: dict = {"command": args.command, "seed": args.seed, "output": args.output,
                    "train": train}
    if args.command != "fit":
        if not 0.0 < args.level < 1.0:
            raise ConfigError(f"--level must lie in (0, 1), got {args.level}")
        try:
            kwargs["method"] = MethodConfig(
                method=args.method,
                noise_features=args.noise_features,
                sample_count=args.samples,
                ensemble_size=args.ensemble_size,
                series_truncation=args.series_order,
                full_covariance=args.full_covariance,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        kwargs["level"] = args.level
    if args.command == "simulate":
        replications = args.replications
        if replications is None:
            replications = 250 if args.full_scale else 50
        if replications < 1:
            raise ConfigError("--replications must be >= 1")
        if args.noise_std < 0:
            raise ConfigError("--noise-std must be >= 0")
        for label in ("train_size", "val_size", "test_size"):
            value = getattr(args, label)
            if value is not None and value < 1:
                raise ConfigError(f"--{label.replace('_', '-')} must be >= 1")
        kwargs.update(
            replications=replications,
            full_scale=args.full_scale,
            correlated=args.correlated,
            noise_std=args.noise_std,
            n_train=args.train_size,
            n_val=args.val_size,
            n_test=args.test_size,
            archive=args.archive,
        )
    else:
        kwargs.update(
            input=args.input,
            target=args.target,
            split=_parse_split(args.split),
            standardize=args.standardize,
        )
    return RunConfig(**kwargs)


def _config_echo(config: RunConfig) -> dict:
    echo = asdict(config)
    echo["split"] = list(config.split)
    return echo


def _prepare_splits(config: RunConfig) -> tuple[Dataset, Dataset, Dataset]:
    data = ingest_csv(config.input, config.target)
    train, val, test = train_val_test_split(
        data, config.split, seed=np.random.SeedSequence((config.seed, 0))
    )
    if config.standardize:
        scaler = Standardizer.fit(train.features)
        train, val, test = scaler.apply(train), scaler.apply(val), scaler.apply(test)
    return train, val, test


def _model_block(fit_result, train_mse: float, val_mse: float, test_mse: float | None) -> dict:
    block = {
        "epochs_run": fit_result.epochs_run,
        "stopped_early": fit_result.stopped_early,
        "hidden_units": fit_result.params.hidden_units,
        "input_dim": fit_result.params.input_dim,
        "train_mse": train_mse,
        "val_mse": val_mse,
    }
    if test_mse is not None:
        block["test_mse"] = test_mse
    return block


def run(config: RunConfig) -> dict:
    """Execute one resolved CLI invocation and return the report dict."""
    report: dict = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "command": config.command,
        "config": _config_echo(config),
    }
    if config.command == "fit":
        train, val, test = _prepare_splits(config)
        fit_result = train_network(train, val, config.train)
        report["data"] = _data_block(config, train, val, test)
        report["model"] = _model_block(
            fit_result,
            train_mse=predict_mse(fit_result.params, train),
            val_mse=predict_mse(fit_result.params, val),
            test_mse=predict_mse(fit_result.params, test),
        )
        return report

    if config.command in ("test", "calibrate"):
        train, val, test = _prepare_splits(config)
        result = run_significance_test(
            train,
            val,
            config.train,
            config.method,
            level=config.level,
            seed=np.random.SeedSequence((config.seed, 1)),
        )
        test_aug = add_noise_features(
            test, config.method.noise_features, np.random.SeedSequence((config.seed, 2))
        )
        checkpoint = int(np.argmin(result.fit.val_loss_history))
        report["data"] = _data_block(config, train, val, test)
        report["model"] = _model_block(
            result.fit,
            train_mse=float(result.fit.train_loss_history[checkpoint]),
            val_mse=float(result.fit.val_loss_history[checkpoint]),
            test_mse=predict_mse(result.fit.params, test_aug),
        )
        report["calibration"] = {
            "b_squared": result.calibration.b_squared,
            "noise_statistics": [float(v) for v in result.calibration.noise_statistics],
            "unscaled_sample_mean": result.calibration.unscaled_sample_mean,
            "noise_feature_count": result.calibration.noise_feature_count,
        }
        report["quantile"] = {
            "level": result.quantile.level,
            "value": result.quantile.value,
            "method": result.quantile.method,
            "sample_count": result.quantile.sample_count,
            "scale_b_squared": result.quantile.scale_b_squared,
        }
        if config.command == "test":
            order = rank_features(result.all_statistics)
            original = [j for j in order if j < len(result.feature_names)]
            ranks = {feature: position + 1 for position, feature in enumerate(original)}
            report["features"] = [
                {
                    "name": result.feature_names[j],
                    "statistic": float(result.statistics[j]),
                    "quantile": result.quantile.value,
                    "rejected": bool(result.rejected[j]),
                    "rank": ranks[j],
                }
                for j in range(len(result.feature_names))
            ]
        return report

    if config.command == "simulate":
        sizes = {}
        if config.n_train is not None:
            sizes["n_train"] = config.n_train
        if config.n_val is not None:
            sizes["n_val"] = config.n_val
        if config.n_test is not None:
            sizes["n_test"] = config.n_test
        common = dict(
            noise_std=config.noise_std,
            correlated=config.correlated,
            seed=config.seed,
            **sizes,
        )
        dgp = DgpConfig(**common) if config.full_scale else desk_scale_config(**common)
        outcome = power_size_experiment(
            dgp,
            config.train,
            config.method,
            level=config.level,
            replications=config.replications,
            seed=config.seed,
            keep_per_replication=config.archive is not None,
        )
        report["results"] = {
            "feature_names": list(outcome.feature_names),
            "methods": list(outcome.method_names),
            "rejection_rates": {
                name: {
                    method: float(outcome.rejection_rates[i, k])
                    for k, method in enumerate(outcome.method_names)
                }
                for i, name in enumerate(outcome.feature_names)
            },
            "replications": outcome.replications,
            "level": outcome.test_level,
            "failed_replications": outcome.failed_replications,
        }
        report["dgp"] = {
            "n_train": dgp.n_train,
            "n_val": dgp.n_val,
            "n_test": dgp.n_test,
            "noise_std": dgp.noise_std,
            "correlated": dgp.correlated,
        }
        if config.archive is not None:
            _write_archive(outcome, config.archive)
        return report

    raise ConfigError(f"unknown command {config.command!r}")


def _data_block(config: RunConfig, train: Dataset, val: Dataset, test: Dataset) -> dict:
    return {
        "input": config.input,
        "target": config.target,
        "feature_names": list(train.column_names),
        "rows": {"train": train.n_rows, "val": val.n_rows, "test": test.n_rows},
        "standardized": config.standardize,
    }


def _feature_csv_rows(report: dict) -> list[list] | None:
    if "features" in report:
        header = ["name", "statistic", "quantile", "rejected", "rank"]
        rows = [
            [f["name"], repr(f["statistic"]), repr(f["quantile"]), f["rejected"], f["rank"]]
            for f in report["features"]
        ]
        return [header] + rows
    if "results" in report:
        header = ["feature", "method", "rejection_rate"]
        rates = report["results"]["rejection_rates"]
        rows = [
            [name, method, repr(rates[name][method])]
            for name in report["results"]["feature_names"]
            for method in report["results"]["methods"]
        ]
        return [header] + rows
    return None


def _write_archive(outcome: SimulationReport, path: str) -> None:
    assert outcome.per_replication is not None
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["replication", "feature", "statistic", "quantile", "b_squared",
             "rejected", "ttest_rejected", "failed"]
        )
        for record in outcome.per_replication:
            for j, name in enumerate(outcome.feature_names):
                if record["failed"]:
                    writer.writerow(
                        [record["replication"], name, "", "", "", "",
                         bool(record["ttest_rejections"][j]), True]
                    )
                else:
                    writer.writerow(
                        [
                            record["replication"],
                            name,
                            repr(float(record["statistics"][j])),
                            repr(float(record["quantile"])),
                            repr(float(record["b_squared"])),
                            bool(record["rejections"][j]),
                            bool(record["ttest_rejections"][j]),
                            False,
                        ]
                    )


def _emit(report: dict, output: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if output is None:
        print(text)
        return
    path = Path(output)
    path.write_text(text + "\n", encoding="utf-8")
    rows = _feature_csv_rows(report)
    if rows is not None:
        csv_path = path.with_suffix(".csv") if path.suffix == ".json" else Path(str(path) + ".csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            csv.writer(handle).writerows(rows)
    print(f"report written to {path}")


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": {"kind": kind, "message": message}}), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _resolve(args)
        report = run(config)
        _emit(report, config.output)
        return 0
    except DataError as exc:
        return _fail(3, "data", str(exc))
    except (TrainingDivergedError, DegenerateScaleError, np.linalg.LinAlgError) as exc:
        return _fail(4, "numeric", str(exc))
    except (ConfigError, ValueError) as exc:
        return _fail(2, "config", str(exc))


if __name__ == "__main__":
    sys.exit(main())
