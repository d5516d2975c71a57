#!/usr/bin/python
# -*- coding: utf-8 -*-
import argparse
import configparser
import dataclasses
import io
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from . import utils
from .encounter import DecisionParams, FidelityLevel, UtilityWeights
from .harness import (
    METHOD_NAMES,
    ExperimentConfig,
    build_ensembles,
    lower_bound_error,
    method_class,
    model_context,
    predictive_efficiency,
    run_sweep,
    test_set_error,
)
from .modelbased import density_mesh
from .randomness import RandomSource, mix_seed
from .results import (
    aggregate_frame,
    output_stem,
    plot_curves,
    plot_densities,
    read_curves_csv,
    read_raw_csv,
    results_frame,
    write_curves_csv,
    write_metadata,
    write_raw_csv,
)
from .scenario import Dataset, GroundTruth, ScenarioConfig, Split, generate_dataset
from .utils import MfEncounterError, logger

# (argument, section, key) pairs of flags that override config values
CONFIG_OVERRIDES = [
    ("seed", "experiment", "base_seed"),
    ("scenario", "experiment", "scenario"),
    ("methods", "experiment", "methods"),
    ("n_high_sweep", "experiment", "n_high_sweep"),
    ("trials", "experiment", "trials"),
    ("n_test", "experiment", "n_test"),
    ("workers", "experiment", "workers"),
    ("ensemble_cache", "experiment", "ensemble_cache"),
    ("output_dir", "experiment", "output_dir"),
    ("m_actions", "decision", "m_actions"),
    ("m_obs", "decision", "m_obs"),
    ("distance_scale", "decision", "distance_scale"),
    ("ensemble_size", "modelbased", "ensemble_size"),
    ("n_samples", "modelbased", "n_samples"),
]


def common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file layered over the defaults")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument(
        "--log-level", choices=["ERROR", "WARNING", "INFO", "DEBUG"], default=None
    )
    common.add_argument("--scenario", help="identical, small-diff, large-diff, custom")
    common.add_argument("--methods", help=f"comma separated subset of {METHOD_NAMES}")
    common.add_argument("--n-high-sweep", help="comma separated training set sizes")
    common.add_argument("--trials", type=int)
    common.add_argument("--n-test", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--ensemble-cache", help="directory for cached ensembles")
    common.add_argument("--output-dir")
    common.add_argument("--m-actions", type=int)
    common.add_argument("--m-obs", type=int)
    common.add_argument("--distance-scale", type=float)
    common.add_argument("--ensemble-size", type=int)
    common.add_argument("--n-samples", type=int)
    common.add_argument("--grid", help="weight grid as MIN,MAX,STEP")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = common_arguments()
    parser = argparse.ArgumentParser(
        prog="mfencounter",
        description="Multi-fidelity prediction of pilot decisions in encounters",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser(
        "generate", parents=[common], help="write a simulated dataset CSV"
    )
    generate.add_argument("--n", type=int, required=True)
    generate.add_argument("--split", default="train", choices=["train", "test"])
    generate.add_argument("--fidelity", default="high", choices=["low", "high"])
    generate.add_argument("--output", required=True)

    ensemble = commands.add_parser(
        "ensemble", parents=[common], help="build action ensembles and write them"
    )
    ensemble.add_argument(
        "--densities",
        action="store_true",
        help="also write joint-action densities on a mesh",
    )
    ensemble.add_argument(
        "--mesh-weights",
        help="combinations for --densities as w1,w2;w1,w2;... (default: grid diagonal)",
    )
    ensemble.add_argument("--mesh-points", type=int, default=61)

    fit = commands.add_parser(
        "fit", parents=[common], help="fit a method and print what it learned"
    )
    fit.add_argument("--method", required=True, choices=METHOD_NAMES)
    fit.add_argument("--train-high", required=True)
    fit.add_argument("--train-low")

    predict = commands.add_parser(
        "predict", parents=[common], help="fit a method and score a test CSV"
    )
    predict.add_argument("--method", required=True, choices=METHOD_NAMES)
    predict.add_argument("--train-high", required=True)
    predict.add_argument("--train-low")
    predict.add_argument("--test", required=True)
    predict.add_argument("--output", help="predictions CSV")

    sweep = commands.add_parser(
        "sweep", parents=[common], help="run the full efficiency experiment"
    )
    sweep.add_argument("--n-low", help="comma separated low-fidelity budgets")
    sweep.add_argument("--no-plot", action="store_true")

    plot = commands.add_parser(
        "plot", parents=[common], help="render result CSVs as SVG"
    )
    plot.add_argument("--raw", help="raw results CSV")
    plot.add_argument("--curves", help="curve CSV")
    plot.add_argument("--densities", help="density mesh CSV")
    plot.add_argument("--output", help="SVG path (default next to the input)")
    return parser


def load_config(args: argparse.Namespace) -> configparser.ConfigParser:
    cfg = utils.read_config(args.config)
    for argument, section, key in CONFIG_OVERRIDES:
        value = getattr(args, argument, None)
        if value is not None:
            cfg[section][key] = str(value)
    if args.grid is not None:
        parts = [part.strip() for part in args.grid.split(",")]
        if len(parts) != 3:
            raise utils.ConfigurationError(
                f"--grid needs MIN,MAX,STEP, got {args.grid!r}"
            )
        for key, value in zip(("weight_min", "weight_max", "weight_step"), parts):
            cfg["grid"][key] = value
    if getattr(args, "n_low", None) is not None:
        cfg["experiment"]["n_low"] = args.n_low.split(",")[0].strip()
    return cfg


def read_training(args: argparse.Namespace, method: str):
    train_high = Dataset.read_csv(args.train_high)
    train_low = None
    if method_class(method).USES_LOW_FIDELITY:
        if args.train_low is None:
            raise utils.PreconditionError(f"{method} needs --train-low")
        train_low = Dataset.read_csv(args.train_low)
    return train_high, train_low


def fit_method(config: ExperimentConfig, method: str, train_high, train_low):
    cls = method_class(method)
    ensembles = build_ensembles(config) if cls.MODEL_BASED else None
    predictor = cls(model_context(config, ensembles))
    predictor.fit(train_high, train_low)
    predictor.log_settings()
    return predictor


# --------- Commands ---------
def command_generate(args, cfg) -> int:
    truth = GroundTruth.from_config(cfg)
    fidelity = FidelityLevel.parse(args.fidelity)
    split = Split.parse(args.split)
    base_seed = utils.get_option(cfg, "experiment", "base_seed", int)
    dataset = generate_dataset(
        args.n,
        split,
        fidelity,
        truth,
        ScenarioConfig.from_config(cfg),
        DecisionParams.from_config(cfg),
        RandomSource(base_seed).spawn("generate", split.value, fidelity.value),
    )
    dataset.write_csv(args.output)
    return 0


def _mesh_weights(args, config: ExperimentConfig) -> List[UtilityWeights]:
    if args.mesh_weights:
        weights = []
        for pair in args.mesh_weights.split(";"):
            w1, w2 = (float(v) for v in pair.split(","))
            weights.append(UtilityWeights(w1, w2))
        return weights
    values = config.grid.values
    diagonal = sorted({values[0], values[len(values) // 2], values[-1]})
    return [UtilityWeights(v, v) for v in diagonal]


def command_ensemble(args, cfg) -> int:
    config = ExperimentConfig.from_config(cfg)
    output_dir = Path(utils.get_option(cfg, "experiment", "output_dir"))
    ensembles = build_ensembles(config)
    for ensemble in (ensembles.high, ensembles.low):
        ensemble.write_csv(output_dir / f"ensemble-{ensemble.fidelity.value}.csv")
        if args.densities:
            mesh = density_mesh(
                ensemble,
                _mesh_weights(args, config),
                points=args.mesh_points,
                bandwidth_floor=config.bandwidth_floor,
            )
            path = output_dir / f"densities-{ensemble.fidelity.value}.csv"
            buffer = io.StringIO()
            mesh.to_csv(buffer, index=False, lineterminator="\n")
            utils.write_text_atomic(path, buffer.getvalue())
            plot_densities(mesh, path.with_suffix(".svg"))
    return 0


def command_fit(args, cfg) -> int:
    config = ExperimentConfig.from_config(cfg)
    train_high, train_low = read_training(args, args.method)
    predictor = fit_method(config, args.method, train_high, train_low)
    print(predictor.describe())
    posterior = getattr(predictor, "posterior", None)
    if posterior is not None:
        for weights, probability in posterior.top(5):
            print(f"  {weights}  p={probability:.4f}")
    return 0


def command_predict(args, cfg) -> int:
    config = ExperimentConfig.from_config(cfg)
    train_high, train_low = read_training(args, args.method)
    test = Dataset.read_csv(args.test)
    predictor = fit_method(config, args.method, train_high, train_low)
    rng = RandomSource(mix_seed(config.base_seed, args.method, "predict"))
    predicted = predictor.predict_many(test.geometries, rng)
    actual = test.actions()
    D = test_set_error(predicted, actual)
    D_lb = lower_bound_error(
        test,
        config.scenario,
        config.params,
        config.n_samples,
        RandomSource(config.base_seed).spawn("lower-bound"),
    )
    efficiency = predictive_efficiency(D, D_lb)
    print(f"method={args.method} D={D:.6f} D_lb={D_lb:.6f} efficiency={efficiency}")
    if args.output:
        frame = pd.DataFrame(
            {
                "encounter_id": [record.encounter_id for record in test],
                "a1_predicted": predicted[:, 0],
                "a2_predicted": predicted[:, 1],
                "a1": actual[:, 0],
                "a2": actual[:, 1],
            }
        )
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False, lineterminator="\n")
        utils.write_text_atomic(args.output, buffer.getvalue())
    return 0


def _n_low_budgets(args, config: ExperimentConfig) -> List[int]:
    if args.n_low is None:
        return [config.n_low]
    try:
        return [int(v) for v in args.n_low.split(",") if v.strip() != ""]
    except ValueError:
        raise utils.ConfigurationError("--n-low needs comma separated counts")


def command_sweep(args, cfg) -> int:
    base = ExperimentConfig.from_config(cfg)
    output_dir = Path(utils.get_option(cfg, "experiment", "output_dir"))
    ensembles = build_ensembles(base) if base.model_based else None
    for n_low in _n_low_budgets(args, base):
        config = dataclasses.replace(base, n_low=n_low)
        stem = output_stem(config.scenario.scenario_name, n_low)
        raw_path = output_dir / f"{stem}_raw.csv"

        def flush(completed):
            write_raw_csv(raw_path, results_frame(completed))

        sweep = run_sweep(config, ensembles, on_cell=flush)
        raw = results_frame(sweep.results)
        write_raw_csv(raw_path, raw)
        curves = aggregate_frame(raw)
        write_curves_csv(output_dir / f"{stem}_curves.csv", curves)
        write_metadata(output_dir / f"{stem}_metadata.json", config.describe())
        if not args.no_plot:
            plot_curves(
                curves,
                output_dir / f"{stem}_curves.svg",
                f"{config.scenario.scenario_name}, n_low = {n_low}",
            )
        for curve in sweep.curves:
            logger.info(
                f"{curve.method:>8} n_high={curve.n_high:<4} "
                + f"efficiency={curve.mean_efficiency} +/- {curve.stderr:.4f}"
            )
    return 0


def command_plot(args, cfg) -> int:
    if not (args.raw or args.curves or args.densities):
        raise utils.PreconditionError("plot needs --raw, --curves or --densities")
    if args.raw:
        raw = read_raw_csv(args.raw)
        for n_low, group in raw.groupby("n_low", sort=False):
            curves = aggregate_frame(group)
            stem = Path(args.raw).with_suffix("")
            if raw["n_low"].nunique() > 1:
                stem = stem.with_name(f"{stem.name}_nlow{n_low}")
            write_curves_csv(f"{stem}_curves.csv", curves)
            plot_curves(
                curves,
                args.output or f"{stem}_curves.svg",
                f"{curves['scenario'].iloc[0]}, n_low = {n_low}",
            )
    if args.curves:
        curves = read_curves_csv(args.curves)
        plot_curves(
            curves,
            args.output or str(Path(args.curves).with_suffix(".svg")),
            str(curves["scenario"].iloc[0]),
        )
    if args.densities:
        mesh = pd.read_csv(args.densities, float_precision="round_trip")
        output = args.output or str(Path(args.densities).with_suffix(".svg"))
        plot_densities(mesh, output)
    return 0


COMMANDS = {
    "generate": command_generate,
    "ensemble": command_ensemble,
    "fit": command_fit,
    "predict": command_predict,
    "sweep": command_sweep,
    "plot": command_plot,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        utils.set_log_level(args.log_level or cfg["DEFAULT"].get("LOGGING", "INFO"))
        logger.info(f"mf-encounter v{utils.TOOLKIT_VERSION}: {args.command}")
        result = COMMANDS[args.command](args, cfg)
        logger.info(f"Finished {args.command}")
        return result
    except KeyboardInterrupt:
        logger.error(">>> ERROR: interrupted")
        return 130
    except (MfEncounterError, OSError, ValueError):
        utils.log_exception(f"{args.command} failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())
