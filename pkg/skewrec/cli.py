#! /usr/bin/env python3

"""
Skewrec: Skewness Ranking Optimization Command Line Module

This module contains the command line entry point: data preparation,
training, evaluation, hyperparameter sweeps and the analysis of learned
estimator distributions.
"""

import sys

try:
    from skewrec.__init__ import import_error_test_var  # noqa: F401
except ImportError:
    print("Did you run Skewrec with `python3 skewrec/cli.py ...`?")
    print("This is an outdated method. Please run `skewrec ...` or `python3 -m skewrec ...` instead.")
    sys.exit(1)

import json
import logging
import os
import signal
from argparse import ArgumentParser, ArgumentTypeError, RawDescriptionHelpFormatter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from time import monotonic
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from colorama import init

from skewrec.__init__ import (
    __longname__,
    __shortname__,
    __version__,
)

from skewrec import corpus, embed, metrics, skewopt, skewstats
from skewrec.artifacts import atomic_path, write_json, write_text
from skewrec.corpus import BinarizeMode, SplitPair
from skewrec.datasets import fetch_movielens_100k
from skewrec.notify import TrainNotify, TrainNotifyPrint
from skewrec.result import Command, EvalReport, RunManifest
from skewrec.skewopt import SkewOptConfig
from skewrec.skewstats import EstimatorSample, SkewNormalParams

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

MANIFEST_FILE = "manifest.json"
MANIFEST_SUFFIX = ".manifest.json"
REPORT_TEXT_FILE = "report.txt"
REPORT_JSON_FILE = "report.json"
SWEEP_FILE = "sweep.tsv"
SWEEP_XLSX_FILE = "sweep.xlsx"
HISTOGRAM_FILE = "histogram.tsv"
LEMMA_FILE = "lemma.tsv"
AUC_CLOSED_FILE = "auc_closed.tsv"

SWEEP_COLUMNS = ["xi", "omega", "eta", "recall", "map"]
HYPER_FLAGS = ("xi", "omega", "eta", "beta", "lam", "epochs", "dim", "clip")
GRID_FLAGS = ("xi", "omega", "eta")


def positive_check(value):
    """Check Positive Argument.

    Checks a real-valued argument (omega, beta, clip) for validity.

    Keyword Arguments:
    value                  -- String given on the command line.

    Return Value:
    Floating point number greater than zero.

    NOTE:  Will raise an exception if the value is invalid.
    """
    try:
        float_value = float(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid value: {value}. Expected a number.")
    if not np.isfinite(float_value) or float_value <= 0:
        raise ArgumentTypeError(f"Invalid value: {value}. Value must be a positive number.")
    return float_value


def nonnegative_check(value):
    try:
        float_value = float(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid value: {value}. Expected a number.")
    if not np.isfinite(float_value) or float_value < 0:
        raise ArgumentTypeError(f"Invalid value: {value}. Value must be zero or positive.")
    return float_value


def count_check(value):
    try:
        int_value = int(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid value: {value}. Expected an integer.")
    if int_value < 1:
        raise ArgumentTypeError(f"Invalid value: {value}. Value must be at least 1.")
    return int_value


def epochs_check(value):
    try:
        int_value = int(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid epochs value: {value}. Expected an integer.")
    if int_value < 0:
        raise ArgumentTypeError(f"Invalid epochs value: {value}. Epochs must not be negative.")
    return int_value


def odd_check(value):
    """Check Eta Argument.

    The exponent must be a positive odd integer so that the sign of the
    estimator survives the power.
    """
    try:
        int_value = int(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid eta value: {value}. Eta must be a positive odd integer.")
    if int_value < 1 or int_value % 2 == 0:
        raise ArgumentTypeError(f"Invalid eta value: {value}. Eta must be a positive odd integer.")
    return int_value


def fraction_check(value):
    try:
        float_value = float(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid fraction: {value}. Expected a number.")
    if not 0.0 < float_value < 1.0:
        raise ArgumentTypeError(f"Invalid fraction: {value}. Fraction must lie strictly between 0 and 1.")
    return float_value


def real_check(value):
    try:
        float_value = float(value)
    except ValueError:
        raise ArgumentTypeError(f"Invalid value: {value}. Expected a number.")
    if not np.isfinite(float_value):
        raise ArgumentTypeError(f"Invalid value: {value}. Value must be finite.")
    return float_value


def params_check(value):
    """Check Skew Normal Parameters Argument.

    Keyword Arguments:
    value                  -- String of the form `xi,omega,alpha`.

    Return Value:
    SkewNormalParams object.
    """
    fields = value.split(",")
    if len(fields) != 3:
        raise ArgumentTypeError(f"Invalid parameters: {value}. Expected 'xi,omega,alpha'.")
    try:
        return SkewNormalParams(*(float(field) for field in fields))
    except ValueError as error:
        raise ArgumentTypeError(f"Invalid parameters: {value}. {error}")


def list_check(check):
    """Wrap a single-value check into one for comma-separated lists."""
    def check_list(value):
        items = [item for item in value.split(",") if item.strip()]
        if not items:
            raise ArgumentTypeError(f"Invalid list: '{value}'. Expected comma-separated values.")
        return [check(item.strip()) for item in items]
    return check_list


def range_check(value):
    bounds = list_check(real_check)(value)
    if len(bounds) != 2 or bounds[0] >= bounds[1]:
        raise ArgumentTypeError(f"Invalid range: {value}. Expected 'low,high' with low < high.")
    return bounds


@dataclass
class RunContext:
    """Command-line provenance recorded into every manifest."""
    argv: List[str] = field(default_factory=list)
    config_file: Dict[str, Any] = field(default_factory=dict)
    overrides: Dict[str, Any] = field(default_factory=dict)
    started: float = field(default_factory=monotonic)

    def write_manifest(self, path: str, command: Command, seed: Optional[int],
                       inputs: Dict[str, Any], outputs: Sequence[str],
                       config: Optional[Dict[str, Any]] = None) -> str:
        manifest = RunManifest(
            command=command,
            seed=seed,
            inputs=inputs,
            outputs=list(outputs),
            config=dict(config or {}),
            config_file=dict(self.config_file),
            overrides=dict(self.overrides),
            argv=list(self.argv),
            version=__version__,
            duration_s=round(monotonic() - self.started, 3),
        )
        write_json(path, manifest.to_dict())
        return path


def _write_table(path: str, frame: pd.DataFrame) -> str:
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, sep="\t", index=False, float_format="%.8g")
    return path


def cmd_fetch(cache_dir: str, notify: Optional[TrainNotify] = None) -> str:
    notify = notify or TrainNotify()
    path = fetch_movielens_100k(cache_dir)
    notify.info(f"MovieLens-100K ratings available at {path}")
    return path


def cmd_prep(in_path: str, out_dir: str, mode: BinarizeMode = BinarizeMode.RATING,
             threshold: Optional[float] = None, test_fraction: float = 0.2, seed: int = 0,
             delimiter: str = "\t", has_header: bool = False,
             notify: Optional[TrainNotify] = None,
             context: Optional[RunContext] = None) -> List[str]:
    """Binarize, index and split an interaction file.

    Return Value:
    List of written paths: train.tsv, test.tsv, users.tsv, items.tsv and the
    manifest.
    """
    notify = notify or TrainNotify()
    context = context or RunContext()
    mode = BinarizeMode(mode)
    if threshold is None:
        threshold = corpus.DEFAULT_THRESHOLDS[mode]

    raw = corpus.load_tsv(in_path, delimiter=delimiter, has_header=has_header)
    pairs = corpus.binarize(raw, mode, threshold)
    if not pairs:
        raise corpus.CorpusError(f"{in_path}: no interaction passes the {mode} threshold {threshold}")
    data = corpus.build_interactions(pairs)
    split_pair = corpus.split(data, test_fraction, seed)
    outputs = corpus.write_split(split_pair, out_dir)
    notify.info(f"{data}: {split_pair.train.n_pairs} train / {split_pair.test.n_pairs} test pairs written to {out_dir}")

    inputs = {
        "path": in_path,
        "mode": str(mode),
        "threshold": threshold,
        "test_fraction": test_fraction,
        "delimiter": delimiter,
        "has_header": has_header,
    }
    manifest = context.write_manifest(os.path.join(out_dir, MANIFEST_FILE), Command.PREP,
                                      seed, inputs, outputs)
    return outputs + [manifest]


def cmd_train(train_path: str, cfg: SkewOptConfig, out_model: str,
              notify: Optional[TrainNotify] = None,
              context: Optional[RunContext] = None) -> embed.EmbeddingModel:
    """Train a model and write it with a `<model>.manifest.json` sibling."""
    notify = notify or TrainNotify()
    context = context or RunContext()
    cfg.validate()

    train_data = corpus.load_train(train_path)
    model = skewopt.train(train_data, cfg, notify)
    embed.save(model, out_model)
    notify.info(f"Model written to {out_model}")

    context.write_manifest(out_model + MANIFEST_SUFFIX, Command.TRAIN, cfg.seed,
                           {"train": train_path}, [out_model], cfg.to_dict())
    return model


def _training_config(model_path: str) -> Dict[str, Any]:
    manifest = model_path + MANIFEST_SUFFIX
    if not os.path.isfile(manifest):
        return {}
    try:
        with open(manifest, "r", encoding="utf-8") as f:
            return dict(json.load(f).get("config", {}))
    except (ValueError, AttributeError):
        logger.warning("Ignoring unreadable manifest %s", manifest)
        return {}


def cmd_eval(model_path: str, split_dir: str, n: int = 10, seed: int = 0,
             out_dir: Optional[str] = None,
             notify: Optional[TrainNotify] = None,
             context: Optional[RunContext] = None) -> EvalReport:
    """Evaluate a model on a prepared split and print the report.

    The report echoes the training config when the model's manifest is
    found next to it.
    """
    notify = notify or TrainNotify()
    context = context or RunContext()

    model = embed.load(model_path)
    split_pair = corpus.read_split(split_dir, seed)
    report = metrics.evaluate(model, split_pair, n, seed=seed, config=_training_config(model_path))
    sys.stdout.write(report.to_text())

    if out_dir is not None:
        outputs = [os.path.join(out_dir, REPORT_TEXT_FILE), os.path.join(out_dir, REPORT_JSON_FILE)]
        write_text(outputs[0], report.to_text())
        write_json(outputs[1], report.to_dict())
        context.write_manifest(os.path.join(out_dir, MANIFEST_FILE), Command.EVAL, seed,
                               {"model": model_path, "split": split_dir, "n": n}, outputs,
                               report.config)
        notify.info(f"Report written to {out_dir}")
    return report


def _cell_name(cfg: SkewOptConfig) -> str:
    return f"xi={cfg.xi:g}_omega={cfg.omega:g}_eta={cfg.eta}"


def sweep_cell(split_pair: SplitPair, cfg: SkewOptConfig, n: int, repeats: int,
               cell_dir: str) -> Dict[str, float]:
    """Train from fresh initialization `repeats` times and average the rank metrics.

    Repetition r uses seed cfg.seed + r on the same split.
    """
    recalls, maps = [], []
    for r in range(repeats):
        run_cfg = cfg.merged(seed=cfg.seed + r)
        model = skewopt.train(split_pair.train, run_cfg)
        report = metrics.evaluate(model, split_pair, n, seed=run_cfg.seed, config=run_cfg.to_dict())
        write_json(os.path.join(cell_dir, f"report-seed{run_cfg.seed}.json"), report.to_dict())
        recalls.append(report.recall)
        maps.append(report.map)
    return {
        "xi": cfg.xi,
        "omega": cfg.omega,
        "eta": cfg.eta,
        "recall": float(np.mean(recalls)),
        "map": float(np.mean(maps)),
    }


def cmd_sweep(split_dir: str, base_cfg: SkewOptConfig, xis: Sequence[float],
              omegas: Sequence[float], etas: Sequence[int], out_dir: str,
              n: int = 10, repeats: int = 1, jobs: int = 1, xlsx: bool = False,
              notify: Optional[TrainNotify] = None,
              context: Optional[RunContext] = None) -> pd.DataFrame:
    """Train and evaluate every (xi, omega, eta) cell of a grid.

    Keyword Arguments:
    split_dir              -- Directory written by `prep`.
    base_cfg               -- SkewOptConfig for everything but the grid axes.
    xis, omegas, etas      -- Grid axes.
    out_dir                -- Directory for sweep.tsv, per-cell reports and
                              the manifest.
    n                      -- Rank metric cutoff.
    repeats                -- Training repetitions averaged per cell.
    jobs                   -- Cells trained concurrently in worker processes.
    xlsx                   -- Boolean indicating whether to also write an
                              Excel copy of the table.

    Return Value:
    DataFrame with the columns xi, omega, eta, recall and map, one row per
    cell in grid order.
    """
    notify = notify or TrainNotify()
    context = context or RunContext()
    if repeats < 1 or jobs < 1:
        raise skewopt.ConfigError(f"repeats and jobs must be >= 1, got {repeats} and {jobs}")

    split_pair = corpus.read_split(split_dir)
    cells = [base_cfg.merged(xi=xi, omega=omega, eta=eta)
             for xi in xis for omega in omegas for eta in etas]
    cell_dirs = [os.path.join(out_dir, "cells", _cell_name(cfg)) for cfg in cells]
    notify.info(f"Sweeping {len(cells)} cells x {repeats} repeat(s) on {jobs} job(s)")

    if jobs == 1:
        rows = []
        for cfg, cell_dir in zip(cells, cell_dirs):
            rows.append(sweep_cell(split_pair, cfg, n, repeats, cell_dir))
            notify.info(f"{_cell_name(cfg)}: recall@{n} {rows[-1]['recall']:.4f}  map@{n} {rows[-1]['map']:.4f}")
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(sweep_cell, split_pair, cfg, n, repeats, cell_dir)
                       for cfg, cell_dir in zip(cells, cell_dirs)]
            rows = [future.result() for future in futures]

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    outputs = [_write_table(os.path.join(out_dir, SWEEP_FILE), frame)]
    if xlsx:
        path = os.path.join(out_dir, SWEEP_XLSX_FILE)
        with atomic_path(path) as tmp:
            frame.to_excel(tmp, sheet_name="sweep", index=False)
        outputs.append(path)

    best = frame.loc[frame["map"].idxmax()]
    notify.info(f"Best map@{n} {best['map']:.4f} at xi={best['xi']:g} omega={best['omega']:g} eta={int(best['eta'])}")

    inputs = {
        "split": split_dir,
        "xi": list(xis),
        "omega": list(omegas),
        "eta": list(etas),
        "n": n,
        "repeats": repeats,
        "jobs": jobs,
    }
    context.write_manifest(os.path.join(out_dir, MANIFEST_FILE), Command.SWEEP, base_cfg.seed,
                           inputs, outputs, base_cfg.to_dict())
    return frame


def _curve_name(params: SkewNormalParams) -> str:
    return f"pdf_xi={params.xi:g}_omega={params.omega:g}_alpha={params.alpha:g}.tsv"


def cmd_analyze(model_path: str, train_path: str, out_dir: str, n_triples: int = 100_000,
                params: Sequence[SkewNormalParams] = (), seed: int = 0, points: int = 400,
                notify: Optional[TrainNotify] = None,
                context: Optional[RunContext] = None) -> EstimatorSample:
    """Histogram the learned estimator and write reference skew normal curves."""
    notify = notify or TrainNotify()
    context = context or RunContext()

    model = embed.load(model_path)
    train_data = corpus.load_train(train_path)
    if (model.n_users, model.n_items) != (train_data.n_users, train_data.n_items):
        raise metrics.EvaluationError(
            f"model covers {model.n_users} users / {model.n_items} items, "
            f"training data covers {train_data.n_users} / {train_data.n_items}")

    sample = skewstats.collect_estimator(model, train_data, n_triples, seed)
    histogram = os.path.join(out_dir, HISTOGRAM_FILE)
    skewstats.write_histogram(histogram, sample,
                              {"model": model_path, "n_triples": n_triples, "seed": seed})
    outputs = [histogram]
    notify.info(f"Estimator mean {sample.mean:.4f}, sample skewness {sample.sample_skewness:.4f}")

    low, high = float(sample.bin_edges[0]), float(sample.bin_edges[-1])
    for p in params:
        low = min(low, p.xi - 5 * p.omega)
        high = max(high, p.xi + 5 * p.omega)
    xs = np.linspace(low, high, points)
    for p in params:
        path = os.path.join(out_dir, _curve_name(p))
        skewstats.write_pdf_curve(path, p, xs)
        outputs.append(path)

    inputs = {
        "model": model_path,
        "train": train_path,
        "n_triples": n_triples,
        "params": [str(p) for p in params],
        "points": points,
    }
    context.write_manifest(os.path.join(out_dir, MANIFEST_FILE), Command.ANALYZE, seed,
                           inputs, outputs)
    notify.info(f"Wrote {len(outputs)} file(s) to {out_dir}")
    return sample


def cmd_lemma(etas: Sequence[int], alphas: Sequence[float], out_dir: str,
              xi: float = 0.0, omega: float = 1.0,
              notify: Optional[TrainNotify] = None,
              context: Optional[RunContext] = None) -> pd.DataFrame:
    """Tabulate kappa, its shape derivative and gamma over an (eta, alpha) grid.

    Also writes the closed-form pooled AUC for (xi, omega) against alpha.

    Return Value:
    DataFrame with the columns eta, alpha, kappa, dkappa and gamma.
    """
    notify = notify or TrainNotify()
    context = context or RunContext()
    base = SkewNormalParams(xi, omega, 0.0)

    rows = []
    for eta in etas:
        for alpha in alphas:
            rows.append({
                "eta": int(eta),
                "alpha": float(alpha),
                "kappa": skewstats.kappa_of_alpha(base, eta, alpha),
                "dkappa": skewstats.dkappa_dalpha(base, eta, alpha),
                "gamma": skewstats.gamma_of_alpha(alpha),
            })
    table = pd.DataFrame(rows, columns=["eta", "alpha", "kappa", "dkappa", "gamma"])
    auc = pd.DataFrame({
        "alpha": [float(a) for a in alphas],
        "auc_micro": [skewstats.auc_micro_closed(SkewNormalParams(xi, omega, a)) for a in alphas],
    })
    outputs = [
        _write_table(os.path.join(out_dir, LEMMA_FILE), table),
        _write_table(os.path.join(out_dir, AUC_CLOSED_FILE), auc),
    ]

    violations = table[table["dkappa"] <= 0]
    if violations.empty:
        notify.info(f"dkappa/dalpha > 0 at all {len(table)} grid points")
    else:
        notify.warn(f"dkappa/dalpha <= 0 at {len(violations)} grid point(s)")

    inputs = {"eta": list(etas), "alpha": list(alphas), "xi": xi, "omega": omega}
    context.write_manifest(os.path.join(out_dir, MANIFEST_FILE), Command.LEMMA, None,
                           inputs, outputs)
    return table


def cmd_smoothing(cfg: SkewOptConfig, omegas: Sequence[float], out_path: str,
                  low: float = -5.0, high: float = 15.0, points: int = 201,
                  notify: Optional[TrainNotify] = None,
                  context: Optional[RunContext] = None) -> pd.DataFrame:
    """Write the gradient factor over an estimator grid for several scales."""
    notify = notify or TrainNotify()
    context = context or RunContext()

    frame = skewopt.gradient_curve(np.linspace(low, high, points), cfg, omegas)
    _write_table(out_path, frame)
    for omega, peak in frame.groupby("omega")["grad"].max().items():
        notify.info(f"omega={omega:g}: peak unclipped gradient {peak:.4g}")

    inputs = {"omega": list(omegas), "low": low, "high": high, "points": points}
    context.write_manifest(out_path + MANIFEST_SUFFIX, Command.SMOOTHING, None,
                           inputs, [out_path], cfg.to_dict())
    return frame


def effective_config(args, exclude: Sequence[str] = ()):
    """Resolve the run configuration: defaults < config file < flags.

    Return Value:
    Tuple of (SkewOptConfig, raw config file values, flag overrides).
    """
    file_values = skewopt.read_config(args.config) if args.config else {}
    overrides = {}
    for key in HYPER_FLAGS + ("seed", "threads"):
        if key in exclude:
            continue
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    cfg = SkewOptConfig().merged(**file_values).merged(**overrides)
    return cfg, file_values, overrides


def _add_hyper_flags(parser, grid=False):
    if grid:
        parser.add_argument("--xi", type=list_check(nonnegative_check), default=[0.0, 4.0, 8.0, 12.0],
                            help="Comma-separated location values (Default: 0,4,8,12).")
        parser.add_argument("--omega", type=list_check(positive_check), default=[1.0, 2.0, 3.0],
                            help="Comma-separated scale values (Default: 1,2,3).")
        parser.add_argument("--eta", type=list_check(odd_check), default=[3],
                            help="Comma-separated odd exponents (Default: 3).")
    else:
        parser.add_argument("--xi", type=nonnegative_check, default=None,
                            help="Location of the estimator (Default: 0).")
        parser.add_argument("--omega", type=positive_check, default=None,
                            help="Scale of the estimator (Default: 1).")
        parser.add_argument("--eta", type=odd_check, default=None,
                            help="Odd exponent applied to the standardized estimator (Default: 1).")
    parser.add_argument("--beta", type=positive_check, default=None,
                        help="Learning rate (Default: 0.05).")
    parser.add_argument("--lambda", dest="lam", type=nonnegative_check, default=None,
                        help="L2 regularization weight (Default: 0.0025).")
    parser.add_argument("--epochs", type=epochs_check, default=None,
                        help="Training epochs (Default: 200).")
    parser.add_argument("--dim", "-k", type=count_check, default=None,
                        help="Embedding dimension (Default: 32).")
    parser.add_argument("--clip", type=positive_check, default=None,
                        help="Upper bound of the per-triple gradient factor (Default: 10).")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        formatter_class=RawDescriptionHelpFormatter,
        description=f"{__longname__} (Version {__version__})",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"{__shortname__} v{__version__}",
        help="Display version information and dependencies.",
    )

    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--verbose",
        "-v",
        "-d",
        "--debug",
        action="store_true",
        dest="verbose",
        default=False,
        help="Display extra debugging information and every training epoch.",
    )
    common.add_argument(
        "--no-color",
        action="store_true",
        dest="no_color",
        default=False,
        help="Don't color terminal output",
    )
    common.add_argument("--seed", type=int, default=None,
                        help="Random seed for splitting, initialization and sampling (Default: 0).")
    common.add_argument("--threads", type=count_check, default=None,
                        help="Training threads; more than one trades determinism for speed (Default: 1).")
    common.add_argument("--config", metavar="CONFIG_FILE", dest="config", default=None,
                        help="File of `key = value` settings; flags take precedence.")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    fetch = commands.add_parser(str(Command.FETCH), parents=[common],
                                help="Download the MovieLens-100K ratings.")
    fetch.add_argument("--cache-dir", dest="cache_dir", default="data",
                       help="Directory the ratings are stored in (Default: data).")

    prep = commands.add_parser(str(Command.PREP), parents=[common],
                               help="Binarize and split an interaction file.")
    prep.add_argument("input", metavar="INTERACTIONS", help="Delimited user, item, value file.")
    prep.add_argument("--out", "-o", dest="out", required=True, help="Output directory of the split.")
    prep.add_argument("--mode", type=BinarizeMode, choices=list(BinarizeMode), default=BinarizeMode.RATING,
                      help="How values become positives (Default: rating).")
    prep.add_argument("--threshold", type=real_check, default=None,
                      help="Positive threshold (Default: 3.5 for ratings, 3 for counts).")
    prep.add_argument("--test-fraction", dest="test_fraction", type=fraction_check, default=0.2,
                      help="Probability of a pair going to the test set (Default: 0.2).")
    prep.add_argument("--delimiter", default="\t", help="Field separator (Default: tab).")
    prep.add_argument("--header", dest="has_header", action="store_true", default=False,
                      help="Skip the first line of the input.")

    train = commands.add_parser(str(Command.TRAIN), parents=[common], help="Train a model.")
    train.add_argument("train", metavar="TRAIN", help="Split directory or training TSV.")
    train.add_argument("--out", "-o", dest="out", required=True, help="Model file to write.")
    _add_hyper_flags(train)

    evaluate = commands.add_parser(str(Command.EVAL), parents=[common], help="Evaluate a model.")
    evaluate.add_argument("model", metavar="MODEL", help="Model file written by train.")
    evaluate.add_argument("split", metavar="SPLIT_DIR", help="Split directory written by prep.")
    evaluate.add_argument("-n", dest="n", type=count_check, default=10,
                          help="Cutoff of Recall@N and mAP@N (Default: 10).")
    evaluate.add_argument("--out", "-o", dest="out", default=None,
                          help="Directory for report.txt, report.json and the manifest.")

    sweep = commands.add_parser(str(Command.SWEEP), parents=[common],
                                help="Train and evaluate a (xi, omega, eta) grid.")
    sweep.add_argument("split", metavar="SPLIT_DIR", help="Split directory written by prep.")
    sweep.add_argument("--out", "-o", dest="out", required=True, help="Output directory.")
    sweep.add_argument("-n", dest="n", type=count_check, default=10,
                       help="Cutoff of Recall@N and mAP@N (Default: 10).")
    sweep.add_argument("--repeats", type=count_check, default=1,
                       help="Training repetitions averaged per cell (Default: 1).")
    sweep.add_argument("--jobs", type=count_check, default=1,
                       help="Cells trained concurrently (Default: 1).")
    sweep.add_argument("--xlsx", action="store_true", dest="xlsx", default=False,
                       help="Also write the table as a Microsoft Excel file (xlsx).")
    _add_hyper_flags(sweep, grid=True)

    analyze = commands.add_parser(str(Command.ANALYZE), parents=[common],
                                  help="Histogram the learned estimator distribution.")
    analyze.add_argument("model", metavar="MODEL", help="Model file written by train.")
    analyze.add_argument("train", metavar="TRAIN", help="Split directory or training TSV.")
    analyze.add_argument("--out", "-o", dest="out", required=True, help="Output directory.")
    analyze.add_argument("--triples", type=count_check, default=100_000,
                         help="Number of sampled triples (Default: 100000).")
    analyze.add_argument("--params", action="append", type=params_check, default=[],
                         metavar="XI,OMEGA,ALPHA",
                         help="Reference skew normal curve. Add multiple options for more curves.")
    analyze.add_argument("--points", type=count_check, default=400,
                         help="Grid points per reference curve (Default: 400).")

    lemma = commands.add_parser(str(Command.LEMMA), parents=[common],
                                help="Tabulate kappa(alpha), its derivative and the closed-form AUC.")
    lemma.add_argument("--out", "-o", dest="out", required=True, help="Output directory.")
    lemma.add_argument("--eta", dest="etas", type=list_check(odd_check), default=[1, 3, 5, 7, 9],
                       help="Comma-separated odd exponents (Default: 1,3,5,7,9).")
    lemma.add_argument("--alpha", dest="alphas", type=list_check(real_check), default=[-4.0, -2.0, 0.0, 2.0, 4.0],
                       help="Comma-separated shape values (Default: -4,-2,0,2,4).")
    lemma.add_argument("--xi", type=nonnegative_check, default=None,
                       help="Location used for the closed-form AUC (Default: 0).")
    lemma.add_argument("--omega", type=positive_check, default=None,
                       help="Scale used for the closed-form AUC (Default: 1).")

    smoothing = commands.add_parser(str(Command.SMOOTHING), parents=[common],
                                    help="Tabulate the gradient factor for several scales.")
    smoothing.add_argument("--out", "-o", dest="out", required=True, help="TSV file to write.")
    smoothing.add_argument("--xi", type=nonnegative_check, default=None,
                           help="Location of the estimator (Default: 0).")
    smoothing.add_argument("--eta", type=odd_check, default=None,
                           help="Odd exponent (Default: 1).")
    smoothing.add_argument("--omegas", type=list_check(positive_check), default=[1.0, 2.0, 3.0],
                           help="Comma-separated scales (Default: 1,2,3).")
    smoothing.add_argument("--range", dest="xrange", type=range_check, default=[-5.0, 15.0],
                           metavar="LOW,HIGH", help="Estimator range (Default: -5,15).")
    smoothing.add_argument("--points", type=count_check, default=201,
                           help="Grid points (Default: 201).")
    return parser


def handler(signal_received, frame):
    """Exit on CTRL-C without a traceback."""
    sys.exit(130)


def _run(args, cfg: SkewOptConfig, notify: TrainNotify, context: RunContext) -> int:
    command = Command(args.command)

    if command is Command.FETCH:
        cmd_fetch(args.cache_dir, notify)
    elif command is Command.PREP:
        cmd_prep(args.input, args.out, args.mode, args.threshold, args.test_fraction, cfg.seed,
                 args.delimiter, args.has_header, notify, context)
    elif command is Command.TRAIN:
        cmd_train(args.train, cfg, args.out, notify, context)
    elif command is Command.EVAL:
        cmd_eval(args.model, args.split, args.n, cfg.seed, args.out, notify, context)
    elif command is Command.SWEEP:
        cmd_sweep(args.split, cfg, args.xi, args.omega, args.eta, args.out, args.n,
                  args.repeats, args.jobs, args.xlsx, notify, context)
    elif command is Command.ANALYZE:
        cmd_analyze(args.model, args.train, args.out, args.triples, args.params, cfg.seed,
                    args.points, notify, context)
    elif command is Command.LEMMA:
        table = cmd_lemma(args.etas, args.alphas, args.out, cfg.xi, cfg.omega, notify, context)
        if not (table["dkappa"] > 0).all():
            return 1
    elif command is Command.SMOOTHING:
        cmd_smoothing(cfg, args.omegas, args.out, args.xrange[0], args.xrange[1], args.points,
                      notify, context)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # If the user presses CTRL-C, exit without throwing errors
    signal.signal(signal.SIGINT, handler)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    if args.no_color:
        # Disable color output.
        init(strip=True, convert=False)
    else:
        # Enable color output.
        init(autoreset=True)

    notify = TrainNotifyPrint(result=None, verbose=args.verbose)
    try:
        exclude = GRID_FLAGS if args.command == str(Command.SWEEP) else ()
        cfg, file_values, overrides = effective_config(args, exclude)
        context = RunContext(argv=list(sys.argv[1:] if argv is None else argv),
                             config_file=file_values, overrides=overrides)
        return _run(args, cfg, notify, context)
    except (ValueError, IndexError, OSError) as error:
        print(f"ERROR:  {error}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
