"""Command-line front end.

Exit codes: 0 success, 1 I/O or malformed input file, 2 configuration or
usage error, 3 infeasible scenario. Values given on the command line
override the ``--config`` JSON file, which overrides built-in defaults.
"""

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import channel_sim, harness
from . import dataset as ds
from . import pcd
from .spoof_detector import GENERAL, PAPER_LITERAL, SdModel, detect
from .errors import InfeasibleScenarioError, ParseError, SchemaError

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3
EXPERIMENTS = ("pcd-accuracy", "roc", "speed", "pcd-compare")
SCENARIO_KEYS = {f.name for f in dataclasses.fields(harness.ScenarioConfig)}
RUN_KEYS = {"dataset", "model", "out", "jobs", "detector", "threshold", "frames_file",
            "pairs", "auto", "sweep", "environment"}


class ConfigError(ValueError):
    pass


def _flag(parser, *names, dest, **kw):
    parser.add_argument(*names, dest=dest, default=None, **kw)


def _scenario_flags(p):
    _flag(p, "--samples", dest="n_samples", type=int, help="samples per estimate N")
    _flag(p, "--features", dest="n_features", type=int, help="features F")
    _flag(p, "--estimates", dest="n_estimates", type=int, help="estimates per location E")
    _flag(p, "--snr-db", dest="snr_db", type=float)
    _flag(p, "--env-seed", dest="env_seed", type=int)
    _flag(p, "--p-train", dest="p_train", type=int)
    _flag(p, "--p-val", dest="p_val", type=int)
    _flag(p, "--p-test", dest="p_test", type=int)
    _flag(p, "--clusters", dest="n_clusters", type=int)
    _flag(p, "--epochs", dest="max_epochs", type=int)
    _flag(p, "--patience", dest="patience", type=int)
    _flag(p, "--batch-size", dest="batch_size", type=int)
    _flag(p, "--lr", dest="learning_rate", type=float)
    _flag(p, "--l1", dest="l1_coefficient", type=float)
    _flag(p, "--dtype", dest="dtype", choices=("float32", "float64"))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _flag(common, "--seed", dest="seed", type=int, help="master seed")
    _flag(common, "--out", dest="out", help="output directory")
    _flag(common, "--jobs", dest="jobs", type=int, help="worker processes")
    _flag(common, "--config", dest="config", help="JSON config file")

    parser = argparse.ArgumentParser(prog="rssspoof", description="RSS spoofing detection toolkit",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="simulate the measurement data set")
    _scenario_flags(p)

    p = sub.add_parser("train-pcd", parents=[common], help="train or fit a position-change detector")
    _scenario_flags(p)
    _flag(p, "--dataset", dest="dataset", help="dataset CSV")
    _flag(p, "--detector", dest="detector", choices=("dnnc", "dbc-l1", "dbc-l2", "kmc"))

    p = sub.add_parser("eval-pcd", parents=[common], help="accuracy of a PCD on test pairs")
    _scenario_flags(p)
    _flag(p, "--dataset", dest="dataset")
    _flag(p, "--model", dest="model")
    _flag(p, "--pairs", dest="pairs", help="pairs CSV (default: draw --p-test pairs)")

    p = sub.add_parser("detect", parents=[common], help="spoofing decision for a frame sequence")
    _flag(p, "--model", dest="model")
    _flag(p, "--frames-file", dest="frames_file", help="CSV with one RSS vector per row")
    _flag(p, "--threshold", dest="threshold", type=float, help="decision threshold gamma")
    _flag(p, "--mode", dest="mode", choices=(GENERAL, PAPER_LITERAL))

    p = sub.add_parser("experiment", parents=[common], help="run a Monte Carlo experiment")
    p.add_argument("name", choices=EXPERIMENTS)
    _scenario_flags(p)
    _flag(p, "--dataset", dest="dataset")
    _flag(p, "--model", dest="model", help="PCD model for roc/speed (else trained)")
    _flag(p, "--auto", dest="auto", action="store_const", const=True,
          help="simulate the data set when --dataset is absent")
    _flag(p, "--trials", dest="trials", type=int)
    _flag(p, "--repeats", dest="repeats", type=int)
    _flag(p, "--frames", dest="frame_counts", type=int, nargs="+", help="frame counts T")
    _flag(p, "--rate", dest="frame_rates", type=float, nargs="+", help="frame rates R (frames/s)")
    _flag(p, "--speeds", dest="speeds", type=float, nargs="+")
    _flag(p, "--attacker-speed", dest="attacker_speed", type=float)
    _flag(p, "--pfa", dest="pfa", type=float)
    _flag(p, "--locations", dest="locations_list", type=int, nargs="+", help="D values")
    _flag(p, "--n-locations", dest="n_locations", type=int)
    _flag(p, "--feature-list", dest="features_list", type=int, nargs="+", help="F values")
    _flag(p, "--sweep", dest="sweep", choices=("locations", "features"))
    _flag(p, "--detectors", dest="detectors", nargs="+", choices=harness.DETECTOR_KINDS)
    _flag(p, "--sd-detector", dest="sd_detector", choices=harness.DETECTOR_KINDS)
    _flag(p, "--mode", dest="mode", choices=(GENERAL, PAPER_LITERAL))
    return parser


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(doc) - SCENARIO_KEYS - RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return doc


def resolve(args, experiment=None):
    """Merged (scenario config, run options) after precedence rules."""
    merged = _load_config_file(args.config)
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "name"):
            merged[key] = value
    scen = {k: v for k, v in merged.items() if k in SCENARIO_KEYS}
    run = {k: v for k, v in merged.items() if k in RUN_KEYS}
    try:
        cfg = harness.config_for(experiment, **scen)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    run.setdefault("out", ".")
    run.setdefault("jobs", 1)
    if run["jobs"] < 1:
        raise ConfigError("--jobs must be >= 1")
    return cfg, run


def _out_dir(run):
    out = run["out"]
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return out


def _require(run, key, flag):
    if not run.get(key):
        raise ConfigError(f"{flag} is required")
    return run[key]


def _load_dataset(run, cfg):
    path = _require(run, "dataset", "--dataset")
    data = ds.load_dataset(path)
    if cfg.n_features < data.feature_count:
        data = data.select_features(cfg.n_features)
    return data


def cmd_gen_data(args):
    cfg, run = resolve(args)
    out = _out_dir(run)
    model = harness.build_environment(cfg)
    data = harness.prepare_dataset(cfg, model)
    ds.save_dataset(data, os.path.join(out, "dataset.csv"))
    channel_sim.save_environment(model, os.path.join(out, "environment.json"))
    print(f"locations={data.n_locations} estimates={data.n_estimates} features={data.feature_count}")
    return EXIT_OK


def cmd_train_pcd(args):
    cfg, run = resolve(args)
    data = _load_dataset(run, cfg)
    out = _out_dir(run)
    kind = run.get("detector", "dnnc")
    rng = harness.stream(cfg.seed, harness.EXP_CODES["train"])
    train_set, val_set = ds.split_train_val(data, cfg.train_fraction, rng)
    tp = ds.build_pairs(train_set, cfg.p_train, rng)
    vp = ds.build_pairs(val_set, cfg.p_val, rng)
    report_path = os.path.join(out, "train_report.csv")
    if kind == "dnnc":
        det, report = pcd.train_dnnc(tp, vp, cfg.dnnc_config(rng.integers(2**31)))
        with open(report_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss", "val_accuracy", "best"])
            for e, (a, b, c) in enumerate(zip(report.train_loss, report.val_loss, report.val_accuracy)):
                w.writerow([e, repr(float(a)), repr(float(b)), repr(float(c)), int(e == report.best_epoch)])
    else:
        det = harness.fit_detector(kind, train_set, val_set, tp, vp, cfg, rng)
        with open(report_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["detector", "threshold", "train_accuracy", "val_accuracy"])
            w.writerow([kind, repr(det.threshold), repr(pcd.accuracy(det, tp)), repr(pcd.accuracy(det, vp))])
    pcd.save_detector(det, os.path.join(out, "model.json"))
    print(f"detector={kind} threshold={det.threshold!r} val_accuracy={pcd.accuracy(det, vp):.4f}")
    return EXIT_OK


def cmd_eval_pcd(args):
    cfg, run = resolve(args)
    data = _load_dataset(run, cfg)
    det = pcd.load_detector(_require(run, "model", "--model"))
    out = _out_dir(run)
    if run.get("pairs"):
        pairs = ds.load_pairs(run["pairs"], data)
    else:
        pairs = ds.build_pairs(data, cfg.p_test, harness.stream(cfg.seed, 11))
    stats = det.statistics(pairs.first, pairs.second)
    dec = det.decisions(pairs.first, pairs.second)
    with open(os.path.join(out, "eval.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", "label", "statistic", "decision"])
        for i, (y, s, d) in enumerate(zip(pairs.labels, stats, dec)):
            w.writerow([i, ds.LABEL_NAMES[y], repr(float(s)), ds.LABEL_NAMES[d]])
    acc = float(np.mean(dec == pairs.labels))
    print(f"pairs={len(pairs)} accuracy={acc:.4f}")
    return EXIT_OK


def _read_frames(path):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if not rows and lineno == 1:
                    continue  # header
                raise ParseError(f"non-numeric value in {row!r}", lineno) from None
    if len({len(r) for r in rows}) > 1:
        raise ParseError("rows have differing lengths")
    return np.array(rows, float)


def cmd_detect(args):
    cfg, run = resolve(args)
    det = pcd.load_detector(_require(run, "model", "--model"))
    frames = _read_frames(_require(run, "frames_file", "--frames-file"))
    if "threshold" not in run:
        raise ConfigError("--threshold is required")
    decision = detect(frames, SdModel(run["threshold"], det, cfg.louvain_seed, cfg.mode))
    out = _out_dir(run)
    text = json.dumps(decision.as_record())
    with open(os.path.join(out, "decision.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_experiment(args):
    name = args.name
    cfg, run = resolve(args, name)
    out = _out_dir(run)
    if run.get("dataset"):
        data = _load_dataset(run, cfg)
    elif run.get("auto"):
        data = harness.prepare_dataset(cfg)
    else:
        raise ConfigError("give --dataset or --auto to simulate one")
    detectors = None
    if run.get("model") and name in ("roc", "speed"):
        detectors = {cfg.sd_detector: pcd.load_detector(run["model"])}
    jobs = run["jobs"]
    if name == "pcd-accuracy":
        result = harness.run_pcd_accuracy(cfg, data, run.get("sweep", "locations"), jobs)
    elif name == "roc":
        result = harness.run_roc(cfg, data, detectors, jobs)
    elif name == "speed":
        result = harness.run_speed_sweep(cfg, data, detectors, jobs)
    else:
        result = harness.run_pcd_comparison(cfg, data, None, jobs)
    paths = harness.write_results(result, out)
    for key, path in paths.items():
        print(f"{key}: {path}")
    return EXIT_OK


COMMANDS = {"gen-data": cmd_gen_data, "train-pcd": cmd_train_pcd, "eval-pcd": cmd_eval_pcd,
            "detect": cmd_detect, "experiment": cmd_experiment}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleScenarioError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
