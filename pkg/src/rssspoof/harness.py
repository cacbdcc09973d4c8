"""Monte Carlo experiments: PCD accuracy, ROC, speed sweep, PCD comparison.

Every random quantity of a trial is drawn from a stream keyed by
``(master seed, experiment, parameter index, hypothesis, trial)``, so
results depend only on the configuration and seed, never on execution
order or worker count. Detectors compared against each other see the same
frame sequences (common random numbers).
"""

import csv
import dataclasses
import datetime
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel_sim
from . import dataset as ds
from . import neuralnet as nn
from . import pcd
from .spoof_detector import GENERAL, calibrate_threshold_h0, statistic_from_decisions
from .errors import InfeasibleScenarioError

EXP_CODES = {"pcd-accuracy": 1, "roc": 2, "speed": 3, "pcd-compare": 4, "data": 9, "train": 10}
H0, H1 = 0, 1
DETECTOR_KINDS = ("dnnc", "dbc-l1", "dbc-l2", "kmc", "perfect", "coin")


def stream(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


# -- trajectories --------------------------------------------------------------

@dataclass(frozen=True)
class TrajectorySpec:
    speed: float
    frame_rate: float
    frame_count: int
    grid: ds.MeasurementGrid
    seed: int = None

    def __post_init__(self):
        if self.speed < 0 or not self.frame_rate > 0 or self.frame_count < 1:
            raise ValueError("need speed >= 0, frame_rate > 0 and frame_count >= 1")

    @property
    def path_length(self):
        # Duration of the sequence is frame_count / frame_rate seconds.
        return self.speed * self.frame_count / self.frame_rate


def _line_geometry(grid):
    out = []
    for line in grid.line_ids():
        idx = grid.line_indices(line)
        pts = grid.locations[idx]
        start, end = pts[0], pts[-1]
        length = float(np.linalg.norm(end - start))
        out.append((start, (end - start) / length if length else np.zeros(3), length))
    return out


# Slack for grid coordinates built by floating-point arithmetic.
_LENGTH_TOL = 1e-9


def trajectory_feasible(spec):
    return any(L + _LENGTH_TOL >= 2 * spec.path_length for _, _, L in _line_geometry(spec.grid))


def gen_trajectory_h0(spec, rng=None):
    """Grid indices visited by one user moving at constant speed on a line.

    The line is uniform among those long enough, the starting point is
    uniform among points at least the path length from both ends, and the
    direction is one of the two along the line.
    """
    rng = np.random.default_rng(spec.seed if rng is None else rng)
    dx = spec.path_length
    lines = [g for g in _line_geometry(spec.grid) if g[2] + _LENGTH_TOL >= 2 * dx]
    if not lines:
        raise InfeasibleScenarioError(
            f"path length {dx:.3g} m needs a line of at least {2 * dx:.3g} m")
    start, u, L = lines[rng.integers(len(lines))]
    s0 = rng.uniform(dx, L - dx) if L > 2 * dx else dx
    sign = 1.0 if rng.random() < 0.5 else -1.0
    t = np.arange(spec.frame_count) / spec.frame_rate
    pts = start + np.outer(s0 + sign * spec.speed * t, u)
    return spec.grid.nearest(pts)


def realize_frames(dataset, locations, rng=None):
    """One stored estimate per frame, drawn uniformly at its location."""
    locs = np.asarray(locations, int)
    if np.any(locs < 0) or np.any(locs >= dataset.n_locations):
        raise ValueError("location index out of range")
    rng = np.random.default_rng(rng)
    est = rng.integers(dataset.n_estimates, size=locs.size)
    return dataset.estimates[locs, est]


def merge_h1(frames1, frames2, rng=None, mask=None):
    """Interleave two users frame by frame; ``mask`` True takes user 1."""
    f1 = np.asarray(frames1)
    f2 = np.asarray(frames2)
    if f1.shape != f2.shape:
        raise ValueError("user sequences must have equal shape")
    if mask is None:
        mask = np.random.default_rng(rng).random(f1.shape[0]) < 0.5
    mask = np.asarray(mask, bool)
    merged = np.where(mask.reshape(-1, *([1] * (f1.ndim - 1))), f1, f2)
    return merged, mask


def simulate_sequence(dataset, speed, frame_rate, frame_count, hypothesis, rng,
                      attacker_speed=None):
    """Frames and true grid indices of one sequence under H0 or H1."""
    grid = dataset.grid
    loc1 = gen_trajectory_h0(TrajectorySpec(speed, frame_rate, frame_count, grid), rng)
    f1 = realize_frames(dataset, loc1, rng)
    if hypothesis == H0:
        return f1, loc1
    v2 = speed if attacker_speed is None else attacker_speed
    loc2 = gen_trajectory_h0(TrajectorySpec(v2, frame_rate, frame_count, grid), rng)
    f2 = realize_frames(dataset, loc2, rng)
    frames, mask = merge_h1(f1, f2, rng)
    return frames, np.where(mask, loc1, loc2)


# -- configuration -------------------------------------------------------------

@dataclass
class ScenarioConfig:
    seed: int = 0
    n_samples: int = 16
    n_features: int = 16
    n_estimates: int = None
    env_seed: int = 0
    snr_db: float = channel_sim.DEFAULT_SNR_DB
    receiver_gains_db: tuple = channel_sim.DEFAULT_RECEIVER_GAINS_DB
    receiver_noise_db: tuple = channel_sim.DEFAULT_RECEIVER_NOISE_DB
    # PCD training
    p_train: int = 3000
    p_val: int = 1000
    p_test: int = 1000
    n_locations: int = 52
    train_fraction: float = 0.8
    n_clusters: int = 15
    hidden: tuple = (512, 512, 512)
    learning_rate: float = 1e-3
    l1_coefficient: float = 1e-5
    max_epochs: int = 200
    batch_size: int = 64
    patience: int = 20
    dtype: str = "float64"
    # experiments
    detectors: tuple = ("dnnc", "dbc-l1", "dbc-l2", "kmc")
    locations_list: tuple = (10, 15, 20, 25, 30, 35, 40, 45)
    features_list: tuple = ()
    sd_detector: str = "dnnc"
    pfa: float = 0.02
    speeds: tuple = (0.0, 0.5, 1.0)
    attacker_speed: float = None
    frame_rates: tuple = (10.0,)
    frame_counts: tuple = (20,)
    trials: int = 1000
    repeats: int = 1
    mode: str = GENERAL
    louvain_seed: int = 0

    def __post_init__(self):
        for name in ("n_samples", "n_features", "p_train", "p_val", "p_test", "n_clusters",
                     "trials", "repeats", "n_locations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.pfa < 1:
            raise ValueError("pfa must lie in (0, 1)")
        for name in ("hidden", "receiver_gains_db", "receiver_noise_db", "detectors", "locations_list", "features_list", "speeds",
                     "frame_rates", "frame_counts"):
            setattr(self, name, tuple(getattr(self, name)))
        for kind in self.detectors + (self.sd_detector,):
            if kind not in DETECTOR_KINDS:
                raise ValueError(f"unknown detector {kind!r}")

    @property
    def estimates_per_location(self):
        return self.n_estimates or ds.default_estimate_count(self.n_samples)

    def dnnc_config(self, seed):
        train = nn.TrainConfig(self.learning_rate, self.l1_coefficient, self.max_epochs,
                               self.batch_size, self.patience, int(seed))
        return pcd.DnncConfig(hidden=self.hidden, dtype=self.dtype, train=train)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, doc):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


# Per-experiment defaults.
EXPERIMENT_DEFAULTS = {
    "pcd-accuracy": dict(p_train=1250, p_val=150, n_locations=40, trials=20),
    "roc": dict(frame_rates=(100.0,), frame_counts=(30,), speeds=(0.0, 0.5, 1.0, 2.0)),
    "speed": dict(pfa=0.02, frame_counts=(20,), frame_rates=(10.0, 100.0),
                  speeds=(0.0, 0.25, 0.5, 1.0, 1.2, 2.0, 4.0, 8.0, 12.0)),
    "pcd-compare": dict(pfa=0.02, frame_rates=(10.0,), frame_counts=(10, 20, 30), speeds=(0.2,),
                        detectors=("dnnc", "dbc-l1", "dbc-l2", "kmc", "perfect")),
}


def config_for(experiment, **overrides):
    base = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
    base.update(overrides)
    return ScenarioConfig(**base)


# -- data and detectors --------------------------------------------------------

def build_environment(config):
    return channel_sim.default_environment(seed=config.env_seed, snr_db=config.snr_db,
                                       receiver_gains_db=config.receiver_gains_db,
                                       receiver_noise_db=config.receiver_noise_db)


def prepare_dataset(config, model=None):
    model = model or build_environment(config)
    grid = ds.generate_grid()
    data = ds.collect_dataset(model, grid, config.estimates_per_location, config.n_samples,
                              stream(config.seed, EXP_CODES["data"]))
    if config.n_features < data.feature_count:
        data = data.select_features(config.n_features)
    return data


class PerfectDetector:
    """Oracle PCD for diagnostics: compares true grid indices."""

    kind = "perfect"


class CoinDetector:
    """Fair-coin PCD, a chance-level reference."""

    kind = "coin"


def fit_detector(kind, train_set, val_set, train_pairs, val_pairs, config, rng):
    if kind == "dnnc":
        det, _ = pcd.train_dnnc(train_pairs, val_pairs, config.dnnc_config(rng.integers(2**31)))
        return det
    if kind in ("dbc-l1", "dbc-l2"):
        return pcd.fit_dbc(train_pairs, int(kind[-1]))
    if kind == "kmc":
        return pcd.fit_kmc(train_set.vectors(), train_pairs, config.n_clusters, rng)
    if kind == "perfect":
        return PerfectDetector()
    if kind == "coin":
        return CoinDetector()
    raise ValueError(f"unknown detector {kind!r}")


def pair_accuracy(detector, pairs, rng):
    if isinstance(detector, PerfectDetector):
        decisions = np.where(pairs.loc_a == pairs.loc_b, pcd.SAME_LOCATION, pcd.CHANGED)
    elif isinstance(detector, CoinDetector):
        decisions = rng.integers(2, size=len(pairs))
    else:
        decisions = detector.decisions(pairs.first, pairs.second)
    return float(np.mean(decisions == pairs.labels))


def split_estimate_pools(dataset):
    """First half of the estimates for training, second half for frames."""
    half = dataset.n_estimates // 2
    return dataset.estimate_slice(0, half), dataset.estimate_slice(half, dataset.n_estimates)


def train_sd_detectors(config, dataset, kinds=None):
    """Fit the requested PCDs on all grid locations of the training pool."""
    kinds = tuple(kinds or (config.sd_detector,))
    rng = stream(config.seed, EXP_CODES["train"])
    train_set, val_set = ds.split_train_val(dataset, config.train_fraction, rng)
    tp = ds.build_pairs(train_set, config.p_train, rng)
    vp = ds.build_pairs(val_set, config.p_val, rng)
    out = {}
    for i, kind in enumerate(kinds):
        out[kind] = fit_detector(kind, train_set, val_set, tp, vp, config,
                                 stream(config.seed, EXP_CODES["train"], i + 1))
    return out


# -- results -------------------------------------------------------------------

@dataclass
class MonteCarloResult:
    experiment: str
    config: dict
    seed: int
    rows: list = field(default_factory=list)  # (trial, param, value)
    tables: dict = field(default_factory=dict)  # name -> list of dicts

    def values(self, param):
        return np.array([v for _, p, v in self.rows if p == param])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def _summary(result):
    groups = {}
    for _, p, v in result.rows:
        groups.setdefault(p, []).append(v)
    return [{"experiment": result.experiment, "param": p, "mean": float(np.mean(vs)),
             "std": float(np.std(vs)), "count": len(vs)} for p, vs in groups.items()]


def write_results(result, out_dir, timestamp=True):
    """Long-format results, a mean/std summary, extra tables and a config echo."""
    os.makedirs(out_dir, exist_ok=True)
    stem = result.experiment
    paths = {}
    path = os.path.join(out_dir, f"{stem}_results.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["experiment", "trial", "param", "value"])
        for trial, p, v in result.rows:
            w.writerow([stem, trial, p, _fmt(v)])
    paths["results"] = path
    tables = {"summary": _summary(result), **result.tables}
    for name, rows in tables.items():
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if rows:
                keys = list(rows[0])
                w.writerow(keys)
                for row in rows:
                    w.writerow([_fmt(row[k]) for k in keys])
        paths[name] = path
    echo = {"experiment": stem, "seed": result.seed, "config": result.config}
    if timestamp:
        echo["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    path = os.path.join(out_dir, f"{stem}_config.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(echo, fh, indent=1)
        fh.write("\n")
    paths["config"] = path
    return paths


def _pmap(fn, tasks, jobs):
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# -- PCD accuracy (accuracy vs training locations or features) --------------------

def _pcd_accuracy_task(task):
    config, dataset, sweep, index, value, trial = task
    rng = stream(config.seed, EXP_CODES["pcd-accuracy"], index, trial)
    data = dataset
    D = config.n_locations
    if sweep == "features":
        data = dataset.select_features(value)
    else:
        D = value
    perm = rng.permutation(data.n_locations)
    chosen = data.subset(np.sort(perm[:D]))
    test = data.subset(np.sort(perm[D:]))
    train_set, val_set = ds.split_train_val(chosen, config.train_fraction, rng)
    tp = ds.build_pairs(train_set, config.p_train, rng)
    vp = ds.build_pairs(val_set, config.p_val, rng)
    test_pairs = ds.build_pairs(test, config.p_test, rng)
    out = []
    for j, kind in enumerate(config.detectors):
        krng = stream(config.seed, EXP_CODES["pcd-accuracy"], index, trial, j + 1)
        det = fit_detector(kind, train_set, val_set, tp, vp, config, krng)
        out.append((kind, pair_accuracy(det, test_pairs, krng)))
    return out


def run_pcd_accuracy(config, dataset, sweep="locations", jobs=1):
    """Test-pair accuracy over fresh location subsets and fresh initializations.

    ``sweep="locations"`` varies the number D of training+validation
    locations (the rest are test locations); ``sweep="features"`` fixes
    ``config.n_locations`` and keeps the first F features.
    """
    values = config.locations_list if sweep == "locations" else config.features_list
    if not values:
        raise ValueError(f"no values to sweep for {sweep!r}")
    if sweep == "locations":
        if max(values) >= dataset.n_locations:
            raise ValueError("need D < number of grid locations to keep test locations")
    elif config.n_locations >= dataset.n_locations:
        raise ValueError("need D < number of grid locations to keep test locations")
    key = "D" if sweep == "locations" else "F"
    tasks = [(config, dataset, sweep, i, v, t)
             for i, v in enumerate(values) for t in range(config.trials)]
    outputs = _pmap(_pcd_accuracy_task, tasks, jobs)
    result = MonteCarloResult("pcd-accuracy", config.to_dict(), config.seed)
    table = {}
    for (_, _, _, _, v, t), out in zip(tasks, outputs):
        for kind, acc in out:
            result.rows.append((t, f"{key}={v};detector={kind}", acc))
            table.setdefault((v, kind), []).append(acc)
    result.tables["accuracy"] = [
        {key: v, "detector": kind, "mean": float(np.mean(a)), "std": float(np.std(a)), "trials": len(a)}
        for (v, kind), a in table.items()
    ]
    return result


# -- spoofing detection trials -------------------------------------------------

def sd_statistic(detector, frames, locations, config):
    if isinstance(detector, PerfectDetector):
        decisions = locations[:, None] == locations[None, :]
    elif isinstance(detector, CoinDetector):
        raise ValueError("the coin PCD is only defined for pair accuracy")
    else:
        decisions = pcd.pairwise_decisions(detector, frames)
    return statistic_from_decisions(decisions, config.louvain_seed, config.mode).value


def _sd_task(task):
    config, frames_pool, detectors, exp, index, hypothesis, trials, speed, rate, T = task
    out = []
    for trial in trials:
        rng = stream(config.seed, EXP_CODES[exp], index, hypothesis, trial)
        frames, locs = simulate_sequence(frames_pool, speed, rate, T, hypothesis, rng,
                                         config.attacker_speed)
        out.append([sd_statistic(det, frames, locs, config) for det in detectors])
    return out


def sd_statistics(config, frames_pool, detectors, exp, index, hypothesis, n_trials,
                  speed, rate, T, offset=0, jobs=1):
    """``(n_trials, len(detectors))`` statistics on shared sequences."""
    trials = list(range(offset, offset + n_trials))
    chunks = [trials[i::jobs] for i in range(jobs)] if jobs and jobs > 1 else [trials]
    tasks = [(config, frames_pool, list(detectors), exp, index, hypothesis, c, speed, rate, T)
             for c in chunks if c]
    outs = _pmap(_sd_task, tasks, jobs)
    stats = np.empty((n_trials, len(detectors)))
    for c, o in zip((t[6] for t in tasks), outs):
        stats[np.array(c) - offset] = o
    return stats


@dataclass
class RocCurve:
    pfa: np.ndarray
    pd: np.ndarray
    thresholds: np.ndarray
    n_h0: int
    n_h1: int

    @property
    def auc(self):
        return float(np.trapezoid(self.pd, self.pfa))

    def pd_at(self, pfa):
        """Largest pd among operating points with pfa not above ``pfa``."""
        ok = self.pfa <= pfa + 1e-12
        return float(self.pd[ok].max())


def roc_curve(h0, h1):
    """ROC from thresholds at every observed statistic value and -inf."""
    s0 = np.asarray(h0, float)
    s1 = np.asarray(h1, float)
    if s0.size == 0 or s1.size == 0:
        raise ValueError("need statistics under both hypotheses")
    gammas = np.concatenate([np.unique(np.concatenate([s0, s1]))[::-1], [-np.inf]])
    s0s, s1s = np.sort(s0), np.sort(s1)
    pfa = (s0.size - np.searchsorted(s0s, gammas, side="right")) / s0.size
    pd = (s1.size - np.searchsorted(s1s, gammas, side="right")) / s1.size
    return RocCurve(pfa, pd, gammas, s0.size, s1.size)


def auc_rank(h0, h1):
    """Probability that an H1 statistic beats an H0 one, ties counting half."""
    s0 = np.asarray(h0, float)[:, None]
    s1 = np.asarray(h1, float)[None, :]
    return float(np.mean((s1 > s0) + 0.5 * (s1 == s0)))


def _check_feasible(speed, rate, T, grid):
    spec = TrajectorySpec(speed, rate, T, grid)
    if not trajectory_feasible(spec):
        raise InfeasibleScenarioError(
            f"speed {speed} m/s over {T} frames at {rate} frames/s needs a line of "
            f"{2 * spec.path_length:.3g} m")


def _sd_setup(config, dataset, detectors, kinds):
    train_pool, frames_pool = split_estimate_pools(dataset)
    if detectors is None:
        detectors = train_sd_detectors(config, train_pool, kinds)
    return frames_pool, detectors


def run_roc(config, dataset, detectors=None, jobs=1):
    """ROC of the spoofing detector per speed (first frame rate and count)."""
    if config.trials < 1:
        raise ValueError("need at least one trial per hypothesis")
    rate, T = config.frame_rates[0], config.frame_counts[0]
    for v in config.speeds:
        _check_feasible(v, rate, T, dataset.grid)
    frames_pool, detectors = _sd_setup(config, dataset, detectors, (config.sd_detector,))
    det = detectors[config.sd_detector]
    result = MonteCarloResult("roc", config.to_dict(), config.seed)
    curves, roc_rows = {}, []
    for i, v in enumerate(config.speeds):
        s = {}
        for h in (H0, H1):
            s[h] = sd_statistics(config, frames_pool, [det], "roc", i, h, config.trials,
                                 v, rate, T, jobs=jobs)[:, 0]
            for t, val in enumerate(s[h]):
                result.rows.append((t, f"speed={v};hypothesis=H{h}", val))
        curve = roc_curve(s[H0], s[H1])
        curves[v] = curve
        for g, a, b in zip(curve.thresholds, curve.pfa, curve.pd):
            roc_rows.append({"speed": v, "gamma": g, "pfa": a, "pd": b})
    result.tables["roc"] = roc_rows
    result.tables["auc"] = [{"speed": v, "auc": c.auc} for v, c in curves.items()]
    result.curves = curves
    return result


def _calibrated_point(config, frames_pool, detectors, exp, index, speed, rate, T, jobs):
    """Calibrate on one H0 batch, measure pfa on a fresh H0 batch and pd on H1."""
    n = config.trials
    cal = sd_statistics(config, frames_pool, detectors, exp, index, H0, n, speed, rate, T, 0, jobs)
    h0 = sd_statistics(config, frames_pool, detectors, exp, index, H0, n, speed, rate, T, n, jobs)
    h1 = sd_statistics(config, frames_pool, detectors, exp, index, H1, n, speed, rate, T, 0, jobs)
    out = []
    for j in range(len(detectors)):
        gamma = calibrate_threshold_h0(cal[:, j], config.pfa)
        out.append({"gamma": gamma, "pfa_cal": float(np.mean(cal[:, j] > gamma)),
                    "pfa": float(np.mean(h0[:, j] > gamma)), "pd": float(np.mean(h1[:, j] > gamma))})
    return out, (cal, h0, h1)


def run_speed_sweep(config, dataset, detectors=None, jobs=1):
    """pd at the target pfa versus user speed, per frame rate."""
    if not config.speeds:
        raise ValueError("speeds list must be non-empty")
    frames_pool, detectors = _sd_setup(config, dataset, detectors, (config.sd_detector,))
    det = detectors[config.sd_detector]
    T = config.frame_counts[0]
    result = MonteCarloResult("speed", config.to_dict(), config.seed)
    table = []
    for ri, rate in enumerate(config.frame_rates):
        for si, v in enumerate(config.speeds):
            index = ri * 1000 + si
            spec = TrajectorySpec(v, rate, T, frames_pool.grid)
            if not trajectory_feasible(spec):
                table.append({"rate": rate, "speed": v, "feasible": False,
                              "gamma": None, "pfa_cal": None, "pfa": None, "pd": None})
                continue
            point, (_, h0, h1) = _calibrated_point(config, frames_pool, [det], "speed", index,
                                                    v, rate, T, jobs)
            p = point[0]
            for t in range(config.trials):
                result.rows.append((t, f"rate={rate};speed={v};hypothesis=H0", h0[t, 0]))
                result.rows.append((t, f"rate={rate};speed={v};hypothesis=H1", h1[t, 0]))
            table.append({"rate": rate, "speed": v, "feasible": True, **p})
    result.tables["speed_sweep"] = table
    return result


def run_pcd_comparison(config, dataset, detectors=None, jobs=1):
    """pd at the target pfa versus frame count for several PCDs.

    Each of ``config.repeats`` blocks draws its own trials; within a block
    every PCD sees identical sequences.
    """
    if not config.frame_counts:
        raise ValueError("frame_counts must be non-empty")
    for T in config.frame_counts:
        _check_feasible(config.speeds[0], config.frame_rates[0], T, dataset.grid)
    frames_pool, detectors = _sd_setup(config, dataset, detectors, config.detectors)
    kinds = [k for k in config.detectors if k in detectors]
    dets = [detectors[k] for k in kinds]
    rate, v = config.frame_rates[0], config.speeds[0]
    result = MonteCarloResult("pcd-compare", config.to_dict(), config.seed)
    table = []
    for ti, T in enumerate(config.frame_counts):
        for b in range(config.repeats):
            index = ti * 1000 + b
            points, _ = _calibrated_point(config, frames_pool, dets, "pcd-compare", index,
                                          v, rate, T, jobs)
            for kind, p in zip(kinds, points):
                result.rows.append((b, f"T={T};detector={kind};metric=pd", p["pd"]))
                result.rows.append((b, f"T={T};detector={kind};metric=pfa", p["pfa"]))
                table.append({"T": T, "repeat": b, "detector": kind, **p})
    result.tables["comparison"] = table
    return result
