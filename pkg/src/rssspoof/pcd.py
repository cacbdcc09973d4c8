"""Position-change detectors: decide whether two RSS vectors share a location.

Every detector exposes a symmetric statistic and a threshold; it declares
CHANGED when the statistic exceeds the threshold. ``DnncDetector`` is the
learned, symmetrized network; ``DbcDetector`` and ``KmcDetector`` are the
distance and K-means baselines.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import neuralnet as nn
from .dataset import DIFFERENT, SAME
from .errors import DegenerateCalibrationError, SchemaError

SAME_LOCATION = SAME
CHANGED = DIFFERENT


def preprocess(r, r2, epsilon=nn.DB_FLOOR):
    """``[dB r, dB r', dB r - dB r']`` with entries floored at ``epsilon``.

    Works row-wise on ``(B, F)`` batches as well as on single vectors.
    """
    r = np.asarray(r, float)
    r2 = np.asarray(r2, float)
    if r.shape != r2.shape:
        raise ValueError("RSS vectors must have equal length")
    return nn.rss_pair_db(np.concatenate([r, r2], axis=-1), epsilon)


class PositionChangeDetector:
    threshold = 0.0

    def statistics(self, r, r2):
        """Vectorized statistic over rows of ``(B, F)`` arrays."""
        raise NotImplementedError

    def statistic(self, r, r2):
        return float(self.statistics(np.atleast_2d(r), np.atleast_2d(r2))[0])

    def decide(self, r, r2):
        return CHANGED if self.statistic(r, r2) > self.threshold else SAME_LOCATION

    def decisions(self, r, r2):
        return np.where(self.statistics(r, r2) > self.threshold, CHANGED, SAME_LOCATION)


@dataclass
class DnncDetector(PositionChangeDetector):
    network: nn.Network
    threshold: float = 0.0
    epsilon: float = nn.DB_FLOOR

    def __post_init__(self):
        if not np.isfinite(self.threshold) and not np.isinf(self.threshold):
            raise ValueError("threshold must not be NaN")

    @property
    def feature_count(self):
        return self.network.layers[0].weights.shape[1] // 3

    def half_statistics(self, r, r2):
        r = np.asarray(r, float)
        r2 = np.asarray(r2, float)
        if r.shape != r2.shape:
            raise ValueError("RSS vectors must have equal length")
        return nn.forward(self.network, np.concatenate([r, r2], axis=-1))

    def statistics(self, r, r2):
        r = np.atleast_2d(r)
        r2 = np.atleast_2d(r2)
        return (self.half_statistics(r, r2) + self.half_statistics(r2, r)) / 2.0


def dnnc_statistic(model, r, r2):
    return model.statistic(r, r2)


def dbc_statistics(q, r, r2):
    if q not in (1, 2):
        raise ValueError("norm order must be 1 or 2")
    diff = np.atleast_2d(np.asarray(r, float) - np.asarray(r2, float))
    return np.linalg.norm(diff, ord=q, axis=1)


def dbc_statistic(q, r, r2):
    return float(dbc_statistics(q, r, r2)[0])


@dataclass
class DbcDetector(PositionChangeDetector):
    q: int = 2
    threshold: float = 0.0

    def __post_init__(self):
        if self.q not in (1, 2):
            raise ValueError("norm order must be 1 or 2")

    def statistics(self, r, r2):
        return dbc_statistics(self.q, r, r2)


def centroid_distances(centroids, u):
    u = np.atleast_2d(np.asarray(u, float))
    return np.sqrt(((u[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2))


def kmc_statistics(centroids, r, r2):
    if centroids is None:
        raise ValueError("K-means classifier has no fitted centroids")
    phi = centroid_distances(centroids, r)
    phi2 = centroid_distances(centroids, r2)
    return np.linalg.norm(phi - phi2, axis=1)


@dataclass
class KmcDetector(PositionChangeDetector):
    centroids: np.ndarray = None
    threshold: float = 0.0

    @property
    def n_clusters(self):
        return 0 if self.centroids is None else self.centroids.shape[0]

    def statistics(self, r, r2):
        return kmc_statistics(self.centroids, r, r2)


def kmc_statistic(model, r, r2):
    return model.statistic(r, r2)


# -- K-means -------------------------------------------------------------------

@dataclass
class LloydResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: list
    n_iter: int


def lloyd(vectors, init, max_iter=300):
    """Lloyd iterations until the assignment (or the centroids) stop changing.

    A cluster that loses all its members is re-seeded at the point farthest
    from its current centroid. ``inertia[i]`` is the within-cluster sum of
    squares after the i-th update.
    """
    X = np.asarray(vectors, float)
    C = np.array(init, float)
    labels = None
    inertia = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        for c in range(C.shape[0]):
            if not np.any(new == c):
                own = d2[np.arange(len(X)), new]
                far = int(np.argmax(own))
                new[far] = c
        changed = labels is None or np.any(new != labels)
        labels = new
        prev = C.copy()
        for c in range(C.shape[0]):
            C[c] = X[labels == c].mean(axis=0)
        inertia.append(float(((X - C[labels]) ** 2).sum()))
        # Unmoved centroids imply the next assignment is unchanged too.
        if not changed or np.array_equal(C, prev):
            break
    return LloydResult(C, labels, inertia, it)


def kmeans_fit(vectors, n_clusters, rng=None, max_iter=300):
    X = np.asarray(vectors, float)
    if n_clusters < 1:
        raise ValueError("need at least one cluster")
    uniq = np.unique(X, axis=0)
    if uniq.shape[0] < n_clusters:
        raise ValueError(f"need {n_clusters} distinct vectors, got {uniq.shape[0]}")
    rng = np.random.default_rng(rng)
    init = uniq[rng.choice(uniq.shape[0], n_clusters, replace=False)]
    return lloyd(X, init, max_iter).centroids


# -- threshold calibration -----------------------------------------------------

def threshold_accuracy(statistics, labels, tau):
    s = np.asarray(statistics, float)
    y = np.asarray(labels) == CHANGED
    return float(np.mean((s > tau) == y))


def calibrate_threshold(statistics, labels):
    """Accuracy-maximizing threshold for the rule CHANGED iff s > tau.

    Candidates are -inf, +inf and midpoints between consecutive distinct
    statistic values; among equally accurate candidates the smallest wins.
    """
    s = np.asarray(statistics, float)
    y = np.asarray(labels) == CHANGED
    if s.shape != y.shape or s.size == 0:
        raise ValueError("need equally many statistics and labels")
    if y.all() or not y.any():
        raise DegenerateCalibrationError("calibration needs both SAME and CHANGED samples")
    values, inverse = np.unique(s, return_inverse=True)
    pos = np.bincount(inverse, weights=y, minlength=values.size)
    neg = np.bincount(inverse, weights=~y, minlength=values.size)
    # Threshold just below values[k]: everything from k upward is CHANGED.
    correct_changed = np.concatenate([np.cumsum(pos[::-1])[::-1], [0.0]])
    correct_same = np.concatenate([[0.0], np.cumsum(neg)])
    correct = correct_changed + correct_same
    k = int(np.argmax(correct))
    if k == 0:
        return -np.inf
    if k == values.size:
        return np.inf
    return float((values[k - 1] + values[k]) / 2.0)


# -- training ------------------------------------------------------------------

def fit_dbc(pairs, q):
    stats = dbc_statistics(q, pairs.first, pairs.second)
    return DbcDetector(q, calibrate_threshold(stats, pairs.labels))


def fit_kmc(vectors, pairs, n_clusters=15, rng=None):
    centroids = kmeans_fit(vectors, n_clusters, rng)
    stats = kmc_statistics(centroids, pairs.first, pairs.second)
    return KmcDetector(centroids, calibrate_threshold(stats, pairs.labels))


@dataclass(frozen=True)
class DnncConfig:
    """Architecture and optimizer settings for :func:`train_dnnc`."""

    hidden: tuple = (512, 512, 512)
    slope: float = 0.01
    epsilon: float = nn.DB_FLOOR
    dtype: str = "float64"
    standardize: bool = True
    train: nn.TrainConfig = nn.TrainConfig()


def standardization(pairs, epsilon=nn.DB_FLOOR):
    """Per-feature offset/scale for the fixed dB layer, from training pairs.

    Both level blocks share per-antenna statistics pooled over the two pair
    members; the difference block is scaled but not shifted.
    """
    F = pairs.first.shape[1]
    feats = preprocess(pairs.first, pairs.second, epsilon)
    levels = np.concatenate([feats[:, :F], feats[:, F:2 * F]])
    mu = levels.mean(axis=0)
    sd = levels.std(axis=0)
    dsd = np.sqrt((feats[:, 2 * F:] ** 2).mean(axis=0))
    sd = np.where(sd > 0, sd, 1.0)
    dsd = np.where(dsd > 0, dsd, 1.0)
    offset = np.concatenate([mu, mu, np.zeros(F)])
    scale = np.concatenate([sd, sd, dsd])
    return {"offset": offset.tolist(), "scale": scale.tolist()}


def _oriented(pairs):
    X = np.concatenate([np.hstack([pairs.first, pairs.second]),
                        np.hstack([pairs.second, pairs.first])])
    y = np.concatenate([pairs.labels, pairs.labels]).astype(float)
    return X, y


def train_dnnc(train_pairs, val_pairs, cfg=DnncConfig()):
    """Train the pair network on both orientations of every pair.

    The threshold is then set by maximum accuracy of the symmetrized
    statistic on the validation pairs.
    """
    if len(train_pairs) == 0 or len(val_pairs) == 0:
        raise ValueError("training and validation pair sets must be non-empty")
    F = train_pairs.first.shape[1]
    rng = np.random.default_rng(cfg.train.seed)
    transform = {"kind": "rss_pair_db", "epsilon": cfg.epsilon}
    if cfg.standardize:
        transform.update(standardization(train_pairs, cfg.epsilon))
    net = nn.build_network(2 * F, cfg.hidden, cfg.slope, rng, transform, np.dtype(cfg.dtype))
    Xt, yt = _oriented(train_pairs)
    Xv, yv = _oriented(val_pairs)
    report = nn.train(net, Xt, yt, Xv, yv, cfg.train)
    det = DnncDetector(net, 0.0, cfg.epsilon)
    stats = det.statistics(val_pairs.first, val_pairs.second)
    det.threshold = calibrate_threshold(stats, val_pairs.labels)
    return det, report


def accuracy(detector, pairs):
    return float(np.mean(detector.decisions(pairs.first, pairs.second) == pairs.labels))


# -- frame sequences -----------------------------------------------------------

def pairwise_decisions(detector, frames):
    """``(T, T)`` boolean matrix, True where the detector says SAME location."""
    X = np.asarray(frames, float)
    T = X.shape[0]
    if T < 2:
        raise ValueError("need at least two frames")
    i, j = np.triu_indices(T, k=1)
    same = detector.decisions(X[i], X[j]) == SAME_LOCATION
    out = np.eye(T, dtype=bool)
    out[i, j] = same
    out[j, i] = same
    return out


# -- persistence ---------------------------------------------------------------

def detector_to_dict(det):
    if isinstance(det, DnncDetector):
        doc = nn.network_to_dict(det.network)
        doc.update(kind="dnnc", threshold=det.threshold, epsilon_floor=det.epsilon)
        return doc
    if isinstance(det, DbcDetector):
        return {"kind": f"dbc-l{det.q}", "q": det.q, "threshold": det.threshold}
    if isinstance(det, KmcDetector):
        return {"kind": "kmc", "centroids": det.centroids.tolist(), "threshold": det.threshold}
    raise TypeError(f"cannot serialize {type(det).__name__}")


def detector_from_dict(doc):
    kind = doc.get("kind")
    try:
        if kind == "dnnc":
            return DnncDetector(nn.network_from_dict(doc), float(doc["threshold"]),
                                float(doc.get("epsilon_floor", nn.DB_FLOOR)))
        if kind in ("dbc-l1", "dbc-l2"):
            return DbcDetector(int(doc["q"]), float(doc["threshold"]))
        if kind == "kmc":
            return KmcDetector(np.asarray(doc["centroids"], float), float(doc["threshold"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad {kind} detector document: {exc}") from None
    raise SchemaError(f"unknown detector kind {kind!r}")


def save_detector(det, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(detector_to_dict(det), fh)


def load_detector(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            from .errors import ParseError
            raise ParseError(exc.msg, exc.lineno) from None
    return detector_from_dict(doc)
