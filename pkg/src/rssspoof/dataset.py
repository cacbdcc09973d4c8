"""Measurement grid, location-indexed RSS corpus and labeled pair sets."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .channel_sim import Point3, rss_vector_estimates
from .errors import ParseError, SchemaError

SAME = 0
DIFFERENT = 1
LABEL_NAMES = {SAME: "SAME", DIFFERENT: "DIFFERENT"}


def _readonly(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MeasurementGrid:
    """Transmitter locations grouped into straight lines.

    ``line_of[d]`` is the line index of location ``d``; within a line the
    points appear in order of their position along it.
    """

    locations: np.ndarray
    line_of: np.ndarray

    def __post_init__(self):
        loc = _readonly(self.locations, float).reshape(-1, 3)
        lines = _readonly(self.line_of, int).ravel()
        if lines.shape[0] != loc.shape[0]:
            raise ValueError("line_of must have one entry per location")
        if len(np.unique(loc, axis=0)) != len(loc):
            raise ValueError("grid locations must be pairwise distinct")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "line_of", lines)

    def __len__(self):
        return self.locations.shape[0]

    @property
    def n_lines(self):
        return len(np.unique(self.line_of))

    def line_indices(self, line):
        return np.flatnonzero(self.line_of == line)

    def line_ids(self):
        return np.unique(self.line_of)

    def nearest(self, points):
        """Index of the closest grid location for each row of ``points``."""
        pts = np.atleast_2d(np.asarray(points, float))
        d2 = ((pts[:, None, :] - self.locations[None, :, :]) ** 2).sum(axis=2)
        return np.argmin(d2, axis=1)

    def subset(self, indices):
        idx = np.asarray(indices, int)
        return MeasurementGrid(self.locations[idx], self.line_of[idx])


def generate_grid(n_lines=4, per_line=13, line_spacing=1.5, point_spacing=0.4,
                  origin=Point3(2.6, 0.75, 1.0)):
    """Parallel lines along +x, stacked along +y starting at ``origin``."""
    if n_lines < 1 or per_line < 2:
        raise ValueError("need n_lines >= 1 and per_line >= 2")
    if not (line_spacing > 0 and point_spacing > 0):
        raise ValueError("grid spacings must be positive")
    o = origin.as_array()
    locs, lines = [], []
    for li in range(n_lines):
        for k in range(per_line):
            locs.append(o + [k * point_spacing, li * line_spacing, 0.0])
            lines.append(li)
    return MeasurementGrid(np.array(locs), np.array(lines))


@dataclass(frozen=True)
class LocationDataset:
    """``estimates[d, e]`` is the e-th RSS vector estimate at location d.

    ``location_ids`` keeps the original grid index of each location so that
    subsets can be traced back to the full grid.
    """

    grid: MeasurementGrid
    estimates: np.ndarray
    n_samples: int
    location_ids: np.ndarray = None

    def __post_init__(self):
        est = _readonly(self.estimates, float)
        if est.ndim != 3:
            raise ValueError("estimates must have shape (D, E, F)")
        if est.shape[0] != len(self.grid):
            raise ValueError("one estimate block per grid location required")
        if np.any(est < 0):
            raise ValueError("RSS estimates must be nonnegative")
        ids = np.arange(est.shape[0]) if self.location_ids is None else self.location_ids
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "location_ids", _readonly(ids, int))

    @property
    def n_locations(self):
        return self.estimates.shape[0]

    @property
    def n_estimates(self):
        return self.estimates.shape[1]

    @property
    def feature_count(self):
        return self.estimates.shape[2]

    def subset(self, indices):
        idx = np.asarray(indices, int)
        return LocationDataset(self.grid.subset(idx), self.estimates[idx], self.n_samples,
                               self.location_ids[idx])

    def select_features(self, n_features):
        """Keep the first ``n_features`` entries of every vector."""
        if not 1 <= n_features <= self.feature_count:
            raise ValueError(f"n_features must lie in [1, {self.feature_count}]")
        return LocationDataset(self.grid, self.estimates[:, :, :n_features], self.n_samples,
                               self.location_ids)

    def estimate_slice(self, start, stop):
        """Keep estimates ``start:stop`` at every location."""
        return LocationDataset(self.grid, self.estimates[:, start:stop], self.n_samples,
                               self.location_ids)

    def vectors(self):
        """All estimates stacked as an ``(D*E, F)`` matrix."""
        return self.estimates.reshape(-1, self.feature_count)

    def __eq__(self, other):
        if not isinstance(other, LocationDataset):
            return NotImplemented
        return (self.n_samples == other.n_samples
                and np.array_equal(self.estimates, other.estimates)
                and np.array_equal(self.location_ids, other.location_ids)
                and np.array_equal(self.grid.locations, other.grid.locations)
                and np.array_equal(self.grid.line_of, other.grid.line_of))

    __hash__ = None


def collect_dataset(model, grid, n_estimates, n_samples, rng=None):
    """E independent RSS vector estimates of N samples at every grid point.

    Each location draws from its own child stream of ``rng`` so results do
    not depend on the order locations are visited in.
    """
    if n_estimates < 2:
        raise ValueError("need at least 2 estimates per location")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng)
    streams = rng.spawn(len(grid))
    est = np.stack([
        rss_vector_estimates(model, loc, n_estimates, n_samples, s)
        for loc, s in zip(grid.locations, streams)
    ])
    return LocationDataset(grid, est, int(n_samples))


def default_estimate_count(n_samples, budget=4888):
    return budget // n_samples


# -- pairs ---------------------------------------------------------------------

@dataclass(frozen=True)
class PairSet:
    """2P labeled pairs; the first P are SAME, the last P DIFFERENT.

    Location indices refer to rows of the dataset the pairs were drawn from.
    """

    first: np.ndarray
    second: np.ndarray
    labels: np.ndarray
    loc_a: np.ndarray
    est_a: np.ndarray
    loc_b: np.ndarray
    est_b: np.ndarray
    p: int

    def __len__(self):
        return self.labels.shape[0]

    def swapped(self):
        return PairSet(self.second, self.first, self.labels, self.loc_b, self.est_b,
                       self.loc_a, self.est_a, self.p)


def _distinct_pair(rng, n, size):
    a = rng.integers(n, size=size)
    b = rng.integers(n - 1, size=size)
    b = b + (b >= a)
    return a, b


def build_pairs(dataset, p, rng=None):
    D, E = dataset.n_locations, dataset.n_estimates
    if p < 1:
        raise ValueError("P must be >= 1")
    if D < 2:
        raise ValueError("need at least 2 locations to draw DIFFERENT pairs")
    if E < 2:
        raise ValueError("need at least 2 estimates per location")
    rng = np.random.default_rng(rng)
    d_same = rng.integers(D, size=p)
    e_same, e2_same = _distinct_pair(rng, E, p)
    d_diff, d2_diff = _distinct_pair(rng, D, p)
    e_diff, e2_diff = _distinct_pair(rng, E, p)
    loc_a = np.concatenate([d_same, d_diff])
    loc_b = np.concatenate([d_same, d2_diff])
    est_a = np.concatenate([e_same, e_diff])
    est_b = np.concatenate([e2_same, e2_diff])
    labels = np.repeat([SAME, DIFFERENT], p)
    X = dataset.estimates
    return PairSet(X[loc_a, est_a], X[loc_b, est_b], labels, loc_a, est_a, loc_b, est_b, int(p))


def split_train_val(dataset, train_fraction=0.8, rng=None):
    """Random disjoint split of the locations into training and validation."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    D = dataset.n_locations
    d_train = int(round(train_fraction * D))
    if d_train < 1 or D - d_train < 1:
        raise ValueError(f"split of {D} locations at {train_fraction} leaves an empty side")
    rng = np.random.default_rng(rng)
    perm = rng.permutation(D)
    return dataset.subset(np.sort(perm[:d_train])), dataset.subset(np.sort(perm[d_train:]))


# -- persistence ---------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def save_dataset(dataset, path):
    F = dataset.feature_count
    header = ["location_id", "line_id", "x", "y", "z", "estimate_id"] + [f"f{i}" for i in range(F)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# n_samples={dataset.n_samples}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for d in range(dataset.n_locations):
            loc = dataset.grid.locations[d]
            prefix = [int(dataset.location_ids[d]), int(dataset.grid.line_of[d])] + [_fmt(v) for v in loc]
            for e in range(dataset.n_estimates):
                w.writerow(prefix + [e] + [_fmt(v) for v in dataset.estimates[d, e]])


def load_dataset(path, feature_count=None):
    """Read a dataset CSV written by :func:`save_dataset`.

    Raises ParseError (with line number) on malformed rows and SchemaError if
    the header does not describe ``feature_count`` features.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    n_samples = None
    lineno = 0
    while lineno < len(lines) and lines[lineno].startswith("#"):
        key, _, value = lines[lineno][1:].strip().partition("=")
        if key == "n_samples":
            try:
                n_samples = int(value)
            except ValueError:
                raise ParseError(f"bad n_samples value {value!r}", lineno + 1) from None
        lineno += 1
    reader = csv.reader(io.StringIO("\n".join(lines[lineno:])))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", lineno + 1) from None
    fixed = ["location_id", "line_id", "x", "y", "z", "estimate_id"]
    if header[:6] != fixed:
        raise SchemaError(f"unexpected header columns {header[:6]}")
    feats = header[6:]
    F = len(feats)
    if F < 1 or feats != [f"f{i}" for i in range(F)]:
        raise SchemaError("feature columns must be f0..f{F-1}")
    if feature_count is not None and F != feature_count:
        raise SchemaError(f"header declares {F} features, expected {feature_count}")
    header_line = lineno + 1
    rows = {}
    order = []
    for i, row in enumerate(reader):
        line = header_line + 1 + i
        if not row:
            continue
        if len(row) != 6 + F:
            raise ParseError(f"expected {6 + F} fields, got {len(row)}", line)
        try:
            loc_id, line_id = int(row[0]), int(row[1])
            xyz = tuple(float(v) for v in row[2:5])
            est_id = int(row[5])
            vec = [float(v) for v in row[6:]]
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
        if loc_id not in rows:
            rows[loc_id] = (line_id, xyz, {})
            order.append(loc_id)
        entry = rows[loc_id]
        if entry[0] != line_id or entry[1] != xyz:
            raise ParseError(f"inconsistent geometry for location {loc_id}", line)
        if est_id in entry[2]:
            raise ParseError(f"duplicate estimate {est_id} for location {loc_id}", line)
        entry[2][est_id] = vec
    if not order:
        raise ParseError("no data rows", header_line + 1)
    counts = {len(rows[k][2]) for k in order}
    if len(counts) != 1:
        raise SchemaError("locations have differing estimate counts")
    E = counts.pop()
    est = np.empty((len(order), E, F))
    for d, k in enumerate(order):
        block = rows[k][2]
        if sorted(block) != list(range(E)):
            raise SchemaError(f"location {k} estimate ids are not 0..{E - 1}")
        for e in range(E):
            est[d, e] = block[e]
    grid = MeasurementGrid(np.array([rows[k][1] for k in order]), np.array([rows[k][0] for k in order]))
    if n_samples is None:
        n_samples = 0
    return LocationDataset(grid, est, n_samples, np.array(order))


def save_pairs(pairs, path, location_ids=None):
    ids = np.arange(max(pairs.loc_a.max(), pairs.loc_b.max()) + 1) if location_ids is None else location_ids
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", "label", "loc_a", "est_a", "loc_b", "est_b"])
        for i in range(len(pairs)):
            w.writerow([i, LABEL_NAMES[int(pairs.labels[i])], int(ids[pairs.loc_a[i]]),
                        int(pairs.est_a[i]), int(ids[pairs.loc_b[i]]), int(pairs.est_b[i])])


def load_pairs(path, dataset):
    """Rebuild a PairSet from its CSV, looking vectors up in ``dataset``."""
    index = {int(k): d for d, k in enumerate(dataset.location_ids)}
    names = {v: k for k, v in LABEL_NAMES.items()}
    cols = {"labels": [], "loc_a": [], "est_a": [], "loc_b": [], "est_b": []}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["pair_id", "label", "loc_a", "est_a", "loc_b", "est_b"]:
            raise SchemaError(f"unexpected pair header {header}")
        for i, row in enumerate(reader):
            line = i + 2
            if len(row) != 6:
                raise ParseError(f"expected 6 fields, got {len(row)}", line)
            try:
                cols["labels"].append(names[row[1]])
                cols["loc_a"].append(index[int(row[2])])
                cols["est_a"].append(int(row[3]))
                cols["loc_b"].append(index[int(row[4])])
                cols["est_b"].append(int(row[5]))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad field: {exc}", line) from None
    arr = {k: np.array(v, int) for k, v in cols.items()}
    for key in ("est_a", "est_b"):
        bad = np.flatnonzero((arr[key] < 0) | (arr[key] >= dataset.n_estimates))
        if bad.size:
            raise ParseError("estimate index out of range", int(bad[0]) + 2)
    X = dataset.estimates
    p = int(np.sum(arr["labels"] == SAME))
    return PairSet(X[arr["loc_a"], arr["est_a"]], X[arr["loc_b"], arr["est_b"]], arr["labels"],
                   arr["loc_a"], arr["est_a"], arr["loc_b"], arr["est_b"], p)
