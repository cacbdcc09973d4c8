"""Spoofing decision from a region sequence.

A frame whose region differs from its predecessor's but appeared earlier is
a revisit. Movement of a single user tends to enter fresh regions, while two
interleaved transmitters keep returning to each other's regions, so the sum
of revisit weights ``1/nu`` (``nu`` = distinct regions seen since the last
visit) is large under attack.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import community
from .pcd import pairwise_decisions

GENERAL = "general"
PAPER_LITERAL = "literal"
NO_ATTACK = "NO_ATTACK"
ATTACK = "ATTACK"

_FIRST_INDEX = {GENERAL: 1, PAPER_LITERAL: 3}


def _sequence(seq):
    if isinstance(seq, community.RegionSequence):
        return list(seq.c.tolist())
    return list(seq)


def revisit_profile(seq, mode=GENERAL):
    """Per-frame revisit weights ``w`` and distinct-region counts ``nu``.

    ``mode=PAPER_LITERAL`` zeroes frames before index 3 (the sum in the
    original statistic starts there); region labels may be any hashables.
    """
    if mode not in _FIRST_INDEX:
        raise ValueError(f"unknown mode {mode!r}")
    c = _sequence(seq)
    T = len(c)
    w = np.zeros(T)
    nu = np.zeros(T, dtype=int)
    last = {}
    for n, region in enumerate(c):
        if n >= _FIRST_INDEX[mode] and region in last and c[n - 1] != region:
            between = set(c[last[region] + 1:n])
            nu[n] = len(between)
            w[n] = 1.0 / nu[n]
        last[region] = n
    return w, nu


@dataclass(frozen=True)
class SdStatistic:
    value: float
    weights: np.ndarray
    nu: np.ndarray


def statistic(seq, mode=GENERAL):
    w, nu = revisit_profile(seq, mode)
    return SdStatistic(math.fsum(w.tolist()), w, nu)


def calibrate_threshold_h0(h0_statistics, target_pfa):
    """Smallest observed value (or -inf) whose exceedance rate is <= target."""
    s = np.sort(np.asarray(h0_statistics, float))
    if s.size == 0:
        raise ValueError("need at least one H0 statistic")
    if not 0 < target_pfa < 1:
        raise ValueError("target_pfa must lie in (0, 1)")
    # Number of samples strictly above each candidate.
    above = s.size - np.searchsorted(s, s, side="right")
    ok = above <= target_pfa * s.size
    return float(s[np.argmax(ok)])


@dataclass
class SdModel:
    threshold: float
    pcd: object
    louvain_seed: int = 0
    mode: str = GENERAL

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.mode not in _FIRST_INDEX:
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class SdDecision:
    value: str
    statistic: SdStatistic
    region_sequence: community.RegionSequence
    threshold: float = field(default=None)

    def as_record(self):
        return {
            "decision": self.value,
            "statistic": self.statistic.value,
            "threshold": self.threshold,
            "region_sequence": self.region_sequence.c.tolist(),
            "weights": self.statistic.weights.tolist(),
        }

    def to_json(self):
        return json.dumps(self.as_record())


def regions_from_decisions(decisions, seed=0):
    graph = community.build_graph(decisions)
    return community.region_sequence(community.louvain(graph, seed))


def statistic_from_decisions(decisions, seed=0, mode=GENERAL):
    return statistic(regions_from_decisions(decisions, seed), mode)


def detect(frames, model):
    """PCD on all frame pairs, Louvain regions, revisit statistic, threshold."""
    frames = np.asarray(frames, float)
    if frames.ndim != 2 or frames.shape[0] < 2:
        raise ValueError("need a (T, F) frame matrix with T >= 2")
    seq = regions_from_decisions(pairwise_decisions(model.pcd, frames), model.louvain_seed)
    stat = statistic(seq, model.mode)
    value = ATTACK if stat.value > model.threshold else NO_ATTACK
    return SdDecision(value, stat, seq, model.threshold)
