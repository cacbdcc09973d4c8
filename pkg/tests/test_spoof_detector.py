import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssspoof import spoof_detector as sd
from rssspoof import pcd
from rssspoof.community import Partition, region_sequence


def brute_statistic(seq, start=1):
    """Direct reading of the revisit definition, in exact arithmetic."""
    total = Fraction(0)
    for n in range(start, len(seq)):
        if seq[n] == seq[n - 1]:
            continue
        back = n - 1
        while back >= 0 and seq[back] != seq[n]:
            back -= 1
        if back < 0:
            continue
        between = []
        for x in seq[back + 1:n]:
            if x not in between:
                between.append(x)
        total += Fraction(1, len(between))
    return total


def exhaustive_mismatches(max_len=8, alphabet=3):
    bad = 0
    for T in range(1, max_len + 1):
        for seq in itertools.product(range(alphabet), repeat=T):
            if sd.statistic(seq, sd.GENERAL).value != float(brute_statistic(seq, 1)):
                bad += 1
            if sd.statistic(seq, sd.PAPER_LITERAL).value != float(brute_statistic(seq, 3)):
                bad += 1
    return bad


def test_exhaustive_oracle():
    assert exhaustive_mismatches() == 0


def test_hand_cases():
    A, B, C, D = "ABCD"
    assert sd.statistic([A, B, C, D]).value == 0
    assert sd.statistic([A, B, A, B], sd.GENERAL).value == 2
    assert sd.statistic([A, B, A, B], sd.PAPER_LITERAL).value == 1
    assert sd.statistic([A, B, C, A]).value == 0.5
    assert sd.statistic([A]).value == 0


def test_profile_cases():
    w, nu = sd.revisit_profile(list("AAAA"))
    assert w.tolist() == [0, 0, 0, 0]
    w, nu = sd.revisit_profile(list("ABAB"))
    assert w.tolist() == [0, 0, 1, 1] and nu.tolist() == [0, 0, 1, 1]
    w, nu = sd.revisit_profile(list("ABCA"))
    assert w.tolist() == [0, 0, 0, 0.5] and nu[3] == 2
    with pytest.raises(ValueError):
        sd.revisit_profile([0, 1], mode="other")


def test_accepts_region_sequence():
    seq = region_sequence(Partition([3, 1, 3, 1]))
    assert sd.statistic(seq).value == 2


seqs = st.lists(st.integers(0, 4), min_size=1, max_size=30)


@settings(max_examples=200, deadline=None)
@given(seqs, st.permutations(range(5)))
def test_relabel_invariance(seq, perm):
    assert sd.statistic(seq).value == sd.statistic([perm[x] for x in seq]).value


@settings(max_examples=200, deadline=None)
@given(seqs)
def test_weight_bounds(seq):
    s = sd.statistic(seq)
    assert np.all((s.weights >= 0) & (s.weights <= 1))
    nz = s.nu > 0
    np.testing.assert_array_equal(s.weights[nz], 1.0 / s.nu[nz])
    assert np.all(s.weights[~nz] == 0)
    transitions = sum(a != b for a, b in zip(seq, seq[1:]))
    assert s.value <= transitions


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=8))
def test_contiguous_regions_give_zero(runs):
    seq = [i for i, r in enumerate(runs) for _ in range(r)]
    assert sd.statistic(seq).value == 0


@settings(max_examples=100, deadline=None)
@given(seqs, seqs, st.integers(0, 4))
def test_aba_pattern_counts(pre, post, b):
    # An adjacent A,B,A contributes a full unit, whatever surrounds it.
    seq = pre + [7, b, 7] + post
    assert sd.statistic(seq).value >= 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=10))
def test_spread_revisit_is_positive(mid):
    # With more regions between the visits the unit is shared: [A,B,C,A] gives 1/2.
    seq = [0] + mid + [0]
    assert sd.statistic(seq).value >= 1 / len(set(mid))


def test_calibration_cases():
    assert sd.calibrate_threshold_h0([0, 0, 0, 1], 0.25) == 0
    assert sd.calibrate_threshold_h0([0, 0, 0], 0.05) == 0
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            sd.calibrate_threshold_h0([0, 1], bad)
    with pytest.raises(ValueError):
        sd.calibrate_threshold_h0([], 0.1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 6).map(lambda v: v / 2), min_size=1, max_size=25),
       st.floats(0.01, 0.99))
def test_calibration_brute_force(samples, pfa):
    s = np.array(samples)
    ok = [g for g in sorted(set(samples)) if np.mean(s > g) <= pfa]
    assert sd.calibrate_threshold_h0(samples, pfa) == min(ok)


def far_frames(ids, F=4):
    """Frames whose location ids map to well-separated signatures."""
    base = np.eye(F) * 1e-6 + 1e-9
    return np.array([base[i] for i in ids])


PERFECT = pcd.DbcDetector(2, 1e-12)


def test_detect_identical_frames():
    model = sd.SdModel(0.0, PERFECT)
    out = sd.detect(far_frames([0] * 6), model)
    assert out.value == sd.NO_ATTACK
    assert out.statistic.value == 0
    assert set(out.region_sequence.c.tolist()) == {0}


def test_detect_alternating_is_attack():
    T = 10
    out = sd.detect(far_frames([0, 1] * (T // 2)), sd.SdModel(0.5, PERFECT))
    assert out.value == sd.ATTACK
    assert out.statistic.value >= T / 2 - 1


def test_detect_slow_user():
    out = sd.detect(far_frames([0, 0, 0, 1, 1, 1, 2, 2, 3, 3]), sd.SdModel(1.0, PERFECT))
    assert out.value == sd.NO_ATTACK
    assert out.statistic.value == 0


def test_decision_record():
    out = sd.detect(far_frames([0, 1, 0, 1]), sd.SdModel(0.5, PERFECT))
    rec = json.loads(out.to_json())
    assert set(rec) == {"decision", "statistic", "threshold", "region_sequence", "weights"}
    assert rec["decision"] == sd.ATTACK
    assert rec["region_sequence"] == [0, 1, 0, 1]
    assert (rec["decision"] == sd.ATTACK) == (rec["statistic"] > rec["threshold"])


def test_detect_rejects_short_input_and_bad_model():
    with pytest.raises(ValueError):
        sd.detect(far_frames([0]), sd.SdModel(0.0, PERFECT))
    with pytest.raises(ValueError):
        sd.SdModel(float("nan"), PERFECT)
