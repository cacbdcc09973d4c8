import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssspoof import channel_sim as channel
from rssspoof.channel_sim import MultipathModel, Point3, ReceiverSpec


def one_ray_model(distance=1.0, alpha=2.0, noise=0.0, gains=(1.0,), scat=None):
    """Antenna at the origin, transmitter probed at (distance, 0, 0)."""
    K = len(gains)
    scat = np.full((K, 3), np.nan) if scat is None else scat
    return MultipathModel(np.zeros((1, 3)), noise, scat, np.array([gains], complex), alpha)


def test_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        Point3(0.0, float("nan"), 1.0)
    with pytest.raises(ValueError):
        Point3(float("inf"), 0.0, 0.0)


def test_receiver_invariants():
    with pytest.raises(ValueError):
        ReceiverSpec(Point3(0, 0, 0), (), 0.0)
    with pytest.raises(ValueError):
        ReceiverSpec(Point3(0, 0, 0), (Point3(0, 0, 0),), -1.0)


def test_model_invariants():
    with pytest.raises(ValueError):
        one_ray_model(alpha=1.0)
    with pytest.raises(ValueError):
        one_ray_model(alpha=4.5)
    with pytest.raises(ValueError):
        one_ray_model(gains=(np.inf,))
    with pytest.raises(ValueError):
        MultipathModel(np.zeros((1, 3)), 0.0, np.zeros((0, 3)), np.zeros((1, 0)), 2.0)


def test_single_ray_unit_case():
    m = one_ray_model()
    assert channel.rss_true(m, Point3(1, 0, 0), 0) == pytest.approx(1.0, rel=1e-12)


def test_in_phase_and_antiphase_rays():
    # Two direct rays share the 1 m path, so their phases match.
    m = one_ray_model(gains=(1.0, 1.0))
    assert channel.rss_true(m, Point3(1, 0, 0), 0) == pytest.approx(4.0, rel=1e-12)
    m = one_ray_model(gains=(1.0, -1.0))
    assert channel.rss_true(m, Point3(1, 0, 0), 0) == pytest.approx(0.0, abs=1e-24)


def test_scatter_path_length():
    scat = np.array([[0.0, 3.0, 0.0]])
    m = one_ray_model(scat=scat)
    d = m.ray_lengths(Point3(4.0, 3.0, 0.0))
    assert d[0, 0] == pytest.approx(4.0 + 3.0)


def test_rss_true_bad_antenna():
    m = one_ray_model()
    for bad in (-1, 1, 2.0):
        with pytest.raises(ValueError):
            channel.rss_true(m, Point3(1, 0, 0), bad)


def test_out_of_bounds_location():
    m = channel.default_environment()
    with pytest.raises(ValueError):
        channel.rss_true(m, Point3(20.0, 1.0, 1.0), 0)


def test_rss_true_adds_noise():
    m = one_ray_model(noise=0.25)
    assert channel.rss_true(m, Point3(1, 0, 0), 0) == pytest.approx(1.25)


def test_noise_free_samples_equal_rss_true():
    m = one_ray_model(distance=1.0)
    loc = Point3(2.0, 0, 0)
    block = channel.sample_block(m, loc, 0, 50, rng=1)
    np.testing.assert_allclose(block.values, channel.rss_true(m, loc, 0), rtol=1e-12)


def test_sample_block_mean_within_three_standard_errors():
    m = channel.default_environment(seed=3)
    loc = Point3(4.0, 2.0, 1.0)
    for antenna in (0, 7, 15):
        block = channel.sample_block(m, loc, antenna, 100_000, rng=antenna)
        # |h s + v|^2 is noncentral chi-square: variance 2|h|^2 s2 + s2^2.
        h2 = abs(m.field(loc)[antenna]) ** 2
        s2 = m.noise_power[antenna]
        se = np.sqrt((2 * h2 * s2 + s2 ** 2) / block.values.size)
        assert abs(block.values.mean() - channel.rss_true(m, loc, antenna)) < 3 * se


def test_sample_block_determinism_and_validation():
    m = channel.default_environment()
    loc = Point3(5, 3, 1)
    a = channel.sample_block(m, loc, 2, 16, rng=np.random.default_rng(9))
    b = channel.sample_block(m, loc, 2, 16, rng=np.random.default_rng(9))
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(ValueError):
        channel.sample_block(m, loc, 2, 0)
    with pytest.raises(ValueError):
        channel.SampleBlock([1.0, -0.1])


def test_rss_estimate_cases():
    assert channel.rss_estimate(channel.SampleBlock([1, 1, 1, 1])) == 1.0
    assert channel.rss_estimate(channel.SampleBlock([0, 2])) == 1.0
    with pytest.raises(ValueError):
        channel.rss_estimate(channel.SampleBlock([]))


def test_rss_estimate_matches_summation_oracle():
    rng = np.random.default_rng(0)
    values = rng.exponential(size=16)
    total = 0.0
    for v in values:
        total += v
    assert channel.rss_estimate(channel.SampleBlock(values)) == pytest.approx(total / 16, rel=1e-14)


def test_vector_estimate_single_antenna_reduces_to_block():
    m = one_ray_model(noise=0.1)
    loc = Point3(1.5, 0, 0)
    vec = channel.rss_vector_estimate(m, loc, 16, rng=np.random.default_rng(4))
    assert vec.shape == (1,)
    assert vec[0] >= 0


def test_vector_estimate_noise_free_is_exact():
    rx = channel.default_receivers(noise_power=0.0)
    m = channel.build_environment(rx, seed=1, snr_db=20)
    loc = Point3(3, 2, 1)
    vec = channel.rss_vector_estimate(m, loc, 8, rng=2)
    np.testing.assert_allclose(vec, channel.rss_true_vector(m, loc), rtol=1e-12)


def test_vector_estimate_converges():
    m = channel.default_environment(seed=2)
    loc = Point3(6.0, 4.0, 1.0)
    vec = channel.rss_vector_estimate(m, loc, 100_000, rng=5)
    np.testing.assert_allclose(vec, channel.rss_true_vector(m, loc), rtol=0.01)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 32))
def test_estimates_nonnegative(seed, n):
    m = channel.default_environment(seed=seed % 50)
    est = channel.rss_vector_estimates(m, Point3(5, 3, 1), 3, n, rng=seed)
    assert est.shape == (3, m.n_antennas)
    assert np.all(est >= 0)


def test_single_ray_profile_monotone():
    m = one_ray_model()
    prof = channel.spatial_profile(m, Point3(0.5, 0, 0), Point3(1, 0, 0), 5.0, 0.05, 0)
    assert np.all(np.diff(prof[:, 1]) < 0)


def test_profile_zero_length_and_validation():
    m = one_ray_model()
    prof = channel.spatial_profile(m, Point3(1, 0, 0), Point3(0, 1, 0), 0.0, 0.1, 0)
    assert prof.shape == (1, 2)
    assert prof[0, 0] == 0.0
    with pytest.raises(ValueError):
        channel.spatial_profile(m, Point3(1, 0, 0), Point3(0, 1, 0), 1.0, 0.0, 0)


def _gap(profile, separation, step):
    k = int(round(separation / step))
    return np.abs(profile[k:, 1] - profile[:-k, 1])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_small_scale_fading(seed):
    m = channel.default_environment(seed=seed)
    prof = channel.spatial_profile(m, Point3(2.5, 1.0, 1.0), Point3(1, 0, 0), 5.0, 0.01, 0)
    # 10 cm apart yet more than 6 dB different.
    assert _gap(prof, 0.10, 0.01).max() > 6.0
    # Some 10 cm gap beats some 2 m gap.
    assert _gap(prof, 0.10, 0.01).max() > _gap(prof, 2.0, 0.01).min()


def test_calibrated_snr_at_room_centre():
    rx = channel.default_receivers()
    m = channel.build_environment(rx, seed=4, snr_db=10.0)
    d = m.ray_lengths(Point3(5.0, 3.0, 1.0))
    mean_power = m.tx_power * np.mean(np.sum(np.abs(m.gains) ** 2 / d ** m.alphas, axis=1))
    assert 10 * np.log10(mean_power / np.mean(m.noise_power)) == pytest.approx(10.0)


def test_front_end_gain_keeps_snr():
    flat = channel.default_environment(seed=1, receiver_gains_db=(0, 0, 0, 0))
    spread = channel.default_environment(seed=1, receiver_gains_db=(0, 10, 20, 30))
    loc = Point3(4, 2, 1)
    ratio = channel.rss_true_vector(spread, loc) / channel.rss_true_vector(flat, loc)
    np.testing.assert_allclose(ratio, np.repeat(10 ** (np.arange(4)), 4), rtol=1e-10)
    np.testing.assert_allclose(spread.noise_power / flat.noise_power, ratio, rtol=1e-10)


def test_noise_figures_and_snr_reference():
    nf = (0.0, 3.0, 6.0, 9.0)
    m = channel.default_environment(seed=2, snr_db=12.0, receiver_gains_db=(0, 0, 0, 0),
                                    receiver_noise_db=nf)
    np.testing.assert_allclose(m.noise_power / m.noise_power.min(),
                               np.repeat(10 ** (np.array(nf) / 10), 4), rtol=1e-12)
    d = m.ray_lengths(Point3(5.0, 3.0, 1.0))
    mean_power = m.tx_power * np.mean(np.sum(np.abs(m.gains) ** 2 / d ** m.alphas, axis=1))
    # The SNR is quoted against the quietest receiver.
    assert 10 * np.log10(mean_power / m.noise_power.min()) == pytest.approx(12.0)


def test_environment_json_round_trip(tmp_path):
    m = channel.default_environment(seed=6, snr_db=3.0, receiver_gains_db=(0, 5, 10, 15),
                                    receiver_noise_db=(0, 1, 2, 3))
    path = tmp_path / "env.json"
    channel.save_environment(m, path)
    back = channel.load_environment(path)
    loc = Point3(3.3, 2.2, 1.1)
    np.testing.assert_array_equal(channel.rss_true_vector(m, loc), channel.rss_true_vector(back, loc))
    json.loads(path.read_text())


def test_environment_from_seed_config():
    cfg = {"seed": 2, "n_rays": 8, "alpha": 3.0, "snr_db": 15.0, "noise_power": 1e-9}
    a = channel.environment_from_config(cfg)
    b = channel.environment_from_config(cfg)
    assert a.n_rays == 8
    np.testing.assert_array_equal(a.gains, b.gains)
    np.testing.assert_array_equal(a.scatterers, b.scatterers)
