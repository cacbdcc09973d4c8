import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rssspoof import channel_sim as channel
from rssspoof import dataset as ds
from rssspoof.channel_sim import Point3
from rssspoof.errors import ParseError, SchemaError


@pytest.fixture(scope="module")
def small_data():
    model = channel.default_environment(seed=1)
    return ds.collect_dataset(model, ds.generate_grid(), 6, 4, rng=3)


def random_dataset(rng, D, E, F):
    grid = ds.generate_grid(n_lines=1, per_line=D) if D >= 2 else None
    est = rng.exponential(size=(D, E, F))
    return ds.LocationDataset(grid, est, 16)


def test_default_grid_has_52_locations():
    g = ds.generate_grid()
    assert len(g) == 52
    assert g.n_lines == 4
    for line in g.line_ids():
        pts = g.locations[g.line_indices(line)]
        steps = np.diff(pts, axis=0)
        np.testing.assert_allclose(steps, np.tile([0.4, 0, 0], (12, 1)), atol=1e-12)


def test_two_point_grid():
    g = ds.generate_grid(1, 2, 3.0, 1.0)
    assert len(g) == 2
    assert np.linalg.norm(g.locations[1] - g.locations[0]) == pytest.approx(1.0)


def test_grid_rejects_bad_spacing():
    with pytest.raises(ValueError):
        ds.generate_grid(4, 13, 1.5, 0.0)
    with pytest.raises(ValueError):
        ds.generate_grid(0, 13)
    with pytest.raises(ValueError):
        ds.MeasurementGrid(np.zeros((2, 3)), [0, 0])


def test_nearest_snaps_to_grid():
    g = ds.generate_grid()
    idx = g.nearest(g.locations + 0.05)
    np.testing.assert_array_equal(idx, np.arange(52))


def test_collect_shape_and_budget():
    model = channel.default_environment(seed=0)
    E = ds.default_estimate_count(16)
    assert E == 305
    data = ds.collect_dataset(model, ds.generate_grid(1, 3), E, 16, rng=0)
    assert data.estimates.shape == (3, 305, 16)


def test_collect_requires_two_estimates():
    model = channel.default_environment()
    with pytest.raises(ValueError):
        ds.collect_dataset(model, ds.generate_grid(1, 2), 1, 16)


def test_noise_free_estimates_identical():
    model = channel.build_environment(channel.default_receivers(noise_power=0.0), seed=2)
    data = ds.collect_dataset(model, ds.generate_grid(1, 3), 5, 8, rng=1)
    for d in range(3):
        np.testing.assert_allclose(data.estimates[d], np.broadcast_to(data.estimates[d, 0], (5, 16)),
                                   rtol=1e-12)


def test_collect_same_seed_identical(small_data):
    model = channel.default_environment(seed=1)
    again = ds.collect_dataset(model, ds.generate_grid(), 6, 4, rng=3)
    assert again == small_data


def test_build_pairs_counts_and_labels(small_data):
    pairs = ds.build_pairs(small_data, 1250, rng=0)
    assert len(pairs) == 2500
    assert np.all(pairs.labels[:1250] == ds.SAME)
    assert np.all(pairs.labels[1250:] == ds.DIFFERENT)


def test_minimal_pairs_forced():
    rng = np.random.default_rng(0)
    data = random_dataset(rng, 2, 2, 3)
    pairs = ds.build_pairs(data, 1, rng=5)
    assert {pairs.est_a[0], pairs.est_b[0]} == {0, 1}
    assert {pairs.loc_a[1], pairs.loc_b[1]} == {0, 1}
    assert pairs.est_a[1] != pairs.est_b[1]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(2, 9), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_pair_provenance_invariants(D, E, P, seed):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, D, E, 2)
    pairs = ds.build_pairs(data, P, rng)
    same = pairs.loc_a == pairs.loc_b
    np.testing.assert_array_equal(same, pairs.labels == ds.SAME)
    assert np.all(pairs.est_a[same] != pairs.est_b[same])
    assert np.sum(pairs.labels == ds.SAME) == P
    np.testing.assert_array_equal(pairs.first, data.estimates[pairs.loc_a, pairs.est_a])
    np.testing.assert_array_equal(pairs.second, data.estimates[pairs.loc_b, pairs.est_b])


def test_label_audit_over_many_builds():
    rng = np.random.default_rng(11)
    data = random_dataset(rng, 5, 3, 1)
    for _ in range(10_000 // 50):
        pairs = ds.build_pairs(data, 25, rng)
        assert np.all((pairs.loc_a == pairs.loc_b) == (pairs.labels == ds.SAME))


def test_pair_draw_uniformity():
    rng = np.random.default_rng(2)
    data = random_dataset(rng, 4, 3, 1)
    pairs = ds.build_pairs(data, 40_000, rng)
    diff = pairs.labels == ds.DIFFERENT
    combos = pairs.loc_a[diff] * 4 + pairs.loc_b[diff]
    counts = np.bincount(combos, minlength=16).reshape(4, 4)
    assert np.all(np.diag(counts) == 0)
    off = counts[~np.eye(4, dtype=bool)]
    # 12 ordered pairs, each with probability 1/12.
    assert np.all(np.abs(off / diff.sum() - 1 / 12) < 0.01)


def test_build_pairs_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        ds.build_pairs(ds.LocationDataset(ds.generate_grid(1, 2).subset([0]), np.ones((1, 3, 2)), 1), 1)
    with pytest.raises(ValueError):
        ds.build_pairs(random_dataset(rng, 3, 2, 1), 0)


def test_split_40_gives_32_and_8(small_data):
    sub = small_data.subset(np.arange(40))
    tr, va = ds.split_train_val(sub, 0.8, rng=1)
    assert (tr.n_locations, va.n_locations) == (32, 8)
    ids = set(tr.location_ids.tolist()) | set(va.location_ids.tolist())
    assert ids == set(range(40))
    assert not set(tr.location_ids.tolist()) & set(va.location_ids.tolist())


def test_split_two_locations():
    data = random_dataset(np.random.default_rng(0), 2, 2, 1)
    tr, va = ds.split_train_val(data, 0.5, rng=0)
    assert tr.n_locations == va.n_locations == 1


def test_split_errors(small_data):
    for frac in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            ds.split_train_val(small_data, frac)


def test_dataset_round_trip(tmp_path, small_data):
    path = tmp_path / "data.csv"
    ds.save_dataset(small_data, path)
    back = ds.load_dataset(path)
    assert back == small_data
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[1].startswith("location_id,line_id,x,y,z,estimate_id,f0,")
    assert "\r" not in text


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_random_dataset_round_trip(tmp_path_factory, D, E, F, seed):
    data = random_dataset(np.random.default_rng(seed), D, E, F)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    ds.save_dataset(data, path)
    assert ds.load_dataset(path) == data


def test_truncated_file_reports_line(tmp_path, small_data):
    path = tmp_path / "data.csv"
    ds.save_dataset(small_data.subset([0, 1]), path)
    text = path.read_text()
    path.write_text(text[: len(text) - 40])
    with pytest.raises(ParseError, match=r"line \d+"):
        ds.load_dataset(path)


def test_wrong_feature_count_is_schema_error(tmp_path, small_data):
    path = tmp_path / "data.csv"
    ds.save_dataset(small_data.subset([0]), path)
    with pytest.raises(SchemaError):
        ds.load_dataset(path, feature_count=8)
    lines = path.read_text().splitlines()
    lines[1] = lines[1].replace("f3", "g3")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError):
        ds.load_dataset(path)


def test_non_numeric_value(tmp_path, small_data):
    path = tmp_path / "data.csv"
    ds.save_dataset(small_data.subset([0]), path)
    lines = path.read_text().splitlines()
    fields = lines[3].split(",")
    fields[7] = "abc"
    lines[3] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="line 4"):
        ds.load_dataset(path)


def test_pairs_round_trip(tmp_path, small_data):
    sub = small_data.subset([3, 10, 20, 33])
    pairs = ds.build_pairs(sub, 30, rng=4)
    path = tmp_path / "pairs.csv"
    ds.save_pairs(pairs, path, sub.location_ids)
    back = ds.load_pairs(path, sub)
    np.testing.assert_array_equal(back.first, pairs.first)
    np.testing.assert_array_equal(back.labels, pairs.labels)
    assert path.read_text().splitlines()[0] == "pair_id,label,loc_a,est_a,loc_b,est_b"


def test_pairs_bad_rows(tmp_path, small_data):
    path = tmp_path / "pairs.csv"
    path.write_text("pair_id,label,loc_a,est_a,loc_b,est_b\n0,MAYBE,0,0,0,1\n")
    with pytest.raises(ParseError, match="line 2"):
        ds.load_pairs(path, small_data)
    path.write_text("pair_id,label,loc_a,est_a,loc_b,est_b\n0,SAME,0,0,0,99\n")
    with pytest.raises(ParseError):
        ds.load_pairs(path, small_data)


def test_select_features_and_slices(small_data):
    sel = small_data.select_features(4)
    assert sel.feature_count == 4
    np.testing.assert_array_equal(sel.estimates, small_data.estimates[:, :, :4])
    assert small_data.estimate_slice(0, 3).n_estimates == 3
    with pytest.raises(ValueError):
        small_data.select_features(17)


def test_point_origin_default():
    g = ds.generate_grid(origin=Point3(0, 0, 0), n_lines=2, per_line=2, line_spacing=1, point_spacing=1)
    np.testing.assert_array_equal(g.locations, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
