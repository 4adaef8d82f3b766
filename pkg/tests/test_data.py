import numpy as np
import pytest

from survcut import (BlockLayout, BlockVector, CutPointModel, ValidationError,
                     load_csv, save_csv, validate_dataset)
from survcut.data import block_slice


def test_minimal_dataset():
    ds = validate_dataset([[1.0], [2.0], [3.0]], [1, 2, 3], [1, 1, 1])
    assert ds.n == 3 and ds.p == 1
    assert ds.feature_names == ("x0",)
    assert ds.has_events


def test_negative_time_message():
    with pytest.raises(ValidationError, match="negative survival time at row 0"):
        validate_dataset([[1.0], [2.0]], [-1, 2], [1, 1])


def test_nonfinite_names_column():
    with pytest.raises(ValidationError, match="non-finite value at row 1, column b"):
        validate_dataset([[1.0, 2.0], [3.0, np.nan]], [1, 2], [1, 1],
                         feature_names=("a", "b"))


def test_bad_event_flag():
    with pytest.raises(ValidationError, match="event indicator must be 0 or 1 at row 1"):
        validate_dataset([[1.0], [2.0]], [1, 2], [1, 2])


def test_all_censored_warns():
    with pytest.warns(UserWarning, match="all subjects censored"):
        ds = validate_dataset([[1.0], [2.0]], [1, 2], [0, 0])
    assert not ds.has_events


def test_rescale_column():
    ds = validate_dataset([[0.0], [5.0], [10.0]], [1, 2, 3], [1, 1, 1], rescale=True)
    np.testing.assert_allclose(ds.features[:, 0], [0.0, 0.5, 1.0])
    assert ds.rescaled


def test_idempotent_passthrough():
    ds = validate_dataset([[1.0], [2.0]], [1, 2], [1, 0])
    assert validate_dataset(ds) is ds


def test_arrays_locked():
    ds = validate_dataset([[1.0], [2.0]], [1, 2], [1, 0])
    with pytest.raises(ValueError):
        ds.times[0] = 5.0


def test_subset_keeps_names():
    ds = validate_dataset(np.arange(8.0).reshape(4, 2), [1, 2, 3, 4], [1, 0, 1, 0],
                          feature_names=("u", "v"))
    sub = ds.subset(np.array([2, 0]))
    assert sub.n == 2 and sub.feature_names == ("u", "v")
    np.testing.assert_allclose(sub.times, [3.0, 1.0])


def test_length_mismatch():
    with pytest.raises(ValidationError, match="length mismatch"):
        validate_dataset([[1.0], [2.0]], [1, 2, 3], [1, 0])


# ---------------------------------------------------------------------------


def test_block_layout_indexing():
    layout = BlockLayout((2, 3))
    flat = np.array([10.0, 11.0, 12.0, 13.0, 14.0])
    np.testing.assert_allclose(block_slice(flat, layout, 0), [10.0, 11.0])
    np.testing.assert_allclose(block_slice(flat, layout, 1), [12.0, 13.0, 14.0])
    with pytest.raises(IndexError):
        layout.bounds(2)
    assert layout.total == 5 and layout.n_blocks == 2
    np.testing.assert_array_equal(layout.edges, [0, 2, 5])


def test_block_layout_rejects_singletons():
    with pytest.raises(ValidationError, match="at least 2"):
        BlockLayout((2, 1))


def test_block_vector_roundtrip():
    layout = BlockLayout((2, 2))
    bv = BlockVector(np.array([1.0, -1.0, 2.0, -2.0]), layout)
    np.testing.assert_allclose(bv.block(1), [2.0, -2.0])
    z = BlockVector.zeros(layout)
    assert z.values.shape == (4,) and not z.values.any()
    c = bv.copy()
    c.values[0] = 99.0
    assert bv.values[0] == 1.0


# ---------------------------------------------------------------------------


def test_cutpoint_model_schema_roundtrip():
    model = CutPointModel(
        feature_names=("a", "b"),
        cutpoints=[np.array([0.5, 1.5]), np.array([])],
        amplitudes=[np.array([2.0, -1.0]), np.array([])],
    )
    np.testing.assert_array_equal(model.k_hat, [2, 0])
    back = CutPointModel.from_dict(model.to_dict())
    assert back.feature_names == ("a", "b")
    np.testing.assert_allclose(back.cutpoints[0], [0.5, 1.5])
    np.testing.assert_allclose(back.amplitudes[0], [2.0, -1.0])


def test_cutpoint_model_k_hat_consistency():
    obj = {"features": [{"name": "a", "cutpoints": [0.5], "amplitudes": [1.0], "k_hat": 3}]}
    with pytest.raises(ValidationError, match="k_hat"):
        CutPointModel.from_dict(obj)


def test_cutpoint_model_misaligned_lists():
    with pytest.raises(ValidationError, match="amplitudes"):
        CutPointModel(("a",), [np.array([1.0])], [np.array([1.0, 2.0])])


# ---------------------------------------------------------------------------


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    ds = validate_dataset(rng.standard_normal((17, 3)), rng.exponential(1, 17),
                          (rng.random(17) < 0.7).astype(float),
                          feature_names=("alpha", "beta", "gamma"))
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.times, ds.times)
    np.testing.assert_array_equal(back.events, ds.events)
    assert back.feature_names == ds.feature_names


def test_csv_rejects_missing_columns(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,x0\n1.0,2.0\n")
    with pytest.raises(ValidationError, match="event"):
        load_csv(path)


def test_csv_line_numbered_error(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,event,x0\n1.0,1,2.0\n2.0,1,oops\n")
    with pytest.raises(ValidationError, match="line 3"):
        load_csv(path)
