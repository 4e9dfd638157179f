import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from fndet.boxes import FEATURE, BoundingBox
from fndet.errors import DimensionError, FormatError
from fndet.featuremap import FeatureTensor
from fndet.features import (RegionFeatureVector, compute_stats, decode_fvec, denormalize,
                            encode_fvec, extract, normalize, read_fvec, write_fvec)
from fndet.metrics import RegionLabel
from fndet.regions import ExcitedRegion
from oracles import region_max_scan


def _region(x0, y0, x1, y1):
    return ExcitedRegion(BoundingBox(x0, y0, x1, y1, space=FEATURE), 1.0, 1)


@st.composite
def tensor_and_region(draw):
    h, w, c = draw(st.integers(1, 16)), draw(st.integers(1, 16)), draw(st.integers(1, 8))
    arr = draw(hnp.arrays(np.float32, (h, w, c), elements=st.floats(-100, 100, width=32)))
    x0, x1 = sorted(draw(st.integers(0, w - 1)) for _ in range(2))
    y0, y1 = sorted(draw(st.integers(0, h - 1)) for _ in range(2))
    return FeatureTensor(arr), (x0, y0, x1, y1)


@settings(max_examples=100, deadline=None)
@given(tensor_and_region())
def test_extract_matches_brute_force_scan(case):
    t, box = case
    (vec,) = extract(t, [_region(*box)])
    assert vec.values.tolist() == region_max_scan(t.data, *box)


def test_extract_preserves_order_and_rejects_out_of_bounds():
    t = FeatureTensor(np.arange(2 * 3 * 2, dtype=float).reshape(2, 3, 2))
    vecs = extract(t, [_region(2, 1, 2, 1), _region(0, 0, 0, 0)], image_id="img")
    assert [v.values.tolist() for v in vecs] == [[10, 11], [0, 1]]
    assert vecs[0].image_id == "img" and vecs[0].source_region.box.x_min == 2
    with pytest.raises(DimensionError):
        extract(t, [_region(0, 0, 3, 0)])


def test_stats_use_population_std_with_floor():
    x = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = compute_stats(x)
    assert s.mean.tolist() == [2.0, 5.0] and s.std.tolist() == [1.0, 0.0]
    assert s.scale.tolist() == [1.0, 1e-8]


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 6)),
                  elements=st.floats(-1e4, 1e4)))
def test_normalize_round_trip(x):
    batch = [RegionFeatureVector(row) for row in x]
    z, stats = normalize(batch)
    zm = np.stack([f.values for f in z])
    varying = stats.std > 1e-6
    np.testing.assert_allclose(zm.mean(axis=0)[varying], 0.0, atol=1e-6)
    np.testing.assert_allclose(zm.std(axis=0)[varying], 1.0, rtol=1e-6)
    back = np.stack([f.values for f in denormalize(z, stats)])
    np.testing.assert_allclose(back, x, rtol=1e-9, atol=1e-9 * np.abs(x).max() + 1e-12)


def test_fvec_round_trip_with_labels(tmp_path):
    batch = [RegionFeatureVector([1.5, -2.0], RegionLabel.FAILURE),
             RegionFeatureVector([0.0, 3.25], RegionLabel.IMPOSTER),
             RegionFeatureVector([7.0, 8.0], None)]
    write_fvec(tmp_path / "f.fvec", batch)
    raw = (tmp_path / "f.fvec").read_bytes()
    assert raw[:8] == b"FVECv001" and len(raw) == 16 + 3 * (1 + 16)
    assert raw[16] == 1 and raw[33] == 0 and raw[50] == 255
    back = read_fvec(tmp_path / "f.fvec")
    assert [b.label for b in back] == [RegionLabel.FAILURE, RegionLabel.IMPOSTER, None]
    assert [b.values.tolist() for b in back] == [b.values.tolist() for b in batch]


def test_empty_fvec_needs_k(tmp_path):
    with pytest.raises(ValueError):
        write_fvec(tmp_path / "e.fvec", [])
    write_fvec(tmp_path / "e.fvec", [], k=4)
    values, labels = decode_fvec((tmp_path / "e.fvec").read_bytes())
    assert values.shape == (0, 4) and labels.shape == (0,)


def test_fvec_corruption_detected():
    buf = encode_fvec(np.ones((2, 3)), [0, 1])
    for bad in (buf[:10], buf[:-1], buf + b"x", b"FVECv002" + buf[8:]):
        with pytest.raises(FormatError):
            decode_fvec(bad)


def test_feature_vector_validation():
    with pytest.raises(DimensionError):
        RegionFeatureVector(np.ones((2, 2)))
    with pytest.raises(ValueError):
        RegionFeatureVector([np.nan])
