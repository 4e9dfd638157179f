import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from fndet.boxes import FEATURE, BoundingBox
from fndet.featuremap import SaliencyMap
from fndet.regions import (Detection, ExcitedRegion, binarize, connected_components,
                           feature_box_to_image, locate_regions, suppress_detected, to_image_space)
from oracles import flood_fill_components


def test_binarize_is_strict_and_relative():
    s = np.array([[1.0, 0.5, 0.51], [0.0, 0.2, 0.9]])
    assert binarize(s, 0.5).tolist() == [[True, False, True], [False, False, True]]


def test_binarize_non_positive_map_is_empty():
    assert not binarize(np.full((3, 3), -2.0)).any()
    assert not binarize(np.zeros((3, 3))).any()


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
def test_binarize_rejects_bad_tau(tau):
    with pytest.raises(ValueError):
        binarize(np.ones((2, 2)), tau)


def test_binarize_rejects_nan():
    with pytest.raises(ValueError):
        binarize(np.array([[np.nan, 1.0]]))


def test_diagonal_cells_join_one_component():
    mask = np.eye(4, dtype=bool)
    (region,) = connected_components(mask, min_area=1)
    assert region.box == BoundingBox(0, 0, 3, 3, space=FEATURE)
    assert region.area_cells == 4


def test_u_shape_merges_through_union_find():
    mask = np.array([[1, 0, 1],
                     [1, 0, 1],
                     [1, 1, 1]], dtype=bool)
    assert len(connected_components(mask, min_area=1)) == 1


def test_min_area_and_ordering():
    vals = np.zeros((5, 6))
    vals[0, 0] = 0.9                      # single cell, dropped at min_area 2
    vals[1, 3:5] = 0.7
    vals[3:5, 0] = 0.7                    # same peak, lower y_min wins first
    vals[4, 4:6] = [0.95, 0.8]
    regions = connected_components(vals > 0.5, min_area=2, values=vals)
    assert [r.box.as_list() for r in regions] == [[4, 4, 5, 4], [3, 1, 4, 1], [0, 3, 0, 4]]
    assert [r.peak_value for r in regions] == [0.95, 0.7, 0.7]


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(bool, (16, 16)), st.integers(1, 3))
def test_components_match_flood_fill(mask, min_area):
    ours = connected_components(mask, min_area=min_area)
    assert {frozenset(r.cells) for r in ours} == set(flood_fill_components(mask, min_area))
    for r in ours:
        ys, xs = zip(*r.cells)
        assert r.box.as_list() == [min(xs), min(ys), max(xs), max(ys)]
        assert r.area_cells == len(r.cells)


def test_feature_to_image_reference_case():
    region = ExcitedRegion(BoundingBox(10, 10, 20, 20, space=FEATURE), 1.0, 121)
    out = to_image_space(region, 64, 64, 640, 640)
    assert out.image_box.as_list() == [100, 100, 209, 209]


def test_feature_to_image_clamps_and_handles_non_integral_ratio():
    box = BoundingBox(0, 0, 2, 2, space=FEATURE)
    assert feature_box_to_image(box, 3, 3, 10, 10).as_list() == [0, 0, 9, 9]
    assert feature_box_to_image(BoundingBox(1, 1, 1, 1, space=FEATURE), 3, 3, 10, 10).as_list() == [3, 3, 6, 6]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 300), st.integers(1, 300), st.data())
def test_image_box_covers_cell_footprint(fw, fh, iw, ih, data):
    x0 = data.draw(st.integers(0, fw - 1))
    x1 = data.draw(st.integers(x0, fw - 1))
    y0 = data.draw(st.integers(0, fh - 1))
    y1 = data.draw(st.integers(y0, fh - 1))
    out = feature_box_to_image(BoundingBox(x0, y0, x1, y1, space=FEATURE), fw, fh, iw, ih)
    assert 0 <= out.x_min <= out.x_max < iw and 0 <= out.y_min <= out.y_max < ih
    # every pixel whose centre maps into the cell range lies inside the box
    for px in range(iw):
        if x0 <= (px + 0.5) * fw / iw < x1 + 1:
            assert out.x_min <= px <= out.x_max


def test_suppression_uses_score_and_overlap():
    region = to_image_space(ExcitedRegion(BoundingBox(0, 0, 1, 1, space=FEATURE), 1.0, 4), 4, 4, 40, 40)
    same = BoundingBox(0, 0, 19, 19)
    assert suppress_detected([region], [Detection(same, 0.5)], lam=0.5) == []
    assert suppress_detected([region], [Detection(same, 0.49)], lam=0.5) == [region]
    partial = BoundingBox(0, 0, 19, 39)   # IoU exactly 0.5
    assert suppress_detected([region], [Detection(partial, 0.9)], overlap=0.5) == []
    assert suppress_detected([region], [Detection(partial, 0.9)], overlap=0.51) == [region]


def test_suppression_requires_image_box():
    with pytest.raises(ValueError):
        suppress_detected([ExcitedRegion(BoundingBox(0, 0, 1, 1, space=FEATURE), 1.0, 4)], [])


def test_detection_score_range():
    with pytest.raises(ValueError):
        Detection(BoundingBox(0, 0, 1, 1), 1.2)


def test_locate_regions_end_to_end():
    s = np.zeros((8, 8), dtype=np.float32)
    s[2:4, 2:5] = 1.0
    s[6, 6] = 0.8
    regions = locate_regions(SaliencyMap(s, (0, 1)), 80, 80, tau_rel=0.5, min_area=2)
    assert len(regions) == 1
    assert regions[0].image_box.as_list() == [20, 20, 49, 39]
