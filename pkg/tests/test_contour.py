import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pompeiu.contour import (Contour, ContourSequence, build_distance_field, contour_sequence,
                             extract_level_set, filled_disk_field, winding_number)
from pompeiu.errors import BoxTooSmall, DegenerateLevel
from pompeiu.matrix import Spectrum


def field_for(points, t=1.0, resolution=512):
    return build_distance_field(Spectrum.from_values(points), resolution=resolution, max_level=t)


def test_distance_field_examples():
    assert field_for([0]).distance([0.5])[0] == 0.5
    assert field_for([0, 1]).distance([0.5])[0] == 0.5
    assert field_for([1, 2]).distance([0])[0] == 1.0


def test_box_too_small():
    with pytest.raises(BoxTooSmall):
        build_distance_field(Spectrum.from_values([0]), box=(-0.2, 0.2, -0.2, 0.2), max_level=0.5)
    with pytest.raises(BoxTooSmall):
        build_distance_field(Spectrum.from_values([5]), box=(-1, 1, -1, 1))


def test_circle_level_set_length():
    c = extract_level_set(field_for([0]), 0.5)
    assert len(c.loops) == 1
    assert abs(c.length - np.pi) < 0.01 * np.pi


def test_separate_loops_each_enclose_one_point():
    c = extract_level_set(field_for([0, 10], t=0.5), 0.5)
    assert len(c.loops) == 2
    for loop in c.loops:
        w = winding_number([loop], [0, 10])
        assert sorted(np.abs(w).tolist()) == [0, 1]


def test_merged_level_set():
    c = extract_level_set(field_for([0, 0.6], t=0.5), 0.5)
    assert len(c.loops) == 1
    assert np.array_equal(c.winding_number([0, 0.6]), [1, 1])


def test_sequence_concentric_lengths():
    fld = field_for([0], t=0.8)
    cs = contour_sequence(fld, [0.8, 0.4, 0.2])
    assert len(cs) == 3
    for t, c in cs:
        assert abs(c.length - 2 * np.pi * t) < 0.01 * 2 * np.pi * t


def test_sequence_empty_and_bad_levels():
    fld = field_for([0], t=0.8)
    assert len(contour_sequence(fld, [])) == 0
    with pytest.raises(ValueError):
        contour_sequence(fld, [0.2, 0.4])
    with pytest.raises(ValueError):
        ContourSequence.circles([0], [0.3, 0.3])


def test_level_below_floor():
    fld = field_for([0], resolution=64)
    with pytest.raises(DegenerateLevel) as exc:
        contour_sequence(fld, [0.5, fld.floor / 2])
    assert exc.value.index == 1


def test_containment_and_enclosure():
    pts = [0, 0.9, 0.4 + 0.7j]
    fld = field_for(pts, t=0.6)
    cs = contour_sequence(fld, [0.6, 0.3, 0.1])
    for outer, inner in zip(cs.contours, cs.contours[1:]):
        verts = np.concatenate(inner.loops)
        assert np.all(outer.winding_number(verts) == 1)
    for t, c in cs:
        assert np.all(c.winding_number(pts) == 1)
        grid = (fld.xs[None, ::8] + 1j * fld.ys[::8, None]).ravel()
        far = grid[fld.distance(grid) > t + 2 * fld.spacing]
        assert np.all(c.winding_number(far) == 0)


@given(st.floats(0.05, 0.9))
def test_length_consistency(t):
    c = extract_level_set(field_for([0.3j], t=1.0, resolution=256), t)
    assert abs(c.length - 2 * np.pi * t) <= 2 * np.pi * 8 * 4.0 / 256


def test_circle_contour_properties():
    c = Contour.circle(1 + 1j, 2.0, 128)
    assert abs(c.length - 4 * np.pi) < 1e-12
    assert abs(c.area() - 4 * np.pi) < 1e-3
    assert c.winding_number([1 + 1j, 10])[0] == 1
    cw = Contour.circle(0, 1.0, 64, orientation=-1)
    assert cw.winding_number([0])[0] == -1
    with pytest.raises(ValueError):
        Contour.circle(0, 0.0)


def test_contour_json_export():
    c = extract_level_set(field_for([0]), 0.5, nodes=64)
    obj = json.loads(json.dumps(c.to_json()))
    assert obj["level"] == 0.5
    z = np.array([p["re"] + 1j * p["im"] for p in obj["loops"][0]])
    assert np.allclose(np.abs(z), 0.5, atol=1e-3)


def test_filled_disk_field():
    fld = filled_disk_field(0j, 1.0, (-2, 2, -2, 2), 256)
    assert fld.distance([0.5, 1.5])[1] == pytest.approx(0.5)
    assert fld.distance([0.5])[0] == 0.0
    c = extract_level_set(fld, 0.25)
    assert abs(c.length - 2 * np.pi * 1.25) < 0.02
