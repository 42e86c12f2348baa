import numpy as np
import pytest

from tdsampling import (
    IndicatorGrid,
    InvalidArgumentError,
    PeakSet,
    PointSourceSet,
    TimeGrid,
    build_sampling_grid,
    build_spherical_array,
    point_field,
)
from tdsampling.fileio import (
    export_field_csv,
    export_grid_csv,
    export_heatmap_slice,
    export_peaks_csv,
    format_fit_report,
    heatmap_slice,
    read_field_csv,
    read_grid_csv,
    read_peaks_csv,
)
from tdsampling.recover import extract_branches, fit_polynomials, select_best_fit


@pytest.fixture
def field(pulse, medium):
    sens = build_spherical_array(5.0, 3, 4)
    return point_field(PointSourceSet([[0.1, 0.2, 0.3]], [1.0]), pulse, medium, sens, TimeGrid(15.0, 10))


def test_field_round_trip_is_exact(field, tmp_path):
    path = export_field_csv(field, tmp_path / "f.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "sensor_index,time_index,t,u"
    assert len(lines) == 1 + 12 * 11
    assert lines[1].startswith("0,0,0.0,")
    back = read_field_csv(path, field.sensors, field.time)
    np.testing.assert_array_equal(back.values, field.values)


def test_files_use_lf(field, tmp_path):
    path = export_field_csv(field, tmp_path / "f.csv")
    assert b"\r" not in path.read_bytes()


def test_field_reader_checks_shape(field, tmp_path):
    path = export_field_csv(field, tmp_path / "f.csv")
    with pytest.raises(InvalidArgumentError):
        read_field_csv(path, build_spherical_array(5.0, 2, 2), field.time)
    with pytest.raises(InvalidArgumentError):
        read_field_csv(path, field.sensors, TimeGrid(10.0, 10))
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidArgumentError):
        read_field_csv(bad, field.sensors, field.time)


def test_two_cubed_grid_has_eight_rows(tmp_path):
    grid = build_sampling_grid((0, 0, 0), (1, 1, 1), 2)
    vals = np.array([0.1, 1 / 3, -2.5, 1e-300, 7.0, np.pi, 0.0, -1.0])
    path = export_grid_csv(IndicatorGrid(grid, vals), tmp_path / "g.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "z1,z2,z3,I" and len(lines) == 9
    assert lines[2] == "1.0,0.0,0.0,0.3333333333333333"
    back = read_grid_csv(path)
    np.testing.assert_array_equal(back.values, vals)
    assert back.grid.n == 2


def test_grid_reader_rejects_non_cubic(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("z1,z2,z3,I\n0,0,0,1\n1,0,0,2\n")
    with pytest.raises(InvalidArgumentError):
        read_grid_csv(p)


def test_empty_peaks_header_only(tmp_path):
    path = export_peaks_csv(PeakSet.from_points(np.empty((0, 3))), tmp_path / "p.csv")
    assert path.read_text() == "rank,z1,z2,z3,I\n"
    assert len(read_peaks_csv(path)) == 0


def test_peaks_round_trip(tmp_path):
    ps = PeakSet.from_points([[0.1, 0.2, 0.3], [-1.0, 0.0, 2.0]], [5.5, 2.25])
    path = export_peaks_csv(ps, tmp_path / "p.csv")
    assert path.read_text().splitlines()[1] == "1,0.1,0.2,0.3,5.5"
    back = read_peaks_csv(path)
    np.testing.assert_array_equal(back.locations, ps.locations)
    np.testing.assert_array_equal(back.values, ps.values)


def test_constant_slice_is_black(tmp_path):
    grid = build_sampling_grid((0, 0, 0), (1, 1, 1), 4)
    g = IndicatorGrid(grid, np.full(64, 2.0))
    assert np.all(heatmap_slice(g, 3, 1) == 0)
    text = export_heatmap_slice(g, 3, 1, tmp_path / "s.pgm").read_text().splitlines()
    assert text[:3] == ["P2", "4 4", "255"]
    assert len(text) == 3 + 4


def test_single_maximum_pixel(tmp_path):
    grid = build_sampling_grid((0, 0, 0), (1, 1, 1), 4)
    v = np.zeros(64)
    v[grid.linear_index(2, 1, 3)] = 1.0
    img = heatmap_slice(IndicatorGrid(grid, v), 3, 3)
    assert img[1, 2] == 255  # row = i2, column = i1
    assert (img == 255).sum() == 1 and (img == 0).sum() == 15


def test_slice_levels_are_rounded_linear_map():
    grid = build_sampling_grid((0, 0, 0), (1, 1, 1), 2)
    g = IndicatorGrid(grid, np.array([0.0, 1.0, 2.0, 4.0, 0.0, 0.0, 0.0, 0.0]))
    np.testing.assert_array_equal(heatmap_slice(g, 3, 0), [[0, 64], [128, 255]])


def test_slice_argument_checks():
    grid = build_sampling_grid((0, 0, 0), (1, 1, 1), 3)
    g = IndicatorGrid(grid, np.zeros(27))
    with pytest.raises(InvalidArgumentError):
        heatmap_slice(g, 0, 1)
    with pytest.raises(InvalidArgumentError):
        heatmap_slice(g, 1, 3)


def test_fit_report_lists_selection_and_leftovers():
    x = np.linspace(-1, 1, 7)
    pts = np.vstack([np.c_[x, x**2 - 1, np.zeros(7)], [[1.5, 1.5, 0.0]]])
    branches, left = extract_branches(pts, tol=0.05)
    fits = [fit_polynomials(b.points, 0, 1) for b in branches]
    sel = [select_best_fit(f) for f in fits]
    text = format_fit_report(branches, fits, sel, left)
    assert "branch 1: 7 points" in text
    assert "selected: x2 = 1*x1^2" in text
    assert "isolated points" in text and "(1.5, 1.5, 0)" in text
