import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdsampling import InvalidArgumentError, build_circular_array, build_sampling_grid, build_spherical_array


def test_default_sphere_has_256_nodes_and_first_node(sensors):
    assert len(sensors) == 256
    expected = (5 * math.sin(math.pi / 32), 0.0, 5 * math.cos(math.pi / 32))
    np.testing.assert_allclose(sensors.nodes[0], expected, atol=1e-14)


def test_nodes_follow_polar_then_azimuth_order(sensors):
    phi = (2 * np.arange(1, 17) - 1) * np.pi / 32
    theta = np.arange(16) * np.pi / 8
    P, T = np.meshgrid(phi, theta, indexing="ij")
    ref = 5 * np.stack([np.sin(P) * np.cos(T), np.sin(P) * np.sin(T), np.cos(P)], axis=-1).reshape(-1, 3)
    np.testing.assert_allclose(sensors.nodes, ref, atol=1e-13)


def test_single_cell_sphere():
    arr = build_spherical_array(1.0, 1, 1)
    np.testing.assert_allclose(arr.nodes, [[1.0, 0.0, 0.0]], atol=1e-15)
    assert arr.weights[0] == pytest.approx(2 * math.pi**2)


def test_sphere_weight_sum_close_to_area(sensors):
    assert sensors.weights.sum() == pytest.approx(4 * math.pi * 25, rel=5e-3)


def test_sphere_weight_sum_matches_midpoint_closed_form(sensors):
    # sum_i sin(phi_i) dphi for midpoint nodes equals dphi / sin(dphi / 2)
    h = math.pi / 16
    closed = 25 * (h / math.sin(h / 2)) * 2 * math.pi
    assert sensors.weights.sum() == pytest.approx(closed, rel=1e-13)


def test_sphere_weight_error_decreases_with_resolution():
    errs = []
    for n in (8, 16, 32):
        w = build_spherical_array(5.0, n, n).weights.sum()
        errs.append(abs(w - 100 * math.pi) / (100 * math.pi))
    assert errs[0] > errs[1] > errs[2]
    assert all(e <= 1.0 / n for e, n in zip(errs, (8, 16, 32)))


@given(st.floats(0.1, 50), st.integers(1, 20), st.integers(1, 20))
def test_sphere_nodes_on_surface_and_weights_positive(R, n_phi, n_theta):
    arr = build_spherical_array(R, n_phi, n_theta)
    r = np.linalg.norm(arr.nodes, axis=1)
    assert np.all(np.abs(r - R) <= 1e-12 * R)
    assert np.all(arr.weights > 0)
    dphi, dth = math.pi / n_phi, 2 * math.pi / n_theta
    phi = np.arccos(np.clip(arr.nodes[:, 2] / R, -1, 1))
    np.testing.assert_allclose(arr.weights, R**2 * np.sin(phi) * dphi * dth, rtol=1e-9)


@pytest.mark.parametrize("args", [(0.0, 4, 4), (-1.0, 4, 4), (5.0, 0, 4), (5.0, 4, 0)])
def test_sphere_rejects_bad_arguments(args):
    with pytest.raises(InvalidArgumentError):
        build_spherical_array(*args)


def test_circle_four_nodes():
    arr = build_circular_array(5.0, 4)
    np.testing.assert_allclose(arr.nodes, [[5, 0, 0], [0, 5, 0], [-5, 0, 0], [0, -5, 0]], atol=1e-14)
    np.testing.assert_allclose(arr.weights, 5 * math.pi / 2)


def test_circle_weight_sum():
    assert build_circular_array(5.0, 64).weights.sum() == pytest.approx(10 * math.pi, rel=1e-9)


def test_circle_consecutive_angle():
    arr = build_circular_array(2.0, 3)
    a, b = arr.nodes[0], arr.nodes[1]
    ang = math.acos(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    assert ang == pytest.approx(2 * math.pi / 3)


def test_circle_in_tilted_plane_stays_on_circle():
    e1 = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    e2 = np.array([0.0, 0.0, 1.0])
    arr = build_circular_array(3.0, 12, plane=(e1, e2), center=(1.0, 0.0, 0.0))
    d = arr.nodes - np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 3.0, rtol=1e-12)
    np.testing.assert_allclose(d @ np.cross(e1, e2), 0.0, atol=1e-12)


def test_circle_rejects_non_orthonormal_basis():
    with pytest.raises(InvalidArgumentError):
        build_circular_array(5.0, 8, plane=((1, 0, 0), (1, 1, 0)))
    with pytest.raises(InvalidArgumentError):
        build_circular_array(5.0, 2)


def test_default_grid_spacing_and_node_lookup(grid45):
    np.testing.assert_allclose(grid45.spacing, 4 / 44)
    np.testing.assert_allclose(grid45.node(38, 30, 22), (1.4545454545, 0.7272727272, 0.0), atol=1e-9)
    assert grid45.size == 91125


def test_unit_grid_corners():
    g = build_sampling_grid((0, 0, 0), (1, 1, 1), 2)
    np.testing.assert_allclose(g.spacing, 1.0)
    assert g.size == 8
    np.testing.assert_allclose(g.nodes[:4], [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])


@given(st.integers(2, 12), st.data())
def test_linear_index_round_trip(n, data):
    g = build_sampling_grid((-1, -1, -1), (1, 1, 1), n)
    l = data.draw(st.integers(0, n**3 - 1))
    i1, i2, i3 = g.multi_index(l)
    assert g.linear_index(i1, i2, i3) == l
    np.testing.assert_allclose(g.nodes[l], g.node(i1, i2, i3))


def test_volume_view_indexing(grid45):
    vals = np.arange(grid45.size, dtype=float)
    vol = grid45.as_volume(vals)
    assert vol[3, 5, 7] == grid45.linear_index(3, 5, 7)


def test_default_grid_clear_of_sensors(grid45, sensors):
    assert np.max(np.abs(grid45.nodes)) <= 2.0
    assert grid45.clear_of(sensors)
    assert not build_sampling_grid((-6,) * 3, (6,) * 3, 5).clear_of(sensors)


@pytest.mark.parametrize("lower,upper,n", [((0, 0, 0), (1, 1, 1), 1), ((1, 0, 0), (0, 1, 1), 4)])
def test_grid_rejects_bad_arguments(lower, upper, n):
    with pytest.raises(InvalidArgumentError):
        build_sampling_grid(lower, upper, n)


def test_half_aperture_keeps_left_nodes(sensors):
    half = sensors.half()
    assert np.all(half.nodes[:, 0] <= 1e-12 * 5)
    dropped = sensors.nodes[~np.isin(np.arange(256), np.flatnonzero(sensors.nodes[:, 0] <= 1e-12 * 5))]
    assert np.all(dropped[:, 0] > 0)
    # azimuths 4..12 (of 16) have cos(theta) <= 0, two of them on the cut plane
    assert len(half) == 16 * 9
