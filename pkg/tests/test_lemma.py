import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdsampling import InvalidArgumentError
from tdsampling.lemma import (
    CircleLemmaInput,
    SphereLemmaInput,
    circle_derivative_check,
    circle_F,
    circle_g,
    circle_input_from_points,
    circle_zero_points,
    nascent_delta_F,
    random_circle_inputs,
    random_sphere_pairs,
    sphere_F,
    sphere_input_from_points,
    sphere_zero_angle,
)

REF = CircleLemmaInput(5.0, 1.0, 0.2, 0.6)


def test_zero_points_on_bisector():
    th = np.array(circle_zero_points(REF))
    assert np.max(np.abs(circle_g(REF, th))) <= 1e-12
    np.testing.assert_allclose(5 * np.sin(th), 0.4)


def test_derivative_matches_finite_difference():
    d1, d2, f1, f2 = circle_derivative_check(REF)
    assert d1 > 0 > d2
    assert abs(d1 - f1) <= 1e-6 * abs(d1)
    assert abs(d2 - f2) <= 1e-6 * abs(d2)


def test_circle_closed_form_matches_nascent_delta():
    s, z = REF.s, REF.z
    F = circle_F(REF)
    assert nascent_delta_F("circle", 5.0, s, z, 1e-3) == pytest.approx(F, rel=2e-2)


def test_circle_centred_pair_has_symmetric_form():
    # with a = 0 both zero points contribute the same amount
    inp = CircleLemmaInput(2.0, 0.0, -0.5, 0.5)
    expected = 2 * 2 * 2.0 * math.sqrt(4.0 + 0.25) / 4.0 / 1.0
    assert circle_F(inp) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=25)
@given(st.floats(0, 2 * math.pi), st.floats(0.0, 2.0), st.floats(0.2, 1.5))
def test_circle_invariant_under_rotation(angle, off, gap):
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    s = np.array([off, -gap / 2])
    z = np.array([off, gap / 2])
    F0 = circle_F(circle_input_from_points(5.0, s, z))
    F1 = circle_F(circle_input_from_points(5.0, rot @ s, rot @ z))
    assert F1 == pytest.approx(F0, rel=1e-10)


def test_circle_swapping_roles_keeps_value():
    s, z = np.array([0.3, -0.4]), np.array([1.0, 0.9])
    assert circle_F(circle_input_from_points(5.0, s, z)) == pytest.approx(
        circle_F(circle_input_from_points(5.0, z, s)), rel=1e-12
    )


def test_sphere_closed_form_matches_nascent_delta():
    s, z = np.array([0.3, -0.2, 0.5]), np.array([-0.4, 0.6, 0.1])
    inp = sphere_input_from_points(5.0, s, z)
    assert nascent_delta_F("sphere", 5.0, s, z, 1e-3) == pytest.approx(sphere_F(inp), rel=2e-2)


def test_sphere_axis_pair():
    inp = SphereLemmaInput(3.0, 0.0, 0.0, -0.5, 0.5)
    assert sphere_zero_angle(inp) == pytest.approx(math.pi / 2)
    # on the equator every point is at distance sqrt(R^2 + 1/4) from both
    expected = 3.0 * 2 * math.pi * math.sqrt(9.0 + 0.25) / 1.0
    assert sphere_F(inp) == pytest.approx(expected, rel=1e-8)


def test_random_inputs_reproducible():
    a = random_circle_inputs(4, seed=5)
    b = random_circle_inputs(4, seed=5)
    for (s1, z1, _), (s2, z2, _) in zip(a, b):
        np.testing.assert_array_equal(s1, s2)
        np.testing.assert_array_equal(z1, z2)
    for s, z, inp in random_sphere_pairs(4, seed=1):
        assert 0.2 <= np.linalg.norm(s - z) <= 2.0
        assert max(np.linalg.norm(s), np.linalg.norm(z)) <= 3.0


@pytest.mark.parametrize(
    "factory",
    [
        lambda: CircleLemmaInput(5.0, 6.0, 0.0, 1.0),
        lambda: CircleLemmaInput(5.0, 0.0, 1.0, 0.5),
        lambda: SphereLemmaInput(1.0, 0.0, 0.0, 0.5, 0.2),
        lambda: circle_input_from_points(5.0, [0, 0], [0, 0]),
        lambda: nascent_delta_F("circle", 5.0, [0, 0], [0, 1], 0.0),
        lambda: nascent_delta_F("torus", 5.0, [0, 0, 0], [0, 0, 1], 1e-2),
    ],
)
def test_invalid_inputs(factory):
    with pytest.raises(InvalidArgumentError):
        factory()
