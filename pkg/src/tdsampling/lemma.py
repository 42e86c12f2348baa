"""Closed-form delta integrals over circles and spheres, with numeric checks.

For a source ``s`` and probe ``z`` inside a circle (sphere) of radius ``R``
the integral ``F(z, s)`` of ``delta((|x - s| - |x - z|) / c)`` over the
boundary has a closed form in a frame where ``s`` and ``z`` differ only in
their last coordinate. This module evaluates those closed forms, maps
arbitrary point pairs into that frame, and provides a Gaussian
nascent-delta quadrature that approximates the same integral without using
any of the closed-form expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidArgumentError

__all__ = [
    "CircleLemmaInput",
    "SphereLemmaInput",
    "circle_g",
    "circle_zero_points",
    "circle_constants",
    "circle_F",
    "circle_derivative_check",
    "sphere_zero_angle",
    "sphere_C4",
    "sphere_F",
    "circle_input_from_points",
    "sphere_input_from_points",
    "nascent_delta_F",
    "LemmaCheck",
    "random_circle_inputs",
    "random_sphere_pairs",
    "lemma_suite",
]


@dataclass(frozen=True)
class CircleLemmaInput:
    """``s = (a, b1)``, ``z = (a, b2)`` inside the circle of radius ``R``."""

    R: float
    a: float
    b1: float
    b2: float
    c: float = 1.0

    def __post_init__(self):
        if not (self.R > 0 and self.c > 0 and abs(self.a) < self.R):
            raise InvalidArgumentError("need R > 0, c > 0 and |a| < R")
        lim = math.sqrt(self.R**2 - self.a**2)
        if not (-lim < self.b1 < self.b2 < lim):
            raise InvalidArgumentError("need -sqrt(R^2 - a^2) < b1 < b2 < sqrt(R^2 - a^2)")

    @property
    def s(self):
        return np.array([self.a, self.b1])

    @property
    def z(self):
        return np.array([self.a, self.b2])


@dataclass(frozen=True)
class SphereLemmaInput:
    """``s = (a, b, c1)``, ``z = (a, b, c2)`` inside the sphere of radius ``R``."""

    R: float
    a: float
    b: float
    c1: float
    c2: float
    c: float = 1.0

    def __post_init__(self):
        if not (self.R > 0 and self.c > 0 and self.a**2 + self.b**2 < self.R**2):
            raise InvalidArgumentError("need R > 0, c > 0 and a^2 + b^2 < R^2")
        lim = math.sqrt(self.R**2 - self.a**2 - self.b**2)
        if not (-lim < self.c1 < self.c2 < lim):
            raise InvalidArgumentError("need -lim < c1 < c2 < lim")


def circle_g(inp: CircleLemmaInput, theta):
    """``|x(theta) - s| - |x(theta) - z|`` on the circle."""
    theta = np.asarray(theta, float)
    x1, x2 = inp.R * np.cos(theta), inp.R * np.sin(theta)
    return np.hypot(x1 - inp.a, x2 - inp.b1) - np.hypot(x1 - inp.a, x2 - inp.b2)


def _root_radical(inp: CircleLemmaInput) -> float:
    return math.sqrt(4 * inp.R**2 - (inp.b1 + inp.b2) ** 2)


def circle_zero_points(inp: CircleLemmaInput):
    """The two angles in ``[0, 2 pi)`` where the circle meets the bisector of ``s z``."""
    sin_t = (inp.b1 + inp.b2) / (2 * inp.R)
    cos_t = _root_radical(inp) / (2 * inp.R)
    th1 = math.atan2(sin_t, cos_t) % (2 * math.pi)
    th2 = math.atan2(sin_t, -cos_t) % (2 * math.pi)
    return th1, th2


def circle_constants(inp: CircleLemmaInput):
    """``(C1, C2, C3)`` with ``F = (C1 + C2) / (C3 (b2 - b1))``."""
    C3 = _root_radical(inp)
    base = inp.R**2 + inp.a**2 - inp.b1 * inp.b2
    C1 = 2 * inp.c * inp.R * math.sqrt(base - inp.a * C3)
    C2 = 2 * inp.c * inp.R * math.sqrt(base + inp.a * C3)
    return C1, C2, C3


def circle_F(inp: CircleLemmaInput) -> float:
    C1, C2, C3 = circle_constants(inp)
    return (C1 + C2) / C3 / (inp.b2 - inp.b1)


def circle_derivative_check(inp: CircleLemmaInput, h: float = 1e-6):
    """Closed-form ``g'`` at both zero points next to central differences.

    Returns ``(analytic_1, analytic_2, fd_1, fd_2)``.
    """
    C3 = _root_radical(inp)
    base = inp.R**2 + inp.a**2 - inp.b1 * inp.b2
    gap = inp.b2 - inp.b1
    d1 = gap * C3 / (2 * math.sqrt(base - inp.a * C3))
    d2 = -gap * C3 / (2 * math.sqrt(base + inp.a * C3))
    th1, th2 = circle_zero_points(inp)
    fd = [float((circle_g(inp, t + h) - circle_g(inp, t - h)) / (2 * h)) for t in (th1, th2)]
    return d1, d2, fd[0], fd[1]


def sphere_zero_angle(inp: SphereLemmaInput) -> float:
    """Polar angle of the circle on which ``|x - s| = |x - z|``."""
    return math.acos((inp.c1 + inp.c2) / (2 * inp.R))


def sphere_C4(inp: SphereLemmaInput, rtol: float = 1e-10) -> float:
    rad = math.sqrt(4 * inp.R**2 - (inp.c1 + inp.c2) ** 2)
    base = inp.R**2 + inp.a**2 + inp.b**2 - inp.c1 * inp.c2

    def integrand(t):
        return math.sqrt(base + (inp.a * math.cos(t) - inp.b * math.sin(t)) * rad)

    val, _ = integrate.quad(integrand, 0.0, 2 * math.pi, epsabs=0.0, epsrel=rtol, limit=200)
    return inp.c * inp.R * val


def sphere_F(inp: SphereLemmaInput) -> float:
    return sphere_C4(inp) / (inp.c2 - inp.c1)


def _frame(s, z):
    """Orthonormal basis whose last vector points from ``s`` to ``z``."""
    e = z - s
    e = e / np.linalg.norm(e)
    if e.size == 2:
        return np.array([[e[1], -e[0]], e])
    helper = np.eye(3)[np.argmin(np.abs(e))]
    u = np.cross(e, helper)
    u /= np.linalg.norm(u)
    v = np.cross(e, u)
    return np.array([u, v, e])


def circle_input_from_points(R, s, z, c=1.0) -> CircleLemmaInput:
    """Rotate an arbitrary in-plane pair ``(s, z)`` into the lemma frame."""
    s, z = np.asarray(s, float), np.asarray(z, float)
    if s.shape != (2,) or z.shape != (2,) or np.allclose(s, z):
        raise InvalidArgumentError("need two distinct 2D points")
    Q = _frame(s, z)
    qs, qz = Q @ s, Q @ z
    return CircleLemmaInput(R, float(qs[0]), float(qs[1]), float(qz[1]), c)


def sphere_input_from_points(R, s, z, c=1.0) -> SphereLemmaInput:
    s, z = np.asarray(s, float), np.asarray(z, float)
    if s.shape != (3,) or z.shape != (3,) or np.allclose(s, z):
        raise InvalidArgumentError("need two distinct 3D points")
    Q = _frame(s, z)
    qs, qz = Q @ s, Q @ z
    return SphereLemmaInput(R, float(qs[0]), float(qs[1]), float(qs[2]), float(qz[2]), c)


def _gauss(x, w):
    return np.exp(-0.5 * (x / w) ** 2) / (w * math.sqrt(2 * math.pi))


def nascent_delta_F(kind, R, s, z, w, c=1.0, n=None) -> float:
    """Boundary integral of a unit-mass Gaussian of std ``w`` applied to
    ``(|x - s| - |x - z|) / c``.

    ``kind`` is ``"circle"`` (2D points, circle centred at the origin) or
    ``"sphere"`` (3D points, sphere centred at the origin). ``n`` sets the
    quadrature resolution: node count for the circle, polar node count for
    the sphere.
    """
    if not w > 0:
        raise InvalidArgumentError("width must be positive")
    s, z = np.asarray(s, float), np.asarray(z, float)
    if kind == "circle":
        n = n or 1 << 18
        th = 2 * math.pi * np.arange(n) / n
        x = R * np.stack([np.cos(th), np.sin(th)], axis=1)
        arg = (np.linalg.norm(x - s, axis=1) - np.linalg.norm(x - z, axis=1)) / c
        return float(_gauss(arg, w).sum() * R * 2 * math.pi / n)
    if kind == "sphere":
        # polar axis along z - s so the zero set is a single latitude
        n_phi = n or 40000
        n_th = 128
        Q = _frame(s, z)
        phi = (np.arange(n_phi) + 0.5) * math.pi / n_phi
        th = 2 * math.pi * np.arange(n_th) / n_th
        total = 0.0
        for t in th:
            local = np.stack(
                [np.sin(phi) * math.cos(t), np.sin(phi) * math.sin(t), np.cos(phi)], axis=1
            )
            x = R * local @ Q
            arg = (np.linalg.norm(x - s, axis=1) - np.linalg.norm(x - z, axis=1)) / c
            total += float((_gauss(arg, w) * np.sin(phi)).sum())
        return total * R**2 * (math.pi / n_phi) * (2 * math.pi / n_th)
    raise InvalidArgumentError(f"unknown geometry kind {kind!r}")


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    value: float
    limit: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.limit)


def _random_pairs(rng, dim, n, R, inner=0.6, min_sep=0.2, max_sep=2.0):
    out = []
    while len(out) < n:
        s = rng.uniform(-inner * R, inner * R, dim)
        z = rng.uniform(-inner * R, inner * R, dim)
        d = np.linalg.norm(z - s)
        if np.linalg.norm(s) < inner * R and np.linalg.norm(z) < inner * R and min_sep <= d <= max_sep:
            out.append((s, z))
    return out


def random_circle_inputs(n: int, seed: int = 0, R: float = 5.0):
    """``n`` random in-plane pairs mapped to :class:`CircleLemmaInput`."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return [(s, z, circle_input_from_points(R, s, z)) for s, z in _random_pairs(rng, 2, n, R)]


def random_sphere_pairs(n: int, seed: int = 0, R: float = 5.0):
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    return [(s, z, sphere_input_from_points(R, s, z)) for s, z in _random_pairs(rng, 3, n, R)]


def lemma_suite(n_random: int = 10, seed: int = 0, width: float = 1e-3):
    """Run the closed-form checks and the regularized comparisons.

    Returns a list of :class:`LemmaCheck`; each holds the worst observed
    error and its limit.
    """
    ref = CircleLemmaInput(5.0, 1.0, 0.2, 0.6)
    circles = [ref] + [c for _, _, c in random_circle_inputs(n_random, seed)]

    zero_err = 0.0
    deriv_err = 0.0
    for inp in circles:
        zero_err = max(zero_err, float(np.max(np.abs(circle_g(inp, np.array(circle_zero_points(inp)))))))
        d1, d2, f1, f2 = circle_derivative_check(inp)
        deriv_err = max(deriv_err, abs(d1 - f1) / abs(d1), abs(d2 - f2) / abs(d2))

    law_err = 0.0
    for inp in circles:
        mid = 0.5 * (inp.b1 + inp.b2)
        prods = []
        for gap in (1e-2, 1e-3, 1e-4):
            probe = CircleLemmaInput(inp.R, inp.a, mid - gap / 2, mid + gap / 2, inp.c)
            prods.append(gap * circle_F(probe))
        law_err = max(law_err, (max(prods) - min(prods)) / min(prods))

    circ_err = 0.0
    for s, z, inp in random_circle_inputs(n_random, seed):
        F = circle_F(inp)
        circ_err = max(circ_err, abs(nascent_delta_F("circle", inp.R, s, z, width) - F) / F)
    sph_err = 0.0
    for s, z, inp in random_sphere_pairs(n_random, seed):
        F = sphere_F(inp)
        sph_err = max(sph_err, abs(nascent_delta_F("sphere", inp.R, s, z, width) - F) / F)

    return [
        LemmaCheck("circle zero points |g(theta)|", zero_err, 1e-12),
        LemmaCheck("g' analytic vs central difference (rel)", deriv_err, 1e-6),
        LemmaCheck("(b2 - b1) F spread over gaps 1e-2..1e-4 (rel)", law_err, 1e-2),
        LemmaCheck(f"circle nascent delta vs F at w={width:g} (rel)", circ_err, 2e-2),
        LemmaCheck(f"sphere nascent delta vs F at w={width:g} (rel)", sph_err, 2e-2),
    ]
