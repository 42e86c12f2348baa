"""Measurement arrays and the sampling lattice.

Points are plain ``numpy`` arrays of shape ``(3,)``; collections of points
are ``(n, 3)`` arrays. Sensor arrays carry one quadrature weight per node
(the surface or arc-length element attached to that sensor).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "as_point",
    "SensorArray",
    "SamplingGrid",
    "build_spherical_array",
    "build_circular_array",
    "build_sampling_grid",
]


def as_point(p) -> np.ndarray:
    """Coerce ``p`` to a finite float array of shape ``(3,)``."""
    arr = np.asarray(p, dtype=float)
    if arr.shape != (3,):
        raise InvalidArgumentError(f"expected 3 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"non-finite coordinates {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class SensorArray:
    """Sensor nodes on a sphere (``"sphere3d"``) or a circle (``"circle2d"``).

    Attributes
    ----------
    kind : str
    radius : float
    nodes : ndarray, shape (n, 3)
    weights : ndarray, shape (n,)
        Quadrature weight of each node (area element for spheres, arc
        length element for circles).
    center : ndarray, shape (3,)
    meta : dict
        Construction parameters, kept for reports and serialization.
    """

    kind: str
    radius: float
    nodes: np.ndarray
    weights: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("nodes", "weights", "center"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.nodes.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.nodes.shape[0]

    def subset(self, mask) -> "SensorArray":
        """Return the sensors selected by the boolean ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_sensors,):
            raise InvalidArgumentError("mask length does not match sensor count")
        meta = dict(self.meta, subset=int(mask.sum()))
        return SensorArray(
            self.kind, self.radius, self.nodes[mask], self.weights[mask], self.center, meta
        )

    def half(self, axis: int = 0, sign: int = -1) -> "SensorArray":
        """Half aperture: keep nodes with ``sign * x[axis] >= 0``.

        The default keeps the left half, ``x1 <= 0``.
        """
        if axis not in (0, 1, 2) or sign not in (-1, 1):
            raise InvalidArgumentError("axis must be 0..2 and sign +-1")
        coord = self.nodes[:, axis] - self.center[axis]
        # nodes exactly on the cut plane carry rounding noise of order 1e-16 * R
        tol = 1e-12 * self.radius
        return self.subset(sign * coord >= -tol)


def build_spherical_array(R: float, n_phi: int, n_theta: int) -> SensorArray:
    """Sensors at cell midpoints in polar angle, left cell edges in azimuth.

    ``phi_i = (2i - 1) pi / (2 n_phi)``, ``theta_j = 2 pi j / n_theta`` and
    weight ``R^2 sin(phi_i) dphi dtheta``. Node order is ``i`` outer,
    ``j`` inner.
    """
    if not (R > 0 and np.isfinite(R)):
        raise InvalidArgumentError(f"radius must be positive, got {R}")
    if int(n_phi) != n_phi or int(n_theta) != n_theta or n_phi < 1 or n_theta < 1:
        raise InvalidArgumentError("n_phi and n_theta must be positive integers")
    n_phi, n_theta = int(n_phi), int(n_theta)
    dphi = np.pi / n_phi
    dtheta = 2 * np.pi / n_theta
    phi = (2 * np.arange(1, n_phi + 1) - 1) * np.pi / (2 * n_phi)
    theta = dtheta * np.arange(n_theta)
    P, T = np.meshgrid(phi, theta, indexing="ij")
    nodes = np.stack(
        [R * np.sin(P) * np.cos(T), R * np.sin(P) * np.sin(T), R * np.cos(P)], axis=-1
    ).reshape(-1, 3)
    weights = (R**2 * np.sin(P) * dphi * dtheta).ravel()
    meta = {"n_phi": n_phi, "n_theta": n_theta}
    return SensorArray("sphere3d", float(R), nodes, weights, np.zeros(3), meta)


def build_circular_array(R: float, n_theta: int, plane=None, center=(0.0, 0.0, 0.0)) -> SensorArray:
    """Equispaced sensors on a circle of radius ``R``.

    Parameters
    ----------
    plane : pair of 3-vectors, optional
        Orthonormal in-plane basis ``(e1, e2)``; defaults to the x1-x2 plane.
        Node ``j`` sits at ``center + R (cos t_j e1 + sin t_j e2)``.
    """
    if not (R > 0 and np.isfinite(R)):
        raise InvalidArgumentError(f"radius must be positive, got {R}")
    if int(n_theta) != n_theta or n_theta < 3:
        raise InvalidArgumentError("n_theta must be an integer >= 3")
    n_theta = int(n_theta)
    if plane is None:
        plane = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    e1, e2 = (np.asarray(v, dtype=float) for v in plane)
    gram = np.array([[e1 @ e1, e1 @ e2], [e2 @ e1, e2 @ e2]])
    if e1.shape != (3,) or e2.shape != (3,) or not np.allclose(gram, np.eye(2), atol=1e-10):
        raise InvalidArgumentError("plane basis must be two orthonormal 3-vectors")
    center = as_point(center)
    dtheta = 2 * np.pi / n_theta
    t = dtheta * np.arange(n_theta)
    nodes = center + R * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
    weights = np.full(n_theta, R * dtheta)
    meta = {"n_theta": n_theta, "e1": e1.tolist(), "e2": e2.tolist()}
    return SensorArray("circle2d", float(R), nodes, weights, center, meta)


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Uniform ``n x n x n`` lattice between two corners.

    Nodes are linearized as ``l = i1 + n*i2 + n*n*i3`` (``i1`` fastest).
    """

    lower: np.ndarray
    upper: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "lower", as_point(self.lower))
        object.__setattr__(self, "upper", as_point(self.upper))

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.n - 1)

    @property
    def size(self) -> int:
        return self.n**3

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.lower[axis] + self.spacing[axis] * np.arange(self.n)

    @cached_property
    def nodes(self) -> np.ndarray:
        # meshgrid 'ij' over (i3, i2, i1) then reversing columns gives i1 fastest
        c = [self.axis_coords(a) for a in range(3)]
        Z3, Z2, Z1 = np.meshgrid(c[2], c[1], c[0], indexing="ij")
        pts = np.stack([Z1.ravel(), Z2.ravel(), Z3.ravel()], axis=1)
        pts.setflags(write=False)
        return pts

    def linear_index(self, i1, i2, i3):
        return i1 + self.n * i2 + self.n * self.n * i3

    def multi_index(self, l):
        l = np.asarray(l)
        return l % self.n, (l // self.n) % self.n, l // (self.n * self.n)

    def node(self, i1: int, i2: int, i3: int) -> np.ndarray:
        return self.lower + self.spacing * np.array([i1, i2, i3], dtype=float)

    def as_volume(self, values) -> np.ndarray:
        """Reshape per-node values to a volume indexed ``[i1, i2, i3]``."""
        return np.asarray(values).reshape(self.n, self.n, self.n).transpose(2, 1, 0)

    def nearest_index(self, p) -> int:
        """Linear index of the node closest to ``p`` (clipped to the box)."""
        p = as_point(p)
        idx = np.rint((p - self.lower) / self.spacing).astype(int)
        idx = np.clip(idx, 0, self.n - 1)
        return int(self.linear_index(*idx))

    def clear_of(self, sensors: SensorArray) -> bool:
        """True when every node lies strictly inside the sensor radius."""
        r = np.linalg.norm(self.nodes - sensors.center, axis=1)
        return bool(r.max() < sensors.radius)


def build_sampling_grid(lower, upper, n: int) -> SamplingGrid:
    lower, upper = as_point(lower), as_point(upper)
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"grid needs n >= 2 nodes per axis, got {n}")
    if not np.all(lower < upper):
        raise InvalidArgumentError("lower corner must be below upper corner on every axis")
    return SamplingGrid(lower, upper, int(n))
