"""Synthetic boundary data for point and curve sources, plus noise."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgumentError, InvalidCurveError, SingularKernelError
from .geometry import SensorArray
from .signal import R_MIN, Medium, Pulse, TimeGrid, kernel_matrix, pulse_eval

__all__ = [
    "PointSourceSet",
    "CurveSource",
    "FieldRecord",
    "NoiseSpec",
    "point_field",
    "curve_field",
    "add_noise",
]


@dataclass(frozen=True, eq=False)
class PointSourceSet:
    locations: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float))
        tau = np.atleast_1d(np.asarray(self.intensities, dtype=float))
        if loc.ndim != 2 or loc.shape[1] != 3 or loc.shape[0] < 1:
            raise InvalidArgumentError("locations must be a non-empty (K, 3) array")
        if tau.shape != (loc.shape[0],):
            raise InvalidArgumentError("one intensity per location required")
        if not np.all(np.isfinite(loc)) or not np.all(tau > 0):
            raise InvalidArgumentError("locations must be finite and intensities positive")
        diff = np.linalg.norm(loc[:, None] - loc[None], axis=-1)
        if np.any(diff[np.triu_indices(len(loc), 1)] == 0):
            raise InvalidArgumentError("source locations must be mutually distinct")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "intensities", tau)

    def __len__(self):
        return self.locations.shape[0]

    def union(self, other: "PointSourceSet") -> "PointSourceSet":
        return PointSourceSet(
            np.vstack([self.locations, other.locations]),
            np.concatenate([self.intensities, other.intensities]),
        )


@dataclass(frozen=True, eq=False)
class CurveSource:
    """Source supported on the parameterized curve ``gamma(u)``, ``u in [a, b]``.

    Parameters
    ----------
    gamma : callable
        Maps an array of parameters, shape ``(m,)``, to points ``(m, 3)``.
    a, b : float
        Parameter range.
    tau : callable
        Line-density intensity; maps points ``(m, 3)`` to values ``(m,)``.
    dgamma : callable, optional
        Analytic derivative of ``gamma``. Central differences with a step
        of ``1e-6 (b - a)`` are used when omitted.
    n_nodes : int
        Number of equispaced parameter nodes of the trapezoid rule.
    """

    gamma: Callable
    a: float
    b: float
    tau: Callable
    dgamma: Optional[Callable] = None
    n_nodes: int = 200
    label: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise InvalidCurveError(f"invalid parameter range [{self.a}, {self.b}]")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 8:
            raise InvalidCurveError("curve quadrature needs at least 8 nodes")

    def derivative(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.dgamma is not None:
            return np.asarray(self.dgamma(u), dtype=float).reshape(len(u), 3)
        h = 1e-6 * (self.b - self.a)
        return (np.asarray(self.gamma(u + h), float) - np.asarray(self.gamma(u - h), float)) / (2 * h)

    def quadrature(self):
        """Nodes, arc-length trapezoid weights and intensities at the nodes."""
        u = np.linspace(self.a, self.b, int(self.n_nodes))
        du = u[1] - u[0]
        pts = np.asarray(self.gamma(u), dtype=float).reshape(len(u), 3)
        speed = np.linalg.norm(self.derivative(u), axis=1)
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(speed))):
            raise InvalidCurveError(f"curve {self.label!r}: non-finite point or derivative")
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(gaps == 0) or np.any(speed == 0):
            raise InvalidCurveError(f"curve {self.label!r} is not injective on its range")
        w = speed * du
        w[0] *= 0.5
        w[-1] *= 0.5
        tau = np.asarray(self.tau(pts), dtype=float).reshape(len(u))
        if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
            raise InvalidCurveError(f"curve {self.label!r}: intensity must be positive on the curve")
        return pts, w, tau

    def split(self, at: float):
        """Two curves covering ``[a, at]`` and ``[at, b]``."""
        if not self.a < at < self.b:
            raise InvalidArgumentError("split point must be interior")
        return replace(self, b=at), replace(self, a=at)

    @property
    def length(self) -> float:
        pts, w, _ = self.quadrature()
        return float(w.sum())


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.level) and self.level >= 0):
            raise InvalidArgumentError("noise level must be >= 0")


@dataclass(frozen=True, eq=False)
class FieldRecord:
    """Boundary data ``u[i, k]`` at sensor ``i`` and time sample ``k``."""

    sensors: SensorArray
    time: TimeGrid
    values: np.ndarray
    noise: Optional[NoiseSpec] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.sensors.n_sensors, len(self.time)):
            raise InvalidArgumentError(
                f"field shape {v.shape} does not match "
                f"{self.sensors.n_sensors} sensors x {len(self.time)} samples"
            )
        object.__setattr__(self, "values", v)

    def __add__(self, other: "FieldRecord") -> "FieldRecord":
        if other.values.shape != self.values.shape:
            raise InvalidArgumentError("cannot add field records of different shapes")
        return replace(self, values=self.values + other.values)

    def scaled(self, alpha: float) -> "FieldRecord":
        return replace(self, values=alpha * self.values)

    def subset(self, sensors_mask_or_array) -> "FieldRecord":
        """Restrict to a sensor subset given as a boolean mask."""
        mask = np.asarray(sensors_mask_or_array, dtype=bool)
        return replace(self, sensors=self.sensors.subset(mask), values=self.values[mask])

    def half(self, axis: int = 0, sign: int = -1) -> "FieldRecord":
        coord = self.sensors.nodes[:, axis] - self.sensors.center[axis]
        return self.subset(sign * coord >= -1e-12 * self.sensors.radius)


def point_field(
    src: PointSourceSet, p: Pulse, m: Medium, sens: SensorArray, tg: TimeGrid, r_min: float = R_MIN
) -> FieldRecord:
    """Superposition of retarded kernels, one per point source."""
    t = tg.times
    u = np.zeros((sens.n_sensors, len(t)))
    for s, tau in zip(src.locations, src.intensities):
        u += tau * kernel_matrix(p, m, sens.nodes, s, t, r_min)
    return FieldRecord(sens, tg, u, meta={"sources": "points", "count": len(src)})


def curve_field(
    src: CurveSource, p: Pulse, m: Medium, sens: SensorArray, tg: TimeGrid, r_min: float = R_MIN
) -> FieldRecord:
    """Arc-length trapezoid quadrature of the kernel along the curve."""
    pts, w, tau = src.quadrature()
    t = tg.times
    r = np.linalg.norm(sens.nodes[:, None, :] - pts[None, :, :], axis=-1)
    if r.min() < r_min:
        raise SingularKernelError(f"curve within {r.min():.3g} of a sensor (r_min={r_min:g})")
    coef = (w * tau)[None, :] / (4 * np.pi * r)
    u = np.empty((sens.n_sensors, len(t)))
    for i in range(sens.n_sensors):
        lam = pulse_eval(p, t[None, :] - r[i, :, None] / m.sound_speed)
        u[i] = coef[i] @ lam
    return FieldRecord(sens, tg, u, meta={"sources": "curve", "label": src.label})


def add_noise(f: FieldRecord, ns: NoiseSpec) -> FieldRecord:
    """Multiplicative noise ``(1 + eps r) u`` with ``r ~ U[-1, 1]``.

    Draws come from numpy's PCG64 generator seeded with ``ns.seed``, one
    per entry in row-major ``(sensor, time)`` order, so a given seed and
    shape always produce the same realization.
    """
    if ns.level == 0:
        return replace(f, noise=ns)
    rng = np.random.Generator(np.random.PCG64(ns.seed))
    r = rng.uniform(-1.0, 1.0, size=f.values.shape)
    return replace(f, values=(1.0 + ns.level * r) * f.values, noise=ns)
