"""Direct sampling indicator on a lattice of sampling points.

For every node ``z_l`` the indicator is the discrete correlation

    I(z_l) = sum_k sum_i u(x_i, t_k) K(x_i, t_k; z_l) w_i dt

between the measured data and the retarded kernel ``K`` of a probe source
placed at ``z_l``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import SingularKernelError
from .forward import FieldRecord
from .geometry import SamplingGrid
from .signal import R_MIN, Medium, Pulse

__all__ = ["IndicatorGrid", "compute_indicator", "compute_indicator_reference"]

# nodes per work unit; fixed so results do not depend on the worker count
BLOCK = 512
# exponent budget of the factorized Gaussian before falling back to direct sums
_EXP_LIMIT = 600.0


@dataclass(frozen=True, eq=False)
class IndicatorGrid:
    """Indicator values on a sampling grid.

    ``cell_measure`` is the mean sensor weight times the time step. Dividing
    by it expresses the indicator per (sensor, sample) pair, the unit in
    which peak thresholds are given (see :attr:`normalized`).
    """

    grid: SamplingGrid
    values: np.ndarray
    cell_measure: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError("indicator length must equal the node count")
        if not np.all(np.isfinite(v)):
            raise ValueError("indicator values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def normalized(self) -> np.ndarray:
        return self.values / self.cell_measure

    def volume(self, normalized: bool = False) -> np.ndarray:
        return self.grid.as_volume(self.normalized if normalized else self.values)

    def argmax(self) -> int:
        return int(np.argmax(self.values))


@nb.njit(nogil=True, cache=True)
def _block_factored(Z, X, W, A, B, times, dt, omega, sigma, t0, c, scale, out):
    # sin(w(t-r)) exp(-s(t-r-t0)^2) is split into per-sample factors (A, B),
    # per-pair factors, and a geometric factor q**k summed by Horner's rule
    n_t = times.shape[0]
    for l in range(Z.shape[0]):
        acc = 0.0
        for i in range(X.shape[0]):
            dx = X[i, 0] - Z[l, 0]
            dy = X[i, 1] - Z[l, 1]
            dz = X[i, 2] - Z[l, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            rc = d / c
            q = math.exp(2.0 * sigma * dt * rc)
            sa = 0.0
            sb = 0.0
            k = n_t - 1
            while k >= 0 and times[k] - rc >= 0.0:
                sa = sa * q + A[i, k]
                sb = sb * q + B[i, k]
                k -= 1
            k0 = k + 1
            if k0 == n_t:
                continue
            pref = math.exp(2.0 * sigma * dt * rc * k0 - 2.0 * sigma * t0 * rc - sigma * rc * rc)
            corr = math.cos(omega * rc) * sa - math.sin(omega * rc) * sb
            acc += W[i] * scale / (4.0 * math.pi * d) * pref * corr
        out[l] = acc


@nb.njit(nogil=True, cache=True)
def _block_direct(Z, X, W, U, times, dt, omega, sigma, t0, c, out):
    for l in range(Z.shape[0]):
        acc = 0.0
        for i in range(X.shape[0]):
            dx = X[i, 0] - Z[l, 0]
            dy = X[i, 1] - Z[l, 1]
            dz = X[i, 2] - Z[l, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            den = 4.0 * math.pi * d
            for k in range(times.shape[0]):
                tr = times[k] - d / c
                if tr >= 0.0:
                    lam = math.sin(omega * tr) * math.exp(-sigma * (tr - t0) ** 2)
                    acc += U[i, k] * (lam / den) * W[i] * dt
        out[l] = acc


def _check_clearance(nodes, sensors, r_min):
    d2 = (
        (nodes**2).sum(1)[:, None]
        - 2 * nodes @ sensors.T
        + (sensors**2).sum(1)[None, :]
    )
    dmin = math.sqrt(max(float(d2.min()), 0.0))
    if dmin < r_min:
        raise SingularKernelError(f"sampling node within {dmin:.3g} of a sensor (r_min={r_min:g})")


def compute_indicator(
    f: FieldRecord,
    p: Pulse,
    m: Medium,
    grid: SamplingGrid,
    *,
    n_jobs: int = 1,
    absolute: bool = False,
    method: str = "auto",
    r_min: float = R_MIN,
) -> IndicatorGrid:
    """Evaluate the indicator on every node of ``grid``.

    Parameters
    ----------
    n_jobs : int
        Worker threads. Nodes are processed in fixed blocks and each node is
        summed sequentially, so the output is identical for any ``n_jobs``.
    absolute : bool
        Return ``|I|`` instead of the signed indicator.
    method : {"auto", "factored", "direct"}
        ``"factored"`` splits the Gaussian envelope so the time sum needs no
        transcendental calls; ``"direct"`` evaluates the kernel term by term.
        ``"auto"`` picks ``"factored"`` unless its exponents could overflow.
    """
    X = np.ascontiguousarray(f.sensors.nodes)
    W = np.ascontiguousarray(f.sensors.weights)
    U = np.ascontiguousarray(f.values)
    times = f.time.times
    dt = f.time.dt
    c = m.sound_speed
    Z = np.ascontiguousarray(grid.nodes)
    _check_clearance(Z, X, r_min)

    if method == "auto":
        corners = np.array([[hi if b else lo for lo, hi, b in zip(grid.lower, grid.upper, bits)]
                            for bits in np.ndindex(2, 2, 2)])
        rmax = float(np.max(np.linalg.norm(X[:, None, :] - corners[None], axis=-1))) / c
        budget = max(2 * p.sigma * times[-1] * rmax, p.sigma * float(np.max((times - p.t0) ** 2)))
        method = "factored" if budget < _EXP_LIMIT else "direct"

    out = np.empty(Z.shape[0])
    if method == "factored":
        env = np.exp(-p.sigma * (times - p.t0) ** 2)
        A = np.ascontiguousarray(U * (env * np.sin(p.omega * times))[None, :])
        B = np.ascontiguousarray(U * (env * np.cos(p.omega * times))[None, :])

        def work(lo):
            hi = min(lo + BLOCK, Z.shape[0])
            _block_factored(Z[lo:hi], X, W, A, B, times, dt, p.omega, p.sigma, p.t0, c, dt, out[lo:hi])
    elif method == "direct":

        def work(lo):
            hi = min(lo + BLOCK, Z.shape[0])
            _block_direct(Z[lo:hi], X, W, U, times, dt, p.omega, p.sigma, p.t0, c, out[lo:hi])
    else:
        raise ValueError(f"unknown method {method!r}")

    starts = range(0, Z.shape[0], BLOCK)
    if n_jobs == 1:
        for lo in starts:
            work(lo)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            list(ex.map(work, starts))

    values = np.abs(out) if absolute else out
    return IndicatorGrid(grid, values, _cell_measure(f), _meta(f, p, m, absolute))


def compute_indicator_reference(
    f: FieldRecord, p: Pulse, m: Medium, grid: SamplingGrid, r_min: float = R_MIN
) -> IndicatorGrid:
    """Same quantity as :func:`compute_indicator` by plain nested loops.

    Node outer, sensor middle, time inner; pure Python floats, no
    vectorization. Meant as an independent check on small problems.
    """
    X = f.sensors.nodes.tolist()
    W = f.sensors.weights.tolist()
    U = f.values.tolist()
    times = f.time.times.tolist()
    dt = f.time.dt
    c = m.sound_speed
    out = []
    for z in grid.nodes.tolist():
        acc = 0.0
        for i, x in enumerate(X):
            d = math.dist(x, z)
            if d < r_min:
                raise SingularKernelError(f"sampling node within {d:.3g} of a sensor")
            for k, t in enumerate(times):
                tr = t - d / c
                lam = math.sin(p.omega * tr) * math.exp(-p.sigma * (tr - p.t0) ** 2) if tr >= 0 else 0.0
                acc += U[i][k] * (lam / (4 * math.pi * d)) * W[i] * dt
        out.append(acc)
    return IndicatorGrid(grid, np.array(out), _cell_measure(f), _meta(f, p, m, False))


def _cell_measure(f: FieldRecord) -> float:
    return float(np.mean(f.sensors.weights) * f.time.dt)


def _meta(f, p, m, absolute):
    return {
        "pulse": (p.omega, p.sigma, p.t0),
        "sound_speed": m.sound_speed,
        "sensors": f.sensors.kind,
        "n_sensors": f.sensors.n_sensors,
        "noise": None if f.noise is None else (f.noise.level, f.noise.seed),
        "absolute": absolute,
    }
