"""Intensity recovery for point sources and polynomial fits for curves."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import List, Optional

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import FitError, IllPosedCandidatesError, InvalidArgumentError
from .forward import FieldRecord, PointSourceSet, point_field
from .peaks import PeakSet
from .signal import Medium, Pulse

__all__ = [
    "IntensitySolution",
    "Branch",
    "PolyFitResult",
    "recover_intensities",
    "residual_cost",
    "cluster_branches",
    "reject_outliers",
    "fit_polynomials",
    "select_best_fit",
    "adjusted_r2",
    "extract_branches",
]

AXIS_NAMES = ("x1", "x2", "x3")


@dataclass(frozen=True, eq=False)
class IntensitySolution:
    locations: np.ndarray
    intensities: np.ndarray
    cost: float
    condition: float
    ridge: float = 0.0


def _unit_fields(locations, f: FieldRecord, p: Pulse, m: Medium) -> np.ndarray:
    cols = []
    for s in locations:
        unit = point_field(PointSourceSet([s], [1.0]), p, m, f.sensors, f.time)
        cols.append(unit.values.ravel())
    return np.stack(cols, axis=1)


def residual_cost(eta, locations, f: FieldRecord, p: Pulse, m: Medium) -> float:
    """Sum of squared differences between data and the modelled field."""
    phi = _unit_fields(np.asarray(locations, float).reshape(-1, 3), f, p, m)
    r = phi @ np.asarray(eta, float) - f.values.ravel()
    return float(r @ r)


def recover_intensities(
    peaks: PeakSet,
    f: FieldRecord,
    p: Pulse,
    m: Medium,
    *,
    max_condition: float = 1e12,
    ridge_condition: float = 1e8,
) -> IntensitySolution:
    """Least-squares intensities of unit point sources at the peak locations.

    Solves the normal equations ``A eta = b`` with ``A_jm = <u_j, u_m>`` and
    ``b_j = <u_j, u>`` over all (sensor, time) samples of ``f``. A ridge of
    ``1e-12 trace(A) / K`` is added once ``cond(A)`` exceeds
    ``ridge_condition``; beyond ``max_condition`` the candidates are rejected.
    """
    loc = np.asarray(peaks.locations, float).reshape(-1, 3)
    if len(loc) == 0:
        raise InvalidArgumentError("no candidate locations to recover intensities for")
    dist = np.linalg.norm(loc[:, None] - loc[None], axis=-1)
    if np.any(dist[np.triu_indices(len(loc), 1)] == 0):
        raise InvalidArgumentError("candidate locations must be distinct")

    phi = _unit_fields(loc, f, p, m)
    data = f.values.ravel()
    A = phi.T @ phi
    b = phi.T @ data
    diag = np.sqrt(np.diag(A))
    if np.any(diag == 0):
        j = int(np.argmin(diag))
        raise IllPosedCandidatesError(f"candidate {j} produces no signal at the sensors", (j, j))
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > max_condition:
        corr = np.abs(A / np.outer(diag, diag))
        np.fill_diagonal(corr, -np.inf)
        j, k = np.unravel_index(np.argmax(corr), corr.shape)
        pair = (int(min(j, k)), int(max(j, k)))
        raise IllPosedCandidatesError(
            f"normal matrix condition {cond:.3g} exceeds {max_condition:.3g}; "
            f"candidates {pair[0]} and {pair[1]} are nearly indistinguishable",
            pair,
        )
    ridge = 0.0
    if cond > ridge_condition:
        ridge = 1e-12 * np.trace(A) / len(loc)
        A = A + ridge * np.eye(len(loc))
    eta = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), b)
    r = phi @ eta - data
    return IntensitySolution(loc, eta, float(r @ r), cond, ridge)


@dataclass(frozen=True, eq=False)
class Branch:
    """A connected group of peaks. Groups below three points are not curves."""

    members: np.ndarray
    points: np.ndarray

    @property
    def is_curve(self) -> bool:
        return len(self.members) >= 3


def cluster_branches(peaks, link_dist: float) -> List[Branch]:
    """Single-linkage groups: points within ``link_dist`` share a group.

    ``peaks`` is a :class:`PeakSet` or an ``(n, 3)`` array. Groups are
    ordered by their earliest member.
    """
    if not link_dist > 0:
        raise InvalidArgumentError("link_dist must be positive")
    pts = np.asarray(peaks.locations if isinstance(peaks, PeakSet) else peaks, float).reshape(-1, 3)
    if len(pts) == 0:
        return []
    adj = np.linalg.norm(pts[:, None] - pts[None], axis=-1) <= link_dist
    _, labels = connected_components(adj, directed=False)
    out, seen = [], []
    for lab in labels:
        if lab in seen:
            continue
        seen.append(lab)
        members = np.flatnonzero(labels == lab)
        out.append(Branch(members, pts[members]))
    return out


@dataclass(frozen=True)
class PolyFitResult:
    degree: int
    coefficients: np.ndarray  # highest degree first
    r2_adj: float
    abscissa: int
    ordinate: int
    x_range: tuple
    n_points: int
    branch: int = 0

    def __call__(self, x):
        return np.polyval(self.coefficients, x)

    def formula(self, digits: int = 6) -> str:
        xn, yn = AXIS_NAMES[self.abscissa], AXIS_NAMES[self.ordinate]
        terms = []
        for power, c in zip(range(self.degree, -1, -1), self.coefficients):
            mag = f"{abs(c):.{digits}g}"
            sym = "" if power == 0 else (xn if power == 1 else f"{xn}^{power}")
            body = f"{mag}*{sym}" if sym else mag
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            s += f" {sign} {body}"
        return f"{yn} = {s}"


def adjusted_r2(y, yhat, degree: int) -> float:
    y = np.asarray(y, float)
    n = len(y)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0:
        raise FitError("degenerate-ordinate", "ordinate values are all equal")
    sse = float(np.sum((y - np.asarray(yhat, float)) ** 2))
    return 1.0 - (n - 1) / (n - degree - 1) * sse / sst


def _axes(points, abscissa, ordinate):
    if abscissa is None or ordinate is None:
        order = [int(a) for a in np.argsort(-np.ptp(points, axis=0), kind="stable")]
        if abscissa is None:
            abscissa = order[0] if order[0] != ordinate else order[1]
        if ordinate is None:
            ordinate = next(a for a in order if a != abscissa)
    if abscissa == ordinate or {abscissa, ordinate} - {0, 1, 2}:
        raise InvalidArgumentError("abscissa and ordinate must be two different axes in 0..2")
    return abscissa, ordinate


def fit_polynomials(
    points,
    abscissa: Optional[int] = None,
    ordinate: Optional[int] = None,
    branch: int = 0,
    max_degree: int = 4,
) -> List[PolyFitResult]:
    """Least-squares polynomials of degree 1 to ``max_degree`` through a point group.

    Axes are 0-based. When omitted, the abscissa is the axis of largest
    spread and the ordinate the next one. The adjusted R^2 of degree ``p``
    needs ``n >= p + 2`` points.
    """
    pts = np.asarray(points, float).reshape(-1, 3)
    if not 1 <= max_degree <= 4:
        raise InvalidArgumentError("max_degree must lie in 1..4")
    if len(pts) < max_degree + 2:
        raise FitError(
            "insufficient-points", f"need at least {max_degree + 2} points, got {len(pts)}"
        )
    abscissa, ordinate = _axes(pts, abscissa, ordinate)
    x, y = pts[:, abscissa], pts[:, ordinate]
    if np.ptp(x) == 0:
        raise FitError("degenerate-abscissa", "all abscissa values are equal")
    if np.ptp(y) == 0:
        raise FitError("degenerate-ordinate", "ordinate values are all equal")
    fits = []
    for deg in range(1, max_degree + 1):
        coef = _lstsq_poly(x, y, deg)
        fits.append(
            PolyFitResult(
                deg, coef, adjusted_r2(y, np.polyval(coef, x), deg), abscissa, ordinate,
                (float(x.min()), float(x.max())), len(pts), branch,
            )
        )
    return fits


def _lstsq_poly(x, y, deg):
    V = np.vander(x, deg + 1)
    coef, *_ = np.linalg.lstsq(V, y, rcond=None)
    return coef


def select_best_fit(fits) -> PolyFitResult:
    """Maximal adjusted R^2; equal scores go to the lower degree."""
    fits = list(fits)
    if not fits:
        raise InvalidArgumentError("no fits to choose from")
    best = fits[0]
    for fit in fits[1:]:
        if fit.r2_adj > best.r2_adj or (fit.r2_adj == best.r2_adj and fit.degree < best.degree):
            best = fit
    return best


def reject_outliers(points, abscissa=None, ordinate=None, factor: float = 3.0) -> np.ndarray:
    """Mask of points kept after one quadratic fit-and-trim pass.

    Points whose ordinate residual exceeds ``factor`` times the median
    absolute residual are dropped.
    """
    pts = np.asarray(points, float).reshape(-1, 3)
    keep = np.ones(len(pts), dtype=bool)
    if len(pts) < 4:
        return keep
    abscissa, ordinate = _axes(pts, abscissa, ordinate)
    x, y = pts[:, abscissa], pts[:, ordinate]
    if np.ptp(x) == 0:
        return keep
    res = np.abs(y - np.polyval(_lstsq_poly(x, y, 2), x))
    med = np.median(res)
    if med == 0:
        return keep
    return res <= factor * med


def _normal_residual(coef, x, y):
    slope = np.polyval(np.polyder(coef), x)
    return np.abs(y - np.polyval(coef, x)) / np.sqrt(1.0 + slope**2)


def _arc_gap(coef, x) -> float:
    """Largest arc length of the curve ``polyval(coef, .)`` between consecutive abscissae."""
    xs = np.unique(x)
    if len(xs) < 2:
        return 0.0
    t = np.linspace(0.0, 1.0, 33)
    seg = xs[:-1, None] + np.diff(xs)[:, None] * t[None, :]
    speed = np.sqrt(1.0 + np.polyval(np.polyder(coef), seg) ** 2)
    return float(np.max(np.trapezoid(speed, seg, axis=1)))


def _chained(pts, seed_members, candidates, link_dist):
    """Members of ``candidates`` linked to ``seed_members`` within ``link_dist``."""
    cand = np.asarray(candidates)
    adj = np.linalg.norm(pts[cand][:, None] - pts[cand][None], axis=-1) <= link_dist
    _, labels = connected_components(adj, directed=False)
    pos = {int(c): j for j, c in enumerate(cand)}
    if any(int(s) not in pos for s in seed_members):
        return None
    seed_labels = {labels[pos[s]] for s in seed_members}
    if len(seed_labels) != 1:
        return None
    return cand[labels == seed_labels.pop()]


def extract_branches(
    peaks,
    tol: float,
    link_dist: Optional[float] = None,
    abscissa: int = 0,
    ordinate: int = 1,
    min_points: int = 4,
    min_new: int = 4,
    values=None,
):
    """Split a peak set into curve branches and leftover isolated points.

    Branches are found one at a time. Every triple of points with at least
    two unassigned members defines a quadratic ``ordinate(abscissa)``. Its
    support is the set of points within normal distance ``tol`` of the
    quadratic and within ``tol`` of the triple in the third coordinate,
    optionally restricted to those chained to the triple by links no longer
    than ``link_dist``. The quadratic is refitted to its support once and
    the support recomputed. With ``link_dist`` set, a support whose refitted
    curve leaves an arc longer than ``link_dist`` between neighbouring
    samples is discarded.

    A support is scored by its not yet assigned points only, each weighted
    by ``1 - (d / tol)^2`` for its normal distance ``d`` (ties: larger
    summed peak value). The best support becomes a branch when it has
    ``min_points`` points of which ``min_new`` are unassigned. Points may be
    shared by branches, which lets crossing curves keep their common
    samples.

    The search is exhaustive over triples and therefore deterministic.

    Returns
    -------
    branches : list of Branch
    leftover : Branch
        Points not assigned to any branch.
    """
    pts = np.asarray(peaks.locations if isinstance(peaks, PeakSet) else peaks, float).reshape(-1, 3)
    if values is None:
        values = peaks.values if isinstance(peaks, PeakSet) else np.ones(len(pts))
    values = np.asarray(values, float)
    other = 3 - abscissa - ordinate
    x, y, w3 = pts[:, abscissa], pts[:, ordinate], pts[:, other]
    everyone = np.arange(len(pts))
    assigned = np.zeros(len(pts), dtype=bool)
    branches = []

    def support(coef, level, seed):
        ok = (_normal_residual(coef, x, y) <= tol) & (np.abs(w3 - level) <= tol)
        cand = everyone[ok]
        if link_dist is None:
            return cand if set(seed) <= set(cand.tolist()) else None
        return _chained(pts, seed, cand, link_dist)

    while (~assigned).sum() >= min_new:
        best = None
        for trip in combinations(everyone.tolist(), 3):
            tr = list(trip)
            if assigned[tr].sum() > 1:
                continue
            if np.ptp(w3[tr]) > tol or len(np.unique(np.round(x[tr], 9))) < 3:
                continue
            level = w3[tr].mean()
            members = support(np.polyfit(x[tr], y[tr], 2), level, tr)
            if members is None or len(members) < 3:
                continue
            if len(np.unique(np.round(x[members], 9))) >= 3:
                refined = support(np.polyfit(x[members], y[members], 2), level, tr)
                if refined is not None:
                    members = refined
            if len(members) < min_points or (~assigned[members]).sum() < min_new:
                continue
            coef = np.polyfit(x[members], y[members], 2)
            if link_dist is not None and _arc_gap(coef, x[members]) > link_dist:
                continue
            fresh = members[~assigned[members]]
            fit = float(np.sum(1.0 - (_normal_residual(coef, x[fresh], y[fresh]) / tol) ** 2))
            score = (fit, float(values[fresh].sum()))
            if best is None or score > best[0]:
                best = (score, np.sort(members))
        if best is None:
            break
        members = best[1]
        branches.append(Branch(members, pts[members]))
        assigned[members] = True
    left = everyone[~assigned]
    return branches, Branch(left, pts[left])
