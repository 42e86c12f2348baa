"""Iterative global-maximum extraction with box suppression."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .indicator import IndicatorGrid

__all__ = ["PeakParams", "PeakSet", "extract_peaks", "POINT_DEFAULTS", "CURVE_DEFAULTS"]


@dataclass(frozen=True)
class PeakParams:
    """Threshold, step budget and suppression half-width (in cells).

    With ``normalize=True`` the threshold is compared with
    :attr:`IndicatorGrid.normalized`; otherwise with the raw values.
    """

    threshold: float = 2.1
    max_steps: int = 10
    radius: int = 2
    normalize: bool = True

    def __post_init__(self):
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise InvalidArgumentError("max_steps must be a positive integer")
        if int(self.radius) != self.radius or self.radius < 0:
            raise InvalidArgumentError("suppression radius must be a non-negative integer")


POINT_DEFAULTS = PeakParams(threshold=2.1, max_steps=10, radius=2)
CURVE_DEFAULTS = PeakParams(threshold=0.2, max_steps=20, radius=2)


@dataclass(frozen=True, eq=False)
class PeakSet:
    """Extracted nodes in extraction order.

    ``values`` are the scores compared against the threshold (normalized
    indicator values when the parameters ask for normalization).
    """

    indices: np.ndarray
    locations: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(zip(self.indices.tolist(), self.locations, self.values.tolist()))

    @classmethod
    def from_points(cls, locations, values=None) -> "PeakSet":
        loc = np.asarray(locations, dtype=float).reshape(-1, 3)
        vals = np.zeros(len(loc)) if values is None else np.asarray(values, dtype=float)
        return cls(np.full(len(loc), -1), loc, vals)


def extract_peaks(g: IndicatorGrid, params: PeakParams = POINT_DEFAULTS) -> PeakSet:
    """Repeatedly take the global maximum and blank the box around it.

    Blanked nodes are set to ``-inf`` rather than zero; for the usual
    positive thresholds the two are the same, and ``-inf`` keeps a
    suppressed node from being picked again when the threshold is <= 0.
    A maximum below the threshold ends the procedure; equality is accepted.
    Ties go to the lowest linear index. ``g`` is left untouched.
    """
    grid = g.grid
    work = (g.normalized if params.normalize else g.values).copy()
    vol = grid.as_volume(work)  # view onto ``work``, indexed [i1, i2, i3]
    n = grid.n
    rad = params.radius
    indices, values = [], []
    for _ in range(params.max_steps):
        k = int(np.argmax(work))  # first occurrence == lowest linear index
        v = float(work[k])
        if v < params.threshold:
            break
        indices.append(k)
        values.append(v)
        i1, i2, i3 = (int(a) for a in grid.multi_index(k))
        vol[
            max(i1 - rad, 0) : min(i1 + rad, n - 1) + 1,
            max(i2 - rad, 0) : min(i2 + rad, n - 1) + 1,
            max(i3 - rad, 0) : min(i3 + rad, n - 1) + 1,
        ] = -np.inf
    idx = np.array(indices, dtype=int)
    loc = grid.nodes[idx] if len(idx) else np.empty((0, 3))
    return PeakSet(idx, loc, np.array(values, dtype=float))
