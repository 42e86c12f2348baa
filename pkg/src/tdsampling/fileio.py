"""CSV, report and PGM writers and readers.

All text files use LF line endings. Reals are written with ``repr`` which
gives the shortest string that round-trips the double exactly (at least
9 significant digits are always preserved).
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .forward import FieldRecord
from .geometry import SamplingGrid, SensorArray
from .indicator import IndicatorGrid
from .peaks import PeakSet
from .signal import TimeGrid

__all__ = [
    "export_field_csv",
    "export_grid_csv",
    "export_peaks_csv",
    "export_heatmap_slice",
    "heatmap_slice",
    "read_field_csv",
    "read_grid_csv",
    "read_peaks_csv",
    "format_fit_report",
]


def _r(x) -> str:
    return repr(float(x))


def _write_lines(path, header: str, rows: Iterable[str]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
    return path


def export_field_csv(f: FieldRecord, path) -> Path:
    """``sensor_index,time_index,t,u`` in row-major (sensor, time) order."""
    t = f.time.times
    tt = [_r(v) for v in t]
    rows = (
        f"{i},{k},{tt[k]},{_r(f.values[i, k])}"
        for i in range(f.values.shape[0])
        for k in range(f.values.shape[1])
    )
    return _write_lines(path, "sensor_index,time_index,t,u", rows)


def export_grid_csv(g: IndicatorGrid, path) -> Path:
    """``z1,z2,z3,I`` in grid linear order (``i1`` fastest)."""
    nodes = g.grid.nodes
    rows = (f"{_r(z[0])},{_r(z[1])},{_r(z[2])},{_r(v)}" for z, v in zip(nodes, g.values))
    return _write_lines(path, "z1,z2,z3,I", rows)


def export_peaks_csv(peaks: PeakSet, path) -> Path:
    """``rank,z1,z2,z3,I`` with rank 1 for the first extracted peak.

    ``I`` is the score the extraction threshold was compared against.
    """
    rows = (
        f"{r},{_r(z[0])},{_r(z[1])},{_r(z[2])},{_r(v)}"
        for r, (z, v) in enumerate(zip(peaks.locations, peaks.values), start=1)
    )
    return _write_lines(path, "rank,z1,z2,z3,I", rows)


def _read_csv(path, header: Sequence[str]) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise InvalidArgumentError(f"{path}: empty file") from None
        if [h.strip() for h in head] != list(header):
            raise InvalidArgumentError(f"{path}: expected header {','.join(header)}, got {','.join(head)}")
        rows = [r for r in reader if r]
    try:
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: malformed row ({exc})") from exc
    return data


def read_field_csv(path, sensors: SensorArray, time: TimeGrid) -> FieldRecord:
    """Field values from a CSV; geometry and time grid come from the caller."""
    data = _read_csv(path, ("sensor_index", "time_index", "t", "u"))
    n_s, n_t = sensors.n_sensors, len(time)
    if len(data) != n_s * n_t:
        raise InvalidArgumentError(f"{path}: {len(data)} rows, expected {n_s} x {n_t}")
    i = data[:, 0].astype(int)
    k = data[:, 1].astype(int)
    if i.min() < 0 or i.max() >= n_s or k.min() < 0 or k.max() >= n_t:
        raise InvalidArgumentError(f"{path}: sensor or time index out of range")
    if not np.allclose(data[:, 2], time.times[k], rtol=1e-9, atol=1e-12):
        raise InvalidArgumentError(f"{path}: time column does not match the configured time grid")
    u = np.full((n_s, n_t), np.nan)
    u[i, k] = data[:, 3]
    if np.isnan(u).any():
        raise InvalidArgumentError(f"{path}: missing (sensor, time) entries")
    return FieldRecord(sensors, time, u, meta={"source": str(path)})


def read_grid_csv(path, grid: Optional[SamplingGrid] = None, cell_measure: float = 1.0) -> IndicatorGrid:
    """Indicator values from a CSV. The grid is inferred when not given."""
    data = _read_csv(path, ("z1", "z2", "z3", "I"))
    if grid is None:
        n = round(len(data) ** (1 / 3))
        if n**3 != len(data) or n < 2:
            raise InvalidArgumentError(f"{path}: {len(data)} rows is not a cubic grid")
        grid = SamplingGrid(tuple(data[:, :3].min(axis=0)), tuple(data[:, :3].max(axis=0)), n)
    if len(data) != grid.size or not np.allclose(data[:, :3], grid.nodes, rtol=1e-9, atol=1e-12):
        raise InvalidArgumentError(f"{path}: node coordinates do not match the sampling grid")
    return IndicatorGrid(grid, data[:, 3], cell_measure, meta={"source": str(path)})


def read_peaks_csv(path) -> PeakSet:
    data = _read_csv(path, ("rank", "z1", "z2", "z3", "I"))
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    return PeakSet.from_points(data[:, 1:4], data[:, 4])


def heatmap_slice(g: IndicatorGrid, axis: int, index: int, normalized: bool = False) -> np.ndarray:
    """Grey levels 0..255 of one grid plane, shape ``(n, n)``.

    ``axis`` is 1-based. Rows follow the second in-plane axis, columns the
    first, both ascending.
    """
    if axis not in (1, 2, 3):
        raise InvalidArgumentError("slice axis must be 1, 2 or 3")
    n = g.grid.n
    if not 0 <= index < n:
        raise InvalidArgumentError(f"slice index {index} outside 0..{n - 1}")
    vol = g.volume(normalized)
    plane = np.take(vol, index, axis=axis - 1)  # [first in-plane, second in-plane]
    img = plane.T
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.zeros(img.shape, dtype=int)
    return np.floor(255.0 * (img - lo) / (hi - lo) + 0.5).astype(int)


def export_heatmap_slice(g: IndicatorGrid, axis: int, index: int, path, normalized: bool = False) -> Path:
    """Write a plain (``P2``) portable graymap of one grid plane."""
    img = heatmap_slice(g, axis, index, normalized)
    n = img.shape[0]
    rows = (" ".join(str(v) for v in row) for row in img)
    return _write_lines(path, f"P2\n{n} {n}\n255", rows)


def format_fit_report(branches, fits, selected, leftover=None, axis_names=("x1", "x2", "x3")) -> str:
    """Text table of polynomial fits per branch.

    ``fits[b]`` is the list of candidate fits of branch ``b`` and
    ``selected[b]`` the chosen one (``None`` when fitting failed).
    """
    out = ["# curve reconstruction", ""]
    for b, (br, cand, best) in enumerate(zip(branches, fits, selected), start=1):
        out.append(f"branch {b}: {len(br.members)} points")
        if best is None:
            out.append("  no fit (too few points)")
            out.append("")
            continue
        lo, hi = best.x_range
        xn = axis_names[best.abscissa]
        out.append(f"  {'degree':>6}  {'R_adj':>12}  polynomial")
        for fit in cand:
            mark = "*" if fit is best else " "
            out.append(f"{mark} {fit.degree:>6}  {fit.r2_adj:>12.8f}  {fit.formula(8)}")
        out.append(f"  selected: {best.formula(8)}, {xn} in [{lo:.6g}, {hi:.6g}]")
        out.append("  points:")
        for z in br.points:
            out.append(f"    ({z[0]:.6g}, {z[1]:.6g}, {z[2]:.6g})")
        out.append("")
    if leftover is not None and len(leftover.members):
        out.append("isolated points (flagged as point sources):")
        for z in leftover.points:
            out.append(f"  ({z[0]:.6g}, {z[1]:.6g}, {z[2]:.6g})")
        out.append("")
    return "\n".join(out)
