"""End-to-end run: simulate, perturb, reconstruct, post-process, export."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .config import RunConfig
from .errors import FitError, StageError, TDSamplingError
from .fileio import (
    export_field_csv,
    export_grid_csv,
    export_heatmap_slice,
    export_peaks_csv,
    format_fit_report,
)
from .forward import FieldRecord, add_noise, curve_field, point_field
from .indicator import IndicatorGrid, compute_indicator
from .peaks import PeakSet, extract_peaks
from .recover import (
    Branch,
    IntensitySolution,
    PolyFitResult,
    extract_branches,
    fit_polynomials,
    recover_intensities,
    select_best_fit,
)

__all__ = ["RunReport", "CurveResult", "run_pipeline", "simulate", "reconstruct", "fit_branches"]


@dataclass
class CurveResult:
    branches: List[Branch]
    fits: List[List[PolyFitResult]]
    selected: List[Optional[PolyFitResult]]
    leftover: Branch


@dataclass
class RunReport:
    config: RunConfig
    record: Optional[FieldRecord] = None
    indicator: Optional[IndicatorGrid] = None
    peaks: Optional[PeakSet] = None
    intensities: Optional[IntensitySolution] = None
    curves: Optional[CurveResult] = None
    timings: Dict[str, float] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except (TDSamplingError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def simulate(cfg: RunConfig) -> FieldRecord:
    """Noise-free data of all configured sources on the full sensor array."""
    sens = replace(cfg.sensors, subset=None).build()
    f = None
    if cfg.points is not None:
        f = point_field(cfg.points, cfg.pulse, cfg.medium, sens, cfg.time)
    for curve in cfg.curves:
        fc = curve_field(curve, cfg.pulse, cfg.medium, sens, cfg.time)
        f = fc if f is None else f + fc
    return f


def reconstruct(cfg: RunConfig, f: FieldRecord):
    g = compute_indicator(f, cfg.pulse, cfg.medium, cfg.grid, n_jobs=cfg.n_jobs, method=cfg.method)
    return g, extract_peaks(g, cfg.peaks)


def fit_branches(cfg: RunConfig, peaks: PeakSet) -> CurveResult:
    """Split curve-mode peaks into branches and fit each one."""
    h = float(np.min(cfg.grid.spacing))
    opts = cfg.recover
    link = None if opts.link_dist is None else opts.link_dist * h
    branches, leftover = extract_branches(
        peaks, opts.branch_tol * h, link, opts.abscissa, opts.ordinate,
        min_points=opts.min_points, min_new=opts.min_new,
    )
    fits, selected = [], []
    for b, br in enumerate(branches):
        try:
            cand = fit_polynomials(
                br.points, opts.abscissa, opts.ordinate, branch=b, max_degree=min(4, len(br.members) - 2)
            )
        except FitError:
            fits.append([])
            selected.append(None)
            continue
        fits.append(cand)
        selected.append(select_best_fit(cand))
    return CurveResult(branches, fits, selected, leftover)


def run_pipeline(cfg: RunConfig, out_dir=None, write: bool = True) -> RunReport:
    """Run every stage and write ``field.csv``, ``indicator.csv``,
    ``peaks.csv``, ``report.txt`` and PGM slices to the output directory.

    Numerical failures are re-raised as :class:`StageError` naming the stage.
    """
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir)
    rep = RunReport(cfg)
    tm = rep.timings

    with _stage("simulate", tm):
        clean = simulate(cfg)
    with _stage("noise", tm):
        f = add_noise(clean, cfg.noise)
    with _stage("subset", tm):
        if cfg.sensors.subset is not None:
            f = f.half(*cfg.sensors.subset)
    rep.record = f
    with _stage("indicator", tm):
        rep.indicator = compute_indicator(
            f, cfg.pulse, cfg.medium, cfg.grid, n_jobs=cfg.n_jobs, method=cfg.method
        )
    with _stage("peaks", tm):
        rep.peaks = extract_peaks(rep.indicator, cfg.peaks)
    if cfg.mode == "point":
        with _stage("intensities", tm):
            if len(rep.peaks):
                rep.intensities = recover_intensities(
                    rep.peaks, f, cfg.pulse, cfg.medium,
                    max_condition=cfg.recover.max_condition,
                    ridge_condition=cfg.recover.ridge_condition,
                )
    else:
        with _stage("fit", tm):
            rep.curves = fit_branches(cfg, rep.peaks)

    if write:
        with _stage("export", tm):
            _write_outputs(rep, out)
    return rep


def _write_outputs(rep: RunReport, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    cfg = rep.config
    rep.files["field"] = export_field_csv(rep.record, out / "field.csv")
    rep.files["indicator"] = export_grid_csv(rep.indicator, out / "indicator.csv")
    rep.files["peaks"] = export_peaks_csv(rep.peaks, out / "peaks.csv")
    n = cfg.grid.n
    slices = cfg.slices or tuple((ax, n // 2) for ax in (1, 2, 3))
    for ax, idx in slices:
        key = f"slice_{ax}_{idx}"
        rep.files[key] = export_heatmap_slice(rep.indicator, ax, idx, out / f"{key}.pgm")
    report = out / "report.txt"
    with open(report, "w", newline="\n") as fh:
        fh.write(format_report(rep))
    rep.files["report"] = report


def _fmt_point(z) -> str:
    return "(" + ", ".join(f"{v:.4f}" for v in z) + ")"


def format_report(rep: RunReport) -> str:
    cfg = rep.config
    f = rep.record
    lines = [
        "# run report",
        f"sensors: {f.sensors.n_sensors} ({'all' if cfg.sensors.subset is None else 'subset'})",
        f"time samples: {len(cfg.time)}  dt={cfg.time.dt:.6g}",
        f"grid: {cfg.grid.n}^3 on {_fmt_point(cfg.grid.lower)} to {_fmt_point(cfg.grid.upper)}",
        f"noise: level={cfg.noise.level:g} seed={cfg.noise.seed}",
        f"mode: {cfg.mode}  threshold={cfg.peaks.threshold:g} max_steps={cfg.peaks.max_steps} "
        f"radius={cfg.peaks.radius}",
        f"peaks found: {len(rep.peaks)}",
        "",
    ]
    if rep.intensities is not None:
        sol = rep.intensities
        truth = cfg.points
        lines.append("# point sources")
        lines.append(f"{'No.':>4}  {'location':<30} {'intensity':>12}   nearest actual source")
        for j, (z, eta) in enumerate(zip(sol.locations, sol.intensities), start=1):
            ref = ""
            if truth is not None:
                d = np.max(np.abs(truth.locations - z), axis=1)
                k = int(np.argmin(d))
                ref = f"{_fmt_point(truth.locations[k])} intensity {truth.intensities[k]:g}"
            lines.append(f"{j:>4}  {_fmt_point(z):<30} {eta:>12.6f}   {ref}")
        lines.append(f"residual cost: {sol.cost:.6e}  condition: {sol.condition:.3e}  ridge: {sol.ridge:.3e}")
        lines.append("")
    if rep.curves is not None:
        c = rep.curves
        lines.append(format_fit_report(c.branches, c.fits, c.selected, c.leftover))
    lines.append("# timings (s)")
    for k, v in rep.timings.items():
        lines.append(f"{k:>12}: {v:.3f}")
    return "\n".join(lines) + "\n"
