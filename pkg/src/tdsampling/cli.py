"""Command line entry point ``tdsampling``.

Exit codes: 0 success, 1 failed lemma checks, 2 configuration error,
3 numerical failure in a stage.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, parse_config
from .errors import ConfigError, StageError, TDSamplingError
from .fileio import (
    export_field_csv,
    export_grid_csv,
    export_heatmap_slice,
    export_peaks_csv,
    format_fit_report,
    read_field_csv,
    read_peaks_csv,
)
from .forward import add_noise
from .lemma import lemma_suite
from .pipeline import fit_branches, reconstruct, run_pipeline, simulate
from .recover import recover_intensities

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", type=Path, required=config_required, help="run configuration (YAML)")
    p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="noise seed (overrides noise.seed)")
    p.add_argument("--noise-level", type=float, help="relative noise level epsilon")
    p.add_argument("--sensors", choices=("all", "half"), help="full or left-half aperture")
    p.add_argument("--mode", choices=("point", "curve"), help="post-processing mode")
    p.add_argument("--jobs", type=int, help="worker threads for the indicator")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tdsampling", description="Time-domain direct sampling for acoustic sources.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize (noisy) boundary data, write field.csv")
    _common(p)

    p = sub.add_parser("reconstruct", help="indicator and peaks from a field file")
    _common(p)
    p.add_argument("--field", type=Path, help="field CSV (default: <out>/field.csv)")

    p = sub.add_parser("recover", help="point-source intensities at the listed peaks")
    _common(p)
    p.add_argument("--field", type=Path, help="field CSV (default: <out>/field.csv)")
    p.add_argument("--peaks", type=Path, help="peaks CSV (default: <out>/peaks.csv)")

    p = sub.add_parser("fit", help="curve branches and polynomial fits from a peaks file")
    _common(p, config_required=False)
    p.add_argument("--peaks", type=Path, help="peaks CSV (default: <out>/peaks.csv)")

    p = sub.add_parser("lemma-check", help="closed-form delta integrals against regularized quadrature")
    p.add_argument("--n-random", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=float, default=1e-3)

    p = sub.add_parser("pipeline", help="all stages, all artifacts")
    _common(p)
    return ap


def _load(args) -> RunConfig:
    cfg = parse_config(args.config) if getattr(args, "config", None) else RunConfig()
    return cfg.with_overrides(
        seed=args.seed, noise_level=args.noise_level, sensors=args.sensors,
        mode=args.mode, out_dir=args.out, n_jobs=args.jobs,
    )


def _sensors(cfg: RunConfig):
    return cfg.sensors.build()


def cmd_simulate(args) -> int:
    cfg = _load(args)
    f = add_noise(simulate(cfg), cfg.noise)
    if cfg.sensors.subset is not None:
        f = f.half(*cfg.sensors.subset)
    path = export_field_csv(f, Path(cfg.out_dir) / "field.csv")
    print(f"wrote {path} ({f.values.shape[0]} sensors x {f.values.shape[1]} samples)")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    f = read_field_csv(args.field or out / "field.csv", _sensors(cfg), cfg.time)
    g, peaks = reconstruct(cfg, f)
    export_grid_csv(g, out / "indicator.csv")
    export_peaks_csv(peaks, out / "peaks.csv")
    for ax, idx in cfg.slices or tuple((a, cfg.grid.n // 2) for a in (1, 2, 3)):
        export_heatmap_slice(g, ax, idx, out / f"slice_{ax}_{idx}.pgm")
    print(f"{len(peaks)} peaks")
    for rank, (_, z, v) in enumerate(peaks, start=1):
        print(f"{rank:>3}  ({z[0]:.4f}, {z[1]:.4f}, {z[2]:.4f})  {v:.6g}")
    return EXIT_OK


def cmd_recover(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    f = read_field_csv(args.field or out / "field.csv", _sensors(cfg), cfg.time)
    peaks = read_peaks_csv(args.peaks or out / "peaks.csv")
    sol = recover_intensities(
        peaks, f, cfg.pulse, cfg.medium,
        max_condition=cfg.recover.max_condition, ridge_condition=cfg.recover.ridge_condition,
    )
    path = out / "intensities.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("rank,z1,z2,z3,intensity\n")
        for j, (z, eta) in enumerate(zip(sol.locations, sol.intensities), start=1):
            fh.write(f"{j},{float(z[0])!r},{float(z[1])!r},{float(z[2])!r},{float(eta)!r}\n")
    for j, (z, eta) in enumerate(zip(sol.locations, sol.intensities), start=1):
        print(f"{j:>3}  ({z[0]:.4f}, {z[1]:.4f}, {z[2]:.4f})  {eta:.4f}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    peaks = read_peaks_csv(args.peaks or out / "peaks.csv")
    res = fit_branches(cfg, peaks)
    text = format_fit_report(res.branches, res.fits, res.selected, res.leftover)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "fit_report.txt", "w", newline="\n") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_lemma(args) -> int:
    checks = lemma_suite(args.n_random, args.seed, args.width)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.value:.3e} <= {c.limit:.0e}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK


def cmd_pipeline(args) -> int:
    cfg = _load(args)
    rep = run_pipeline(cfg)
    print(rep.files["report"].read_text(), end="")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "recover": cmd_recover,
    "fit": cmd_fit,
    "lemma-check": cmd_lemma,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_NUMERIC
    except (TDSamplingError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
