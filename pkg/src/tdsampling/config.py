"""Run configuration: a YAML document with nested sections.

Grammar (every section and key is optional unless marked)::

    medium:    {sound_speed: 1.0}
    pulse:     {omega: 12.0, sigma: 0.01, t0: 3.0}
    time:      {T: 15.0, n_steps: 64}
    sensors:   {kind: sphere, radius: 5.0, n_phi: 16, n_theta: 16,
                subset: all}              # all | half | {axis: 1, sign: -1}
               # kind: circle takes radius, n_theta, plane: [[e1], [e2]], center
    grid:      {lower: [-2, -2, -2], upper: [2, 2, 2], n: 45}
    sources:                              # required, at least one entry
      - {type: point, location: [x1, x2, x3], intensity: 3.0}
      - {type: curve, x1: "t", x2: "t**2 - 1", x3: "0", range: [-0.9, 1.4],
         intensity: "x1 + 3", n_nodes: 200, label: L}
    noise:     {level: 0.0, seed: 0}
    peaks:     {mode: point, threshold: 2.1, max_steps: 10, radius: 2, normalize: true}
    indicator: {method: auto, n_jobs: 1}
    recover:   {branch_tol: 1.2, link_dist: 9.5, abscissa: 1, ordinate: 2,
                min_points: 4, min_new: 4, max_condition: 1.0e12, ridge_condition: 1.0e8}
    output:    {dir: out, slices: [[3, 22]]}

Curve coordinates are expressions in the parameter ``t``; intensities are
affine in ``x1, x2, x3``. Axes in ``recover`` and ``output.slices`` are
1-based. ``branch_tol`` and ``link_dist`` are in grid cells. Peak
``threshold`` and ``max_steps`` default by mode: (2.1, 10) for point mode
and (0.2, 20) for curve mode; the mode defaults to ``curve`` when any curve
source is present.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Tuple

import numpy as np
import sympy
import yaml

from .errors import ConfigError, TDSamplingError
from .forward import CurveSource, NoiseSpec, PointSourceSet
from .geometry import SamplingGrid, SensorArray, build_circular_array, build_sampling_grid, build_spherical_array
from .peaks import CURVE_DEFAULTS, POINT_DEFAULTS, PeakParams
from .signal import Medium, Pulse, TimeGrid

__all__ = ["RunConfig", "SensorSpec", "RecoverOptions", "parse_config", "load_config_text", "curve_from_expressions"]

_T = sympy.Symbol("t", real=True)
_X = sympy.symbols("x1 x2 x3", real=True)


@dataclass(frozen=True)
class SensorSpec:
    kind: str = "sphere"
    radius: float = 5.0
    n_phi: int = 16
    n_theta: int = 16
    plane: Optional[tuple] = None
    center: tuple = (0.0, 0.0, 0.0)
    subset: Optional[Tuple[int, int]] = None  # (0-based axis, sign) or None for all

    def build(self) -> SensorArray:
        if self.kind == "sphere":
            arr = build_spherical_array(self.radius, self.n_phi, self.n_theta)
        else:
            arr = build_circular_array(self.radius, self.n_theta, self.plane, self.center)
        if self.subset is not None:
            arr = arr.half(*self.subset)
        return arr


@dataclass(frozen=True)
class RecoverOptions:
    branch_tol: float = 1.2
    link_dist: Optional[float] = 9.5
    abscissa: int = 0
    ordinate: int = 1
    min_points: int = 4
    min_new: int = 4
    max_condition: float = 1e12
    ridge_condition: float = 1e8


@dataclass(frozen=True, eq=False)
class RunConfig:
    medium: Medium = field(default_factory=Medium)
    pulse: Pulse = field(default_factory=Pulse)
    time: TimeGrid = field(default_factory=TimeGrid)
    sensors: SensorSpec = field(default_factory=SensorSpec)
    grid: SamplingGrid = field(default_factory=lambda: build_sampling_grid((-2,) * 3, (2,) * 3, 45))
    points: Optional[PointSourceSet] = None
    curves: Tuple[CurveSource, ...] = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    mode: str = "point"
    peaks: PeakParams = POINT_DEFAULTS
    method: str = "auto"
    n_jobs: int = 1
    recover: RecoverOptions = field(default_factory=RecoverOptions)
    out_dir: Path = Path("out")
    slices: Tuple[Tuple[int, int], ...] = ()
    source_path: Optional[Path] = None

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with CLI style overrides applied (``seed``, ``noise_level``, ``sensors``, ``mode``, ``out_dir``, ``n_jobs``)."""
        changes = {}
        if kw.get("seed") is not None or kw.get("noise_level") is not None:
            level = self.noise.level if kw.get("noise_level") is None else kw["noise_level"]
            seed = self.noise.seed if kw.get("seed") is None else kw["seed"]
            try:
                changes["noise"] = NoiseSpec(float(level), int(seed))
            except TDSamplingError as exc:
                raise ConfigError(str(exc), "noise") from exc
        if kw.get("sensors") is not None:
            subset = None if kw["sensors"] == "all" else (0, -1)
            changes["sensors"] = replace(self.sensors, subset=subset)
        if kw.get("mode") is not None and kw["mode"] != self.mode:
            changes["mode"] = kw["mode"]
            base = CURVE_DEFAULTS if kw["mode"] == "curve" else POINT_DEFAULTS
            changes["peaks"] = replace(base, radius=self.peaks.radius, normalize=self.peaks.normalize)
        if kw.get("out_dir") is not None:
            changes["out_dir"] = Path(kw["out_dir"])
        if kw.get("n_jobs") is not None:
            changes["n_jobs"] = int(kw["n_jobs"])
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# YAML with line bookkeeping


def _line_map(node, path=(), out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (str(k.value),)
            out[p] = k.start_mark.line + 1
            _line_map(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            p = path + (i,)
            out[p] = v.start_mark.line + 1
            _line_map(v, p, out)
    return out


def _fmt(path) -> str:
    s = ""
    for part in path:
        s += f"[{part}]" if isinstance(part, int) else (f".{part}" if s else part)
    return s


class _Reader:
    def __init__(self, data, lines):
        self.data = data
        self.lines = lines

    def line(self, path):
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def fail(self, path, msg):
        raise ConfigError(msg, _fmt(path) or None, self.line(tuple(path)))

    def section(self, path, allowed) -> dict:
        node = self.lookup(path)
        if node is None:
            return {}
        if not isinstance(node, dict):
            self.fail(path, "expected a mapping")
        for k in node:
            if k not in allowed:
                self.fail(path + (str(k),), f"unknown key '{k}'")
        return node

    def lookup(self, path):
        node = self.data
        for p in path:
            if isinstance(node, dict):
                node = node.get(p)
            elif isinstance(node, list) and isinstance(p, int) and p < len(node):
                node = node[p]
            else:
                return None
            if node is None:
                return None
        return node

    def real(self, path, default):
        v = self.lookup(path)
        if v is None:
            return default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {type(v).__name__}")
        return float(v)

    def integer(self, path, default):
        v = self.lookup(path)
        if v is None:
            return default
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, f"expected an integer, got {type(v).__name__}")
        return int(v)

    def boolean(self, path, default):
        v = self.lookup(path)
        if v is None:
            return default
        if not isinstance(v, bool):
            self.fail(path, f"expected true or false, got {type(v).__name__}")
        return v

    def string(self, path, default, choices=None):
        v = self.lookup(path)
        if v is None:
            return default
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = str(v)
        if not isinstance(v, str):
            self.fail(path, f"expected a string, got {type(v).__name__}")
        if choices and v not in choices:
            self.fail(path, f"expected one of {', '.join(choices)}, got '{v}'")
        return v

    def vector(self, path, default, length=3):
        v = self.lookup(path)
        if v is None:
            return default
        if not isinstance(v, list) or len(v) != length:
            self.fail(path, f"expected a list of {length} numbers")
        for i, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                self.fail(path + (i,), "expected a number")
        return tuple(float(x) for x in v)


def _guard(r: _Reader, path, build):
    try:
        return build()
    except ConfigError:
        raise
    except TDSamplingError as exc:
        r.fail(path, str(exc))


_TOP = {"medium", "pulse", "time", "sensors", "grid", "sources", "noise", "peaks", "indicator", "recover", "output"}


def parse_config(path) -> RunConfig:
    """Read, validate and default a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    cfg = load_config_text(text)
    return replace(cfg, source_path=path)


def load_config_text(text: str) -> RunConfig:
    """Parse configuration text; relative output paths stay relative to the working directory."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed document: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from exc
    data = {} if data is None else data
    r = _Reader(data, _line_map(node) if node is not None else {})
    if not isinstance(data, dict):
        r.fail((), "top level must be a mapping")
    r.section((), _TOP)

    r.section(("medium",), {"sound_speed"})
    medium = _guard(r, ("medium",), lambda: Medium(r.real(("medium", "sound_speed"), 1.0)))

    r.section(("pulse",), {"omega", "sigma", "t0"})
    pulse = _guard(r, ("pulse",), lambda: Pulse(
        r.real(("pulse", "omega"), 12.0), r.real(("pulse", "sigma"), 0.01), r.real(("pulse", "t0"), 3.0)
    ))

    r.section(("time",), {"T", "n_steps"})
    tg = _guard(r, ("time",), lambda: TimeGrid(r.real(("time", "T"), 15.0), r.integer(("time", "n_steps"), 64)))

    sensors = _sensors(r)

    r.section(("grid",), {"lower", "upper", "n"})
    n = r.integer(("grid", "n"), 45)
    if n < 2:
        r.fail(("grid", "n"), "n must be >= 2")
    grid = _guard(r, ("grid",), lambda: build_sampling_grid(
        r.vector(("grid", "lower"), (-2.0,) * 3), r.vector(("grid", "upper"), (2.0,) * 3), n
    ))

    points, curves = _sources(r)

    r.section(("noise",), {"level", "seed"})
    noise = _guard(r, ("noise",), lambda: NoiseSpec(r.real(("noise", "level"), 0.0), r.integer(("noise", "seed"), 0)))

    r.section(("peaks",), {"mode", "threshold", "max_steps", "radius", "normalize"})
    mode = r.string(("peaks", "mode"), "curve" if curves else "point", ("point", "curve"))
    dflt = CURVE_DEFAULTS if mode == "curve" else POINT_DEFAULTS
    peaks = _guard(r, ("peaks",), lambda: PeakParams(
        r.real(("peaks", "threshold"), dflt.threshold),
        r.integer(("peaks", "max_steps"), dflt.max_steps),
        r.integer(("peaks", "radius"), dflt.radius),
        r.boolean(("peaks", "normalize"), dflt.normalize),
    ))

    r.section(("indicator",), {"method", "n_jobs"})
    method = r.string(("indicator", "method"), "auto", ("auto", "factored", "direct"))
    n_jobs = r.integer(("indicator", "n_jobs"), 1)
    if n_jobs < 1:
        r.fail(("indicator", "n_jobs"), "n_jobs must be >= 1")

    recover = _recover(r)

    r.section(("output",), {"dir", "slices"})
    out_dir = Path(r.string(("output", "dir"), "out"))
    slices = []
    raw = r.lookup(("output", "slices")) or []
    if not isinstance(raw, list):
        r.fail(("output", "slices"), "expected a list of [axis, index] pairs")
    for i, item in enumerate(raw):
        p = ("output", "slices", i)
        if not (isinstance(item, list) and len(item) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in item)):
            r.fail(p, "expected [axis, index] with integer entries")
        axis, index = item
        if axis not in (1, 2, 3):
            r.fail(p, "slice axis must be 1, 2 or 3")
        if not 0 <= index < grid.n:
            r.fail(p, f"slice index must lie in 0..{grid.n - 1}")
        slices.append((axis, index))

    return RunConfig(
        medium=medium, pulse=pulse, time=tg, sensors=sensors, grid=grid, points=points,
        curves=tuple(curves), noise=noise, mode=mode, peaks=peaks, method=method,
        n_jobs=n_jobs, recover=recover, out_dir=out_dir, slices=tuple(slices),
    )


def _sensors(r: _Reader) -> SensorSpec:
    sec = ("sensors",)
    r.section(sec, {"kind", "radius", "n_phi", "n_theta", "plane", "center", "subset"})
    kind = r.string(sec + ("kind",), "sphere", ("sphere", "circle"))
    radius = r.real(sec + ("radius",), 5.0)
    n_phi = r.integer(sec + ("n_phi",), 16)
    n_theta = r.integer(sec + ("n_theta",), 16)
    center = r.vector(sec + ("center",), (0.0, 0.0, 0.0))
    plane = r.lookup(sec + ("plane",))
    if plane is not None:
        if kind != "circle":
            r.fail(sec + ("plane",), "plane applies to circular arrays only")
        if not (isinstance(plane, list) and len(plane) == 2):
            r.fail(sec + ("plane",), "expected two basis vectors")
        plane = (r.vector(sec + ("plane", 0), None), r.vector(sec + ("plane", 1), None))
    raw = r.lookup(sec + ("subset",))
    subset = None
    if isinstance(raw, str):
        if raw not in ("all", "half"):
            r.fail(sec + ("subset",), f"expected all, half or a mapping, got '{raw}'")
        subset = None if raw == "all" else (0, -1)
    elif isinstance(raw, dict):
        r.section(sec + ("subset",), {"axis", "sign"})
        axis = r.integer(sec + ("subset", "axis"), 1)
        sign = r.integer(sec + ("subset", "sign"), -1)
        if axis not in (1, 2, 3) or sign not in (-1, 1):
            r.fail(sec + ("subset",), "axis must be 1..3 and sign -1 or 1")
        subset = (axis - 1, sign)
    elif raw is not None:
        r.fail(sec + ("subset",), "expected all, half or a mapping")
    spec = SensorSpec(kind, radius, n_phi, n_theta, plane, center, subset)
    arr = _guard(r, sec, spec.build)
    if len(arr) == 0:
        r.fail(sec + ("subset",), "subset leaves no sensors")
    return spec


def _sources(r: _Reader):
    raw = r.lookup(("sources",))
    if raw is None or (isinstance(raw, list) and not raw):
        r.fail(("sources",), "at least one source required")
    if not isinstance(raw, list):
        r.fail(("sources",), "expected a list of sources")
    locs, taus, curves = [], [], []
    for i, item in enumerate(raw):
        p = ("sources", i)
        if not isinstance(item, dict):
            r.fail(p, "expected a mapping")
        kind = r.string(p + ("type",), None, ("point", "curve"))
        if kind is None:
            r.fail(p, "missing 'type' (point or curve)")
        if kind == "point":
            r.section(p, {"type", "location", "intensity"})
            loc = r.vector(p + ("location",), None)
            if loc is None:
                r.fail(p, "point source needs a location")
            tau = r.real(p + ("intensity",), 1.0)
            if not tau > 0:
                r.fail(p + ("intensity",), "intensity must be positive")
            locs.append(loc)
            taus.append(tau)
        else:
            r.section(p, {"type", "x1", "x2", "x3", "range", "intensity", "n_nodes", "label"})
            exprs = []
            for ax in ("x1", "x2", "x3"):
                e = r.string(p + (ax,), None)
                if e is None:
                    r.fail(p, f"curve source needs '{ax}'")
                exprs.append(e)
            rng = r.vector(p + ("range",), None, length=2)
            if rng is None:
                r.fail(p, "curve source needs 'range: [a, b]'")
            tau = r.string(p + ("intensity",), "1")
            n_nodes = r.integer(p + ("n_nodes",), 200)
            label = r.string(p + ("label",), f"curve{i}")
            try:
                curve = curve_from_expressions(exprs, rng, tau, n_nodes=n_nodes, label=label)
                curve.quadrature()
            except ValueError as exc:
                r.fail(p, str(exc))
            curves.append(curve)
    points = None
    if locs:
        points = _guard(r, ("sources",), lambda: PointSourceSet(np.array(locs), np.array(taus)))
    return points, curves


def _recover(r: _Reader) -> RecoverOptions:
    sec = ("recover",)
    r.section(sec, {"branch_tol", "link_dist", "abscissa", "ordinate", "min_points", "min_new",
                    "max_condition", "ridge_condition"})
    d = RecoverOptions()
    link = r.lookup(sec + ("link_dist",))
    if isinstance(link, str) and link == "none":
        link = None
    else:
        link = r.real(sec + ("link_dist",), d.link_dist)
    abscissa = r.integer(sec + ("abscissa",), d.abscissa + 1)
    ordinate = r.integer(sec + ("ordinate",), d.ordinate + 1)
    if abscissa not in (1, 2, 3) or ordinate not in (1, 2, 3) or abscissa == ordinate:
        r.fail(sec, "abscissa and ordinate must be two different axes in 1..3")
    opts = RecoverOptions(
        branch_tol=r.real(sec + ("branch_tol",), d.branch_tol),
        link_dist=link,
        abscissa=abscissa - 1,
        ordinate=ordinate - 1,
        min_points=r.integer(sec + ("min_points",), d.min_points),
        min_new=r.integer(sec + ("min_new",), d.min_new),
        max_condition=r.real(sec + ("max_condition",), d.max_condition),
        ridge_condition=r.real(sec + ("ridge_condition",), d.ridge_condition),
    )
    if not opts.branch_tol > 0 or (opts.link_dist is not None and not opts.link_dist > 0):
        r.fail(sec, "branch_tol and link_dist must be positive")
    if opts.min_points < 3 or opts.min_new < 1:
        r.fail(sec, "min_points must be >= 3 and min_new >= 1")
    if not 0 < opts.ridge_condition <= opts.max_condition:
        r.fail(sec, "need 0 < ridge_condition <= max_condition")
    return opts


# ---------------------------------------------------------------------------
# Curve expressions


def _parse(expr: str, allowed) -> Any:
    try:
        e = sympy.sympify(expr, locals={s.name: s for s in allowed}, rational=False)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse expression '{expr}'") from exc
    extra = e.free_symbols - set(allowed)
    if extra:
        names = ", ".join(sorted(s.name for s in extra))
        raise ValueError(f"expression '{expr}' uses unknown symbols: {names}")
    return e


def curve_from_expressions(exprs, param_range, intensity="1", n_nodes: int = 200, label: str = "") -> CurveSource:
    """Curve source from coordinate expressions in ``t`` and an affine intensity.

    The derivative of the parameterization is taken symbolically.
    """
    coords = [_parse(str(e), [_T]) for e in exprs]
    tau = _parse(str(intensity), list(_X))
    if sympy.Poly(tau, *_X).total_degree() > 1:
        raise ValueError(f"intensity '{intensity}' must be affine in x1, x2, x3")
    f = sympy.lambdify(_T, coords, "numpy")
    df = sympy.lambdify(_T, [sympy.diff(c, _T) for c in coords], "numpy")
    g = sympy.lambdify(_X, tau, "numpy")

    def gamma(u):
        u = np.asarray(u, float)
        return np.stack([np.broadcast_to(np.asarray(v, float), u.shape) for v in f(u)], axis=-1)

    def dgamma(u):
        u = np.asarray(u, float)
        return np.stack([np.broadcast_to(np.asarray(v, float), u.shape) for v in df(u)], axis=-1)

    def tau_fn(pts):
        pts = np.asarray(pts, float)
        return np.broadcast_to(np.asarray(g(pts[:, 0], pts[:, 1], pts[:, 2]), float), (len(pts),))

    a, b = (float(v) for v in param_range)
    return CurveSource(gamma, a, b, tau_fn, dgamma, n_nodes=n_nodes, label=label)
