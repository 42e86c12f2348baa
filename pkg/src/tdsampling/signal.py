"""Causal pulse, time grid and the retarded kernel ``G*lambda``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularKernelError

__all__ = ["Medium", "Pulse", "TimeGrid", "pulse_eval", "kernel_eval", "R_MIN"]

#: distances below this are treated as a singular kernel evaluation
R_MIN = 1e-9


@dataclass(frozen=True)
class Medium:
    sound_speed: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sound_speed) and self.sound_speed > 0):
            raise InvalidArgumentError("sound speed must be finite and positive")


@dataclass(frozen=True)
class Pulse:
    """Gaussian modulated sine ``sin(omega t) exp(-sigma (t - t0)^2)`` for ``t >= 0``."""

    omega: float = 12.0
    sigma: float = 0.01
    t0: float = 3.0

    def __post_init__(self):
        if not (self.omega > 0 and self.sigma > 0):
            raise InvalidArgumentError("pulse omega and sigma must be positive")
        if not np.isfinite(self.t0):
            raise InvalidArgumentError("pulse t0 must be finite")

    def __call__(self, t):
        return pulse_eval(self, t)


@dataclass(frozen=True)
class TimeGrid:
    """Samples ``t_k = k T / N_T`` for ``k = 0..N_T``."""

    T: float = 15.0
    n_steps: int = 64

    def __post_init__(self):
        if not (self.T > 0 and np.isfinite(self.T)):
            raise InvalidArgumentError("terminal time must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidArgumentError("n_steps must be a positive integer")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def __len__(self):
        return self.n_steps + 1


def pulse_eval(p: Pulse, t):
    """Evaluate the causal pulse; scalar in, float out, array in, array out."""
    t_arr = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore"):
        val = np.where(
            t_arr >= 0, np.sin(p.omega * t_arr) * np.exp(-p.sigma * (t_arr - p.t0) ** 2), 0.0
        )
    return float(val) if val.ndim == 0 else val




def kernel_eval(p: Pulse, m: Medium, x, s, t, r_min: float = R_MIN):
    """``lambda(t - |x - s|/c) / (4 pi |x - s|)`` for single points ``x``, ``s``.

    ``t`` may be a scalar or an array of times.
    """
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(s, float)))
    if r < r_min:
        raise SingularKernelError(f"|x - s| = {r:.3g} below guard r_min={r_min:g}")
    return pulse_eval(p, np.asarray(t, float) - r / m.sound_speed) / (4 * np.pi * r)


def kernel_matrix(p: Pulse, m: Medium, nodes, source, times, r_min: float = R_MIN) -> np.ndarray:
    """Kernel of one source point sampled at every (sensor, time) pair.

    Returns an array of shape ``(n_sensors, n_times)``.
    """
    nodes = np.asarray(nodes, float)
    r = np.linalg.norm(nodes - np.asarray(source, float), axis=1)
    if r.min() < r_min:
        raise SingularKernelError(f"source within {r.min():.3g} of a sensor (r_min={r_min:g})")
    retarded = np.asarray(times, float)[None, :] - r[:, None] / m.sound_speed
    return pulse_eval(p, retarded) / (4 * np.pi * r[:, None])
