"""scikit-learn style wrappers around the functional API.

``DirectSamplingLocator`` takes a :class:`FieldRecord` as ``X``; the
polynomial regressor takes ordinary 1D arrays. Both expose
``get_params``/``set_params`` through :class:`sklearn.base.BaseEstimator`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .forward import FieldRecord
from .geometry import build_sampling_grid
from .indicator import compute_indicator
from .peaks import PeakParams, extract_peaks
from .recover import fit_polynomials, recover_intensities, select_best_fit
from .signal import Medium, Pulse

__all__ = ["DirectSamplingLocator", "AdjustedR2PolynomialRegressor"]


class DirectSamplingLocator(BaseEstimator, TransformerMixin):
    """Indicator, peak extraction and (optionally) intensities in one object.

    Parameters
    ----------
    omega, sigma, t0 : float
        Probing pulse.
    sound_speed : float
    lower, upper : float
        Cube ``[lower, upper]^3`` holding the sampling grid.
    n : int
        Nodes per axis.
    threshold, max_steps, radius : peak extraction parameters
    recover : bool
        Also estimate intensities at the peaks in :meth:`fit`.
    n_jobs : int
    """

    def __init__(
        self, omega=12.0, sigma=0.01, t0=3.0, sound_speed=1.0, lower=-2.0, upper=2.0, n=45,
        threshold=2.1, max_steps=10, radius=2, recover=True, n_jobs=1,
    ):
        self.omega = omega
        self.sigma = sigma
        self.t0 = t0
        self.sound_speed = sound_speed
        self.lower = lower
        self.upper = upper
        self.n = n
        self.threshold = threshold
        self.max_steps = max_steps
        self.radius = radius
        self.recover = recover
        self.n_jobs = n_jobs

    def _parts(self):
        p = Pulse(self.omega, self.sigma, self.t0)
        m = Medium(self.sound_speed)
        grid = build_sampling_grid((self.lower,) * 3, (self.upper,) * 3, self.n)
        return p, m, grid

    def fit(self, X: FieldRecord, y=None):
        p, m, grid = self._parts()
        self.indicator_ = compute_indicator(X, p, m, grid, n_jobs=self.n_jobs)
        self.peaks_ = extract_peaks(self.indicator_, PeakParams(self.threshold, self.max_steps, self.radius))
        self.locations_ = self.peaks_.locations
        if self.recover and len(self.peaks_):
            self.intensities_ = recover_intensities(self.peaks_, X, p, m).intensities
        else:
            self.intensities_ = np.zeros(len(self.peaks_))
        return self

    def transform(self, X: FieldRecord):
        """Indicator values of ``X`` on the grid, in linear node order."""
        p, m, grid = self._parts()
        return compute_indicator(X, p, m, grid, n_jobs=self.n_jobs).values

    def predict(self, X=None):
        """Locations found during :meth:`fit`, shape ``(K, 3)``."""
        check_is_fitted(self, "locations_")
        return self.locations_


class AdjustedR2PolynomialRegressor(BaseEstimator, RegressorMixin):
    """Polynomial of degree 1..``max_degree`` chosen by adjusted R^2.

    Ties go to the lower degree. ``X`` is the abscissa, shape ``(n,)`` or
    ``(n, 1)``.
    """

    def __init__(self, max_degree=4):
        self.max_degree = max_degree

    def fit(self, X, y):
        x = np.asarray(X, float).reshape(-1)
        y = np.asarray(y, float).reshape(-1)
        pts = np.zeros((len(x), 3))
        pts[:, 0], pts[:, 1] = x, y
        self.fits_ = fit_polynomials(pts, 0, 1, max_degree=self.max_degree)
        best = select_best_fit(self.fits_)
        self.degree_ = best.degree
        self.coef_ = best.coefficients
        self.r2_adj_ = best.r2_adj
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return np.polyval(self.coef_, np.asarray(X, float).reshape(-1))
