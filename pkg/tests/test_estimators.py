import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tdsampling import PointSourceSet, point_field
from tdsampling.estimators import AdjustedR2PolynomialRegressor, DirectSamplingLocator


def test_locator_params_round_trip():
    est = DirectSamplingLocator(n=17, threshold=1.0)
    params = est.get_params()
    assert params["n"] == 17 and params["threshold"] == 1.0
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(max_steps=3)
    assert est.max_steps == 3


def test_locator_fit_predict(pulse, medium, sensors, tgrid):
    src = PointSourceSet([[0.5, 0.0, 0.0], [-1.0, 1.0, 0.0]], [2.0, 3.0])
    f = point_field(src, pulse, medium, sensors, tgrid)
    est = DirectSamplingLocator(n=17, threshold=1.0)
    with pytest.raises(NotFittedError):
        est.predict()
    est.fit(f)
    loc = est.predict()
    order = np.argsort(loc[:, 0])
    np.testing.assert_allclose(loc[order], src.locations[::-1])
    np.testing.assert_allclose(est.intensities_[order], [3.0, 2.0], rtol=1e-8)
    vals = est.transform(f)
    assert vals.shape == (17**3,)
    np.testing.assert_array_equal(vals, est.indicator_.values)


def test_locator_without_recovery(pulse, medium, sensors, tgrid):
    f = point_field(PointSourceSet([[0.5, 0.0, 0.0]], [2.0]), pulse, medium, sensors, tgrid)
    est = DirectSamplingLocator(n=9, threshold=0.5, recover=False).fit(f)
    np.testing.assert_array_equal(est.intensities_, np.zeros(len(est.peaks_)))


def test_regressor_selects_quadratic():
    x = np.linspace(-1, 1, 11)
    y = 2 * x**2 - 0.5 * x + 1
    reg = AdjustedR2PolynomialRegressor().fit(x, y)
    assert reg.degree_ == 2
    np.testing.assert_allclose(reg.coef_, [2, -0.5, 1], atol=1e-12)
    np.testing.assert_allclose(reg.predict(x[:, None]), y, atol=1e-12)
    assert reg.score(x, y) == pytest.approx(1.0)


def test_regressor_respects_max_degree():
    x = np.linspace(0, 1, 8)
    reg = AdjustedR2PolynomialRegressor(max_degree=1).fit(x, x**3)
    assert reg.degree_ == 1 and len(reg.fits_) == 1
