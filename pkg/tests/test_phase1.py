import math
import warnings

import numpy as np
import pytest

from ssrcusum import distlab as D
from ssrcusum import phase1 as P


def test_sigma_estimators(rng):
    assert P.estimate_sigma([-1.0, 1.0]) == pytest.approx(math.sqrt(2))
    x = rng.normal(0, 2, 10_000)
    assert P.estimate_sigma(x) == pytest.approx(2.0, rel=0.03)
    for m in ("sample_sd", "iqr"):
        assert P.estimate_sigma(x + 100, m) == pytest.approx(P.estimate_sigma(x, m), rel=1e-9)
        assert P.estimate_sigma(3 * x, m) == pytest.approx(3 * P.estimate_sigma(x, m))
    with pytest.raises(ValueError):
        P.estimate_sigma([1.0, 1.0])
    with pytest.raises(ValueError):
        P.estimate_sigma([1.0])
    with pytest.raises(ValueError):
        P.estimate_sigma([1.0, 2.0], "mad-ish")


def test_theta0_hat_normal(rng):
    assert P.theta0_hat(rng.standard_normal(10_000)) == pytest.approx(0.98, rel=0.05)


def test_theta0_hat_t3(rng):
    x = D.sample(D.student_t(3), rng, 10_000)
    assert P.theta0_hat(x) == pytest.approx(1.37, rel=0.10)


def test_theta0_hat_vdw(rng):
    assert P.theta0_hat(rng.standard_normal(5000), "vdw") == pytest.approx(1.0, rel=0.05)
    with pytest.raises(ValueError):
        P.theta0_hat(rng.standard_normal(50), "w2")


def test_theta1_hat(rng):
    assert P.theta1_hat(rng.standard_normal(10_000)) == pytest.approx(1.10, rel=0.10)
    x = D.sample(D.student_t(4), rng, 10_000)
    assert P.theta1_hat(x) == pytest.approx(0.94, rel=0.10)


def test_estimates_scale_invariant(rng):
    x = rng.standard_normal(300)
    for c in (0.01, 10.0):
        assert P.theta0_hat(c * x) == pytest.approx(P.theta0_hat(x), rel=1e-10)
        assert P.theta1_hat(c * x) == pytest.approx(P.theta1_hat(x), rel=1e-10)
        # a raw-scale bandwidth scales with the data
        assert P.theta0_hat(c * x, bandwidth=0.3 * c) == pytest.approx(
            P.theta0_hat(x, bandwidth=0.3), rel=1e-10)


def test_bandwidth_robustness():
    x = np.random.default_rng(11).normal(0, 0.45, 50)
    b = D.silverman_bandwidth(x)
    t = P.theta0_hat(x, bandwidth=b)
    for f in (0.5, 2.0):
        assert abs(P.theta0_hat(x, bandwidth=f * b) - t) < 0.15


def test_design_location():
    assert P.design_location(1.18, 0.25) == pytest.approx(0.1475)
    assert round(P.design_location(1.03, 0.5), 2) == 0.26
    with pytest.raises(ValueError):
        P.design_location(1.0, 0.0)
    with pytest.warns(P.DesignWarning):
        P.design_location(1.0, 7.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        P.design_location(1.0, 7.0, "vdw")


def test_design_dispersion():
    up, down = P.design_dispersion(1.0, 0.5)
    assert up == pytest.approx(math.log(1.5) / 2) and round(up, 2) == 0.20
    assert down == pytest.approx(-math.log(0.5) / 2) and round(down, 2) == 0.35
    assert P.design_dispersion(1.0, 1e-9)[0] == pytest.approx(0.0, abs=1e-8)
    assert round(P.design_dispersion(1.12, 0.5)[0], 2) == 0.23
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            P.design_dispersion(1.0, bad)


def test_design_from_data(rng):
    x = rng.normal(0, 0.45, 50)
    d = P.design_from_data(x, 0.5, 0.5)
    assert d.sigma_hat > 0 and d.bandwidth == pytest.approx(D.silverman_bandwidth(x))
    assert d.zeta_location == pytest.approx(d.theta0_hat * 0.25)
    assert d.zeta_up > 0 and d.zeta_down > 0


def test_presets():
    assert (P.THETA0_NEAR_NORMAL, P.THETA0_HEAVY_TAILS, P.THETA1_DEFAULT) == (1.0, 1.3, 1.0)
