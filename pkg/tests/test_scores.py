import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssrcusum.scores import (SQRT3, NormalizerTable, ScoreKind, ScoreKindError,
                             inverse_normal_cdf, score_spec, xi, xi_dispersion, xi_location)


def nu_oracle(kind, i):
    # normalizer straight from the defining sum, in extended precision
    if kind is ScoreKind.W:
        j = lambda u: mpmath.sqrt(3) * u
    else:
        j = lambda u: mpmath.sqrt(2) * mpmath.erfinv(u)
    return float(mpmath.sqrt(mpmath.fsum(j(mpmath.mpf(r) / (i + 1)) ** 2
                                         for r in range(1, i + 1)) / i))


@pytest.mark.parametrize("p", [1e-300, 1e-20, 1e-9, 0.01, 0.02425, 0.3, 0.5, 0.7,
                               0.97575, 0.999, 1 - 1e-12])
def test_inverse_normal_cdf_matches_mpmath(p):
    with mpmath.workdps(50):
        target = mpmath.mpf(p)
        want = float(mpmath.findroot(lambda z: mpmath.ncdf(z) - target,
                                     inverse_normal_cdf(p)))
    assert inverse_normal_cdf(p) == pytest.approx(want, rel=1e-13, abs=1e-15)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_inverse_normal_cdf_domain(p):
    with pytest.raises(ValueError):
        inverse_normal_cdf(p)


def test_inverse_normal_cdf_symmetry():
    for p in np.linspace(0.01, 0.5, 50):
        assert inverse_normal_cdf(p) == pytest.approx(-inverse_normal_cdf(1 - p), abs=1e-12)


@pytest.mark.parametrize("kind", [ScoreKind.W, ScoreKind.VDW])
@pytest.mark.parametrize("i", [1, 2, 7, 50, 300])
def test_normalizer_against_defining_sum(kind, i):
    assert score_spec(kind).nu(i) == pytest.approx(nu_oracle(kind, i), rel=1e-12)


def test_wilcoxon_normalizer_closed_form():
    for i in range(1, 200):
        assert score_spec("w").nu(i) == pytest.approx(math.sqrt((2 * i + 1) / (2 * i + 2)),
                                                      rel=1e-13)


def test_normalizer_table_extension_is_consistent():
    t = NormalizerTable(ScoreKind.VDW, n_max=10)
    a = t.array(10).copy()
    t.extend(5000)
    assert len(t) == 5000
    np.testing.assert_array_equal(t.array(10)[1:], a[1:])
    assert math.isnan(t.array(3)[0])
    assert not t.array(3).flags.writeable


@pytest.mark.parametrize("kind", [ScoreKind.W, ScoreKind.VDW])
def test_location_moments_by_enumeration(kind):
    for i in (1, 2, 5, 17, 50):
        vals = [xi_location(kind, i, s, r) for s, r in itertools.product((-1, 1),
                                                                         range(1, i + 1))]
        assert abs(np.mean(vals)) < 1e-12
        assert np.mean(np.square(vals)) == pytest.approx(1.0, abs=1e-12)


def test_dispersion_mean_by_enumeration():
    for i in (1, 3, 50):
        assert abs(np.mean([xi_dispersion(i, r) for r in range(1, i + 1)])) < 1e-12


def test_first_observation_values():
    # rank 1 of 1: u = 1/2
    assert xi_location("w", 1, 1, 1) == pytest.approx(1.0)
    assert xi_dispersion(1, 1) == pytest.approx(0.0)
    assert xi_location("vdw", 1, -1, 1) == pytest.approx(-1.0)


def test_zero_sign_gives_zero():
    assert xi_location("w", 10, 0, 4) == 0.0
    assert xi("vdw", 10, 0, 4) == 0.0


@given(st.integers(1, 5000), st.data())
@settings(max_examples=200, deadline=None)
def test_wilcoxon_statistic_bounded(i, data):
    r = data.draw(st.integers(1, i))
    s = data.draw(st.sampled_from([-1, 1]))
    assert abs(xi_location("w", i, s, r)) <= SQRT3 + 1e-12
    assert -1.0 <= xi_dispersion(i, r) <= 2.0


def test_dispatch_and_errors():
    assert xi("w2", 4, -1, 4) == xi_dispersion(4, 4)
    with pytest.raises(ScoreKindError):
        xi_location("w2", 3, 1, 1)
    with pytest.raises(ValueError):
        xi_location("w", 3, 1, 4)
    with pytest.raises(ValueError):
        xi_location("w", 3, 2, 1)
    with pytest.raises(ValueError):
        xi_dispersion(0, 1)


def test_parse_aliases():
    assert ScoreKind.parse("Wilcoxon") is ScoreKind.W
    assert ScoreKind.parse("vdw") is ScoreKind.VDW
    assert ScoreKind.parse("W2") is ScoreKind.W2
    assert ScoreKind.parse(1) is ScoreKind.VDW
    with pytest.raises((ValueError, ScoreKindError)):
        ScoreKind.parse("median")


def test_score_function_and_derivative():
    w, v = score_spec("w"), score_spec("vdw")
    assert w.J(0.5) == pytest.approx(SQRT3 / 2)
    assert w.dJ(0.3) == pytest.approx(SQRT3)
    assert v.J(0.0) == pytest.approx(0.0, abs=1e-15)
    # d/du Phi^-1((1+u)/2) at u = 0 is sqrt(pi/2)
    assert v.dJ(0.0) == pytest.approx(math.sqrt(math.pi / 2))
    with pytest.raises(ValueError):
        w.J(1.0)
    with pytest.raises(Exception):
        score_spec("w2").dJ(0.2)
    assert score_spec("w") is score_spec(ScoreKind.W)
