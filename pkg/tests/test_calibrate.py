import json
import math

import numpy as np
import pytest

from ssrcusum import calibrate as C
from ssrcusum.engine import BOTH


def test_published_lookup():
    assert C.published_limit("w", 0.25, 500) == 7.25
    assert C.published_limit("vdw", 0.25, 500) == 7.208
    assert C.published_limit("w2", 0.2, 2000) == 10.29
    with pytest.raises(KeyError):
        C.published_limit("w", 0.26, 500)


@pytest.mark.parametrize("table", [C.TABLE_S1, C.TABLE_S2, C.TABLE_S6])
def test_published_tables_monotone(table):
    assert np.all(np.diff(table, axis=1) > 0)  # grows with ARL0
    assert np.all(np.diff(table, axis=0) < 0)  # shrinks with zeta


def test_estimate_ic_arl_validation():
    with pytest.raises(ValueError):
        C.estimate_ic_arl("w", 0.25, 0.0)
    with pytest.raises(ValueError):
        C.estimate_ic_arl("w", 0.25, 7.25, reps=10)
    with pytest.raises(C.CalibrationError):
        C.estimate_ic_arl("w", 0.25, 30.0, reps=100, cap=100)


def test_estimate_ic_arl_samplers_agree():
    a = C.estimate_ic_arl("w", 0.5, 2.73, reps=20_000, seed=1)
    b = C.estimate_ic_arl("w", 0.5, 2.73, reps=20_000, seed=2, sampler="ranks")
    assert a.arl == pytest.approx(100, rel=0.04)
    assert abs(a.arl - b.arl) < 3 * math.hypot(a.se, b.se)


def test_request_validation():
    with pytest.raises(ValueError):
        C.CalibrationRequest("w", [], [500])
    with pytest.raises(ValueError):
        C.CalibrationRequest("w", [0.3, 0.2], [500])
    with pytest.raises(ValueError):
        C.CalibrationRequest("w", [0.2], [500], tol=0)
    with pytest.raises(ValueError):
        C.CalibrationRequest("w", [0.2], [500], side="middle")


def test_fit_log_arl_recovers_line():
    pts = [(h, math.exp(0.5 + 0.7 * h), 1.0) for h in (2.0, 3.0, 4.0)]
    a, b = C._fit_log_arl(pts, None)
    assert (a, b) == pytest.approx((0.5, 0.7))
    # one point: the prior slope is kept
    a, b = C._fit_log_arl(pts[:1], 0.9)
    assert b == 0.9 and a + 0.9 * 2.0 == pytest.approx(0.5 + 1.4)


def test_normal_limit_known_value():
    # Siegmund's approximation puts the normal one-sided ARL0=500 limit at zeta=0.5 near 4.39
    h, slope = C.normal_control_limit(0.5, 500, reps=20_000, seed=3)
    assert h == pytest.approx(4.39, abs=0.12) and slope > 0


@pytest.fixture(scope="module")
def small_grid():
    req = C.CalibrationRequest("w", [0.25, 0.5], [100, 500], reps=5000, verify_reps=20_000,
                               seed=11)
    return C.solve_control_limit(req)


def test_small_grid_matches_published(small_grid):
    for (z, a), cell in small_grid.cells.items():
        assert cell.h == pytest.approx(C.published_limit("w", z, a), rel=0.04)
        assert cell.converged and cell.iterations <= 6
        assert cell.h_normal > 0


def test_small_grid_monotone(small_grid):
    t = small_grid.h_table()
    assert np.all(np.diff(t, axis=1) > 0) and np.all(np.diff(t, axis=0) < 0)


def test_result_serialization(small_grid):
    lines = small_grid.to_csv().strip().splitlines()
    assert lines[0] == "zeta,100,500" and len(lines) == 3
    blob = json.loads(small_grid.to_json())
    assert blob["request"]["score"] == "W" and len(blob["cells"]) == 4
    assert np.array(blob["h"]).shape == (2, 2)


def test_two_sided_limit_exceeds_one_sided():
    req = C.CalibrationRequest("w", [0.5], [100], reps=4000, verify_reps=10_000, side=BOTH,
                               seed=2)
    h2 = C.solve_control_limit(req).cell(0.5, 100).h
    assert h2 > C.published_limit("w", 0.5, 100)
