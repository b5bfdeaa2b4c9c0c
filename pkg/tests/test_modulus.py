import math

import numpy as np
import pytest

from gapverify.errors import DegenerateExcited, PoleProximity
from gapverify.geometry import DomainSpec, admissible_pairs, sample_pairs
from gapverify.model1d import Model1D
from gapverify.modulus import (SlackReport, classify, default_tolerance, expansion_slack,
                               ground_state_field, logconcavity_min_eig, ratio_continuity)
from gapverify.operator import VectorFieldSample

from conftest import PI2, solve

UNIT = Model1D(1.0)


def test_classify_bands():
    assert classify(-0.2, 0.1) == "fail"
    assert classify(-0.05, 0.1) == "marginal"
    assert classify(0.1, 0.1) == "marginal"
    assert classify(0.2, 0.1) == "pass"
    assert default_tolerance(0.01, 1.0) == pytest.approx(0.1 * PI2)


def test_drift_matches_tan(interval_512):
    X = ground_state_field(interval_512, None, 1e-2)
    s = X.points[:, 0]
    exact = math.pi * np.tan(math.pi * s)
    big = np.abs(exact) > 1e-12
    rel = np.abs(X.values[big, 0] - exact[big]) / np.abs(exact[big])
    assert rel.max() <= 5e-3


def test_drift_odd_symmetry(interval_512, square_64):
    X = ground_state_field(interval_512)
    np.testing.assert_allclose(X.values[::-1, 0], -X.values[:, 0], atol=1e-8)
    Xs = ground_state_field(square_64)
    centre = np.array([0.5, 0.5])
    # reflect through the centre: node order reverses on a symmetric lattice
    np.testing.assert_allclose(Xs.points[::-1], 2 * centre - Xs.points, atol=1e-12)
    np.testing.assert_allclose(Xs.values[::-1], -Xs.values, atol=1e-8)


def test_drift_small_at_peak(square):
    # off-centre convex potential puts the maximum between nodes
    from gapverify.operator import Potential
    for h in (1 / 32, 1 / 64):
        sr = solve(square, h, Potential.radial(4.0, [0.43, 0.61]))
        X = ground_state_field(sr, None, 1e-2)
        peak = int(np.argmax(sr.phi0[X.nodes]))
        # Lipschitz constant of X estimated from its own lattice neighbours
        lat = X.lattice
        L = 0.0
        for axis in range(2):
            step = np.zeros(2, dtype=int)
            step[axis] = 1
            key = {tuple(p): k for k, p in enumerate(lat)}
            for k, p in enumerate(lat):
                q = key.get(tuple(p + step))
                if q is not None:
                    L = max(L, np.linalg.norm(X.values[q] - X.values[k]) / h)
        assert np.linalg.norm(X.values[peak]) <= L * h * math.sqrt(2)


def test_square_expansion_passes(square_64):
    X = ground_state_field(square_64)
    pairs = sample_pairs(X.nodes, 100_000, 0)
    assert len(pairs) == 100_000
    rep, slack = expansion_slack(X, pairs, Model1D(math.sqrt(2)), return_pairs=True)
    assert rep.verdict in ("pass", "marginal")
    assert rep.passed and rep.min_slack >= -rep.tolerance
    assert rep.quantiles["q50"] > 0
    assert rep.min_slack <= rep.quantiles["q0"] <= rep.quantiles["q1"] <= rep.quantiles["q50"]

    # independent route: analytic drift of sin(pi x) sin(pi y) on the same pairs
    P = X.points
    Xa = -math.pi / np.tan(math.pi * P)
    analytic = VectorFieldSample(X.nodes, P, X.lattice, Xa, X.h)
    rep_a, slack_a = expansion_slack(analytic, pairs, Model1D(math.sqrt(2)), return_pairs=True)
    assert rep_a.min_slack >= -rep.tolerance
    assert np.max(np.abs(slack - slack_a)) <= rep.tolerance


def test_square_quadratic_passes(square_quadratic_64):
    X = ground_state_field(square_quadratic_64)
    pairs = sample_pairs(X.nodes, 100_000, 0)
    verdicts = set()
    for delta in (1e-1, 1e-2, 1e-3):
        Xd = ground_state_field(square_quadratic_64, None, delta)
        rep = expansion_slack(Xd, sample_pairs(Xd.nodes, 100_000, 0), Model1D(math.sqrt(2)))
        assert rep.passed
        verdicts.add(rep.verdict)
    assert len(verdicts) == 1
    assert expansion_slack(X, pairs, Model1D(math.sqrt(2))).pair_count == 100_000


def test_slack_increases_with_larger_diameter(square_64):
    X = ground_state_field(square_64)
    pairs = sample_pairs(X.nodes, 5000, 1)
    _, s1 = expansion_slack(X, pairs, Model1D(math.sqrt(2)), return_pairs=True)
    _, s2 = expansion_slack(X, pairs, Model1D(1.01 * math.sqrt(2)), return_pairs=True)
    assert np.all(s2 > s1)


def test_hessian_implies_monotone_drift(square_quadratic_64):
    tol = default_tolerance(1 / 64, math.sqrt(2))
    assert logconcavity_min_eig(square_quadratic_64) >= -tol
    X = ground_state_field(square_quadratic_64)
    rep = expansion_slack(X, sample_pairs(X.nodes, 20_000, 2), Model1D(math.sqrt(2)),
                          bound="zero")
    assert rep.min_slack >= -tol


def test_coincidence_limit():
    lat = np.array([[0, 0], [1, 0], [0, 1]], dtype=np.int64)
    h = 1e-4
    vals = np.array([[1.0, 2.0], [1.0, 2.5], [1.0, 2.0]])
    X = VectorFieldSample(np.arange(3), lat * h, lat, vals, h)
    rep, s = expansion_slack(X, np.array([[0, 1], [0, 2]]), UNIT, return_pairs=True)
    # X(y) - X(x) is perpendicular to y - x for the first pair
    assert abs(s[0]) <= UNIT.a ** 2 * h * 1.0001
    assert rep.pair_count == 2


def test_pole_pairs_excluded():
    lat = np.array([[0], [500], [1000]], dtype=np.int64)
    X = VectorFieldSample(np.arange(3), lat * 1e-3, lat, np.zeros((3, 1)), 1e-3)
    with pytest.warns(PoleProximity):
        rep = expansion_slack(X, np.array([[0, 1], [0, 2]]), UNIT)
    assert rep.excluded_pole == 1 and rep.pair_count == 1


def test_logconcavity_interval(interval_512):
    v = logconcavity_min_eig(interval_512)
    assert v >= PI2 - 0.05
    assert v == pytest.approx(PI2, rel=1e-4)


def test_logconcavity_square(square_64):
    assert logconcavity_min_eig(square_64) >= PI2 - default_tolerance(1 / 64, math.sqrt(2))


def test_ratio_interval(interval_512):
    # w = phi1/phi0 = 2 sin(pi s); differences over wbar(r/2) peak at 2 cos(0) = 2
    diag = ratio_continuity(interval_512, None, UNIT)
    assert math.isfinite(diag.c_star)
    assert diag.c_star == pytest.approx(2.0, rel=1e-9)
    assert diag.x[0] == pytest.approx(-diag.y[0], abs=1e-12)


def test_ratio_rectangle_long_axis():
    sr = solve(DomainSpec.rectangle(2.0, 1.0), 1 / 32)
    diag = ratio_continuity(sr, None, Model1D(math.sqrt(5)))
    assert math.isfinite(diag.c_star)
    assert diag.angle_deg <= 15


def test_ratio_square_degenerate(square_64):
    with pytest.raises(DegenerateExcited):
        ratio_continuity(square_64, None, Model1D(math.sqrt(2)))


def test_equality_case_is_sharp(interval_512, interval_1024):
    # the minimum slack sits at the bound and closes at second order
    mins = []
    for sr in (interval_512, interval_1024):
        X = ground_state_field(sr)
        pairs = admissible_pairs(sr.grid, sr.phi0, 1e-2, max_pairs=10 ** 7)
        rep = expansion_slack(X, pairs, UNIT)
        assert abs(rep.min_slack) <= rep.tolerance
        mins.append(abs(rep.min_slack))
    assert 3.5 <= mins[0] / mins[1] <= 4.5


def test_interval_max_abs_slack_literal(interval_512, interval_1024):
    """Literal reading: every admissible pair within 5e-3 pi^2, halving at order 2.

    Only symmetric pairs realise the bound; others keep slack of order
    (pi/D)^2 / cos^2, so this is expected to fail. See the decisions ledger.
    """
    vals = []
    for sr in (interval_512, interval_1024):
        X = ground_state_field(sr)
        pairs = admissible_pairs(sr.grid, sr.phi0, 1e-2, max_pairs=10 ** 7)
        vals.append(expansion_slack(X, pairs, UNIT).max_abs_slack)
    assert vals[0] <= 5e-3 * PI2
    assert 3.5 <= vals[0] / vals[1] <= 4.5


def test_report_serializes(square_64):
    X = ground_state_field(square_64)
    rep = expansion_slack(X, sample_pairs(X.nodes, 1000, 0), Model1D(math.sqrt(2)))
    d = rep.to_dict()
    assert isinstance(rep, SlackReport)
    assert d["pair_count"] == 1000 and d["verdict"] == rep.verdict
    assert set(d["quantiles"]) == {"q0", "q1", "q50"}
