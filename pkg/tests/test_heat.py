import csv
import math

import numpy as np
import pytest
from scipy.linalg import expm

from gapverify.errors import TailTooFat
from gapverify.geometry import DomainSpec, admissible_nodes, build_grid, sample_pairs
from gapverify.heat import (decay_check, kernel_cn, kernel_slack, kernel_spectral,
                            parabolic_pair_slacks, t_min, write_field_csv)
from gapverify.model1d import Model1D, hbar
from gapverify.modulus import expansion_slack, ground_state_field
from gapverify.operator import Potential, assemble_dirichlet

from conftest import solve

UNIT = Model1D(1.0)
SQ = Model1D(math.sqrt(2))


@pytest.fixture(scope="module")
def op512(interval):
    return assemble_dirichlet(build_grid(interval, 1 / 512))


@pytest.fixture(scope="module")
def op256(interval):
    return assemble_dirichlet(build_grid(interval, 1 / 256))


@pytest.fixture(scope="module")
def op_sq48(square):
    return assemble_dirichlet(build_grid(square, 1 / 48))


def test_t_min():
    assert t_min(1 / 64, 1.0) == 0.02
    assert t_min(0.1, 1.0) == pytest.approx(0.1)


def test_large_time_ground_state_limit(interval, square):
    for spec, h in ((interval, 1 / 256), (square, 1 / 32)):
        sr = solve(spec, h)
        op = sr.operator
        z = op.grid.nearest_node(spec.centroid())
        t = 12 / (sr.lam1 - sr.lam0)
        H = kernel_spectral(op, z, [t])[0].values
        limit = sr.phi0[z] * sr.phi0
        np.testing.assert_allclose(math.exp(sr.lam0 * t) * H, limit, rtol=1e-6)


def test_matches_model_kernel(op256, op512):
    # Richardson on the nodes shared by both grids
    for t in (0.05, 0.1, 0.5):
        Hc = kernel_spectral(op256, op256.grid.nearest_node([0.0]), [t])[0].values
        Hf = kernel_spectral(op512, op512.grid.nearest_node([0.0]), [t])[0].values
        ext = (4 * Hf[1::2] - Hc) / 3
        s = op256.grid.nodes[:, 0]
        assert np.max(np.abs(ext - hbar(s, t, UNIT))) <= 1e-4
        assert np.max(np.abs(Hf - hbar(op512.grid.nodes[:, 0], t, UNIT))) <= 1e-4


def test_kernel_symmetry(op_sq48):
    g = op_sq48.grid
    a, b = g.nearest_node([0.3, 0.6]), g.nearest_node([0.7, 0.45])
    for t in (0.04, 0.2):
        Ha = kernel_spectral(op_sq48, a, [t])[0].values
        Hb = kernel_spectral(op_sq48, b, [t])[0].values
        assert abs(Ha[b] - Hb[a]) <= 1e-10 * max(Ha[b], 1e-300) + 1e-10


def test_separable_product(op_sq48):
    # discrete square kernel is the product of discrete 1-D kernels
    g = op_sq48.grid
    h = g.h
    n = 47
    A1 = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h ** 2
    z = g.nearest_node([0.3, 0.6])
    zi, zj = g.lattice[z] - g.lattice.min(axis=0)
    t = 0.1
    E = expm(-t * A1)
    H = kernel_spectral(op_sq48, z, [t])[0].values
    li = g.lattice - g.lattice.min(axis=0)
    expect = E[zi, li[:, 0]] * E[zj, li[:, 1]] / h ** 2
    np.testing.assert_allclose(H, expect, rtol=1e-9, atol=1e-12)


def test_positive_and_mass_decreasing(op_sq48):
    z = op_sq48.grid.nearest_node([0.3, 0.6])
    states = kernel_spectral(op_sq48, z, [0.02, 0.05, 0.1, 0.2, 0.5])
    masses = [s.mass for s in states]
    assert all(np.all(s.values > 0) for s in states)
    assert masses[0] <= 1 + 1e-8
    assert all(b <= a for a, b in zip(masses, masses[1:]))


def test_crank_nicolson_matches_spectral(op512):
    z = op512.grid.nearest_node([0.1])
    dt = 2.5e-5
    times = [0.02, 0.05, 0.1, 0.5]
    cn = kernel_cn(op512, z, times, dt)
    sp = kernel_spectral(op512, z, times)
    for a, b in zip(cn, sp):
        assert a.t >= 20 * dt
        assert np.max(np.abs(a.values - b.values)) <= 1e-5 * b.peak
    masses = [s.mass for s in cn]
    assert all(b <= a for a, b in zip(masses, masses[1:]))


def test_constant_potential_factor(interval):
    g = build_grid(interval, 1 / 128)
    op0 = assemble_dirichlet(g)
    opc = assemble_dirichlet(g, Potential.constant(3.0, 1))
    z = g.nearest_node([0.2])
    times = [0.01, 0.1]
    for f in (lambda op: kernel_spectral(op, z, times),
              lambda op: kernel_cn(op, z, times, 1e-3)):
        for a, b in zip(f(op0), f(opc)):
            np.testing.assert_allclose(b.values, a.values * math.exp(-3.0 * a.t), rtol=1e-13)


def test_tail_too_fat(square):
    op = assemble_dirichlet(build_grid(square, 1 / 64))
    assert op.N > 3000
    with pytest.raises(TailTooFat):
        kernel_spectral(op, op.grid.nearest_node([0.5, 0.5]), [1e-3], k_max=10)


def test_cn_rejects_off_step_times(op256):
    with pytest.raises(ValueError):
        kernel_cn(op256, 10, [0.0105], 1e-3)


def test_log_kernel_concave_along_lines(square):
    op = assemble_dirichlet(build_grid(square, 1 / 32), Potential.radial(4.0, [0.5, 0.5]))
    g = op.grid
    z = g.nearest_node([0.35, 0.6])
    for st in kernel_spectral(op, z, [0.04, 0.2]):
        logH = np.full((31, 31), np.nan)
        li = g.lattice - g.lattice.min(axis=0)
        logH[li[:, 0], li[:, 1]] = np.log(st.values)
        tol = 10 * g.h * SQ.mu0
        assert np.nanmax(np.diff(logH, 2, axis=0)) / g.h ** 2 <= tol
        assert np.nanmax(np.diff(logH, 2, axis=1)) / g.h ** 2 <= tol


def test_square_kernel_slack_passes(op_sq48):
    g = op_sq48.grid
    for point in ([0.5, 0.5], [0.3, 0.6]):
        z = g.nearest_node(point)
        for st in kernel_spectral(op_sq48, z, [0.04, 0.1, 0.2, 0.4]):
            rep = kernel_slack(st, g, SQ, 1e-2, max_pairs=20_000)
            assert rep.verdict in ("pass", "marginal"), (point, st.t, rep.min_slack)


def test_two_forms_agree(op_sq48, op512):
    for op, model, point, t in ((op_sq48, SQ, [0.3, 0.6], 0.1), (op512, UNIT, [0.0], 0.1)):
        st = kernel_spectral(op, op.grid.nearest_node(point), [t])[0]
        nodes = admissible_nodes(op.grid, st.values, 1e-2, "gradient")
        pairs = sample_pairs(nodes, 20_000, 0)
        s3, *_ = parabolic_pair_slacks(st, pairs, model, "p3")
        s2, *_ = parabolic_pair_slacks(st, pairs, model, "p2")
        assert np.max(np.abs(s3 - s2)) <= 1e-10


def test_tmin_enforced(op256):
    st = kernel_spectral(op256, op256.grid.nearest_node([0.0]), [0.01])[0]
    with pytest.raises(ValueError):
        kernel_slack(st, None, UNIT)


def test_interval_min_slack_sharp(op512):
    st = kernel_spectral(op512, op512.grid.nearest_node([0.0]), [0.1])[0]
    rep = kernel_slack(st, None, UNIT, 1e-2, max_pairs=10 ** 7)
    assert abs(rep.min_slack) <= rep.tolerance


def test_interval_max_abs_kernel_slack_literal(op512):
    """Literal reading: every pair within 1e-2 of equality.

    Only pairs symmetric about the source realise the bound, so this is
    expected to fail. See the decisions ledger.
    """
    z = op512.grid.nearest_node([0.0])
    worst = 0.0
    for st in kernel_spectral(op512, z, [0.05, 0.1, 0.5]):
        worst = max(worst, kernel_slack(st, None, UNIT, 1e-2, max_pairs=10 ** 7).max_abs_slack)
    assert worst <= 1e-2


def test_elliptic_limit(op_sq48):
    sr = solve(DomainSpec.rectangle(1.0, 1.0), 1 / 48)
    X = ground_state_field(sr)
    pairs = sample_pairs(X.nodes, 100_000, 0)
    ell = expansion_slack(X, pairs, SQ)
    st = kernel_spectral(op_sq48, op_sq48.grid.nearest_node([0.5, 0.5]), [3.0 * 2])[0]
    late = kernel_slack(st, None, SQ, 1e-2, max_pairs=100_000, seed=0)
    assert abs(late.min_slack - ell.min_slack) <= 1e-3


def test_decay_interval(op512):
    z = op512.grid.nearest_node([0.0])
    states = kernel_spectral(op512, z, np.linspace(0.05, 1.0, 20))
    rep = decay_check(states, UNIT, 0.0)
    assert rep.max_violation <= 1e-3


def test_decay_square_and_shift(op_sq48, square):
    z = op_sq48.grid.nearest_node([0.5, 0.5])
    times = 2 * np.linspace(0.05, 1.0, 20)
    rep = decay_check(kernel_spectral(op_sq48, z, times), SQ, 0.0)
    assert rep.max_violation <= rep.tolerance
    assert rep.rate_estimate >= rep.model_rate
    opc = assemble_dirichlet(op_sq48.grid, Potential.constant(5.0, 2))
    rep_c = decay_check(kernel_spectral(opc, z, times), SQ, 5.0)
    assert abs(rep_c.max_violation - rep.max_violation) <= 1e-10


def test_decay_needs_three_snapshots(op256):
    states = kernel_spectral(op256, 100, [0.1, 0.2])
    with pytest.raises(ValueError):
        decay_check(states, UNIT, 0.0)


def test_field_csv(tmp_path, op256):
    st = kernel_spectral(op256, 100, [0.1])[0]
    nodes = admissible_nodes(op256.grid, st.values, 1e-2)
    path = tmp_path / "field.csv"
    n = write_field_csv(path, op256.grid, {"H": st.values}, nodes)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert n == nodes.size == len(rows) - 1
    assert rows[0] == ["node", "x", "H"]
    assert float(rows[1][2]) == st.values[nodes[0]]
