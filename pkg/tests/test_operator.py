import math

import numpy as np
import pytest
import scipy.sparse as sp

from gapverify.errors import SingularDrift, StencilEscape
from gapverify.geometry import DomainSpec, build_cell_grid, build_grid
from gapverify.operator import (Potential, assemble_dirichlet, assemble_neumann_drift,
                                gradient, hessian)


@pytest.fixture
def g1():
    return build_grid(DomainSpec.interval(-0.5, 0.5), 1 / 64)


@pytest.fixture
def g2():
    return build_grid(DomainSpec.disk(1.0, center=(0.2, -0.1)), 1 / 16)


def test_toeplitz_spectrum(g1):
    A = assemble_dirichlet(g1).matrix.toarray()
    N, h = g1.N, g1.h
    k = np.arange(1, N + 1)
    exact = 4 / h ** 2 * np.sin(k * math.pi / (2 * (N + 1))) ** 2
    np.testing.assert_allclose(np.linalg.eigvalsh(A), exact, rtol=1e-11)


def test_constant_potential_is_exact_shift(g2):
    a = assemble_dirichlet(g2)
    b = assemble_dirichlet(g2, Potential.constant(3.25, 2))
    assert (a.matrix != b.matrix).nnz == 0
    assert b.shift == 3.25
    np.testing.assert_allclose(np.linalg.eigvalsh(b.full().toarray()),
                               np.linalg.eigvalsh(a.matrix.toarray()) + 3.25, atol=1e-10)


def test_square_quarter_ground_state():
    g = build_grid(DomainSpec.rectangle(1, 1), 0.25)
    A = assemble_dirichlet(g).matrix.toarray()
    assert A.shape == (9, 9)
    assert np.linalg.eigvalsh(A)[0] == pytest.approx(8 / g.h ** 2 * math.sin(math.pi * g.h / 2) ** 2,
                                                     rel=1e-13)


def test_dirichlet_structure(g2):
    q = Potential.radial(2.0, [0.2, -0.1])
    A = assemble_dirichlet(g2, q).matrix
    assert (A != A.T).nnz == 0
    off = A - sp.diags(A.diagonal())
    assert np.all(np.diff(A.indptr) <= 5)
    row_off = np.asarray(abs(off).sum(axis=1)).ravel()
    assert np.all(A.diagonal() >= row_off + q.variable(g2.nodes).min() - 1e-12)
    assert set(np.unique(off.data)) == {-1 / g2.h ** 2}


def test_integration_by_parts(g2):
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal((2, g2.N))
    A = assemble_dirichlet(g2).matrix
    lhs = u @ (A @ v)
    rhs = 0.0
    for off in ((1, 0), (0, 1)):
        nb = g2.neighbor(off)
        ue = np.where(nb >= 0, u[nb], 0.0)
        ve = np.where(nb >= 0, v[nb], 0.0)
        rhs += ((ue - u) * (ve - v)).sum() / g2.h ** 2
        # forward differences from exterior nodes into the domain
        nb_back = g2.neighbor((-off[0], -off[1]))
        rhs += (u[nb_back < 0] * v[nb_back < 0]).sum() / g2.h ** 2
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_neumann_annihilates_constants():
    g = build_cell_grid(DomainSpec.rectangle(1, 1), 1 / 16)
    A = assemble_neumann_drift(g).matrix
    assert np.abs(A @ np.ones(g.N)).max() == 0.0
    assert (A != A.T).nnz == 0


def test_neumann_interval_zero_drift():
    g = build_cell_grid(DomainSpec.interval(-0.5, 0.5), 1 / 256)
    lam = np.linalg.eigvalsh(assemble_neumann_drift(g).matrix.toarray())
    assert abs(lam[0]) < 1e-9
    assert lam[1] == pytest.approx(math.pi ** 2, rel=2e-5)


def test_neumann_model_drift_oracle():
    # wbar = 2 sin(pi s) solves w'' - 2 X w' = -3 pi^2 w with X = pi tan(pi s)
    s = np.linspace(-0.49, 0.49, 101)
    w, w1, w2 = 2 * np.sin(math.pi * s), 2 * math.pi * np.cos(math.pi * s), \
        -2 * math.pi ** 2 * np.sin(math.pi * s)
    X = math.pi * np.tan(math.pi * s)
    np.testing.assert_allclose(w2 - 2 * X * w1, -3 * math.pi ** 2 * w, atol=1e-10)
    g = build_cell_grid(DomainSpec.interval(-0.5, 0.5), 1 / 256)
    M = assemble_neumann_drift(g, lambda x: math.pi * np.tan(math.pi * x)).matrix.toarray()
    lam = np.sort(np.linalg.eigvals(M).real)
    assert lam[1] == pytest.approx(3 * math.pi ** 2, rel=1e-4)
    # symmetric flux form agrees
    S = assemble_neumann_drift(g, potential=lambda x: -np.log(np.cos(math.pi * x[:, 0])))
    lam_s = np.linalg.eigvalsh(S.matrix.toarray())
    assert lam_s[1] == pytest.approx(3 * math.pi ** 2, rel=1e-4)


def test_singular_drift():
    g = build_cell_grid(DomainSpec.interval(-0.5, 0.5), 1 / 8)
    X = np.zeros((g.N, 1))
    X[2] = np.inf
    with pytest.raises(SingularDrift):
        assemble_neumann_drift(g, X)


def test_gradient_exact_on_quadratics(g2):
    b = np.array([0.7, -1.3])
    lin = gradient(g2.nodes @ b, g2)
    np.testing.assert_allclose(lin.values, np.broadcast_to(b, lin.values.shape), atol=1e-12)
    A = np.array([[2.0, 0.5], [0.5, -1.0]])
    f = np.einsum("ij,jk,ik->i", g2.nodes, A, g2.nodes)
    gq = gradient(f, g2)
    np.testing.assert_allclose(gq.values, 2 * gq.points @ A, atol=1e-11)
    nodes, H = hessian(f, g2)
    np.testing.assert_allclose(H, np.broadcast_to(2 * A, H.shape), atol=1e-9)
    _, H0 = hessian(g2.nodes @ b, g2)
    np.testing.assert_allclose(H0, 0, atol=1e-9)


def test_gradient_interval_quadratic():
    g = build_grid(DomainSpec.interval(-0.5, 0.5), 1 / 64)
    v = gradient(g.nodes[:, 0] ** 2, g)
    np.testing.assert_allclose(v.values[:, 0], 2 * v.points[:, 0], atol=1e-12)


def test_gradient_truncation_bound():
    g = build_grid(DomainSpec.interval(-0.5, 0.5), 1e-2)
    v = gradient(np.sin(math.pi * g.nodes[:, 0]), g)
    err = np.abs(v.values[:, 0] - math.pi * np.cos(math.pi * v.points[:, 0])).max()
    assert err <= math.pi ** 3 / 6 * g.h ** 2


def test_hessian_of_log_cos_second_order():
    errs = []
    for h in (1 / 128, 1 / 256):
        g = build_grid(DomainSpec.interval(-0.5, 0.5), h)
        f = -np.log(np.cos(math.pi * g.nodes[:, 0]))
        nodes, H = hessian(f, g)
        inner = np.abs(g.nodes[nodes, 0]) <= 0.4
        exact = math.pi ** 2 / np.cos(math.pi * g.nodes[nodes, 0]) ** 2
        errs.append(np.abs(H[:, 0, 0] - exact)[inner].max())
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_stencil_escape(g1):
    with pytest.raises(StencilEscape):
        gradient(np.zeros(g1.N), g1, nodes=[int(np.argmin(g1.nodes[:, 0]))])


def test_potential_convexity_and_infimum():
    q = Potential.radial(4.0, [0.5, 0.5])
    assert q.is_convex
    assert q.infimum(DomainSpec.rectangle(1, 1), 1 / 64) == pytest.approx(0.0, abs=1e-14)
    off = Potential.radial(1.0, [2.0, 0.5])
    assert off.infimum(DomainSpec.rectangle(1, 1), 1 / 64) == pytest.approx(1.0, abs=1e-12)
    assert not Potential(np.diag([1.0, -1.0]), np.zeros(2)).is_convex
