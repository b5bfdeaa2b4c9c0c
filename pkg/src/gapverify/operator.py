"""Discrete Schrödinger and drift operators plus finite-difference calculus.

Eigenvalues follow the convention ``(-Delta + q) phi = lambda phi``. The
constant part of the potential is kept out of the sparse matrix and stored
as ``OperatorMatrix.shift`` so that constant shifts act exactly on spectra
and heat kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import SingularDrift, StencilEscape
from .geometry import DomainSpec, GridDomain


@dataclass(frozen=True, eq=False)
class Potential:
    """Quadratic potential ``q(x) = x.A.x + b.x + c``."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape != (b.size, b.size):
            raise ValueError("A must be n x n with n = len(b)")
        if not np.array_equal(A, A.T):
            raise ValueError("A must be symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def zero(cls, dim: int) -> "Potential":
        return cls(np.zeros((dim, dim)), np.zeros(dim), 0.0)

    @classmethod
    def constant(cls, c: float, dim: int) -> "Potential":
        return cls(np.zeros((dim, dim)), np.zeros(dim), c)

    @classmethod
    def radial(cls, k: float, center) -> "Potential":
        """``k |x - center|^2``."""
        z = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(k * np.eye(z.size), -2 * k * z, k * float(z @ z))

    @classmethod
    def from_dict(cls, d: dict, dim: int) -> "Potential":
        A = d.get("A", np.zeros((dim, dim)))
        b = d.get("b", np.zeros(dim))
        return cls(np.asarray(A, dtype=float).reshape(dim, dim), np.asarray(b, dtype=float),
                   d.get("c", 0.0))

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "c": self.c}

    @property
    def dim(self) -> int:
        return self.b.size

    @property
    def is_convex(self) -> bool:
        return bool(np.linalg.eigvalsh(self.A).min() >= -1e-12)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return np.einsum("ij,jk,ik->i", x, self.A, x) + x @ self.b + self.c

    def variable(self, x: np.ndarray) -> np.ndarray:
        """``q(x) - c``."""
        return self(x) - self.c

    def shifted(self, c: float) -> "Potential":
        return Potential(self.A, self.b, self.c + c)

    def infimum(self, spec: DomainSpec, h: float) -> float:
        """Infimum over the closed domain.

        Exact when the stationary point of a strictly convex ``q`` lies in the
        domain, and for constants; otherwise the minimum over boundary samples
        spaced at most ``h`` apart (exact in 1-D).
        """
        if not np.any(self.A) and not np.any(self.b):
            return self.c
        x_star, *_ = np.linalg.lstsq(2 * self.A, -self.b, rcond=None)
        vals = [float(self(spec.boundary_points(h)).min())]
        if np.allclose(2 * self.A @ x_star, -self.b, atol=1e-12 * (1 + np.abs(self.b).max())) \
                and spec.contains(x_star, strict=False)[0]:
            vals.append(float(self(x_star)[0]))
        return min(vals)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Sparse operator on the interior nodes of ``grid``.

    The represented operator is ``matrix + shift * I``. For the symmetrized
    drift form, ``scaling`` holds ``exp(f)`` at the nodes: eigenvectors of the
    drift operator are ``scaling * v`` for eigenvectors ``v`` of ``matrix``.
    """

    matrix: sp.csr_matrix
    grid: GridDomain
    bc: str
    shift: float = 0.0
    symmetric: bool = True
    scaling: Optional[np.ndarray] = None
    drift: Optional[str] = None

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def full(self) -> sp.csr_matrix:
        return (self.matrix + self.shift * sp.identity(self.N, format="csr")).tocsr()

    @property
    def norm_inf(self) -> float:
        return float(abs(self.full()).sum(axis=1).max())


def assemble_dirichlet(grid: GridDomain, q: Optional[Potential] = None) -> OperatorMatrix:
    """Second-order central discretization of ``-Delta + q`` with zero exterior values."""
    if grid.centering != "node":
        raise ValueError("Dirichlet operators live on node-centered grids")
    q = q or Potential.zero(grid.dim)
    if q.dim != grid.dim:
        raise ValueError("potential and grid dimensions differ")
    h2 = grid.h ** 2
    N = grid.N
    diag = np.full(N, 2.0 * grid.dim / h2) + q.variable(grid.nodes)
    rows, cols = [np.arange(N)], [np.arange(N)]
    vals = [diag]
    for off in grid.axis_offsets():
        nb = grid.neighbor(off)
        ok = nb >= 0
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
        vals.append(np.full(ok.sum(), -1.0 / h2))
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    return OperatorMatrix(M, grid, "dirichlet", shift=q.c, symmetric=True)


DriftField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def assemble_neumann_drift(grid: GridDomain, drift: Optional[DriftField] = None,
                           potential: Optional[Callable[[np.ndarray], np.ndarray]] = None
                           ) -> OperatorMatrix:
    """Operator ``-Delta + 2 X . grad`` with homogeneous Neumann data on a cell grid.

    Eigenvalues ``lam`` satisfy ``Delta w - 2 <grad w, X> = -lam w``.

    Parameters
    ----------
    drift : array or callable, optional
        Samples of ``X`` at the cell centers (``(N, dim)``) or a callable
        returning them. Discretized with central differences and mirror ghost
        cells; the result is generally nonsymmetric.
    potential : callable, optional
        ``f`` with ``X = grad f``. Uses the flux form
        ``-exp(2f) div(exp(-2f) grad w)`` conjugated by ``exp(-f)``, which is
        symmetric. Mutually exclusive with ``drift``.
    """
    if grid.centering != "cell":
        raise ValueError("Neumann operators live on cell-centered grids")
    if drift is not None and potential is not None:
        raise ValueError("pass either drift samples or a drift potential, not both")
    h = grid.h
    N = grid.N
    rows, cols, vals = [], [], []
    diag = np.zeros(N)
    if potential is not None:
        f = np.asarray(potential(grid.nodes), dtype=float).reshape(N)
        if not np.all(np.isfinite(f)):
            raise SingularDrift("drift potential is not finite at every cell")
        for off in grid.axis_offsets():
            nb = grid.neighbor(off)
            ok = np.flatnonzero(nb >= 0)
            j = nb[ok]
            mid = 0.5 * (grid.nodes[ok] + grid.nodes[j])
            f_face = np.asarray(potential(mid), dtype=float).reshape(-1)
            rows.append(ok)
            cols.append(j)
            vals.append(-np.exp(f[ok] + f[j] - 2 * f_face) / h ** 2)
            np.add.at(diag, ok, np.exp(2 * f[ok] - 2 * f_face) / h ** 2)
        M = _coo(N, diag, rows, cols, vals)
        return OperatorMatrix(M, grid, "neumann", symmetric=True,
                              scaling=np.exp(f - f.max()), drift="gradient")

    X = np.zeros((N, grid.dim)) if drift is None else (
        drift(grid.nodes) if callable(drift) else drift)
    X = np.asarray(X, dtype=float).reshape(N, grid.dim)
    if not np.all(np.isfinite(X)):
        raise SingularDrift("drift field is not finite at every cell")
    for d, off in enumerate(grid.axis_offsets()):
        axis, sign = d // 2, off[d // 2]
        coef = -1.0 / h ** 2 + sign * X[:, axis] / h
        nb = grid.neighbor(off)
        ok = nb >= 0
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
        vals.append(coef[ok])
        diag += 1.0 / h ** 2
        diag[~ok] += coef[~ok]  # mirror ghost: u_ghost = u_i
    M = _coo(N, diag, rows, cols, vals)
    zero = drift is None or not np.any(X)
    return OperatorMatrix(M, grid, "neumann", symmetric=bool(zero),
                          drift=None if zero else "sampled")


def _coo(N, diag, rows, cols, vals) -> sp.csr_matrix:
    r = np.concatenate([np.arange(N)] + rows)
    c = np.concatenate([np.arange(N)] + cols)
    v = np.concatenate([diag] + vals)
    return sp.csr_matrix((v, (r, c)), shape=(N, N))


# ---------------------------------------------------------------------------
# finite-difference calculus


@dataclass(frozen=True, eq=False)
class VectorFieldSample:
    """Vector values at a subset of grid nodes."""

    nodes: np.ndarray
    points: np.ndarray
    lattice: np.ndarray
    values: np.ndarray
    h: float
    tag: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("vector field has non-finite components")

    def __len__(self) -> int:
        return self.nodes.size

    def rows_of(self, nodes: np.ndarray) -> np.ndarray:
        """Row positions of grid ``nodes`` in this sample."""
        pos = np.searchsorted(self.nodes, nodes)
        pos = np.clip(pos, 0, self.nodes.size - 1)
        if not np.array_equal(self.nodes[pos], nodes):
            raise KeyError("node not present in vector field sample")
        return pos


def _resolve_nodes(grid: GridDomain, nodes, stencil: str) -> np.ndarray:
    mask = grid.stencil_mask(stencil)
    if nodes is None:
        return np.flatnonzero(mask)
    nodes = np.asarray(nodes, dtype=np.int64)
    if not np.all(mask[nodes]):
        raise StencilEscape("difference stencil leaves the interior at a requested node")
    return nodes


def gradient(field: np.ndarray, grid: GridDomain, nodes=None, tag: Optional[dict] = None
             ) -> VectorFieldSample:
    """Central-difference gradient at ``nodes`` (default: every node with a full stencil)."""
    u = np.asarray(field, dtype=float)
    nodes = _resolve_nodes(grid, nodes, "gradient")
    vals = np.empty((nodes.size, grid.dim))
    for d in range(grid.dim):
        e = [0] * grid.dim
        e[d] = 1
        plus = grid.neighbor(e)[nodes]
        minus = grid.neighbor([-x for x in e])[nodes]
        vals[:, d] = (u[plus] - u[minus]) / (2 * grid.h)
    return VectorFieldSample(nodes, grid.nodes[nodes], grid.lattice[nodes], vals, grid.h,
                             dict(tag or {}))


def hessian(field: np.ndarray, grid: GridDomain, nodes=None) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Hessian; returns ``(nodes, H)`` with ``H`` of shape ``(m, dim, dim)``."""
    u = np.asarray(field, dtype=float)
    nodes = _resolve_nodes(grid, nodes, "hessian")
    h2 = grid.h ** 2
    H = np.empty((nodes.size, grid.dim, grid.dim))
    u0 = u[nodes]
    for d in range(grid.dim):
        e = [0] * grid.dim
        e[d] = 1
        up = u[grid.neighbor(e)[nodes]]
        um = u[grid.neighbor([-x for x in e])[nodes]]
        H[:, d, d] = (up - 2 * u0 + um) / h2
    if grid.dim == 2:
        pp = u[grid.neighbor((1, 1))[nodes]]
        pm = u[grid.neighbor((1, -1))[nodes]]
        mp = u[grid.neighbor((-1, 1))[nodes]]
        mm = u[grid.neighbor((-1, -1))[nodes]]
        H[:, 0, 1] = H[:, 1, 0] = (pp - pm - mp + mm) / (4 * h2)
    return nodes, H
