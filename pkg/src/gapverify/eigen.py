"""Lowest eigenpairs of assembled operators with residual certification."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, PerronFailure
from .operator import OperatorMatrix

log = logging.getLogger(__name__)

DENSE_MAX = 3000
MAX_K = 6
RESIDUAL_TOL = 1e-9
IMAG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """``k`` lowest eigenpairs.

    Eigenvectors are columns of ``vectors``, normalized so that
    ``sum(phi**2) * h**dim == 1``, and oriented so their largest-magnitude
    entry is positive. ``residuals[i]`` is ``|A phi_i - lam_i phi_i| / |phi_i|``
    for the matrix that was actually diagonalized.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    operator: OperatorMatrix
    method: str
    iterations: int = 0

    @property
    def grid(self):
        return self.operator.grid

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    @property
    def lam0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lam1(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def phi0(self) -> np.ndarray:
        return self.vectors[:, 0]

    def metadata(self) -> dict:
        return {"N": self.operator.N, "h": self.grid.h, "method": self.method,
                "eigenvalues": self.eigenvalues.tolist(),
                "residuals": self.residuals.tolist(), "iterations": self.iterations}


def smallest_eigenpairs(op: OperatorMatrix, k: int = 2, *, dense_max: int = DENSE_MAX,
                        max_iter: int = 500, seed: int = 0) -> SpectralResult:
    """The ``k`` smallest eigenpairs of ``op``.

    Dense LAPACK for ``N <= dense_max``; otherwise block inverse iteration with
    a fixed shift below the spectrum and Rayleigh-Ritz deflation, converged
    when every residual is at most ``1e-9 * |A|_inf``.

    Raises
    ------
    NoConvergence
        Iteration budget exhausted, or a complex pair in a nonsymmetric solve.
    PerronFailure
        Dirichlet ground state changes sign or is not simple.
    """
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must lie in [1, {MAX_K}]")
    if k > op.N:
        raise ValueError("k exceeds the operator dimension")
    A = op.matrix
    tol = RESIDUAL_TOL * op.norm_inf
    iterations = 0
    if op.N <= dense_max:
        method = "dense"
        lam, V = _dense(A.toarray(), k, op.symmetric)
    elif op.symmetric:
        method = "inverse-iteration"
        lam, V, iterations = _block_inverse_iteration(A, k, tol, max_iter, seed)
    else:
        method = "arnoldi-shift-invert"
        lam, V = _sparse_nonsymmetric(A, k)

    res = np.linalg.norm(A @ V - V * lam, axis=0) / np.linalg.norm(V, axis=0)
    if np.any(res > tol):
        raise NoConvergence(f"residuals {res} exceed {tol:.3e}")
    if op.scaling is not None:
        V = V * op.scaling[:, None]
    h_n = op.grid.h ** op.grid.dim
    V = V / np.sqrt((V ** 2).sum(axis=0) * h_n)
    peak = np.abs(V).argmax(axis=0)
    V = V * np.sign(V[peak, np.arange(V.shape[1])])
    lam = lam + op.shift

    if op.bc == "dirichlet":
        if np.any(V[:, 0] <= 0):
            raise PerronFailure("ground state is not strictly positive")
        if k > 1 and not lam[1] > lam[0]:
            raise PerronFailure("lowest eigenvalue is not simple")
    return SpectralResult(lam, V, res, op, method, iterations)


def _dense(M: np.ndarray, k: int, symmetric: bool):
    if symmetric:
        return sla.eigh(M, subset_by_index=[0, k - 1])
    w, V = sla.eig(M)
    order = np.argsort(w.real, kind="stable")[:k]
    w, V = w[order], V[:, order]
    if np.any(np.abs(w.imag) > IMAG_TOL * np.maximum(1.0, np.abs(w.real))):
        raise NoConvergence(f"complex eigenvalues in drift spectrum: {w}")
    V = V.real
    return w.real, V / np.linalg.norm(V, axis=0)


def _gershgorin_lower(A: sp.csr_matrix) -> float:
    d = A.diagonal()
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    return float((d - off).min())


def _block_inverse_iteration(A: sp.csr_matrix, k: int, tol: float, max_iter: int, seed: int):
    N = A.shape[0]
    p = min(N, k + 4)
    norm = float(abs(A).sum(axis=1).max())
    sigma = _gershgorin_lower(A) - 1e-6 * norm
    lu = spla.splu((A - sigma * sp.identity(N, format="csr")).tocsc())
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((N, p)))
    for it in range(1, max_iter + 1):
        Q, _ = np.linalg.qr(lu.solve(Q))
        T = Q.T @ (A @ Q)
        theta, S = np.linalg.eigh((T + T.T) / 2)
        Q = Q @ S
        res = np.linalg.norm(A @ Q[:, :k] - Q[:, :k] * theta[:k], axis=0)
        if np.all(res <= 0.5 * tol):
            log.debug("inverse iteration converged in %d steps", it)
            return theta[:k], Q[:, :k], it
    raise NoConvergence(f"inverse iteration did not converge in {max_iter} steps")


def _sparse_nonsymmetric(A: sp.csr_matrix, k: int):
    sigma = _gershgorin_lower(A) - 1e-6 * float(abs(A).sum(axis=1).max())
    w, V = spla.eigs(A.tocsc(), k=k, sigma=sigma, which="LM")
    order = np.argsort(w.real, kind="stable")
    w, V = w[order], V[:, order]
    if np.any(np.abs(w.imag) > IMAG_TOL * np.maximum(1.0, np.abs(w.real))):
        raise NoConvergence(f"complex eigenvalues in drift spectrum: {w}")
    V = V.real
    return w.real, V / np.linalg.norm(V, axis=0)


def richardson(coarse, fine, order: float = 2.0, ratio: float = 2.0):
    """Extrapolate values at spacings ``h`` and ``h / ratio`` assuming error ``O(h**order)``."""
    r = ratio ** order
    return (r * np.asarray(fine) - np.asarray(coarse)) / (r - 1)


def observed_order(err_coarse, err_fine, ratio: float = 2.0):
    return np.log(np.abs(err_coarse) / np.abs(err_fine)) / np.log(ratio)
