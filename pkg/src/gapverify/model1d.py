"""Closed-form one-dimensional model on ``[-D/2, D/2]``.

Everything here is analytic (series, image sums, and their term-wise
derivatives) so it can serve as an oracle for the grid solvers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import TruncationUnderflow

TAN_GUARD = 0.499
SWITCH_T = 0.05
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class Model1D:
    D: float
    k_max: int = 200
    m_max: int = 20

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("D must be positive")

    @property
    def a(self) -> float:
        """``pi / D``."""
        return math.pi / self.D

    @property
    def mu0(self) -> float:
        return self.a ** 2

    @property
    def mu1(self) -> float:
        return 4 * self.a ** 2

    @property
    def gap(self) -> float:
        return 3 * self.a ** 2

    def phi0(self, s):
        return np.cos(self.a * np.asarray(s, dtype=float))

    def phi1(self, s):
        return np.sin(2 * self.a * np.asarray(s, dtype=float))

    def wbar(self, s):
        return 2 * np.sin(self.a * np.asarray(s, dtype=float))

    def psi(self, s, deriv: int = 0):
        """``-(pi/D) tan(pi s / D)`` and its first two derivatives."""
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > TAN_GUARD * self.D):
            raise ValueError("tan barrier evaluated beyond 0.499 D; rescale D instead")
        a = self.a
        t = np.tan(a * s)
        if deriv == 0:
            return -a * t
        if deriv == 1:
            return -a * a * (1 + t * t)
        if deriv == 2:
            return -2 * a ** 3 * t * (1 + t * t)
        raise ValueError("deriv must be 0, 1 or 2")

    def drift(self, s):
        """Model drift ``X = -(log phi0bar)' = (pi/D) tan(pi s/D)``."""
        return self.a * np.tan(self.a * np.asarray(s, dtype=float))

    def drift_potential(self, s):
        """``f = -log phi0bar`` so that ``f' = drift``."""
        return -np.log(np.cos(self.a * np.asarray(s, dtype=float)))


# ---------------------------------------------------------------------------
# free kernel


def kbar(s, t):
    """Free heat kernel ``(4 pi t)^(-1/2) exp(-s^2 / 4t)``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return np.exp(-s * s / (4 * t)) / np.sqrt(4 * math.pi * t)


def kbar_derivs(s, t):
    """``(K, K_s, K_ss, K_t)`` analytically."""
    s = np.asarray(s, dtype=float)
    K = kbar(s, t)
    Ks = -s / (2 * t) * K
    Kss = (s * s / (4 * t * t) - 1 / (2 * t)) * K
    Kt = (s * s / (4 * t * t) - 1 / (2 * t)) * K
    return K, Ks, Kss, Kt


# ---------------------------------------------------------------------------
# Dirichlet kernel on [-D/2, D/2]


def _method(t, model, method):
    if method == "auto":
        return "images" if t < SWITCH_T * model.D ** 2 else "series"
    if method not in ("series", "images"):
        raise ValueError(f"unknown method {method!r}")
    return method


def _series_sums(s, t, model: Model1D):
    """Sums ``S_j = sum_k c_k e_k^(j)(s)`` for j=0..3 with ``H^(j) = exp(-mu0 t) S_j``."""
    D, a = model.D, model.a
    # e_k(0) e_k(s) vanishes for even k and equals (2/D) cos(k a s) for odd k
    k = np.arange(1, model.k_max + 1, 2, dtype=float)
    c = (2 / D) * np.exp(-(k * k - 1) * a * a * t)
    ka = k[None, :] * a
    th = ka * s[:, None]
    sn, cs = np.sin(th), np.cos(th)
    S0 = (c * cs).sum(1)
    S1 = -(c * ka * sn).sum(1)
    S2 = -(c * ka ** 2 * cs).sum(1)
    S3 = (c * ka ** 3 * sn).sum(1)
    tail = (2 / D) * 0.5 * math.sqrt(math.pi / (a * a * t)) * erfc(model.k_max * a * math.sqrt(t))
    if tail > TAIL_TOL:
        warnings.warn(TruncationUnderflow(f"series tail bound {tail:.2e} at t={t}"), stacklevel=3)
    return S0, S1, S2, S3


def _image_sums(s, t, model: Model1D):
    """Sums normalized by ``K(s, t)``: ``H^(j) = K(s, t) S_j``."""
    D = model.D
    m = np.arange(-model.m_max, model.m_max + 1, dtype=float)
    u = s[:, None] - m[None, :] * D
    w = ((-1.0) ** np.abs(m))[None, :] * np.exp((2 * s[:, None] * m * D - (m * D) ** 2) / (4 * t))
    S0 = w.sum(1)
    S1 = (w * (-u / (2 * t))).sum(1)
    S2 = (w * (u * u / (4 * t * t) - 1 / (2 * t))).sum(1)
    S3 = (w * (-u ** 3 / (8 * t ** 3) + 3 * u / (4 * t * t))).sum(1)
    tail = 2 * (1 / (2 * D)) * erfc((model.m_max - 0.5) * D / (2 * math.sqrt(t)))
    if tail > TAIL_TOL:
        warnings.warn(TruncationUnderflow(f"image tail bound {tail:.2e} at t={t}"), stacklevel=3)
    return S0, S1, S2, S3


def _check(s, t, model):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if not t > 0:
        raise ValueError("t must be positive")
    if np.any(np.abs(s) >= model.D / 2):
        raise ValueError("s must lie strictly inside (-D/2, D/2)")
    return s


def hbar(s, t: float, model: Model1D, method: str = "auto"):
    """Dirichlet heat kernel on ``[-D/2, D/2]`` centered at 0.

    ``method`` is ``"series"`` (eigenfunction expansion), ``"images"``
    (alternating image sum) or ``"auto"`` (images below ``t = 0.05 D^2``).
    """
    scalar = np.ndim(s) == 0
    s = _check(s, t, model)
    if _method(t, model, method) == "series":
        out = math.exp(-model.mu0 * t) * _series_sums(s, t, model)[0]
    else:
        out = kbar(s, t) * _image_sums(s, t, model)[0]
    return float(out[0]) if scalar else out


def log_hbar_derivs(s, t: float, model: Model1D, method: str = "auto"):
    """``(log H, f', f'', f''')`` where ``f = log H`` and primes are ``d/ds``."""
    s = _check(s, t, model)
    if _method(t, model, method) == "series":
        S0, S1, S2, S3 = _series_sums(s, t, model)
        base = -model.mu0 * t
    else:
        S0, S1, S2, S3 = _image_sums(s, t, model)
        base = -s * s / (4 * t) - 0.5 * math.log(4 * math.pi * t)
    r1, r2, r3 = S1 / S0, S2 / S0, S3 / S0
    f1 = r1
    f2 = r2 - r1 * r1
    f3 = r3 - 3 * r1 * r2 + 2 * r1 ** 3
    return base + np.log(S0), f1, f2, f3


def dlog_hbar(s, t: float, model: Model1D, method: str = "auto"):
    """``(log H)'(s, t)``."""
    scalar = np.ndim(s) == 0
    out = log_hbar_derivs(s, t, model, method)[1]
    return float(out[0]) if scalar else out


def psi_parabolic(s, t: float, model: Model1D, method: str = "auto", deriv: int = 0):
    """``psi(s, t) = (log(H/K))'`` or its ``deriv``-th s-derivative (0, 1, 2)."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    _, f1, f2, f3 = log_hbar_derivs(s_arr, t, model, method)
    out = (f1 + s_arr / (2 * t), f2 + 1 / (2 * t), f3)[deriv]
    return float(out[0]) if scalar else out


def psi_parabolic_terms(s, t: float, model: Model1D, method: str = "auto", kernel: str = "dirichlet"):
    """``(psi, psi', psi'', psi_t)``; ``kernel="free"`` substitutes K for H, giving zeros."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if kernel == "free":
        z = np.zeros_like(s)
        return z, z, z, z
    if kernel != "dirichlet":
        raise ValueError(f"unknown kernel {kernel!r}")
    _, f1, f2, f3 = log_hbar_derivs(s, t, model, method)
    # each mode / image term obeys term_t = term'', so H_t = H'' and H'_t = H''';
    # then (log H)'_t = f''' + 2 f' f''
    f1_t = f3 + 2 * f1 * f2
    psi = f1 + s / (2 * t)
    psi_s = f2 + 1 / (2 * t)
    psi_ss = f3
    psi_t = f1_t - s / (2 * t * t)
    return psi, psi_s, psi_ss, psi_t


# ---------------------------------------------------------------------------
# residual checks


def check_psi_ode(model: Model1D, s_samples, scale: float = 1.0) -> float:
    """Max of ``|psi'' + 2 psi psi'|`` for ``c psi(c s)`` with ``c = scale``."""
    s = np.asarray(s_samples, dtype=float)
    if np.any(s < 0) or np.any(s >= model.D / 2):
        raise ValueError("samples must lie in [0, D/2)")
    c = scale
    p = c * model.psi(c * s)
    p1 = c * c * model.psi(c * s, 1)
    p2 = c ** 3 * model.psi(c * s, 2)
    return float(np.max(np.abs(p2 + 2 * p * p1)))


@dataclass(frozen=True)
class PdeResidual:
    minimum: float
    maximum: float
    field: np.ndarray


def check_psi_pde(model: Model1D, s_grid, t_grid, method: str = "auto",
                  kernel: str = "dirichlet") -> PdeResidual:
    """Signed residual ``psi_t - psi'' - 2 psi psi' + psi/t + s psi'/t`` on ``s_grid x t_grid``.

    Nonnegative values mean the parabolic barrier inequality holds.
    """
    s = np.asarray(s_grid, dtype=float)
    if np.any(s <= 0) or np.any(s > 0.45 * model.D + 1e-15):
        raise ValueError("s must lie in (0, 0.45 D]")
    rows = []
    for t in np.atleast_1d(t_grid):
        p, p1, p2, pt = psi_parabolic_terms(s, float(t), model, method, kernel)
        rows.append(pt - p2 - 2 * p * p1 + p / t + p1 * s / t)
    R = np.array(rows)
    return PdeResidual(float(R.min()), float(R.max()), R)
