"""Dirichlet heat kernels on grids and their parabolic comparison checks."""
from __future__ import annotations

import csv
import math
import threading
import warnings
import weakref
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import LinearSolveFailure, PoleProximity, TailTooFat
from .geometry import GridDomain, admissible_nodes, sample_pairs
from .model1d import Model1D, log_hbar_derivs, psi_parabolic
from .modulus import (POLE_FRACTION, SlackReport, _map_pairs, default_tolerance,
                      pairwise_slack_report)
from .operator import OperatorMatrix, VectorFieldSample, gradient

DENSE_MAX = 3000
TAIL_TOL = 1e-12
MASS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class HeatState:
    """Snapshot ``H(z, ., t)`` on the interior nodes of ``grid``."""

    z: int
    t: float
    values: np.ndarray
    method: str
    grid: GridDomain
    modes: int = 0
    dt: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.h ** self.grid.dim)

    @property
    def peak(self) -> float:
        return float(self.values.max())


def t_min(h: float, D: float) -> float:
    """Earliest time at which kernel slacks are evaluated: ``max(0.02 D^2, 10 h^2)``."""
    return max(0.02 * D * D, 10.0 * h * h)


# ---------------------------------------------------------------------------
# kernels

_BASES: "weakref.WeakKeyDictionary[OperatorMatrix, tuple]" = weakref.WeakKeyDictionary()
_BASES_LOCK = threading.Lock()


def full_eigenbasis(op: OperatorMatrix, k_max: int | None = None):
    """Eigenvalues (shift excluded) and ``h^n``-orthonormal eigenvectors, cached per operator.

    Dense for ``N <= 3000``; otherwise the ``k_max`` lowest pairs by shift-invert Lanczos.
    """
    if not op.symmetric:
        raise ValueError("heat kernels need a symmetric operator")
    key = k_max if op.N > DENSE_MAX else None
    with _BASES_LOCK:
        cached = _BASES.get(op)
        if cached is not None and cached[0] == key:
            return cached[1], cached[2]
        if op.N <= DENSE_MAX:
            lam, V = sla.eigh(op.matrix.toarray())
        else:
            k = int(k_max or 200)
            lam, V = spla.eigsh(op.matrix.tocsc(), k=min(k, op.N - 2), sigma=0.0, which="LM")
            order = np.argsort(lam)
            lam, V = lam[order], V[:, order]
        V = V / math.sqrt(op.grid.h ** op.grid.dim)
        _BASES[op] = (key, lam, V)
    return lam, V


def kernel_spectral(op: OperatorMatrix, z: int, t_list: Sequence[float],
                    k_max: int | None = None) -> list[HeatState]:
    """``H(z, x, t) = sum_k exp(-lam_k t) phi_k(z) phi_k(x)``.

    The constant part of the potential enters as the exact factor
    ``exp(-shift t)``.

    Raises
    ------
    TailTooFat
        If a truncated basis leaves ``exp(-lam_kmax t_min) > 1e-12``.
    """
    if op.bc != "dirichlet":
        raise ValueError("heat kernels are Dirichlet kernels")
    t_arr = np.asarray(t_list, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("times must be positive")
    lam, V = full_eigenbasis(op, k_max)
    modes = lam.size
    if modes < op.N:
        tail = math.exp(-lam[-1] * t_arr.min())
        if tail > TAIL_TOL:
            raise TailTooFat(f"truncation bound {tail:.2e} with {modes} modes")
    out = []
    for t in t_arr:
        H = V @ (np.exp(-lam * t) * V[z]) * math.exp(-op.shift * t)
        out.append(HeatState(int(z), float(t), H, "spectral", op.grid, modes=modes))
    return out


def kernel_cn(op: OperatorMatrix, z: int, t_list: Sequence[float], dt: float
              ) -> list[HeatState]:
    """Crank-Nicolson evolution of the discrete delta ``h^-n e_z``.

    The first ``2 dt`` are covered by four backward-Euler half steps to damp
    the stiff modes of the delta initial data; every requested time must be a
    multiple ``m dt`` with ``m >= 2``.

    Raises
    ------
    LinearSolveFailure
        If the step matrix cannot be factorized or the solution blows up.
    """
    if op.bc != "dirichlet":
        raise ValueError("heat kernels are Dirichlet kernels")
    t_arr = np.asarray(t_list, dtype=float)
    steps = np.rint(t_arr / dt).astype(np.int64)
    if np.any(steps < 2) or not np.allclose(steps * dt, t_arr, rtol=1e-10, atol=0):
        raise ValueError("each time must be an integer multiple m*dt with m >= 2")
    if np.any(np.diff(steps) < 0):
        raise ValueError("times must be nondecreasing")
    A = op.matrix.tocsc()
    I = sp.identity(op.N, format="csc")
    try:
        lu = spla.splu((I + 0.5 * dt * A).tocsc())
    except RuntimeError as exc:
        raise LinearSolveFailure(str(exc)) from exc
    B = (I - 0.5 * dt * A).tocsr()
    u = np.zeros(op.N)
    u[z] = 1.0 / op.grid.h ** op.grid.dim
    for _ in range(4):
        u = lu.solve(u)
    n = 2
    out = []
    for t, m in zip(t_arr, steps):
        while n < m:
            u = lu.solve(B @ u)
            n += 1
        if not np.all(np.isfinite(u)):
            raise LinearSolveFailure("non-finite values in Crank-Nicolson step")
        out.append(HeatState(int(z), float(t), u * math.exp(-op.shift * t),
                             "crank-nicolson", op.grid, dt=float(dt)))
    return out


# ---------------------------------------------------------------------------
# parabolic comparison


def _log_kernel_gradient(state: HeatState, nodes: np.ndarray, form: str) -> VectorFieldSample:
    H = state.values
    if np.any(H <= 0):
        raise ValueError("kernel is not positive at every interior node")
    logH = np.log(H)
    if form == "p2":
        # log(H / K) with K the free kernel from z; its normalization drops out
        zpt = state.grid.nodes[state.z]
        logH = logH + ((state.grid.nodes - zpt) ** 2).sum(axis=1) / (4 * state.t)
    return gradient(logH, state.grid, nodes)


def parabolic_pair_slacks(state: HeatState, pairs: np.ndarray, model: Model1D,
                          form: str = "p3", threads: int = 1):
    """Per-pair slacks, separations and retained pairs for one snapshot.

    ``form="p3"``: ``2 (log Hbar)'(r/2, t) - (grad log H(y) - grad log H(x)) . u``.
    ``form="p2"``: ``2 psi(r/2, t) - (grad log phi(y) - grad log phi(x)) . u`` with
    ``phi = H / K`` and ``psi = (log(Hbar / Kbar))'``. The two agree algebraically.
    """
    if form not in ("p2", "p3"):
        raise ValueError("form must be 'p2' or 'p3'")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    nodes = np.unique(pairs)
    G = _log_kernel_gradient(state, nodes, form)
    I, J = G.rows_of(pairs[:, 0]), G.rows_of(pairs[:, 1])
    proj, r2 = _map_pairs(
        lambda a, b: _kernels.pair_projection(G.lattice, G.values, a, b, G.h), I, J, threads)
    r = state.grid.h * np.sqrt(r2.astype(float))
    keep = r < POLE_FRACTION * model.D
    u2, inv = np.unique(r2[keep], return_inverse=True)
    s_half = 0.5 * state.grid.h * np.sqrt(u2.astype(float))
    if form == "p3":
        bound_side = 2 * log_hbar_derivs(s_half, state.t, model)[1]
    else:
        bound_side = 2 * psi_parabolic(s_half, state.t, model)
    slack = bound_side[inv] - proj[keep]
    return slack, r[keep], np.column_stack([I, J])[keep], G, int((~keep).sum())


def kernel_slack(state: HeatState, grid: GridDomain | None, model: Model1D,
                 delta: float = 1e-2, *, tol: float | None = None, max_pairs: int = 100_000,
                 seed: int = 0, form: str = "p3", pairs: np.ndarray | None = None,
                 threads: int = 1, enforce_tmin: bool = True) -> SlackReport:
    """Parabolic log-concavity comparison for one kernel snapshot.

    Admissible nodes are those with ``H >= delta max H`` and a full gradient
    stencil; gradients are central differences of ``log H``.

    Warns
    -----
    PoleProximity
        Pairs with ``|y - x| >= 0.999 D`` are dropped and counted.
    """
    grid = grid or state.grid
    if enforce_tmin and state.t < t_min(grid.h, model.D) * (1 - 1e-12):
        raise ValueError(f"t={state.t} is below t_min={t_min(grid.h, model.D)}")
    if pairs is None:
        nodes = admissible_nodes(grid, state.values, delta, "gradient")
        pairs = sample_pairs(nodes, max_pairs, seed)
    slack, r, rows, G, excluded = parabolic_pair_slacks(state, pairs, model, form, threads)
    if excluded:
        warnings.warn(PoleProximity(f"{excluded} pairs within 0.1% of the diameter excluded"),
                      stacklevel=2)
    if tol is None:
        tol = default_tolerance(grid.h, model.D)
    return pairwise_slack_report(f"kernel-log-concavity-{form}", slack, rows, G, r, tol,
                                 excluded, extra={"t": state.t, "z": state.grid.nodes[state.z]
                                                  .tolist(), "delta": delta})


# ---------------------------------------------------------------------------
# decay of the kernel peak


@dataclass(frozen=True)
class DecayReport:
    max_violation: float
    violations: list
    tolerance: float
    verdict: str
    rate_estimate: float
    model_rate: float

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "violations": self.violations,
                "tolerance": self.tolerance, "verdict": self.verdict,
                "rate_estimate": self.rate_estimate, "model_rate": self.model_rate}


def decay_check(states: Sequence[HeatState], model: Model1D, infq: float,
                tol: float = 1e-3) -> DecayReport:
    """Compare growth of ``log max_x H(z, x, t)`` with ``n log Hbar(0, t) - t inf q``.

    A positive violation means the grid kernel peak decays slower than
    allowed between two consecutive snapshots. ``rate_estimate`` is the decay
    rate of the peak over the last interval, to be compared with
    ``model_rate = n mu0 + inf q``.
    """
    if len(states) < 3:
        raise ValueError("need at least three snapshots")
    t = np.array([s.t for s in states])
    if np.any(np.diff(t) <= 0):
        raise ValueError("snapshots must be strictly increasing in t")
    n = states[0].grid.dim
    log_m = np.log([s.peak for s in states])
    log_hbar0 = np.array([log_hbar_derivs(0.0, float(ti), model)[0][0] for ti in t])
    lhs = np.diff(log_m)
    rhs = n * np.diff(log_hbar0) - infq * np.diff(t)
    viol = lhs - rhs
    mx = float(viol.max())
    verdict = "fail" if mx > tol else ("marginal" if mx > -tol else "pass")
    return DecayReport(mx, viol.tolist(), float(tol), verdict,
                       float(-lhs[-1] / (t[-1] - t[-2])), float(n * model.mu0 + infq))


# ---------------------------------------------------------------------------
# export


def write_field_csv(path, grid: GridDomain, columns: dict, nodes: np.ndarray | None = None,
                    aligned: bool = False) -> int:
    """Write node coordinates plus named per-node columns; returns the row count.

    Columns hold one value per grid node, or one per entry of ``nodes`` when
    ``aligned`` is set.
    """
    nodes = np.arange(grid.N) if nodes is None else np.asarray(nodes)
    cols = [np.asarray(v) if aligned else np.asarray(v)[nodes] for v in columns.values()]
    names = ["x", "y"][:grid.dim]
    pts = grid.nodes[nodes]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node"] + names + list(columns))
        for k, node in enumerate(nodes):
            w.writerow([int(node)] + [repr(float(c)) for c in pts[k]]
                       + [repr(float(c[k])) for c in cols])
    return int(nodes.size)
