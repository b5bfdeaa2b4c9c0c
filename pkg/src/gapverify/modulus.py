"""Drift of the ground state and pairwise expansion-modulus slacks.

For ``X = -grad log phi0`` the checked inequality is

    (X(y) - X(x)) . u  >=  2 (pi/D) tan(pi |y - x| / (2 D)),   u = (y - x) / |y - x|,

and the slack of a pair is the left side minus the right side.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .eigen import SpectralResult
from .errors import DegenerateExcited, PoleProximity
from .geometry import GridDomain, admissible_nodes
from .model1d import Model1D
from .operator import VectorFieldSample, gradient, hessian

__all__ = ["VectorFieldSample", "SlackReport", "classify", "default_tolerance",
           "ground_state_field", "expansion_slack", "pairwise_slack_report",
           "logconcavity_min_eig", "RatioDiagnostic", "ratio_continuity"]

POLE_FRACTION = 0.999
QUANTILES = (0.0, 0.01, 0.5)
_CHUNK = 1 << 16


def classify(value: float, tol: float) -> str:
    """``fail`` below ``-tol``, ``marginal`` within ``tol`` of zero, else ``pass``."""
    if not np.isfinite(value) or value < -tol:
        return "fail"
    if abs(value) <= tol:
        return "marginal"
    return "pass"


def default_tolerance(h: float, D: float) -> float:
    """``10 h (pi / D)^2``."""
    return 10.0 * h * (math.pi / D) ** 2


@dataclass(frozen=True)
class SlackReport:
    """Summary of a pairwise slack evaluation.

    ``verdict`` is ``pass`` or ``marginal`` exactly when ``min_slack >= -tolerance``.
    """

    inequality: str
    pair_count: int
    min_slack: float
    max_slack: float
    argmin: dict
    quantiles: dict
    tolerance: float
    verdict: str
    excluded_pole: int = 0
    flags: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "marginal")

    @property
    def max_abs_slack(self) -> float:
        return max(abs(self.min_slack), abs(self.max_slack))

    def to_dict(self) -> dict:
        return {"inequality": self.inequality, "pair_count": self.pair_count,
                "min_slack": self.min_slack, "max_slack": self.max_slack,
                "max_abs_slack": self.max_abs_slack, "argmin": self.argmin,
                "quantiles": self.quantiles, "tolerance": self.tolerance,
                "verdict": self.verdict, "excluded_pole": self.excluded_pole,
                "flags": list(self.flags), "extra": self.extra}


def ground_state_field(spectral: SpectralResult, grid: GridDomain | None = None,
                       delta: float = 1e-2) -> VectorFieldSample:
    """``X = -grad_h phi0 / phi0`` on the admissible nodes of ``{phi0 >= delta max phi0}``.

    Raises
    ------
    NoAdmissibleNodes
        If no node with a full gradient stencil clears the sublevel.
    """
    grid = grid or spectral.grid
    phi = spectral.phi0
    if np.any(phi <= 0):
        raise ValueError("ground state must be positive")
    nodes = admissible_nodes(grid, phi, delta, "gradient")
    g = gradient(phi, grid, nodes)
    X = -g.values / phi[nodes][:, None]
    tag = {"field": "ground-state-drift", "delta": delta, "h": grid.h, "N": grid.N}
    return VectorFieldSample(nodes, g.points, g.lattice, X, grid.h, tag)


def _map_pairs(fn, I, J, threads: int):
    """Evaluate ``fn`` on contiguous chunks; results concatenated in input order."""
    P = I.size
    if threads <= 1 or P <= _CHUNK:
        return fn(I, J)
    bounds = list(range(0, P, _CHUNK)) + [P]
    parts = list(zip(bounds[:-1], bounds[1:]))
    with ThreadPoolExecutor(max_workers=threads) as ex:
        out = list(ex.map(lambda se: fn(I[se[0]:se[1]], J[se[0]:se[1]]), parts))
    return tuple(np.concatenate([o[k] for o in out]) for k in range(len(out[0])))


def pairwise_slack_report(inequality: str, slack: np.ndarray, rows: np.ndarray,
                          sample: VectorFieldSample, sep: np.ndarray, tol: float,
                          excluded: int = 0, flags: tuple = (), extra: dict | None = None
                          ) -> SlackReport:
    """Aggregate per-pair slacks into a :class:`SlackReport` (deterministic reductions only)."""
    if slack.size == 0:
        raise ValueError("no pairs left to evaluate")
    k = int(np.argmin(slack))
    i, j = rows[k]
    q = np.quantile(slack, QUANTILES)
    argmin = {"x": sample.points[i].tolist(), "y": sample.points[j].tolist(),
              "separation": float(sep[k])}
    mn = float(slack[k])
    return SlackReport(inequality, int(slack.size), mn, float(slack.max()), argmin,
                       {f"q{int(p * 100)}": float(v) for p, v in zip(QUANTILES, q)},
                       float(tol), classify(mn, tol), excluded, tuple(flags), extra or {})


def expansion_slack(X: VectorFieldSample, pairs: np.ndarray, model: Model1D,
                    tol: float | None = None, bound: str = "tan", threads: int = 1,
                    return_pairs: bool = False):
    """Pairwise slack of the expansion-modulus bound.

    Parameters
    ----------
    X : VectorFieldSample
        Drift samples; ``pairs`` holds grid node indices present in ``X``.
    model : Model1D
        Supplies ``D`` for the bound ``2 (pi/D) tan(pi r / (2D))``.
    bound : {"tan", "zero"}
        ``"zero"`` compares against 0 (plain monotonicity of ``X``).
    return_pairs : bool
        Also return the per-pair slack array aligned with the retained pairs.

    Warns
    -----
    PoleProximity
        Pairs with ``|y - x| >= 0.999 D`` are dropped and counted.
    """
    if bound not in ("tan", "zero"):
        raise ValueError("bound must be 'tan' or 'zero'")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    I = X.rows_of(pairs[:, 0])
    J = X.rows_of(pairs[:, 1])
    d = X.lattice[J] - X.lattice[I]
    r = X.h * np.sqrt((d * d).sum(axis=1).astype(float))
    far = r >= POLE_FRACTION * model.D
    excluded = int(far.sum())
    if excluded:
        warnings.warn(PoleProximity(f"{excluded} pairs within 0.1% of the diameter excluded"),
                      stacklevel=2)
        I, J, r = I[~far], J[~far], r[~far]
    if bound == "tan":
        fn = lambda a, b: _kernels.tan_slack(X.lattice, X.values, a, b, X.h, model.a)
    else:
        fn = lambda a, b: _kernels.pair_projection(X.lattice, X.values, a, b, X.h)
    slack, _ = _map_pairs(fn, I, J, threads)
    if tol is None:
        tol = default_tolerance(X.h, model.D)
    rows = np.column_stack([I, J])
    name = "expansion-modulus" if bound == "tan" else "drift-monotone"
    rep = pairwise_slack_report(name, slack, rows, X, r, tol, excluded,
                                extra={"D": model.D, "delta": X.tag.get("delta")})
    return (rep, slack) if return_pairs else rep


def logconcavity_min_eig(spectral: SpectralResult, grid: GridDomain | None = None,
                         delta: float = 1e-2) -> float:
    """Smallest eigenvalue of the discrete Hessian of ``-log phi0`` over admissible nodes."""
    grid = grid or spectral.grid
    phi = spectral.phi0
    if np.any(phi <= 0):
        raise ValueError("ground state must be positive")
    nodes = admissible_nodes(grid, phi, delta, "hessian")
    _, H = hessian(-np.log(phi), grid, nodes)
    return float(np.linalg.eigvalsh(H).min())


@dataclass(frozen=True)
class RatioDiagnostic:
    """Largest ratio of ``w = phi1 / phi0`` differences to ``wbar(|y - x| / 2)``."""

    c_star: float
    x: list
    y: list
    separation: float
    angle_deg: float
    node_count: int

    def to_dict(self) -> dict:
        return {"c_star": self.c_star, "x": self.x, "y": self.y,
                "separation": self.separation, "angle_deg": self.angle_deg,
                "node_count": self.node_count}


def ratio_continuity(spectral: SpectralResult, grid: GridDomain | None, model: Model1D,
                     delta: float = 1e-2) -> RatioDiagnostic:
    """Continuity constant of ``w = phi1 / phi0`` against ``wbar(s) = 2 sin(pi s / D)``.

    The maximum runs over all pairs of admissible nodes. ``angle_deg`` is the
    angle of ``y - x`` to the first axis, folded into ``[0, 90]``.

    Raises
    ------
    DegenerateExcited
        If fewer than three eigenpairs are available or ``lam2 - lam1 <= 1e-6 lam1``.
    """
    grid = grid or spectral.grid
    lam = spectral.eigenvalues
    if lam.size < 3:
        raise DegenerateExcited("need three eigenpairs to certify a simple lam1")
    if lam[2] - lam[1] <= 1e-6 * abs(lam[1]):
        raise DegenerateExcited(f"lam1={lam[1]:.10g} is (nearly) repeated")
    nodes = admissible_nodes(grid, spectral.phi0, delta, "gradient")
    w = spectral.vectors[nodes, 1] / spectral.vectors[nodes, 0]
    lat = grid.lattice[nodes]
    c, i, j = _kernels.ratio_max(lat, w, grid.h, model.a)
    x, y = grid.nodes[nodes[i]], grid.nodes[nodes[j]]
    d = y - x
    ang = math.degrees(math.atan2(abs(d[1]), abs(d[0]))) if d.size > 1 else 0.0
    return RatioDiagnostic(float(c), x.tolist(), y.tolist(), float(np.linalg.norm(d)),
                           ang, int(nodes.size))
