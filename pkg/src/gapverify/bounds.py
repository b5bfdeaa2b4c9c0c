"""Eigenvalue lower bounds: fundamental gap, diameter and volume forms, Neumann drift bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigen import SpectralResult, richardson, smallest_eigenpairs
from .errors import NonConvexPotential
from .geometry import DomainSpec, build_cell_grid
from .model1d import Model1D
from .modulus import classify
from .operator import Potential, assemble_neumann_drift

REL_TOL = 1e-4
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}


@dataclass(frozen=True)
class BoundVerdict:
    """``computed >= bound`` judged on the Richardson-corrected value.

    ``slack`` uses the finest raw value; ``corrected_slack`` the extrapolated
    one. The verdict is ``classify(corrected_slack, tolerance)``.
    """

    bound_id: str
    computed: float
    corrected: float
    bound: float
    slack: float
    corrected_slack: float
    tolerance: float
    verdict: str
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "marginal")

    def to_dict(self) -> dict:
        return {"bound_id": self.bound_id, "computed": self.computed,
                "corrected": self.corrected, "bound": self.bound, "slack": self.slack,
                "corrected_slack": self.corrected_slack, "tolerance": self.tolerance,
                "verdict": self.verdict, "note": self.note}


def make_verdict(bound_id: str, raw: float, corrected: float, bound: float,
                 tol: float | None = None, note: str = "") -> BoundVerdict:
    """Assemble a verdict; default tolerance is ``1e-4 |bound|``."""
    vals = (raw, corrected, bound)
    if not all(np.isfinite(v) for v in vals):
        raise ValueError(f"non-finite input to verdict {bound_id}: {vals}")
    if tol is None:
        tol = REL_TOL * max(abs(bound), 1e-300)
    cs = corrected - bound
    verdict = classify(cs, tol)
    if verdict == "marginal" and not note:
        note = "equality case"
    return BoundVerdict(bound_id, float(raw), float(corrected), float(bound),
                        float(raw - bound), float(cs), float(tol), verdict, note)


def _levels(coarse: SpectralResult, fine: SpectralResult | None, index: int):
    raw_c = float(coarse.eigenvalues[index])
    if fine is None:
        return raw_c, raw_c
    raw_f = float(fine.eigenvalues[index])
    return raw_f, float(richardson(raw_c, raw_f))


def gap_check(coarse: SpectralResult, D: float, fine: SpectralResult | None = None,
              tol: float | None = None) -> BoundVerdict:
    """``lam1 - lam0 >= 3 pi^2 / D^2``; ``fine`` is the same problem at ``h / 2``."""
    g_c = coarse.lam1 - coarse.lam0
    if fine is None:
        raw, corr = g_c, g_c
    else:
        raw = fine.lam1 - fine.lam0
        corr = float(richardson(g_c, raw))
    return make_verdict("gap", raw, corr, 3 * math.pi ** 2 / D ** 2, tol)


def _checked_infimum(q: Potential | None, spec: DomainSpec, h: float) -> float:
    if q is None:
        return 0.0
    if not q.is_convex:
        raise NonConvexPotential("potential Hessian has a negative eigenvalue")
    return q.infimum(spec, h)


def dirichlet_lower_bounds(coarse: SpectralResult, D: float, n: int, q: Potential | None = None,
                           fine: SpectralResult | None = None, tol: float | None = None,
                           spec: DomainSpec | None = None) -> list[BoundVerdict]:
    """``lam0 >= n (pi/D)^2 + inf q`` and ``lam1 >= (n + 3) (pi/D)^2 + inf q``."""
    spec = spec or coarse.grid.spec
    infq = _checked_infimum(q, spec, coarse.grid.h)
    unit = (math.pi / D) ** 2
    out = []
    for idx, mult, name in ((0, n, "lambda0-diameter"), (1, n + 3, "lambda1-diameter")):
        if idx >= coarse.k:
            break
        raw, corr = _levels(coarse, fine, idx)
        out.append(make_verdict(name, raw, corr, mult * unit + infq, tol))
    return out


def isodiametric_bounds(coarse: SpectralResult, spec: DomainSpec | None, n: int,
                        q: Potential | None = None, fine: SpectralResult | None = None,
                        tol: float | None = None) -> list[BoundVerdict]:
    """Volume forms ``lam_j >= (n + 3j) (pi^2/4) (alpha(n)/|Omega|)^(2/n) + inf q``, j = 0, 1."""
    spec = spec or coarse.grid.spec
    if n not in UNIT_BALL_VOLUME:
        raise ValueError("only n = 1, 2 are supported")
    infq = _checked_infimum(q, spec, coarse.grid.h)
    unit = math.pi ** 2 / 4 * (UNIT_BALL_VOLUME[n] / spec.area()) ** (2.0 / n)
    out = []
    for idx, mult, name in ((0, n, "lambda0-volume"), (1, n + 3, "lambda1-volume")):
        if idx >= coarse.k:
            break
        raw, corr = _levels(coarse, fine, idx)
        out.append(make_verdict(name, raw, corr, mult * unit + infq, tol))
    return out


def neumann_eigenvalue(spec: DomainSpec, h: float, drift=None, drift_potential=None,
                       seed: int = 0) -> SpectralResult:
    """Two lowest eigenpairs of ``-Delta + 2 X . grad`` with Neumann data on a cell grid."""
    grid = build_cell_grid(spec, h)
    op = assemble_neumann_drift(grid, drift, drift_potential)
    return smallest_eigenpairs(op, 2, seed=seed)


def neumann_check(spec: DomainSpec, h: float, D: float, variant: str = "ii", *,
                  drift=None, drift_potential=None, eps_prime: float = 0.0,
                  refine: bool = True, tol: float | None = None) -> BoundVerdict:
    """First nonzero Neumann eigenvalue of the drift Laplacian against its lower bound.

    Variant ``"i"`` compares with ``mu1 - mu0 = 3 pi^2 / D^2`` (drift with the
    1-D model expansion modulus); variant ``"ii"`` with ``2 eps' + mu0``.
    With ``refine`` the eigenvalue is Richardson-corrected from ``h`` and ``h/2``.

    Raises
    ------
    SingularDrift
        If the drift is not finite at some cell center.
    """
    model = Model1D(D)
    if variant == "i":
        bound, name = model.mu1 - model.mu0, "neumann-model-drift"
    elif variant == "ii":
        if not eps_prime > -model.mu0 / 2:
            raise ValueError("eps' must exceed -mu0/2")
        bound, name = 2 * eps_prime + model.mu0, "neumann-convex-drift"
    else:
        raise ValueError("variant must be 'i' or 'ii'")
    coarse = neumann_eigenvalue(spec, h, drift, drift_potential).eigenvalues[1]
    if refine:
        raw = neumann_eigenvalue(spec, h / 2, drift, drift_potential).eigenvalues[1]
        corr = float(richardson(coarse, raw))
    else:
        raw = corr = coarse
    return make_verdict(name, raw, corr, bound, tol)


def model_drift(spec: DomainSpec, D: float | None = None):
    """Drift ``(pi/D) tan(pi (s - c) / D)`` of the 1-D model about the interval midpoint ``c``."""
    if spec.kind != "interval":
        raise ValueError("the model drift is defined on intervals")
    lo, hi = spec.bounding_box()
    c = 0.5 * (lo[0] + hi[0])
    model = Model1D(D or float(hi[0] - lo[0]))
    return lambda x: model.drift(np.asarray(x)[:, :1] - c)
