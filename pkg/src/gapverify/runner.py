"""Execute the checks of a :class:`RunConfig` and assemble a report.

Checks run concurrently; shared inputs (eigensolves, heat snapshots) are
computed once under per-key locks, and results are gathered in the fixed
order of ``CHECKS`` so the report does not depend on scheduling.
"""
from __future__ import annotations

import logging
import math
import threading
import time
import traceback
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from . import bounds, heat, model1d, modulus
from .config import CHECKS, RunConfig
from .eigen import RESIDUAL_TOL, smallest_eigenpairs
from .errors import DegenerateExcited, GapVerifyError, PoleProximity, TruncationUnderflow
from .geometry import admissible_nodes, build_grid, diameter, sample_pairs
from .operator import Potential, assemble_dirichlet

log = logging.getLogger(__name__)

PASSING = ("pass", "marginal")


def row(check_id: str, computed, bound, slack, verdict: str, **extra) -> dict:
    """One table row; ``computed``/``bound``/``slack`` may be None for diagnostics."""
    out = {"id": check_id, "computed": computed, "bound": bound, "slack": slack,
           "verdict": verdict}
    out.update(extra)
    return out


class Context:
    """Lazily computed, shared inputs for the checks of one run."""

    def __init__(self, config: RunConfig, threads: int = 1):
        self.config = config
        self.threads = threads
        self.spec = config.spec
        self.dim = self.spec.dim
        self.D = diameter(self.spec)
        self.model = model1d.Model1D(self.D)
        self.q = Potential.from_dict(config["potential"], self.dim)
        self.h = config["grid"]["h"]
        self.levels = [self.h / 2 ** i for i in range(config["grid"]["levels"])]
        self._cache: dict = {}
        self._locks: dict = {}
        self._guard = threading.Lock()

    def memo(self, key, fn):
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._cache:
                self._cache[key] = fn()
            return self._cache[key]

    def grid(self, h):
        return self.memo(("grid", h), lambda: build_grid(self.spec, h))

    def operator(self, h):
        return self.memo(("op", h), lambda: assemble_dirichlet(self.grid(h), self.q))

    def spectral(self, h):
        return self.memo(("eig", h), lambda: smallest_eigenpairs(
            self.operator(h), 3, seed=self.config["seed"]))

    def coarse_fine(self):
        sr = [self.spectral(h) for h in self.levels]
        return sr[0], (sr[1] if len(sr) > 1 else None)

    def times(self, section: str):
        cfg = self.config[section]
        scale = self.D ** 2 if cfg["t_units"] == "D2" else 1.0
        return [t * scale for t in cfg["t"]]

    @property
    def heat_h(self):
        return self.config["heat"]["h"] or self.h

    def sources(self):
        g = self.grid(self.heat_h)
        return [g.nearest_node(z) for z in self.config["heat"]["sources"]]

    def heat_states(self, z: int, times: tuple):
        def build():
            op = self.operator(self.heat_h)
            cfg = self.config["heat"]
            if cfg["method"] == "spectral":
                return heat.kernel_spectral(op, z, list(times))
            return heat.kernel_cn(op, z, list(times), cfg["dt"])
        return self.memo(("heat", z, times), build)

    def tol(self, key: str, default: float) -> float:
        return self.config["tolerances"].get(key, default)


# ---------------------------------------------------------------------------
# checks; each returns (rows, details)


def check_eigen(ctx: Context):
    rows, details = [], []
    for h in ctx.levels:
        sr = ctx.spectral(h)
        tol = RESIDUAL_TOL * sr.operator.norm_inf
        res = float(sr.residuals.max())
        details.append(sr.metadata())
        rows.append(row(f"eigen[h={h!r}]", res, tol, tol - res, "pass"))
    return rows, {"levels": details}


def check_gap(ctx: Context):
    coarse, fine = ctx.coarse_fine()
    v = bounds.gap_check(coarse, ctx.D, fine, _bound_tol(ctx, 3 * math.pi ** 2 / ctx.D ** 2))
    raw = [s.lam1 - s.lam0 for s in (coarse, fine) if s is not None]
    return [_bound_row(v)], {"verdict": v.to_dict(), "raw_gaps": raw, "h": ctx.levels}


def _bound_row(v: bounds.BoundVerdict) -> dict:
    return row(v.bound_id, v.corrected, v.bound, v.corrected_slack, v.verdict,
               raw=v.computed, tolerance=v.tolerance)


def _bound_tol(ctx, bound):
    rel = ctx.config["tolerances"].get("bound_rel")
    return None if rel is None else rel * abs(bound)


def check_modulus(ctx: Context):
    rows, details = [], []
    cfg = ctx.config
    for h in ctx.levels:
        sr = ctx.spectral(h)
        tol = ctx.tol("slack", modulus.default_tolerance(h, ctx.D))
        for delta in cfg["delta_sweep"]:
            X = modulus.ground_state_field(sr, None, delta)
            pairs = sample_pairs(X.nodes, cfg["max_pairs"], cfg["seed"])
            rep = modulus.expansion_slack(X, pairs, ctx.model, tol, threads=ctx.threads)
            d = rep.to_dict()
            d.update(h=h, delta=delta)
            details.append(d)
            rows.append(row(f"modulus[h={h!r},delta={delta!r}]", rep.min_slack, 0.0,
                            rep.min_slack, rep.verdict, tolerance=tol,
                            max_abs_slack=rep.max_abs_slack))
    return rows, {"reports": details}


def check_logconcavity(ctx: Context):
    rows, details = [], []
    for h in ctx.levels:
        sr = ctx.spectral(h)
        tol = ctx.tol("logconcavity", modulus.default_tolerance(h, ctx.D))
        for delta in ctx.config["delta_sweep"]:
            v = modulus.logconcavity_min_eig(sr, None, delta)
            verdict = modulus.classify(v, tol)
            details.append({"h": h, "delta": delta, "min_eig": v, "tolerance": tol})
            rows.append(row(f"logconcavity[h={h!r},delta={delta!r}]", v, 0.0, v, verdict,
                            tolerance=tol))
    return rows, {"values": details}


def check_heat_slack(ctx: Context):
    cfg = ctx.config
    rows, details = [], []
    times = tuple(ctx.times("heat"))
    g = ctx.grid(ctx.heat_h)
    tol = ctx.tol("slack", modulus.default_tolerance(g.h, ctx.D))
    for zi, z in enumerate(ctx.sources()):
        for st in ctx.heat_states(z, times):
            nodes = admissible_nodes(g, st.values, cfg["delta"], "gradient")
            pairs = sample_pairs(nodes, cfg["max_pairs"], cfg["seed"])
            s3, *_ = heat.parabolic_pair_slacks(st, pairs, ctx.model, "p3", ctx.threads)
            s2, *_ = heat.parabolic_pair_slacks(st, pairs, ctx.model, "p2", ctx.threads)
            rep = heat.kernel_slack(st, g, ctx.model, cfg["delta"], tol=tol, pairs=pairs,
                                    threads=ctx.threads)
            form_gap = float(np.abs(s3 - s2).max())
            d = rep.to_dict()
            d.update(source=zi, form_difference=form_gap, mass=st.mass)
            details.append(d)
            rows.append(row(f"heat-slack[z={zi},t={st.t!r}]", rep.min_slack, 0.0,
                            rep.min_slack, rep.verdict, tolerance=tol,
                            max_abs_slack=rep.max_abs_slack, form_difference=form_gap))
    return rows, {"reports": details}


def check_decay(ctx: Context):
    times = tuple(ctx.times("decay"))
    infq = ctx.q.infimum(ctx.spec, ctx.heat_h)
    tol = ctx.tol("decay", 1e-3)
    rows, details = [], []
    for zi, z in enumerate(ctx.sources()):
        rep = heat.decay_check(ctx.heat_states(z, times), ctx.model, infq, tol)
        d = rep.to_dict()
        d["source"] = zi
        details.append(d)
        rows.append(row(f"decay[z={zi}]", rep.max_violation, 0.0, -rep.max_violation,
                        rep.verdict, tolerance=tol, rate_estimate=rep.rate_estimate,
                        model_rate=rep.model_rate))
    return rows, {"reports": details}


def check_neumann(ctx: Context):
    cfg = ctx.config["neumann"]
    h = cfg["h"] or ctx.h
    drift = bounds.model_drift(ctx.spec, ctx.D) if cfg["drift"] == "model" else None
    bound = (ctx.model.gap if cfg["variant"] == "i"
             else 2 * cfg["eps_prime"] + ctx.model.mu0)
    v = bounds.neumann_check(ctx.spec, h, ctx.D, cfg["variant"], drift=drift,
                             eps_prime=cfg["eps_prime"], refine=cfg["levels"] == 2,
                             tol=_bound_tol(ctx, bound))
    return [_bound_row(v)], {"verdict": v.to_dict(), "h": h}


def check_dirichlet_bounds(ctx: Context):
    coarse, fine = ctx.coarse_fine()
    vs = bounds.dirichlet_lower_bounds(coarse, ctx.D, ctx.dim, ctx.q, fine, spec=ctx.spec)
    vs = [_retol(ctx, v) for v in vs]
    return [_bound_row(v) for v in vs], {"verdicts": [v.to_dict() for v in vs],
                                         "inf_q": ctx.q.infimum(ctx.spec, ctx.h)}


def check_isodiametric(ctx: Context):
    coarse, fine = ctx.coarse_fine()
    vs = bounds.isodiametric_bounds(coarse, ctx.spec, ctx.dim, ctx.q, fine)
    vs = [_retol(ctx, v) for v in vs]
    return [_bound_row(v) for v in vs], {"verdicts": [v.to_dict() for v in vs],
                                         "area": ctx.spec.area()}


def _retol(ctx, v):
    tol = _bound_tol(ctx, v.bound)
    if tol is None:
        return v
    return bounds.make_verdict(v.bound_id, v.computed, v.corrected, v.bound, tol, v.note)


def check_model_residuals(ctx: Context):
    cfg = ctx.config["model"]
    m = ctx.model
    D = m.D
    s = np.linspace(-cfg["s_max"], cfg["s_max"], cfg["ns"]) * D
    ts = np.geomspace(cfg["t_min"], cfg["t_max"], cfg["nt"]) * D ** 2
    kdiff = max(float(np.abs(model1d.hbar(s, t, m, "series")
                             - model1d.hbar(s, t, m, "images")).max()) for t in ts)
    ode = model1d.check_psi_ode(m, s[s >= 0])
    pde = model1d.check_psi_pde(m, s[s > 0], ts)
    rows = [row("model-kernel-routes", kdiff, 1e-10, 1e-10 - kdiff,
                "pass" if kdiff <= 1e-10 else "fail"),
            row("model-ode-residual", ode, 1e-9, 1e-9 - ode, "pass" if ode <= 1e-9 else "fail"),
            row("model-pde-residual", pde.minimum, -1e-6, pde.minimum + 1e-6,
                "pass" if pde.minimum >= -1e-6 else "fail")]
    return rows, {"kernel_route_difference": kdiff, "ode_residual": ode,
                  "pde_min": pde.minimum, "pde_max": pde.maximum}


def check_ratio(ctx: Context):
    sr = ctx.spectral(ctx.h)
    try:
        r = modulus.ratio_continuity(sr, None, ctx.model, ctx.config["delta"])
    except DegenerateExcited as exc:
        return [row("ratio-diagnostic", None, None, None, "skipped", reason=str(exc))], \
            {"skipped": str(exc)}
    return [row("ratio-diagnostic", r.c_star, None, None, "diagnostic")], r.to_dict()


CHECK_FUNCS = {"eigen": check_eigen, "gap": check_gap, "modulus": check_modulus,
               "logconcavity": check_logconcavity, "heat-slack": check_heat_slack,
               "decay": check_decay, "neumann": check_neumann,
               "dirichlet-bounds": check_dirichlet_bounds, "isodiametric": check_isodiametric,
               "model-residuals": check_model_residuals, "ratio-diagnostic": check_ratio}
assert set(CHECK_FUNCS) == set(CHECKS)


def _run_one(ctx: Context, cid: str):
    t0 = time.perf_counter()
    try:
        rows, details = CHECK_FUNCS[cid](ctx)
        status = _status([r["verdict"] for r in rows])
        out = {"id": cid, "status": status, "rows": rows, "details": details}
    except (GapVerifyError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("check %s failed: %s", cid, exc)
        log.debug("%s", traceback.format_exc())
        out = {"id": cid, "status": "error", "rows": [],
               "details": {"error": f"{type(exc).__name__}: {exc}"}}
    return out, time.perf_counter() - t0


def _status(verdicts) -> str:
    if any(v == "fail" for v in verdicts):
        return "fail"
    if any(v == "marginal" for v in verdicts):
        return "marginal"
    if all(v in ("diagnostic", "skipped") for v in verdicts):
        return verdicts[0] if verdicts else "skipped"
    return "pass"


def overall(statuses) -> str:
    if any(s == "error" for s in statuses):
        return "error"
    if any(s == "fail" for s in statuses):
        return "fail"
    return "pass"


@dataclass
class RunResult:
    report: dict
    timings: dict
    context: Context


def run(config: RunConfig, threads: int = 1) -> RunResult:
    """Run every configured check.

    The report is a plain dictionary, deterministic given the configuration;
    wall-clock timings are kept apart from it. The context holds the computed
    fields for export.
    """
    ctx = Context(config, threads)
    checks = config["checks"]
    t0 = time.perf_counter()
    # pole-exclusion and truncation warnings are counted in the report itself;
    # filters are process-global, so they are set once here and not per check
    with threadpool_limits(limits=1), warnings.catch_warnings():
        warnings.simplefilter("ignore", PoleProximity)
        warnings.simplefilter("ignore", TruncationUnderflow)
        if threads <= 1:
            results = [_run_one(ctx, c) for c in checks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(lambda c: _run_one(ctx, c), checks))
    report = {
        "config": config.data,
        "geometry": {"dim": ctx.dim, "diameter": ctx.D, "area": ctx.spec.area(),
                     "levels": ctx.levels,
                     "N": [_grid_size(ctx, h) for h in ctx.levels]},
        "checks": [r for r, _ in results],
        "overall": overall([r["status"] for r, _ in results]),
    }
    timings = {"checks": {r["id"]: dt for r, dt in results},
               "total": time.perf_counter() - t0}
    return RunResult(report, timings, ctx)


def _grid_size(ctx: Context, h: float):
    try:
        return ctx.grid(h).N
    except (GapVerifyError, ValueError):
        return None


def exit_code(verdict: str) -> int:
    return {"pass": 0, "fail": 1}.get(verdict, 2)
