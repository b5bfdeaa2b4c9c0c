"""Built-in benchmark battery behind ``gapverify verify-all``.

Each scenario is an ordinary run configuration; the criteria below read
their reports and compare against closed-form reference values.
"""
from __future__ import annotations

import math

from scipy.special import jn_zeros

from .config import RunConfig

PI2 = math.pi ** 2
INTERVAL = {"kind": "interval", "endpoints": [-0.5, 0.5]}
SQUARE = {"kind": "rectangle", "width": 1.0, "height": 1.0}
DISK = {"kind": "disk", "radius": 1.0}
SWEEP = [0.1, 0.01, 0.001]

SCENARIOS = {
    "interval-gap": {
        "checks": ["eigen", "gap", "dirichlet-bounds", "isodiametric"],
        "domain": INTERVAL, "grid": {"h": 1 / 256, "levels": 2}},
    "interval-model": {
        "checks": ["modulus", "logconcavity", "heat-slack", "decay", "model-residuals",
                   "ratio-diagnostic"],
        "domain": INTERVAL, "grid": {"h": 1 / 512, "levels": 2}, "max_pairs": 1_000_000,
        "heat": {"t": [0.05, 0.1, 0.5], "t_units": "absolute"}},
    "square": {
        "checks": ["eigen", "gap", "modulus", "logconcavity", "dirichlet-bounds",
                   "isodiametric", "ratio-diagnostic"],
        "domain": SQUARE, "grid": {"h": 1 / 64, "levels": 2}, "delta_sweep": SWEEP},
    "square-quadratic": {
        "checks": ["eigen", "modulus", "logconcavity", "dirichlet-bounds"],
        "domain": SQUARE, "grid": {"h": 1 / 64, "levels": 1}, "delta_sweep": SWEEP,
        "potential": {"radial": {"k": 4.0, "center": [0.5, 0.5]}}},
    "square-shifted": {
        "checks": ["eigen", "gap", "dirichlet-bounds"],
        "domain": SQUARE, "grid": {"h": 1 / 64, "levels": 2}, "potential": {"c": 5.0}},
    "disk": {
        "checks": ["eigen", "gap", "isodiametric"],
        "domain": DISK, "grid": {"h": 1 / 64, "levels": 2}},
    "square-heat": {
        "checks": ["modulus", "heat-slack", "decay"],
        "domain": SQUARE, "grid": {"h": 1 / 48, "levels": 1},
        "heat": {"t": [0.02, 0.05, 0.1, 0.2, 3.0], "t_units": "D2",
                 "sources": [[0.5, 0.5], [0.3, 0.6]]}},
    "interval-neumann": {
        "checks": ["neumann"], "domain": INTERVAL, "grid": {"h": 1 / 256, "levels": 1},
        "neumann": {"variant": "ii", "drift": "zero", "levels": 2}},
    "interval-neumann-drift": {
        "checks": ["neumann"], "domain": INTERVAL, "grid": {"h": 1 / 256, "levels": 1},
        "neumann": {"variant": "i", "drift": "model", "levels": 2}},
    "square-neumann": {
        "checks": ["neumann"], "domain": SQUARE, "grid": {"h": 1 / 64, "levels": 1},
        "neumann": {"variant": "ii", "drift": "zero", "levels": 2}},
}


def scenario_configs(seed: int | None = None) -> dict[str, RunConfig]:
    out = {}
    for name, d in SCENARIOS.items():
        d = dict(d, name=name)
        if seed is not None:
            d["seed"] = int(seed)
        out[name] = RunConfig.from_dict(d)
    return out


# ---------------------------------------------------------------------------
# criteria


def _check(report, cid):
    for c in report["checks"]:
        if c["id"] == cid:
            return c
    raise KeyError(cid)


def _rows(report, cid, prefix=""):
    return [r for r in _check(report, cid)["rows"] if r["id"].startswith(prefix)]


def _line(cid, name, value, threshold, passed, supplementary=False):
    return {"criterion": cid, "name": name, "value": value, "threshold": threshold,
            "passed": bool(passed), "supplementary": supplementary}


def _passing(rows):
    return all(r["verdict"] in ("pass", "marginal") for r in rows) and bool(rows)


def evaluate(reports: dict) -> list[dict]:
    """One line per acceptance item; ``supplementary`` lines do not affect the exit code."""
    L = []
    R = reports

    # 1: 1-D gap
    gap = _check(R["interval-gap"], "gap")
    corr = gap["rows"][0]["computed"]
    rel = abs(corr / (3 * PI2) - 1)
    L.append(_line("1", "1-D corrected gap relative error", rel, 1e-6, rel <= 1e-6))
    g0, g1 = gap["details"]["raw_gaps"]
    order = math.log2(abs(g0 - 3 * PI2) / abs(g1 - 3 * PI2))
    L.append(_line("1", "1-D raw gap convergence order", order, [1.9, 2.1],
                   1.9 <= order <= 2.1))

    # 2: square and disk gaps
    row = _check(R["square"], "gap")["rows"][0]
    rel = abs(row["computed"] / (3 * PI2) - 1)
    L.append(_line("2", "square corrected gap relative error", rel, 2e-3, rel <= 2e-3))
    ok = row["verdict"] == "pass" and abs(row["slack"] - 1.5 * PI2) <= 2e-3 * 3 * PI2
    L.append(_line("2", "square gap bound slack (3 pi^2 / 2)", row["slack"], 1.5 * PI2, ok))
    j0, j1 = jn_zeros(0, 1)[0], jn_zeros(1, 1)[0]
    ref = j1 ** 2 - j0 ** 2
    row = _check(R["disk"], "gap")["rows"][0]
    rel = float(abs(row["computed"] / ref - 1))
    L.append(_line("2", "disk corrected gap relative error (Bessel zeros)", rel, 1e-2,
                   rel <= 1e-2))
    L.append(_line("2", "disk gap bound 3 pi^2 / 4", row["slack"], 0.0,
                   row["verdict"] == "pass"))

    # 3a: 1-D elliptic equality case
    mod = _check(R["interval-model"], "modulus")["details"]["reports"]
    h_rows = sorted(mod, key=lambda d: -d["h"])
    coarse, fine = h_rows[0], h_rows[1]
    lim = 5e-3 * PI2
    L.append(_line("3a", "1-D max |elliptic slack| over admissible pairs, h=1/512",
                   coarse["max_abs_slack"], lim, coarse["max_abs_slack"] <= lim))
    ratio = coarse["max_abs_slack"] / fine["max_abs_slack"]
    L.append(_line("3a", "1-D max |elliptic slack| refinement ratio", ratio, [3.5, 4.5],
                   3.5 <= ratio <= 4.5))
    ratio_min = coarse["min_slack"] / fine["min_slack"]
    L.append(_line("3a", "1-D |min elliptic slack| within tol(h)", abs(coarse["min_slack"]),
                   coarse["tolerance"], abs(coarse["min_slack"]) <= coarse["tolerance"],
                   supplementary=True))
    L.append(_line("3a", "1-D min elliptic slack refinement ratio", ratio_min, [3.5, 4.5],
                   3.5 <= ratio_min <= 4.5, supplementary=True))

    # 3b: square elliptic, two potentials, delta sweep
    for sc in ("square", "square-quadratic"):
        reps = [d for d in _check(R[sc], "modulus")["details"]["reports"]
                if d["h"] == R[sc]["config"]["grid"]["h"]]
        ok = (all(d["verdict"] in ("pass", "marginal") for d in reps)
              and len({d["verdict"] for d in reps}) == 1
              and all(d["pair_count"] >= 100_000 for d in reps))
        L.append(_line("3b", f"{sc}: min slack >= -tol across delta sweep",
                       min(d["min_slack"] for d in reps), -reps[0]["tolerance"], ok))

    # 4: log-concavity
    for sc in ("interval-model", "square", "square-quadratic"):
        rows = _rows(R[sc], "logconcavity")
        L.append(_line("4", f"{sc}: Hessian of -log phi0 >= -tol",
                       min(r["computed"] for r in rows), 0.0, _passing(rows)))
    v = min(r["computed"] for r in _rows(R["interval-model"], "logconcavity"))
    L.append(_line("4", "1-D Hessian minimum exceeds pi^2 - 0.05", v, PI2 - 0.05,
                   v > PI2 - 0.05))

    # 5: model self-consistency
    for r in _rows(R["interval-model"], "model-residuals"):
        L.append(_line("5", r["id"], r["computed"], r["bound"], r["verdict"] == "pass"))

    # 6: parabolic comparison
    heat1 = _check(R["interval-model"], "heat-slack")["details"]["reports"]
    worst = max(d["max_abs_slack"] for d in heat1)
    L.append(_line("6", "1-D max |kernel slack|, t in {0.05, 0.1, 0.5}", worst, 1e-2,
                   worst <= 1e-2))
    worst_min = max(abs(d["min_slack"]) for d in heat1)
    L.append(_line("6", "1-D |min kernel slack| within tol(h)", worst_min,
                   heat1[0]["tolerance"], worst_min <= heat1[0]["tolerance"],
                   supplementary=True))
    D2 = 2.0
    sq = [d for d in _check(R["square-heat"], "heat-slack")["details"]["reports"]
          if d["extra"]["t"] <= 0.2 * D2 + 1e-12]
    L.append(_line("6", "square kernel slack verdicts (centroid and off-center)",
                   min(d["min_slack"] for d in sq), -sq[0]["tolerance"],
                   all(d["verdict"] in ("pass", "marginal") for d in sq) and len(sq) == 8))
    forms = max(d["form_difference"] for d in heat1 + sq)
    L.append(_line("6", "two forms of the kernel comparison agree", forms, 1e-10,
                   forms <= 1e-10))

    # 7: elliptic limit
    late = [d for d in _check(R["square-heat"], "heat-slack")["details"]["reports"]
            if d["source"] == 0 and abs(d["extra"]["t"] - 3 * D2) < 1e-12][0]
    ell = _check(R["square-heat"], "modulus")["details"]["reports"][0]
    diff = abs(late["min_slack"] - ell["min_slack"])
    L.append(_line("7", "kernel slack at t = 3 D^2 vs elliptic slack", diff, 1e-3,
                   diff <= 1e-3))

    # 8: decay
    d1 = _check(R["interval-model"], "decay")["details"]["reports"][0]
    L.append(_line("8", "1-D decay per-step violation", d1["max_violation"], 1e-3,
                   d1["max_violation"] <= 1e-3))
    for d in _check(R["square-heat"], "decay")["details"]["reports"]:
        L.append(_line("8", f"square decay violation (source {d['source']})",
                       d["max_violation"], d["tolerance"], d["max_violation"] <= d["tolerance"]))
    d = _check(R["square-heat"], "decay")["details"]["reports"][0]
    L.append(_line("8", "asymptotic rate lam0 >= n mu0", d["rate_estimate"], d["model_rate"],
                   d["rate_estimate"] >= d["model_rate"]))

    # 9: Dirichlet bounds
    rows = _rows(R["interval-gap"], "dirichlet-bounds", "lambda0")
    L.append(_line("9", "1-D lam0 = pi^2 equality (marginal)", rows[0]["computed"], PI2,
                   rows[0]["verdict"] == "marginal"))
    for r in _rows(R["square"], "dirichlet-bounds"):
        L.append(_line("9", f"square {r['id']}", r["computed"], r["bound"],
                       r["verdict"] == "pass"))
    a = _rows(R["square"], "dirichlet-bounds")
    b = _rows(R["square-shifted"], "dirichlet-bounds")
    cov = max(abs(x["slack"] - y["slack"]) for x, y in zip(a, b))
    L.append(_line("9", "constant-shift covariance of bound slacks", cov, 1e-10, cov <= 1e-10))
    expect = {"square": (math.pi ** 3 / 2, 5 * math.pi ** 3 / 4), "disk": (PI2 / 2, 5 * PI2 / 4),
              "interval-gap": (PI2, 4 * PI2)}
    for sc, vals in expect.items():
        rows = _rows(R[sc], "isodiametric")
        ok = all(abs(r["bound"] - v) <= 1e-12 * v for r, v in zip(rows, vals)) and _passing(rows)
        L.append(_line("9", f"{sc}: isodiametric bounds", [r["bound"] for r in rows],
                       list(vals), ok))

    # 10: Neumann
    r = _check(R["interval-neumann"], "neumann")["rows"][0]
    rel = abs(r["computed"] / PI2 - 1)
    L.append(_line("10", "interval X=0 corrected Neumann eigenvalue vs pi^2", rel, 1e-6,
                   rel <= 1e-6 and r["verdict"] in ("pass", "marginal")))
    r = _check(R["interval-neumann-drift"], "neumann")["rows"][0]
    rel = abs(r["raw"] / (3 * PI2) - 1)
    L.append(_line("10", "interval model drift Neumann eigenvalue vs 3 pi^2 (h=1/512)", rel,
                   1e-4, rel <= 1e-4 and r["verdict"] in ("pass", "marginal")))
    r = _check(R["square-neumann"], "neumann")["rows"][0]
    ok = r["verdict"] == "pass" and abs(r["computed"] / PI2 - 1) <= 1e-3
    L.append(_line("10", "square X=0 Neumann eigenvalue pi^2 vs pi^2 / 2", r["computed"],
                   r["bound"], ok))
    return L
