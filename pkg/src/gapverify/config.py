"""Run configuration: TOML schema, defaults and validation.

Example::

    checks = ["eigen", "gap", "modulus"]
    seed = 0
    delta = 0.01
    max_pairs = 100000

    [domain]
    kind = "rectangle"
    width = 1.0
    height = 1.0

    [grid]
    h = 0.015625
    levels = 2            # 2 adds the h/2 level used for Richardson correction

    [potential]           # q(x) = x.A.x + b.x + c
    A = [[0.0, 0.0], [0.0, 0.0]]
    b = [0.0, 0.0]
    c = 0.0

    [heat]
    t = [0.02, 0.05, 0.1, 0.2]
    t_units = "D2"        # or "absolute"
    sources = [[0.5, 0.5], [0.3, 0.6]]

See README.md for every key.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, GapVerifyError
from .geometry import DomainSpec
from .operator import Potential

CHECKS = ("eigen", "gap", "modulus", "logconcavity", "heat-slack", "decay", "neumann",
          "dirichlet-bounds", "isodiametric", "model-residuals", "ratio-diagnostic")

CHECK_HELP = {
    "eigen": "lowest eigenpairs at every grid level with residual certification",
    "gap": "lam1 - lam0 >= 3 pi^2 / D^2 (Richardson-corrected)",
    "modulus": "pairwise expansion-modulus slack of X = -grad log phi0",
    "logconcavity": "min eigenvalue of the Hessian of -log phi0",
    "heat-slack": "parabolic log-concavity comparison of the Dirichlet heat kernel",
    "decay": "decay of max_x H(z, x, t) against n log Hbar(0, t) - t inf q",
    "neumann": "first nonzero Neumann eigenvalue of the drift Laplacian vs its bound",
    "dirichlet-bounds": "lam0 >= n (pi/D)^2 + inf q, lam1 >= (n + 3)(pi/D)^2 + inf q",
    "isodiametric": "volume forms of the Dirichlet lower bounds",
    "model-residuals": "closed-form 1-D model self-consistency (kernel routes, ODE, PDE)",
    "ratio-diagnostic": "continuity constant of phi1 / phi0 (diagnostic, no verdict)",
}

DEFAULTS = {
    "seed": 0,
    "delta": 1e-2,
    "delta_sweep": None,
    "max_pairs": 100_000,
    "grid": {"h": None, "levels": 2},
    "potential": None,
    "heat": {"t": [0.02, 0.05, 0.1, 0.2], "t_units": "D2", "sources": None, "h": None,
             "method": "spectral", "dt": None},
    "decay": {"t": None, "t_units": "D2"},
    "neumann": {"variant": "ii", "drift": "zero", "eps_prime": 0.0, "h": None, "levels": 2},
    "model": {"s_max": 0.45, "t_min": 1e-3, "t_max": 1.0, "ns": 91, "nt": 25},
    "tolerances": {},
}
TOLERANCE_KEYS = ("slack", "bound_rel", "decay", "logconcavity")
TOP_KEYS = {"checks", "domain", "seed", "delta", "delta_sweep", "max_pairs", "grid",
            "potential", "heat", "decay", "neumann", "model", "tolerances", "name"}


def _merge(section: str, given) -> dict:
    base = copy.deepcopy(DEFAULTS[section])
    if given is None:
        return base
    if not isinstance(given, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = set(given) - set(base)
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    base.update(given)
    return base


def _positive(name: str, v) -> float:
    try:
        v = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number") from exc
    if not (math.isfinite(v) and v > 0):
        raise ConfigError(f"{name} must be positive")
    return v


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration. ``data`` is the fully-defaulted dictionary echoed in reports."""

    data: dict

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a table")
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        checks = d.get("checks")
        if not checks or not isinstance(checks, list):
            raise ConfigError("'checks' must be a non-empty list")
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown check ids: {bad}")
        if "domain" not in d:
            raise ConfigError("missing [domain]")
        try:
            spec = DomainSpec.from_dict(d["domain"])
        except (ValueError, KeyError, TypeError, GapVerifyError) as exc:
            raise ConfigError(f"invalid domain: {exc}") from exc

        out = {"name": str(d.get("name", "run")),
               "checks": [c for c in CHECKS if c in checks],
               "domain": spec.to_dict(),
               "seed": int(d.get("seed", DEFAULTS["seed"])),
               "delta": float(d.get("delta", DEFAULTS["delta"])),
               "max_pairs": int(d.get("max_pairs", DEFAULTS["max_pairs"]))}
        if not 0 < out["delta"] < 1:
            raise ConfigError("delta must lie in (0, 1)")
        sweep = d.get("delta_sweep") or [out["delta"]]
        if not all(0 < float(x) < 1 for x in sweep):
            raise ConfigError("delta_sweep entries must lie in (0, 1)")
        out["delta_sweep"] = [float(x) for x in sweep]
        if out["max_pairs"] < 1:
            raise ConfigError("max_pairs must be positive")
        if not 0 <= out["seed"] < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

        grid = _merge("grid", d.get("grid"))
        grid["h"] = _positive("grid.h", grid["h"])
        grid["levels"] = int(grid["levels"])
        if grid["levels"] not in (1, 2):
            raise ConfigError("grid.levels must be 1 or 2")
        out["grid"] = grid

        dim = spec.dim
        pot = d.get("potential") or {}
        unknown = set(pot) - {"A", "b", "c", "radial"}
        if unknown:
            raise ConfigError(f"unknown keys in [potential]: {sorted(unknown)}")
        try:
            if "radial" in pot:
                r = pot["radial"]
                q = Potential.radial(float(r["k"]), r.get("center", spec.centroid().tolist()))
                q = q.shifted(float(pot.get("c", 0.0)))
            else:
                q = Potential.from_dict(pot, dim)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid potential: {exc}") from exc
        if q.dim != dim:
            raise ConfigError("potential dimension does not match the domain")
        out["potential"] = q.to_dict()

        heat = _merge("heat", d.get("heat"))
        heat["t"] = [_positive("heat.t", t) for t in heat["t"]]
        if heat["t_units"] not in ("D2", "absolute"):
            raise ConfigError("heat.t_units must be 'D2' or 'absolute'")
        if heat["method"] not in ("spectral", "crank-nicolson"):
            raise ConfigError("heat.method must be 'spectral' or 'crank-nicolson'")
        if heat["method"] == "crank-nicolson":
            heat["dt"] = _positive("heat.dt", heat["dt"])
        if heat["h"] is not None:
            heat["h"] = _positive("heat.h", heat["h"])
        if heat["sources"] is None:
            heat["sources"] = [spec.centroid().tolist()]
        heat["sources"] = [[float(c) for c in z] for z in heat["sources"]]
        if any(len(z) != dim for z in heat["sources"]):
            raise ConfigError("heat.sources must have the domain dimension")
        out["heat"] = heat

        decay = _merge("decay", d.get("decay"))
        if decay["t"] is None:
            decay["t"] = [0.05 + 0.05 * i for i in range(20)]
            decay["t_units"] = "D2"
        decay["t"] = [_positive("decay.t", t) for t in decay["t"]]
        if len(decay["t"]) < 3 or any(b <= a for a, b in zip(decay["t"], decay["t"][1:])):
            raise ConfigError("decay.t needs at least three increasing times")
        if decay["t_units"] not in ("D2", "absolute"):
            raise ConfigError("decay.t_units must be 'D2' or 'absolute'")
        out["decay"] = decay

        neu = _merge("neumann", d.get("neumann"))
        if neu["variant"] not in ("i", "ii"):
            raise ConfigError("neumann.variant must be 'i' or 'ii'")
        if neu["drift"] not in ("zero", "model"):
            raise ConfigError("neumann.drift must be 'zero' or 'model'")
        neu["eps_prime"] = float(neu["eps_prime"])
        if neu["h"] is not None:
            neu["h"] = _positive("neumann.h", neu["h"])
        neu["levels"] = int(neu["levels"])
        if neu["levels"] not in (1, 2):
            raise ConfigError("neumann.levels must be 1 or 2")
        out["neumann"] = neu

        model = _merge("model", d.get("model"))
        for k in ("s_max", "t_min", "t_max"):
            model[k] = _positive(f"model.{k}", model[k])
        model["ns"], model["nt"] = int(model["ns"]), int(model["nt"])
        out["model"] = model

        tol = d.get("tolerances") or {}
        unknown = set(tol) - set(TOLERANCE_KEYS)
        if unknown:
            raise ConfigError(f"unknown tolerance overrides: {sorted(unknown)}")
        out["tolerances"] = {k: _positive(f"tolerances.{k}", v) for k, v in tol.items()}
        return cls(out)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from exc
        return cls.from_dict(raw)

    def with_seed(self, seed: int) -> "RunConfig":
        d = copy.deepcopy(self.data)
        d["seed"] = int(seed)
        return RunConfig.from_dict(d)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def spec(self) -> DomainSpec:
        return DomainSpec.from_dict(self.data["domain"])
