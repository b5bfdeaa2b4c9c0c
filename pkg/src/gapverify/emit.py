"""Report serialization: canonical JSON, verdict table and per-node field CSV."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .geometry import admissible_nodes
from .heat import write_field_csv
from .modulus import ground_state_field

FORMATS = ("report-json", "table-csv", "field-csv")


def _clean(obj):
    """Plain JSON types; non-finite floats become strings so output stays valid JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, no insignificant whitespace, shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False, ensure_ascii=True) + "\n"


def table_rows(report: dict) -> list[dict]:
    return [r for c in report["checks"] for r in c["rows"]]


def write_table_csv(path, report: dict) -> int:
    rows = table_rows(report)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "computed", "bound", "slack", "verdict"])
        for r in rows:
            w.writerow([r["id"]] + ["" if r[k] is None else repr(float(r[k]))
                                    for k in ("computed", "bound", "slack")] + [r["verdict"]])
    return len(rows)


def field_columns(ctx) -> tuple[np.ndarray, object, dict]:
    """Admissible nodes of the coarsest grid with ``phi0``, ``|X|`` and, if available, ``H``."""
    sr = ctx.spectral(ctx.h)
    delta = ctx.config["delta"]
    X = ground_state_field(sr, None, delta)
    nodes = admissible_nodes(sr.grid, sr.phi0, delta, "gradient")
    cols = {"phi0": sr.phi0[nodes], "abs_X": np.linalg.norm(X.values, axis=1)}
    if ctx.heat_h == ctx.h and any(c in ctx.config["checks"] for c in ("heat-slack", "decay")):
        times = tuple(ctx.times("heat"))
        st = ctx.heat_states(ctx.sources()[0], times)[0]
        cols[f"H_t={st.t!r}"] = st.values[nodes]
    return nodes, sr.grid, cols


def emit(result, out_dir, formats=FORMATS) -> dict:
    """Write the requested formats into ``out_dir``; returns ``{format: path}``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    report = result.report
    for fmt in formats:
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}")
        if fmt == "report-json":
            p = out / "report.json"
            p.write_text(canonical_json(report))
        elif fmt == "table-csv":
            p = out / "table.csv"
            write_table_csv(p, report)
        else:
            p = out / "field.csv"
            nodes, grid, cols = field_columns(result.context)
            write_field_csv(p, grid, cols, nodes=nodes, aligned=True)
        written[fmt] = str(p)
    (out / "timings.json").write_text(json.dumps(result.timings, indent=1, sort_keys=True) + "\n")
    return written
