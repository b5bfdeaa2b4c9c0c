"""Command-line interface.

    gapverify run CONFIG [--out DIR] [--formats report-json,table-csv] [--threads K] [--seed S]
    gapverify verify-all [--out DIR] [--threads K] [--seed S]
    gapverify list-checks

Exit status: 0 when every verdict is pass or marginal, 1 when any fails,
2 on configuration or compute errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import battery, emit
from .config import CHECK_HELP, CHECKS, RunConfig
from .errors import ConfigError, GapVerifyError
from .runner import exit_code, run

log = logging.getLogger("gapverify")


def _formats(text: str) -> list[str]:
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in emit.FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {bad}; choose from {emit.FORMATS}")
    return fmts


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _threads(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapverify", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_formats):
        sp.add_argument("--out", default="gapverify-out", help="output directory")
        sp.add_argument("--formats", type=_formats, default=default_formats,
                        help="comma list of report-json, table-csv, field-csv")
        sp.add_argument("--threads", type=_threads, default=1)
        sp.add_argument("--seed", type=_seed, default=None, help="overrides the config seed")

    r = sub.add_parser("run", help="run the checks of one configuration file")
    r.add_argument("config_path", nargs="?", help="TOML configuration")
    r.add_argument("--config", dest="config_flag", help="TOML configuration")
    common(r, ["report-json", "table-csv"])

    v = sub.add_parser("verify-all", help="run the built-in benchmark battery")
    v.add_argument("--config", dest="config_flag", help="ignored; accepted for uniformity")
    common(v, ["report-json", "table-csv"])

    sub.add_parser("list-checks", help="list known check ids")
    return p


def cmd_run(args) -> int:
    path = args.config_flag or args.config_path
    if not path:
        raise ConfigError("a configuration file is required")
    cfg = RunConfig.load(path)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    result = run(cfg, args.threads)
    written = emit.emit(result, args.out, args.formats)
    for c in result.report["checks"]:
        print(f"{c['status']:>10}  {c['id']}")
        for r in c["rows"]:
            print(f"{'':12}{r['verdict']:>10}  {r['id']}  computed={r['computed']!r}"
                  f"  bound={r['bound']!r}")
    print(f"overall: {result.report['overall']}")
    for fmt, p in written.items():
        log.info("wrote %s -> %s", fmt, p)
    return exit_code(result.report["overall"])


def run_battery(seed: int | None = None, threads: int = 1):
    """Run every scenario; returns ``(battery_report, results, timings)``."""
    results = {name: run(cfg, threads)
               for name, cfg in battery.scenario_configs(seed).items()}
    reports = {k: v.report for k, v in results.items()}
    errors = [k for k, r in reports.items() if r["overall"] == "error"]
    if errors:
        lines, verdict = [], "error"
    else:
        lines = battery.evaluate(reports)
        primary = [ln for ln in lines if not ln["supplementary"]]
        checks_ok = all(r["overall"] == "pass" for r in reports.values())
        verdict = "pass" if checks_ok and all(ln["passed"] for ln in primary) else "fail"
    report = {"scenarios": reports, "criteria": lines, "overall": verdict,
              "seed": seed}
    timings = {k: v.timings for k, v in results.items()}
    return report, results, timings


def cmd_verify_all(args) -> int:
    report, results, timings = run_battery(args.seed, args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if "report-json" in args.formats:
        (out / "report.json").write_text(emit.canonical_json(report))
    if "table-csv" in args.formats:
        with open(out / "table.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "computed", "bound", "slack", "verdict"])
            for ln in report["criteria"]:
                verdict = "pass" if ln["passed"] else "fail"
                if ln["supplementary"]:
                    verdict += " (supplementary)"
                w.writerow([f"{ln['criterion']}: {ln['name']}", ln["value"], ln["threshold"],
                            "", verdict])
    if "field-csv" in args.formats:
        for name, res in results.items():
            d = out / "scenarios" / name
            emit.emit(res, d, ["field-csv"])
    (out / "timings.json").write_text(json.dumps(timings, indent=1, sort_keys=True) + "\n")
    for name, r in report["scenarios"].items():
        print(f"scenario {name}: {r['overall']}")
    for ln in report["criteria"]:
        tag = "PASS" if ln["passed"] else "FAIL"
        extra = " [supplementary]" if ln["supplementary"] else ""
        print(f"{tag} criterion {ln['criterion']}: {ln['name']} = {ln['value']!r} "
              f"(threshold {ln['threshold']!r}){extra}")
    print(f"overall: {report['overall']}")
    return exit_code(report["overall"])


def cmd_list_checks(args) -> int:
    for c in CHECKS:
        print(f"{c:18} {CHECK_HELP[c]}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "verify-all": cmd_verify_all, "list-checks": cmd_list_checks}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GapVerifyError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
