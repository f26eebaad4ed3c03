"""Command-line entry point ``cavcli``.

``cavcli run <scenario>`` validates a scenario file (or a bundled scenario
name), runs its checks in declaration order and writes
``<name>.report.txt`` and ``<name>.results.json`` to the output directory.
Exit codes: 0 when every non-vacuous check passes, 1 on a failed check,
2 on an input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Any

from . import __version__
from .checks import CheckResult, RunOptions, run_check
from .scenario import Scenario, ScenarioError, load_scenario

SCHEMA = "cavkit-results/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def bundled_scenarios() -> dict[str, Path]:
    """Bundled scenario names mapped to their files."""
    root = resources.files("cavkit") / "scenarios"
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda q: q.name)
            if p.name.endswith(".toml")}


def _resolve(target: str) -> Path:
    p = Path(target)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if target in bundled:
        return bundled[target]
    raise ScenarioError(f"no scenario file {target!r} and no bundled scenario of that name "
                        f"(bundled: {', '.join(bundled)})")


# ---------------------------------------------------------------- formatting


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json(v: Any, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if v is None or isinstance(v, bool):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v) if math.isfinite(v) else json.dumps(fmt_float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json(x, indent + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in v):
            return "[" + ", ".join(_json(x) for x in v) + "]"
        return "[\n" + ",\n".join(inner + _json(x, indent + 1) for x in v) + "\n" + pad + "]"
    return json.dumps(str(v))


def _text(v: Any) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_text(x) for x in v) + ")"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_text(x)}" for k, x in v.items()) + "}"
    return str(v)


def _result_dict(r: CheckResult, timing: bool) -> dict:
    return {"name": r.name, "type": r.type, "verdict": r.verdict, "gap": r.gap,
            "tolerance": r.tolerance, "witness": r.witness, "message": r.message or None,
            "details": r.details, "timing": r.timing if timing else None}


def exit_code(results: list[CheckResult]) -> int:
    return EXIT_FAIL if any(r.failed for r in results) else EXIT_OK


def _summary(results: list[CheckResult]) -> dict:
    return {v: sum(r.verdict == v for r in results) for v in ("pass", "fail", "vacuous", "error")}


def render_text(sc: Scenario, results: list[CheckResult], timing: bool) -> str:
    lines = [f"scenario: {sc.name}", f"cavkit: {__version__}"]
    if sc.description:
        lines.append(f"description: {sc.description}")
    lines.append("")
    for i, r in enumerate(results, 1):
        lines.append(f"== [{i}] {r.name} ({r.type})")
        lines.append(f"verdict: {r.verdict.upper()}")
        if r.message:
            lines.append(f"message: {r.message}")
        lines.append(f"gap: {_text(r.gap)}")
        lines.append(f"tolerance: {_text(r.tolerance)}")
        lines.append(f"witness: {_text(r.witness)}")
        for k, v in r.details.items():
            lines.append(f"  {k}: {_text(v)}")
        if timing:
            lines.append(f"time: {r.timing:.3f}s")
        lines.append("")
    s = _summary(results)
    lines.append("summary: " + ", ".join(f"{k} {v}" for k, v in s.items()))
    lines.append(f"exit code: {exit_code(results)}")
    return "\n".join(lines) + "\n"


def render_json(sc: Scenario, results: list[CheckResult], opts: RunOptions, timing: bool) -> str:
    doc = {
        "schema": SCHEMA,
        "version": __version__,
        "scenario": sc.name,
        "options": {"tol_scale": opts.tol_scale, "seed": opts.seed, "max_cells": opts.max_cells},
        "exit_code": exit_code(results),
        "summary": _summary(results),
        "checks": [_result_dict(r, timing) for r in results],
    }
    return _json(doc) + "\n"


# ---------------------------------------------------------------- commands


def run_scenario(path, out_dir, opts: RunOptions = RunOptions(), checks: list[str] | None = None,
                 timing: bool = False, echo=print) -> int:
    """Validate, run and report one scenario; returns the exit code.

    ``checks`` filters by check name or type.  Input errors are echoed and
    give exit code 2 without writing reports.
    """
    try:
        sc = load_scenario(_resolve(str(path)), opts.max_cells)
        selected = sc.checks
        if checks:
            known = {c.name for c in sc.checks} | {c.type for c in sc.checks}
            unknown = [c for c in checks if c not in known]
            if unknown:
                raise ScenarioError(f"--checks names no check of this scenario: {', '.join(unknown)}")
            selected = [c for c in sc.checks if c.name in checks or c.type in checks]
    except ScenarioError as e:
        echo(f"input error: {e}")
        return EXIT_INPUT
    results = []
    for c in selected:
        r = run_check(c, opts)
        results.append(r)
        echo(f"{r.verdict.upper():7s} {c.name} ({c.type})" + (f": {r.message}" if r.message else ""))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{sc.name}.report.txt").write_text(render_text(sc, results, timing), encoding="utf-8")
    (out / f"{sc.name}.results.json").write_text(render_json(sc, results, opts, timing), encoding="utf-8")
    code = exit_code(results)
    echo(f"{sc.name}: exit {code}; reports in {out}")
    return code


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavcli", description="Scenario-driven convex analysis checks.")
    ap.add_argument("--version", action="version", version=f"cavcli {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or bundled scenario")
    run.add_argument("scenario", help="path to a .toml scenario or a bundled scenario name")
    run.add_argument("--out", default="cavcli-reports", help="report directory")
    run.add_argument("--tol-scale", type=float, default=1.0,
                     help="multiply every discretisation tolerance by this factor")
    run.add_argument("--checks", default=None, help="comma-separated check names or types")
    run.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    run.add_argument("--max-cells", type=int, default=1 << 22, help="product-grid size cap")
    run.add_argument("--timing", action="store_true", help="record run times in the reports")
    sub.add_parser("list", help="list bundled scenarios")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, p in bundled_scenarios().items():
            print(name)
        return EXIT_OK
    if not (args.tol_scale > 0 and math.isfinite(args.tol_scale)):
        print("input error: --tol-scale must be a positive number")
        return EXIT_INPUT
    if args.max_cells < 1:
        print("input error: --max-cells must be positive")
        return EXIT_INPUT
    checks = [c.strip() for c in args.checks.split(",") if c.strip()] if args.checks else None
    opts = RunOptions(args.tol_scale, args.seed, args.max_cells)
    return run_scenario(args.scenario, args.out, opts, checks, args.timing)


if __name__ == "__main__":
    sys.exit(main())
