"""Command-line front end: ``leray <command> --scenario <path|name> [--out report.json]``."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import acceptance, kernels
from . import scenario as sc
from .commands import COMMANDS, Context
from .geometry import DegenerateGradient
from .ratcalc import NonIntegrable, PoleProximity
from .residues import EngineScopeError, RootFindingError, TubeOverlap
from .transforms import DualViolation, PoleOnBoundary, ScenarioInvalid

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

VALIDATION_ERRORS = (
    sc.ScenarioError,
    ScenarioInvalid,
    DualViolation,
    PoleOnBoundary,
    EngineScopeError,
    TubeOverlap,
    DegenerateGradient,
    PoleProximity,
    NonIntegrable,
    RootFindingError,
    KeyError,
    ValueError,
)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leray", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS) + ["selftest", "list"])
    p.add_argument("--scenario", help="scenario JSON file or the name of a bundled scenario")
    p.add_argument("--out", help="report path (JSON); a CSV mirror is written next to it")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-kernel", metavar="CSV", help="append kernel values per node to this CSV")
    p.add_argument("--t-grid", help="comma-separated t values overriding the scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-repro", action="store_true", help="selftest: skip the second run (criterion 9)")
    return p


def _load(spec: str) -> dict:
    if spec is None:
        raise sc.ScenarioError("--scenario is required")
    if os.path.exists(spec):
        return sc.load(spec)
    if spec in sc.builtin_names():
        return sc.builtin(spec)
    raise sc.ScenarioError(f"no scenario file or bundled scenario named {spec!r}")


def write_report(report: dict, out: str | None):
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)
    stem = out[:-5] if out.endswith(".json") else out
    with open(stem + ".csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value_re", "value_im", "oracle_re", "oracle_im", "error", "tol", "pass"])
        for c in report.get("checks", []):
            v, o = c["value"], c["oracle"]
            v = v if isinstance(v, list) else [v, 0.0]
            o = o if isinstance(o, list) else [o, 0.0]
            w.writerow([c["name"], repr(v[0]), repr(v[1]), repr(o[0]), repr(o[1]), repr(c["error"]), repr(c["tol"]),
                        c["pass"]])


def _error_report(command: str, exc: Exception) -> dict:
    return {"schema_version": sc.SCHEMA_VERSION, "command": command, "pass": False,
            "error": {"type": type(exc).__name__, "message": str(exc)}, "checks": []}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name in sc.builtin_names():
            print(name)
        return EXIT_PASS
    if args.command == "selftest":
        seed = 0 if args.seed is None else args.seed
        crits, report = acceptance.selftest(seed, args.workers, repro=not args.no_repro)
        for c in crits:
            print(c.line(), file=sys.stderr)
        write_report(report, args.out)
        return EXIT_PASS if all(c.passed for c in crits) else EXIT_FAIL
    try:
        doc = _load(args.scenario)
        sc.check_schema(doc)
        seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
        t_grid = None
        if args.t_grid:
            t_grid = tuple(sorted((float(x) for x in args.t_grid.split(",")), reverse=True))
        ctx = Context(seed=seed, workers=args.workers, t_grid=t_grid, dump_kernel=args.dump_kernel)
        outcome = COMMANDS[args.command](doc, ctx)
    except VALIDATION_ERRORS as exc:
        write_report(_error_report(args.command, exc), args.out)
        print(f"validation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = {
        "schema_version": sc.SCHEMA_VERSION,
        "command": args.command,
        "scenario": doc.get("name", args.scenario),
        "scenario_digest": sc.digest(doc),
        "seed": seed,
        "t_grid_override": list(t_grid) if t_grid else None,
        "pass": outcome.passed,
        "checks": outcome.checks,
        "tolerances": {c["name"]: c["tol"] for c in outcome.checks},
        "data": outcome.data,
    }
    write_report(report, args.out)
    failed = [c["name"] for c in outcome.checks if not c["pass"]]
    print(f"{args.command}: {len(outcome.checks) - len(failed)}/{len(outcome.checks)} checks pass"
          f" (backend {kernels.backend()})", file=sys.stderr)
    return EXIT_PASS if not failed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
