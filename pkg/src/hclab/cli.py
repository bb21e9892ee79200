"""Command-line scenario runner.

``hclab list [--json]`` prints the built-in scenarios.  ``hclab run`` resolves
a configuration (defaults, then ``--config``, then flags), runs it and writes
``report.json``, ``meta.json`` and ``curves/*.csv`` under ``--out``.

Exit codes: 0 all checks pass, 1 a tolerance check failed (or the run hit a
numerical error), 2 the configuration is invalid.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _kernels, scenarios
from .errors import ConfigInvalidError, LabError
from .recurrence import thread_cap

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_plain) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hclab", description="Higher-order Cauchy problem lab: scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="list built-in scenarios")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("--scenario", help="scenario name (overrides the config file)")
    p_run.add_argument("--config", type=Path, help="JSON configuration file")
    p_run.add_argument("--out", type=Path, default=None, help="output directory (default: runs/<scenario>)")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--t-max", type=float, dest="t_max")
    p_run.add_argument("--dt", type=float)
    p_run.add_argument("--grid-n", type=int, dest="grid_n", help="backend grid size N")
    p_run.add_argument("--report-format", choices=["json", "csv", "both"], dest="report_format")
    return parser


def _section(cfg: dict, key: str) -> dict:
    sec = cfg.setdefault(key, {})
    if not isinstance(sec, dict):
        raise ConfigInvalidError(f"{key}: must be an object", path=key)
    return sec


def _user_config(args) -> dict:
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigInvalidError(f"--config: cannot read {args.config}: {exc.strerror}", path="--config")
        except json.JSONDecodeError as exc:
            raise ConfigInvalidError(f"--config: not valid JSON ({exc.msg} at line {exc.lineno})", path="--config")
        if not isinstance(cfg, dict):
            raise ConfigInvalidError("<root>: configuration must be a JSON object", path="<root>")
    if args.scenario is not None:
        cfg["scenario"] = args.scenario
    if "scenario" not in cfg:
        raise ConfigInvalidError("scenario: no scenario given (use --scenario or the config file)", path="scenario")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.t_max is not None:
        _section(cfg, "evolution")["t_max"] = args.t_max
    if args.dt is not None:
        _section(cfg, "evolution")["dt"] = args.dt
    if args.grid_n is not None:
        name = cfg["scenario"]
        if name not in ("example21", "example23"):
            raise ConfigInvalidError(f"--grid-n: scenario {name!r} has no spatial grid", path="--grid-n")
        _section(cfg, "backend")["N"] = args.grid_n
    if args.report_format is not None:
        cfg["report_format"] = args.report_format
    return cfg


def _cmd_list(args) -> int:
    rows = scenarios.describe_scenarios()
    if args.json:
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
    else:
        width = max(len(r["name"]) for r in rows)
        for r in rows:
            sys.stdout.write(f"{r['name']:<{width}}  {r['description']}\n")
    return EXIT_OK


def _write(out: Path, fmt: str, report: dict, curves: dict[str, str], meta: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both"):
        (out / "report.json").write_text(_dump(report), encoding="utf-8")
    if fmt in ("csv", "both"):
        cdir = out / "curves"
        cdir.mkdir(exist_ok=True)
        for name in sorted(curves):
            (cdir / name).write_text(curves[name], encoding="utf-8")
    (out / "meta.json").write_text(_dump(meta), encoding="utf-8")


def run_scenario(user_cfg: dict, out: Path | None = None) -> int:
    """Resolve, run and write one scenario; returns the exit code."""
    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    cfg = scenarios.resolve_config(user_cfg)
    out = out if out is not None else Path("runs") / cfg["scenario"]
    error = None
    try:
        result = scenarios.run(cfg)
        checks = [c.as_dict() for c in result.checks]
        passed = result.passed
        results, curves = result.results, result.curves
    except LabError as exc:
        error = f"{type(exc).__name__}: {exc}"
        checks, passed, results, curves = [], False, {}, {}
    report = {
        "scenario": cfg["scenario"],
        "seed": cfg["seed"],
        "config": cfg,
        "checks": checks,
        "results": results,
        "passed": passed,
        "error": error,
    }
    if "conditionHolds" in results:
        report["conditionHolds"] = results["conditionHolds"]
    meta = {
        "startedAt": started.isoformat(),
        "finishedAt": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "elapsedSeconds": round(time.perf_counter() - t0, 3),
        "kernelBackend": _kernels.BACKEND,
        "threads": thread_cap(),
        "hclab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    _write(out, cfg["report_format"], report, curves, meta)
    for c in checks:
        mark = "ok  " if c["passed"] else "FAIL"
        sys.stdout.write(f"{mark} {c['name']}: {c['value']} ({c['op']} {c['threshold']})\n")
    if error:
        sys.stdout.write(f"FAIL {error}\n")
    sys.stdout.write(f"{cfg['scenario']}: {'passed' if passed else 'failed'}; report in {out}\n")
    return EXIT_OK if passed else EXIT_TOLERANCE


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list(args)
    try:
        user = _user_config(args)
        return run_scenario(user, args.out)
    except ConfigInvalidError as exc:
        sys.stderr.write(f"config invalid: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
