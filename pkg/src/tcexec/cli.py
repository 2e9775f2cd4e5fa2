"""Command-line front end.

    tcexec solve CONFIG -o DIR [--cutoff EPS] [--steps N]
    tcexec simulate CONFIG -o DIR [--paths N] [--seed S] [--emit-paths K] [--steps N]
    tcexec validate [--level quick|full] [-o DIR]
    tcexec figures -o DIR

``CONFIG`` is a JSON file or ``builtin:NAME`` for a shipped demo config.
Exit codes: 0 success, 1 bad input, 2 solver or simulation failure,
3 failed validation or figure self-check.  Every command that writes files
finishes by writing ``manifest.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .coeffs import SolverError, solve
from .params import ConfigError, TimeGrid, builtin_config_text, load_config

log = logging.getLogger("tcexec")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _read_config(ref: str, steps: int | None):
    if ref.startswith("builtin:"):
        text = builtin_config_text(ref.split(":", 1)[1])
    else:
        try:
            text = Path(ref).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", ref) from None
    params = load_config(text)
    if steps is not None:
        params = replace(params, horizon=TimeGrid(params.T, steps))
    return params


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _manifest(outdir: Path, args, files: list[str], started: float) -> None:
    _dump_json(outdir / "manifest.json", {
        "command": args.command,
        "config": getattr(args, "config", None),
        "seed": getattr(args, "seed", None),
        "output_dir": str(outdir),
        "artifacts": files,
        "version": __version__,
        "duration_s": round(time.perf_counter() - started, 3),
    })


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args, started) -> int:
    params = _read_config(args.config, args.steps)
    table = solve(params, args.cutoff)
    out = _outdir(args.output_dir)
    table.write_csv(out / "coeffs.csv")
    log.info("solved %s on %d steps, cutoff %.3g", params.model, params.horizon.n_steps, table.cutoff)
    _manifest(out, args, ["coeffs.csv"], started)
    return EXIT_OK


def cmd_simulate(args, started) -> int:
    from .sim import simulate_batch, summarize
    from .strategy import make_rule

    params = _read_config(args.config, args.steps)
    if args.paths < 1:
        raise UsageError("--paths must be >= 1")
    if not 0 <= args.emit_paths <= args.paths:
        raise UsageError("--emit-paths must lie in [0, --paths]")
    if args.seed < 0:
        raise UsageError("--seed must be >= 0")
    rule = make_rule(params, cutoff=args.cutoff)
    seeds = range(args.seed, args.seed + args.paths)
    batch = simulate_batch(params, rule, seeds)
    kept = simulate_batch(params, rule, seeds[: args.emit_paths], keep_paths=True).paths if args.emit_paths else []

    summary = {"model": params.model, "seed": args.seed, "n_steps": params.horizon.n_steps}
    if args.paths >= 2:
        summary.update(summarize(batch.cost, params.mu).as_dict())
    else:
        summary.update(n_paths=1, mean_cost=float(batch.cost[0]))
    summary["all_liquidated"] = bool(np.all(batch.X_final == 0.0))
    summary["clamped_steps"] = int(batch.clamped_steps.sum())

    out = _outdir(args.output_dir)
    files = ["summary.json"]
    _dump_json(out / "summary.json", summary)
    for rec in kept:
        name = f"path_{rec.seed}.csv"
        rec.write_csv(out / name)
        files.append(name)
    _manifest(out, args, files, started)
    return EXIT_OK


def cmd_validate(args, started) -> int:
    from . import validate

    checks = validate.run_checks(args.level)
    for c in checks:
        print(c.line())
    rep = validate.report(checks, args.level)
    if args.output_dir:
        out = _outdir(args.output_dir)
        _dump_json(out / "validation_report.json", rep)
        _manifest(out, args, ["validation_report.json"], started)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_figures(args, started) -> int:
    from .figures import build_figures, write_figures

    data = build_figures()
    out = _outdir(args.output_dir)
    files = write_figures(data, out)
    for c in data.checks:
        print(c.line())
    _manifest(out, args, files, started)
    if not data.passed:
        print("figure self-checks failed", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tcexec", description="Time-consistent mean-variance execution solver.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve the coefficient ODEs and write coeffs.csv")
    s.add_argument("config", help="config JSON path or builtin:NAME")
    s.add_argument("-o", "--output-dir", required=True)
    s.add_argument("--cutoff", type=float, default=None, help="terminal cutoff eps (default max(1e-3 T, 2 dt))")
    s.add_argument("--steps", type=int, default=None, help="override n_steps")

    m = sub.add_parser("simulate", help="Monte Carlo the feedback strategy")
    m.add_argument("config")
    m.add_argument("-o", "--output-dir", required=True)
    m.add_argument("--paths", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--emit-paths", type=int, default=0, metavar="K", help="write the first K paths as CSV")
    m.add_argument("--cutoff", type=float, default=None)
    m.add_argument("--steps", type=int, default=None)

    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("-o", "--output-dir", default=None)

    f = sub.add_parser("figures", help="write plot-ready CSVs for the demo figures")
    f.add_argument("-o", "--output-dir", required=True)
    return p


_COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "validate": cmd_validate, "figures": cmd_figures}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        return _COMMANDS[args.command](args, started)
    except (ConfigError, UsageError) as exc:
        print(f"tcexec: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, FloatingPointError) as exc:
        print(f"tcexec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
