"""Command-line driver for single solves and convergence sweeps.

Examples::

    fracvolve --problem example1 --alpha 0.5 --tau 0.1,0.05,0.025,0.0125 --cells 512
    fracvolve --problem example2 --alpha 0.1,0.5 --coupled s=1/5,1/10,1/20 --rule h=sqrt2*s,tau=s

Outputs go to ``--out`` (default ``$FRACVOLVE_OUT`` or ``./fracvolve_out``):
``rates_<problem>_<norm>.csv`` for every norm, ``summary_<problem>.json`` and
optional snapshot CSVs.
"""
import argparse
import ast
from dataclasses import dataclass
from fractions import Fraction
import importlib
import json
import math
import os
from pathlib import Path
import sys
import tempfile

from .analysis import (NORMS, PROBLEMS, SweepPoint, coupled_sweep, run_convergence_study,
                       spatial_sweep, temporal_sweep)
from .solver import INIT_MODES, LINEAR_SOLVERS, SolverError

CONFIG_KEYS = {"problem", "alpha", "cells", "tau", "coupled", "rule", "init", "solver",
               "jobs", "out", "snapshot", "dry_run"}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str
    alphas: tuple
    points: tuple
    init_mode: str = "interpolate"
    linear_solver: str = "direct"
    out: Path = Path("fracvolve_out")
    snapshots: tuple = ()
    jobs: int = 1
    dry_run: bool = False


def _number(text):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def _numbers(value):
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [_number(str(v)) for v in value]
    items = [v for v in str(value).split(",") if v.strip()]
    if not items:
        raise UsageError("empty list")
    return [_number(v) for v in items]


def _integers(value, what):
    out = []
    for v in _numbers(value):
        if v != int(v) or v < 1:
            raise UsageError(f"{what} must be positive integers, got {v}")
        out.append(int(v))
    return out


def _levels(value):
    out = []
    for v in _numbers(value):
        if v != int(v) or v < 0:
            raise UsageError(f"snapshot levels must be non-negative integers, got {v}")
        out.append(int(v))
    return out


_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name,
                  ast.Load, ast.Mult, ast.Div, ast.Add, ast.Sub, ast.USub, ast.Pow)


def _rule_expr(text):
    """Compile a tiny arithmetic expression in ``s`` (and ``sqrt2``) to a function."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse rule expression {text!r}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise UsageError(f"unsupported construct in rule expression {text!r}")
        if isinstance(node, ast.Name) and node.id not in ("s", "sqrt2"):
            raise UsageError(f"unknown name {node.id!r} in rule expression")
    code = compile(tree, "<rule>", "eval")
    return lambda s: float(eval(code, {"__builtins__": {}}, {"s": s, "sqrt2": math.sqrt(2.0)}))


def _parse_rule(text):
    parts = {}
    for item in str(text).split(","):
        if "=" not in item:
            raise UsageError(f"rule entries look like h=<expr> or tau=<expr>, got {item!r}")
        key, expr = item.split("=", 1)
        key = key.strip()
        if key not in ("h", "tau") or key in parts:
            raise UsageError(f"bad or repeated rule key {key!r}")
        parts[key] = _rule_expr(expr)
    if set(parts) != {"h", "tau"}:
        raise UsageError("rule must define both h and tau")
    return parts["h"], parts["tau"]


def resolve_problem(name):
    """Registered problem factory, or ``module:function`` for user plugins."""
    if name in PROBLEMS:
        return PROBLEMS[name]
    if ":" in name:
        mod, func = name.split(":", 1)
        try:
            return getattr(importlib.import_module(mod), func)
        except (ImportError, AttributeError) as exc:
            raise UsageError(f"cannot load problem plugin {name!r}: {exc}") from exc
    raise UsageError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)} or module:function")


def _problem_dim(factory, alpha):
    return factory(alpha).dim


def _build_sweep(values, dim):
    if values.get("coupled") is not None:
        coupled = str(values["coupled"])
        if not coupled.startswith("s="):
            raise UsageError("--coupled expects s=<list>")
        if values.get("rule") is None:
            raise UsageError("--coupled needs --rule")
        s_list = _numbers(coupled[2:])
        h_of_s, tau_of_s = _parse_rule(values["rule"])
        try:
            return coupled_sweep(s_list, h_of_s, tau_of_s, dim=dim)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if values.get("cells") is None or values.get("tau") is None:
        raise UsageError("give --cells and --tau, or --coupled with --rule")
    cells = _integers(values["cells"], "cells")
    taus = _numbers(values["tau"])
    if any(t <= 0 for t in taus):
        raise UsageError("tau must be positive")
    if len(cells) == 1:
        return temporal_sweep(cells[0], taus)
    if len(taus) == 1:
        return spatial_sweep(cells, taus[0], dim)
    if len(cells) != len(taus):
        raise UsageError("--cells and --tau lists must have equal length when both have several entries")
    c = math.sqrt(2.0) if dim == 2 else 1.0
    return [SweepPoint(n, t, c / n, f"cells={n};tau={t:g}") for n, t in zip(cells, taus)]


def build_parser():
    p = argparse.ArgumentParser(prog="fracvolve", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="JSON file with default values (keys as the long flags)")
    p.add_argument("--problem", help="example1, example2 or module:function")
    p.add_argument("--alpha", help="comma separated fractional orders in (0, 1)")
    p.add_argument("--cells", help="cells per direction, comma separated")
    p.add_argument("--tau", help="time steps, comma separated (fractions allowed)")
    p.add_argument("--coupled", help="coupled sweep parameter, e.g. s=1/5,1/10")
    p.add_argument("--rule", help="coupling rule, e.g. h=sqrt2*s,tau=s")
    p.add_argument("--init", choices=INIT_MODES)
    p.add_argument("--solver", choices=LINEAR_SOLVERS)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="output directory (default $FRACVOLVE_OUT or ./fracvolve_out)")
    p.add_argument("--snapshot", help="time levels to export as CSV, comma separated")
    p.add_argument("--dry-run", action="store_true", default=None,
                   help="print the resolved sweep and exit")
    return p


def parse_config(argv=None, config_file=None):
    """Merge an optional JSON config with command-line flags (flags win)."""
    args = build_parser().parse_args(argv)
    values = {}
    path = args.config or config_file
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in CONFIG_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v

    if "problem" not in values:
        raise UsageError("--problem is required")
    factory = resolve_problem(values["problem"])
    if "alpha" not in values:
        raise UsageError("--alpha is required")
    alphas = _numbers(values["alpha"])
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise UsageError(f"alpha must lie in (0, 1) for the L1 scheme, got {a}")
    points = _build_sweep(values, _problem_dim(factory, alphas[0]))
    if not points:
        raise UsageError("empty sweep")
    for pt in points:
        if abs(1.0 / pt.tau - round(1.0 / pt.tau)) > 1e-8 / pt.tau:
            raise UsageError(f"tau={pt.tau} does not divide the final time T=1")

    init = values.get("init", "interpolate")
    solver = values.get("solver", "direct")
    if init not in INIT_MODES or solver not in LINEAR_SOLVERS:
        raise UsageError("invalid init mode or solver")
    jobs = int(values.get("jobs", 1))
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    out = Path(values.get("out") or os.environ.get("FRACVOLVE_OUT") or "fracvolve_out")
    snaps = tuple(_levels(values["snapshot"])) if values.get("snapshot") not in (None, "") else ()
    return RunConfig(values["problem"], tuple(alphas), tuple(points), init, solver, out,
                     snaps, jobs, bool(values.get("dry_run", False)))


def describe(config, stream=None):
    """Print the resolved sweep matrix."""
    stream = stream or sys.stdout
    for a in config.alphas:
        for p in config.points:
            stream.write(f"alpha={a:g} cells={p.cells} tau={p.tau:.10g} N={p.N} ({p.label})\n")


def _safe_name(name):
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


def _write_all(outdir, files):
    """Write every file or none: temporaries first, then atomic renames."""
    outdir.mkdir(parents=True, exist_ok=True)
    temps = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".tmp-", suffix=".part")
            temps.append((tmp, outdir / name))
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
        for tmp, final in temps:
            os.replace(tmp, final)
    except OSError:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def run(config, stream=None):
    """Execute a :class:`RunConfig`; returns the process exit status."""
    stream = stream or sys.stdout
    if config.dry_run:
        describe(config, stream)
        return 0
    factory = resolve_problem(config.problem)
    try:
        table = run_convergence_study(factory, list(config.points), list(config.alphas),
                                      config.init_mode, config.linear_solver, config.jobs,
                                      name=config.problem, snapshots=config.snapshots)
    except (SolverError, ValueError) as exc:
        sys.stderr.write(f"fracvolve: solve failed for problem {config.problem}: {exc}\n")
        return 1
    tag = _safe_name(config.problem)
    files = {f"rates_{tag}_{norm}.csv": table.to_csv(norm) for norm in NORMS}
    files[f"summary_{tag}.json"] = json.dumps(table.summary(), indent=2, sort_keys=True) + "\n"
    for a in table.alphas:
        for i, rep in enumerate(table.reports[a]):
            for n, text in rep.snapshots.items():
                files[f"snapshot_{tag}_a{a:g}_p{i}_n{n}.csv"] = text
    try:
        _write_all(config.out, files)
    except OSError as exc:
        sys.stderr.write(f"fracvolve: cannot write to {config.out}: {exc}\n")
        return 1
    for norm in ("l2", "h1"):
        stream.write(f"[{norm}]\n" + table.to_csv(norm))
    return 0


def main(argv=None):
    try:
        config = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(f"fracvolve: error: {exc}\n")
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
