"""Command-line front end.

    dgrkit analyze SYSTEM.json [--out DIR]
    dgrkit simulate CONFIG.json [--out DIR] [--seed N] [--alpha F]
    dgrkit bounds SYSTEM.json [--t N] [--alpha F] [--trajectory CSV] [--out DIR]
    dgrkit instability SYSTEM.json [--t N] [--restarts R] [--seed S] [--out DIR]

A system file is JSON ``{"A": [[..]], "B": [[..]], "noise_std": 0.0, "labels": [..]}``.
A simulation config holds the :class:`~dgrkit.harness.ScenarioConfig` fields
plus either an inline ``"system"`` object or a ``"system_file"`` path
(relative to the config file).

Exit codes: 0 success, 2 unreadable or malformed input, 3 numeric or
precondition failure. ``DGRKIT_LOG`` in {error, info, debug} sets verbosity.
"""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bounds import estimate_instability, instability_bounds, normalized_directions, trajectory_bound_series
from .errors import DgrkitError, InvalidInput
from .harness import ScenarioConfig, run_scenario
from .regan import analyze
from .sysmodel import LtiSystem

log = logging.getLogger("dgrkit")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
CONFIG_KEYS = {
    "system", "system_file", "controller", "steps", "alpha", "perturb_std", "noise_std",
    "x0", "x0_std", "switch_step", "seed", "lqr_Q", "lqr_R",
}


class InputError(Exception):
    """Unreadable or malformed input file; carries a ``file:line:col`` style location."""


def _load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _matrix(obj, key, where):
    if key not in obj:
        raise InputError(f"{where}: missing key {key!r}")
    rows = obj[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError(f"{where}: {key!r} must be a non-empty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or 0 in widths:
        raise InputError(f"{where}: {key!r} rows have unequal or zero length")
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {key!r} has non-numeric entries") from exc
    if not np.all(np.isfinite(M)):
        raise InputError(f"{where}: {key!r} has non-finite entries")
    return M


def system_from_obj(obj, where="system"):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected a JSON object")
    A = _matrix(obj, "A", where)
    B = _matrix(obj, "B", where)
    if A.shape[0] != A.shape[1]:
        raise InputError(f"{where}: A must be square, got {A.shape[0]}x{A.shape[1]}")
    if B.shape[0] != A.shape[0]:
        raise InputError(f"{where}: B has {B.shape[0]} rows, A has {A.shape[0]}")
    try:
        return LtiSystem(A, B, float(obj.get("noise_std", 0.0)), tuple(obj.get("labels", ())))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_system(path):
    return system_from_obj(_load_json(path), str(path))


def load_config(path, seed=None, alpha=None):
    path = Path(path)
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    unknown = set(obj) - CONFIG_KEYS
    if unknown:
        raise InputError(f"{path}: unknown keys {sorted(unknown)}")
    if ("system" in obj) == ("system_file" in obj):
        raise InputError(f"{path}: give exactly one of 'system' or 'system_file'")
    if "system" in obj:
        system = system_from_obj(obj["system"], f"{path}: system")
    else:
        system = load_system(path.parent / obj["system_file"])
    kw = {k: v for k, v in obj.items() if k not in ("system", "system_file")}
    for key in ("lqr_Q", "lqr_R"):
        if kw.get(key) is not None:
            kw[key] = _matrix(kw, key, str(path))
    if kw.get("x0") is not None:
        kw["x0"] = np.asarray(kw["x0"], dtype=float).reshape(-1)
    if seed is not None:
        kw["seed"] = seed
    if alpha is not None:
        kw["alpha"] = alpha
    try:
        return ScenarioConfig(system=system, **kw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps_json(obj):
    # repr-based float output is the shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _emit(text, out_dir, name):
    if out_dir is None:
        sys.stdout.write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def trajectory_csv(log_):
    n = log_.x.shape[1]
    m = log_.u.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)]
    w.writerow(header + ["norm_x", "norm_z", "rank_X", "bound", "phase"])
    for t in range(len(log_)):
        row = [t] + list(log_.x[t]) + list(log_.u[t])
        row += [log_.norm_x[t], log_.norm_z[t], int(log_.rank_X[t]), log_.bound[t], log_.phase[t]]
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_trajectory(path, n):
    """State history ``X`` (n x T1) from a trajectory CSV, cut at the end of the DGR phase."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from exc
    cols = [f"x_{i + 1}" for i in range(n)]
    if not rows or any(c not in rows[0] for c in cols):
        raise InputError(f"{path}: expected columns {cols[0]}..{cols[-1]}")
    xs = []
    for lineno, row in enumerate(rows, start=2):
        try:
            xs.append([float(row[c]) for c in cols])
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}:{lineno}: non-numeric state entry") from exc
        # the first state handed to a non-DGR phase is still covered by the bound
        if len(xs) > 1 and row.get("phase", "dgr") not in ("dgr", "fdgr"):
            break
    return np.array(xs).T


def cmd_analyze(args):
    rep = analyze(load_system(args.system)).to_dict()
    keys = (
        "rho_A", "rho_Atilde", "regularizable", "contractible",
        "stabilizable", "detectable_transpose", "certificate_present",
    )
    _emit(dumps_json({k: rep[k] for k in keys}), args.out, "analysis.json")


def cmd_simulate(args):
    cfg = load_config(args.config, seed=args.seed, alpha=args.alpha)
    log_, summary = run_scenario(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(trajectory_csv(log_))
    (out / "summary.json").write_text(dumps_json(summary))
    log.info("wrote %s and %s", out / "trajectory.csv", out / "summary.json")


def cmd_bounds(args):
    system = load_system(args.system)
    T = system.n if args.t is None else args.t
    M = [instability_bounds(system.A, t) for t in range(1, T + 1)]
    L = None
    if args.trajectory:
        X = read_trajectory(args.trajectory, system.n)
        zbar, wbar = normalized_directions(X)
        L = trajectory_bound_series(system, args.alpha, zbar[:-1], wbar[:-1]).L
    last = T if L is None else max(T, L.size - 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "M_lower", "M_upper", "L"])
    for t in range(1, last + 1):
        lo, up = M[t - 1] if t <= T else (None, None)
        lt = L[t] if L is not None and t < L.size else None
        w.writerow([t, _fmt(lo), _fmt(up), _fmt(lt)])
    _emit(buf.getvalue(), args.out, "bounds.csv")


def cmd_instability(args):
    system = load_system(args.system)
    t = system.n if args.t is None else args.t
    est = estimate_instability(system.A, t, restarts=args.restarts, seed=args.seed)
    rep = {
        "t": est.order,
        "estimate": est.value,
        "lower": est.analytic_lower,
        "upper": est.analytic_upper,
        "frame": est.frame,
    }
    _emit(dumps_json(rep), args.out, "instability.json")


def build_parser():
    p = argparse.ArgumentParser(prog="dgrkit", description="Data-guided regulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="regularizability report for a system file")
    a.add_argument("system")
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run one closed-loop scenario")
    s.add_argument("config")
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="analytic instability bounds and the realized trajectory bound")
    b.add_argument("system")
    b.add_argument("--t", type=int, default=None)
    b.add_argument("--alpha", type=float, default=0.0)
    b.add_argument("--trajectory", default=None)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bounds)

    i = sub.add_parser("instability", help="estimate the instability number of order t")
    i.add_argument("system")
    i.add_argument("--t", type=int, default=None)
    i.add_argument("--restarts", type=int, default=8)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default=None)
    i.set_defaults(func=cmd_instability)
    return p


def _setup_logging():
    level = os.environ.get("DGRKIT_LOG", "error").strip().upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already; keep 0 for --help
        return int(exc.code or 0)
    try:
        args.func(args)
    except InputError as exc:
        print(f"dgrkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidInput as exc:
        print(f"dgrkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DgrkitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"dgrkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
