"""Command-line entry point: validate, feasible, solve, report, generate.

Exit codes: 0 success, 1 domain-negative (invalid graph, infeasible targets,
no convergence, failed conservation check), 2 input error, 3 internal
inconsistency. Every run writes a JSON run manifest to standard error (and to
``--manifest`` when given).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, feasibility
from .curvature import gauss_bonnet_report, totals
from .graph import (
    PatternError,
    PatternSyntaxError,
    PatternValidationError,
    build_pattern,
    decode,
    generate_torus_grid,
    read_pattern,
    serialize_pattern,
    validate,
)
from .schematic import render_svg
from .solver import InfeasibleTargetError, SolverConfig, solve
from .spherical import radius_of

log = logging.getLogger("circpat")

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
VERIFY_TOL = 1e-9
AREA_TOL = 1e-9
BALANCE_TOL = 1e-10


class InputError(Exception):
    pass


class Inconsistency(Exception):
    pass


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str):
    try:
        return read_pattern(_read_text(path))
    except PatternError as exc:
        raise InputError(str(exc)) from None


def _load_with_targets(path: str):
    g, targets = _load(path)
    if targets is None:
        raise InputError(f"{path}: no 'targets' field")
    return g, np.array([targets[f] for f in g.face_ids])


# -- commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    text = _read_text(args.input)
    try:
        g, _ = build_pattern(decode(text))
    except PatternSyntaxError as exc:
        raise InputError(str(exc)) from None
    report = validate(g)
    sys.stdout.write(dumps(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def _feasibility(g, t, method: str, verify: bool) -> feasibility.FeasibilityResult:
    try:
        result = feasibility.check(g, t, method)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if verify and g.n_faces <= feasibility.BRUTEFORCE_MAX_FACES:
        other = (
            feasibility.check_mincut(g, t)
            if result.method == "bruteforce"
            else feasibility.check_bruteforce(g, t)
        )
        if other.feasible != result.feasible or abs(other.min_slack - result.min_slack) > VERIFY_TOL:
            raise Inconsistency(
                f"bruteforce and mincut disagree: {result.to_dict()} vs {other.to_dict()}"
            )
    return result


def cmd_feasible(args) -> int:
    g, t = _load_with_targets(args.input)
    result = _feasibility(g, t, args.method, args.verify)
    sys.stdout.write(dumps(result.to_dict()))
    return EXIT_OK if result.feasible else EXIT_NEGATIVE


def _parse_init(spec: str, g):
    if spec == "subpattern":
        return spec
    kind, _, value = spec.partition(":")
    if kind == "uniform":
        try:
            return float(value)
        except ValueError:
            raise InputError(f"bad uniform init {spec!r}") from None
    if kind == "file":
        try:
            doc = json.loads(_read_text(value))
        except json.JSONDecodeError as exc:
            raise InputError(f"{value}: {exc}") from None
        k = doc.get("k", doc) if isinstance(doc, dict) else None
        if not isinstance(k, dict):
            raise InputError(f"{value}: expected an object of face -> curvature")
        return k
    raise InputError(f"unknown --init {spec!r} (use subpattern, uniform:K or file:PATH)")


def _write_trace(path: str, trace) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "residual", "contraction", "monotone_up", "monotone_down"])
    for n, rec in enumerate(trace.records, start=1):
        w.writerow([n, repr(rec.residual), repr(rec.contraction), int(rec.monotone_up), int(rec.monotone_down)])
    write_atomic(path, buf.getvalue())


def cmd_solve(args) -> int:
    text = _read_text(args.input)
    g, t = _load_with_targets(args.input)
    try:
        config = SolverConfig(
            mode=args.mode,
            tol_T=args.tol,
            max_outer=args.max_iter,
            init=_parse_init(args.init, g),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    args.resolved_config = {
        "mode": config.mode,
        "tol_T": config.tol_T,
        "tol_inner": config.tol_inner,
        "max_outer": config.max_outer,
        "init": args.init,
    }
    try:
        k, trace = solve(g, t, config)
    except InfeasibleTargetError as exc:
        sys.stdout.write(dumps(exc.result.to_dict()))
        return EXIT_NEGATIVE
    except ValueError as exc:
        raise InputError(str(exc)) from None

    if args.trace:
        _write_trace(args.trace, trace)
    report = gauss_bonnet_report(g, k)
    solution = {
        "pattern": str(Path(args.input).resolve()),
        "pattern_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
        "status": trace.status,
        "config": args.resolved_config,
        "targets": g.face_map(t),
        "k": k.as_dict(),
        "r": g.face_map(radius_of(k.values)),
        "trace": trace.summary(),
        "report": report.to_dict(),
    }
    _emit(dumps(solution), args.out)
    return EXIT_OK if trace.status == "converged" else EXIT_NEGATIVE


def conservation_checks(g, k: np.ndarray, r: np.ndarray, t: np.ndarray, tol_T: float):
    report = gauss_bonnet_report(g, k)
    target_residual = float(np.abs(totals(g, k) - t).max())
    radius_drift = float(np.abs(r - radius_of(k)).max())
    checks = {
        "area_two_ways": (report.area_residual, AREA_TOL),
        "bigon_balance": (report.bigon_balance_residual, BALANCE_TOL),
        "target_totals": (target_residual, tol_T),
        "radius_consistency": (radius_drift, 1e-12),
    }
    if report.gauss_bonnet_residual is not None:
        checks["global_gauss_bonnet"] = (report.gauss_bonnet_residual, AREA_TOL)
    out = {name: {"value": v, "tol": tol, "pass": bool(v < tol)} for name, (v, tol) in checks.items()}
    out["positive_bigons"] = {"value": float(report.bigon_area.min()), "pass": bool((report.bigon_area > 0).all())}
    radii_ok = bool(((report.radius > 0) & (report.radius < 0.5 * math.pi)).all())
    out["radii_in_range"] = {"pass": radii_ok}
    return report, out


def cmd_report(args) -> int:
    try:
        sol = json.loads(_read_text(args.solution))
        pattern_path = sol["pattern"]
        digest = sol["pattern_sha256"]
        k_map, r_map = sol["k"], sol["r"]
        tol_T = float(sol["config"]["tol_T"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{args.solution}: not a solution file ({exc})") from None
    text = _read_text(pattern_path)
    if hashlib.sha256(text.encode("utf-8")).hexdigest() != digest:
        raise InputError(f"solution is stale: {pattern_path} changed since it was solved")
    g, t = _load_with_targets(pattern_path)
    if set(k_map) != set(g.face_ids) or set(r_map) != set(g.face_ids):
        raise InputError("solution faces do not match the pattern")
    try:
        k = np.array([float(k_map[f]) for f in g.face_ids])
        r = np.array([float(r_map[f]) for f in g.face_ids])
        report, checks = conservation_checks(g, k, r, t, tol_T)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad curvature data: {exc}") from None
    ok = all(c["pass"] for c in checks.values())
    sys.stdout.write(dumps({"ok": ok, "checks": checks, "report": report.to_dict()}))
    if args.svg:
        write_atomic(args.svg, render_svg(g, k, report.radius))
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_generate(args) -> int:
    try:
        g = generate_torus_grid(args.n, args.theta)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    targets = None
    if args.k is not None:
        if not args.k > 0:
            raise InputError("--k must be > 0")
        targets = g.face_map(totals(g, np.full(g.n_faces, args.k)))
    elif args.target is not None:
        targets = {f: args.target for f in g.face_ids}
    _emit(serialize_pattern(g, targets), args.out)
    return EXIT_OK


# -- plumbing ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circpat", description=__doc__.splitlines()[0])
    parser.add_argument("--manifest", help="also write the run manifest to this path")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a pattern file")
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("feasible", help="check that the targets are admissible")
    p.add_argument("input")
    p.add_argument("--method", choices=["auto", "bruteforce", "mincut"], default="auto")
    p.add_argument("--verify", action="store_true", help="cross-check both methods where possible")
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("solve", help="run the curvature-adjustment iteration")
    p.add_argument("input")
    p.add_argument("--mode", choices=["jacobi", "gauss-seidel"], default="jacobi")
    p.add_argument("--tol", type=float, default=1e-10, help="sup-norm tolerance on totals")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--init", default="subpattern", help="subpattern | uniform:K | file:PATH")
    p.add_argument("--trace", help="write per-iteration CSV here")
    p.add_argument("--out", help="solution file (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="geometry and conservation checks for a solution")
    p.add_argument("solution")
    p.add_argument("--svg", help="write a schematic SVG here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("generate", help="emit fixture patterns")
    p.add_argument("kind", choices=["torus"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", type=float, default=0.5 * math.pi)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--k", type=float, help="targets realized by this uniform curvature")
    group.add_argument("--target", type=float, help="uniform target total")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK

    started = time.perf_counter()
    status, message = EXIT_INTERNAL, ""
    try:
        status = args.func(args)
    except InputError as exc:
        status, message = EXIT_INPUT, str(exc)
        log.error("%s", exc)
    except Inconsistency as exc:
        status, message = EXIT_INTERNAL, str(exc)
        log.error("%s", exc)
    except Exception as exc:  # anything unplanned is an internal error, not a domain verdict
        status, message = EXIT_INTERNAL, f"{type(exc).__name__}: {exc}"
        log.exception("internal error")
    finally:
        inputs = [getattr(args, key) for key in ("input", "solution") if getattr(args, key, None)]
        config = getattr(args, "resolved_config", None) or {
            key: val for key, val in vars(args).items() if key not in ("func", "manifest", "input", "solution")
        }
        manifest = {
            "command": args.command,
            "inputs": inputs,
            "config": config,
            "version": __version__,
            "wall_time": time.perf_counter() - started,
            "exit_code": status,
            "status": message or ("ok" if status == EXIT_OK else "negative"),
        }
        sys.stderr.write(json.dumps(manifest) + "\n")
        if args.manifest:
            write_atomic(args.manifest, dumps(manifest))
    return status


if __name__ == "__main__":
    sys.exit(main())
