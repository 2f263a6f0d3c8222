"""Command-line front end.

    crisis-bargain validate MODEL
    crisis-bargain plausibility MODEL [--mechanism MECH]
    crisis-bargain construct MODEL [--out MECH]
    crisis-bargain audit MODEL MECH
    crisis-bargain solve MODEL --grid 5 [--out MECH]
    crisis-bargain sweep MODEL SWEEP
    crisis-bargain war-region MODEL --grid 256

Exit codes: 0 ok, 1 audit found a violation, 2 invalid model, 3 peace
infeasible, 64 unreadable input or bad usage, 65 incompatible inputs,
70 solver or internal failure, 74 write failure.

Reports are deterministic.  Timestamps only appear on the optional
``--verbose`` log channel (stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (
    PLAUSIBILITY_TOL,
    InfeasibilityCertificate,
    construct_peaceful_settlement,
    peace_plausibility,
    war_region,
)
from .mechanism import IC_TOL, DirectMechanism, GridMismatchError, audit_mechanism
from .model import ModelValidationError, model_from_dict
from .solver import SolverError, build_program, minimize_war_probability

EXIT_OK = 0
EXIT_AUDIT_FAILED = 1
EXIT_INVALID_MODEL = 2
EXIT_INFEASIBLE = 3
EXIT_UNREADABLE = 64
EXIT_INCOMPATIBLE = 65
EXIT_SOLVER = 70
EXIT_WRITE = 74

log = logging.getLogger("crisis_bargaining")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_UNREADABLE)


# --------------------------------------------------------------------------
# I/O helpers


def _num(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_UNREADABLE, f"cannot read {path}: {exc}") from exc


def _load_model(path: str):
    desc = _read_json(path)
    try:
        return model_from_dict(desc)
    except ModelValidationError as exc:
        raise CliError(EXIT_INVALID_MODEL, "\n".join(exc.errors)) from exc


def _load_mechanism(path: str):
    try:
        return DirectMechanism.from_dict(_read_json(path))
    except (ValueError, TypeError, AttributeError) as exc:
        raise CliError(EXIT_UNREADABLE, f"{path}: {exc}") from exc


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_WRITE, f"cannot write {path}: {exc}") from exc


def _json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for k, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{k}]")
    else:
        yield prefix, obj


def _text(obj) -> str:
    return "".join(f"{k}: {'null' if v is None else _num(v)}\n" for k, v in _flatten(obj))


def _kv_csv(obj) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["key", "value"])
    for k, v in _flatten(obj):
        out.writerow([k, "" if v is None else _num(v)])
    return buf.getvalue()


def _render(obj, fmt: str) -> str:
    if fmt == "json":
        return _json(obj)
    if fmt == "csv":
        return _kv_csv(obj)
    return _text(obj)


def _parse_grid(spec: str) -> tuple[int, int]:
    parts = re.split(r"[x,]", str(spec).lower())
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise CliError(EXIT_UNREADABLE, f"bad grid {spec!r}; use N or N1xN2") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise CliError(EXIT_UNREADABLE, f"bad grid {spec!r}; use N or N1xN2")
    return vals[0], vals[1]


# --------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    report = {"valid": True, "states": 2, "war_technology": model.war_tech.kind}
    _write(args.out, _render(report, args.format))
    return EXIT_OK


def cmd_plausibility(args) -> int:
    model = _load_model(args.model)
    mech = None
    if args.mechanism:
        mech = _load_mechanism(args.mechanism)
        try:
            mech.check_compatible(model)
        except GridMismatchError as exc:
            raise CliError(EXIT_INCOMPATIBLE, str(exc)) from exc
    rep = peace_plausibility(model, mech, tol=args.tol)
    if args.format == "csv":
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["lhs", "plausible", "boundary", "verdict"])
        out.writerow([_num(rep.lhs), _num(rep.plausible), _num(rep.boundary), rep.verdict])
        _write(args.out, buf.getvalue())
    else:
        _write(args.out, _render(rep.to_dict(), args.format))
    return EXIT_OK


def cmd_construct(args) -> int:
    model = _load_model(args.model)
    n = _parse_grid(args.grid or 9)[0]
    result = construct_peaceful_settlement(model, grid=n, tol=args.tol)
    if isinstance(result, InfeasibilityCertificate):
        sys.stdout.write(_render(result.to_dict(), args.format))
        return EXIT_INFEASIBLE
    _write(args.out, _json(result.to_dict()))
    if args.out not in (None, "-"):
        sys.stdout.write(_render({"feasible": True, "written": args.out,
                                  "x1": float(result.x1[0, 0]), "x2": float(result.x2[0, 0])},
                                 args.format))
    return EXIT_OK


def cmd_audit(args) -> int:
    model = _load_model(args.model)
    mech = _load_mechanism(args.mechanism)
    try:
        report = audit_mechanism(model, mech, ic_tol=args.tol if args.tol is not None else IC_TOL,
                                 deviation_grid_size=args.deviation_grid)
    except GridMismatchError as exc:
        raise CliError(EXIT_INCOMPATIBLE, str(exc)) from exc
    _write(args.out, _render(report.to_dict(), args.format))
    return EXIT_OK if report.passed else EXIT_AUDIT_FAILED


def cmd_solve(args) -> int:
    model = _load_model(args.model)
    n1, n2 = _parse_grid(args.grid or 5)
    if n1 < 2 or n2 < 2:
        raise CliError(EXIT_UNREADABLE, "solve needs at least 2 nodes per state")
    log.info("building %dx%d program", n1, n2)
    program = build_program(model, n1, n2, strict_balance=args.strict_balance)
    try:
        res = minimize_war_probability(program)
    except SolverError as exc:
        raise CliError(EXIT_SOLVER, f"solver failure: {exc}") from exc
    log.info("solved in %d pivots", res.lp.iterations)
    if args.out not in (None, "-"):
        _write(args.out, _json(res.mechanism.to_dict()))
    entry = res.log()
    entry["constraints"] = program.counts()
    sys.stdout.write(_render(entry, args.format))
    return EXIT_OK


# sweep ---------------------------------------------------------------------

_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)|\[(\d+|\*)\]")


def _path_tokens(path: str) -> list:
    tokens = []
    for part in path.split("."):
        if not part:
            raise CliError(EXIT_INCOMPATIBLE, f"bad parameter path {path!r}")
        at = 0
        for m in _TOKEN.finditer(part):
            if m.start() != at:
                raise CliError(EXIT_INCOMPATIBLE, f"bad parameter path {path!r}")
            at = m.end()
            if m.group(1) is not None:
                tokens.append(m.group(1))
            else:
                tokens.append("*" if m.group(2) == "*" else int(m.group(2)))
        if at != len(part):
            raise CliError(EXIT_INCOMPATIBLE, f"bad parameter path {path!r}")
    return tokens


def _assign(node, tokens, value, path):
    head, rest = tokens[0], tokens[1:]
    if head == "*":
        if not isinstance(node, list) or not node:
            raise CliError(EXIT_INCOMPATIBLE, f"{path}: wildcard needs a non-empty array")
        keys = range(len(node))
    elif isinstance(head, int):
        if not isinstance(node, list) or head >= len(node):
            raise CliError(EXIT_INCOMPATIBLE, f"{path}: index {head} does not resolve")
        keys = [head]
    else:
        if not isinstance(node, dict) or head not in node:
            raise CliError(EXIT_INCOMPATIBLE, f"{path}: field {head!r} does not resolve")
        keys = [head]
    for k in keys:
        if rest:
            _assign(node[k], rest, value, path)
        else:
            if isinstance(node[k], (dict, list)):
                raise CliError(EXIT_INCOMPATIBLE, f"{path}: does not name a number")
            node[k] = value


def _sweep_values(spec) -> list:
    if "values" in spec:
        vals = spec["values"]
        if not isinstance(vals, list):
            raise CliError(EXIT_INCOMPATIBLE, "sweep values must be a list")
    elif "range" in spec:
        r = spec["range"]
        try:
            start, stop, step = float(r["start"]), float(r["stop"]), float(r["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(EXIT_INCOMPATIBLE, f"sweep range needs start, stop, step: {exc}") from exc
        if step <= 0 or stop < start:
            raise CliError(EXIT_INCOMPATIBLE, "sweep range needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [float(f"{start + k * step:.12g}") for k in range(count)]
    else:
        raise CliError(EXIT_INCOMPATIBLE, "sweep spec needs 'values' or 'range'")
    if not vals:
        raise CliError(EXIT_INCOMPATIBLE, "sweep value list is empty")
    try:
        return [float(v) for v in vals]
    except (TypeError, ValueError) as exc:
        raise CliError(EXIT_INCOMPATIBLE, f"sweep values must be numbers: {exc}") from exc


def _sweep_point(job):
    desc, tol, grid, solve_grid = job
    try:
        model = model_from_dict(desc)
    except ModelValidationError as exc:
        return ("invalid", exc.errors)
    rep = peace_plausibility(model, tol=tol)
    row = {
        "lhs": rep.lhs,
        "plausible": "boundary-yes" if rep.plausible and rep.boundary else ("yes" if rep.plausible else "no"),
    }
    if solve_grid is not None:
        try:
            res = minimize_war_probability(build_program(model, *solve_grid), audit=False)
        except SolverError as exc:
            return ("solver", str(exc))
        row["objective"] = res.objective
    row["war_region_mass"] = war_region(model, grid=grid, tol=tol).mass
    return ("ok", row)


def cmd_sweep(args) -> int:
    base = _read_json(args.model)
    try:
        model_from_dict(base)
    except ModelValidationError as exc:
        raise CliError(EXIT_INVALID_MODEL, "\n".join(exc.errors)) from exc
    spec = _read_json(args.spec)
    if not isinstance(spec, dict) or "parameter" not in spec:
        raise CliError(EXIT_INCOMPATIBLE, "sweep spec needs a 'parameter' path")
    path = str(spec["parameter"])
    tokens = _path_tokens(path)
    values = _sweep_values(spec)
    grid = _parse_grid(args.grid)[0] if args.grid else int(spec.get("war_region_grid", 256))
    solve_grid = None
    if spec.get("solve"):
        solve = spec["solve"] if isinstance(spec["solve"], dict) else {}
        solve_grid = _parse_grid(solve.get("grid", 5))

    jobs = []
    for v in values:
        desc = json.loads(json.dumps(base))
        _assign(desc, tokens, v, path)
        jobs.append((desc, args.tol, grid, solve_grid))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, jobs))  # map keeps input order
    else:
        results = [_sweep_point(j) for j in jobs]

    for v, (status, payload) in zip(values, results):
        if status == "invalid":
            raise CliError(EXIT_INVALID_MODEL, f"{path}={_num(v)}: " + "; ".join(payload))
        if status == "solver":
            raise CliError(EXIT_SOLVER, f"{path}={_num(v)}: solver failure: {payload}")

    columns = ["param", "lhs", "plausible"] + (["objective"] if solve_grid else []) + ["war_region_mass"]
    rows = [{"param": v, **payload} for v, (_, payload) in zip(values, results)]
    if args.format == "json":
        text = _json({"parameter": path, "rows": rows})
    elif args.format == "text":
        text = "".join(" ".join(f"{c}={_num(r[c])}" for c in columns) + "\n" for r in rows)
    else:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(columns)
        for r in rows:
            out.writerow([_num(r[c]) for c in columns])
        text = buf.getvalue()
    _write(args.out or spec.get("out"), text)
    return EXIT_OK


def cmd_war_region(args) -> int:
    model = _load_model(args.model)
    n = _parse_grid(args.grid or 256)[0]
    try:
        rep = war_region(model, grid=n, tol=args.tol)
    except ValueError as exc:
        raise CliError(EXIT_UNREADABLE, str(exc)) from exc
    text = rep.to_csv() if args.format == "csv" else _render(rep.to_dict(), args.format)
    _write(args.out, text)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="tolerance (plausibility boundary; IC gain for audit)")
    common.add_argument("--grid", default=None, help="grid size, N or N1xN2")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("text", "json", "csv"), default=None,
                        help="report format (default: csv for sweep, text otherwise)")
    common.add_argument("-v", "--verbose", action="store_true", help="log to stderr")

    p = _Parser(prog="crisis-bargain", description="Crisis bargaining mechanism toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="check a model file")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("plausibility", parents=[common], help="peace plausibility test")
    s.add_argument("model")
    s.add_argument("--mechanism", default=None, help="price a candidate peaceful mechanism")
    s.set_defaults(func=cmd_plausibility)

    s = sub.add_parser("construct", parents=[common], help="build a peaceful settlement")
    s.add_argument("model")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("audit", parents=[common], help="audit a direct mechanism")
    s.add_argument("model")
    s.add_argument("mechanism")
    s.add_argument("--deviation-grid", type=int, default=None,
                   help="report grid size for the deviation scan")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("solve", parents=[common], help="minimum war probability on a grid")
    s.add_argument("model")
    s.add_argument("--strict-balance", action="store_true",
                   help="require x1 + x2 = 1 - pi at every node")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", parents=[common], help="sweep one model parameter")
    s.add_argument("model")
    s.add_argument("spec", help="JSON sweep spec")
    s.add_argument("--jobs", type=int, default=1, help="worker processes (row order is kept)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("war-region", parents=[common], help="type pairs that must fight")
    s.add_argument("model")
    s.set_defaults(func=cmd_war_region)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                            format="%(asctime)s %(levelname)s %(message)s")
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "text"
    if args.tol is None and args.command != "audit":
        args.tol = PLAUSIBILITY_TOL
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"crisis-bargain {args.command}: {exc}\n")
        return exc.code
    except BrokenPipeError:
        return EXIT_WRITE
    except Exception as exc:  # contract: every path maps to a documented code
        sys.stderr.write(f"crisis-bargain {args.command}: internal error: {exc!r}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
