"""Command-line front end.

Exit codes: 0 for Pass or Agree, 1 for Fail or Disagree, 2 for Inconclusive
(and for a comparison whose hypothesis did not hold), 3 for usage or parse
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from . import expr as dsl
from .catalog import (
    CatalogError,
    list_catalog,
    parse_scalar,
    prop6_transform,
    resolve_matrix,
    resolve_sequence,
    resolve_series,
)
from .matrices import Status, apply_operator_form, check_bounded, check_regular, transform
from .numerics import DEFAULT_POLICY, LimitStatus, TruncationPolicy
from .parallel import use_workers
from .power import (
    Consistency,
    Kind,
    PowerMatrixSpec,
    build,
    check_subcritical,
    needs,
    verify_prop1,
    verify_theorem1II,
    verify_theorem1III,
)
from .radius import (
    check_corollary3,
    check_prop2_monotone,
    check_prop4,
    radius_of_summability,
    row_radii,
)
from .report import dumps, to_csv, write_atomic

EXIT = {Status.PASS: 0, Status.FAIL: 1, Status.INCONCLUSIVE: 2}
EXIT_USAGE = 3
CONSISTENCY_EXIT = {Consistency.AGREE: 0, Consistency.DISAGREE: 1,
                    Consistency.INCONCLUSIVE: 2, Consistency.HYPOTHESIS_VIOLATED: 2}
LIMIT_EXIT = {LimitStatus.CONVERGED: 0, LimitStatus.NOT_CONVERGED: 1, LimitStatus.INCONCLUSIVE: 2}
POLICY_ENV = "SUMMATRIX_POLICY"

_POLICY_FLAGS = (
    ("rows", "--rows-scanned", int, "rows scanned (I)"),
    ("cols", "--cols", int, "columns whose limits are tested (J)"),
    ("terms", "--terms", int, "terms per row sum (N)"),
    ("eps", "--eps", float, "detector tolerance"),
    ("window", "--window", int, "Cauchy window length (W)"),
    ("radius_cap", "--radius-cap", float, "sentinel for an unbounded radius"),
    ("bisection_steps", "--bisection-steps", int, "radius bisection steps"),
)


class UsageError(Exception):
    pass


# -- argument parsing --------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("policy (defaults from the library, then $%s, then flags)" % POLICY_ENV)
    for name, flag, typ, helptext in _POLICY_FLAGS:
        g.add_argument(flag, dest=f"policy_{name}", type=typ, default=None,
                       help=f"{helptext} [default {getattr(DEFAULT_POLICY, name)}]")
    o = p.add_argument_group("output")
    o.add_argument("--out", help="write the report here (atomically) instead of stdout")
    o.add_argument("--format", choices=("json", "csv"), default="json")
    o.add_argument("--workers", type=int, default=1, help="worker threads for batch work")
    o.add_argument("--timing", action="store_true",
                   help="add wall-clock timing (makes reports run-dependent)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="summatrix",
        description="Numerical checks for infinite summability matrices.")
    parser.add_argument("--version", action="version", version=f"summatrix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="boundedness or regularity of a matrix")
    p.add_argument("--matrix", required=True, help="catalog:<name>?k=v or expr:<formula in i, j>")
    p.add_argument("--mode", choices=("bounded", "regular"), default="regular")
    _common(p)

    p = sub.add_parser("transform", help="apply a matrix to a sequence")
    p.add_argument("--matrix", required=True)
    p.add_argument("--sequence", required=True, help="expr:<formula in k>?limit=<value>")
    p.add_argument("--operator-form", action="store_true",
                   help="put the sequence limit in column 0 (bounded-operator formula)")
    _common(p)

    p = sub.add_parser("power", help="power matrices and the equivalence checks")
    p.add_argument("--kind", required=True, choices=[k.value for k in Kind])
    p.add_argument("--matrix", required=True)
    p.add_argument("--g", help="series spec: catalog-series:<name> or expr:<formula in k>")
    p.add_argument("--h", help="series spec for h")
    p.add_argument("--z", default="1", help="scalar such as 0.5, 1+2i, -i")
    p.add_argument("--mode", choices=("bounded", "regular"), default="regular",
                   help="condition set for the check action")
    p.add_argument("--angles", type=int, default=1, help="directions sampled by radius")
    p.add_argument("--moduli", help="comma separated ascending moduli for monotone")
    p.add_argument("action", choices=("check", "radius", "verify-t1ii", "verify-t1iii",
                                      "verify-p1c", "verify-p1r", "subcritical", "monotone"))
    _common(p)

    p = sub.add_parser("radius", help="radius of summability with row radii")
    p.add_argument("--matrix", required=True)
    p.add_argument("--angles", type=int, default=1)
    p.add_argument("--rows", type=int, default=16, help="row radii listed in the report")
    _common(p)

    p = sub.add_parser("prop6", help="t_n = sum_{k<=n} p_k s_k z^k")
    p.add_argument("--p", required=True, help="series spec for p")
    p.add_argument("--sequence", required=True)
    p.add_argument("--z", default="1")
    _common(p)

    p = sub.add_parser("catalog", help="list catalog entries")
    p.add_argument("what", choices=("list",))
    p.add_argument("--out")
    p.add_argument("--format", choices=("json",), default="json")
    return parser


def resolve_policy(args, environ=None) -> TruncationPolicy:
    environ = os.environ if environ is None else environ
    data = DEFAULT_POLICY.to_dict()
    path = environ.get(POLICY_ENV)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read policy file {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"policy file {path} must hold an object")
        data.update(loaded)
    for name, *_ in _POLICY_FLAGS:
        value = getattr(args, f"policy_{name}", None)
        if value is not None:
            data[name] = value
    try:
        return TruncationPolicy.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid policy: {exc}") from None


def _z(text: str) -> complex:
    try:
        return parse_scalar(text)
    except ValueError as exc:
        raise UsageError(f"--z: {exc}") from None


# -- commands ----------------------------------------------------------------

def _flags(entry) -> list:
    if entry is None or entry.discrepancy is None:
        return []
    return [{"entry": entry.name, "note": entry.discrepancy}]


def _check_result(A, mode, policy):
    if mode == "bounded":
        rep = check_bounded(A, policy)
        return rep, rep.member_of_Bc.status
    rep = check_regular(A, policy)
    return rep, rep.regular.status


def cmd_check(args, policy):
    A, entry = resolve_matrix(args.matrix)
    rep, status = _check_result(A, args.mode, policy)
    return {"mode": args.mode, "report": rep}, status, EXIT[status], _flags(entry)


def cmd_transform(args, policy):
    A, entry = resolve_matrix(args.matrix)
    s = resolve_sequence(args.sequence)
    if args.operator_form:
        try:
            tr = apply_operator_form(A, s, policy)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        tr = transform(A, s, policy)
    st = tr.limit.status
    status = {LimitStatus.CONVERGED: Status.PASS, LimitStatus.NOT_CONVERGED: Status.FAIL,
              LimitStatus.INCONCLUSIVE: Status.INCONCLUSIVE}[st]
    return ({"operator_form": args.operator_form, "transform": tr}, status, LIMIT_EXIT[st],
            _flags(entry))


def _series(text):
    return None if text is None else resolve_series(text)


def _radius_doc(est):
    return {"lower": est.lower, "upper": est.upper, "capped": est.capped,
            "angles_sampled": est.angles_sampled, "kind": est.kind, "extension": est.extension,
            "inconsistent": est.inconsistent, "notes": list(est.notes),
            "probes": [{"modulus": p.modulus, "status": p.verdict.status.value}
                       for p in est.probes]}


def cmd_power(args, policy):
    A, entry = resolve_matrix(args.matrix)
    kind = Kind(args.kind)
    g, h = _series(args.g), _series(args.h)
    z = _z(args.z)
    action = args.action
    required = set(needs(kind))
    if action in ("verify-t1ii", "subcritical"):
        required = {"g"}
    elif action == "verify-t1iii":
        required = {"g", "h"}
    elif action == "verify-p1c":
        required = {"g"}
    elif action == "verify-p1r":
        required = {"h"}
    missing = sorted(n for n in required if {"g": g, "h": h}[n] is None)
    if missing:
        raise UsageError(f"{kind.value} {action} requires --{' --'.join(missing)}")
    flags = _flags(entry)
    doc = {"kind": kind, "action": action, "z": z}
    if action == "check":
        rep, status = _check_result(build(PowerMatrixSpec(kind, A, g, h, z)), args.mode, policy)
        doc.update(mode=args.mode, report=rep)
        return doc, status, EXIT[status], flags
    if action == "radius":
        est = radius_of_summability(kind, A, g, h, policy, angles=args.angles)
        status = Status.FAIL if est.inconsistent else Status.PASS
        doc.update(radius=_radius_doc(est))
        return doc, status, EXIT[status], flags
    if action == "monotone":
        if not args.moduli:
            raise UsageError("monotone requires --moduli")
        try:
            moduli = [float(m) for m in args.moduli.split(",")]
            v = check_prop2_monotone(kind, A, g, h, moduli, policy)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        doc.update(monotone=v)
        return doc, v.status, EXIT[v.status], flags
    try:
        if action == "verify-t1ii":
            rep = verify_theorem1II(A, g, z, policy)
        elif action == "verify-t1iii":
            rep = verify_theorem1III(A, g, h, z, policy)
        elif action == "verify-p1c":
            rep = verify_prop1(Kind.COLUMN_GENERAL, A, g, z, policy)
        elif action == "verify-p1r":
            rep = verify_prop1(Kind.ROW_GENERAL, A, h, z, policy)
        else:
            rep = check_subcritical(A, g, z, policy)
            doc.update(subcritical=rep)
            return doc, rep.holds.status, EXIT[rep.holds.status], flags
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc.update(equivalence=rep)
    top = {Consistency.AGREE: Status.PASS, Consistency.DISAGREE: Status.FAIL}.get(
        rep.consistent, Status.INCONCLUSIVE)
    return doc, top, CONSISTENCY_EXIT[rep.consistent], flags


def cmd_radius(args, policy):
    A, entry = resolve_matrix(args.matrix)
    est = radius_of_summability(Kind.ROW_SIMPLE, A, policy=policy, angles=args.angles)
    radii = row_radii(A, policy)
    c3 = check_corollary3(A, policy, estimate=est)
    p4 = check_prop4(A, policy, estimate=est, radii=radii)
    if Status.FAIL in (c3.status, p4.status) or est.inconsistent:
        status = Status.FAIL
    elif Status.INCONCLUSIVE in (c3.status, p4.status):
        status = Status.INCONCLUSIVE
    else:
        status = Status.PASS
    doc = {"radius": _radius_doc(est),
           "row_radii": {"min_over_rows": radii.min_over_rows,
                         "listed": list(radii.values[:max(args.rows, 0)]),
                         "rows": len(radii.values)},
           "corollary3": c3, "prop4": p4}
    return doc, status, EXIT[status], _flags(entry)


def cmd_prop6(args, policy):
    p = resolve_series(args.p)
    s = resolve_sequence(args.sequence)
    res = prop6_transform(p, s, _z(args.z), policy)
    st = res.transform.limit.status
    status = {LimitStatus.CONVERGED: Status.PASS, LimitStatus.NOT_CONVERGED: Status.FAIL,
              LimitStatus.INCONCLUSIVE: Status.INCONCLUSIVE}[st]
    doc = {"transform": res.transform, "series_radius": res.series_radius,
           "hypothesis_met": res.hypothesis_met}
    return doc, status, LIMIT_EXIT[st], []


COMMANDS = {"check": cmd_check, "transform": cmd_transform, "power": cmd_power,
            "radius": cmd_radius, "prop6": cmd_prop6}


# -- driver ------------------------------------------------------------------

def _parse_message(exc: dsl.ParseError, spec: str) -> str:
    return (f"parse error in {spec!r} at offset {exc.offset} (column {exc.offset + 1}): "
            f"expected {exc.expected}, found {exc.found}")


def _emit(text: str, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


_EXECUTION_ONLY = ("--workers", "--out")


def _recorded_argv(argv: list) -> list:
    """argv without options that change where or how fast, never what, is computed."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in _EXECUTION_ONLY:
            skip = True
            continue
        if a.split("=", 1)[0] in _EXECUTION_ONLY and "=" in a:
            continue
        out.append(a)
    return out


def run(argv=None, environ=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE

    if args.command == "catalog":
        doc = {"tool_version": __version__, "command": {"name": "catalog", "argv": _recorded_argv(argv)},
               "catalog": list_catalog(), "exit_code": 0}
        _emit(dumps(doc), args.out)
        return 0

    started = time.perf_counter()
    try:
        policy = resolve_policy(args, environ)
        if args.workers < 1:
            raise UsageError("--workers must be positive")
        with use_workers(args.workers):
            result, status, code, flags = COMMANDS[args.command](args, policy)
    except dsl.ParseError as exc:
        spec = getattr(args, "matrix", None) or ""
        print(f"summatrix: {_parse_message(exc, exc.src or spec)}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, CatalogError, dsl.EvalError, ValueError) as exc:
        print(f"summatrix: {exc}", file=sys.stderr)
        return EXIT_USAGE

    doc = {
        "tool_version": __version__,
        "command": {"name": args.command, "argv": _recorded_argv(argv)},
        "policy": policy,
        "verdict": status,
        "result": result,
        "discrepancy_flags": flags,
        "exit_code": code,
    }
    if args.timing:
        doc["timing"] = {"seconds": round(time.perf_counter() - started, 3)}
    text = dumps(doc) if args.format == "json" else to_csv(doc)
    _emit(text, args.out)
    return code


def main():
    sys.exit(run())
