"""Command-line surface.

Commands: eval, derive, compose, taylor (alias identity-check), locus,
cutcheck.  Output is deterministic; exit codes encode verdicts:
0 success/EQUAL/member/convergent, 2 UNEQUAL/non-member/divergent,
3 input or kernel error, 4 skipped/inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import KernelError, ParseError
from .limits import configure
from .monomial import mono_inv
from .parser import parse, elaborate
from .powerseries import CutSpec, conv_contains, cut_member, monomial_geometric
from .series import EXACT, FLOAT, TransSeries, render_series
from .taylor import LocusSpec, OperatorHandle, locus_contains, taylor_identity_check
from .calculus import derive, compose

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_INPUT = 3
EXIT_SKIPPED = 4


def _backend(name: str):
    return FLOAT if name == "float" else EXACT


def _read_arg(text: str) -> str:
    if text == "-":
        return sys.stdin.read().strip()
    return text


def _series_terms(s: TransSeries, n: int) -> list:
    out = []
    walker = s._candidates()
    cands = []
    for _ in range(n + 1):
        try:
            cands.append(next(walker))
        except StopIteration:
            break
    if not cands:
        return out
    d = s.expand(cands[-1])
    from .monomial import sort_monomials
    for m in sort_monomials(d)[:n]:
        c = d[m]
        out.append({"coeff": str(c), "monomial": m.render()})
    return out


def _emit(args, payload: dict, text_lines: list) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _parse_op(text: str, backend) -> OperatorHandle:
    if text in (None, "identity", "id"):
        return OperatorHandle.identity()
    if text.startswith("compose:"):
        g = elaborate(parse(text.split(":", 1)[1]), backend)
        return OperatorHandle.right_compose(g)
    raise ParseError(f"unknown operator spec {text!r} "
                     "(use 'identity' or 'compose:EXPR')", 0)


def _parse_cut(text: str, backend) -> CutSpec:
    if text == "all":
        return CutSpec.all()
    if text == "empty":
        return CutSpec.empty()
    for prefix, ctor in (("above:", CutSpec.above), ("aboveeq:", CutSpec.above_eq)):
        if text.startswith(prefix):
            s = elaborate(parse(text[len(prefix):]), backend)
            lt = s.leading_term()
            if lt is None:
                raise ParseError("cut boundary must be a nonzero series", 0)
            return ctor(lt.mono)
    raise ParseError(f"unknown cut spec {text!r} "
                     "(use all, empty, above:EXPR, aboveeq:EXPR)", 0)


def cmd_eval(args) -> int:
    backend = _backend(args.backend)
    s = elaborate(parse(_read_arg(args.expr)), backend)
    _emit(args, {"command": "eval", "verdict": "ok",
                 "terms": _series_terms(s, args.terms), "witnesses": []},
          [render_series(s, args.terms)])
    return EXIT_OK


def cmd_derive(args) -> int:
    backend = _backend(args.backend)
    s = derive(elaborate(parse(_read_arg(args.expr)), backend))
    _emit(args, {"command": "derive", "verdict": "ok",
                 "terms": _series_terms(s, args.terms), "witnesses": []},
          [render_series(s, args.terms)])
    return EXIT_OK


def cmd_compose(args) -> int:
    backend = _backend(args.backend)
    f = elaborate(parse(_read_arg(args.f)), backend)
    g = elaborate(parse(_read_arg(args.g)), backend)
    s = compose(f, g)
    _emit(args, {"command": "compose", "verdict": "ok",
                 "terms": _series_terms(s, args.terms), "witnesses": []},
          [render_series(s, args.terms)])
    return EXIT_OK


def cmd_taylor(args) -> int:
    backend = _backend(args.backend)
    f = elaborate(parse(_read_arg(args.f)), backend)
    g = elaborate(parse(_read_arg(args.g)), backend)
    d = elaborate(parse(_read_arg(args.delta)), backend)
    report = taylor_identity_check(f, g, d, depth=args.terms)
    lines = []
    witnesses = []
    if report.conv_report is not None:
        lines.append(f"locus: {report.conv_report.verdict}")
        witnesses = [item[0].render() for item in report.conv_report.witnesses[:3]
                     if hasattr(item[0], "render")]
    if report.status == "SKIPPED":
        lines.append(f"SKIPPED: {report.detail}")
        _emit(args, {"command": "taylor", "verdict": "SKIPPED",
                     "terms": [], "witnesses": [report.detail]}, lines)
        return EXIT_SKIPPED
    lines.append(f"lhs: {render_series(report.lhs, args.terms)}")
    lines.append(f"rhs: {render_series(report.rhs, args.terms)}")
    lines.append(report.status)
    _emit(args, {"command": "taylor", "verdict": report.status,
                 "terms": _series_terms(report.rhs, args.terms),
                 "witnesses": witnesses}, lines)
    return EXIT_OK if report.status == "EQUAL" else EXIT_NEGATIVE


def cmd_locus(args) -> int:
    backend = _backend(args.backend)
    f = elaborate(parse(_read_arg(args.expr)), backend)
    op = _parse_op(args.op, backend)
    delta = elaborate(parse(_read_arg(args.delta)), backend)
    report = locus_contains(LocusSpec(op, delta), f)
    wit = []
    for item in report.witnesses:
        try:
            g, check = item[0], item[1]
            wit.append(f"{g.render()} -> {check.render()}")
        except Exception:
            wit.append(str(item))
    lines = [f"locus: {report.verdict}", f"detail: {report.detail}"]
    lines += [f"witness: {w}" for w in wit[:4]]
    _emit(args, {"command": "locus", "verdict": report.verdict,
                 "terms": [], "witnesses": wit[:4]}, lines)
    if report.verdict == "certified_convergent":
        return EXIT_OK
    if report.verdict == "certified_divergent":
        return EXIT_NEGATIVE
    return EXIT_SKIPPED


def cmd_cutcheck(args) -> int:
    backend = _backend(args.backend)
    r = elaborate(parse(_read_arg(args.ratio)), backend)
    lt = r.leading_term()
    if lt is None:
        raise ParseError("cutcheck ratio must be a nonzero series", 0)
    p = monomial_geometric(lt.mono)
    cut = _parse_cut(args.cut, backend)
    verdict = cut_member(p, cut)
    wit = []
    for pair in verdict.witnesses[:2]:
        try:
            (m1, k1), (m2, k2) = pair
            wit.append(f"({m1.render()}, X^{k1}) vs ({m2.render()}, X^{k2})")
        except Exception:
            try:
                k, m = pair
                wit.append(f"degree {k}: {m.render()}")
            except Exception:
                wit.append(str(pair))
    lines = [f"series: sum ({lt.mono.render()})^k * X^k",
             f"cut: {cut.describe()}", f"verdict: {verdict.kind}"]
    lines += [f"witness: {w}" for w in wit]
    _emit(args, {"command": "cutcheck", "verdict": verdict.kind,
                 "terms": [], "witnesses": wit}, lines)
    if verdict.kind == "member":
        return EXIT_OK
    if verdict.kind == "non_member":
        return EXIT_NEGATIVE
    return EXIT_SKIPPED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--terms", type=int, default=8,
                        help="terms / comparison depth (default 8)")
    common.add_argument("--order", type=int, default=6,
                        help="power series order cap (default 6)")
    common.add_argument("--backend", choices=["exact", "float"],
                        default="exact")
    common.add_argument("--depth-bound", type=int, default=None,
                        help="iterated-log depth bound")
    common.add_argument("--height-bound", type=int, default=None,
                        help="exponential height bound")
    common.add_argument("--json", action="store_true",
                        help="emit a stable JSON report")

    ap = argparse.ArgumentParser(
        prog="transseries",
        description="exact log-exp transseries kernel")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common],
                       help="parse and expand an expression")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("derive", parents=[common],
                       help="differentiate an expression")
    p.add_argument("expr")
    p.set_defaults(fn=cmd_derive)

    p = sub.add_parser("compose", parents=[common],
                       help="right-compose F with G")
    p.add_argument("f")
    p.add_argument("g")
    p.set_defaults(fn=cmd_compose)

    for name in ("taylor", "identity-check"):
        p = sub.add_parser(name, parents=[common],
                           help="check F o (G + D) against the Taylor "
                                "deformation")
        p.add_argument("f")
        p.add_argument("g")
        p.add_argument("delta")
        p.set_defaults(fn=cmd_taylor)

    p = sub.add_parser("locus", parents=[common],
                       help="convergence locus report")
    p.add_argument("expr")
    p.add_argument("--op", default="identity",
                   help="identity or compose:EXPR")
    p.add_argument("--delta", required=True)
    p.set_defaults(fn=cmd_locus)

    p = sub.add_parser("cutcheck", parents=[common],
                       help="cut-algebra membership of the geometric family "
                            "sum RATIO^k X^k")
    p.add_argument("ratio")
    p.add_argument("--cut", required=True,
                   help="all, empty, above:EXPR, or aboveeq:EXPR")
    p.set_defaults(fn=cmd_cutcheck)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.depth_bound is not None:
        configure(log_depth_bound=args.depth_bound)
    if args.height_bound is not None:
        configure(height_bound=args.height_bound)
    from .limits import LIMITS
    if args.order > LIMITS.ps_order_cap:
        configure(ps_order_cap=args.order)
    try:
        return args.fn(args)
    except ParseError as e:
        print(f"error: {e}")
        return EXIT_INPUT
    except KernelError as e:
        print(f"error: {type(e).__name__}: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
