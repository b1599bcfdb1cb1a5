"""Command-line front end.

Exit status: 0 on success, 1 when an asserted identity fails (or any
paper-suite check fails), 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys
from hashlib import sha256
from pathlib import Path

from .brackets import (
    bv_laplacian,
    check_zimes,
    delta_squared,
    evolutionary_commutator,
    jacobiator,
    rebase,
    schouten_old,
)
from .calculus import euler
from .cohomology import NotExactError, UnsupportedAntiderivativeError, find_primitive, is_exact
from .dsl import ParseError, parse_expression, parse_functional, render
from .expr import ExpressionError, Functional, restrict_diagonal
from .geometric import geometric_bracket, jacobiator_geometric, lift

EXIT_OK, EXIT_VERDICT, EXIT_USAGE = 0, 1, 2


class _Verdict(Exception):
    pass


def _source(arg: str) -> str:
    p = Path(arg)
    if p.suffix == ".fun" or (len(arg) < 256 and "\n" not in arg and p.is_file()):
        try:
            return p.read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {arg}: {exc.strerror}", 1, 1) from exc
    return arg


def _functional(arg: str, base: str) -> Functional:
    src = _source(arg)
    if src.lstrip().startswith("int"):
        return parse_functional(src)
    return Functional(parse_expression(src), base)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["text", "structured", "latex"], default="text")
    common.add_argument("--base", default="x", help="base label for bare densities (default x)")

    p = argparse.ArgumentParser(prog="varschouten", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="verb", required=True, metavar="verb")

    def verb(name, help, nargs, assertable=False):
        sp = sub.add_parser(name, help=help, parents=[common])
        for meta in nargs:
            sp.add_argument(meta, help=".fun file or inline source")
        if assertable:
            sp.add_argument("--assert", dest="assert_", action="store_true",
                            help="exit 1 if the identity does not hold")
        return sp

    b = verb("bracket", "Schouten bracket of two functionals", ["A", "B"])
    b.add_argument("--mode", choices=["old", "multibase", "geometric"], default="old")
    verb("laplacian", "naive BV Laplacian", ["F"])
    j = verb("jacobi", "Jacobi residual of three functionals", ["F", "G", "H"], assertable=True)
    j.add_argument("--mode", choices=["old", "multibase", "geometric"], default="old")
    j.add_argument("--diagonal", action="store_true", help="restrict a multibase residual to the base label")
    e = verb("euler", "variational derivative", ["F"])
    e.add_argument("--field", choices=["q", "qd"], default="q")
    e.add_argument("--index", type=int, default=1)
    verb("exact", "cohomological triviality test", ["F"], assertable=True)
    verb("primitive", "inverse total derivative", ["F"])
    verb("zimes", "is the Laplacian a derivation of the bracket", ["F", "G"], assertable=True)
    verb("delta2", "square of the Laplacian", ["F"], assertable=True)
    verb("commutator", "one-vector bracket against the evolutionary commutator", ["X", "Y"],
         assertable=True)
    sub.add_parser("paper-suite", help="run every reproduction check", parents=[common])
    return p


def _run(args) -> tuple[object, str]:
    base = args.base
    load = lambda s: _functional(s, base)  # noqa: E731
    v = args.verb
    if v == "bracket":
        A, B = load(args.A), load(args.B)
        if args.mode == "geometric":
            return geometric_bracket(lift(A), lift(B)), ""
        if args.mode == "multibase":
            A, B = rebase(A, "x"), rebase(B, "y")
        else:
            B = rebase(B, A.base)
        return schouten_old(A, B), ""
    if v == "laplacian":
        return bv_laplacian(load(args.F)), ""
    if v == "jacobi":
        F, G, H = load(args.F), load(args.G), load(args.H)
        if args.mode == "geometric":
            J = jacobiator_geometric(F, G, H)
            return J, "" if not J else "nonzero geometric Jacobiator"
        mode = "single" if args.mode == "old" else "multibase"
        J = jacobiator(F, G, H, mode)
        if mode == "multibase" and args.diagonal:
            J = Functional(restrict_diagonal(J.density, base), base)
        if args.assert_ and not J.density.labels() - {J.base}:
            if not is_exact(J.density, J.base).is_trivial:
                return J, "Jacobi residual is not cohomologically trivial"
        return J, ""
    if v == "euler":
        F = load(args.F)
        return euler(F.density, args.field == "qd", args.index), ""
    if v == "exact":
        F = load(args.F)
        report = is_exact(F.density, F.base)
        if report.is_trivial:
            try:
                report = is_exact(F.density, F.base, with_primitive=True)
            except UnsupportedAntiderivativeError:
                pass
        return report, "" if report.is_trivial else "density is not exact"
    if v == "primitive":
        F = load(args.F)
        return find_primitive(F.density, F.base), ""
    if v == "zimes":
        r = check_zimes(load(args.F), load(args.G))
        return r, "" if r.cohomologically_equal else "identity fails"
    if v == "delta2":
        r = delta_squared(load(args.F))
        return r, "" if r.cohomologically_equal else "square of the Laplacian is not trivial"
    if v == "commutator":
        X = load(args.X).density
        Y = load(args.Y).density
        r = evolutionary_commutator(X, Y, base)
        return r, "" if r.cohomologically_equal else "bracket differs from the commutator"
    raise AssertionError(v)


def _run_suite(out) -> int:
    from .suite import run_suite
    results = run_suite()
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        ok = r.passed and r.in_time
        failed += not ok
        status = "PASS" if ok else "FAIL"
        out.write(f"{status}  {r.name:<{width}}  {r.seconds:7.2f}s < {r.bound:g}s  {r.detail}\n")
    out.write(f"{len(results) - failed} passed, {failed} failed\n")
    return EXIT_VERDICT if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verb == "paper-suite":
        return _run_suite(sys.stdout)
    try:
        result, failure = _run(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotExactError as exc:
        print(f"not exact: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except ExpressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    inputs = [getattr(args, k) for k in ("A", "B", "F", "G", "H", "X", "Y") if hasattr(args, k)]
    provenance = {
        "operation": args.verb,
        "mode": getattr(args, "mode", None),
        "inputs": [sha256(_source(s).encode()).hexdigest()[:16] for s in inputs],
    }
    print(render(result, args.output, provenance))
    if failure and getattr(args, "assert_", False):
        print(f"assertion failed: {failure}", file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
