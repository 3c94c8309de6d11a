"""Command-line interface.

Exit codes: 0 success or positive verdict, 1 input error, 2 negative verdict
or failed verification, 3 a guard stopped the computation.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import analysis, engine, generators, rewrite, textio
from .core import Instance

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_GUARD = 0, 1, 2, 3


class InputError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # usage errors are input errors, not negative verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_ontology(spec):
    """Load an ontology from a file, or from a fixture given as ``fixture:NAME``
    or a bare fixture name that is not an existing file."""
    name = spec[len("fixture:"):] if spec.startswith("fixture:") else None
    if name is None and not os.path.exists(spec) and spec in generators.fixtures():
        name = spec
    if name is not None:
        try:
            return generators.get_fixture(name).ontology
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    try:
        return textio.parse_ontology(_read(spec)).ontology
    except textio.ParseError as exc:
        raise InputError(f"{spec}: {exc}") from None


def load_facts(path):
    if path is None:
        return Instance()
    try:
        return textio.parse_facts(_read(path))
    except (textio.ParseError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def load_query(path):
    text = _read(path) if os.path.exists(path) else path
    try:
        return textio.parse_query(text)
    except textio.ParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def _guard(args):
    return engine.ChaseGuard(args.max_height, args.max_steps,
                             unbounded=args.max_height is None and args.max_steps is None)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit(record, fmt):
    sys.stdout.write(textio.format_record(record, fmt))


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_chase(args):
    o = load_ontology(args.ontology)
    d = load_facts(args.data)
    try:
        result = engine.run_chase(d, o, _guard(args))
    except engine.SchemaViolation as exc:
        raise InputError(str(exc)) from None
    _emit(textio.chase_result_record(result), args.format)
    return EXIT_OK if result.fixpoint else EXIT_GUARD


def cmd_query(args):
    o = load_ontology(args.ontology)
    d = load_facts(args.data)
    q = load_query(args.query)
    try:
        answer = engine.entails_bcq(d, o, q, _guard(args))
    except engine.SchemaViolation as exc:
        raise InputError(str(exc)) from None
    if args.format == "json":
        _emit({"answer": answer.value}, "json")
    else:
        print(answer.value)
    return EXIT_GUARD if answer is engine.Answer.UNKNOWN else EXIT_OK


def _cycle_text(cycle):
    return " ".join(str(e) for e in cycle)


def cmd_check(args):
    o = load_ontology(args.ontology)
    if args.what == "wa":
        ok, cycle = analysis.is_weakly_acyclic(o)
        record = {"verdict": "wa" if ok else "not-wa"}
        if cycle:
            record["cycle"] = [str(e) for e in cycle]
        if args.format == "json":
            _emit(record, "json")
        else:
            print(record["verdict"] if ok else f"not-wa\ncycle: {_cycle_text(cycle)}")
        return EXIT_OK if ok else EXIT_NEGATIVE

    if args.delta is None:
        raise InputError("check bounded needs --delta")
    try:
        bound = analysis.parse_bound(args.delta)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    verdict = analysis.check_bounded(o, bound, args.max_steps)
    if isinstance(verdict, analysis.Bounded):
        record = {"verdict": "bounded", "max_height": verdict.max_height,
                  "chase_size": verdict.chase_size}
        text = f"bounded, height {verdict.max_height}"
        code = EXIT_OK
    elif isinstance(verdict, analysis.NotBounded):
        record = {"verdict": "not-bounded", "witness": textio.print_term(verdict.witness),
                  "witness_height": verdict.height, "stage": verdict.stage}
        text = (f"not-bounded\nwitness: {record['witness']} "
                f"(height {verdict.height}, stage {verdict.stage})")
        code = EXIT_NEGATIVE
    else:
        record = {"verdict": "unknown", "stages": verdict.stages_run}
        text = f"unknown after {verdict.stages_run} stages"
        code = EXIT_GUARD
    if args.format == "json":
        _emit(record, "json")
    else:
        print(text)
    return code


def cmd_rewrite(args):
    o = load_ontology(args.ontology)
    if args.height < 0:
        raise InputError("--height must be non-negative")
    normal, renames = rewrite.normalize(o)
    try:
        out = rewrite.build_rewrite(normal, args.height)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write(textio.print_ontology(out.ontology), args.output)
    if args.output is not None:
        map_path = args.map or args.output + ".map"
        _write(rewrite.write_symbol_map(out.symbol_map), map_path)
    elif args.map:
        _write(rewrite.write_symbol_map(out.symbol_map), args.map)

    code = EXIT_OK
    guard = engine.ChaseGuard(max_height=args.height, max_stages=args.max_steps)
    for path in args.verify or ():
        d = rewrite.rename_facts(load_facts(path), renames)
        try:
            ok = rewrite.verify_equivalence(normal, out.ontology, d, guard=guard)
        except engine.GuardExhausted as exc:
            print(f"{path}: input is not {args.height}-bounded on this database "
                  f"({exc})", file=sys.stderr)
            code = EXIT_NEGATIVE
            continue
        print(f"{path}: {'equivalent' if ok else 'NOT equivalent'}", file=sys.stderr)
        if not ok:
            code = EXIT_NEGATIVE
    return code


def cmd_gen_order(args):
    try:
        params = generators.OrderParams(args.k, args.n)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write(textio.print_ontology(generators.gen_order_ontology(params)), args.output)
    return EXIT_OK


def cmd_fixture(args):
    try:
        fx = generators.get_fixture(args.name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    _write(textio.print_ontology(fx.ontology), args.output)
    return EXIT_OK


def cmd_size_bound(args):
    o = load_ontology(args.ontology)
    if args.constants is not None:
        c = args.constants
    else:
        c = len(load_facts(args.data).active_domain() | o.constants())
    bound = analysis.chase_size_bound(o, args.height, c)
    if args.format == "json":
        _emit({"height": args.height, "constants": c, "bound": bound}, "json")
    else:
        print(bound)
    return EXIT_OK


# ----------------------------------------------------------------------

def build_parser():
    parser = _ArgumentParser(
        prog="boundchase",
        description="Skolem chase, weak acyclicity and bounded-ontology rewriting.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_ArgumentParser)

    def guards(p):
        p.add_argument("--max-height", type=int, help="stop once a term exceeds this height")
        p.add_argument("--max-steps", type=int, help="stop after this many chase stages")

    def fmt(p):
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("chase", help="chase a database")
    p.add_argument("--ontology", required=True)
    p.add_argument("--data")
    guards(p)
    fmt(p)
    p.set_defaults(func=cmd_chase)

    p = sub.add_parser("query", help="answer a Boolean conjunctive query")
    p.add_argument("--ontology", required=True)
    p.add_argument("--data")
    p.add_argument("--query", required=True, help="query file or query text")
    guards(p)
    fmt(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("check", help="weak acyclicity or boundedness")
    p.add_argument("what", choices=("wa", "bounded"))
    p.add_argument("ontology")
    p.add_argument("--delta", help="bound: exp:K, const:C or height:H")
    p.add_argument("--max-steps", type=int)
    fmt(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rewrite", help="compile to a weakly acyclic ontology")
    p.add_argument("--ontology", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--map", help="symbol map path (default: OUTPUT.map)")
    p.add_argument("--verify", nargs="+", metavar="DATA")
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("gen-order", help="generate a linear-order ontology")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_order)

    p = sub.add_parser("fixture", help="write a named fixture ontology")
    p.add_argument("name")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("size-bound", help="upper bound on chase size")
    p.add_argument("--ontology", required=True)
    p.add_argument("--height", type=int, required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--constants", type=int)
    src.add_argument("--data")
    fmt(p)
    p.set_defaults(func=cmd_size_bound)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
