"""Batch driver: check, core, run and trace over ``.seq`` files.

Exit codes: 0 success, 1 type or coverage error, 2 parse error, 3 fuel
exhausted, 4 usage error.  Diagnostics go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .check import check_term
from .check_dep import dep_check_term
from .core_text import print_term, print_type
from .diag import Diagnostic, ParseError
from .reduce import FuelExhausted, normalize, trace
from .surface import CompileFail, Program, load_program
from .syntax import App, Cons, Mode, Nil, Term

__all__ = ["RunConfig", "main", "entry"]

_DEFAULT_FUEL = 10000


@dataclass
class RunConfig:
    command: str                 # "check" | "run" | "core" | "trace"
    file: str
    entry: Optional[str] = None
    arg: Optional[str] = None
    dependent: bool = False
    structural_patterns: bool = False
    fuel: int = _DEFAULT_FUEL
    show_trace: bool = False


def _error(diag: Diagnostic, file: str) -> None:
    from .diag import Span
    print(diag.at(Span(file, 0, 0)).render(), file=sys.stderr)


def _load(cfg: RunConfig) -> Program:
    with open(cfg.file, "r", encoding="utf-8") as fh:
        source = fh.read()
    mode = Mode.DEP if cfg.dependent else Mode.PROP
    return load_program(source, cfg.file, mode)


def _check_all(cfg: RunConfig, prog: Program) -> int:
    mode = Mode.DEP if cfg.dependent else Mode.PROP
    failures = 0
    for d in prog.decls:
        if d.kind != "def":
            continue
        if mode is Mode.DEP:
            diag = dep_check_term(prog.sig, [], d.term, d.type, fuel=cfg.fuel)
        else:
            diag = check_term(prog.sig, [], d.term, d.type,
                              structural=cfg.structural_patterns)
        if diag is not None:
            _error(diag.at(d.span), cfg.file)
            failures += 1
    for w in prog.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return failures


def _build_entry_term(cfg: RunConfig, prog: Program) -> Term:
    decl = prog.find(cfg.entry)
    if decl is None or decl.kind == "atom":
        raise CompileFail(Diagnostic("unbound", expected="declared entry",
                                     found=str(cfg.entry)))
    if cfg.arg is None:
        return App(decl.name, Nil())
    from .surface import compile_argument
    from .syntax import Imp, Pi
    ty = decl.type
    if not isinstance(ty, (Imp, Pi)):
        raise CompileFail(Diagnostic("arity", expected="function-typed entry",
                                     found=print_type(ty)))
    mode = Mode.DEP if cfg.dependent else Mode.PROP
    data = compile_argument(prog.sig, cfg.arg, ty.arg, mode)
    return App(decl.name, Cons(data, Nil()))


def main(cfg: RunConfig) -> int:
    try:
        prog = _load(cfg)
    except ParseError as e:
        _error(e.diagnostic, cfg.file)
        return 2
    except CompileFail as e:
        _error(e.diagnostic, cfg.file)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4

    if cfg.command == "check":
        failures = _check_all(cfg, prog)
        if failures:
            return 1
        print(f"ok ({len(prog.decls)} declarations)")
        return 0

    if cfg.command == "core":
        for d in prog.decls:
            if d.kind == "atom":
                print(f"atom {d.name}")
            elif d.kind == "postulate":
                print(f"postulate {d.name} : {print_type(d.type)}")
            else:
                print(f"{d.name} : {print_type(d.type)}")
                print(f"{d.name} = {print_term(d.term)}")
        return 0

    if cfg.command in ("run", "trace"):
        if cfg.entry is None:
            print("error: run/trace require --entry", file=sys.stderr)
            return 4
        if _check_all(cfg, prog):
            return 1
        try:
            t = _build_entry_term(cfg, prog)
        except (ParseError, CompileFail) as e:
            _error(e.diagnostic, cfg.file)
            return 2 if isinstance(e, ParseError) else 1
        try:
            if cfg.command == "trace" or cfg.show_trace:
                steps, res = trace(prog.sig, t, cfg.fuel)
                for i, (rule, term) in enumerate(steps, start=1):
                    print(f"{i} {rule} {print_term(term)}")
            else:
                res = normalize(prog.sig, t, cfg.fuel)
        except FuelExhausted as e:
            print(f"error: fuel exhausted after {e.steps} steps", file=sys.stderr)
            return 3
        if res.stuck is not None:
            print(f"error: stuck: {res.stuck}", file=sys.stderr)
            return 1
        print(print_term(res.term))
        return 0

    print(f"error: unknown command {cfg.command}", file=sys.stderr)
    return 4


def entry(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="seqcore",
        description="Typecheck and run equational programs on a focused "
                    "sequent-calculus kernel.")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_ in (("check", "typecheck all declarations"),
                       ("core", "print compiled core terms"),
                       ("run", "normalize an entry point"),
                       ("trace", "run and print each reduction step")):
        sp = sub.add_parser(cmd, help=help_)
        sp.add_argument("file")
        sp.add_argument("--entry", help="name of the declaration to run")
        sp.add_argument("--arg", help="surface expression passed as argument")
        sp.add_argument("--dependent", action="store_true",
                        help="use the dependent checker")
        sp.add_argument("--structural-patterns", action="store_true",
                        help="enable contraction and wildcard patterns")
        sp.add_argument("--fuel", type=int, default=None,
                        help="reduction step budget (default 10000)")
        sp.add_argument("--trace", action="store_true",
                        help="print each reduction step")
    ns = parser.parse_args(argv)
    fuel = ns.fuel
    if fuel is None:
        fuel = int(os.environ.get("SEQCORE_FUEL", _DEFAULT_FUEL))
    if fuel <= 0:
        print("error: --fuel must be positive", file=sys.stderr)
        return 4
    cfg = RunConfig(command=ns.command, file=ns.file, entry=ns.entry,
                    arg=ns.arg, dependent=ns.dependent,
                    structural_patterns=ns.structural_patterns, fuel=fuel,
                    show_trace=ns.trace)
    return main(cfg)


if __name__ == "__main__":
    sys.exit(entry())
