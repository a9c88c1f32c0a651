"""Shared fixtures: the example program suite and common signatures."""

from __future__ import annotations

import pathlib

from seqcore.check import check_term
from seqcore.check_dep import dep_check_term
from seqcore.surface import Program, load_program
from seqcore.syntax import Atom, Down, Imp, Mode, Name, Sig, SigEntry

PROGRAMS = pathlib.Path(__file__).parent / "programs"

# (file, mode, needs structural flag)
SUITE = (
    ("f.seq", Mode.PROP, False),
    ("f_run.seq", Mode.PROP, False),
    ("basics.seq", Mode.PROP, False),
    ("sums.seq", Mode.PROP, False),
    ("calls.seq", Mode.PROP, False),
    ("eta.seq", Mode.PROP, False),
    ("wild.seq", Mode.PROP, True),
    ("pfree.seq", Mode.PROP, False),
    ("swap_dep.seq", Mode.DEP, False),
)


def source(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")


def load(name: str) -> Program:
    file, mode, _structural = next(e for e in SUITE if e[0] == name)
    return load_program(source(name), name, mode)


def check_program(prog: Program, mode: Mode, structural: bool):
    """Typecheck every definition; returns list of (name, diagnostic)."""
    bad = []
    for d in prog.decls:
        if d.kind != "def":
            continue
        if mode is Mode.DEP:
            diag = dep_check_term(prog.sig, [], d.term, d.type)
        else:
            diag = check_term(prog.sig, [], d.term, d.type, structural=structural)
        if diag is not None:
            bad.append((str(d.name), diag))
    return bad


def tiny_sig() -> Sig:
    """One atom, one ground constant, one unary function."""
    a = Atom(Name("a"))
    return Sig(frozenset({Name("a")}),
               (SigEntry(Name("z"), a),
                SigEntry(Name("f"), Imp(Down(a), a))))


def render_program(prog: Program) -> str:
    """Program back in surface syntax, one equation per split leaf."""
    from seqcore.surface import pretty_equations
    out = []
    for d in prog.decls:
        if d.kind == "atom":
            out.append(f"atom {d.name}")
        elif d.kind == "postulate":
            out.append(f"postulate {d.name} : {surface_type(d.type)}")
        else:
            eqs = pretty_equations(d.name, d.term, d.type)
            out.append(f"{d.name} : {surface_type(d.type)}")
            out.append(eqs)
    return "\n".join(out) + "\n"


def surface_type(ty) -> str:
    from seqcore.syntax import Atom, Down, Imp, Or, Prod, Up, With
    match ty:
        case Atom(n, ()):
            return str(n)
        case Imp(a, r):
            return f"{surface_pos(a)} -> {surface_type(r)}"
        case With(l, r):
            return f"({surface_type(l)}) /\\ ({surface_type(r)})"
        case Up(p):
            return surface_pos(p)
    raise AssertionError(ty)


def surface_pos(ty) -> str:
    from seqcore.syntax import Down, Or, Prod
    match ty:
        case Down(n):
            s = surface_type(n)
            return f"({s})" if " " in s else s
        case Or(l, r):
            return f"({surface_pos(l)} + {surface_pos(r)})"
        case Prod(l, r):
            return f"({surface_pos(l)} * {surface_pos(r)})"
    raise AssertionError(ty)
