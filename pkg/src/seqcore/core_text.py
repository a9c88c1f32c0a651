"""Canonical text form of core syntax, round-trippable.

Term forms: ``done d``, ``\\p. t``, ``x [k]``-style applications (the spine is
printed after the head), ``<t, u>``, ``split x { inl -> t ; inr -> u }``,
``let p = d in t``, and ``(t) k`` for application cuts.  Spines print as
``[]`` for the empty spine, ``(d :: k)``, ``.1 k``, ``.2 k`` and
``kappa p. t``.  Patterns print as ``x``, ``_``, ``(p, q)``, ``[p|q]_w`` and
``p @ q``; data as ``thunk (t)``, ``(d, e)``, ``inl d``, ``inr d``.

The printer renames binders where display texts would collide (or shadow a
free name), so printed output of a closed term always re-parses; parsing
yields tag-0 names, hence print-then-parse returns an alpha-equal term and a
second print round-trip is the identity on the text.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diag import Diagnostic, ParseError, Span
from .syntax import (
    App, AppCut, Atom, BindCut, Cons, DataVal, Done, Down, DPair, Imp, Inl,
    Inr, Kappa, Lam, Name, NegType, Nil, Or, Pair, Pattern, PAt, Pi, POr,
    PosType, PPair, Prod, Proj1, Proj2, PWild, Sigma, Spine, Split, Term,
    Thunk, Up, Var, With, free_names, pattern_labels, pattern_vars,
)

__all__ = ["print_term", "print_data", "print_spine", "print_pattern",
           "parse_term", "print_neg", "print_pos", "print_type"]

_KEYWORDS = {"done", "thunk", "inl", "inr", "split", "let", "in", "kappa"}


# ---------------------------------------------------------------------------
# Printing

class _Printer:
    def __init__(self, reserved: set[str]):
        self.reserved = set(reserved) | _KEYWORDS

    def _pick(self, scope: dict[Name, str], name: Name) -> str:
        # Leading underscores are label/wildcard syntax, never display names.
        taken = self.reserved | set(scope.values())
        base = name.text.lstrip("_") or "v"
        if base not in taken:
            return base
        i = 2
        while f"{base}_{i}" in taken:
            i += 1
        return f"{base}_{i}"

    def bind_pattern(self, scope: dict[Name, str], p: Pattern) -> dict[Name, str]:
        scope = dict(scope)
        for n in pattern_vars(p) + pattern_labels(p):
            scope[n] = self._pick(scope, n)
        return scope

    def name(self, scope: dict[Name, str], n: Name) -> str:
        if n in scope:
            return scope[n]
        return n.text if n.tag == 0 else f"{n.text}#{n.tag}"

    def pattern(self, scope: dict[Name, str], p: Pattern, atom: bool = False) -> str:
        match p:
            case Var(x):
                return self.name(scope, x)
            case PWild():
                return "_"
            case PPair(a, b):
                return f"({self.pattern(scope, a)}, {self.pattern(scope, b)})"
            case POr(w, a, b):
                return f"[{self.pattern(scope, a)}|{self.pattern(scope, b)}]_{self.name(scope, w)}"
            case PAt(a, b):
                s = f"{self.pattern(scope, a, atom=True)} @ {self.pattern(scope, b, atom=True)}"
                return f"({s})" if atom else s
        raise TypeError(p)

    def term(self, scope: dict[Name, str], t: Term) -> str:
        match t:
            case Done(d):
                return f"done {self.data(scope, d)}"
            case Lam(p, b):
                inner = self.bind_pattern(scope, p)
                return f"\\{self.pattern(inner, p)}. {self.term(inner, b)}"
            case App(h, k):
                return f"{self.name(scope, h)} {self.spine(scope, k)}"
            case Pair(l, r):
                return f"<{self.term(scope, l)}, {self.term(scope, r)}>"
            case Split(w, l, r):
                return (f"split {self.name(scope, w)} {{ inl -> {self.term(scope, l)}"
                        f" ; inr -> {self.term(scope, r)} }}")
            case BindCut(p, d, b):
                inner = self.bind_pattern(scope, p)
                return (f"let {self.pattern(inner, p)} = {self.data(scope, d)}"
                        f" in {self.term(inner, b)}")
            case AppCut(f, k):
                return f"({self.term(scope, f)}) {self.spine(scope, k)}"
        raise TypeError(t)

    def data(self, scope: dict[Name, str], d: DataVal) -> str:
        match d:
            case Thunk(t):
                return f"thunk ({self.term(scope, t)})"
            case DPair(l, r):
                return f"({self.data(scope, l)}, {self.data(scope, r)})"
            case Inl(e):
                return f"inl {self.data(scope, e)}"
            case Inr(e):
                return f"inr {self.data(scope, e)}"
        raise TypeError(d)

    def spine(self, scope: dict[Name, str], k: Spine) -> str:
        match k:
            case Nil():
                return "[]"
            case Cons(d, r):
                return f"({self.data(scope, d)} :: {self.spine(scope, r)})"
            case Proj1(r):
                return f".1 {self.spine(scope, r)}"
            case Proj2(r):
                return f".2 {self.spine(scope, r)}"
            case Kappa(p, b):
                inner = self.bind_pattern(scope, p)
                return f"kappa {self.pattern(inner, p)}. {self.term(inner, b)}"
        raise TypeError(k)


def _reserved_for(x) -> set[str]:
    return {n.text for n in free_names(x)}


def print_term(t: Term) -> str:
    return _Printer(_reserved_for(t)).term({}, t)


def print_data(d: DataVal) -> str:
    return _Printer(_reserved_for(d)).data({}, d)


def print_spine(k: Spine) -> str:
    return _Printer(_reserved_for(k)).spine({}, k)


def print_pattern(p: Pattern) -> str:
    pr = _Printer(set())
    return pr.pattern(pr.bind_pattern({}, p), p)


# ---------------------------------------------------------------------------
# Type printing (diagnostics and `core` output; not parsed back)

def print_neg(ty: NegType, prec: int = 0) -> str:
    match ty:
        case Atom(n, args):
            if not args:
                return str(n)
            body = " ".join(f"({print_data(a)})" for a in args)
            s = f"{n} {body}"
            return f"({s})" if prec > 2 else s
        case Up(p):
            s = f"up {print_pos(p, 3)}"
            return f"({s})" if prec > 2 else s
        case Imp(a, r):
            s = f"{print_pos(a, 2)} -> {print_neg(r, 1)}"
            return f"({s})" if prec > 1 else s
        case With(l, r):
            s = f"{print_neg(l, 3)} /\\ {print_neg(r, 2)}"
            return f"({s})" if prec > 2 else s
        case Pi(x, a, r):
            s = f"Pi ({x} : {print_pos(a)}). {print_neg(r, 1)}"
            return f"({s})" if prec > 1 else s
    raise TypeError(ty)


def print_pos(ty: PosType, prec: int = 0) -> str:
    match ty:
        case Down(n):
            s = f"dn {print_neg(n, 3)}"
            return f"({s})" if prec > 2 else s
        case Or(l, r):
            s = f"{print_pos(l, 3)} + {print_pos(r, 2)}"
            return f"({s})" if prec > 2 else s
        case Prod(l, r):
            s = f"{print_pos(l, 3)} * {print_pos(r, 2)}"
            return f"({s})" if prec > 2 else s
        case Sigma(x, a, b):
            s = f"Sigma ({x} : {print_pos(a)}). {print_pos(b, 1)}"
            return f"({s})" if prec > 1 else s
    raise TypeError(ty)


def print_type(ty) -> str:
    return print_neg(ty) if isinstance(ty, NegType) else print_pos(ty)


# ---------------------------------------------------------------------------
# Lexer

@dataclass(frozen=True)
class _Tok:
    kind: str   # NAME UIDENT WILD PUNCT EOF
    text: str
    line: int
    col: int


_PUNCT2 = ("::", "->", ".1", ".2")
_PUNCT1 = "\\.,<>{}()[]|;@="


def _lex(src: str, file: str = "<core>") -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if c.isspace():
            col, i = col + 1, i + 1
            continue
        two = src[i:i + 2]
        if two in _PUNCT2:
            toks.append(_Tok("PUNCT", two, line, col))
            col, i = col + 2, i + 2
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            text = src[i:j]
            if text == "_":
                toks.append(_Tok("WILD", text, line, col))
            elif text.startswith("_"):
                toks.append(_Tok("UIDENT", text[1:], line, col))
            else:
                toks.append(_Tok("NAME", text, line, col))
            col, i = col + (j - i), j
            continue
        if c in _PUNCT1:
            toks.append(_Tok("PUNCT", c, line, col))
            col, i = col + 1, i + 1
            continue
        raise ParseError(Diagnostic("parse", expected="token", found=repr(c),
                                    span=Span(file, line, col)))
    toks.append(_Tok("EOF", "", line, col))
    return toks


class _Reader:
    def __init__(self, toks: list[_Tok], file: str):
        self.toks = toks
        self.pos = 0
        self.file = file

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, expected: str) -> ParseError:
        t = self.peek()
        return ParseError(Diagnostic(
            "parse", expected=expected, found=t.text or "end of input",
            span=Span(self.file, t.line, t.col)))

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind not in ("PUNCT", "NAME"):
            raise self.fail(repr(text))
        return self.next()

    def name(self) -> Name:
        t = self.peek()
        if t.kind != "NAME" or t.text in _KEYWORDS:
            raise self.fail("identifier")
        self.next()
        return Name(t.text)

    # -- terms --------------------------------------------------------------

    def term(self) -> Term:
        t = self.peek()
        if t.text == "done":
            self.next()
            return Done(self.data())
        if t.text == "\\":
            self.next()
            p = self.pattern()
            self.expect(".")
            return Lam(p, self.term())
        if t.text == "<":
            self.next()
            l = self.term()
            self.expect(",")
            r = self.term()
            self.expect(">")
            return Pair(l, r)
        if t.text == "split":
            self.next()
            w = self.name()
            self.expect("{")
            self.expect("inl")
            self.expect("->")
            l = self.term()
            self.expect(";")
            self.expect("inr")
            self.expect("->")
            r = self.term()
            self.expect("}")
            return Split(w, l, r)
        if t.text == "let":
            self.next()
            p = self.pattern()
            self.expect("=")
            d = self.data()
            self.expect("in")
            return BindCut(p, d, self.term())
        if t.kind == "NAME":
            h = self.name()
            return App(h, self.spine())
        if t.text == "(":
            self.next()
            inner = self.term()
            self.expect(")")
            if self._at_spine():
                return AppCut(inner, self.spine())
            return inner
        raise self.fail("term")

    def _at_spine(self) -> bool:
        return self.peek().text in ("[", "(", ".1", ".2", "kappa")

    # -- data ---------------------------------------------------------------

    def data(self) -> DataVal:
        t = self.peek()
        if t.text == "thunk":
            self.next()
            return Thunk(self.term())
        if t.text == "inl":
            self.next()
            return Inl(self.data())
        if t.text == "inr":
            self.next()
            return Inr(self.data())
        if t.text == "(":
            self.next()
            l = self.data()
            self.expect(",")
            r = self.data()
            self.expect(")")
            return DPair(l, r)
        raise self.fail("data")

    # -- spines -------------------------------------------------------------

    def spine(self) -> Spine:
        t = self.peek()
        if t.text == "[":
            self.next()
            self.expect("]")
            return Nil()
        if t.text == "(":
            self.next()
            d = self.data()
            self.expect("::")
            k = self.spine()
            self.expect(")")
            return Cons(d, k)
        if t.text == ".1":
            self.next()
            return Proj1(self.spine())
        if t.text == ".2":
            self.next()
            return Proj2(self.spine())
        if t.text == "kappa":
            self.next()
            p = self.pattern()
            self.expect(".")
            return Kappa(p, self.term())
        raise self.fail("spine")

    # -- patterns -----------------------------------------------------------

    def pattern(self) -> Pattern:
        p = self.pattern_atom()
        if self.peek().text == "@":
            self.next()
            return PAt(p, self.pattern())
        return p

    def pattern_atom(self) -> Pattern:
        t = self.peek()
        if t.kind == "WILD":
            self.next()
            return PWild()
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            return Var(self.name())
        if t.text == "(":
            self.next()
            p = self.pattern()
            if self.peek().text == ",":
                self.next()
                q = self.pattern()
                self.expect(")")
                return PPair(p, q)
            self.expect(")")
            return p
        if t.text == "[":
            self.next()
            p = self.pattern()
            self.expect("|")
            q = self.pattern()
            self.expect("]")
            lbl = self.peek()
            if lbl.kind != "UIDENT":
                raise self.fail("_label after or-pattern")
            self.next()
            return POr(Name(lbl.text), p, q)
        raise self.fail("pattern")


def parse_term(src: str, file: str = "<core>") -> Term:
    r = _Reader(_lex(src, file), file)
    t = r.term()
    if r.peek().kind != "EOF":
        raise r.fail("end of input")
    return t
