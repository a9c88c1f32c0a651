"""Surface language: equational declarations compiled to core terms.

A program is a sequence of blocks::

    atom nat
    postulate add : nat -> nat -> nat
    f : (nat * nat) + nat -> nat
    f (inl (x, y)) = add x y
    f (inr z) = z

Types use ``->`` (right associative), one level of ``*``, ``+`` and ``/\\``
(left associative), and ``Pi (x : T). T`` / ``Sigma (x : T). T`` in dependent
mode.  Clause left-hand sides carry patterns (variables, ``_``, ``x@p``,
``(p, q)``, ``inl p``, ``inr p``); right-hand sides are applications, pairs
and injections.  ``--`` starts a line comment.

Compilation is type-directed, column by column, leftmost argument first, with
first-match semantics.  All clause patterns for one argument fuse into a
single core pattern: every sum position becomes a labeled or-pattern and the
body the corresponding tree of splits; every product position a pair pattern.
A clause variable naming a whole sum or product is compiled by eta-expansion,
its uses replaced by reconstructed data, so every surface program lands in
the fragment the kernel accepts.  An as-pattern at a thunk type becomes a
genuine contraction pattern; at composite types the name simply binds the
reconstruction.  In dependent mode arguments bind bare variables and the same
tree is emitted as explicit pair-lets and splits instead of deep patterns.

Polarity coercions are inserted here and only here: a thunk-typed variable
used as an argument becomes ``thunk (x [])``, a right-hand side at a shifted
goal is wrapped in ``done``, and the kernel never sees an unshifted mix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .check_dep import convert
from .core_text import print_term, print_type
from .diag import Diagnostic, ParseError, Span
from .syntax import (
    App, Atom, BindCut, Cons, DataVal, Done, Down, DPair, Imp, Inl,
    Inr, Lam, Mode, Name, NegType, Nil, Or, Pair, Pattern, PAt, Pi, POr,
    PosType, PPair, Prod, PWild, Sig, SigEntry, Sigma, Spine, Split, Term,
    Thunk, Up, Var, With, alpha_eq, eta, fresh, subst_data_in_neg,
    subst_data_in_pos, well_formed_neg,
)

__all__ = [
    "SurfaceDecl", "Clause", "CaseTree", "Leaf", "SplitNode", "PairNode",
    "Fail", "CompileFail", "CompiledDecl", "Program",
    "parse", "polarize", "compile_clauses", "pretty_equations", "load_program",
]


# ---------------------------------------------------------------------------
# Surface AST

class SType:
    __slots__ = ()


@dataclass(frozen=True)
class TName(SType):
    name: str
    span: Span


@dataclass(frozen=True)
class TArrow(SType):
    arg: SType
    res: SType


@dataclass(frozen=True)
class TBin(SType):
    op: str            # "*" | "+" | "/\\"
    left: SType
    right: SType


@dataclass(frozen=True)
class TBind(SType):
    head: str          # "Pi" | "Sigma"
    var: str
    arg: SType
    body: SType
    span: Span


class SPat:
    __slots__ = ()


@dataclass(frozen=True)
class PVarS(SPat):
    name: str
    span: Span


@dataclass(frozen=True)
class PWildS(SPat):
    span: Span


@dataclass(frozen=True)
class PAsS(SPat):
    name: str
    pat: SPat
    span: Span


@dataclass(frozen=True)
class PPairS(SPat):
    left: SPat
    right: SPat


@dataclass(frozen=True)
class PInlS(SPat):
    pat: SPat


@dataclass(frozen=True)
class PInrS(SPat):
    pat: SPat


class SExpr:
    __slots__ = ()


@dataclass(frozen=True)
class EApp(SExpr):
    head: str
    args: tuple["SExpr", ...]
    span: Span


@dataclass(frozen=True)
class EPair(SExpr):
    left: SExpr
    right: SExpr


@dataclass(frozen=True)
class EInl(SExpr):
    body: SExpr


@dataclass(frozen=True)
class EInr(SExpr):
    body: SExpr


@dataclass(frozen=True)
class Clause:
    lhs: tuple[SPat, ...]
    rhs: SExpr
    span: Span


@dataclass(frozen=True)
class SurfaceDecl:
    kind: str                   # "atom" | "postulate" | "def"
    name: str
    span: Span
    type: Optional[SType] = None
    clauses: tuple[Clause, ...] = ()


# ---------------------------------------------------------------------------
# Lexer and parser

_KEYWORDS = {"atom", "postulate", "inl", "inr", "Pi", "Sigma"}
_SYMS2 = ("->", "/\\")
_SYMS1 = ":()=,@*+._"


@dataclass(frozen=True)
class _Tok:
    kind: str    # NAME WILD SYM NL EOF
    text: str
    span: Span


def _lex(src: str, file: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, i = 1, 1, 0
    n = len(src)

    def emit_nl(ln: int, cl: int) -> None:
        if toks and toks[-1].kind != "NL":
            toks.append(_Tok("NL", "", Span(file, ln, cl)))

    while i < n:
        c = src[i]
        if c == "\n":
            emit_nl(line, col)
            line, col, i = line + 1, 1, i + 1
            continue
        if c.isspace():
            col, i = col + 1, i + 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if src[i:i + 2] in _SYMS2:
            toks.append(_Tok("SYM", src[i:i + 2], Span(file, line, col)))
            col, i = col + 2, i + 2
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            text = src[i:j]
            kind = "WILD" if text == "_" else "NAME"
            toks.append(_Tok(kind, text, Span(file, line, col)))
            col, i = col + (j - i), j
            continue
        if c in _SYMS1:
            toks.append(_Tok("SYM", c, Span(file, line, col)))
            col, i = col + 1, i + 1
            continue
        raise ParseError(Diagnostic("parse", expected="token", found=repr(c),
                                    span=Span(file, line, col)))
    emit_nl(line, col)
    toks.append(_Tok("EOF", "", Span(file, line, col)))
    return toks


class _P:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, expected: str) -> ParseError:
        t = self.peek()
        return ParseError(Diagnostic("parse", expected=expected,
                                     found=t.text or t.kind.lower(), span=t.span))

    def eat_sym(self, text: str) -> _Tok:
        t = self.peek()
        if t.kind != "SYM" or t.text != text:
            raise self.fail(repr(text))
        return self.next()

    def eat_name(self) -> _Tok:
        t = self.peek()
        if t.kind != "NAME" or t.text in _KEYWORDS:
            raise self.fail("identifier")
        return self.next()

    def eat_nl(self) -> None:
        if self.peek().kind == "EOF":
            return
        if self.peek().kind != "NL":
            raise self.fail("end of line")
        self.next()

    def skip_nls(self) -> None:
        while self.peek().kind == "NL":
            self.next()

    # types

    def type_(self) -> SType:
        t1 = self.type1()
        if self.peek().text == "->":
            self.next()
            return TArrow(t1, self.type_())
        return t1

    def type1(self) -> SType:
        t = self.type2()
        while self.peek().text in ("*", "+", "/\\"):
            op = self.next().text
            t = TBin(op, t, self.type2())
        return t

    def type2(self) -> SType:
        t = self.peek()
        if t.kind == "NAME" and t.text in ("Pi", "Sigma"):
            self.next()
            self.eat_sym("(")
            var = self.eat_name()
            self.eat_sym(":")
            arg = self.type_()
            self.eat_sym(")")
            self.eat_sym(".")
            return TBind(t.text, var.text, arg, self.type_(), t.span)
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            self.next()
            return TName(t.text, t.span)
        if t.text == "(":
            self.next()
            inner = self.type_()
            self.eat_sym(")")
            return inner
        raise self.fail("type")

    # patterns

    def pattern(self) -> SPat:
        t = self.peek()
        if t.kind == "WILD":
            self.next()
            return PWildS(t.span)
        if t.text == "inl":
            self.next()
            return PInlS(self.pattern_atom())
        if t.text == "inr":
            self.next()
            return PInrS(self.pattern_atom())
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            self.next()
            if self.peek().text == "@":
                self.next()
                return PAsS(t.text, self.pattern(), t.span)
            return PVarS(t.text, t.span)
        if t.text == "(":
            return self.pattern_atom()
        raise self.fail("pattern")

    def pattern_atom(self) -> SPat:
        t = self.peek()
        if t.text == "(":
            self.next()
            p = self.pattern()
            if self.peek().text == ",":
                self.next()
                q = self.pattern()
                self.eat_sym(")")
                return PPairS(p, q)
            self.eat_sym(")")
            return p
        return self.pattern()

    # expressions

    def expr(self) -> SExpr:
        t = self.peek()
        if t.text in ("inl", "inr") or t.text == "(":
            return self.expr_atom()
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            self.next()
            args = []
            while self._at_arg():
                args.append(self.expr_atom())
            return EApp(t.text, tuple(args), t.span)
        raise self.fail("expression")

    def _at_arg(self) -> bool:
        t = self.peek()
        if t.text == "(" or t.text in ("inl", "inr"):
            return True
        return t.kind == "NAME" and t.text not in _KEYWORDS

    def expr_atom(self) -> SExpr:
        t = self.peek()
        if t.text == "inl":
            self.next()
            return EInl(self.expr_atom())
        if t.text == "inr":
            self.next()
            return EInr(self.expr_atom())
        if t.kind == "NAME" and t.text not in _KEYWORDS:
            self.next()
            return EApp(t.text, (), t.span)
        if t.text == "(":
            self.next()
            e = self.expr()
            if self.peek().text == ",":
                self.next()
                e2 = self.expr()
                self.eat_sym(")")
                return EPair(e, e2)
            self.eat_sym(")")
            return e
        raise self.fail("expression")


def _decl_name(p: _P) -> _Tok:
    # Declared names must not start with an underscore; that prefix belongs
    # to the core syntax for or-pattern labels.
    t = p.eat_name()
    if t.text.startswith("_"):
        raise ParseError(Diagnostic(
            "parse", expected="declaration name without leading underscore",
            found=t.text, span=t.span))
    return t


def parse(source: str, file: str = "<surface>") -> list[SurfaceDecl]:
    """Parse a surface program into declarations with their clauses."""
    p = _P(_lex(source, file))
    decls: list[SurfaceDecl] = []
    open_def: Optional[int] = None

    p.skip_nls()
    while p.peek().kind != "EOF":
        t = p.peek()
        if t.text == "atom":
            p.next()
            name = _decl_name(p)
            p.eat_nl()
            decls.append(SurfaceDecl("atom", name.text, name.span))
            open_def = None
        elif t.text == "postulate":
            p.next()
            name = _decl_name(p)
            p.eat_sym(":")
            ty = p.type_()
            p.eat_nl()
            decls.append(SurfaceDecl("postulate", name.text, name.span, type=ty))
            open_def = None
        elif t.kind == "NAME":
            name = p.eat_name()
            if p.peek().text == ":":
                if name.text.startswith("_"):
                    raise ParseError(Diagnostic(
                        "parse",
                        expected="declaration name without leading underscore",
                        found=name.text, span=name.span))
                p.next()
                ty = p.type_()
                p.eat_nl()
                decls.append(SurfaceDecl("def", name.text, name.span, type=ty))
                open_def = len(decls) - 1
            else:
                pats = []
                while p.peek().text != "=":
                    pats.append(p.pattern())
                p.eat_sym("=")
                rhs = p.expr()
                p.eat_nl()
                if open_def is None or decls[open_def].name != name.text:
                    raise ParseError(Diagnostic(
                        "parse", expected="clause following its declaration",
                        found=name.text, span=name.span))
                d = decls[open_def]
                if d.clauses and len(d.clauses[0].lhs) != len(pats):
                    raise ParseError(Diagnostic(
                        "arity", expected=f"{len(d.clauses[0].lhs)} pattern(s)",
                        found=str(len(pats)), span=name.span))
                decls[open_def] = SurfaceDecl(
                    d.kind, d.name, d.span, d.type,
                    d.clauses + (Clause(tuple(pats), rhs, name.span),))
        else:
            raise p.fail("declaration")
        p.skip_nls()
    return decls


# ---------------------------------------------------------------------------
# Polarization

def polarize(ty: SType, sig: Sig, mode: Mode = Mode.PROP) -> NegType:
    """Insert the minimal shifts making a surface type a negative kernel type:
    atoms are negative, arrows take a positive argument, sums and products are
    positive with shifted components."""
    return _neg_of(ty, sig, mode)


def _neg_of(ty: SType, sig: Sig, mode: Mode) -> NegType:
    match ty:
        case TName(n, span):
            if Name(n) not in sig.atoms:
                raise CompileFail(Diagnostic("atom", expected="declared atom",
                                             found=n, span=span))
            return Atom(Name(n))
        case TArrow(a, r):
            arg = _pos_of(a, sig, mode)
            if mode is Mode.DEP:
                return Pi(fresh("_"), arg, _neg_of(r, sig, mode))
            return Imp(arg, _neg_of(r, sig, mode))
        case TBin("/\\", l, r):
            return With(_neg_of(l, sig, mode), _neg_of(r, sig, mode))
        case TBin(_, _, _) | TBind("Sigma", _, _, _, _):
            return Up(_pos_of(ty, sig, mode))
        case TBind("Pi", x, a, b, span):
            if mode is not Mode.DEP:
                raise CompileFail(Diagnostic("mode", expected="propositional type",
                                             found="Pi", span=span))
            return Pi(fresh(x), _pos_of(a, sig, mode), _neg_of(b, sig, mode))
    raise TypeError(ty)


def _pos_of(ty: SType, sig: Sig, mode: Mode) -> PosType:
    match ty:
        case TBin("+", l, r):
            return Or(_pos_of(l, sig, mode), _pos_of(r, sig, mode))
        case TBin("*", l, r):
            pl, pr = _pos_of(l, sig, mode), _pos_of(r, sig, mode)
            return Sigma(fresh("_"), pl, pr) if mode is Mode.DEP else Prod(pl, pr)
        case TBind("Sigma", x, a, b, span):
            if mode is not Mode.DEP:
                raise CompileFail(Diagnostic("mode", expected="propositional type",
                                             found="Sigma", span=span))
            return Sigma(fresh(x), _pos_of(a, sig, mode), _pos_of(b, sig, mode))
        case _:
            return Down(_neg_of(ty, sig, mode))


# ---------------------------------------------------------------------------
# Case trees

class CaseTree:
    __slots__ = ()


@dataclass(frozen=True)
class Leaf(CaseTree):
    clause: int


@dataclass(frozen=True)
class SplitNode(CaseTree):
    path: tuple
    left: CaseTree
    right: CaseTree


@dataclass(frozen=True)
class PairNode(CaseTree):
    path: tuple
    sub: CaseTree


@dataclass(frozen=True)
class Fail(CaseTree):
    path: tuple
    side: str


def tree_has_fail(t: CaseTree) -> bool:
    match t:
        case Fail(_, _):
            return True
        case SplitNode(_, l, r):
            return tree_has_fail(l) or tree_has_fail(r)
        case PairNode(_, s):
            return tree_has_fail(s)
        case _:
            return False


class CompileFail(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic


# ---------------------------------------------------------------------------
# Pattern fusion

@dataclass
class _VarB:
    core: Name
    type: NegType


@dataclass
class _DataB:
    path: tuple
    type: PosType


_Binding = Union[_VarB, _DataB]


@dataclass
class _Fusion:
    """Per-position facts accumulated while fusing the clause matrix."""

    mode: Mode
    span: Span
    pos_types: dict[tuple, PosType] = field(default_factory=dict)
    labels: dict[tuple, Name] = field(default_factory=dict)     # sum positions
    var_at: dict[tuple, Name] = field(default_factory=dict)     # thunk positions
    pos_var: dict[tuple, Name] = field(default_factory=dict)    # dependent scrutinees
    binds: dict[int, dict[str, _Binding]] = field(default_factory=dict)
    clause_pat: dict[tuple[int, tuple], SPat] = field(default_factory=dict)

    def bind(self, cid: int, name: str, b: _Binding, span: Span) -> None:
        if name in self.binds[cid]:
            raise CompileFail(Diagnostic(
                "linear", expected="pairwise distinct clause variables",
                found=name, span=span))
        self.binds[cid][name] = b


def _peel_as(sp: Optional[SPat]) -> tuple[list[tuple[str, Span]], Optional[SPat]]:
    names: list[tuple[str, Span]] = []
    while isinstance(sp, PAsS):
        names.append((sp.name, sp.span))
        sp = sp.pat
    return names, sp


def _fuse(fz: _Fusion, path: tuple, ty: PosType,
          pats: dict[int, Optional[SPat]]) -> Pattern:
    fz.pos_types[path] = ty
    peeled = {cid: _peel_as(sp) for cid, sp in pats.items()}
    plain = {cid: sp for cid, (_, sp) in peeled.items()}
    for cid, (_, sp) in peeled.items():
        if sp is not None:
            fz.clause_pat[(cid, path)] = sp

    all_wild = pats and all(isinstance(sp, PWildS) for sp in plain.values()) \
        and not any(names for names, _ in peeled.values())
    if all_wild:
        return PWild()

    match ty:
        case Down(n):
            return _fuse_down(fz, path, n, peeled, plain)
        case Or(pl, pr):
            if fz.mode is Mode.DEP and path not in fz.pos_var:
                fz.pos_var[path] = fresh("s")
            w = fresh("w")
            fz.labels[path] = w
            left: dict[int, Optional[SPat]] = {}
            right: dict[int, Optional[SPat]] = {}
            for cid, sp in plain.items():
                match sp:
                    case PInlS(q):
                        left[cid] = q
                    case PInrS(q):
                        right[cid] = q
                    case None | PVarS(_, _) | PWildS(_):
                        left[cid] = None
                        right[cid] = None
                    case _:
                        raise CompileFail(Diagnostic(
                            "pattern", expected="injection or variable at a sum type",
                            found=_spat_shape(sp), span=_spat_span(sp, fz.span)))
            if fz.mode is Mode.DEP:
                # Branches rebind the scrutinee at the refined type.
                fz.pos_var[path + ("inl",)] = fz.pos_var[path]
                fz.pos_var[path + ("inr",)] = fz.pos_var[path]
            fl = _fuse(fz, path + ("inl",), pl, left)
            fr = _fuse(fz, path + ("inr",), pr, right)
            _bind_composites(fz, path, ty, peeled, plain)
            return POr(w, fl, fr)
        case Prod(_, _) | Sigma(_, _, _):
            lefts: dict[int, Optional[SPat]] = {}
            rights: dict[int, Optional[SPat]] = {}
            for cid, sp in plain.items():
                match sp:
                    case PPairS(a, b):
                        lefts[cid] = a
                        rights[cid] = b
                    case None | PVarS(_, _) | PWildS(_):
                        lefts[cid] = None
                        rights[cid] = None
                    case _:
                        raise CompileFail(Diagnostic(
                            "pattern", expected="pair or variable at a product type",
                            found=_spat_shape(sp), span=_spat_span(sp, fz.span)))
            if fz.mode is Mode.DEP:
                base = fz.pos_var.setdefault(path, fresh("s"))
                fz.pos_var[path + ("fst",)] = fresh(
                    _var_text(lefts.values(), base.text + "1"))
                fz.pos_var[path + ("snd",)] = fresh(
                    _var_text(rights.values(), base.text + "2"))
            fl = _fuse(fz, path + ("fst",), _fst_type(ty), lefts)
            snd_ty = _snd_type(fz, path, ty, fl)
            fr = _fuse(fz, path + ("snd",), snd_ty, rights)
            _bind_composites(fz, path, ty, peeled, plain)
            return PPair(fl, fr)
    raise CompileFail(Diagnostic("pattern", expected="positive argument type",
                                 found=print_type(ty), span=fz.span))


def _fuse_down(fz: _Fusion, path: tuple, n: NegType, peeled, plain) -> Pattern:
    # Every name any clause binds here shares the stored hypothesis; an
    # as-chain needs one extra kernel variable per extra name (contraction).
    width = 0
    for cid, (names, sp) in peeled.items():
        here = len(names) + (1 if isinstance(sp, PVarS) else 0)
        width = max(width, here)
        if sp is not None and not isinstance(sp, (PVarS, PWildS)):
            raise CompileFail(Diagnostic(
                "pattern", expected="variable at a thunk type",
                found=_spat_shape(sp), span=_spat_span(sp, fz.span)))
    # Kernel variables take the source names slot by slot so equations print
    # back with the names the program used.
    slot_texts: list[str] = []
    for i in range(max(width, 1)):
        text = None
        for cid, (names, sp) in peeled.items():
            ordered = [nm for nm, _ in names]
            if isinstance(sp, PVarS):
                ordered.append(sp.name)
            if i < len(ordered):
                text = ordered[i]
                break
        slot_texts.append(text or (_pick_text(plain, peeled) + str(i + 1)))
    vars_ = [fresh(t) for t in slot_texts]
    fz.var_at[path] = vars_[0]
    if fz.mode is Mode.DEP:
        fz.pos_var.setdefault(path, vars_[0])
        fz.var_at[path] = fz.pos_var[path]
        vars_[0] = fz.pos_var[path]
    for cid, (names, sp) in peeled.items():
        ordered = [nm for nm in names]
        if isinstance(sp, PVarS):
            ordered.append((sp.name, sp.span))
        for i, (nm, spn) in enumerate(ordered):
            fz.bind(cid, nm, _VarB(vars_[min(i, len(vars_) - 1)], n), spn)
    if width > 1:
        if fz.mode is Mode.DEP:
            raise CompileFail(Diagnostic(
                "dep-pattern", expected="variable binder",
                found="as-pattern", span=fz.span))
        pat: Pattern = Var(vars_[-1])
        for v in reversed(vars_[:-1]):
            pat = PAt(Var(v), pat)
        return pat
    return Var(vars_[0])


def _bind_composites(fz: _Fusion, path: tuple, ty: PosType, peeled, plain) -> None:
    for cid, (names, sp) in peeled.items():
        for nm, spn in names:
            fz.bind(cid, nm, _DataB(path, ty), spn)
        if isinstance(sp, PVarS):
            fz.bind(cid, sp.name, _DataB(path, ty), sp.span)


def _fst_type(ty: PosType) -> PosType:
    return ty.left if isinstance(ty, Prod) else ty.first


def _snd_type(fz: _Fusion, path: tuple, ty: PosType, first_fused: Pattern) -> PosType:
    if isinstance(ty, Prod):
        return ty.right
    assert isinstance(ty, Sigma)
    if fz.mode is Mode.DEP:
        witness = eta(fz.pos_var[path + ("fst",)])
    else:
        witness = _recon_static(first_fused)
    return subst_data_in_pos(ty.second, ty.binder, witness)


def _recon_static(p: Pattern) -> DataVal:
    match p:
        case Var(x):
            return eta(x)
        case PPair(a, b):
            return DPair(_recon_static(a), _recon_static(b))
        case PAt(a, _):
            return _recon_static(a)
        case _:
            raise CompileFail(Diagnostic(
                "pattern",
                expected="thunk or pair first component under a dependent pair",
                found="sum pattern"))


def _var_text(pats, default: str) -> str:
    for sp in pats:
        while isinstance(sp, PAsS):
            sp = sp.pat
        if isinstance(sp, PVarS):
            return sp.name
    return default


def _pick_text(plain, peeled) -> str:
    for cid, sp in plain.items():
        if isinstance(sp, PVarS):
            return sp.name
    for names, _ in peeled.values():
        if names:
            return names[0][0]
    return "v"


def _spat_shape(p: SPat) -> str:
    return {PVarS: "variable", PWildS: "wildcard", PAsS: "as-pattern",
            PPairS: "pair pattern", PInlS: "inl pattern",
            PInrS: "inr pattern"}[type(p)]


def _spat_span(p: SPat, default: Span) -> Span:
    match p:
        case PVarS(_, s) | PWildS(s) | PAsS(_, _, s):
            return s
        case PPairS(l, _):
            return _spat_span(l, default)
        case PInlS(q) | PInrS(q):
            return _spat_span(q, default)
    return default


# ---------------------------------------------------------------------------
# Decision tree

def _build_tree(fz: _Fusion, fused: list[Pattern], live: list[int]) -> CaseTree:
    def side_of(cid: int, path: tuple) -> Optional[str]:
        sp = fz.clause_pat.get((cid, path))
        if isinstance(sp, PInlS):
            return "left"
        if isinstance(sp, PInrS):
            return "right"
        return None

    def walk(nodes: list[tuple[tuple, Pattern]], live: list[int]) -> CaseTree:
        if not nodes:
            return Leaf(live[0])
        (path, node), rest = nodes[0], nodes[1:]
        match node:
            case POr(_, a, b):
                live_l = [c for c in live if side_of(c, path) != "right"]
                live_r = [c for c in live if side_of(c, path) != "left"]
                l = walk([(path + ("inl",), a)] + rest, live_l) \
                    if live_l else Fail(path, "inl")
                r = walk([(path + ("inr",), b)] + rest, live_r) \
                    if live_r else Fail(path, "inr")
                return SplitNode(path, l, r)
            case PPair(a, b):
                sub = [(path + ("fst",), a), (path + ("snd",), b)] + rest
                return PairNode(path, walk(sub, live))
            case PAt(_, b):
                return walk([(path, b)] + rest, live)
            case _:
                return walk(rest, live)

    return walk([((i,), f) for i, f in enumerate(fused)], live)


def _leaf_stats(fz: _Fusion, tree: CaseTree, all_live: list[int]):
    used: set[int] = set()
    overlap = [False]

    def side_of(cid: int, path: tuple) -> Optional[str]:
        sp = fz.clause_pat.get((cid, path))
        if isinstance(sp, PInlS):
            return "left"
        if isinstance(sp, PInrS):
            return "right"
        return None

    def walk(t: CaseTree, live: list[int]) -> None:
        match t:
            case Leaf(c):
                used.add(c)
                if len(live) > 1:
                    overlap[0] = True
            case SplitNode(path, l, r):
                walk(l, [c for c in live if side_of(c, path) != "right"])
                walk(r, [c for c in live if side_of(c, path) != "left"])
            case PairNode(_, s):
                walk(s, live)
            case Fail(_, _):
                pass

    walk(tree, all_live)
    return used, overlap[0]


def _first_missing(name: str, arity: int, tree: CaseTree) -> str:
    def find(t: CaseTree) -> Optional[tuple[tuple, str]]:
        match t:
            case Fail(path, side):
                return path, side
            case SplitNode(_, l, r):
                return find(l) or find(r)
            case PairNode(_, s):
                return find(s)
        return None

    hit = find(tree)
    assert hit is not None
    path, side = hit
    hole = f"{side} _"
    for step in reversed(path[1:]):
        if step == "fst":
            hole = f"({hole}, _)"
        elif step == "snd":
            hole = f"(_, {hole})"
        else:
            hole = f"{'inl' if step == 'inl' else 'inr'} ({hole})"
    pats = ["_"] * arity
    pats[path[0]] = hole
    return f"{name} {' '.join(pats)}"


# ---------------------------------------------------------------------------
# Right-hand side emission

class _Emitter:
    def __init__(self, sig: Sig, mode: Mode, fz: _Fusion, decl: SurfaceDecl,
                 result: NegType):
        self.sig = sig
        self.mode = mode
        self.fz = fz
        self.decl = decl
        self.result = result
        self.choices: dict[tuple, str] = {}

    def emit(self, tree: CaseTree) -> Term:
        match tree:
            case Leaf(cid):
                return self._rhs_term(cid, self.decl.clauses[cid].rhs, self.result)
            case SplitNode(path, l, r):
                self.choices[path] = "left"
                tl = self.emit(l)
                self.choices[path] = "right"
                tr = self.emit(r)
                del self.choices[path]
                if self.mode is Mode.DEP:
                    return Split(self.fz.pos_var[path], tl, tr)
                return Split(self.fz.labels[path], tl, tr)
            case PairNode(path, s):
                sub = self.emit(s)
                if self.mode is Mode.DEP:
                    y = self.fz.pos_var[path + ("fst",)]
                    z = self.fz.pos_var[path + ("snd",)]
                    return BindCut(PPair(Var(y), Var(z)),
                                   eta(self.fz.pos_var[path]), sub)
                return sub
        raise AssertionError(tree)

    # reconstruction of a composite position as data, under current choices

    def _recon(self, path: tuple) -> DataVal:
        ty = self.fz.pos_types[path]
        match ty:
            case Down(_):
                v = self.fz.pos_var[path] if self.mode is Mode.DEP else self.fz.var_at[path]
                return eta(v)
            case Or(_, _):
                side = self.choices.get(path)
                if side == "left":
                    return Inl(self._recon(path + ("inl",)))
                if side == "right":
                    return Inr(self._recon(path + ("inr",)))
                raise CompileFail(Diagnostic(
                    "pattern", expected="resolved sum position",
                    found="unresolved or-position", span=self.decl.span))
            case Prod(_, _) | Sigma(_, _, _):
                return DPair(self._recon(path + ("fst",)),
                             self._recon(path + ("snd",)))
        raise TypeError(ty)

    # expressions

    def _head(self, cid: int, head: str, span: Span):
        b = self.fz.binds[cid].get(head)
        if b is not None:
            return b
        entry = self.sig.lookup(Name(head))
        if entry is not None:
            return _VarB(Name(head), entry.type)
        raise CompileFail(Diagnostic(
            "unbound", expected="bound variable or declared name",
            found=head, span=span))

    def _types_match(self, a, b) -> bool:
        if self.mode is Mode.DEP:
            return convert(a, b, self.sig)
        return alpha_eq(a, b)

    def _rhs_term(self, cid: int, e: SExpr, goal: NegType) -> Term:
        match goal:
            case Up(p):
                return Done(self._rhs_data(cid, e, p))
            case With(l, r) if isinstance(e, EPair):
                return Pair(self._rhs_term(cid, e.left, l),
                            self._rhs_term(cid, e.right, r))
            case _:
                return self._app_term(cid, e, goal)

    def _app_term(self, cid: int, e: SExpr, goal: NegType) -> Term:
        if not isinstance(e, EApp):
            raise CompileFail(Diagnostic(
                "type", expected=print_type(goal),
                found=_sexpr_shape(e), span=_sexpr_span(e, self.decl.span)))
        b = self._head(cid, e.head, e.span)
        if isinstance(b, _DataB):
            raise CompileFail(Diagnostic(
                "type", expected="thunk-typed head",
                found=f"{e.head} bound at {print_type(b.type)}", span=e.span))
        cur = b.type
        parts: list[DataVal] = []
        for arg in e.args:
            match cur:
                case Imp(p, r):
                    parts.append(self._rhs_data(cid, arg, p))
                    cur = r
                case Pi(x, p, r):
                    d = self._rhs_data(cid, arg, p)
                    parts.append(d)
                    cur = subst_data_in_neg(r, x, d)
                case _:
                    raise CompileFail(Diagnostic(
                        "arity", expected="function taking more arguments",
                        found=e.head, span=e.span))
        if not self._types_match(cur, goal):
            raise CompileFail(Diagnostic(
                "type", expected=print_type(goal), found=print_type(cur),
                span=e.span))
        spine: Spine = Nil()
        for d in reversed(parts):
            spine = Cons(d, spine)
        return App(b.core, spine)

    def _rhs_data(self, cid: int, e: SExpr, p: PosType) -> DataVal:
        if isinstance(e, EApp) and not e.args:
            b = self.fz.binds[cid].get(e.head)
            if isinstance(b, _DataB):
                if not self._types_match(b.type, p):
                    raise CompileFail(Diagnostic(
                        "type", expected=print_type(p), found=print_type(b.type),
                        span=e.span))
                return self._recon(b.path)
        match p:
            case Down(n):
                return Thunk(self._rhs_term(cid, e, n))
            case Or(l, r):
                match e:
                    case EInl(x):
                        return Inl(self._rhs_data(cid, x, l))
                    case EInr(x):
                        return Inr(self._rhs_data(cid, x, r))
                    case _:
                        raise CompileFail(Diagnostic(
                            "type", expected=print_type(p),
                            found=_sexpr_shape(e),
                            span=_sexpr_span(e, self.decl.span)))
            case Prod(l, r):
                if isinstance(e, EPair):
                    return DPair(self._rhs_data(cid, e.left, l),
                                 self._rhs_data(cid, e.right, r))
                raise CompileFail(Diagnostic(
                    "type", expected=print_type(p), found=_sexpr_shape(e),
                    span=_sexpr_span(e, self.decl.span)))
            case Sigma(x, l, r):
                if isinstance(e, EPair):
                    da = self._rhs_data(cid, e.left, l)
                    return DPair(da, self._rhs_data(
                        cid, e.right, subst_data_in_pos(r, x, da)))
                raise CompileFail(Diagnostic(
                    "type", expected=print_type(p), found=_sexpr_shape(e),
                    span=_sexpr_span(e, self.decl.span)))
        raise TypeError(p)


def _sexpr_shape(e: SExpr) -> str:
    return {EApp: "application", EPair: "pair", EInl: "inl",
            EInr: "inr"}[type(e)]


def _sexpr_span(e: SExpr, default: Span) -> Span:
    return e.span if isinstance(e, EApp) else default


# ---------------------------------------------------------------------------
# Compilation entry point

@dataclass
class CompiledDecl:
    kind: str                       # "atom" | "postulate" | "def"
    name: Name
    span: Span
    type: Optional[NegType] = None
    term: Optional[Term] = None
    tree: Optional[CaseTree] = None
    warnings: list[str] = field(default_factory=list)


def compile_clauses(decl: SurfaceDecl, sig: Sig, mode: Mode = Mode.PROP,
                    declared: Optional[NegType] = None) -> CompiledDecl:
    """Compile a definition's clause set into one core term via its splitting
    tree.  Raises CompileFail on coverage or elaboration errors."""
    assert decl.kind == "def"
    ty = declared if declared is not None else polarize(decl.type, sig, mode)
    if not decl.clauses:
        raise CompileFail(Diagnostic(
            "coverage", expected="at least one clause", found="none",
            span=decl.span))
    arity = len(decl.clauses[0].lhs)
    for cl in decl.clauses:
        if len(cl.lhs) != arity:
            raise CompileFail(Diagnostic(
                "arity", expected=f"{arity} pattern(s)",
                found=str(len(cl.lhs)), span=cl.span))

    arg_types: list[PosType] = []
    result = ty
    for _ in range(arity):
        match result:
            case Imp(a, r) | Pi(_, a, r):
                arg_types.append(a)
                result = r
            case _:
                raise CompileFail(Diagnostic(
                    "arity", expected="enough arrows in the declared type",
                    found=f"{arity} clause pattern(s)", span=decl.span))

    fz = _Fusion(mode, decl.clauses[0].span)
    for cid in range(len(decl.clauses)):
        fz.binds[cid] = {}
    # In dependent mode a Pi binder is visible in later argument types; the
    # scrutinee variable doubles as that binder.
    if mode is Mode.DEP:
        arg_types = []
        cur = ty
        for i in range(arity):
            assert isinstance(cur, Pi)
            v = fresh(_var_text((cl.lhs[i] for cl in decl.clauses), f"a{i + 1}"))
            fz.pos_var[(i,)] = v
            arg_types.append(cur.arg)
            cur = subst_data_in_neg(cur.res, cur.binder, eta(v))
        result = cur

    fused: list[Pattern] = []
    for i, p_ty in enumerate(arg_types):
        fused.append(_fuse(fz, (i,), p_ty,
                           {cid: cl.lhs[i] for cid, cl in enumerate(decl.clauses)}))

    tree = _build_tree(fz, fused, list(range(len(decl.clauses))))
    if tree_has_fail(tree):
        raise CompileFail(Diagnostic(
            "coverage", expected="exhaustive clauses",
            found=f"missing case: {_first_missing(decl.name, arity, tree)}",
            span=decl.span))

    warnings: list[str] = []
    used, overlap = _leaf_stats(fz, tree, list(range(len(decl.clauses))))
    for cid in range(len(decl.clauses)):
        if cid not in used:
            warnings.append(f"clause {cid + 1} of {decl.name} is never used")
    if overlap:
        warnings.append(f"clauses of {decl.name} overlap; first match wins")

    emitter = _Emitter(sig, mode, fz, decl, result)
    term = emitter.emit(tree)
    if mode is Mode.DEP:
        for i in range(arity - 1, -1, -1):
            term = Lam(Var(fz.pos_var[(i,)]), term)
    else:
        for i in range(arity - 1, -1, -1):
            term = Lam(fused[i], term)
    return CompiledDecl("def", Name(decl.name), decl.span, ty, term, tree,
                        warnings)


# ---------------------------------------------------------------------------
# Program loading

@dataclass
class Program:
    sig: Sig
    decls: list[CompiledDecl]
    warnings: list[str] = field(default_factory=list)

    def find(self, name: str) -> Optional[CompiledDecl]:
        for d in self.decls:
            if d.name.text == name:
                return d
        return None


def load_program(source: str, file: str = "<surface>",
                 mode: Mode = Mode.PROP) -> Program:
    """Parse and compile a whole program, building its signature in file
    order.  Typechecking of compiled bodies is the caller's concern."""
    decls = parse(source, file)
    sig = Sig()
    out: list[CompiledDecl] = []
    warnings: list[str] = []
    seen: set[str] = set()
    for d in decls:
        if d.name in seen:
            raise CompileFail(Diagnostic(
                "scope", expected="unique declaration name", found=d.name,
                span=d.span))
        seen.add(d.name)
        if d.kind == "atom":
            sig = sig.with_atom(Name(d.name))
            out.append(CompiledDecl("atom", Name(d.name), d.span))
            continue
        ty = polarize(d.type, sig, mode)
        problems: list[Diagnostic] = []
        if not well_formed_neg(ty, sig, mode, problems=problems):
            raise CompileFail(problems[0].at(d.span))
        if d.kind == "postulate":
            sig = sig.with_entry(SigEntry(Name(d.name), ty))
            out.append(CompiledDecl("postulate", Name(d.name), d.span, ty))
            continue
        compiled = compile_clauses(d, sig, mode, declared=ty)
        warnings.extend(compiled.warnings)
        sig = sig.with_entry(SigEntry(Name(d.name), ty, compiled.term))
        out.append(compiled)
    return Program(sig, out, warnings)


# ---------------------------------------------------------------------------
# Standalone argument expressions (CLI --arg)

def compile_argument(sig: Sig, text: str, ty: PosType,
                     mode: Mode = Mode.PROP) -> DataVal:
    """Parse a closed surface expression and elaborate it as data at ``ty``.
    Heads must be signature names."""
    p = _P(_lex(text, "<arg>"))
    expr = p.expr()
    if p.peek().kind not in ("EOF", "NL"):
        raise ParseError(Diagnostic("parse", expected="end of argument",
                                    found=p.peek().text, span=p.peek().span))
    fz = _Fusion(mode, Span("<arg>", 1, 1))
    fz.binds[0] = {}
    shim = SurfaceDecl("def", "<arg>", Span("<arg>", 1, 1))
    emitter = _Emitter(sig, mode, fz, shim, Atom(Name("<arg>")))
    return emitter._rhs_data(0, expr, ty)


# ---------------------------------------------------------------------------
# Equation pretty-printing

def pretty_equations(name, t: Term, ty: NegType) -> str:
    """Reconstruct equations from a compiled term: one equation per split
    leaf.  Terms outside the lambda/split image print as a single
    ``name = <core term>`` line."""
    label = name.text if isinstance(name, Name) else str(name)
    try:
        return "\n".join(_Pretty(label, t, ty).lines())
    except _Unrenderable:
        return f"{label} = {print_term(t)}"


class _Unrenderable(Exception):
    pass


@dataclass
class _Hole:
    """A pattern position being rebuilt while walking the body."""

    kind: str                  # "var" | "pair" | "inl" | "inr" | "wild" | "at"
    name: Optional[Name] = None
    subs: tuple = ()

    def render(self, disp, atom: bool = False) -> str:
        if self.kind == "var":
            return disp(self.name)
        if self.kind == "wild":
            return "_"
        if self.kind == "pair":
            return f"({self.subs[0].render(disp)}, {self.subs[1].render(disp)})"
        if self.kind == "at":
            return f"{disp(self.name)}@{self.subs[0].render(disp, atom=True)}"
        if self.kind == "or":
            # An or-position the body never splits on: outside the
            # equational image.
            raise _Unrenderable()
        s = f"{self.kind} {self.subs[0].render(disp, atom=True)}"
        return f"({s})" if atom else s


class _Pretty:
    def __init__(self, label: str, t: Term, ty: NegType):
        self.label = label
        self.names: dict[Name, str] = {}
        self.taken: set[str] = set()
        self.args: list[_Hole] = []
        self.holes: dict[Name, _Hole] = {}   # binder -> its hole
        body = t
        cur = ty
        while isinstance(body, Lam) and isinstance(cur, (Imp, Pi)):
            hole = self._pattern_hole(body.pat)
            self.args.append(hole)
            body = body.body
            cur = cur.res
        if isinstance(body, Lam):
            raise _Unrenderable()
        self.result = cur
        self.body = body

    def disp(self, n: Name) -> str:
        if n in self.names:
            return self.names[n]
        base = n.text or "v"
        cand = base
        i = 2
        while cand in self.taken:
            cand = f"{base}_{i}"
            i += 1
        self.names[n] = cand
        self.taken.add(cand)
        return cand

    def _pattern_hole(self, p: Pattern) -> _Hole:
        match p:
            case Var(x):
                h = _Hole("var", x)
                self.holes[x] = h
                return h
            case PWild():
                return _Hole("wild")
            case PPair(a, b):
                return _Hole("pair", subs=(self._pattern_hole(a),
                                           self._pattern_hole(b)))
            case POr(w, a, b):
                h = _Hole("or", w, (self._pattern_hole(a), self._pattern_hole(b)))
                self.holes[w] = h
                return h
            case PAt(Var(x), b):
                h = _Hole("at", x, (self._pattern_hole(b),))
                self.holes[x] = h
                return h
        raise _Unrenderable()

    def lines(self) -> list[str]:
        rows: list[str] = []
        self._walk(self.body, rows)
        return rows

    def _walk(self, t: Term, rows: list[str]) -> None:
        match t:
            case Split(w, l, r) if w in self.holes and self.holes[w].kind == "or":
                hole = self.holes[w]
                saved = (hole.kind, hole.name, hole.subs)
                hole.kind, subs = "inl", hole.subs
                hole.subs = (subs[0],)
                self._walk(l, rows)
                hole.kind = "inr"
                hole.subs = (subs[1],)
                self._walk(r, rows)
                hole.kind, hole.name, hole.subs = saved
            case Split(x, l, r) if x in self.holes and self.holes[x].kind == "var":
                hole = self.holes[x]
                sub = _Hole("var", x)
                saved = (hole.kind, hole.name, hole.subs)
                hole.kind, hole.name, hole.subs = "inl", None, (sub,)
                self.holes[x] = sub
                self._walk(l, rows)
                hole.kind = "inr"
                self._walk(r, rows)
                hole.kind, hole.name, hole.subs = saved
                self.holes[x] = hole
            case BindCut(PPair(Var(y), Var(z)), Thunk(App(x, Nil())), sub) \
                    if x in self.holes and self.holes[x].kind == "var":
                hole = self.holes[x]
                hy, hz = _Hole("var", y), _Hole("var", z)
                saved = (hole.kind, hole.name, hole.subs)
                hole.kind, hole.name, hole.subs = "pair", None, (hy, hz)
                self.holes[y] = hy
                self.holes[z] = hz
                self._walk(sub, rows)
                hole.kind, hole.name, hole.subs = saved
            case _:
                lhs = " ".join(h.render(self.disp, atom=True)
                               for h in self.args)
                rhs = self._expr(t)
                head = f"{self.label} {lhs}".rstrip()
                rows.append(f"{head} = {rhs}")

    def _expr(self, t: Term) -> str:
        match t:
            case App(x, Nil()):
                return self.disp(x)
            case App(x, k):
                parts = []
                while isinstance(k, Cons):
                    parts.append(self._data(k.arg, atom=True))
                    k = k.rest
                if not isinstance(k, Nil):
                    raise _Unrenderable()
                return " ".join([self.disp(x)] + parts)
            case Done(d):
                return self._data(d)
            case Pair(l, r):
                return f"({self._expr(l)}, {self._expr(r)})"
            case _:
                raise _Unrenderable()

    def _data(self, d: DataVal, atom: bool = False) -> str:
        match d:
            case Thunk(App(x, Nil())):
                return self.disp(x)
            case Thunk(t):
                s = self._expr(t)
                return f"({s})" if (atom and " " in s) else s
            case DPair(l, r):
                return f"({self._data(l)}, {self._data(r)})"
            case Inl(e):
                s = f"inl {self._data(e, atom=True)}"
                return f"({s})" if atom else s
            case Inr(e):
                s = f"inr {self._data(e, atom=True)}"
                return f"({s})" if atom else s
        raise _Unrenderable()
