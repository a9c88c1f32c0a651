"""Small-step cut elimination and fuel-bounded normalization.

One step rewrites the leftmost-outermost redex, where positions are ordered
by a preorder walk of the whole tree (a node before its children, children in
syntactic left-to-right order).  Reduction does descend into data, spines and
binder bodies: substitution plants application cuts at use sites, so normal
forms would otherwise retain cuts under binders.

Rules, with their trace names:

R1  ``(\\p. t) (d :: k)  ~>  (let p = d in t) k``
R2  ``(done d) (kappa p. t)  ~>  let p = d in t``
R3  ``<t, u> .1 k  ~>  t k``  (and ``.2`` symmetrically)
R4  ``t []  ~>  t``
R5  binding-cut decomposition: pair patterns split pair data, or-patterns
    select the split branch matching the injection, contraction duplicates,
    wildcard drops
R6  ``let x = d in t  ~>  t{d/x}``
R7  spine concatenation ``(x k1) k2 ~> x (k1 @ k2)`` (likewise on an inner
    application cut), the commuting cut ``(let p = d in t) k ~> let p = d in
    (t k)``, and delta-unfolding of signature definitions at applied names

Postulate-headed applications are normal forms, not failures; ``Stuck`` is
reserved for evaluation states no well-typed term reaches (a function applied
to a projection, pair data against an or-pattern, and similar shape clashes).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .diag import SeqcoreError
from .syntax import (
    App, AppCut, BindCut, Cons, DataVal, Done, DPair, Inl, Inr, Kappa, Lam,
    Nil, Pair, PAt, POr, PPair, Proj1, Proj2, PWild, Sig, Spine, Split,
    SubstClash, Term, Thunk, Var, select_branch, spine_concat,
    subst_data_in_term,
)

__all__ = ["StepResult", "Stepped", "NormalForm", "Stuck", "step",
           "normalize", "trace", "NormalizeResult", "FuelExhausted"]


class StepResult:
    __slots__ = ()


@dataclass(frozen=True)
class Stepped(StepResult):
    next: Term
    rule: str


@dataclass(frozen=True)
class NormalForm(StepResult):
    pass


@dataclass(frozen=True)
class Stuck(StepResult):
    reason: str


@dataclass(frozen=True)
class NormalizeResult:
    term: Term
    steps: int
    stuck: Optional[str] = None


class FuelExhausted(SeqcoreError):
    def __init__(self, term: Term, steps: int):
        super().__init__(f"fuel exhausted after {steps} steps")
        self.term = term
        self.steps = steps


class _StuckAt(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def step(sig: Sig, t: Term) -> StepResult:
    """Apply exactly one rule at the leftmost-outermost redex."""
    try:
        hit = _step_any(sig, t)
    except _StuckAt as s:
        return Stuck(s.reason)
    if hit is None:
        return NormalForm()
    rule, t2 = hit
    return Stepped(t2, rule)


def _step_any(sig: Sig, x) -> Optional[tuple[str, object]]:
    """One step at node ``x`` or inside it; None if no redex."""
    root = _step_root(sig, x)
    if root is not None:
        return root
    for i, child in enumerate(_children(x)):
        hit = _step_any(sig, child)
        if hit is not None:
            rule, new_child = hit
            return rule, _rebuild(x, i, new_child)
    return None


def _step_root(sig: Sig, x) -> Optional[tuple[str, object]]:
    match x:
        case AppCut(f, k):
            if isinstance(k, Nil):
                return "R4", f
            match f, k:
                case Lam(p, b), Cons(d, rest):
                    return "R1", AppCut(BindCut(p, d, b), rest)
                case Done(d), Kappa(p, b):
                    return "R2", BindCut(p, d, b)
                case Pair(l, _), Proj1(rest):
                    return "R3", AppCut(l, rest)
                case Pair(_, r), Proj2(rest):
                    return "R3", AppCut(r, rest)
                case App(h, k1), _:
                    return "R7", App(h, spine_concat(k1, k))
                case AppCut(g, k1), _:
                    return "R7", AppCut(g, spine_concat(k1, k))
                case BindCut(p, d, b), _:
                    return "R7", BindCut(p, d, AppCut(b, k))
                case (Lam(_, _), _) | (Done(_), _) | (Pair(_, _), _):
                    raise _StuckAt(
                        f"{_term_shape(f)} applied to {_spine_shape(k)} spine")
                case Split(_, _, _), _:
                    return None   # resolved by an enclosing or-binding
            return None
        case BindCut(p, d, b):
            match p, d:
                case PPair(p1, p2), DPair(d1, d2):
                    return "R5", BindCut(p1, d1, BindCut(p2, d2, b))
                case POr(w, p1, _), Inl(e):
                    return "R5", BindCut(p1, e, select_branch(w, "left", b))
                case POr(w, _, p2), Inr(e):
                    return "R5", BindCut(p2, e, select_branch(w, "right", b))
                case PAt(p1, p2), _:
                    return "R5", BindCut(p1, d, BindCut(p2, d, b))
                case PWild(), _:
                    return "R5", b
                case Var(y), _:
                    try:
                        return "R6", subst_data_in_term(b, y, d)
                    except SubstClash as e:
                        raise _StuckAt(e.reason)
                case (PPair(_, _), Thunk(t2)) | (POr(_, _, _), Thunk(t2)):
                    # A thunk scrutinized by a decomposing pattern is normal
                    # while its head may still compute (sigma-style lets on a
                    # variable); it is a definite clash otherwise.
                    if isinstance(t2, (Lam, Done, Pair, Split)):
                        raise _StuckAt(
                            f"{_pattern_shape(p)} pattern against thunk data")
                    return None
                case _:
                    raise _StuckAt(
                        f"{_pattern_shape(p)} pattern against {_data_shape(d)} data")
        case App(h, k):
            entry = sig.lookup(h)
            if entry is not None and entry.body is not None:
                return "R7", AppCut(entry.body, k)
            return None
    return None


def _term_shape(t: Term) -> str:
    return {Done: "done", Lam: "function", App: "application", Pair: "pair",
            Split: "split", BindCut: "let", AppCut: "cut"}[type(t)]


def _data_shape(d: DataVal) -> str:
    return {Thunk: "thunk", DPair: "pair", Inl: "inl", Inr: "inr"}[type(d)]


def _pattern_shape(p) -> str:
    return {Var: "variable", PPair: "pair", POr: "or", PAt: "contraction",
            PWild: "wildcard"}[type(p)]


def _spine_shape(k: Spine) -> str:
    return {Nil: "empty", Cons: "argument", Proj1: "projection",
            Proj2: "projection", Kappa: "kappa"}[type(k)]


def _children(x) -> tuple:
    match x:
        case Done(d):
            return (d,)
        case Lam(_, b):
            return (b,)
        case App(_, k):
            return (k,)
        case Pair(l, r) | Split(_, l, r):
            return (l, r)
        case BindCut(_, d, b):
            return (d, b)
        case AppCut(f, k):
            return (f, k)
        case Thunk(t):
            return (t,)
        case DPair(l, r):
            return (l, r)
        case Inl(d) | Inr(d):
            return (d,)
        case Nil():
            return ()
        case Cons(d, k):
            return (d, k)
        case Proj1(k) | Proj2(k):
            return (k,)
        case Kappa(_, b):
            return (b,)
    raise TypeError(x)


def _rebuild(x, i: int, c):
    match x:
        case Done(_):
            return Done(c)
        case Lam(p, _):
            return Lam(p, c)
        case App(h, _):
            return App(h, c)
        case Pair(l, r):
            return Pair(c, r) if i == 0 else Pair(l, c)
        case Split(w, l, r):
            return Split(w, c, r) if i == 0 else Split(w, l, c)
        case BindCut(p, d, b):
            return BindCut(p, c, b) if i == 0 else BindCut(p, d, c)
        case AppCut(f, k):
            return AppCut(c, k) if i == 0 else AppCut(f, c)
        case Thunk(_):
            return Thunk(c)
        case DPair(l, r):
            return DPair(c, r) if i == 0 else DPair(l, c)
        case Inl(_):
            return Inl(c)
        case Inr(_):
            return Inr(c)
        case Cons(d, k):
            return Cons(c, k) if i == 0 else Cons(d, c)
        case Proj1(_):
            return Proj1(c)
        case Proj2(_):
            return Proj2(c)
        case Kappa(p, _):
            return Kappa(p, c)
    raise TypeError(x)


def normalize(sig: Sig, t: Term, fuel: int = 10000) -> NormalizeResult:
    """Iterate ``step`` to a normal form or a stuck state.  Raises
    FuelExhausted when more than ``fuel`` steps would be needed."""
    steps = 0
    while True:
        r = step(sig, t)
        match r:
            case NormalForm():
                return NormalizeResult(t, steps)
            case Stuck(reason):
                return NormalizeResult(t, steps, stuck=reason)
            case Stepped(t2, _):
                steps += 1
                if steps > fuel:
                    raise FuelExhausted(t, steps - 1)
                t = t2


def trace(sig: Sig, t: Term, fuel: int = 10000) -> tuple[list[tuple[str, Term]], NormalizeResult]:
    """As ``normalize`` but recording each applied rule and the term after."""
    out: list[tuple[str, Term]] = []
    steps = 0
    while True:
        r = step(sig, t)
        match r:
            case NormalForm():
                return out, NormalizeResult(t, steps)
            case Stuck(reason):
                return out, NormalizeResult(t, steps, stuck=reason)
            case Stepped(t2, rule):
                steps += 1
                if steps > fuel:
                    raise FuelExhausted(t, steps - 1)
                out.append((rule, t2))
                t = t2
