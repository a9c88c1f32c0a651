"""Exhaustive rule-search oracle for the propositional judgments.

Independent of the checker: every rule of the propositional system is tried
at every position with full backtracking, and the two cut rules quantify over
a finite candidate set of cut formulas.  Inversion hypotheses are kept as an
ordered tuple but every rule is attempted at every index, so any interleaving
of left rules is found.

Assumes the Barendregt convention (all binders distinct, no shadowing of
persistent names); the enumerators and generators used in the tests produce
only such terms.
"""

from __future__ import annotations

from seqcore.syntax import (
    App, AppCut, Atom, BindCut, Cons, Done, Down, DPair, Imp, Inl, Inr,
    Kappa, Lam, Name, NegType, Nil, Or, Pair, PAt, POr, PosType, PPair, Prod,
    Proj1, Proj2, PWild, Sig, Split, Thunk, Up, Var, With, alpha_eq,
)


def types_upto(max_size: int, atom: Name, dependent: bool = False):
    """All negative and positive types of node count <= max_size over one
    atom (propositional connectives only)."""
    negs: dict[int, list] = {0: []}
    poss: dict[int, list] = {0: []}
    for n in range(1, max_size + 1):
        ns, ps = [], []
        if n == 1:
            ns.append(Atom(atom))
        if n >= 2:
            ps.extend(Down(m) for m in negs[n - 1])
            ns.extend(Up(p) for p in poss[n - 1])
        for k in range(1, n - 1):
            for l in poss[k]:
                for r in negs[n - 1 - k]:
                    ns.append(Imp(l, r))
            for l in negs[k]:
                for r in negs[n - 1 - k]:
                    ns.append(With(l, r))
            for l in poss[k]:
                for r in poss[n - 1 - k]:
                    ps.append(Or(l, r))
                    ps.append(Prod(l, r))
        negs[n] = ns
        poss[n] = ps
    all_negs = [t for n in range(1, max_size + 1) for t in negs[n]]
    all_poss = [t for n in range(1, max_size + 1) for t in poss[n]]
    return all_negs, all_poss


def subformulas(ty) -> set:
    out = set()

    def go(t):
        out.add(t)
        match t:
            case Atom(_, _):
                pass
            case Up(p) | Down(p):
                go(p)
            case Imp(a, r):
                go(a)
                go(r)
            case With(l, r) | Or(l, r) | Prod(l, r):
                go(l)
                go(r)

    go(ty)
    return out


class Oracle:
    """Backtracking proof search over the propositional rules."""

    def __init__(self, sig: Sig, neg_candidates, pos_candidates,
                 structural: bool = False):
        self.sig = sig
        self.negs = list(neg_candidates)
        self.poss = list(pos_candidates)
        self.structural = structural
        self.memo: dict = {}

    # -- inversion ----------------------------------------------------------

    def inv(self, psi, gamma, t, goal) -> bool:
        key = ("inv", psi, gamma, t, goal)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = False   # cycles cannot succeed
        result = self._inv(psi, gamma, t, goal)
        self.memo[key] = result
        return result

    def _inv(self, psi, gamma, t, goal) -> bool:
        # Left rules, any hypothesis.
        for i, (p, ty) in enumerate(gamma):
            rest = gamma[:i] + gamma[i + 1:]
            match p, ty:
                case Var(x), Down(n):
                    if self.inv(psi + ((x, n),), rest, t, goal):
                        return True
                case PPair(a, b), Prod(l, r):
                    ins = gamma[:i] + ((a, l), (b, r)) + gamma[i + 1:]
                    if self.inv(psi, ins, t, goal):
                        return True
                case POr(w, a, b), Or(l, r):
                    if isinstance(t, Split) and t.label == w:
                        gl = gamma[:i] + ((a, l),) + gamma[i + 1:]
                        gr = gamma[:i] + ((b, r),) + gamma[i + 1:]
                        if self.inv(psi, gl, t.left, goal) and \
                                self.inv(psi, gr, t.right, goal):
                            return True
                case PAt(a, b), _:
                    if self.structural:
                        ins = gamma[:i] + ((a, ty), (b, ty)) + gamma[i + 1:]
                        if self.inv(psi, ins, t, goal):
                            return True
                case PWild(), _:
                    if self.structural and self.inv(psi, rest, t, goal):
                        return True
        # Right rules and focus dispatch.
        match t:
            case Lam(p, b):
                if isinstance(goal, Imp) and \
                        self.inv(psi, gamma + ((p, goal.arg),), b, goal.res):
                    return True
            case Pair(l, r):
                if isinstance(goal, With) and \
                        self.inv(psi, gamma, l, goal.left) and \
                        self.inv(psi, gamma, r, goal.right):
                    return True
            case Done(d):
                if not gamma and isinstance(goal, Up) and \
                        self.rfoc(psi, d, goal.body):
                    return True
            case App(x, k):
                if not gamma:
                    n = self._lookup(psi, x)
                    if n is not None and self.lfoc(psi, n, k, goal):
                        return True
            case BindCut(p, d, b):
                for cand in self.poss:
                    if self.rfoc(psi, d, cand) and \
                            self.inv(psi, gamma + ((p, cand),), b, goal):
                        return True
            case AppCut(f, k):
                for cand in self.negs:
                    if self.inv(psi, gamma, f, cand) and \
                            self.lfoc(psi, cand, k, goal):
                        return True
        return False

    def _lookup(self, psi, x):
        for y, n in reversed(psi):
            if y == x:
                return n
        entry = self.sig.lookup(x)
        return entry.type if entry else None

    # -- right focus ----------------------------------------------------------

    def rfoc(self, psi, d, ty) -> bool:
        key = ("rfoc", psi, d, ty)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = False
        match d, ty:
            case Thunk(t), Down(n):
                result = self.inv(psi, (), t, n)
            case DPair(a, b), Prod(l, r):
                result = self.rfoc(psi, a, l) and self.rfoc(psi, b, r)
            case Inl(e), Or(l, _):
                result = self.rfoc(psi, e, l)
            case Inr(e), Or(_, r):
                result = self.rfoc(psi, e, r)
            case _:
                result = False
        self.memo[key] = result
        return result

    # -- left focus -----------------------------------------------------------

    def lfoc(self, psi, focus, k, goal) -> bool:
        key = ("lfoc", psi, focus, k, goal)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = False
        match k:
            case Nil():
                result = alpha_eq(focus, goal)
            case Cons(d, rest):
                result = isinstance(focus, Imp) and \
                    self.rfoc(psi, d, focus.arg) and \
                    self.lfoc(psi, focus.res, rest, goal)
            case Proj1(rest):
                result = isinstance(focus, With) and \
                    self.lfoc(psi, focus.left, rest, goal)
            case Proj2(rest):
                result = isinstance(focus, With) and \
                    self.lfoc(psi, focus.right, rest, goal)
            case Kappa(p, t):
                result = isinstance(focus, Up) and \
                    self.inv(psi, ((p, focus.body),), t, goal)
            case _:
                result = False
        self.memo[key] = result
        return result


def make_oracle(sig: Sig, goals, extra_types=(), bound: int = 6,
                structural: bool = False) -> Oracle:
    """Oracle whose cut candidates are every type of size <= bound over the
    atom together with all subformulas of the signature and goal types."""
    atoms = sorted(sig.atoms, key=lambda n: (n.text, n.tag))
    assert len(atoms) == 1, "oracle corpus uses one atom"
    negs, poss = types_upto(bound, atoms[0])
    seeds = set()
    for e in sig.entries:
        seeds |= subformulas(e.type)
    for g in goals:
        seeds |= subformulas(g)
    for t in extra_types:
        seeds |= subformulas(t)
    neg_set = {t for t in negs} | {t for t in seeds if isinstance(t, NegType)}
    pos_set = {t for t in poss} | {t for t in seeds if isinstance(t, PosType)}
    return Oracle(sig, sorted(neg_set, key=_type_key),
                  sorted(pos_set, key=_type_key), structural)


def _type_key(t):
    from seqcore.syntax import size
    from seqcore.core_text import print_type
    return (size(t), print_type(t))
