"""Semi-algebraic / elementary predicates.

A predicate is a Boolean combination of atoms `e ⋈ 0` with ⋈ one of
<=, <, =, !=, >=, >.  Comparisons between two expressions are normalized
to this form by subtracting the right-hand side.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterator, Mapping

from . import expr as ex
from .errors import PolyrecastError

LE, LT, EQ, NE, GE, GT = "<=", "<", "=", "!=", ">=", ">"

_NEGATION = {LE: GT, LT: GE, EQ: NE, NE: EQ, GE: LT, GT: LE}
_FLIP = {LE: GE, LT: GT, GE: LE, GT: LT, EQ: EQ, NE: NE}


class Predicate:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return neg_pred(self)

    def atoms(self) -> Iterator["Atom"]:
        return iter(())

    def map_exprs(self, fn: Callable[[ex.Expr], ex.Expr]) -> "Predicate":
        return self

    def __repr__(self):
        return to_pred_string(self)


class _TruePred(Predicate):
    __slots__ = ()

    def __eq__(self, other):
        return isinstance(other, _TruePred)

    def __hash__(self):
        return hash("true-pred")


class _FalsePred(Predicate):
    __slots__ = ()

    def __eq__(self, other):
        return isinstance(other, _FalsePred)

    def __hash__(self):
        return hash("false-pred")


TRUE = _TruePred()
FALSE = _FalsePred()


class Atom(Predicate):
    """expr ⋈ 0"""

    __slots__ = ("expr", "rel")

    def __init__(self, expr: ex.Expr, rel: str):
        if rel not in _NEGATION:
            raise PolyrecastError(f"unknown relation {rel!r}")
        object.__setattr__(self, "expr", expr)
        object.__setattr__(self, "rel", rel)

    def __setattr__(self, name, value):
        raise AttributeError("Atom is immutable")

    @staticmethod
    def compare(lhs: ex.Expr, rel: str, rhs: ex.Expr) -> "Atom":
        return Atom(ex.sub(lhs, rhs), rel)

    def atoms(self):
        yield self

    def map_exprs(self, fn):
        return Atom(fn(self.expr), self.rel)

    def __eq__(self, other):
        return isinstance(other, Atom) and self.rel == other.rel and self.expr == other.expr

    def __hash__(self):
        return hash((self.expr, self.rel))


class And(Predicate):
    __slots__ = ("parts",)

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    def __setattr__(self, name, value):
        raise AttributeError("And is immutable")

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def map_exprs(self, fn):
        return And(p.map_exprs(fn) for p in self.parts)

    def __eq__(self, other):
        return isinstance(other, And) and self.parts == other.parts

    def __hash__(self):
        return hash(("and", self.parts))


class Or(Predicate):
    __slots__ = ("parts",)

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    def __setattr__(self, name, value):
        raise AttributeError("Or is immutable")

    def atoms(self):
        for p in self.parts:
            yield from p.atoms()

    def map_exprs(self, fn):
        return Or(p.map_exprs(fn) for p in self.parts)

    def __eq__(self, other):
        return isinstance(other, Or) and self.parts == other.parts

    def __hash__(self):
        return hash(("or", self.parts))


class Not(Predicate):
    __slots__ = ("inner",)

    def __init__(self, inner: Predicate):
        object.__setattr__(self, "inner", inner)

    def __setattr__(self, name, value):
        raise AttributeError("Not is immutable")

    def atoms(self):
        yield from self.inner.atoms()

    def map_exprs(self, fn):
        return Not(self.inner.map_exprs(fn))

    def __eq__(self, other):
        return isinstance(other, Not) and self.inner == other.inner

    def __hash__(self):
        return hash(("not", self.inner))


def conj(*parts: Predicate) -> Predicate:
    flat: list[Predicate] = []
    for p in parts:
        if isinstance(p, _FalsePred):
            return FALSE
        if isinstance(p, _TruePred):
            continue
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(flat)


def disj(*parts: Predicate) -> Predicate:
    flat: list[Predicate] = []
    for p in parts:
        if isinstance(p, _TruePred):
            return TRUE
        if isinstance(p, _FalsePred):
            continue
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(flat)


def neg_pred(p: Predicate) -> Predicate:
    if isinstance(p, _TruePred):
        return FALSE
    if isinstance(p, _FalsePred):
        return TRUE
    if isinstance(p, Atom):
        return Atom(p.expr, _NEGATION[p.rel])
    return Not(p)


def nnf(p: Predicate) -> Predicate:
    """Negation normal form: negations pushed onto atoms and eliminated."""
    if isinstance(p, Not):
        inner = p.inner
        if isinstance(inner, Atom):
            return Atom(inner.expr, _NEGATION[inner.rel])
        if isinstance(inner, _TruePred):
            return FALSE
        if isinstance(inner, _FalsePred):
            return TRUE
        if isinstance(inner, And):
            return disj(*(nnf(Not(q)) for q in inner.parts))
        if isinstance(inner, Or):
            return conj(*(nnf(Not(q)) for q in inner.parts))
        if isinstance(inner, Not):
            return nnf(inner.inner)
    if isinstance(p, And):
        return conj(*(nnf(q) for q in p.parts))
    if isinstance(p, Or):
        return disj(*(nnf(q) for q in p.parts))
    return p


def pred_vars(p: Predicate) -> frozenset[str]:
    out: set[str] = set()
    for a in p.atoms():
        out |= ex.free_vars(a.expr)
    return frozenset(out)


def is_polynomial_pred(p: Predicate) -> bool:
    return all(ex.is_polynomial(a.expr) for a in p.atoms())


def evaluate_pred(p: Predicate, env: Mapping[str, float], eq_tol: float = 0.0) -> bool:
    """Truth value at a point.  Equality atoms hold within eq_tol."""
    if isinstance(p, _TruePred):
        return True
    if isinstance(p, _FalsePred):
        return False
    if isinstance(p, Atom):
        v = ex.evaluate(p.expr, env)
        if p.rel == LE:
            return v <= eq_tol
        if p.rel == LT:
            return v < eq_tol if eq_tol else v < 0
        if p.rel == EQ:
            return abs(v) <= eq_tol
        if p.rel == NE:
            return abs(v) > eq_tol
        if p.rel == GE:
            return v >= -eq_tol
        return v > -eq_tol if eq_tol else v > 0
    if isinstance(p, And):
        return all(evaluate_pred(q, env, eq_tol) for q in p.parts)
    if isinstance(p, Or):
        return any(evaluate_pred(q, env, eq_tol) for q in p.parts)
    if isinstance(p, Not):
        return not evaluate_pred(p.inner, env, eq_tol)
    raise PolyrecastError(f"unknown predicate {p!r}")


def satisfaction_margin(p: Predicate, env: Mapping[str, float]) -> float:
    """Signed satisfaction: <= 0 means p holds at env, with magnitude a
    rough distance to the boundary.  Equality atoms use |e|; != atoms use
    -|e| (held except exactly on the surface)."""
    if isinstance(p, _TruePred):
        return -float("inf")
    if isinstance(p, _FalsePred):
        return float("inf")
    if isinstance(p, Atom):
        v = ex.evaluate(p.expr, env)
        if p.rel in (LE, LT):
            return v
        if p.rel in (GE, GT):
            return -v
        if p.rel == EQ:
            return abs(v)
        return -abs(v)
    if isinstance(p, And):
        return max(satisfaction_margin(q, env) for q in p.parts)
    if isinstance(p, Or):
        return min(satisfaction_margin(q, env) for q in p.parts)
    if isinstance(p, Not):
        return -satisfaction_margin(p.inner, env)
    raise PolyrecastError(f"unknown predicate {p!r}")


def to_pred_string(p: Predicate) -> str:
    if isinstance(p, _TruePred):
        return "true"
    if isinstance(p, _FalsePred):
        return "false"
    if isinstance(p, Atom):
        return f"{ex.to_string(p.expr)} {p.rel} 0"
    if isinstance(p, And):
        return " & ".join(_wrap_bool(q, tight=True) for q in p.parts)
    if isinstance(p, Or):
        return " | ".join(_wrap_bool(q, tight=False) for q in p.parts)
    if isinstance(p, Not):
        return f"!({to_pred_string(p.inner)})"
    raise PolyrecastError(f"unknown predicate {p!r}")


def _wrap_bool(p: Predicate, tight: bool) -> str:
    text = to_pred_string(p)
    if isinstance(p, Or) and tight:
        return f"({text})"
    return text
