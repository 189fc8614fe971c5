"""Canonical multivariate polynomials over exact rationals.

A Poly maps monomials (exponent tuples over a fixed, ordered variable
list) to nonzero Fraction coefficients.  Two polynomials over the same
variable order are equal iff their coefficient maps are equal, which is
the decidable equality used for every symbolic identity check in the
toolkit.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from . import expr as ex
from .errors import NotPolynomial

Monomial = tuple[int, ...]


class Poly:
    __slots__ = ("vars", "terms")

    def __init__(self, variables: Iterable[str], terms: Mapping[Monomial, Fraction] | None = None):
        object.__setattr__(self, "vars", tuple(variables))
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                c = Fraction(coeff)
                if c != 0:
                    clean[tuple(mono)] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # --- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, variables) -> "Poly":
        return cls(variables)

    @classmethod
    def const(cls, variables, value) -> "Poly":
        variables = tuple(variables)
        return cls(variables, {(0,) * len(variables): Fraction(value)})

    @classmethod
    def var(cls, variables, name) -> "Poly":
        variables = tuple(variables)
        mono = [0] * len(variables)
        mono[variables.index(name)] = 1
        return cls(variables, {tuple(mono): Fraction(1)})

    # --- arithmetic -----------------------------------------------------

    def _check(self, other: "Poly"):
        if self.vars != other.vars:
            raise NotPolynomial(f"variable order mismatch: {self.vars} vs {other.vars}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
        return Poly(self.vars, out)

    def __sub__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) - coeff
        return Poly(self.vars, out)

    def __neg__(self) -> "Poly":
        return Poly(self.vars, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        self._check(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                out[mono] = out.get(mono, Fraction(0)) + c1 * c2
        return Poly(self.vars, out)

    def scale(self, value) -> "Poly":
        c = Fraction(value)
        return Poly(self.vars, {m: k * c for m, k in self.terms.items()})

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise NotPolynomial("negative power of a polynomial")
        result = Poly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # --- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, Poly) and self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self.terms.get(tuple(mono), Fraction(0))

    def free_vars(self) -> frozenset[str]:
        used = set()
        for mono in self.terms:
            for name, e in zip(self.vars, mono):
                if e:
                    used.add(name)
        return frozenset(used)

    def evaluate(self, env: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self.terms.items():
            term = coeff
            for name, e in zip(self.vars, mono):
                if e:
                    term *= Fraction(env[name]) ** e
            total += term
        return total

    def derivative(self, var: str) -> "Poly":
        idx = self.vars.index(var)
        out: dict[Monomial, Fraction] = {}
        for mono, coeff in self.terms.items():
            e = mono[idx]
            if e == 0:
                continue
            new = list(mono)
            new[idx] = e - 1
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + coeff * e
        return Poly(self.vars, out)

    # --- conversion -------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Graded lexicographic, highest degree first; stable for printing."""
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))

    def to_expr(self) -> ex.Expr:
        total: ex.Expr | None = None
        for mono, coeff in self.sorted_terms():
            term: ex.Expr | None = None
            for name, e in zip(self.vars, mono):
                if e == 0:
                    continue
                factor = ex.pow_(ex.Var(name), e)
                term = factor if term is None else ex.mul(term, factor)
            if term is None:
                piece: ex.Expr = ex.Constant(coeff)
            elif coeff == 1:
                piece = term
            else:
                piece = ex.mul(ex.Constant(coeff), term)
            total = piece if total is None else ex.add(total, piece)
        return total if total is not None else ex.ZERO


def from_expr(e: ex.Expr, variables: Iterable[str]) -> Poly:
    """Expand a polynomial expression into canonical form.

    Raises NotPolynomial if e contains Div, fractional or negative powers,
    or any transcendental node."""
    variables = tuple(variables)

    def build(node: ex.Expr) -> Poly:
        if isinstance(node, ex.Constant):
            return Poly.const(variables, node.value)
        if isinstance(node, ex.Var):
            if node.name not in variables:
                raise NotPolynomial(f"variable {node.name!r} not in {variables}")
            return Poly.var(variables, node.name)
        if isinstance(node, ex.Add):
            return build(node.lhs) + build(node.rhs)
        if isinstance(node, ex.Sub):
            return build(node.lhs) - build(node.rhs)
        if isinstance(node, ex.Mul):
            return build(node.lhs) * build(node.rhs)
        if isinstance(node, ex.Pow):
            if node.exponent.denominator != 1 or node.exponent < 0:
                raise NotPolynomial(f"non-polynomial exponent {node.exponent}")
            return build(node.base) ** int(node.exponent)
        raise NotPolynomial(f"non-polynomial node {type(node).__name__}")

    return build(e)


def to_canonical_poly(e: ex.Expr, variables: Iterable[str]) -> Poly:
    """Contracted name used throughout: canonical expanded form of e."""
    return from_expr(e, variables)
