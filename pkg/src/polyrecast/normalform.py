"""Power-product normal form for elementary expressions.

An expression is flattened into a sum of terms, each term a rational
coefficient times a product of base^exponent factors with rational
exponents.  Structurally equal bases merge by adding exponents, which is
what makes cancellations like x^(1/2) * x^(-1/2) -> 1 fall out during
derivative closure.

Distribution rules keep the form sound on the functions' domains:

* integer exponents distribute over single-term bases;
* fractional exponents distribute over a factor only when the inner
  exponent is odd (sign-preserving) or itself fractional (principal
  roots are non-negative); (x^2)^(1/2) therefore stays opaque rather
  than collapsing to x.

Sums raised to negative or fractional powers stay opaque single factors,
so 1/(1+cos(x)^2) keeps its base intact for replacement-table lookup.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from . import expr as ex
from .errors import UncomparableResidual
from .poly import Poly

# A factor set maps a base expression to its rational exponent.
Factors = tuple[tuple[ex.Expr, Fraction], ...]
NF = dict[Factors, Fraction]  # factors -> coefficient


def _factor_key(base: ex.Expr) -> tuple:
    return (type(base).__name__, ex.to_string(base))


def pack_factors(factors: dict[ex.Expr, Fraction]) -> Factors:
    items = [(b, e) for b, e in factors.items() if e != 0]
    items.sort(key=lambda be: (_factor_key(be[0]), be[1]))
    return tuple(items)


_pack = pack_factors



def _fold_constant_factors(factors: dict[ex.Expr, Fraction]) -> tuple[dict[ex.Expr, Fraction], Fraction]:
    """Integer powers of rational-constant bases fold into the coefficient,
    matching what the expression builders do."""
    mult = Fraction(1)
    out: dict[ex.Expr, Fraction] = {}
    for base, e in factors.items():
        if isinstance(base, ex.Constant) and e.denominator == 1:
            if base.value == 0 and e < 0:
                raise UncomparableResidual("0 raised to a negative power")
            mult *= base.value ** int(e)
            continue
        out[base] = e
    return out, mult


def merge_term(acc: NF, factors: dict[ex.Expr, Fraction], coeff: Fraction) -> None:
    if coeff == 0:
        return
    factors, mult = _fold_constant_factors(factors)
    coeff *= mult
    if coeff == 0:
        return
    key = _pack(factors)
    new = acc.get(key, Fraction(0)) + coeff
    if new == 0:
        acc.pop(key, None)
    else:
        acc[key] = new


def nf_add(a: NF, b: NF) -> NF:
    out = dict(a)
    for key, coeff in b.items():
        new = out.get(key, Fraction(0)) + coeff
        if new == 0:
            out.pop(key, None)
        else:
            out[key] = new
    return out


def nf_scale(a: NF, c: Fraction) -> NF:
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


def nf_mul(a: NF, b: NF) -> NF:
    out: NF = {}
    for f1, c1 in a.items():
        for f2, c2 in b.items():
            factors = dict(f1)
            for base, e in f2:
                factors[base] = factors.get(base, Fraction(0)) + e
            merge_term(out, factors, c1 * c2)
    return _expand_sum_powers(out)


def _expand_sum_powers(nf: NF) -> NF:
    """Multiply out factors that are sums raised to positive integer powers.
    Plain multiplication distributes over sums, so keeping such factors
    opaque would make the normal form depend on the construction path.
    Negative and fractional powers of sums stay opaque."""
    if not any(
        isinstance(b, (ex.Add, ex.Sub)) and e.denominator == 1 and e > 0
        for factors in nf
        for b, e in factors
    ):
        return nf
    out: NF = {}
    for factors, coeff in nf.items():
        plain: dict[ex.Expr, Fraction] = {}
        expandable: list[tuple[ex.Expr, int]] = []
        for base, e in factors:
            if isinstance(base, (ex.Add, ex.Sub)) and e.denominator == 1 and e > 0:
                expandable.append((base, int(e)))
            else:
                plain[base] = plain.get(base, Fraction(0)) + e
        term_nf: NF = {}
        merge_term(term_nf, plain, coeff)
        for base, k in expandable:
            base_nf = normalize(base)
            for _ in range(k):
                term_nf = nf_mul(term_nf, base_nf)
        for kf, kc in term_nf.items():
            new = out.get(kf, Fraction(0)) + kc
            if new == 0:
                out.pop(kf, None)
            else:
                out[kf] = new
    return out


def _distributable(inner_exp: Fraction, outer_exp: Fraction) -> bool:
    if outer_exp.denominator == 1:
        return True
    if inner_exp.denominator > 1:
        return True  # principal roots are non-negative
    return inner_exp.numerator % 2 != 0


def _pow_term(factors: Factors, coeff: Fraction, exponent: Fraction) -> NF:
    """(coeff * prod factors)^exponent for a single term, when legal."""
    out: dict[ex.Expr, Fraction] = {}
    for base, e in factors:
        if not _distributable(e, exponent):
            # keep base^e opaque under this exponent
            inner = nf_to_expr({((base, e),): Fraction(1)})
            out[inner] = out.get(inner, Fraction(0)) + exponent
            continue
        out[base] = out.get(base, Fraction(0)) + e * exponent
    result: NF = {}
    if coeff == 1:
        merge_term(result, out, Fraction(1))
        return result
    if exponent.denominator == 1:
        k = int(exponent)
        if coeff == 0 and k < 0:
            raise UncomparableResidual("0 raised to a negative power")
        merge_term(result, out, coeff**k)
        return result
    root = ex._exact_root(abs(coeff), exponent.denominator)
    if coeff > 0 and root is not None:
        merge_term(result, out, root**exponent.numerator)
        return result
    cbase = ex.Constant(coeff)
    out[cbase] = out.get(cbase, Fraction(0)) + exponent
    merge_term(result, out, Fraction(1))
    return result


def nf_pow(a: NF, exponent: Fraction) -> NF:
    if exponent == 0:
        return {(): Fraction(1)}
    if exponent == 1:
        return dict(a)
    if not a:
        if exponent < 0:
            raise UncomparableResidual("0 raised to a negative power")
        return {}
    if len(a) == 1:
        (factors, coeff), = a.items()
        return _expand_sum_powers(_pow_term(factors, coeff, exponent))
    # A sum under a negative or fractional power stays a single opaque
    # factor: expanding would destroy the factored structure reciprocal
    # replacement entries are keyed on (1/(s+2)^2 must stay a power of
    # 1/(s+2)).  Positive integer powers distribute like multiplication.
    if exponent.denominator == 1 and exponent > 0:
        out: NF = {(): Fraction(1)}
        for _ in range(int(exponent)):
            out = nf_mul(out, a)
        return out
    base = nf_to_expr(a)
    return {((base, exponent),): Fraction(1)}


def _fuse_ok(inner: Fraction, outer: Fraction) -> bool:
    # (b^i)^o == b^(i*o) holds for any integer o; otherwise only under the
    # same sign-safety conditions as factor distribution
    if outer.denominator == 1:
        return True
    return _distributable(inner, outer)


def _normalize_pow(base: ex.Expr, exponent: Fraction) -> NF:
    """Normalize base^exponent, fusing nested exponents syntactically so a
    quotient-rule denominator (s+2)^2 keeps its factored base."""
    while isinstance(base, ex.Pow) and _fuse_ok(base.exponent, exponent):
        exponent = base.exponent * exponent
        base = base.base
    if exponent == 1:
        return normalize(base)
    return nf_pow(normalize(base), exponent)


def normalize(e: ex.Expr) -> NF:
    if isinstance(e, ex.Constant):
        return {(): e.value} if e.value != 0 else {}
    if isinstance(e, ex.Var):
        return {((e, Fraction(1)),): Fraction(1)}
    if isinstance(e, ex.Add):
        return nf_add(normalize(e.lhs), normalize(e.rhs))
    if isinstance(e, ex.Sub):
        return nf_add(normalize(e.lhs), nf_scale(normalize(e.rhs), Fraction(-1)))
    if isinstance(e, ex.Mul):
        return nf_mul(normalize(e.lhs), normalize(e.rhs))
    if isinstance(e, ex.Div):
        return nf_mul(normalize(e.lhs), _normalize_pow(e.rhs, Fraction(-1)))
    if isinstance(e, ex.Pow):
        return _normalize_pow(e.base, e.exponent)
    if isinstance(e, (ex.Exp, ex.Ln, ex.Sin, ex.Cos)):
        inner = canonical(e.arg)
        node = type(e)(inner)
        return {((node, Fraction(1)),): Fraction(1)}
    raise UncomparableResidual(f"cannot normalize {e!r}")


def _term_to_expr(factors: Factors, coeff: Fraction) -> ex.Expr:
    num: ex.Expr | None = None
    den_pieces: list[ex.Expr] = []
    for base, e in factors:
        if e > 0:
            piece = ex.pow_(base, e)
            num = piece if num is None else ex.mul(num, piece)
        else:
            den_pieces.append(ex.pow_(base, -e))
    if num is None:
        num_expr: ex.Expr = ex.Constant(coeff)
    elif coeff == 1:
        num_expr = num
    elif coeff == -1:
        num_expr = ex.neg(num)
    else:
        num_expr = ex.mul(ex.Constant(coeff), num)
    result = num_expr
    # denominators divide one at a time so each factor stays atomic when
    # the result is re-normalized
    for piece in den_pieces:
        result = ex.div(result, piece)
    return result


def _term_sort_key(item: tuple[Factors, Fraction]):
    factors, _ = item
    total = sum(e for _, e in factors)
    return (-total, tuple((_factor_key(b), e) for b, e in factors))


def nf_to_expr(nf: NF) -> ex.Expr:
    if not nf:
        return ex.ZERO
    total: ex.Expr | None = None
    for factors, coeff in sorted(nf.items(), key=_term_sort_key):
        piece = _term_to_expr(factors, coeff)
        if total is None:
            total = piece
        elif isinstance(piece, ex.Mul) and isinstance(piece.lhs, ex.Constant) and piece.lhs.value < 0:
            total = ex.sub(total, _term_to_expr(factors, -coeff))
        elif isinstance(piece, ex.Constant) and piece.value < 0:
            total = ex.sub(total, ex.Constant(-piece.value))
        else:
            total = ex.add(total, piece)
    return total


def canonical(e: ex.Expr) -> ex.Expr:
    """Deterministic canonical representative of e's power-product form.
    Structurally equal results are used as dictionary keys for subterm
    deduplication."""
    return nf_to_expr(normalize(e))


# --- rationalization over uninterpreted tokens -------------------------------


class TokenTable:
    """Assigns stable token variable names to opaque elementary subterms
    (exp/ln/sin/cos applications and q-th roots) during rationalization."""

    def __init__(self, prefix: str = "_t"):
        self.prefix = prefix
        self.by_expr: dict[ex.Expr, str] = {}
        self.order: list[tuple[str, ex.Expr]] = []

    def token_for(self, e: ex.Expr) -> str:
        name = self.by_expr.get(e)
        if name is None:
            name = f"{self.prefix}{len(self.order) + 1}"
            self.by_expr[e] = name
            self.order.append((name, e))
        return name

    def names(self) -> list[str]:
        return [name for name, _ in self.order]


def root_denominators(nfs: Iterable[NF]) -> dict[ex.Expr, int]:
    """For each base appearing with a fractional exponent anywhere in the
    given normal forms, the lcm of the exponent denominators.  All integer
    occurrences of such a base are later rewritten through its root token,
    so identities like x * x^(-1/2) = x^(1/2) stay decidable."""
    from math import lcm

    out: dict[ex.Expr, int] = {}
    for nf in nfs:
        for factors, _ in nf.items():
            for base, e in factors:
                if e.denominator > 1:
                    out[base] = lcm(out.get(base, 1), e.denominator)
    return out


class Rationalizer:
    """Rewrites normal forms as fractions of canonical polynomials over the
    original variables plus uninterpreted tokens for surviving elementary
    subterms.  One instance is shared across the sides of a comparison so
    that token names agree."""

    def __init__(self, roots: dict[ex.Expr, int]):
        self.tokens = TokenTable()
        self.roots = dict(roots)
        self.variables: list[str] = []

    def _ensure(self, name: str) -> None:
        if name not in self.variables:
            self.variables.append(name)

    def _discover(self, nf: NF) -> None:
        for factors, _ in nf.items():
            for base, e in factors:
                q = self.roots.get(base)
                if q is not None:
                    self._ensure(self.tokens.token_for(ex.pow_(base, Fraction(1, q))))
                    continue
                if isinstance(base, (ex.Exp, ex.Ln, ex.Sin, ex.Cos)):
                    self._ensure(self.tokens.token_for(base))
                elif isinstance(base, ex.Constant):
                    self._ensure(self.tokens.token_for(ex.pow_(base, e)))
                elif ex.is_polynomial(base):
                    for v in sorted(ex.free_vars(base)):
                        self._ensure(v)
                else:
                    inner = normalize(base)
                    for b, q2 in root_denominators([inner]).items():
                        from math import lcm

                        self.roots[b] = lcm(self.roots.get(b, 1), q2)
                    self._discover(inner)

    def discover(self, nf: NF) -> None:
        # run to a fixpoint: tokenizing can expose new inner structure
        before = -1
        while before != len(self.variables):
            before = len(self.variables)
            self._discover(nf)

    def build(self, nf: NF) -> tuple[Poly, Poly]:
        order = tuple(self.variables)
        one = Poly.const(order, 1)
        num_total = Poly.zero(order)
        den_total = one
        for factors, coeff in sorted(nf.items(), key=_term_sort_key):
            num = Poly.const(order, coeff)
            den = one
            for base, e in factors:
                pnum, pden, k = self._factor(base, e, order)
                if k < 0:
                    pnum, pden, k = pden, pnum, -k
                if pden.is_zero():
                    raise UncomparableResidual("zero denominator during rationalization")
                num = num * (pnum**k)
                den = den * (pden**k)
            num_total = num_total * den + num * den_total
            den_total = den_total * den
        if den_total.is_zero():
            raise UncomparableResidual("zero denominator during rationalization")
        return num_total, den_total

    def _factor(
        self, base: ex.Expr, e: Fraction, order: tuple[str, ...]
    ) -> tuple[Poly, Poly, int]:
        """One base^e factor as (numerator, denominator, integer exponent)."""
        one = Poly.const(order, 1)
        q = self.roots.get(base)
        if q is not None:
            token = self.tokens.token_for(ex.pow_(base, Fraction(1, q)))
            scaled = e * q
            return Poly.var(order, token), one, int(scaled)
        if e.denominator != 1:
            raise UncomparableResidual(f"unscaled fractional exponent on {base!r}")
        k = int(e)
        if isinstance(base, (ex.Exp, ex.Ln, ex.Sin, ex.Cos)):
            return Poly.var(order, self.tokens.token_for(base)), one, k
        if isinstance(base, ex.Constant):
            return Poly.var(order, self.tokens.token_for(ex.pow_(base, e))), one, 1
        if ex.is_polynomial(base):
            from .poly import from_expr

            return from_expr(base, order), one, k
        num, den = self.build(normalize(base))
        return num, den, k

    def token_substitution(self) -> dict[str, ex.Expr]:
        return {name: t for t, name in self.tokens.by_expr.items()}


def exprs_equal(lhs: ex.Expr, rhs: ex.Expr) -> tuple[bool, ex.Expr | None]:
    """Decide lhs == rhs by cross-multiplied canonical comparison.

    Both sides are put over a common symbolic denominator; numerators are
    canonicalized as polynomials over the variables extended with tokens
    for surviving elementary subterms.  Returns (equal, residual) where
    residual witnesses the difference.  Raises UncomparableResidual when a
    denominator canonicalizes to zero."""
    nf_l, nf_r = normalize(lhs), normalize(rhs)
    rat = Rationalizer(root_denominators([nf_l, nf_r]))
    rat.discover(nf_l)
    rat.discover(nf_r)
    nl, dl = rat.build(nf_l)
    nr, dr = rat.build(nf_r)
    diff = nl * dr - nr * dl
    if diff.is_zero():
        return True, None
    # report in terms of the original subterms, not token names
    residual = ex.substitute(diff.to_expr(), rat.token_substitution())
    return False, residual
