"""Taylor enclosures of univariate elementary functions over a box.

An enclosure is a polynomial p (exact Taylor coefficients at the domain
center, computed by truncated-series arithmetic) together with a remainder
interval R such that f(t) is in p(t) + R for every t in the domain.

The remainder is the Lagrange bound |f^(d+1)| * rad^(d+1) / (d+1)! with the
derivative magnitude bounded by interval evaluation; when that bound is
unavailable (interval evaluation fails or is unbounded) an adaptive
subdivision bound of f - p is used instead.  Either way only containment
is guaranteed, not tightness.
"""

from __future__ import annotations

import math
from fractions import Fraction

from . import expr as ex
from .errors import DomainViolation, NotUnivariate
from .intervals import INF, Interval, interval_eval
from .predicates import Atom, GE, LE, Predicate, conj

Series = list  # dense coefficient list c0..cN, Fractions or floats


def _series_mul(a: Series, b: Series, n: int) -> Series:
    out = [Fraction(0)] * (n + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(min(len(b), n + 1 - i)):
            if b[j] != 0:
                out[i + j] += ai * b[j]
    return out


def _series_add(a: Series, b: Series) -> Series:
    n = max(len(a), len(b))
    return [
        (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
    ]


def _series_scale(a: Series, c) -> Series:
    return [c * x for x in a]


def _series_int_pow(a: Series, k: int, n: int) -> Series:
    out: Series = [Fraction(1)] + [Fraction(0)] * n
    for _ in range(k):
        out = _series_mul(out, a, n)
    return out


def _series_reciprocal(a: Series, n: int) -> Series:
    if a[0] == 0:
        raise DomainViolation("series reciprocal with zero constant term")
    out = [Fraction(0)] * (n + 1)
    out[0] = 1 / _as_fraction(a[0]) if isinstance(a[0], Fraction) else 1.0 / a[0]
    for k in range(1, n + 1):
        acc = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


def _as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _series_exp(a: Series, n: int) -> Series:
    c0 = a[0]
    lead = Fraction(1) if c0 == 0 else math.exp(float(c0))
    out = [Fraction(0)] * (n + 1)
    out[0] = lead
    for k in range(1, n + 1):
        acc = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += j * a[j] * out[k - j]
        out[k] = acc / k
    return out


def _series_ln(a: Series, n: int) -> Series:
    c0 = a[0]
    if (isinstance(c0, Fraction) and c0 <= 0) or (isinstance(c0, float) and c0 <= 0):
        raise DomainViolation("ln of a series with non-positive constant term")
    lead = Fraction(0) if c0 == 1 else math.log(float(c0))
    da = [j * a[j] for j in range(1, len(a))]  # a'
    quotient = _series_mul(da + [Fraction(0)], _series_reciprocal(a, n), n)
    out = [Fraction(0)] * (n + 1)
    out[0] = lead
    for k in range(1, n + 1):
        out[k] = quotient[k - 1] / k
    return out


def _series_sincos(a: Series, n: int) -> tuple[Series, Series]:
    c0 = a[0]
    if c0 == 0:
        s0, co0 = Fraction(0), Fraction(1)
    else:
        s0, co0 = math.sin(float(c0)), math.cos(float(c0))
    s = [Fraction(0)] * (n + 1)
    c = [Fraction(0)] * (n + 1)
    s[0], c[0] = s0, co0
    for k in range(1, n + 1):
        acc_s = 0
        acc_c = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            acc_s += j * a[j] * c[k - j]
            acc_c += j * a[j] * s[k - j]
        s[k] = acc_s / k
        c[k] = -acc_c / k
    return s, c


def _series_pow(a: Series, exponent: Fraction, n: int) -> Series:
    if exponent.denominator == 1 and exponent >= 0:
        return _series_int_pow(a, int(exponent), n)
    c0 = _as_fraction(a[0]) if not isinstance(a[0], float) else a[0]
    if c0 == 0:
        raise DomainViolation("fractional or negative power of a series vanishing at the center")
    if exponent.denominator > 1 and (c0 < 0):
        raise DomainViolation("fractional power of a negative center value")
    root = None
    if isinstance(c0, Fraction):
        root = ex._exact_root(c0, exponent.denominator)
    lead = (
        root ** exponent.numerator
        if root is not None
        else float(c0) ** float(exponent)
    )
    # h = a^e solves a h' = e a' h
    out = [Fraction(0)] * (n + 1)
    out[0] = lead
    for k in range(1, n + 1):
        acc = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += ((exponent + 1) * j / k - 1) * a[j] * out[k - j]
        out[k] = acc / c0 if isinstance(c0, Fraction) else acc / c0
    return out


def taylor_series(f: ex.Expr, var: str, center: Fraction, degree: int) -> Series:
    """Exact (rational when the leaf evaluations are rational) Taylor
    coefficients of f around `center`, by recursive series arithmetic."""
    n = degree

    def build(node: ex.Expr) -> Series:
        if isinstance(node, ex.Constant):
            return [node.value] + [Fraction(0)] * n
        if isinstance(node, ex.Var):
            if node.name != var:
                raise NotUnivariate(f"unexpected variable {node.name!r}")
            out = [Fraction(center), Fraction(1)] + [Fraction(0)] * max(n - 1, 0)
            return out[: n + 1]
        if isinstance(node, ex.Add):
            return _series_add(build(node.lhs), build(node.rhs))
        if isinstance(node, ex.Sub):
            return _series_add(build(node.lhs), _series_scale(build(node.rhs), -1))
        if isinstance(node, ex.Mul):
            return _series_mul(build(node.lhs), build(node.rhs), n)
        if isinstance(node, ex.Div):
            return _series_mul(build(node.lhs), _series_reciprocal(build(node.rhs), n), n)
        if isinstance(node, ex.Pow):
            return _series_pow(build(node.base), node.exponent, n)
        if isinstance(node, ex.Exp):
            return _series_exp(build(node.arg), n)
        if isinstance(node, ex.Ln):
            return _series_ln(build(node.arg), n)
        if isinstance(node, ex.Sin):
            return _series_sincos(build(node.arg), n)[0]
        if isinstance(node, ex.Cos):
            return _series_sincos(build(node.arg), n)[1]
        raise NotUnivariate(f"cannot expand {node!r}")

    series = build(f)
    return series[: n + 1]


class TaylorEnclosure:
    """p(t) + remainder contains f(t) for all t in domain; p is expressed
    in powers of (t - center)."""

    __slots__ = ("center", "domain", "degree", "coefficients", "remainder")

    def __init__(self, center: Fraction, domain: Interval, degree: int, coefficients, remainder: Interval):
        self.center = Fraction(center)
        self.domain = domain
        self.degree = degree
        self.coefficients = list(coefficients)
        self.remainder = remainder

    def polynomial(self, var: str) -> ex.Expr:
        shift = ex.sub(ex.Var(var), ex.Constant(self.center)) if self.center != 0 else ex.Var(var)
        total: ex.Expr = ex.ZERO
        for k, c in enumerate(self.coefficients):
            coeff = ex.Constant(_as_fraction(c))
            if coeff.value == 0:
                continue
            total = ex.add(total, ex.mul(coeff, ex.pow_(shift, k)))
        return total

    def evaluate_polynomial(self, t: float) -> float:
        dt = t - float(self.center)
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * dt + float(c)
        return acc

    def __repr__(self):
        return (
            f"TaylorEnclosure(center={self.center}, degree={self.degree}, "
            f"remainder={self.remainder})"
        )


def _factorial(k: int) -> int:
    return math.factorial(k)


def _node_count(e: ex.Expr) -> int:
    return sum(1 for _ in ex.subterms(e))


def _lagrange_bound(f: ex.Expr, var: str, domain: Interval, degree: int) -> Interval | None:
    """[-M, M] with M >= sup |f^(d+1)| * rad^(d+1) / (d+1)!, via interval
    evaluation of the symbolic derivative.  None when unavailable."""
    derivative = f
    for _ in range(degree + 1):
        derivative = ex.differentiate(derivative, var)
        if _node_count(derivative) > 20000:
            return None  # derivative swell; the subdivision bound takes over
    try:
        bound = interval_eval(derivative, {var: domain})
    except DomainViolation:
        return None
    if not bound.is_bounded():
        return None
    rad = domain.radius()
    magnitude = max(abs(Fraction(bound.lo)) if not isinstance(bound.lo, float) else abs(bound.lo),
                    abs(Fraction(bound.hi)) if not isinstance(bound.hi, float) else abs(bound.hi))
    scale = rad ** (degree + 1) / _factorial(degree + 1)
    m = magnitude * scale
    if isinstance(m, Fraction):
        return Interval(-m, m)
    return Interval(-float(m), float(m))


def _subdivision_bound(
    enclosure: TaylorEnclosure, f: ex.Expr, var: str, pieces: int = 64, refine: int = 3
) -> Interval:
    """Interval bound of f - p over the domain by uniform subdivision plus
    a few refinement rounds on the widest cells."""
    domain = enclosure.domain
    lo = Fraction(domain.lo)
    hi = Fraction(domain.hi)
    if lo == hi:
        # p(center) equals the series constant term, which is f(center) by
        # construction, so a point domain has no truncation error at all
        return Interval.point(0)

    poly = enclosure.polynomial(var)
    diff = ex.sub(f, poly)
    cells = []
    step = (hi - lo) / pieces
    for i in range(pieces):
        cells.append(Interval(lo + i * step, lo + (i + 1) * step))

    def bound_cell(cell: Interval) -> Interval:
        return interval_eval(diff, {var: cell})

    bounds = [bound_cell(c) for c in cells]
    for _ in range(refine):
        widths = [float(b.hi) - float(b.lo) for b in bounds]
        worst = max(range(len(cells)), key=lambda i: widths[i])
        a, b = cells[worst].split()
        cells[worst : worst + 1] = [a, b]
        bounds[worst : worst + 1] = [bound_cell(a), bound_cell(b)]
    total = bounds[0]
    for b in bounds[1:]:
        total = total.hull(b)
    return total


def taylor_enclose(
    f: ex.Expr,
    center: Fraction | None = None,
    domain: Interval | None = None,
    degree: int = 6,
    var: str | None = None,
) -> TaylorEnclosure:
    """Enclose a univariate elementary function over a bounded domain.

    center defaults to the domain midpoint.  The remainder is the tighter
    of the Lagrange derivative bound and the subdivision bound (both valid;
    the intersection is kept)."""
    names = sorted(ex.free_vars(f))
    if var is None:
        if len(names) > 1:
            raise NotUnivariate(f"expected one variable, found {names}")
        var = names[0] if names else "_t"
    elif names and names != [var]:
        raise NotUnivariate(f"expected only {var!r}, found {names}")
    if domain is None:
        raise DomainViolation("a bounded domain interval is required")
    if not domain.is_bounded():
        raise DomainViolation("Taylor enclosures need a bounded domain")
    if center is None:
        center = domain.midpoint()
    center = Fraction(center)
    if not domain.contains(center):
        raise DomainViolation("center must lie in the domain")

    coefficients = taylor_series(f, var, center, degree)
    enclosure = TaylorEnclosure(center, domain, degree, coefficients, Interval.point(0))

    if domain.lo == domain.hi:
        remainder = _subdivision_bound(enclosure, f, var)
        return TaylorEnclosure(center, domain, degree, coefficients, remainder)

    candidates: list[Interval] = []
    lagrange = _lagrange_bound(f, var, domain, degree)
    if lagrange is not None:
        candidates.append(lagrange)
    try:
        candidates.append(_subdivision_bound(enclosure, f, var))
    except DomainViolation:
        pass
    if not candidates:
        raise DomainViolation("no valid remainder bound could be computed")
    remainder = min(candidates, key=lambda r: float(r.hi) - float(r.lo))
    return TaylorEnclosure(center, domain, degree, coefficients, remainder)


def enclosure_to_predicate(t: TaylorEnclosure, x: str, v: str) -> Predicate:
    """p(x) + lo <= v  and  v <= p(x) + hi, as polynomial atoms."""
    p = t.polynomial(x)
    lo = _endpoint_const(t.remainder.lo, down=True)
    hi = _endpoint_const(t.remainder.hi, down=False)
    lower = Atom(ex.sub(ex.add(p, lo), ex.Var(v)), LE)
    upper = Atom(ex.sub(ex.Var(v), ex.add(p, hi)), LE)
    return conj(lower, upper)


def _endpoint_const(value, down: bool) -> ex.Expr:
    if isinstance(value, Fraction):
        return ex.Constant(value)
    if value in (INF, -INF):
        raise DomainViolation("unbounded remainder cannot form a band predicate")
    return ex.Constant(Fraction(value))
