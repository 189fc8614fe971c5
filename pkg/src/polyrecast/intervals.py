"""Interval arithmetic with outward rounding.

Endpoints are exact Fractions whenever every input endpoint is rational
and the operation is rational; transcendental bounds fall back to floats
nudged outward by one ulp.  All operations are inclusion-monotone: the
result contains the true range of the operation over the operands.

sin and cos use exact range reduction: critical points k*pi/2 are located
with rational brackets of pi, and any bracket ambiguity widens the result
(which keeps it sound).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Union

from . import expr as ex
from .errors import DomainViolation

Endpoint = Union[Fraction, float]

# pi to 40 digits, bracketed rationally
_PI_LO = Fraction(31415926535897932384626433832795028841, 10**37)
_PI_HI = Fraction(31415926535897932384626433832795028842, 10**37)
_TWO_PI_HI = 2 * _PI_HI

INF = math.inf


def _down(x: float) -> float:
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    return math.nextafter(x, INF)


def _is_exact(x: Endpoint) -> bool:
    return isinstance(x, (Fraction, int))


class Interval:
    """Closed interval [lo, hi] with optional open endpoints recorded for
    predicate emission (arithmetic may drop openness; that is sound)."""

    __slots__ = ("lo", "hi", "open_lo", "open_hi")

    def __init__(self, lo: Endpoint, hi: Endpoint, open_lo: bool = False, open_hi: bool = False):
        if isinstance(lo, int):
            lo = Fraction(lo)
        if isinstance(hi, int):
            hi = Fraction(hi)
        if not lo <= hi:
            raise DomainViolation(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "open_lo", open_lo)
        object.__setattr__(self, "open_hi", open_hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def point(cls, value) -> "Interval":
        value = Fraction(value) if not isinstance(value, float) else value
        return cls(value, value)

    @classmethod
    def reals(cls) -> "Interval":
        return cls(-INF, INF)

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"

    def __eq__(self, other):
        return (
            isinstance(other, Interval)
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.lo, self.hi))

    # --- queries ---------------------------------------------------------

    def width(self) -> Endpoint:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        if not (self.is_bounded()):
            raise DomainViolation("midpoint of an unbounded interval")
        lo = Fraction(self.lo) if not isinstance(self.lo, Fraction) else self.lo
        hi = Fraction(self.hi) if not isinstance(self.hi, Fraction) else self.hi
        return (lo + hi) / 2

    def radius(self) -> Fraction:
        return Fraction(self.hi) - self.midpoint() if self.is_bounded() else Fraction(0)

    def is_bounded(self) -> bool:
        return self.lo != -INF and self.hi != INF

    def contains(self, value) -> bool:
        return self.lo <= value <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_positive(self) -> bool:
        return self.lo > 0 or (self.lo == 0 and self.open_lo)

    def strictly_negative(self) -> bool:
        return self.hi < 0 or (self.hi == 0 and self.open_hi)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def split(self) -> tuple["Interval", "Interval"]:
        mid = self.midpoint()
        return Interval(self.lo, mid), Interval(mid, self.hi)

    # --- arithmetic --------------------------------------------------------

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(
            _add_round(self.lo, other.lo, down=True),
            _add_round(self.hi, other.hi, down=False),
        )

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(
            _add_round(self.lo, -_as_signed(other.hi), down=True),
            _add_round(self.hi, -_as_signed(other.lo), down=False),
        )

    def __neg__(self) -> "Interval":
        return Interval(-_as_signed(self.hi), -_as_signed(self.lo))

    def __mul__(self, other: "Interval") -> "Interval":
        products_lo = []
        products_hi = []
        for a in (self.lo, self.hi):
            for b in (other.lo, other.hi):
                products_lo.append(_mul_round(a, b, down=True))
                products_hi.append(_mul_round(a, b, down=False))
        return Interval(min(products_lo), max(products_hi))

    def reciprocal(self, allow_unbounded: bool = False) -> "Interval":
        if self.lo > 0 or self.hi < 0:
            return Interval(
                _div_round(1, self.hi, down=True),
                _div_round(1, self.lo, down=False),
            )
        if self.lo == 0 and (self.open_lo or self.hi > 0):
            return Interval(_div_round(1, self.hi, down=True) if self.hi > 0 else -INF, INF, open_hi=False)
        if self.hi == 0 and (self.open_hi or self.lo < 0):
            return Interval(-INF, _div_round(1, self.lo, down=False) if self.lo < 0 else INF)
        if allow_unbounded:
            return Interval.reals()
        raise DomainViolation(f"reciprocal of {self} containing zero")

    def power(self, exponent: Fraction, allow_unbounded: bool = False) -> "Interval":
        exponent = Fraction(exponent)
        if exponent.denominator == 1:
            return self._int_power(int(exponent), allow_unbounded)
        if exponent.denominator % 2 == 0 and self.lo < 0:
            raise DomainViolation(f"even root of {self} reaching below zero")
        # roots are monotone on the permitted domain
        neg = exponent < 0
        p = abs(exponent)
        lo = _pow_round(self.lo, p, down=True)
        hi = _pow_round(self.hi, p, down=False)
        out = Interval(lo, hi)
        return out.reciprocal(allow_unbounded) if neg else out

    def _int_power(self, k: int, allow_unbounded: bool) -> "Interval":
        if k == 0:
            return Interval.point(1)
        if k < 0:
            return self._int_power(-k, allow_unbounded).reciprocal(allow_unbounded)
        if k % 2 == 1 or self.lo >= 0:
            return Interval(
                _pow_round(self.lo, Fraction(k), down=True, signed=True),
                _pow_round(self.hi, Fraction(k), down=False, signed=True),
            )
        if self.hi <= 0:
            return Interval(
                _pow_round(self.hi, Fraction(k), down=True, signed=True),
                _pow_round(self.lo, Fraction(k), down=False, signed=True),
            )
        top = max(
            _pow_round(self.lo, Fraction(k), down=False, signed=True),
            _pow_round(self.hi, Fraction(k), down=False, signed=True),
        )
        return Interval(Fraction(0), top)

    # --- transcendental bounds ----------------------------------------------

    def exp(self) -> "Interval":
        def one_end(x: Endpoint, down: bool) -> Endpoint:
            if x == -INF:
                return Fraction(0)
            if x == INF:
                return INF
            if x == 0:
                return Fraction(1)
            return _transcend(x, math.exp, down=down)

        lo = one_end(self.lo, down=True)
        hi = one_end(self.hi, down=False)
        if isinstance(lo, float):
            lo = max(lo, 0.0)
        return Interval(lo, hi, open_lo=(self.lo == -INF))

    def ln(self) -> "Interval":
        if self.lo < 0 or (self.lo == 0 and not self.open_lo):
            raise DomainViolation(f"ln of {self} reaching non-positive values")

        def one_end(x: Endpoint, down: bool) -> Endpoint:
            if x == 0:
                return -INF
            if x == INF:
                return INF
            if x == 1:
                return Fraction(0)
            return _transcend(x, math.log, down=down)

        return Interval(one_end(self.lo, True), one_end(self.hi, False))

    def sin(self) -> "Interval":
        if self.lo == self.hi and self.lo == 0:
            return Interval.point(0)
        return _sin_range(self)

    def cos(self) -> "Interval":
        if self.lo == self.hi and self.lo == 0:
            return Interval.point(1)
        return _cos_range(self)


def _as_signed(x: Endpoint) -> Endpoint:
    return x


def _add_round(a: Endpoint, b: Endpoint, down: bool) -> Endpoint:
    if _is_exact(a) and _is_exact(b):
        return a + b
    if a in (-INF, INF) or b in (-INF, INF):
        total = float(a) + float(b)
        return total
    total = float(a) + float(b)
    return _down(total) if down else _up(total)


def _mul_round(a: Endpoint, b: Endpoint, down: bool) -> Endpoint:
    # 0 * inf = 0 in corner-product enumeration (Moore convention)
    if (a == 0 and b in (-INF, INF)) or (b == 0 and a in (-INF, INF)):
        return Fraction(0)
    if _is_exact(a) and _is_exact(b):
        return a * b
    product = float(a) * float(b)
    if math.isinf(product):
        return product
    return _down(product) if down else _up(product)


def _div_round(a: Endpoint, b: Endpoint, down: bool) -> Endpoint:
    if b in (-INF, INF):
        return Fraction(0)
    if _is_exact(a) and _is_exact(b) and b != 0:
        return Fraction(a) / Fraction(b)
    q = float(a) / float(b)
    return _down(q) if down else _up(q)


def _pow_round(base: Endpoint, exponent: Fraction, down: bool, signed: bool = False) -> Endpoint:
    if base in (-INF, INF):
        if exponent == 0:
            return Fraction(1)
        if base == INF:
            return INF
        # -inf with odd integer exponent
        return -INF if (signed and exponent.denominator == 1 and int(exponent) % 2 == 1) else INF
    if _is_exact(base):
        base_f = Fraction(base)
        if exponent.denominator == 1:
            return base_f ** int(exponent)
        root = ex._exact_root(abs(base_f), exponent.denominator)
        if root is not None and base_f >= 0:
            return root ** exponent.numerator
    if float(base) < 0 and exponent.denominator > 1:
        if exponent.denominator % 2 == 1:
            magnitude = (-float(base)) ** float(exponent)
            sign = -1 if exponent.numerator % 2 else 1
            value = sign * magnitude
        else:
            raise DomainViolation(f"negative base {base} under an even root")
    else:
        value = float(base) ** float(exponent)
    return _down(value) if down else _up(value)


def _transcend(x: Endpoint, fn, down: bool) -> float:
    """fn at an endpoint, with slack covering both the libm error and the
    rounding of an exact endpoint to float (scaled by |x| since the
    derivative magnitudes of exp/ln/sin/cos on our domains are bounded by
    max(1, |value|))."""
    xf = float(x)
    value = fn(xf)
    slack = (abs(xf) + 1.0) * 1e-15 * max(1.0, abs(value))
    return _down(value - slack) if down else _up(value + slack)


def _critical_in(interval: Interval, k: int, half_pi: bool = True) -> bool:
    """Conservatively: could k*pi/2 (or k*pi) lie in the interval?"""
    num_lo, num_hi = (_PI_LO / 2, _PI_HI / 2) if half_pi else (_PI_LO, _PI_HI)
    point_lo = k * (num_lo if k >= 0 else num_hi)
    point_hi = k * (num_hi if k >= 0 else num_lo)
    return point_hi >= interval.lo and point_lo <= interval.hi


def _trig_range(interval: Interval, fn, max_kind: int, min_kind: int) -> Interval:
    """Shared sin/cos range: max at k = max_kind (mod 4) quarter-turns, min
    at k = min_kind (mod 4)."""
    if not interval.is_bounded() or Fraction(interval.hi) - Fraction(interval.lo) >= _TWO_PI_HI:
        return Interval(Fraction(-1), Fraction(1))
    lo_f, hi_f = float(interval.lo), float(interval.hi)
    values = [
        _transcend(lo_f, fn, down=True),
        _transcend(lo_f, fn, down=False),
        _transcend(hi_f, fn, down=True),
        _transcend(hi_f, fn, down=False),
    ]
    lo, hi = min(values), max(values)
    k_min = math.floor(lo_f / (math.pi / 2)) - 2
    k_max = math.ceil(hi_f / (math.pi / 2)) + 2
    result_lo: Endpoint = lo
    result_hi: Endpoint = hi
    for k in range(k_min, k_max + 1):
        if not _critical_in(interval, k):
            continue
        if k % 4 == max_kind:
            result_hi = Fraction(1)
        if k % 4 == min_kind:
            result_lo = Fraction(-1)
    result_lo = max(result_lo, Fraction(-1)) if _is_exact(result_lo) else max(result_lo, -1.0)
    result_hi = min(result_hi, Fraction(1)) if _is_exact(result_hi) else min(result_hi, 1.0)
    return Interval(result_lo, result_hi)


def _sin_range(interval: Interval) -> Interval:
    return _trig_range(interval, math.sin, max_kind=1, min_kind=3)


def _cos_range(interval: Interval) -> Interval:
    return _trig_range(interval, math.cos, max_kind=0, min_kind=2)


Box = Mapping[str, Interval]


def interval_eval(e: ex.Expr, box: Box, allow_unbounded: bool = False) -> Interval:
    """Inclusion-monotone range enclosure of e over the box.

    Raises DomainViolation (naming the offending subterm) when a partial
    function is applied outside its domain; division by an interval
    containing zero is allowed only with allow_unbounded, in which case the
    result is unbounded."""
    if isinstance(e, ex.Constant):
        return Interval.point(e.value)
    if isinstance(e, ex.Var):
        if e.name not in box:
            raise DomainViolation(f"no interval given for variable {e.name!r}")
        return box[e.name]
    try:
        if isinstance(e, ex.Add):
            return interval_eval(e.lhs, box, allow_unbounded) + interval_eval(e.rhs, box, allow_unbounded)
        if isinstance(e, ex.Sub):
            return interval_eval(e.lhs, box, allow_unbounded) - interval_eval(e.rhs, box, allow_unbounded)
        if isinstance(e, ex.Mul):
            return interval_eval(e.lhs, box, allow_unbounded) * interval_eval(e.rhs, box, allow_unbounded)
        if isinstance(e, ex.Div):
            num = interval_eval(e.lhs, box, allow_unbounded)
            den = interval_eval(e.rhs, box, allow_unbounded)
            return num * den.reciprocal(allow_unbounded)
        if isinstance(e, ex.Pow):
            return interval_eval(e.base, box, allow_unbounded).power(e.exponent, allow_unbounded)
        if isinstance(e, ex.Exp):
            return interval_eval(e.arg, box, allow_unbounded).exp()
        if isinstance(e, ex.Ln):
            return interval_eval(e.arg, box, allow_unbounded).ln()
        if isinstance(e, ex.Sin):
            return interval_eval(e.arg, box, allow_unbounded).sin()
        if isinstance(e, ex.Cos):
            return interval_eval(e.arg, box, allow_unbounded).cos()
    except DomainViolation as err:
        raise DomainViolation(f"{err} in subterm {ex.to_string(e)!r}") from None
    raise DomainViolation(f"cannot bound {e!r}")
