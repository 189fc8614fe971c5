"""Expression trees for elementary functions.

The node set is fixed: constants, variables, +, -, *, /, rational powers,
exp, ln, sin, cos.  Nothing else exists, which keeps every downstream pass
(differentiation, replacement, normalization) a small total case split.

Constants are exact rationals (`fractions.Fraction`); all structural
identity decisions in the toolkit rely on exact arithmetic.  Nodes are
immutable and hashable, so subterm tables can be keyed on them directly.

Construction goes through the module-level builders (or the overloaded
operators, which call them).  Builders fold constants and apply the
identity rules x+0, x*1, x*0, x^1, x^0 and nothing more aggressive; in
particular there is no trigonometric rewriting and unary minus is
represented as (-1)*x.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Number = Union[int, Fraction]


class ExprError(Exception):
    """Malformed use of the expression layer."""


class Expr:
    """Base class; concrete nodes define `args` and participate in structural equality."""

    __slots__ = ("_hash",)

    # --- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __neg__(self):
        return mul(Constant(-1), self)

    # --- structure ------------------------------------------------------

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return self._key() == other._key()

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
        return h

    def _key(self):
        raise NotImplementedError

    def __repr__(self):
        return to_string(self)


class Constant(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number | str):
        object.__setattr__(self, "value", Fraction(value))

    def _key(self):
        return self.value

    def __setattr__(self, name, value):
        raise AttributeError("Constant is immutable")


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _key(self):
        return self.name

    def __setattr__(self, name, value):
        raise AttributeError("Var is immutable")


class _Binary(Expr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: Expr, rhs: Expr):
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    def children(self):
        return (self.lhs, self.rhs)

    def _key(self):
        return (self.lhs, self.rhs)

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Pow(Expr):
    """base ** exponent with the exponent a rational constant, stored exactly."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Number):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", Fraction(exponent))

    def children(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exponent)

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")


class _Unary(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)

    def children(self):
        return (self.arg,)

    def _key(self):
        return self.arg

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")


class Exp(_Unary):
    __slots__ = ()


class Ln(_Unary):
    __slots__ = ()


class Sin(_Unary):
    __slots__ = ()


class Cos(_Unary):
    __slots__ = ()


ZERO = Constant(0)
ONE = Constant(1)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Constant(value)
    if isinstance(value, float):
        # Floats are taken at their decimal face value, same as the parser.
        return Constant(Fraction(str(value)))
    if isinstance(value, str):
        return Constant(Fraction(value))
    raise ExprError(f"cannot use {value!r} as an expression")


# --- simplifying builders ------------------------------------------------


def add(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value + b.value)
    if isinstance(a, Constant) and a.value == 0:
        return b
    if isinstance(b, Constant) and b.value == 0:
        return a
    return Add(a, b)


def sub(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value - b.value)
    if isinstance(b, Constant) and b.value == 0:
        return a
    return Sub(a, b)


def mul(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    if isinstance(a, Constant):
        if a.value == 0:
            return ZERO
        if a.value == 1:
            return b
    if isinstance(b, Constant):
        if b.value == 0:
            return ZERO
        if b.value == 1:
            return a
    return Mul(a, b)


def div(a, b) -> Expr:
    a, b = _coerce(a), _coerce(b)
    if isinstance(b, Constant):
        if b.value == 0:
            raise ExprError("division by the constant zero")
        # Fold the reciprocal into a coefficient; x/c is a polynomial.
        return mul(Constant(Fraction(1, 1) / b.value), a)
    if isinstance(a, Constant) and isinstance(b, Constant):  # pragma: no cover
        return Constant(a.value / b.value)
    return Div(a, b)


def _exact_root(value: Fraction, q: int) -> Fraction | None:
    """q-th root of a rational, when it is exactly rational."""
    if value < 0:
        return None

    def iroot(n: int) -> int | None:
        if n in (0, 1):
            return n
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    np_, dp = iroot(value.numerator), iroot(value.denominator)
    if np_ is None or dp is None:
        return None
    return Fraction(np_, dp)


def pow_(base, exponent) -> Expr:
    base = _coerce(base)
    if isinstance(exponent, Expr):
        if not isinstance(exponent, Constant):
            raise ExprError("exponent must be a rational constant")
        exponent = exponent.value
    exponent = Fraction(exponent)
    if exponent == 1:
        return base
    if exponent == 0:
        return ONE
    if isinstance(base, Constant):
        if exponent.denominator == 1:
            k = int(exponent)
            if k < 0 and base.value == 0:
                raise ExprError("zero raised to a negative power")
            return Constant(base.value**k)
        root = _exact_root(base.value, exponent.denominator)
        if root is not None:
            return pow_(Constant(root), Fraction(exponent.numerator))
    return Pow(base, exponent)


def exp(arg) -> Expr:
    arg = _coerce(arg)
    if isinstance(arg, Constant) and arg.value == 0:
        return ONE
    return Exp(arg)


def ln(arg) -> Expr:
    arg = _coerce(arg)
    if isinstance(arg, Constant):
        if arg.value == 1:
            return ZERO
        if arg.value <= 0:
            raise ExprError("ln of a non-positive constant")
    return Ln(arg)


def sin(arg) -> Expr:
    arg = _coerce(arg)
    if isinstance(arg, Constant) and arg.value == 0:
        return ZERO
    return Sin(arg)


def cos(arg) -> Expr:
    arg = _coerce(arg)
    if isinstance(arg, Constant) and arg.value == 0:
        return ONE
    return Cos(arg)


def sqrt(arg) -> Expr:
    return pow_(arg, Fraction(1, 2))


def neg(arg) -> Expr:
    return mul(Constant(-1), _coerce(arg))


# --- queries --------------------------------------------------------------


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Constant):
        return frozenset()
    out: set[str] = set()
    for c in e.children():
        out |= free_vars(c)
    return frozenset(out)


def subterms(e: Expr) -> Iterator[Expr]:
    """All subtrees, root first."""
    yield e
    for c in e.children():
        yield from subterms(c)


def is_polynomial(e: Expr) -> bool:
    """True iff e is built from constants, variables, +, -, * and
    non-negative integer powers.  A literal Div node or a negative or
    fractional exponent makes it non-polynomial, as do exp/ln/sin/cos."""
    if isinstance(e, (Constant, Var)):
        return True
    if isinstance(e, (Add, Sub, Mul)):
        return is_polynomial(e.lhs) and is_polynomial(e.rhs)
    if isinstance(e, Pow):
        return e.exponent.denominator == 1 and e.exponent >= 0 and is_polynomial(e.base)
    return False


def count_nonpoly_subterms(exprs: Iterable[Expr]) -> int:
    """Number of distinct non-polynomial subtrees across the given expressions."""
    seen: set[Expr] = set()
    for e in exprs:
        for t in subterms(e):
            if t not in seen and not is_polynomial(t):
                seen.add(t)
    return len(seen)


# --- rewriting ------------------------------------------------------------


def substitute(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Simultaneous replacement of variables.  Subtrees that mention no
    bound variable are returned unchanged (same object)."""
    if not bindings:
        return e
    relevant = set(bindings)

    def walk(node: Expr) -> Expr:
        if isinstance(node, Var):
            return bindings.get(node.name, node)
        if isinstance(node, Constant):
            return node
        if not (free_vars(node) & relevant):
            return node
        if isinstance(node, Add):
            return add(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Sub):
            return sub(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Mul):
            return mul(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Div):
            return div(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Pow):
            return pow_(walk(node.base), node.exponent)
        if isinstance(node, Exp):
            return exp(walk(node.arg))
        if isinstance(node, Ln):
            return ln(walk(node.arg))
        if isinstance(node, Sin):
            return sin(walk(node.arg))
        if isinstance(node, Cos):
            return cos(walk(node.arg))
        raise ExprError(f"unknown node {node!r}")

    return walk(e)


def replace_subterm(e: Expr, target: Expr, var_name: str) -> Expr:
    """Replace every structurally identical occurrence of `target` by a variable."""
    v = Var(var_name)

    def walk(node: Expr) -> Expr:
        if node == target:
            return v
        if isinstance(node, (Constant, Var)):
            return node
        if isinstance(node, Add):
            return add(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Sub):
            return sub(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Mul):
            return mul(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Div):
            return div(walk(node.lhs), walk(node.rhs))
        if isinstance(node, Pow):
            return pow_(walk(node.base), node.exponent)
        if isinstance(node, Exp):
            return exp(walk(node.arg))
        if isinstance(node, Ln):
            return ln(walk(node.arg))
        if isinstance(node, Sin):
            return sin(walk(node.arg))
        if isinstance(node, Cos):
            return cos(walk(node.arg))
        raise ExprError(f"unknown node {node!r}")

    return walk(e)


def count_subterm(e: Expr, target: Expr) -> int:
    return sum(1 for t in subterms(e) if t == target)


# --- differentiation ------------------------------------------------------


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative.  Chain rule throughout; the builders
    fold constants but nothing is otherwise simplified."""
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Add):
        return add(differentiate(e.lhs, var), differentiate(e.rhs, var))
    if isinstance(e, Sub):
        return sub(differentiate(e.lhs, var), differentiate(e.rhs, var))
    if isinstance(e, Mul):
        return add(
            mul(differentiate(e.lhs, var), e.rhs),
            mul(e.lhs, differentiate(e.rhs, var)),
        )
    if isinstance(e, Div):
        num = sub(
            mul(differentiate(e.lhs, var), e.rhs),
            mul(e.lhs, differentiate(e.rhs, var)),
        )
        return div(num, pow_(e.rhs, 2))
    if isinstance(e, Pow):
        factor = mul(Constant(e.exponent), pow_(e.base, e.exponent - 1))
        return mul(factor, differentiate(e.base, var))
    if isinstance(e, Exp):
        return mul(Exp(e.arg), differentiate(e.arg, var))
    if isinstance(e, Ln):
        return div(differentiate(e.arg, var), e.arg)
    if isinstance(e, Sin):
        return mul(Cos(e.arg), differentiate(e.arg, var))
    if isinstance(e, Cos):
        return mul(neg(Sin(e.arg)), differentiate(e.arg, var))
    raise ExprError(f"unknown node {e!r}")


def gradient(e: Expr, variables: Iterable[str]) -> list[Expr]:
    return [differentiate(e, v) for v in variables]


# --- evaluation -------------------------------------------------------------


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Numeric evaluation with floats.  Raises the usual math errors on
    domain violations (log of non-positive, 0**negative, ...)."""
    import math

    def ev(node: Expr) -> float:
        if isinstance(node, Constant):
            return float(node.value)
        if isinstance(node, Var):
            return float(env[node.name])
        if isinstance(node, Add):
            return ev(node.lhs) + ev(node.rhs)
        if isinstance(node, Sub):
            return ev(node.lhs) - ev(node.rhs)
        if isinstance(node, Mul):
            return ev(node.lhs) * ev(node.rhs)
        if isinstance(node, Div):
            return ev(node.lhs) / ev(node.rhs)
        if isinstance(node, Pow):
            b = ev(node.base)
            x = node.exponent
            if x.denominator == 1:
                return b ** int(x)
            if b < 0:
                if x.denominator % 2 == 1:
                    # odd real root of a negative number
                    sign = -1 if x.numerator % 2 else 1
                    return sign * ((-b) ** float(x))
                raise ValueError(f"negative base {b} under an even root")
            return b ** float(x)
        if isinstance(node, Exp):
            return math.exp(ev(node.arg))
        if isinstance(node, Ln):
            return math.log(ev(node.arg))
        if isinstance(node, Sin):
            return math.sin(ev(node.arg))
        if isinstance(node, Cos):
            return math.cos(ev(node.arg))
        raise ExprError(f"unknown node {node!r}")

    return ev(e)


def evaluate_exact(e: Expr, env: Mapping[str, Fraction]) -> Fraction:
    """Exact rational evaluation; defined only for polynomial-style nodes
    plus Div and integer/exactly-rooted powers."""
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Var):
        return Fraction(env[e.name])
    if isinstance(e, Add):
        return evaluate_exact(e.lhs, env) + evaluate_exact(e.rhs, env)
    if isinstance(e, Sub):
        return evaluate_exact(e.lhs, env) - evaluate_exact(e.rhs, env)
    if isinstance(e, Mul):
        return evaluate_exact(e.lhs, env) * evaluate_exact(e.rhs, env)
    if isinstance(e, Div):
        return evaluate_exact(e.lhs, env) / evaluate_exact(e.rhs, env)
    if isinstance(e, Pow):
        base = evaluate_exact(e.base, env)
        if e.exponent.denominator == 1:
            return base ** int(e.exponent)
        root = _exact_root(base, e.exponent.denominator)
        if root is None:
            raise ExprError(f"{base} has no exact {e.exponent.denominator}-th root")
        return root ** e.exponent.numerator
    raise ExprError(f"cannot evaluate {type(e).__name__} exactly")


# --- printing ---------------------------------------------------------------

_LEVEL_ADD = 1
_LEVEL_MUL = 2
_LEVEL_NEG = 3
_LEVEL_POW = 4
_LEVEL_ATOM = 5


def format_fraction(value: Fraction) -> str:
    """Exact textual form: integers bare, ten-power denominators as decimals,
    everything else as p/q."""
    if value.denominator == 1:
        return str(value.numerator)
    scaled = value * 10**12
    if scaled.denominator == 1:
        digits = f"{abs(scaled.numerator):013d}"
        head, tail = digits[:-12], digits[-12:].rstrip("0")
        sign = "-" if value < 0 else ""
        return f"{sign}{head}.{tail}"
    return f"{value.numerator}/{value.denominator}"


def _exp_str(x: Fraction) -> str:
    if x.denominator == 1 and x >= 0:
        return str(x.numerator)
    if x.denominator == 1:
        return f"({x.numerator})"
    return f"({x.numerator}/{x.denominator})"


def to_string(e: Expr) -> str:
    """Deterministic printer; `parse(to_string(e))` reproduces e structurally."""

    def render(node: Expr) -> tuple[str, int]:
        if isinstance(node, Constant):
            text = format_fraction(node.value)
            if "/" in text:
                return text, _LEVEL_MUL  # prints like a division
            if node.value < 0:
                return text, _LEVEL_NEG
            return text, _LEVEL_ATOM
        if isinstance(node, Var):
            return node.name, _LEVEL_ATOM
        if isinstance(node, Add):
            a, _ = wrap(node.lhs, _LEVEL_ADD)
            b, _ = wrap(node.rhs, _LEVEL_ADD + 1)
            return f"{a} + {b}", _LEVEL_ADD
        if isinstance(node, Sub):
            a, _ = wrap(node.lhs, _LEVEL_ADD)
            b, _ = wrap(node.rhs, _LEVEL_ADD + 1)
            return f"{a} - {b}", _LEVEL_ADD
        if isinstance(node, Mul):
            if isinstance(node.lhs, Constant) and node.lhs.value == -1:
                inner, _ = wrap(node.rhs, _LEVEL_NEG)
                return f"-{inner}", _LEVEL_NEG
            a, _ = wrap(node.lhs, _LEVEL_MUL)
            b, _ = wrap(node.rhs, _LEVEL_MUL + 1)
            return f"{a}*{b}", _LEVEL_MUL
        if isinstance(node, Div):
            a, _ = wrap(node.lhs, _LEVEL_MUL)
            b, _ = wrap(node.rhs, _LEVEL_MUL + 1)
            return f"{a}/{b}", _LEVEL_MUL
        if isinstance(node, Pow):
            a, _ = wrap(node.base, _LEVEL_ATOM)
            return f"{a}^{_exp_str(node.exponent)}", _LEVEL_POW
        if isinstance(node, Exp):
            return f"exp({to_string(node.arg)})", _LEVEL_ATOM
        if isinstance(node, Ln):
            return f"ln({to_string(node.arg)})", _LEVEL_ATOM
        if isinstance(node, Sin):
            return f"sin({to_string(node.arg)})", _LEVEL_ATOM
        if isinstance(node, Cos):
            return f"cos({to_string(node.arg)})", _LEVEL_ATOM
        raise ExprError(f"unknown node {node!r}")

    def wrap(node: Expr, min_level: int) -> tuple[str, int]:
        text, level = render(node)
        if level < min_level:
            return f"({text})", _LEVEL_ATOM
        return text, level

    return render(e)[0]
