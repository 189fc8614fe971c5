import random
from fractions import Fraction

import pytest

from polyrecast import expr as ex


def random_expr(rng: random.Random, variables, depth: int, allow_transcendental=True) -> ex.Expr:
    """Random elementary expression from the grammar, depth-bounded.

    Exponents are drawn from a small rational set; constants are small
    rationals.  Leaned toward shapes the rewrite engine has to work for.
    """
    if depth <= 0:
        if rng.random() < 0.5:
            return ex.Var(rng.choice(variables))
        return ex.Constant(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
    kinds = ["add", "sub", "mul", "pow", "var", "const"]
    if allow_transcendental:
        kinds += ["div", "exp", "ln", "sin", "cos", "root"]
    kind = rng.choice(kinds)
    sub = lambda: random_expr(rng, variables, depth - 1, allow_transcendental)
    if kind == "var":
        return ex.Var(rng.choice(variables))
    if kind == "const":
        return ex.Constant(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
    if kind == "add":
        return ex.add(sub(), sub())
    if kind == "sub":
        return ex.sub(sub(), sub())
    if kind == "mul":
        return ex.mul(sub(), sub())
    if kind == "div":
        return ex.div(sub(), _nonzero(rng, variables, depth - 1, allow_transcendental))
    if kind == "pow":
        exponent = rng.choice([2, 3, Fraction(-1), Fraction(-2)])
        base = _nonzero(rng, variables, depth - 1, allow_transcendental) if exponent < 0 else sub()
        return ex.pow_(base, exponent)
    if kind == "root":
        return ex.pow_(
            _nonzero(rng, variables, depth - 1, allow_transcendental),
            rng.choice([Fraction(1, 2), Fraction(1, 3), Fraction(3, 2)]),
        )
    if kind == "exp":
        return ex.exp(sub())
    if kind == "ln":
        return ex.ln(_positive_arg(rng, variables, depth - 1, allow_transcendental))
    if kind == "sin":
        return ex.sin(sub())
    return ex.cos(sub())


def _nonzero(rng, variables, depth, allow_transcendental):
    e = random_expr(rng, variables, depth, allow_transcendental)
    if isinstance(e, ex.Constant) and e.value == 0:
        return ex.ONE
    return e


def _positive_arg(rng, variables, depth, allow_transcendental):
    # shapes that keep ln arguments positive on reasonable boxes
    inner = random_expr(rng, variables, max(depth - 1, 0), allow_transcendental)
    return ex.add(ex.mul(inner, inner) if rng.random() < 0.5 else ex.cos(inner), Fraction(3, 2))


@pytest.fixture
def rng():
    return random.Random(20240817)
