import math
import random
from fractions import Fraction

import pytest

from polyrecast import expr as ex
from polyrecast.errors import DomainViolation
from polyrecast.intervals import INF, Interval, interval_eval
from polyrecast.parser import parse
from conftest import random_expr


class TestIntervalBasics:
    def test_sine_range_subset_of_unit(self):
        for lo, hi in [(-10, 10), (0, 1), (-2, 2), (100, 200)]:
            out = interval_eval(parse("sin(x)"), {"x": Interval(lo, hi)})
            assert -1 <= out.lo and out.hi <= 1

    def test_exp_over_reals_positive(self):
        out = interval_eval(parse("e^(x)"), {"x": Interval.reals()})
        assert out.lo == 0 and out.open_lo
        assert out.hi == INF

    def test_squared_cosine_reciprocal_range(self):
        out = interval_eval(parse("1/(1+cos(x)^2)"), {"x": Interval(-10, 10)})
        assert out.lo == Fraction(1, 2) and out.hi == Fraction(1)
        # dense sampling stays inside
        for i in range(100_000):
            x = -10 + 20 * i / 99_999
            v = 1 / (1 + math.cos(x) ** 2)
            assert out.lo <= v <= out.hi

    def test_division_by_zero_interval(self):
        with pytest.raises(DomainViolation):
            interval_eval(parse("1/x"), {"x": Interval(-1, 1)})
        out = interval_eval(parse("1/x"), {"x": Interval(-1, 1)}, allow_unbounded=True)
        assert out.lo == -INF and out.hi == INF

    def test_ln_domain_violation_names_subterm(self):
        with pytest.raises(DomainViolation) as err:
            interval_eval(parse("ln(x)"), {"x": Interval(-1, 1)})
        assert "ln(x)" in str(err.value)

    def test_even_power_straddling_zero(self):
        out = interval_eval(parse("x^2"), {"x": Interval(-3, 2)})
        assert out.lo == 0 and out.hi == 9

    def test_exact_rational_arithmetic_kept(self):
        out = interval_eval(parse("(x + 1)*(x - 1)"), {"x": Interval(0, 2)})
        assert isinstance(out.lo, Fraction) and isinstance(out.hi, Fraction)

    def test_sqrt_negative_domain(self):
        with pytest.raises(DomainViolation):
            interval_eval(parse("sqrt(x)"), {"x": Interval(-1, 4)})


class TestInclusionMonotone:
    def test_nested_boxes(self, rng):
        for _ in range(60):
            e = random_expr(rng, ["x", "y"], depth=3)
            lo1 = rng.uniform(0.3, 0.8)
            hi1 = lo1 + rng.uniform(0.05, 0.4)
            inner = {"x": Interval(Fraction(str(round(lo1, 3))), Fraction(str(round(hi1, 3)))),
                     "y": Interval(Fraction(1, 2), Fraction(3, 4))}
            outer = {"x": Interval(Fraction(1, 4), Fraction(5, 2)),
                     "y": Interval(Fraction(1, 4), Fraction(1))}
            try:
                small = interval_eval(e, inner)
                big = interval_eval(e, outer)
            except DomainViolation:
                continue
            assert big.lo <= small.lo + 1e-12 and small.hi <= big.hi + 1e-12

    def test_containment_of_point_evaluations(self, rng):
        for _ in range(80):
            e = random_expr(rng, ["x"], depth=3)
            box = Interval(Fraction(1, 2), Fraction(3, 2))
            try:
                bound = interval_eval(e, {"x": box})
            except DomainViolation:
                continue
            for _ in range(50):
                x = rng.uniform(0.5, 1.5)
                try:
                    v = ex.evaluate(e, {"x": x})
                except (ValueError, ZeroDivisionError, OverflowError):
                    continue
                assert float(bound.lo) - 1e-9 <= v <= float(bound.hi) + 1e-9, ex.to_string(e)
