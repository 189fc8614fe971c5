import random
from fractions import Fraction

import pytest

from polyrecast import expr as ex
from polyrecast.normalform import canonical, exprs_equal
from polyrecast.parser import parse
from polyrecast.poly import to_canonical_poly
from polyrecast.recast import (
    OdeSystem,
    ReplacementLedger,
    SimulationMap,
    close_ledger,
    lie_derivative,
    simulation_condition_check,
    trans_eodes,
    vt,
)
from conftest import random_expr


def match_ledger(ledger, expected: dict[str, str]) -> dict[str, str]:
    """Map our fresh names onto expected names by definition; asserts the
    definition sets agree."""
    by_def = {canonical(parse(d)): name for name, d in expected.items()}
    mapping = {}
    for entry in ledger:
        key = canonical(entry.definition)
        assert key in by_def, f"unexpected ledger entry {entry}"
        mapping[entry.name] = by_def.pop(key)
    assert not by_def, f"missing ledger entries for {sorted(by_def.values())}"
    return mapping


def assert_system_matches(system: OdeSystem, mapping: dict[str, str], expected_rhs: dict[str, str]):
    """Compare right-hand sides after renaming fresh variables and
    canonicalizing both sides as polynomials."""
    rename = {old: ex.Var(new) for old, new in mapping.items()}
    target_vars = sorted(set(expected_rhs) | {mapping.get(v, v) for v in system.variables})
    for var in system.variables:
        renamed = ex.substitute(system.rhs[var], rename)
        ours = to_canonical_poly(renamed, target_vars)
        theirs = to_canonical_poly(parse(expected_rhs[mapping.get(var, var)]), target_vars)
        assert ours == theirs, f"{var}: {renamed!r} != {expected_rhs[mapping.get(var, var)]}"


class TestVt:
    def test_exponential_single_entry(self):
        ledger = ReplacementLedger(reserved={"x"})
        out, ledger = vt(parse("e^(x)"), ledger)
        assert out == ex.Var("v1")
        assert len(ledger) == 1
        assert ledger.entries[0].definition == ex.Exp(ex.Var("x"))

    def test_polynomial_unchanged(self):
        ledger = ReplacementLedger(reserved={"x"})
        e = parse("x^2 + 3")
        out, ledger = vt(e, ledger)
        assert out == e
        assert len(ledger) == 0

    def test_composition_inner_first(self):
        ledger = ReplacementLedger(reserved={"x"})
        out, ledger = vt(parse("ln(2+sin(x))"), ledger)
        defs = [entry.definition for entry in ledger]
        assert ex.Sin(ex.Var("x")) in defs
        assert canonical(parse("ln(2+sin(x))")) in defs
        # the outer replacement is what the expression reduces to
        outer = ledger.entries[defs.index(canonical(parse("ln(2+sin(x))")))].name
        assert out == ex.Var(outer)

    def test_repeated_subterms_share_one_variable(self):
        ledger = ReplacementLedger(reserved={"x"})
        out, ledger = vt(parse("sin(x)*sin(x) + e^(sin(x))"), ledger)
        defs = [entry.definition for entry in ledger]
        assert defs.count(ex.Sin(ex.Var("x"))) == 1
        assert len(ledger) == 2  # sin(x) and e^(sin(x))

    def test_pointwise_equality_where_definitions_hold(self, rng):
        # vt output with fresh variables bound to their definitions equals
        # the input (200 expressions, 20 points each)
        checked = 0
        attempts = 0
        while checked < 200 and attempts < 2000:
            attempts += 1
            e = random_expr(rng, ["x", "y"], depth=4)
            ledger = ReplacementLedger(reserved={"x", "y"})
            try:
                out, ledger = vt(e, ledger)
            except Exception:
                continue
            assert ex.is_polynomial(out)
            good_points = 0
            for _ in range(20):
                env = {"x": rng.uniform(0.3, 1.8), "y": rng.uniform(0.3, 1.8)}
                try:
                    expected = ex.evaluate(e, env)
                    full_env = dict(env)
                    for entry in ledger:
                        full_env[entry.name] = ex.evaluate(entry.definition, env)
                    got = ex.evaluate(out, full_env)
                except (ValueError, ZeroDivisionError, OverflowError):
                    continue
                if abs(expected) > 1e12:
                    continue
                assert abs(got - expected) <= 1e-12 * (1 + abs(expected)), ex.to_string(e)
                good_points += 1
            if good_points:
                checked += 1
        assert checked == 200


class TestCloseLedger:
    def test_reciprocal(self):
        ledger = ReplacementLedger(reserved={"x"})
        ledger.ensure(parse("1/x"))
        odes = OdeSystem(["x"], {"x": ex.Var("v1")})
        closed, ledger = close_ledger(odes, ledger)
        assert to_canonical_poly(closed.rhs["v1"], ["x", "v1"]) == to_canonical_poly(
            parse("-v1^3"), ["x", "v1"]
        )
        assert len(ledger) == 1

    def test_logarithm_adds_reciprocal(self):
        ledger = ReplacementLedger(reserved={"x"})
        ledger.ensure(parse("ln(x)"))
        odes = OdeSystem(["x"], {"x": ex.Var("v1")})
        closed, ledger = close_ledger(odes, ledger)
        mapping = match_ledger(ledger, {"v": "ln(x)", "u": "1/x"})
        assert_system_matches(closed, mapping, {"x": "v", "v": "u*v", "u": "-u^2*v"})

    def test_square_root_cancels(self):
        ledger = ReplacementLedger(reserved={"x"})
        ledger.ensure(parse("sqrt(x)"))
        odes = OdeSystem(["x"], {"x": ex.Var("v1")})
        closed, ledger = close_ledger(odes, ledger)
        assert closed.rhs["v1"] == ex.Constant(Fraction(1, 2))
        assert len(ledger) == 1


class TestTransEodes:
    def test_planar_transcendental_field(self):
        # two-dimensional field with exp and sin lifts to the expected
        # five-dimensional polynomial field
        sys0 = OdeSystem(
            ["x", "y"],
            {"x": parse("e^(-x) + y - 1"), "y": parse("-sin(x)^2")},
        )
        poly, ledger, theta = trans_eodes(sys0)
        assert poly.is_polynomial()
        assert len(poly.variables) == 5
        mapping = match_ledger(
            ledger, {"w1": "sin(x)", "w2": "e^(-x)", "w3": "cos(x)"}
        )
        assert_system_matches(
            poly,
            mapping,
            {
                "x": "w2 + y - 1",
                "y": "-w1^2",
                "w1": "w3*(w2 + y - 1)",
                "w2": "-w2*(w2 + y - 1)",
                "w3": "-w1*(w2 + y - 1)",
            },
        )

    def test_polynomial_input_unchanged(self):
        sys0 = OdeSystem(["x", "y"], {"x": parse("y"), "y": parse("-x + x^3")})
        poly, ledger, theta = trans_eodes(sys0)
        assert poly.rhs == sys0.rhs
        assert len(ledger) == 0
        assert theta.fresh == []
        assert theta.components == [ex.Var("x"), ex.Var("y")]

    def test_hiv_style_shared_reciprocal(self):
        # one reciprocal of the total population serves both components
        f1 = parse("-2*u1*u2/(u1+u2+u3) - 0.008*u1")
        f2 = parse("2*u1*u2/(u1+u2+u3) - 0.108*u2")
        f3 = parse("0.1*u2 - 0.95*u3")
        sys0 = OdeSystem(["u1", "u2", "u3"], {"u1": f1, "u2": f2, "u3": f3})
        poly, ledger, theta = trans_eodes(sys0)
        assert len(ledger) == 1
        assert len(poly.variables) == 4
        report = simulation_condition_check(sys0, poly, theta)
        assert report.ok, report.lines()

    def test_fresh_names_first_encounter_order(self):
        sys0 = OdeSystem(
            ["x", "y"],
            {"x": parse("e^(-x) + y - 1"), "y": parse("-sin(x)^2")},
        )
        _, ledger, _ = trans_eodes(sys0)
        assert ledger.names() == ["v1", "v2", "v3"]
        assert ledger.entries[0].definition == ex.Exp(ex.neg(ex.Var("x")))

    def test_deterministic_output(self):
        sys0 = OdeSystem(
            ["x", "y"],
            {"x": parse("e^(-x) + y - 1"), "y": parse("-sin(x)^2")},
        )
        a, la, _ = trans_eodes(sys0)
        b, lb, _ = trans_eodes(sys0)
        assert [ex.to_string(a.rhs[v]) for v in a.variables] == [
            ex.to_string(b.rhs[v]) for v in b.variables
        ]
        assert [str(e) for e in la] == [str(e) for e in lb]


class TestLieDerivative:
    def test_cosine_along_simple_field(self):
        odes = OdeSystem(["x"], {"x": ex.Var("vx")})
        out = lie_derivative(parse("cos(x)"), odes)
        equal, _ = exprs_equal(out, parse("-sin(x)*vx"))
        assert equal

    def test_constant_is_zero(self):
        odes = OdeSystem(["x"], {"x": parse("x^2")})
        assert lie_derivative(ex.Constant(5), odes) == ex.ZERO

    def test_squared_cosine_reciprocal(self):
        odes = OdeSystem(["x"], {"x": ex.Var("vx")})
        out = lie_derivative(parse("1/(1+cos(x)^2)"), odes)
        expected = parse("2*sin(x)*cos(x)*vx/(1+cos(x)^2)^2")
        equal, residual = exprs_equal(out, expected)
        assert equal, ex.to_string(residual)


class TestSimulationCheck:
    def _planar(self):
        sys0 = OdeSystem(
            ["x", "y"],
            {"x": parse("e^(-x) + y - 1"), "y": parse("-sin(x)^2")},
        )
        return (sys0, *trans_eodes(sys0))

    def test_planar_all_components_pass(self):
        sys0, poly, ledger, theta = self._planar()
        report = simulation_condition_check(sys0, poly, theta)
        assert report.ok
        assert len(report.components) == 5

    def test_identity_map_trivially_passes(self):
        sys0 = OdeSystem(["x"], {"x": parse("x^2 - x")})
        theta = SimulationMap(["x"], [], [])
        report = simulation_condition_check(sys0, sys0, theta)
        assert report.ok

    def test_sign_flip_fails_with_residual(self):
        sys0, poly, ledger, theta = self._planar()
        corrupted_rhs = dict(poly.rhs)
        victim = ledger.names()[1]
        corrupted_rhs[victim] = ex.neg(corrupted_rhs[victim])
        corrupted = OdeSystem(poly.variables, corrupted_rhs, poly.conditions)
        report = simulation_condition_check(sys0, corrupted, theta)
        assert not report.ok
        (failure,) = report.failures()
        assert failure.variable == victim
        assert failure.residual is not None


class TestLedgerBound:
    def test_bound_on_univariate_cases(self):
        for f, count in [
            ("1/x", 1),
            ("sqrt(x)", 1),
            ("e^(x)", 1),
            ("ln(x)", 1),
            ("sin(x)", 1),
            ("cos(x)", 1),
        ]:
            sys0 = OdeSystem(["x"], {"x": parse(f)})
            _, ledger, _ = trans_eodes(sys0)
            assert len(ledger) <= 3 * count

    def test_bound_random_systems(self, rng):
        produced = 0
        attempts = 0
        while produced < 120 and attempts < 1200:
            attempts += 1
            n = rng.choice([1, 2])
            variables = ["x", "y"][:n]
            rhs = {v: random_expr(rng, variables, depth=3) for v in variables}
            sys0 = OdeSystem(variables, rhs)
            try:
                poly, ledger, theta = trans_eodes(sys0)
            except Exception:
                continue
            nonpoly = ex.count_nonpoly_subterms(sys0.field())
            assert len(ledger) <= 3 * nonpoly, [str(e) for e in ledger]
            assert poly.is_polynomial()
            produced += 1
        assert produced == 120
