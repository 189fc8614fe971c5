"""Recasting elementary ODE systems as polynomial ones.

Every non-polynomial term gamma(x) in a system is replaced by a fresh
variable v recorded in a replacement ledger; differentiating v = gamma(x)
along the field closes the system, so the recast ODE is polynomial in the
extended state (x, v) and the map x -> (x, Gamma(x)) sends trajectories to
trajectories.  `simulation_condition_check` verifies that property
symbolically through the Jacobian identity, with exact arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from . import expr as ex
from .errors import NotPolynomial, UncomparableResidual
from .normalform import NF, canonical, merge_term, nf_add, normalize, nf_to_expr, exprs_equal
from .predicates import Atom, GE, GT, NE

_ONE = Fraction(1)


class LedgerEntry:
    __slots__ = ("name", "definition")

    def __init__(self, name: str, definition: ex.Expr):
        self.name = name
        self.definition = definition

    def __repr__(self):
        return f"{self.name} = {ex.to_string(self.definition)}"

    def __eq__(self, other):
        return (
            isinstance(other, LedgerEntry)
            and self.name == other.name
            and self.definition == other.definition
        )

    def __hash__(self):
        return hash((self.name, self.definition))


class ReplacementLedger:
    """Ordered fresh-variable definitions v_i = gamma_i(x).

    Definitions are fully resolved (they mention original variables only)
    and canonical, so structurally identical subterms share one entry.
    Side conditions that keep the definitions well defined (denominators
    nonzero, log arguments positive, even roots non-negative) accumulate
    in `conditions`.
    """

    def __init__(self, reserved: Iterable[str] = (), prefix: str = "v"):
        self.entries: list[LedgerEntry] = []
        self.memo: dict[ex.Expr, str] = {}
        self.roots: dict[ex.Expr, dict[int, str]] = {}
        self.reserved: set[str] = set(reserved)
        self.prefix = prefix
        self.conditions: list[Atom] = []
        self._counter = 0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def definitions(self) -> dict[str, ex.Expr]:
        return {e.name: e.definition for e in self.entries}

    def copy(self) -> "ReplacementLedger":
        dup = ReplacementLedger(self.reserved, self.prefix)
        dup.entries = list(self.entries)
        dup.memo = dict(self.memo)
        dup.roots = {k: dict(v) for k, v in self.roots.items()}
        dup.conditions = list(self.conditions)
        dup._counter = self._counter
        return dup

    def _fresh_name(self) -> str:
        while True:
            self._counter += 1
            name = f"{self.prefix}{self._counter}"
            if name not in self.reserved:
                self.reserved.add(name)
                return name

    def _add_condition(self, atom: Atom) -> None:
        if atom not in self.conditions:
            self.conditions.append(atom)

    def resolve(self, e: ex.Expr) -> ex.Expr:
        """Substitute fresh variables by their definitions; the result
        mentions original variables only."""
        bindings = {k: v for k, v in self.definitions().items() if k in ex.free_vars(e)}
        return ex.substitute(e, bindings) if bindings else e

    def ensure(self, definition: ex.Expr) -> str:
        """Entry for a (resolved, non-polynomial) definition, minting one
        fresh variable per canonical form."""
        key = canonical(definition)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        name = self._fresh_name()
        self.entries.append(LedgerEntry(name, key))
        self.memo[key] = name
        if (
            isinstance(key, ex.Pow)
            and key.exponent.numerator == 1
            and key.exponent.denominator > 1
        ):
            base = canonical(key.base)
            self.roots.setdefault(base, {})[key.exponent.denominator] = name
        self._record_conditions(name, key)
        return name

    def ensure_root(self, base: ex.Expr, q: int) -> tuple[str, int]:
        """Entry v = base^(1/m) usable for exponents with denominator q,
        reusing a compatible existing root order or minting the lcm order.
        Returns (name, m); base^(p/q) is then v^(p*m/q)."""
        from math import lcm

        key = canonical(base)
        orders = self.roots.setdefault(key, {})
        for m in sorted(orders):
            if m % q == 0:
                return orders[m], m
        m = q
        for existing in orders:
            m = lcm(m, existing)
        name = self.ensure(ex.pow_(key, Fraction(1, m)))
        return name, m

    def _record_conditions(self, name: str, definition: ex.Expr) -> None:
        if isinstance(definition, ex.Div):
            self._add_condition(Atom(definition.rhs, NE))
        elif isinstance(definition, ex.Ln):
            self._add_condition(Atom(definition.arg, GT))
        elif isinstance(definition, ex.Pow) and definition.exponent.denominator > 1:
            if definition.exponent.denominator % 2 == 0:
                self._add_condition(Atom(definition.base, GE))
                self._add_condition(Atom(ex.Var(name), GE))


class OdeSystem:
    """First-order autonomous ODEs: one right-hand side per variable, plus
    the open-domain side conditions collected from the expressions."""

    def __init__(
        self,
        variables: Iterable[str],
        rhs: Mapping[str, ex.Expr],
        conditions: Iterable[Atom] | None = None,
    ):
        self.variables = list(variables)
        self.rhs = dict(rhs)
        missing = [v for v in self.variables if v not in self.rhs]
        if missing:
            raise NotPolynomial(f"missing right-hand sides for {missing}")
        if conditions is None:
            conds: list[Atom] = []
            for v in self.variables:
                _scan_conditions(self.rhs[v], conds)
            self.conditions = conds
        else:
            self.conditions = list(conditions)

    def field(self) -> list[ex.Expr]:
        return [self.rhs[v] for v in self.variables]

    def is_polynomial(self) -> bool:
        return all(ex.is_polynomial(self.rhs[v]) for v in self.variables)

    def __eq__(self, other):
        return (
            isinstance(other, OdeSystem)
            and self.variables == other.variables
            and self.rhs == other.rhs
        )

    def __repr__(self):
        lines = [f"{v}' = {ex.to_string(self.rhs[v])}" for v in self.variables]
        return "\n".join(lines)


def _scan_conditions(e: ex.Expr, out: list[Atom]) -> None:
    for t in ex.subterms(e):
        atom = None
        if isinstance(t, ex.Div):
            atom = Atom(t.rhs, NE)
        elif isinstance(t, ex.Ln):
            atom = Atom(t.arg, GT)
        elif isinstance(t, ex.Pow):
            if t.exponent.denominator > 1 and t.exponent.denominator % 2 == 0:
                atom = Atom(t.base, GE)
            elif t.exponent < 0:
                atom = Atom(t.base, NE)
        if atom is not None and atom not in out:
            out.append(atom)


class SimulationMap:
    """x -> (x, Gamma(x)): identity on the original variables followed by
    the ledger definitions, in ledger order."""

    def __init__(self, originals: Iterable[str], fresh: Iterable[str], definitions: Iterable[ex.Expr]):
        self.originals = list(originals)
        self.fresh = list(fresh)
        self.definitions = list(definitions)
        if len(self.fresh) != len(self.definitions):
            raise NotPolynomial("one definition per fresh variable")

    @property
    def targets(self) -> list[str]:
        return self.originals + self.fresh

    @property
    def components(self) -> list[ex.Expr]:
        return [ex.Var(v) for v in self.originals] + self.definitions

    def as_substitution(self) -> dict[str, ex.Expr]:
        return dict(zip(self.fresh, self.definitions))

    def evaluate(self, point: Mapping[str, float]) -> dict[str, float]:
        out = {v: float(point[v]) for v in self.originals}
        for name, definition in zip(self.fresh, self.definitions):
            out[name] = ex.evaluate(definition, point)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, SimulationMap)
            and self.originals == other.originals
            and self.fresh == other.fresh
            and self.definitions == other.definitions
        )

    def __repr__(self):
        parts = [*self.originals]
        parts += [f"{ex.to_string(d)}" for d in self.definitions]
        return "(" + ", ".join(parts) + ")"


# --- vt: reduce one expression to polynomial form ----------------------------


def vt(e: ex.Expr, ledger: ReplacementLedger) -> tuple[ex.Expr, ReplacementLedger]:
    """Replace the non-polynomial subterms of e by fresh variables,
    innermost first.  The result is polynomial over the original variables
    plus the ledger's fresh variables and equals e wherever the ledger
    definitions hold."""
    out = _vt(e, ledger)
    return out, ledger


def _vt(e: ex.Expr, ledger: ReplacementLedger) -> ex.Expr:
    if ex.is_polynomial(e):
        return e
    if isinstance(e, ex.Add):
        return ex.add(_vt(e.lhs, ledger), _vt(e.rhs, ledger))
    if isinstance(e, ex.Sub):
        return ex.sub(_vt(e.lhs, ledger), _vt(e.rhs, ledger))
    if isinstance(e, ex.Mul):
        return ex.mul(_vt(e.lhs, ledger), _vt(e.rhs, ledger))
    if isinstance(e, ex.Div):
        # inner replacements first, then the reciprocal through the shared
        # factor pathway so canonical forms agree with the closure's
        num = ledger.resolve(_vt(e.lhs, ledger))
        den = ledger.resolve(_vt(e.rhs, ledger))
        return _polynomialize_nf(normalize(ex.div(num, den)), ledger)
    if isinstance(e, ex.Pow):
        exponent = e.exponent
        if exponent.denominator == 1 and exponent >= 0:
            return ex.pow_(_vt(e.base, ledger), exponent)
        base = ledger.resolve(_vt(e.base, ledger))
        return _polynomialize_nf(normalize(ex.pow_(base, exponent)), ledger)
    if isinstance(e, (ex.Exp, ex.Ln, ex.Sin, ex.Cos)):
        arg = _vt(e.arg, ledger)
        node = type(e)(ledger.resolve(arg))
        return ex.Var(ledger.ensure(node))
    raise NotPolynomial(f"cannot reduce {e!r}")


# --- closing the ledger under differentiation --------------------------------


def _polynomialize_nf(nf: NF, ledger: ReplacementLedger) -> ex.Expr:
    """Rewrite a power-product normal form (over original variables) into a
    polynomial expression over originals + fresh variables, minting ledger
    entries for surviving non-polynomial factors."""
    out: NF = {}
    for factors, coeff in sorted(nf.items(), key=lambda kv: _sort_key(kv[0])):
        acc: dict[ex.Expr, Fraction] = {}
        for base, exponent in factors:
            rebased, rexp = _rewrite_factor(base, exponent, ledger)
            acc[rebased] = acc.get(rebased, Fraction(0)) + rexp
        merge_term(out, acc, coeff)
    return nf_to_expr(out)


def _sort_key(factors):
    return tuple((ex.to_string(b), e) for b, e in factors)


def _rewrite_factor(
    base: ex.Expr, exponent: Fraction, ledger: ReplacementLedger
) -> tuple[ex.Expr, Fraction]:
    """One base^exponent factor -> (polynomial base, non-negative exponent)."""
    if isinstance(base, ex.Constant):
        if exponent.denominator == 1 and exponent >= 0:
            return base, exponent
        if exponent.denominator == 1:
            # exact reciprocal of a rational constant
            return ex.Constant(Fraction(1) / base.value), -exponent
        # irrational constant root: a fresh variable with zero derivative
        name = ledger.ensure(ex.pow_(base, Fraction(1, exponent.denominator)))
        return _rewrite_factor_resolved(ex.Var(name), Fraction(exponent.numerator), ledger)
    if not ex.is_polynomial(base):
        if isinstance(base, (ex.Exp, ex.Ln, ex.Sin, ex.Cos)):
            name = ledger.ensure(base)
            return _rewrite_factor(ex.Var(name), exponent, ledger)
        # compound base: replace its inner non-polynomial parts first
        replaced = _polynomialize_nf(normalize(base), ledger)
        if not ex.is_polynomial(replaced):
            raise NotPolynomial(f"cannot polynomialize base {base!r}")
        return _rewrite_factor_resolved(replaced, exponent, ledger)
    return _rewrite_factor_resolved(base, exponent, ledger)


def _rewrite_factor_resolved(
    base: ex.Expr, exponent: Fraction, ledger: ReplacementLedger
) -> tuple[ex.Expr, Fraction]:
    """base is polynomial over (x, fresh); flatten fractional and negative
    exponents through root and reciprocal entries."""
    if exponent.denominator > 1:
        resolved = ledger.resolve(base)
        probe = canonical(ex.pow_(resolved, Fraction(1, exponent.denominator)))
        if ex.is_polynomial(probe):
            # the root simplified away, e.g. (x^3)^(1/3)
            return _rewrite_factor_resolved(probe, Fraction(exponent.numerator), ledger)
        name, order = ledger.ensure_root(resolved, exponent.denominator)
        return _rewrite_factor_resolved(ex.Var(name), exponent * order, ledger)
    if exponent < 0:
        resolved = ledger.resolve(base)
        orders = ledger.roots.get(canonical(resolved))
        if orders:
            # an existing root of this base gives the reciprocal for free:
            # base^-k = (base^(1/m))^(-k m)
            m = min(orders)
            root_name = orders[m]
            recip = ledger.ensure(ex.div(ex.ONE, ledger.resolve(ex.Var(root_name))))
            return ex.Var(recip), -exponent * m
        recip = ledger.ensure(ex.div(ex.ONE, resolved))
        return ex.Var(recip), -exponent
    return base, exponent


def close_ledger(
    odes: OdeSystem, ledger: ReplacementLedger
) -> tuple[OdeSystem, ReplacementLedger]:
    """Append one polynomial equation v' per ledger entry, minting partner
    entries (cosine for sine, reciprocals for logs and roots) as the
    derivatives demand, until a fixed point."""
    original_vars = list(odes.variables)
    f_orig = {x: ledger.resolve(odes.rhs[x]) for x in original_vars}
    rhs = dict(odes.rhs)

    index = 0
    while index < len(ledger.entries):
        entry = ledger.entries[index]
        index += 1
        if entry.name in rhs:
            continue
        lie: NF = {}
        for x in original_vars:
            partial = ex.differentiate(entry.definition, x)
            if isinstance(partial, ex.Constant) and partial.value == 0:
                continue
            lie = nf_add(lie, normalize(ex.mul(partial, f_orig[x])))
        rhs[entry.name] = _polynomialize_nf(lie, ledger)

    variables = original_vars + [e.name for e in ledger.entries]
    conditions = list(odes.conditions)
    for atom in ledger.conditions:
        if atom not in conditions:
            conditions.append(atom)
    return OdeSystem(variables, rhs, conditions), ledger


def trans_eodes(
    odes: OdeSystem, reserved: Iterable[str] = (), prefix: str = "v"
) -> tuple[OdeSystem, ReplacementLedger, SimulationMap]:
    """Full recast of an elementary ODE system: replace non-polynomial
    terms in the field, close under differentiation, and return the
    polynomial system over (x, v) together with the replacement ledger and
    the simulation map."""
    ledger = ReplacementLedger(reserved=set(odes.variables) | set(reserved), prefix=prefix)
    replaced = {x: _vt(odes.rhs[x], ledger) for x in odes.variables}
    base = OdeSystem(odes.variables, replaced, odes.conditions)
    closed, ledger = close_ledger(base, ledger)
    theta = SimulationMap(odes.variables, ledger.names(), [e.definition for e in ledger.entries])
    return closed, ledger, theta


def lie_derivative(gamma: ex.Expr, odes: OdeSystem) -> ex.Expr:
    """Directional derivative of gamma along the field, symbolically."""
    total: ex.Expr = ex.ZERO
    for v in odes.variables:
        partial = ex.differentiate(gamma, v)
        if isinstance(partial, ex.Constant) and partial.value == 0:
            continue
        total = ex.add(total, ex.mul(partial, odes.rhs[v]))
    return total


# --- the Jacobian identity ----------------------------------------------------


class ComponentCheck:
    __slots__ = ("variable", "status", "residual", "message")

    def __init__(self, variable: str, status: str, residual: ex.Expr | None, message: str = ""):
        self.variable = variable
        self.status = status  # "pass" | "fail" | "uncomparable"
        self.residual = residual
        self.message = message

    def __repr__(self):
        if self.status == "pass":
            return f"{self.variable}: pass"
        res = "" if self.residual is None else f" residual {ex.to_string(self.residual)}"
        msg = f" ({self.message})" if self.message else ""
        return f"{self.variable}: {self.status}{res}{msg}"


class SimulationReport:
    def __init__(self, components: list[ComponentCheck]):
        self.components = components

    @property
    def ok(self) -> bool:
        return all(c.status == "pass" for c in self.components)

    def failures(self) -> list[ComponentCheck]:
        return [c for c in self.components if c.status != "pass"]

    def __repr__(self):
        status = "pass" if self.ok else "FAIL"
        return f"SimulationReport({status}, {len(self.components)} components)"

    def lines(self) -> list[str]:
        return [repr(c) for c in self.components]


def simulation_condition_check(
    original: OdeSystem, abstracted: OdeSystem, theta: SimulationMap
) -> SimulationReport:
    """Verify, component by component and with exact arithmetic, that
    substituting the simulation map into the abstracted field equals the
    map's Jacobian times the original field."""
    if not abstracted.is_polynomial():
        raise NotPolynomial("abstracted system must be polynomial")
    if theta.targets != abstracted.variables:
        raise NotPolynomial(
            f"map targets {theta.targets} do not match abstracted variables {abstracted.variables}"
        )
    substitution = dict(zip(abstracted.variables, theta.components))
    checks: list[ComponentCheck] = []
    for y_var, component in zip(abstracted.variables, theta.components):
        lhs = ex.substitute(abstracted.rhs[y_var], substitution)
        rhs: ex.Expr = ex.ZERO
        for x in original.variables:
            partial = ex.differentiate(component, x)
            if isinstance(partial, ex.Constant) and partial.value == 0:
                continue
            rhs = ex.add(rhs, ex.mul(partial, original.rhs[x]))
        try:
            equal, residual = exprs_equal(lhs, rhs)
        except UncomparableResidual as err:
            checks.append(ComponentCheck(y_var, "uncomparable", None, str(err)))
            continue
        checks.append(ComponentCheck(y_var, "pass" if equal else "fail", residual))
    return SimulationReport(checks)
