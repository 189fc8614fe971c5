"""Hybrid automata with elementary dynamics, and their polynomial
abstractions.

A hybrid system is a set of modes, each a continuous system (initial set,
vector field, domain), plus guarded transitions with resets.  The
abstraction replaces every non-polynomial term across all sites by fresh
variables from one shared ledger, closes each mode's field under
differentiation, maps every predicate through the replacement, and relaxes
each residual coupling v = gamma(x) with one of four strategies:

    exact   -- equivalent polynomial rewrite (reciprocals and roots)
    taylor  -- two-sided Taylor band with a rigorous remainder over a box
    range   -- interval range of gamma over a box
    drop    -- no constraint at all

in decreasing precision.  Every mode gets the same fresh dimension: a mode
that never mentions some fresh variable gives it derivative zero, maps it
to the constant zero, and leaves it unconstrained, which keeps the
per-mode simulation maps valid (re-checked symbolically).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from . import expr as ex
from .errors import (
    DomainViolation,
    NotPolynomial,
    StrategyInapplicable,
    UnsupportedConstruct,
    ValidationError,
)
from .intervals import INF, Interval, interval_eval
from .normalform import canonical, normalize
from .poly import from_expr
from .predicates import (
    EQ,
    GE,
    LE,
    Atom,
    Predicate,
    TRUE,
    conj,
    is_polynomial_pred,
    pred_vars,
)
from .recast import (
    OdeSystem,
    ReplacementLedger,
    SimulationMap,
    _polynomialize_nf,
    _vt,
    simulation_condition_check,
)
from .taylor import enclosure_to_predicate, taylor_enclose

EXACT, TAYLOR, RANGE, DROP = "exact", "taylor", "range", "drop"
_MODES = {EXACT, TAYLOR, RANGE, DROP}
_ALIASES = {"w1": EXACT, "w2": TAYLOR, "w3": RANGE, "w4": DROP}

SITE_KINDS = ("init", "domain", "guard", "reset", "unsafe")


class StrategyChoice:
    __slots__ = ("kind", "degree")

    def __init__(self, kind: str, degree: int | None = None):
        kind = _ALIASES.get(kind.lower(), kind.lower())
        if kind not in _MODES:
            raise ValidationError(f"unknown strategy {kind!r}")
        self.kind = kind
        self.degree = degree if degree is not None else 6

    def __repr__(self):
        return f"{self.kind}({self.degree})" if self.kind == TAYLOR else self.kind

    def __eq__(self, other):
        return (
            isinstance(other, StrategyChoice)
            and self.kind == other.kind
            and (self.kind != TAYLOR or self.degree == other.degree)
        )


class AbstractionStrategy:
    """Per-site strategy selection with the resolution order: explicit
    per-site choice, then per-site-kind default, then the global default
    (exact where an exact rewrite exists, else drop for init/unsafe/reset
    and range for domain/guard)."""

    def __init__(self):
        self.kind_defaults: dict[str, StrategyChoice] = {}
        self.site_overrides: dict[str, StrategyChoice] = {}
        self.boxes: dict[str, dict[str, Interval]] = {}

    def set_default(self, site_kind: str, choice: StrategyChoice) -> None:
        if site_kind not in SITE_KINDS:
            raise ValidationError(f"unknown site kind {site_kind!r}")
        self.kind_defaults[site_kind] = choice

    def set_site(self, site_id: str, choice: StrategyChoice) -> None:
        self.site_overrides[site_id] = choice

    def set_box(self, mode: str, var: str, interval: Interval) -> None:
        self.boxes.setdefault(mode, {})[var] = interval

    def resolve(self, site_kind: str, site_id: str, exact_possible: bool) -> tuple[StrategyChoice, bool]:
        """(choice, explicit): explicit selections must apply or it is an
        error; defaulted ones may fall back."""
        if site_id in self.site_overrides:
            return self.site_overrides[site_id], True
        if site_kind in self.kind_defaults:
            return self.kind_defaults[site_kind], False
        if exact_possible:
            return StrategyChoice(EXACT), False
        if site_kind in ("domain", "guard"):
            return StrategyChoice(RANGE), False
        return StrategyChoice(DROP), False


class Transition:
    """Discrete jump: guard over the source mode's state, resets as
    assignments (unassigned variables stay).  Abstracted systems may add a
    relational constraint over the post state and a set of entirely
    unconstrained post variables."""

    def __init__(
        self,
        source: str,
        target: str,
        guard: Predicate,
        reset: Mapping[str, ex.Expr] | None = None,
        constraint: Predicate = TRUE,
        free: Iterable[str] = (),
    ):
        self.source = source
        self.target = target
        self.guard = guard
        self.reset = dict(reset or {})
        self.constraint = constraint
        self.free = tuple(free)

    def __eq__(self, other):
        return (
            isinstance(other, Transition)
            and (self.source, self.target) == (other.source, other.target)
            and self.guard == other.guard
            and self.reset == other.reset
            and self.constraint == other.constraint
            and self.free == other.free
        )

    def __repr__(self):
        return f"Transition({self.source}->{self.target})"


class ContinuousSystem:
    def __init__(self, variables: Iterable[str], init: Predicate, field: OdeSystem, domain: Predicate):
        self.variables = list(variables)
        if field.variables != self.variables:
            raise ValidationError("field variables must match the system's variable list")
        for p, name in ((init, "init"), (domain, "domain")):
            extra = pred_vars(p) - set(self.variables)
            if extra:
                raise ValidationError(f"{name} mentions undeclared variables {sorted(extra)}")
        self.init = init
        self.field = field
        self.domain = domain

    def is_polynomial(self) -> bool:
        return (
            self.field.is_polynomial()
            and is_polynomial_pred(self.init)
            and is_polynomial_pred(self.domain)
        )

    def __eq__(self, other):
        return (
            isinstance(other, ContinuousSystem)
            and self.variables == other.variables
            and self.init == other.init
            and self.field == other.field
            and self.domain == other.domain
        )


class HybridSystem:
    def __init__(
        self,
        variables: Iterable[str],
        modes: Mapping[str, ContinuousSystem],
        transitions: Iterable[Transition] = (),
        name: str = "system",
    ):
        self.variables = list(variables)
        self.modes = dict(modes)
        self.transitions = list(transitions)
        self.name = name
        for q, cs in self.modes.items():
            if cs.variables != self.variables:
                raise ValidationError(f"mode {q!r} has a different variable list")
        for t in self.transitions:
            if t.source not in self.modes or t.target not in self.modes:
                raise ValidationError(f"transition {t!r} references undeclared modes")
            for target_var in t.reset:
                if target_var not in self.variables:
                    raise ValidationError(f"reset assigns undeclared variable {target_var!r}")

    @classmethod
    def single_mode(cls, cs: ContinuousSystem, mode: str = "m", name: str = "system") -> "HybridSystem":
        return cls(cs.variables, {mode: cs}, [], name=name)

    def mode_names(self) -> list[str]:
        return list(self.modes)

    def is_polynomial(self) -> bool:
        ok = all(cs.is_polynomial() for cs in self.modes.values())
        for t in self.transitions:
            ok = ok and is_polynomial_pred(t.guard) and is_polynomial_pred(t.constraint)
            ok = ok and all(ex.is_polynomial(r) for r in t.reset.values())
        return ok

    def __eq__(self, other):
        return (
            isinstance(other, HybridSystem)
            and self.variables == other.variables
            and self.modes == other.modes
            and self.transitions == other.transitions
        )


class AuditRecord:
    __slots__ = ("mode", "site", "entry", "requested", "applied", "note")

    def __init__(self, mode, site, entry, requested, applied, note=""):
        self.mode = mode
        self.site = site
        self.entry = entry
        self.requested = requested
        self.applied = applied
        self.note = note

    def __repr__(self):
        extra = f" ({self.note})" if self.note else ""
        return f"{self.mode}/{self.site}: {self.entry} via {self.applied}{extra}"


class AbstractionResult:
    """Polynomial abstraction plus everything needed to interpret it: the
    shared replacement ledger, one simulation map per mode, per-mode
    symbolic check reports, and the strategy audit trail."""

    def __init__(self, system, maps, ledger, referenced, audit, reports):
        self.system: HybridSystem = system
        self.maps: dict[str, SimulationMap] = maps
        self.ledger: ReplacementLedger = ledger
        self.referenced: dict[str, set[str]] = referenced
        self.audit: list[AuditRecord] = audit
        self.reports = reports

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports.values())

    def fresh_variables(self) -> list[str]:
        return self.ledger.names()

    def mode_map(self, mode: str) -> SimulationMap:
        return self.maps[mode]

    def __eq__(self, other):
        return (
            isinstance(other, AbstractionResult)
            and self.system == other.system
            and self.maps == other.maps
            and list(self.ledger) == list(other.ledger)
        )


# --- replacement of known definitions inside expressions ---------------------


def replace_known(e: ex.Expr, ledger: ReplacementLedger) -> ex.Expr:
    """Bottom-up replacement of ledger definitions occurring in e; no new
    entries are minted."""
    memo = ledger.memo

    def walk(node: ex.Expr) -> ex.Expr:
        if isinstance(node, (ex.Constant, ex.Var)):
            return node
        rebuilt: ex.Expr
        if isinstance(node, ex.Add):
            rebuilt = ex.add(walk(node.lhs), walk(node.rhs))
        elif isinstance(node, ex.Sub):
            rebuilt = ex.sub(walk(node.lhs), walk(node.rhs))
        elif isinstance(node, ex.Mul):
            rebuilt = ex.mul(walk(node.lhs), walk(node.rhs))
        elif isinstance(node, ex.Div):
            rebuilt = ex.div(walk(node.lhs), walk(node.rhs))
        elif isinstance(node, ex.Pow):
            rebuilt = ex.pow_(walk(node.base), node.exponent)
        else:
            rebuilt = type(node)(walk(node.arg))
        if not ex.is_polynomial(rebuilt):
            hit = memo.get(canonical(ledger.resolve(rebuilt)))
            if hit is not None:
                return ex.Var(hit)
        return rebuilt

    return walk(e)


# --- boxes from predicates -----------------------------------------------------


def derive_box(region: Predicate, variables: Iterable[str]) -> dict[str, Interval]:
    """Per-variable interval bounds read off conjunctions of atoms that are
    linear in a single variable.  Variables without bounds map to the reals
    (callers needing bounded boxes must supply them)."""
    bounds = {v: [-INF, INF] for v in variables}
    for atom in _conjunctive_atoms(region):
        names = ex.free_vars(atom.expr)
        if len(names) != 1:
            continue
        (name,) = names
        if name not in bounds:
            continue
        try:
            poly = from_expr(atom.expr, (name,))
        except NotPolynomial:
            continue
        if poly.degree() != 1:
            continue
        a = poly.coefficient((1,))
        b = poly.coefficient((0,))
        threshold = -b / a
        rel = atom.rel
        upper = (rel in (LE, "<")) if a > 0 else (rel in (GE, ">"))
        if rel == EQ:
            bounds[name][0] = max(bounds[name][0], threshold)
            bounds[name][1] = min(bounds[name][1], threshold)
        elif upper:
            bounds[name][1] = min(bounds[name][1], threshold)
        else:
            bounds[name][0] = max(bounds[name][0], threshold)
    out = {}
    for v, (lo, hi) in bounds.items():
        if lo > hi:
            raise DomainViolation(f"empty box for {v!r} from {region!r}")
        out[v] = Interval(lo, hi)
    return out


def _conjunctive_atoms(p: Predicate):
    from .predicates import And

    if isinstance(p, Atom):
        yield p
    elif isinstance(p, And):
        for q in p.parts:
            yield from _conjunctive_atoms(q)


# --- single replacement relaxation ---------------------------------------------


def _exact_rewrite_possible(definition: ex.Expr) -> bool:
    if isinstance(definition, ex.Div):
        return True
    if isinstance(definition, ex.Pow) and definition.exponent.denominator > 1:
        return definition.exponent.numerator == 1
    return False


def _relax_entry(
    name: str,
    definition: ex.Expr,
    choice: StrategyChoice,
    explicit: bool,
    box: Mapping[str, Interval],
    ledger: ReplacementLedger,
    post_vars: Mapping[str, ex.Expr] | None = None,
) -> tuple[Predicate, str, str]:
    """One v = gamma(x) coupling relaxed per the chosen strategy.

    Returns (predicate, applied_kind, note).  post_vars substitutes reset
    images when relaxing a jump's post-state coupling."""
    kind = choice.kind
    composed = definition if post_vars is None else ex.substitute(definition, dict(post_vars))
    v = ex.Var(name)

    if kind == DROP:
        return TRUE, DROP, ""

    if kind == EXACT:
        if not _exact_rewrite_possible(definition):
            if explicit:
                raise StrategyInapplicable(
                    f"no exact polynomial rewrite for {name} = {ex.to_string(definition)}"
                )
            return TRUE, DROP, "exact rewrite unavailable; dropped"
        if isinstance(definition, ex.Div):
            # v = a/g  <=>  v*g = a   (a is constant 1 for minted entries)
            g = replace_known(ex.substitute(definition.rhs, dict(post_vars or {})), ledger)
            a = replace_known(ex.substitute(definition.lhs, dict(post_vars or {})), ledger)
            if not (ex.is_polynomial(g) and ex.is_polynomial(a)):
                raise StrategyInapplicable(f"denominator of {name} not reducible to polynomial form")
            return Atom(ex.sub(ex.mul(v, g), a), EQ), EXACT, ""
        base = replace_known(ex.substitute(definition.base, dict(post_vars or {})), ledger)
        if not ex.is_polynomial(base):
            raise StrategyInapplicable(f"radicand of {name} not reducible to polynomial form")
        q = definition.exponent.denominator
        rewritten: Predicate = Atom(ex.sub(ex.pow_(v, q), base), EQ)
        if q % 2 == 0:
            rewritten = conj(rewritten, Atom(v, GE))
        return rewritten, EXACT, ""

    if kind == TAYLOR:
        names = sorted(ex.free_vars(composed))
        if len(names) == 1 and box.get(names[0], Interval.reals()).is_bounded():
            t = taylor_enclose(composed, domain=box[names[0]], degree=choice.degree, var=names[0])
            band = enclosure_to_predicate(t, names[0], name)
            range_pred, _, _ = _relax_entry(
                name, definition, StrategyChoice(RANGE), False, box, ledger, post_vars
            )
            return conj(band, range_pred), TAYLOR, ""
        if explicit and len(names) > 1:
            note = "multivariate replacement; fell back to interval range"
        elif explicit:
            note = "no bounded box available; fell back to interval range"
        else:
            note = "fell back to interval range"
        pred, applied, _ = _relax_entry(
            name, definition, StrategyChoice(RANGE), False, box, ledger, post_vars
        )
        return pred, applied, note

    # RANGE
    full_box = {n: box.get(n, Interval.reals()) for n in ex.free_vars(composed)}
    try:
        rng = interval_eval(composed, full_box, allow_unbounded=True)
    except DomainViolation as err:
        if explicit:
            raise StrategyInapplicable(f"interval range of {name} unavailable: {err}")
        return TRUE, DROP, f"interval range unavailable ({err}); dropped"
    parts: list[Predicate] = []
    if rng.lo != -INF:
        lo = ex.Constant(Fraction(rng.lo)) if not isinstance(rng.lo, Fraction) else ex.Constant(rng.lo)
        rel = ">" if rng.open_lo else GE
        parts.append(Atom(ex.sub(v, lo), rel))
    if rng.hi != INF:
        hi = ex.Constant(Fraction(rng.hi)) if not isinstance(rng.hi, Fraction) else ex.Constant(rng.hi)
        rel = "<" if rng.open_hi else LE
        parts.append(Atom(ex.sub(v, hi), rel))
    if not parts:
        return TRUE, DROP, "unbounded range; dropped"
    return conj(*parts), RANGE, ""


def abstract_replacement(
    ledger: ReplacementLedger,
    site_kind: str,
    region: Predicate,
    strategy: AbstractionStrategy,
    mode: str | None = None,
    site_id: str | None = None,
    entries: Iterable[str] | None = None,
    audit: list[AuditRecord] | None = None,
    post_vars: Mapping[str, ex.Expr] | None = None,
) -> Predicate:
    """Polynomial over-approximation of the coupling v = Gamma(x) on the
    given region, one conjunct per ledger entry, each relaxed by the
    resolved strategy.  Exact rewrites are equivalences; everything else
    over-approximates; drop yields true."""
    if site_kind not in SITE_KINDS:
        raise ValidationError(f"unknown site kind {site_kind!r}")
    site_id = site_id or (f"{site_kind}@{mode}" if mode else site_kind)
    box: dict[str, Interval] = {}
    try:
        box.update(derive_box(region, _region_vars(ledger, entries)))
    except DomainViolation:
        pass
    for var, interval in strategy.boxes.get(mode or "", {}).items():
        if var not in box or not box[var].is_bounded():
            box[var] = interval
    chosen = list(entries) if entries is not None else ledger.names()
    parts: list[Predicate] = []
    for entry in ledger:
        if entry.name not in chosen:
            continue
        choice, explicit = strategy.resolve(site_kind, site_id, _exact_rewrite_possible(entry.definition))
        pred, applied, note = _relax_entry(
            entry.name, entry.definition, choice, explicit, box, ledger, post_vars
        )
        if audit is not None:
            audit.append(AuditRecord(mode or "-", site_id, entry.name, choice.kind, applied, note))
        parts.append(pred)
    return conj(*parts)


def _region_vars(ledger: ReplacementLedger, entries) -> list[str]:
    out: set[str] = set()
    for entry in ledger:
        if entries is None or entry.name in entries:
            out |= ex.free_vars(entry.definition)
    return sorted(out)


# --- whole-system abstraction -----------------------------------------------


def _replace_pred(p: Predicate, ledger: ReplacementLedger, touched: set[str]) -> Predicate:
    def repl(e: ex.Expr) -> ex.Expr:
        out = _vt(e, ledger)
        touched.update(ex.free_vars(out) & set(ledger.names()))
        return out

    return p.map_exprs(repl)


def abstract_ehs(
    h: HybridSystem,
    strategy: AbstractionStrategy | None = None,
    unsafe: Mapping[str, Predicate] | None = None,
    prefix: str = "v",
) -> AbstractionResult:
    """Polynomial abstraction of an elementary hybrid system.

    One ledger is shared across modes; per mode, non-polynomial terms are
    collected from the field, initial set, domain, outgoing guards and
    resets (and the mode's unsafe region when given, so safety sets can be
    mapped later), the field is closed under differentiation, and every
    residual coupling is relaxed by the strategy.  Fresh variables a mode
    never references are padded with derivative zero and map component
    zero."""
    strategy = strategy or AbstractionStrategy()
    ledger = ReplacementLedger(reserved=set(h.variables) | set(h.modes), prefix=prefix)
    audit: list[AuditRecord] = []

    mode_order = h.mode_names()
    replaced_init: dict[str, Predicate] = {}
    replaced_domain: dict[str, Predicate] = {}
    replaced_field: dict[str, dict[str, ex.Expr]] = {}
    replaced_guard: dict[int, Predicate] = {}
    replaced_reset: dict[int, dict[str, ex.Expr]] = {}
    replaced_unsafe: dict[str, Predicate] = {}
    referenced: dict[str, set[str]] = {q: set() for q in mode_order}

    # S1: collect replacements site by site, in declaration order
    for q in mode_order:
        cs = h.modes[q]
        touched = referenced[q]
        replaced_init[q] = _replace_pred(cs.init, ledger, touched)
        replaced_domain[q] = _replace_pred(cs.domain, ledger, touched)
        for idx, t in enumerate(h.transitions):
            if t.source != q:
                continue
            replaced_guard[idx] = _replace_pred(t.guard, ledger, touched)
            new_reset = {}
            for var, rhs in t.reset.items():
                out = _vt(rhs, ledger)
                touched.update(ex.free_vars(out) & set(ledger.names()))
                new_reset[var] = out
            replaced_reset[idx] = new_reset
        field = {}
        for var in h.variables:
            out = _vt(cs.field.rhs[var], ledger)
            touched.update(ex.free_vars(out) & set(ledger.names()))
            field[var] = out
        replaced_field[q] = field
        if unsafe and q in unsafe:
            replaced_unsafe[q] = _replace_pred(unsafe[q], ledger, touched)

    # S2-S3: close each mode's field over its referenced entries
    mode_rhs: dict[str, dict[str, ex.Expr]] = {}
    for q in mode_order:
        cs = h.modes[q]
        f_orig = {x: ledger.resolve(replaced_field[q][x]) for x in h.variables}
        rhs = dict(replaced_field[q])
        queue = [e.name for e in ledger if e.name in referenced[q]]
        seen = set(queue)
        while queue:
            name = queue.pop(0)
            entry = next(e for e in ledger if e.name == name)
            lie: dict = {}
            from .normalform import nf_add

            for x in h.variables:
                partial = ex.differentiate(entry.definition, x)
                if isinstance(partial, ex.Constant) and partial.value == 0:
                    continue
                lie = nf_add(lie, normalize(ex.mul(partial, f_orig[x])))
            before = set(ledger.names())
            rhs[name] = _polynomialize_nf(lie, ledger)
            new_entries = [n for n in ledger.names() if n not in before]
            mentioned = ex.free_vars(rhs[name]) & set(ledger.names())
            for n in list(mentioned) + new_entries:
                if n not in seen:
                    seen.add(n)
                    queue.append(n)
                    referenced[q].add(n)
        mode_rhs[q] = rhs

    fresh = ledger.names()
    all_vars = h.variables + fresh

    # S4: simulation maps with zero padding for unreferenced entries
    maps: dict[str, SimulationMap] = {}
    for q in mode_order:
        defs = [
            entry.definition if entry.name in referenced[q] else ex.ZERO
            for entry in ledger
        ]
        maps[q] = SimulationMap(h.variables, fresh, defs)

    # assemble modes
    new_modes: dict[str, ContinuousSystem] = {}
    reports = {}
    for q in mode_order:
        cs = h.modes[q]
        rhs = dict(mode_rhs[q])
        for name in fresh:
            rhs.setdefault(name, ex.ZERO)
        field = OdeSystem(all_vars, rhs, conditions=[])
        init_pred = conj(
            replaced_init[q],
            abstract_replacement(
                ledger, "init", cs.init, strategy, mode=q,
                entries=referenced[q], audit=audit,
            ),
        )
        domain_pred = conj(
            replaced_domain[q],
            abstract_replacement(
                ledger, "domain", cs.domain, strategy, mode=q,
                entries=referenced[q], audit=audit,
            ),
        )
        new_modes[q] = ContinuousSystem(all_vars, init_pred, field, domain_pred)
        original = OdeSystem(h.variables, {x: cs.field.rhs[x] for x in h.variables})
        reports[q] = simulation_condition_check(original, field, maps[q])

    # transitions
    new_transitions: list[Transition] = []
    for idx, t in enumerate(h.transitions):
        q, q2 = t.source, t.target
        guard_pred = conj(
            replaced_guard[idx],
            abstract_replacement(
                ledger, "guard", t.guard, strategy, mode=q,
                site_id=f"guard@{idx}", entries=referenced[q], audit=audit,
            ),
        )
        assignments = dict(replaced_reset[idx])
        post = {x: assignments.get(x, ex.Var(x)) for x in h.variables}
        constraint: Predicate = TRUE
        free: list[str] = []
        for entry in ledger:
            name = entry.name
            if name not in referenced[q2]:
                # target mode pads this variable with zero
                assignments[name] = ex.ZERO
                continue
            deps = ex.free_vars(entry.definition)
            identity_deps = all(x not in t.reset or t.reset[x] == ex.Var(x) for x in deps)
            if identity_deps and name in referenced[q]:
                continue  # implicit identity assignment
            choice, explicit = strategy.resolve(
                "reset", f"reset@{idx}", _exact_rewrite_possible(entry.definition)
            )
            pred, applied, note = _relax_entry(
                entry.name, entry.definition, choice, explicit,
                _guard_box(t.guard, strategy, q, entry, h.variables),
                ledger, post_vars=post,
            )
            if audit is not None:
                audit.append(AuditRecord(q, f"reset@{idx}", name, choice.kind, applied, note))
            if pred is TRUE or pred == TRUE:
                free.append(name)
            else:
                constraint = conj(constraint, pred)
        new_transitions.append(
            Transition(q, q2, guard_pred, assignments, constraint, free)
        )

    new_system = HybridSystem(all_vars, new_modes, new_transitions, name=f"{h.name}_poly")
    return AbstractionResult(new_system, maps, ledger, referenced, audit, reports)


def _guard_box(guard: Predicate, strategy: AbstractionStrategy, mode: str, entry, variables):
    box: dict[str, Interval] = {}
    try:
        box.update(derive_box(guard, variables))
    except DomainViolation:
        pass
    for var, interval in strategy.boxes.get(mode, {}).items():
        if var not in box or not box[var].is_bounded():
            box[var] = interval
    return box


def abstract_eds(
    cs: ContinuousSystem,
    strategy: AbstractionStrategy | None = None,
    unsafe: Predicate | None = None,
    mode: str = "m",
    prefix: str = "v",
) -> AbstractionResult:
    """Abstraction of a single continuous system (a one-mode hybrid system
    without transitions)."""
    h = HybridSystem.single_mode(cs, mode=mode)
    return abstract_ehs(h, strategy, {mode: unsafe} if unsafe is not None else None, prefix=prefix)


def map_unsafe(
    unsafe: Mapping[str, Predicate],
    result: AbstractionResult,
    strategy: AbstractionStrategy | None = None,
) -> dict[str, Predicate]:
    """Per-mode unsafe sets for the abstracted system: the replaced
    predicate conjoined with the strategy's relaxation of the coupling.
    Non-polynomial unsafe terms must have been registered during
    abstraction (pass the unsafe map to abstract_ehs/abstract_eds)."""
    strategy = strategy or AbstractionStrategy()
    out: dict[str, Predicate] = {}
    for q, pred in unsafe.items():
        if q not in result.system.modes:
            raise ValidationError(f"unknown mode {q!r}")
        replaced = pred.map_exprs(lambda e: replace_known(e, result.ledger))
        if not is_polynomial_pred(replaced):
            raise UnsupportedConstruct(
                f"unsafe set of mode {q!r} contains unregistered non-polynomial terms; "
                "pass it to the abstraction so its replacements are collected"
            )
        out[q] = conj(
            replaced,
            abstract_replacement(
                result.ledger, "unsafe", pred, strategy, mode=q,
                entries=result.referenced[q],
            ),
        )
    return out
