"""Downstream artifacts: the invariant-synthesis constraint problem with a
parametric polynomial template, and interchange exports of an abstracted
system (native, smt-like prefix assertions, or a model-checker-style
mode/flow/jump description)."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping

from . import expr as ex
from .errors import NotPolynomial, UnsupportedConstruct, ValidationError
from .hybrid import AbstractionResult
from .predicates import (
    And,
    Atom,
    Not,
    Or,
    Predicate,
    TRUE,
    _FalsePred,
    _TruePred,
    pred_vars,
    to_pred_string,
)


class TemplateSpec:
    """Parametric polynomial template p(u, vars) <= 0: all monomials up to
    `degree` over the chosen variable scope, one parameter per monomial."""

    ORIGINALS = "originals"
    WITH_FRESH = "originals-plus-fresh"

    def __init__(self, degree: int, scope: str = ORIGINALS, prefix: str = "u"):
        if degree < 1:
            raise ValidationError("template degree must be at least 1")
        if scope not in (self.ORIGINALS, self.WITH_FRESH):
            raise ValidationError(f"unknown template scope {scope!r}")
        self.degree = degree
        self.scope = scope
        self.prefix = prefix


def monomials_up_to(variables: list[str], degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors with total degree <= degree, graded order."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(variables)), total):
            mono = [0] * len(variables)
            for idx in combo:
                mono[idx] += 1
            out.append(tuple(mono))
    return out


def _mono_expr(variables: list[str], mono: tuple[int, ...]) -> ex.Expr:
    term: ex.Expr | None = None
    for name, k in zip(variables, mono):
        if k == 0:
            continue
        factor = ex.pow_(ex.Var(name), k)
        term = factor if term is None else ex.mul(term, factor)
    return term if term is not None else ex.ONE


class ConstraintDocument:
    def __init__(self, text: str, parameters: list[str], template: ex.Expr, notes: list[str]):
        self.text = text
        self.parameters = parameters
        self.template = template
        self.notes = notes

    def __str__(self):
        return self.text


def _sexpr(e: ex.Expr) -> str:
    if isinstance(e, ex.Constant):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator) if v >= 0 else f"(- {-v.numerator})"
        text = f"(/ {abs(v.numerator)} {v.denominator})"
        return text if v >= 0 else f"(- {text})"
    if isinstance(e, ex.Var):
        return e.name
    if isinstance(e, ex.Add):
        return f"(+ {_sexpr(e.lhs)} {_sexpr(e.rhs)})"
    if isinstance(e, ex.Sub):
        return f"(- {_sexpr(e.lhs)} {_sexpr(e.rhs)})"
    if isinstance(e, ex.Mul):
        return f"(* {_sexpr(e.lhs)} {_sexpr(e.rhs)})"
    if isinstance(e, ex.Div):
        return f"(/ {_sexpr(e.lhs)} {_sexpr(e.rhs)})"
    if isinstance(e, ex.Pow):
        if e.exponent.denominator != 1 or e.exponent < 0:
            raise UnsupportedConstruct(f"cannot export non-integer power {e!r}")
        k = int(e.exponent)
        if k == 0:
            return "1"
        inner = _sexpr(e.base)
        if k == 1:
            return inner
        return "(* " + " ".join([inner] * k) + ")"
    if isinstance(e, ex.Exp):
        return f"(exp {_sexpr(e.arg)})"
    if isinstance(e, ex.Ln):
        return f"(ln {_sexpr(e.arg)})"
    if isinstance(e, ex.Sin):
        return f"(sin {_sexpr(e.arg)})"
    if isinstance(e, ex.Cos):
        return f"(cos {_sexpr(e.arg)})"
    raise UnsupportedConstruct(f"cannot export {e!r}")


def _pred_sexpr(p: Predicate) -> str:
    if isinstance(p, _TruePred):
        return "true"
    if isinstance(p, _FalsePred):
        return "false"
    if isinstance(p, Atom):
        rel = {"<=": "<=", "<": "<", "=": "=", ">=": ">=", ">": ">"}.get(p.rel)
        if rel is None:  # != 0
            return f"(not (= {_sexpr(p.expr)} 0))"
        return f"({rel} {_sexpr(p.expr)} 0)"
    if isinstance(p, And):
        return "(and " + " ".join(_pred_sexpr(q) for q in p.parts) + ")"
    if isinstance(p, Or):
        return "(or " + " ".join(_pred_sexpr(q) for q in p.parts) + ")"
    if isinstance(p, Not):
        return f"(not {_pred_sexpr(p.inner)})"
    raise UnsupportedConstruct(f"cannot export predicate {p!r}")


def _forall(variables: Iterable[str], body: str) -> str:
    binder = " ".join(f"({v} Real)" for v in variables)
    return f"(forall ({binder}) {body})"


def emit_constraints(
    result: AbstractionResult,
    unsafe: Mapping[str, Predicate],
    tmpl: TemplateSpec,
) -> ConstraintDocument:
    """The synthesis problem for a polynomial invariant candidate
    template(u, .) <= 0: per mode, the initial set implies the template,
    the domain implies a non-positive Lie derivative, and the template
    excludes the unsafe set.

    With the originals-only scope, the template has no fresh variables, so
    only the original components of the recast field enter the Lie
    derivative, and domain conjuncts about fresh variables that do not
    occur in it are pruned."""
    system = result.system
    if not system.is_polynomial():
        raise NotPolynomial("constraint emission needs a polynomial abstraction")
    originals = result.maps[next(iter(result.maps))].originals
    fresh = result.fresh_variables()
    scope_vars = list(originals) if tmpl.scope == TemplateSpec.ORIGINALS else list(originals) + fresh

    monos = monomials_up_to(scope_vars, tmpl.degree)
    parameters = [f"{tmpl.prefix}{i}" for i in range(len(monos))]
    template: ex.Expr = ex.ZERO
    for pname, mono in zip(parameters, monos):
        template = ex.add(template, ex.mul(ex.Var(pname), _mono_expr(scope_vars, mono)))

    notes: list[str] = []
    lines: list[str] = [
        f"; invariant synthesis constraints for {system.name}",
        f"; template: polynomial of degree {tmpl.degree} over ({', '.join(scope_vars)})",
        f"; parameters: {len(parameters)}",
    ]
    for pname in parameters:
        lines.append(f"(declare-const {pname} Real)")
    lines.append(f"(define-fun template () Real {_sexpr(template)})")

    all_vars = system.variables
    for q, cs in system.modes.items():
        lie: ex.Expr = ex.ZERO
        for z in scope_vars:
            partial = ex.differentiate(template, z)
            if isinstance(partial, ex.Constant) and partial.value == 0:
                continue
            lie = ex.add(lie, ex.mul(partial, cs.field.rhs[z]))
        domain_pred = cs.domain
        if tmpl.scope == TemplateSpec.ORIGINALS:
            used = ex.free_vars(lie)
            domain_pred, pruned = _prune_fresh_conjuncts(domain_pred, set(fresh) - used)
            if pruned:
                notes.append(
                    f"mode {q}: pruned domain constraints on unused fresh variables {sorted(pruned)}"
                )
        lines.append(f"; mode {q}")
        lines.append(
            "(assert "
            + _forall(all_vars, f"(=> {_pred_sexpr(cs.init)} (<= {_sexpr(template)} 0))")
            + ") ; init => template"
        )
        lines.append(
            "(assert "
            + _forall(all_vars, f"(=> {_pred_sexpr(domain_pred)} (<= {_sexpr(lie)} 0))")
            + ") ; domain => lie derivative non-positive"
        )
        unsafe_q = unsafe.get(q)
        if unsafe_q is None or isinstance(unsafe_q, _FalsePred):
            lines.append("; no unsafe set for this mode; separation constraint trivial")
            continue
        lines.append(
            "(assert "
            + _forall(
                all_vars,
                f"(=> (<= {_sexpr(template)} 0) (not {_pred_sexpr(unsafe_q)}))",
            )
            + ") ; template excludes unsafe"
        )
    for note in notes:
        lines.append(f"; note: {note}")
    return ConstraintDocument("\n".join(lines) + "\n", parameters, template, notes)


def _prune_fresh_conjuncts(pred: Predicate, prune: set[str]) -> tuple[Predicate, set[str]]:
    """Drop conjuncts that mention only prunable fresh variables (plus any
    originals); sound because dropping constraints enlarges the domain."""
    if not prune:
        return pred, set()
    from .predicates import conj

    removed: set[str] = set()
    if isinstance(pred, And):
        kept = []
        for part in pred.parts:
            mentioned = pred_vars(part) & prune
            if mentioned:
                removed |= mentioned
            else:
                kept.append(part)
        return conj(*kept), removed
    mentioned = pred_vars(pred) & prune
    if mentioned:
        return TRUE, mentioned
    return pred, set()


# --- system interchange -------------------------------------------------------


def export_system(
    result: AbstractionResult,
    fmt: str = "native",
    unsafe: Mapping[str, Predicate] | None = None,
) -> str:
    """native round-trips through the model parser; smt-like writes
    quantified real-arithmetic assertions; model-checker-style writes a
    mode/flow/jump description for polynomial reachability tools."""
    if fmt == "native":
        from .modelfile import serialize_result

        return serialize_result(result, unsafe)
    if fmt == "smt-like":
        return _export_smt(result, unsafe or {})
    if fmt == "model-checker-style":
        return _export_model_checker(result, unsafe or {})
    raise ValidationError(f"unknown export format {fmt!r}")


def _export_smt(result: AbstractionResult, unsafe) -> str:
    system = result.system
    lines = [f"; {system.name}: polynomial abstraction, quantified assertions"]
    for v in system.variables:
        lines.append(f"(declare-fun {v} () Real)")
        lines.append(f"(declare-fun {v}! () Real)")
    for q, cs in system.modes.items():
        lines.append(f"; mode {q}")
        lines.append(f"(define-fun init_{q} () Bool {_pred_sexpr(cs.init)})")
        lines.append(f"(define-fun domain_{q} () Bool {_pred_sexpr(cs.domain)})")
        for v in system.variables:
            lines.append(f"(define-fun flow_{q}_{v} () Real {_sexpr(cs.field.rhs[v])})")
    for idx, t in enumerate(result.system.transitions):
        lines.append(f"; jump {idx}: {t.source} -> {t.target}")
        lines.append(f"(define-fun guard_{idx} () Bool {_pred_sexpr(t.guard)})")
        parts = []
        for v in system.variables:
            if v in t.free:
                continue
            image = t.reset.get(v, ex.Var(v))
            parts.append(f"(= {v}! {_sexpr(image)})")
        if t.constraint != TRUE:
            parts.append(_pred_sexpr_primed(t.constraint, set(result.fresh_variables())))
        body = parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
        lines.append(f"(define-fun jump_{idx} () Bool {body})")
    for q, pred in (unsafe or {}).items():
        lines.append(f"(define-fun unsafe_{q} () Bool {_pred_sexpr(pred)})")
    return "\n".join(lines) + "\n"


def _pred_sexpr_primed(p: Predicate, fresh: set[str]) -> str:
    """Reset constraints talk about post-state fresh variables."""

    def prime(e: ex.Expr) -> ex.Expr:
        return ex.substitute(e, {v: ex.Var(f"{v}!") for v in fresh & ex.free_vars(e)})

    return _pred_sexpr(p.map_exprs(prime))


def _export_model_checker(result: AbstractionResult, unsafe) -> str:
    system = result.system
    lines = [
        f"hybrid system {system.name}",
        "state variables: " + ", ".join(system.variables),
        f"modes: {len(system.modes)}  jumps: {len(system.transitions)}",
        "",
    ]
    for q, cs in system.modes.items():
        lines.append(f"mode {q} {{")
        lines.append(f"  invariant: {to_pred_string(cs.domain)}")
        lines.append(f"  initial: {to_pred_string(cs.init)}")
        for v in system.variables:
            lines.append(f"  d/dt {v} = {ex.to_string(cs.field.rhs[v])}")
        lines.append("}")
    for idx, t in enumerate(system.transitions):
        lines.append(f"jump {idx}: {t.source} -> {t.target} {{")
        lines.append(f"  guard: {to_pred_string(t.guard)}")
        for v in system.variables:
            if v in t.reset:
                lines.append(f"  {v}' := {ex.to_string(t.reset[v])}")
        if t.constraint != TRUE:
            lines.append(f"  post-state constraint: {to_pred_string(t.constraint)}")
        if t.free:
            lines.append("  unconstrained: " + ", ".join(t.free))
        lines.append("}")
    for q, pred in (unsafe or {}).items():
        lines.append(f"unsafe {q}: {to_pred_string(pred)}")
    return "\n".join(lines) + "\n"
