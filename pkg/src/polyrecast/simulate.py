"""Numerical validation: fixed-step RK4 integration, trajectory-equivalence
checking between a system and its recast, hybrid execution with guard event
detection, and sampled falsification checks for invariant candidates.

Everything here is validation, not proof: reports say what was checked at
how many samples and never claim more.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    DomainExit,
    EmptySampleRegion,
    JumpLimitExceeded,
    NonFiniteState,
    UnsupportedConstruct,
    ValidationError,
)
from .hybrid import ContinuousSystem, HybridSystem, Transition, derive_box
from .intervals import INF, Interval, interval_eval
from .poly import from_expr
from .predicates import (
    EQ,
    NE,
    GT,
    GE,
    Atom,
    Predicate,
    TRUE,
    evaluate_pred,
    satisfaction_margin,
)
from .recast import OdeSystem, SimulationMap


def _np_power(base, exponent):
    """Real rational power: odd roots of negatives are real, even roots of
    negatives become nan (caught by the non-finite guard)."""
    num, den = exponent
    if den == 1:
        return base ** num
    with np.errstate(invalid="ignore"):
        if den % 2 == 1:
            sign = np.sign(base)
            mag = np.abs(base) ** (num / den)
            return np.where(sign < 0, (-1.0) ** num * mag, mag)
        return base ** (num / den)


def compile_expr(e: ex.Expr, variables: Sequence[str]) -> Callable:
    """Compile to a python function of one positional argument per variable.
    Works on floats and on numpy arrays alike."""
    names = list(variables)

    def render(node: ex.Expr) -> str:
        if isinstance(node, ex.Constant):
            return repr(float(node.value))
        if isinstance(node, ex.Var):
            if node.name not in names:
                raise ValidationError(f"unbound variable {node.name!r}")
            return f"_arg_{names.index(node.name)}"
        if isinstance(node, ex.Add):
            return f"({render(node.lhs)} + {render(node.rhs)})"
        if isinstance(node, ex.Sub):
            return f"({render(node.lhs)} - {render(node.rhs)})"
        if isinstance(node, ex.Mul):
            return f"({render(node.lhs)} * {render(node.rhs)})"
        if isinstance(node, ex.Div):
            return f"({render(node.lhs)} / {render(node.rhs)})"
        if isinstance(node, ex.Pow):
            if node.exponent.denominator == 1 and node.exponent >= 0:
                return f"({render(node.base)} ** {int(node.exponent)})"
            return (
                f"_pow({render(node.base)}, "
                f"({node.exponent.numerator}, {node.exponent.denominator}))"
            )
        if isinstance(node, ex.Exp):
            return f"_np.exp({render(node.arg)})"
        if isinstance(node, ex.Ln):
            return f"_np.log({render(node.arg)})"
        if isinstance(node, ex.Sin):
            return f"_np.sin({render(node.arg)})"
        if isinstance(node, ex.Cos):
            return f"_np.cos({render(node.arg)})"
        raise ValidationError(f"cannot compile {node!r}")

    args = ", ".join(f"_arg_{i}" for i in range(len(names)))
    source = f"lambda {args}: {render(e)}" if names else f"lambda: {render(e)}"
    return eval(source, {"_np": np, "_pow": _np_power})


def compile_field(odes: OdeSystem) -> Callable[[np.ndarray], np.ndarray]:
    fns = [compile_expr(odes.rhs[v], odes.variables) for v in odes.variables]

    def field(state: np.ndarray) -> np.ndarray:
        return np.array([fn(*state) for fn in fns], dtype=float)

    return field


class _SingularGuard:
    """Watches the open-domain side conditions (g != 0, g > 0, g >= 0) and
    trips when a trajectory approaches or steps across a singular surface."""

    def __init__(self, odes: OdeSystem, tol: float = 1e-9):
        self.checks = []
        self.tol = tol
        self._prev: list[float | None] = []
        for atom in odes.conditions:
            free = ex.free_vars(atom.expr)
            if not free <= set(odes.variables):
                continue
            fn = compile_expr(atom.expr, odes.variables)
            self.checks.append((fn, atom.rel, ex.to_string(atom.expr)))
            self._prev.append(None)

    def verify(self, state: np.ndarray, t: float) -> None:
        for i, (fn, rel, text) in enumerate(self.checks):
            g = fn(*state)
            if rel == NE:
                prev = self._prev[i]
                crossed = prev is not None and (prev < 0 <= g or g <= 0 < prev)
                if abs(g) <= self.tol or crossed:
                    raise DomainExit(
                        f"approaching singular surface {text} = 0 at t={t:.6g}", t
                    )
                self._prev[i] = g
            elif rel == GT and g <= self.tol:
                raise DomainExit(f"{text} > 0 violated at t={t:.6g}", t)
            elif rel == GE and g < -self.tol:
                raise DomainExit(f"{text} >= 0 violated at t={t:.6g}", t)


class Trajectory:
    """Uniformly sampled states: times[k] and states[k, :] in the system's
    variable order."""

    def __init__(self, variables: Sequence[str], times: np.ndarray, states: np.ndarray):
        self.variables = list(variables)
        self.times = times
        self.states = states

    def __len__(self):
        return len(self.times)

    def final_state(self) -> dict[str, float]:
        return dict(zip(self.variables, self.states[-1]))

    def state_at(self, k: int) -> dict[str, float]:
        return dict(zip(self.variables, self.states[k]))

    def to_csv(self) -> str:
        lines = ["t," + ",".join(self.variables)]
        for t, row in zip(self.times, self.states):
            lines.append(f"{t:.9g}," + ",".join(f"{v:.12g}" for v in row))
        return "\n".join(lines) + "\n"


def _state_vector(odes: OdeSystem, x0: Mapping[str, float] | Sequence[float]) -> np.ndarray:
    if isinstance(x0, Mapping):
        return np.array([float(x0[v]) for v in odes.variables], dtype=float)
    if len(x0) != len(odes.variables):
        raise ValidationError("initial state has the wrong dimension")
    return np.array([float(v) for v in x0], dtype=float)


def _rk4_step(field, state: np.ndarray, h: float) -> np.ndarray:
    k1 = field(state)
    k2 = field(state + 0.5 * h * k1)
    k3 = field(state + 0.5 * h * k2)
    k4 = field(state + h * k3)
    return state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    odes: OdeSystem,
    x0: Mapping[str, float] | Sequence[float],
    duration: float,
    step: float = 1e-3,
) -> Trajectory:
    """Classical fixed-step RK4.  Aborts with DomainExit when a singular
    side condition is approached within 1e-9, and with NonFiniteState on
    overflow."""
    if step <= 0:
        raise ValidationError("step must be positive")
    field = compile_field(odes)
    guard = _SingularGuard(odes)
    n = max(int(round(duration / step)), 0)
    state = _state_vector(odes, x0)
    times = np.empty(n + 1)
    states = np.empty((n + 1, len(state)))
    times[0] = 0.0
    states[0] = state
    guard.verify(state, 0.0)
    for k in range(1, n + 1):
        state = _rk4_step(field, state, step)
        if not np.all(np.isfinite(state)):
            raise NonFiniteState(f"non-finite state at t={k * step:.6g}")
        guard.verify(state, k * step)
        times[k] = k * step
        states[k] = state
    return Trajectory(odes.variables, times, states)


class EquivalenceReport:
    def __init__(self, max_deviation: float, tol: float, samples: int):
        self.max_deviation = max_deviation
        self.tol = tol
        self.samples = samples

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol

    def __repr__(self):
        status = "pass" if self.ok else "FAIL"
        return (
            f"EquivalenceReport({status}, max deviation {self.max_deviation:.3e} "
            f"vs tol {self.tol:.1e} over {self.samples} samples)"
        )


def check_trajectory_equivalence(
    original: OdeSystem,
    abstracted: OdeSystem,
    theta: SimulationMap,
    x0: Mapping[str, float] | Sequence[float],
    duration: float = 2.0,
    step: float = 1e-3,
    tol: float = 1e-6,
) -> EquivalenceReport:
    """Integrate both systems (the recast one from the mapped initial
    state) and report max_k ||theta(x(t_k)) - y(t_k)||_inf."""
    base = integrate(original, x0, duration, step)
    start = theta.evaluate(dict(zip(original.variables, _state_vector(original, x0))))
    lifted = integrate(abstracted, start, duration, step)
    maps = [compile_expr(c, original.variables) for c in theta.components]
    deviation = 0.0
    for k in range(len(base)):
        mapped = np.array([fn(*base.states[k]) for fn in maps])
        deviation = max(deviation, float(np.max(np.abs(mapped - lifted.states[k]))))
    return EquivalenceReport(deviation, tol, len(base))


# --- hybrid execution -----------------------------------------------------------


class JumpRecord:
    __slots__ = ("transition", "time", "pre", "post")

    def __init__(self, transition: int, time: float, pre: dict, post: dict):
        self.transition = transition
        self.time = time
        self.pre = pre
        self.post = post

    def __repr__(self):
        return f"Jump(t={self.time:.6g}, transition {self.transition})"


class HybridTrace:
    def __init__(self, variables: Sequence[str]):
        self.variables = list(variables)
        self.segments: list[tuple[str, Trajectory]] = []
        self.jumps: list[JumpRecord] = []

    def total_time(self) -> float:
        return sum(seg.times[-1] for _, seg in self.segments)

    def final_state(self) -> dict[str, float]:
        return self.segments[-1][1].final_state()

    def states(self) -> np.ndarray:
        return np.vstack([seg.states for _, seg in self.segments])

    def to_csv(self) -> str:
        lines = ["t,mode," + ",".join(self.variables)]
        offset = 0.0
        for mode, seg in self.segments:
            for t, row in zip(seg.times, seg.states):
                lines.append(
                    f"{offset + t:.9g},{mode}," + ",".join(f"{v:.12g}" for v in row)
                )
            offset += seg.times[-1]
        return "\n".join(lines) + "\n"


class _GuardWatcher:
    """Event detection for one transition: a single equality atom crossing
    zero (plus side inequalities), or a conjunction of inequalities turning
    true.  A transition only fires after its guard has been seen inactive
    in the current segment, so surface-preserving resets do not refire."""

    def __init__(self, index: int, transition: Transition, variables: Sequence[str]):
        self.index = index
        self.transition = transition
        atoms = list(transition.guard.atoms())
        if not atoms or not _conjunctive(transition.guard):
            raise UnsupportedConstruct(
                f"guard of transition {index} must be a conjunction of atoms"
            )
        eq_atoms = [a for a in atoms if a.rel == EQ]
        if len(eq_atoms) > 1:
            raise UnsupportedConstruct(
                f"guard of transition {index} has several equality atoms"
            )
        self.eq_fn = compile_expr(eq_atoms[0].expr, variables) if eq_atoms else None
        self.side = [a for a in atoms if a.rel != EQ]
        self.side_fns = [(compile_expr(a.expr, variables), a.rel) for a in self.side]
        self.armed = False
        self.prev_value: float | None = None

    def _sides_hold(self, state) -> bool:
        for fn, rel in self.side_fns:
            v = fn(*state)
            if rel in ("<=", "<") and not v <= 1e-9:
                return False
            if rel in (">=", ">") and not v >= -1e-9:
                return False
            if rel == NE and abs(v) <= 1e-12:
                return False
        return True

    def reset_segment(self):
        self.armed = False
        self.prev_value = None

    def observe(self, state) -> None:
        if self.eq_fn is not None:
            g = self.eq_fn(*state)
            if abs(g) > 1e-6:
                self.armed = True
            self.prev_value = g
        else:
            satisfied = self._sides_hold(state)
            if not satisfied:
                self.armed = True

    def crossing(self, state_before, state_after) -> bool:
        if not self.armed:
            return False
        if self.eq_fn is not None:
            g0 = self.eq_fn(*state_before)
            g1 = self.eq_fn(*state_after)
            if g0 == 0.0 and g1 == 0.0:
                return False
            return (g0 <= 0.0 <= g1 or g1 <= 0.0 <= g0) and self._sides_hold(state_after)
        return (not self._sides_hold(state_before)) and self._sides_hold(state_after)

    def locate(self, field, state, h: float, tol: float = 1e-9) -> float:
        """Bisect the event time offset within [0, h]."""
        if self.eq_fn is not None:
            target = self.eq_fn
        else:
            def target(*args):
                values = []
                for fn, rel in self.side_fns:
                    v = fn(*args)
                    values.append(v if rel in ("<=", "<") else -v)
                return max(values)

        lo_t, hi_t = 0.0, h
        g_lo = target(*state)
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            mid_state = _rk4_step(field, state, mid)
            g_mid = target(*mid_state)
            if abs(g_mid) <= tol or (hi_t - lo_t) < 1e-15:
                return mid
            if (g_lo <= 0 <= g_mid) or (g_mid <= 0 <= g_lo):
                hi_t = mid
            else:
                lo_t = mid
                g_lo = g_mid
        return hi_t


def _conjunctive(p: Predicate) -> bool:
    from .predicates import And, _TruePred

    if isinstance(p, (Atom, _TruePred)):
        return True
    if isinstance(p, And):
        return all(isinstance(q, Atom) for q in p.parts)
    return False


def run_hybrid(
    system: HybridSystem,
    start_mode: str,
    x0: Mapping[str, float] | Sequence[float],
    duration: float,
    step: float = 1e-3,
    max_jumps: int = 100,
    urgent: bool = True,
) -> HybridTrace:
    """Execute a hybrid system with urgent transition semantics: a jump is
    taken at the first guard crossing (bisected to 1e-9).  With
    urgent=False the run dwells until the mode domain fails and only then
    takes an enabled transition.

    Raises JumpLimitExceeded when a crossing occurs with no jump budget
    left, and DomainExit when the domain fails with no enabled transition.
    """
    if start_mode not in system.modes:
        raise ValidationError(f"unknown mode {start_mode!r}")
    trace = HybridTrace(system.variables)
    mode = start_mode
    state = _state_vector(system.modes[mode].field, x0)
    remaining = duration
    jumps = 0

    while remaining > 1e-12:
        cs = system.modes[mode]
        field = compile_field(cs.field)
        guard = _SingularGuard(cs.field)
        watchers = []
        for idx, t in enumerate(system.transitions):
            if t.source != mode:
                continue
            if t.free or t.constraint != TRUE:
                raise UnsupportedConstruct(
                    f"transition {idx} has relational resets; simulation needs assignments"
                )
            watchers.append(_GuardWatcher(idx, t, system.variables))
        domain_fn = None
        if cs.domain != TRUE:
            domain_fn = lambda s: evaluate_pred(
                cs.domain, dict(zip(system.variables, s)), eq_tol=1e-7
            )

        n = max(int(math.ceil(remaining / step - 1e-9)), 1)
        times = [0.0]
        states = [state.copy()]
        for w in watchers:
            w.reset_segment()
            w.observe(state)
        event: tuple[_GuardWatcher, float] | None = None
        for k in range(1, n + 1):
            h = min(step, remaining - times[-1])
            if h <= 1e-15:
                break
            new_state = _rk4_step(field, state, h)
            if not np.all(np.isfinite(new_state)):
                raise NonFiniteState(f"non-finite state in mode {mode!r}")
            fired = None
            if urgent:
                for w in watchers:
                    if w.crossing(state, new_state):
                        fired = w
                        break
            if fired is not None:
                offset = fired.locate(field, state, h)
                event_state = _rk4_step(field, state, offset)
                times.append(times[-1] + offset)
                states.append(event_state.copy())
                event = (fired, times[-1])
                state = event_state
                break
            if domain_fn is not None and not domain_fn(new_state):
                enabled = None
                for w in watchers:
                    candidate = dict(zip(system.variables, new_state))
                    if evaluate_pred(w.transition.guard, candidate, eq_tol=1e-6):
                        enabled = w
                        break
                if enabled is None:
                    raise DomainExit(
                        f"left the domain of mode {mode!r} with no enabled transition",
                        times[-1] + h,
                    )
                times.append(times[-1] + h)
                states.append(new_state.copy())
                event = (enabled, times[-1])
                state = new_state
                break
            guard.verify(new_state, times[-1] + h)
            times.append(times[-1] + h)
            states.append(new_state.copy())
            state = new_state
            for w in watchers:
                w.observe(state)

        trace.segments.append(
            (mode, Trajectory(system.variables, np.array(times), np.vstack(states)))
        )
        remaining -= times[-1]
        if event is None:
            break
        watcher, _ = event
        if jumps >= max_jumps:
            raise JumpLimitExceeded(
                f"transition {watcher.index} fired after {jumps} jumps (budget {max_jumps})"
            )
        transition = watcher.transition
        pre = dict(zip(system.variables, state))
        post = dict(pre)
        for var, rhs in transition.reset.items():
            post[var] = ex.evaluate(rhs, pre)
        trace.jumps.append(JumpRecord(watcher.index, trace.total_time(), pre, post))
        state = np.array([post[v] for v in system.variables])
        mode = transition.target
        jumps += 1

    return trace


# --- sampling ---------------------------------------------------------------------


def _refine_box(
    pred: Predicate, variables: Sequence[str], box: dict[str, Interval], passes: int = 2
) -> dict[str, Interval]:
    """Bound variables that appear linearly against an expression of
    already-bounded variables (band atoms v - p(x) <= c and the like)."""
    from .hybrid import _conjunctive_atoms

    for _ in range(passes):
        for atom in _conjunctive_atoms(pred):
            names = sorted(ex.free_vars(atom.expr))
            unbounded = [v for v in names if not box.get(v, Interval.reals()).is_bounded()]
            if len(unbounded) != 1:
                continue
            u = unbounded[0]
            if not ex.is_polynomial(atom.expr):
                continue
            try:
                poly = from_expr(atom.expr, tuple(names))
            except Exception:
                continue
            idx = names.index(u)
            if any(mono[idx] > 1 for mono in poly.terms):
                continue
            coeff_terms = {}
            rest_terms = {}
            for mono, c in poly.terms.items():
                if mono[idx] == 1:
                    reduced = tuple(e if i != idx else 0 for i, e in enumerate(mono))
                    coeff_terms[reduced] = c
                else:
                    rest_terms[mono] = c
            if list(coeff_terms.keys()) != [(0,) * len(names)]:
                continue  # coefficient of u must be constant
            a = coeff_terms[(0,) * len(names)]
            from .poly import Poly

            rest = Poly(tuple(names), rest_terms)
            rest_expr = rest.to_expr()
            try:
                rng = interval_eval(rest_expr, {v: box.get(v, Interval.reals()) for v in names})
            except Exception:
                continue
            if not rng.is_bounded():
                continue
            # a*u + rest <= 0  =>  u <= -rest/a (a > 0)
            lo_c = -Fraction(rng.hi) / a
            hi_c = -Fraction(rng.lo) / a
            if lo_c > hi_c:
                lo_c, hi_c = hi_c, lo_c
            current = box.get(u, Interval.reals())
            if atom.rel == EQ:
                newint = Interval(max(current.lo, lo_c), min(current.hi, hi_c))
            elif (atom.rel in ("<=", "<")) == (a > 0):
                newint = Interval(current.lo, min(current.hi, hi_c))
            else:
                newint = Interval(max(current.lo, lo_c), current.hi)
            box[u] = newint
    return box


def sample_region(
    pred: Predicate,
    variables: Sequence[str],
    n: int,
    rng: np.random.Generator,
    boxes: Mapping[str, Interval] | None = None,
    max_factor: int = 200,
) -> np.ndarray:
    """Rejection sampling from the smallest derivable enclosing box of the
    predicate.  Raises EmptySampleRegion when the acceptance rate is too
    low or a variable has no bounds."""
    box = derive_box(pred, variables)
    if boxes:
        # supplied boxes only stand in for bounds the predicate does not
        # provide; a bounded derived box always wins (the box must enclose
        # the region, never clip it)
        for v, interval in boxes.items():
            if v in box and not box[v].is_bounded():
                box[v] = box[v].intersect(interval)
    box = _refine_box(pred, variables, box)
    unbounded = [v for v in variables if not box[v].is_bounded()]
    if unbounded:
        raise EmptySampleRegion(
            f"cannot bound {unbounded} from the predicate; supply sampling boxes"
        )
    lows = np.array([float(box[v].lo) for v in variables])
    highs = np.array([float(box[v].hi) for v in variables])
    fns = _compile_pred(pred, variables)
    out = np.empty((n, len(variables)))
    have = 0
    tried = 0
    batch = max(n, 1024)
    while have < n:
        if tried > max_factor * n + 10_000:
            raise EmptySampleRegion(
                f"acceptance rate too low after {tried} proposals"
            )
        pts = rng.uniform(lows, highs, size=(batch, len(variables)))
        mask = fns(pts)
        good = pts[mask]
        take = min(n - have, len(good))
        out[have : have + take] = good[:take]
        have += take
        tried += batch
    return out


def _compile_pred(pred: Predicate, variables: Sequence[str], eq_tol: float = 1e-9):
    """Vectorized predicate evaluator over rows of a sample matrix."""
    from .predicates import And, Or, Not, _TruePred, _FalsePred

    def build(p) -> Callable[[np.ndarray], np.ndarray]:
        if isinstance(p, _TruePred):
            return lambda pts: np.ones(len(pts), dtype=bool)
        if isinstance(p, _FalsePred):
            return lambda pts: np.zeros(len(pts), dtype=bool)
        if isinstance(p, Atom):
            fn = compile_expr(p.expr, variables)
            rel = p.rel

            def atom(pts):
                with np.errstate(all="ignore"):
                    v = fn(*pts.T)
                v = np.asarray(v, dtype=float)
                if v.ndim == 0:
                    v = np.full(len(pts), float(v))
                if rel == "<=":
                    return v <= eq_tol
                if rel == "<":
                    return v < eq_tol
                if rel == EQ:
                    return np.abs(v) <= eq_tol
                if rel == NE:
                    return np.abs(v) > eq_tol
                if rel == ">=":
                    return v >= -eq_tol
                return v > -eq_tol

            return atom
        if isinstance(p, And):
            parts = [build(q) for q in p.parts]
            return lambda pts: np.logical_and.reduce([f(pts) for f in parts])
        if isinstance(p, Or):
            parts = [build(q) for q in p.parts]
            return lambda pts: np.logical_or.reduce([f(pts) for f in parts])
        if isinstance(p, Not):
            inner = build(p.inner)
            return lambda pts: ~inner(pts)
        raise ValidationError(f"cannot compile predicate {p!r}")

    return build(pred)


class InvariantCheckReport:
    """Margins of the three sampled checks; each margin is <= 0 when no
    violation was found (strictly negative = strict separation).  This is
    falsification, not proof: 'no violation found at N samples'."""

    def __init__(self, samples: int, slack: float, seed: int):
        self.samples = samples
        self.slack = slack
        self.seed = seed
        self.init_margin: float | None = None
        self.flow_margin: float | None = None
        self.separation_margin: float | None = None

    def _passes(self, margin: float | None) -> bool:
        return margin is not None and margin <= -self.slack

    @property
    def init_ok(self) -> bool:
        return self._passes(self.init_margin)

    @property
    def separation_ok(self) -> bool:
        return self._passes(self.separation_margin)

    @property
    def flow_ok(self) -> bool:
        return self._passes(self.flow_margin)

    def lines(self) -> list[str]:
        def fmt(name, margin, asserted=True):
            if margin is None:
                return f"{name}: skipped"
            status = "no violation found" if margin <= (-self.slack if asserted else 0) else "VIOLATED"
            return f"{name}: worst margin {margin:.6g} ({status} at {self.samples} samples)"

        return [
            fmt("init implication", self.init_margin),
            fmt("flow implication", self.flow_margin, asserted=False),
            fmt("separation implication", self.separation_margin),
        ]


def check_invariant_sampled(
    system: ContinuousSystem,
    invariant: Atom,
    unsafe: Predicate,
    samples: int = 10_000,
    slack: float = 1e-4,
    seed: int = 0,
    boxes: Mapping[str, Interval] | None = None,
) -> InvariantCheckReport:
    """Sampled falsification of the three invariant conditions: the initial
    set satisfies p <= 0, the Lie derivative of p along the field is <= 0
    on the domain, and p <= 0 excludes the unsafe set.

    Margins are maxima over samples, so margin <= -slack means the
    condition held strictly at every sampled point."""
    if invariant.rel not in ("<=", "<"):
        raise ValidationError("invariant must be a single atom p <= 0")
    p = invariant.expr
    rng = np.random.default_rng(seed)
    report = InvariantCheckReport(samples, slack, seed)
    p_fn = compile_expr(p, system.variables)

    # init implication
    pts = sample_region(system.init, system.variables, samples, rng, boxes)
    with np.errstate(all="ignore"):
        values = np.asarray(p_fn(*pts.T), dtype=float)
    report.init_margin = float(np.max(values))

    # flow implication: Lie derivative of p along the field over the domain
    lie = ex.ZERO
    for v in system.variables:
        partial = ex.differentiate(p, v)
        if isinstance(partial, ex.Constant) and partial.value == 0:
            continue
        lie = ex.add(lie, ex.mul(partial, system.field.rhs[v]))
    lie_fn = compile_expr(lie, system.variables)
    pts = sample_region(system.domain, system.variables, samples, rng, boxes)
    with np.errstate(all="ignore"):
        values = np.asarray(lie_fn(*pts.T), dtype=float)
    values = values[np.isfinite(values)]
    if len(values) == 0:
        raise EmptySampleRegion("no finite Lie-derivative samples")
    report.flow_margin = float(np.max(values))

    # separation: p <= 0 excludes the unsafe set
    region = conj_pred(system.domain, Atom(p, "<="))
    pts = sample_region(region, system.variables, samples, rng, boxes)
    worst = -math.inf
    for row in pts:
        env = dict(zip(system.variables, row))
        worst = max(worst, -satisfaction_margin(unsafe, env))
    report.separation_margin = float(worst)
    return report


def conj_pred(*parts: Predicate) -> Predicate:
    from .predicates import conj

    return conj(*parts)
