"""Line-oriented model file format.

A model file declares variables, one block per mode (init/domain/flow),
jump blocks (guard/reset), optional per-mode unsafe predicates, and an
optional strategy block.  Abstraction results serialize to the same format
plus `ledger` and `map` sections, and parse back to an equal result, so
golden files diff cleanly.

    system bouncing_ball
    vars x y vx vy

    mode ball
      init: x = 0 & 4.9 <= y & y <= 5.1 & vx = -1 & vy = 0
      domain: y - sin(x) >= 0
      flow x' = vx
      ...

    jump ball -> ball
      guard: y - sin(x) = 0
      reset vx' := (sin(x)^2*vx + 2*cos(x)*vy)/(1 + cos(x)^2)

    unsafe ball: (x - 0.7)^2 + (y + 0.7)^2 - 0.09 <= 0

    strategy
      init: taylor degree=6
      domain: drop
      box ball: x in [-2, 2], y in [-2, 2]

Strategy names: exact/taylor/range/drop, with W1/W2/W3/W4 accepted as
aliases.  `#` starts a comment.
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import expr as ex
from .errors import ParseError, ValidationError
from .hybrid import (
    AbstractionResult,
    AbstractionStrategy,
    ContinuousSystem,
    HybridSystem,
    StrategyChoice,
    Transition,
    abstract_ehs,
)
from .intervals import Interval
from .parser import parse, parse_predicate
from .predicates import Predicate, TRUE, to_pred_string
from .recast import LedgerEntry, OdeSystem, ReplacementLedger, SimulationMap
from .normalform import canonical


class Model:
    """Parsed model file: the hybrid system plus strategy and unsafe sets."""

    def __init__(self, name, system: HybridSystem, strategy: AbstractionStrategy, unsafe: dict):
        self.name = name
        self.system = system
        self.strategy = strategy
        self.unsafe = unsafe


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


_FLOW_RE = re.compile(r"^flow\s+([A-Za-z_][A-Za-z0-9_]*)'\s*=\s*(.+)$")
_RESET_RE = re.compile(r"^reset\s+([A-Za-z_][A-Za-z0-9_]*)'\s*:=\s*(.+)$")
_JUMP_RE = re.compile(r"^jump\s+([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)$")
_BOX_RE = re.compile(
    r"([A-Za-z_][A-Za-z0-9_]*)\s+in\s+\[([^,\]]+),([^\]]+)\]"
)
_LEDGER_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$")


def _parse_strategy_choice(text: str, lineno: int) -> StrategyChoice:
    parts = text.split()
    kind = parts[0]
    degree = None
    for extra in parts[1:]:
        if extra.startswith("degree="):
            degree = int(extra.split("=", 1)[1])
        else:
            raise ValidationError(f"line {lineno}: unknown strategy option {extra!r}")
    try:
        return StrategyChoice(kind, degree)
    except ValidationError as err:
        raise ValidationError(f"line {lineno}: {err}")


def parse_model(text: str) -> Model:
    name = "system"
    variables: list[str] = []
    mode_data: dict[str, dict] = {}
    jumps: list[dict] = []
    unsafe: dict[str, Predicate] = {}
    strategy = AbstractionStrategy()
    ledger_entries: list[tuple[str, ex.Expr]] = []
    maps: dict[str, list[ex.Expr]] = {}

    section: str | None = None
    current: dict | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        try:
            head, _, rest = line.partition(" ")
            if head == "system":
                name = rest.strip()
                section = None
            elif head == "vars":
                variables.extend(rest.replace(",", " ").split())
                section = None
            elif head == "mode":
                mode_name = rest.strip()
                if not mode_name or mode_name in mode_data:
                    raise ValidationError(f"line {lineno}: bad or duplicate mode {mode_name!r}")
                current = {"init": TRUE, "domain": TRUE, "flow": {}}
                mode_data[mode_name] = current
                section = "mode"
            elif _JUMP_RE.match(line):
                m = _JUMP_RE.match(line)
                current = {
                    "source": m.group(1),
                    "target": m.group(2),
                    "guard": TRUE,
                    "reset": {},
                    "constraint": TRUE,
                    "free": [],
                }
                jumps.append(current)
                section = "jump"
            elif head == "unsafe":
                mode_name, _, pred_text = rest.partition(":")
                unsafe[mode_name.strip()] = parse_predicate(pred_text.strip())
                section = None
            elif head == "strategy":
                section = "strategy"
            elif head == "ledger":
                section = "ledger"
            elif head == "map":
                mode_name, _, comps = rest.partition(":")
                maps[mode_name.strip()] = [
                    parse(c.strip()) for c in _split_top_level(comps)
                ]
                section = None
            elif section == "mode" and current is not None:
                _parse_mode_line(line, current, lineno)
            elif section == "jump" and current is not None:
                _parse_jump_line(line, current, lineno)
            elif section == "strategy":
                _parse_strategy_line(line, strategy, lineno)
            elif section == "ledger":
                m = _LEDGER_RE.match(line)
                if not m:
                    raise ValidationError(f"line {lineno}: expected `name = expr`")
                ledger_entries.append((m.group(1), parse(m.group(2))))
            else:
                raise ValidationError(f"line {lineno}: unexpected {line!r}")
        except ParseError as err:
            raise ValidationError(f"line {lineno}: {err}") from None

    if not variables:
        raise ValidationError("no variables declared")
    if not mode_data:
        raise ValidationError("no modes declared")

    modes = {}
    for mode_name, data in mode_data.items():
        missing = [v for v in variables if v not in data["flow"]]
        if missing:
            raise ValidationError(f"mode {mode_name!r}: missing flow for {missing}")
        extra = [v for v in data["flow"] if v not in variables]
        if extra:
            raise ValidationError(f"mode {mode_name!r}: flow for undeclared {extra}")
        field = OdeSystem(variables, data["flow"])
        modes[mode_name] = ContinuousSystem(variables, data["init"], field, data["domain"])

    transitions = [
        Transition(
            j["source"], j["target"], j["guard"], j["reset"], j["constraint"], j["free"]
        )
        for j in jumps
    ]
    system = HybridSystem(variables, modes, transitions, name=name)
    model = Model(name, system, strategy, unsafe)
    if ledger_entries or maps:
        model.ledger_entries = ledger_entries
        model.maps = maps
    return model


def _split_top_level(text: str) -> list[str]:
    out, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            out.append(text[start:i])
            start = i + 1
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


def _parse_mode_line(line: str, current: dict, lineno: int) -> None:
    if line.startswith("init:"):
        current["init"] = parse_predicate(line[5:].strip())
    elif line.startswith("domain:"):
        current["domain"] = parse_predicate(line[7:].strip())
    else:
        m = _FLOW_RE.match(line)
        if not m:
            raise ValidationError(f"line {lineno}: expected init:/domain:/flow in mode block")
        current["flow"][m.group(1)] = parse(m.group(2))


def _parse_jump_line(line: str, current: dict, lineno: int) -> None:
    if line.startswith("guard:"):
        current["guard"] = parse_predicate(line[6:].strip())
    elif line.startswith("constraint:"):
        current["constraint"] = parse_predicate(line[11:].strip())
    elif line.startswith("free "):
        current["free"].extend(line[5:].replace(",", " ").split())
    else:
        m = _RESET_RE.match(line)
        if not m:
            raise ValidationError(f"line {lineno}: expected guard:/reset/constraint in jump block")
        current["reset"][m.group(1)] = parse(m.group(2))


def _parse_strategy_line(line: str, strategy: AbstractionStrategy, lineno: int) -> None:
    if line.startswith("box "):
        mode_name, _, spec = line[4:].partition(":")
        for m in _BOX_RE.finditer(spec):
            lo = Fraction(m.group(2).strip())
            hi = Fraction(m.group(3).strip())
            strategy.set_box(mode_name.strip(), m.group(1), Interval(lo, hi))
        return
    if line.startswith("site "):
        site_id, _, choice = line[5:].partition(":")
        strategy.set_site(site_id.strip(), _parse_strategy_choice(choice.strip(), lineno))
        return
    kind, _, choice = line.partition(":")
    kind = kind.strip()
    strategy.set_default(kind, _parse_strategy_choice(choice.strip(), lineno))


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


# --- serialization -------------------------------------------------------------


def _pred_text(p: Predicate) -> str:
    return to_pred_string(p)


def serialize_system(system: HybridSystem, unsafe: dict | None = None) -> str:
    lines = [f"system {system.name}", "vars " + " ".join(system.variables), ""]
    for mode_name in system.modes:
        cs = system.modes[mode_name]
        lines.append(f"mode {mode_name}")
        lines.append(f"  init: {_pred_text(cs.init)}")
        lines.append(f"  domain: {_pred_text(cs.domain)}")
        for v in system.variables:
            lines.append(f"  flow {v}' = {ex.to_string(cs.field.rhs[v])}")
        lines.append("")
    for t in system.transitions:
        lines.append(f"jump {t.source} -> {t.target}")
        lines.append(f"  guard: {_pred_text(t.guard)}")
        for var in system.variables:
            if var in t.reset:
                lines.append(f"  reset {var}' := {ex.to_string(t.reset[var])}")
        for var in t.reset:
            if var not in system.variables:
                lines.append(f"  reset {var}' := {ex.to_string(t.reset[var])}")
        if t.constraint != TRUE:
            lines.append(f"  constraint: {_pred_text(t.constraint)}")
        if t.free:
            lines.append("  free " + " ".join(t.free))
        lines.append("")
    for mode_name, pred in (unsafe or {}).items():
        lines.append(f"unsafe {mode_name}: {_pred_text(pred)}")
    return "\n".join(lines).rstrip() + "\n"


def serialize_result(result: AbstractionResult, unsafe: dict | None = None) -> str:
    out = [serialize_system(result.system, unsafe).rstrip(), ""]
    out.append("ledger")
    for entry in result.ledger:
        out.append(f"  {entry.name} = {ex.to_string(entry.definition)}")
    out.append("")
    for mode_name, theta in result.maps.items():
        comps = ", ".join(ex.to_string(c) for c in theta.components)
        out.append(f"map {mode_name}: {comps}")
    out.append("")
    out.append("# strategy audit")
    for record in result.audit:
        out.append(f"#   {record!r}")
    return "\n".join(out).rstrip() + "\n"


def parse_result(text: str) -> AbstractionResult:
    """Rebuild an AbstractionResult from its native serialization.  The
    audit trail is comments-only and reports are not recomputed; equality
    of results compares system, maps and ledger."""
    model = parse_model(text)
    entries = getattr(model, "ledger_entries", [])
    raw_maps = getattr(model, "maps", {})
    if not raw_maps:
        raise ValidationError("not an abstraction result: missing map sections")
    ledger = ReplacementLedger(reserved=set(model.system.variables))
    for entry_name, definition in entries:
        key = canonical(definition)
        ledger.entries.append(LedgerEntry(entry_name, key))
        ledger.memo[key] = entry_name
        ledger.reserved.add(entry_name)
    fresh = [e.name for e in ledger.entries]
    originals = [v for v in model.system.variables if v not in fresh]
    maps = {}
    referenced: dict[str, set] = {}
    for mode_name, comps in raw_maps.items():
        defs = comps[len(originals):]
        maps[mode_name] = SimulationMap(originals, fresh, defs)
        referenced[mode_name] = {
            name for name, d in zip(fresh, defs) if d != ex.ZERO
        }
    return AbstractionResult(model.system, maps, ledger, referenced, [], {})
