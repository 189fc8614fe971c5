"""Command-line frontend.

Subcommands: transform, check, simulate, verify-invariant,
emit-constraints, export.  Every command prints a machine-readable block
of `key: value` lines.  Exit codes: 0 success, 1 parse/validation error,
2 check failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import expr as ex
from .errors import DomainExit, PolyrecastError, ValidationError
from .export import TemplateSpec, emit_constraints, export_system
from .hybrid import abstract_ehs, map_unsafe
from .modelfile import load_model, parse_result, serialize_result
from .parser import parse
from .predicates import Atom, FALSE, to_pred_string
from .simulate import (
    check_invariant_sampled,
    check_trajectory_equivalence,
    run_hybrid,
    sample_region,
)


def _report(lines: dict, verbose_text: list[str] | None = None, verbose: bool = False):
    for key, value in lines.items():
        print(f"{key}: {value}")
    if verbose and verbose_text:
        print()
        for line in verbose_text:
            print(line)


def _write_output(path: str | None, content: str, report: dict):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)
        report["output"] = path
    else:
        sys.stdout.write(content)


def _load(path: str):
    try:
        return load_model(path)
    except OSError as err:
        raise ValidationError(str(err)) from None


def _load_invariant(path: str) -> ex.Expr:
    with open(path, "r", encoding="utf-8") as fh:
        body = " ".join(
            line.split("#", 1)[0].strip() for line in fh if line.split("#", 1)[0].strip()
        )
    return parse(body)


def cmd_transform(args) -> int:
    model = _load(args.input)
    result = abstract_ehs(model.system, model.strategy, model.unsafe or None)
    mapped_unsafe = map_unsafe(model.unsafe, result, model.strategy) if model.unsafe else {}
    content = serialize_result(result, mapped_unsafe)
    report = {
        "command": "transform",
        "input": args.input,
        "fresh-variables": len(result.ledger),
        "ledger": "; ".join(str(e) for e in result.ledger),
    }
    for q, rep in result.reports.items():
        report[f"check-{q}"] = "pass" if rep.ok else "fail"
    _write_output(args.output, content, report)
    report["status"] = "ok" if result.ok else "symbolic-check-failed"
    verbose = []
    for q, rep in result.reports.items():
        verbose.extend(f"[{q}] {line}" for line in rep.lines())
    verbose.extend(f"audit: {record!r}" for record in result.audit)
    _report(report, verbose, args.verbose)
    if not result.ok:
        for q, rep in result.reports.items():
            for failure in rep.failures():
                print(f"residual[{q}.{failure.variable}]: "
                      f"{ex.to_string(failure.residual) if failure.residual else failure.message}")
        return 2
    return 0


def cmd_check(args) -> int:
    model = _load(args.original)
    try:
        with open(args.abstracted, "r", encoding="utf-8") as fh:
            result = parse_result(fh.read())
    except (OSError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    report = {
        "command": "check",
        "original": args.original,
        "abstracted": args.abstracted,
        "points": args.points,
        "time": args.time,
        "step": args.step,
        "tol": args.tol,
        "seed": args.seed,
    }
    worst = 0.0
    failures = 0
    domain_exits = 0
    for q, cs in model.system.modes.items():
        theta = result.maps.get(q)
        if theta is None:
            print(f"error: abstracted file has no map for mode {q!r}", file=sys.stderr)
            return 1
        boxes = model.strategy.boxes.get(q)
        try:
            points = sample_region(cs.init, cs.variables, args.points, rng, boxes)
        except PolyrecastError:
            report[f"mode-{q}"] = "skipped (no sampleable initial set)"
            continue
        poly_field = result.system.modes[q].field
        deviations = []
        for row in points:
            x0 = dict(zip(cs.variables, row))
            try:
                rep = check_trajectory_equivalence(
                    cs.field, poly_field, theta, x0,
                    duration=args.time, step=args.step, tol=args.tol,
                )
            except DomainExit as err:
                domain_exits += 1
                continue
            deviations.append(rep.max_deviation)
            if not rep.ok:
                failures += 1
        if deviations:
            worst = max(worst, max(deviations))
            report[f"mode-{q}"] = f"max deviation {max(deviations):.3e} over {len(deviations)} runs"
    report["domain-exits"] = domain_exits
    report["max-deviation"] = f"{worst:.3e}"
    report["status"] = "ok" if failures == 0 else f"{failures} runs exceeded tol"
    _report(report, verbose=args.verbose)
    return 0 if failures == 0 else 2


def cmd_simulate(args) -> int:
    model = _load(args.input)
    system = model.system
    mode = args.mode or system.mode_names()[0]
    if args.start:
        assignments = dict(part.split("=") for part in args.start.split(","))
        x0 = {k.strip(): float(v) for k, v in assignments.items()}
    else:
        rng = np.random.default_rng(args.seed)
        cs = system.modes[mode]
        pts = sample_region(cs.init, cs.variables, 1, rng, model.strategy.boxes.get(mode))
        x0 = dict(zip(cs.variables, pts[0]))
    trace = run_hybrid(system, mode, x0, args.time, args.step, args.jumps)
    report = {
        "command": "simulate",
        "input": args.input,
        "mode": mode,
        "start": ", ".join(f"{k}={v:.6g}" for k, v in x0.items()),
        "time": args.time,
        "step": args.step,
        "jumps": len(trace.jumps),
        "seed": args.seed,
    }
    if args.energy:
        energy = parse(args.energy)
        drift = 0.0
        for jump in trace.jumps:
            pre = ex.evaluate(energy, jump.pre)
            post = ex.evaluate(energy, jump.post)
            drift = max(drift, abs(post - pre) / max(1.0, abs(pre)))
        report["energy-expr"] = args.energy
        report["energy-max-relative-jump-drift"] = f"{drift:.3e}"
    final = trace.final_state()
    report["final"] = ", ".join(f"{k}={final[k]:.6g}" for k in system.variables)
    _write_output(args.output, trace.to_csv(), report)
    report["status"] = "ok"
    _report(report, verbose=args.verbose)
    return 0


def cmd_verify_invariant(args) -> int:
    model = _load(args.input)
    mode = args.mode or model.system.mode_names()[0]
    cs = model.system.modes[mode]
    invariant = Atom(_load_invariant(args.invariant), "<=")
    unsafe = model.unsafe.get(mode, FALSE)
    boxes = model.strategy.boxes.get(mode)
    report_obj = check_invariant_sampled(
        cs, invariant, unsafe, samples=args.samples, slack=args.slack,
        seed=args.seed, boxes=boxes,
    )
    report = {
        "command": "verify-invariant",
        "input": args.input,
        "invariant": args.invariant,
        "mode": mode,
        "samples": args.samples,
        "slack": args.slack,
        "seed": args.seed,
        "init-margin": f"{report_obj.init_margin:.6g}",
        "flow-margin": f"{report_obj.flow_margin:.6g} (informational)",
        "separation-margin": f"{report_obj.separation_margin:.6g}",
    }
    ok = report_obj.init_ok and report_obj.separation_ok
    report["status"] = (
        "no violation found" if ok else "violation or insufficient margin"
    )
    _report(report, report_obj.lines(), args.verbose)
    return 0 if ok else 2


def cmd_emit_constraints(args) -> int:
    model = _load(args.input)
    result = abstract_ehs(model.system, model.strategy, model.unsafe or None)
    if not result.ok:
        print("error: abstraction failed its symbolic check", file=sys.stderr)
        return 2
    mapped = map_unsafe(model.unsafe, result, model.strategy) if model.unsafe else {}
    tmpl = TemplateSpec(args.template_degree, args.template_scope)
    doc = emit_constraints(result, mapped, tmpl)
    report = {
        "command": "emit-constraints",
        "input": args.input,
        "template-degree": args.template_degree,
        "template-scope": args.template_scope,
        "parameters": len(doc.parameters),
    }
    _write_output(args.output, doc.text, report)
    report["status"] = "ok"
    _report(report, doc.notes, args.verbose)
    return 0


def cmd_export(args) -> int:
    model = _load(args.input)
    result = abstract_ehs(model.system, model.strategy, model.unsafe or None)
    if not result.ok:
        print("error: abstraction failed its symbolic check", file=sys.stderr)
        return 2
    mapped = map_unsafe(model.unsafe, result, model.strategy) if model.unsafe else {}
    content = export_system(result, args.format, mapped)
    report = {
        "command": "export",
        "input": args.input,
        "format": args.format,
    }
    _write_output(args.output, content, report)
    report["status"] = "ok"
    _report(report, verbose=args.verbose)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyrecast",
        description="Recast hybrid systems with elementary functions into polynomial form",
    )
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--output", help="write the artifact to this file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("transform", help="recast a model to polynomial form")
    p.add_argument("input")
    common(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("check", help="numerically validate an abstraction")
    p.add_argument("original")
    p.add_argument("abstracted")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--time", type=float, default=2.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-6)
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("simulate", help="run a hybrid execution")
    p.add_argument("input")
    p.add_argument("--mode")
    p.add_argument("--start", help="comma-separated assignments, e.g. x=0,y=5")
    p.add_argument("--time", type=float, default=2.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--jumps", type=int, default=100)
    p.add_argument("--energy", help="expression reported across jumps")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify-invariant", help="sampled falsification of an invariant")
    p.add_argument("input")
    p.add_argument("--invariant", required=True)
    p.add_argument("--mode")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--slack", type=float, default=1e-4)
    common(p)
    p.set_defaults(fn=cmd_verify_invariant)

    p = sub.add_parser("emit-constraints", help="write the invariant synthesis problem")
    p.add_argument("input")
    p.add_argument("--template-degree", type=int, default=2)
    p.add_argument(
        "--template-scope",
        choices=[TemplateSpec.ORIGINALS, TemplateSpec.WITH_FRESH],
        default=TemplateSpec.ORIGINALS,
    )
    common(p)
    p.set_defaults(fn=cmd_emit_constraints)

    p = sub.add_parser("export", help="write the abstraction in an interchange format")
    p.add_argument("input")
    p.add_argument(
        "--format",
        choices=["native", "smt-like", "model-checker-style"],
        default="native",
    )
    common(p)
    p.set_defaults(fn=cmd_export)
    parser._command_parsers = {name: sp for name, sp in sub.choices.items()}
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            defaults = json.load(fh)
        command_parser = parser._command_parsers[args.cmd]
        for key, value in defaults.items():
            attr = key.replace("-", "_")
            # config values stand in for defaults; explicit flags win
            if hasattr(args, attr) and command_parser.get_default(attr) == getattr(args, attr):
                setattr(args, attr, value)
    try:
        return args.fn(args)
    except PolyrecastError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
