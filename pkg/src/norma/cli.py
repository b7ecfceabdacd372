"""Command-line entry point: ``norma <command> FILE [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Sequence

from .abstract_semantics import verify_trace
from .abstraction import (
    FORMATS,
    NEG_INF_POLICIES,
    AbstractionOptions,
    abstract_program,
    emit_cost_relations,
)
from .errors import EvaluationError, NormaError, SoundnessViolation
from .inference import InferenceOptions, infer_relevant_types
from .interpreter import format_value, run, run_report, value_from_json
from .monomorphize import monomorphize, translate_value
from .norms import NormKind, norm_closed, term_size
from .parser import parse, parse_term, pretty
from .syntax import INT, DataType, Program, is_closed
from .typecheck import typecheck

NORMS = {"termsize": NormKind.TERM_SIZE, "sum": NormKind.SUM, "max": NormKind.MAX}

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    norm: NormKind = NormKind.MAX
    inference: bool = True
    inference_mode: str = "default"
    annotated: bool = False
    mono: bool = False
    neg_inf: str = "keep"
    linearize: bool = False
    max_steps: int = 10_000
    budget: int | None = None
    fmt: str = "text"

    def __post_init__(self):
        if self.fmt == "cofloco-like" and not self.linearize:
            raise UsageError("cofloco-like output needs --linearize")
        if self.fmt == "cofloco-like" and self.neg_inf == "keep":
            raise UsageError("cofloco-like output needs a constant --neg-inf policy (min-const or zero)")

    @property
    def abstraction(self) -> AbstractionOptions:
        return AbstractionOptions(
            kind=self.norm,
            annotated=self.annotated,
            inference=self.inference,
            inference_options=InferenceOptions(self.inference_mode),
            neg_inf=self.neg_inf,
            linearize=self.linearize,
        )


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _color() -> bool:
    return os.environ.get("NORMA_COLOR", "1") not in ("0", "no", "false") and sys.stderr.isatty()


def _diag(label: str, message: str) -> None:
    prefix = f"\033[31m{label}:\033[0m" if _color() else f"{label}:"
    print(f"{prefix} {message}", file=sys.stderr)


def _out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load(path: str) -> Program:
    program = parse(_read(path), path)
    typecheck(program)
    return program


def _analysis_program(program: Program, mono: bool) -> Program:
    if mono:
        return monomorphize(program)
    if program.is_polymorphic():
        raise UsageError("the program is polymorphic; rerun with --mono")
    return program


def _args(text: str, program: Program, entry: str) -> tuple:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--args is not valid JSON: {e.msg}") from None
    if not isinstance(data, list):
        raise UsageError("--args must be a JSON list")
    try:
        values = tuple(value_from_json(a) for a in data)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not program.has_proc(entry):
        raise UsageError(f"unknown entry procedure {entry!r}")
    for v in values:
        if isinstance(v, int):
            continue
        stack = [v]
        while stack:
            c = stack.pop()
            if not isinstance(c, int):
                if not program.has_ctor(c.name):
                    raise UsageError(f"unknown constructor {c.name!r} in --args")
                stack.extend(c.args)
    return values


def _config(ns) -> CliConfig:
    fmt = getattr(ns, "format", "text")
    neg_inf = getattr(ns, "neg_inf", None) or ("min-const" if fmt == "cofloco-like" else "keep")
    return CliConfig(
        norm=NORMS[getattr(ns, "norm", "max")],
        inference=not getattr(ns, "no_inference", False),
        inference_mode="literal" if getattr(ns, "literal", False) else "default",
        annotated=getattr(ns, "annotated", False),
        mono=getattr(ns, "mono", False),
        neg_inf=neg_inf,
        linearize=getattr(ns, "linearize", False),
        max_steps=getattr(ns, "max_steps", 10_000),
        budget=getattr(ns, "budget", None),
        fmt=fmt,
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(ns) -> int:
    program = _load(ns.file)
    typed = typecheck(program)
    for w in typed.warnings:
        _diag("warning", w)
    _out(f"ok: {len(program.datas)} data type(s), {len(program.procs)} procedure(s), {program.n_rules} rule(s)")
    return EXIT_OK


def cmd_run(ns) -> int:
    cfg = _config(ns)
    program = _load(ns.file)
    args = _args(ns.args, program, ns.entry)
    trace = run(program, ns.entry, args, max_steps=cfg.max_steps, budget=cfg.budget)
    if ns.json:
        _out(json.dumps(run_report(trace), ensure_ascii=False))
        return EXIT_OK
    outs = ", ".join(f"{k}: {format_value(v)}" for k, v in trace.outputs.items())
    _out(f"outputs: {{{outs}}}")
    _out(f"steps: {len(trace.steps)}")
    _out(f"cost: {trace.cost}")
    if ns.trace:
        _out(" ".join(str(d) for d in trace.decorations))
    return EXIT_OK


def cmd_infer(ns) -> int:
    cfg = _config(ns)
    program = _analysis_program(_load(ns.file), cfg.mono)
    result = infer_relevant_types(program, InferenceOptions(cfg.inference_mode))
    data = result.to_json()
    if ns.json:
        _out(json.dumps({**data, "iterations": result.iterations}, ensure_ascii=False))
        return EXIT_OK
    for r, entry in zip(program.rules, data["rules"]):
        _out(f"rule {entry['index']} ({r.proc}):")
        for x, types in entry["vars"].items():
            _out(f"  {x}: {{{', '.join(types)}}}")
    _out(f"iterations: {result.iterations}")
    return EXIT_OK


def cmd_abstract(ns) -> int:
    cfg = _config(ns)
    program = _analysis_program(_load(ns.file), cfg.mono)
    ap = abstract_program(program, cfg.abstraction)
    _out(emit_cost_relations(ap, cfg.fmt))
    return EXIT_OK


def cmd_verify(ns) -> int:
    cfg = _config(ns)
    source = _load(ns.file)
    program = _analysis_program(source, cfg.mono)
    args = _args(ns.args, source, ns.entry)
    if cfg.mono and source.is_polymorphic():
        proc = source.proc(ns.entry)
        if proc.type_params():
            raise UsageError(f"entry {ns.entry!r} is polymorphic; pick a monomorphic entry")
        args = tuple(translate_value(v, t, source) for v, t in zip(args, proc.in_types))
    trace = run(program, ns.entry, args, max_steps=cfg.max_steps, budget=cfg.budget)
    report = verify_trace(trace, program, cfg.abstraction)
    if ns.json:
        _out(json.dumps(report.to_json(), ensure_ascii=False))
    elif report.ok:
        _out(f"verified: {len(report.steps)} step(s)")
    else:
        _out(f"violation at step {report.failing_step}")
    return EXIT_OK if report.ok else EXIT_FINDING


def cmd_mono(ns) -> int:
    _out(pretty(monomorphize(_load(ns.file))))
    return EXIT_OK


def _parse_type(name: str, program: Program):
    if name == "Int":
        return INT
    if not program.has_data(name):
        raise UsageError(f"unknown type {name!r}")
    if program.data(name).params:
        raise UsageError(f"type {name!r} is polymorphic")
    return DataType(name)


def cmd_measure(ns) -> int:
    program = _load(ns.file)
    term = parse_term(ns.term)
    if not is_closed(term):
        raise UsageError("--term must be a closed value")
    stack = [term]
    while stack:
        c = stack.pop()
        if not isinstance(c, int):
            if not program.has_ctor(c.name):
                raise UsageError(f"unknown constructor {c.name!r}")
            stack.extend(c.args)
    kind = NORMS[ns.norm]
    if kind is NormKind.TERM_SIZE:
        _out(str(term_size(term)))
        return EXIT_OK
    value = norm_closed(term, _parse_type(ns.type, program), kind, program)
    _out("-inf" if value == float("-inf") else str(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="norma", description="Typed-norm size analysis for rule-based programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file")
        return p

    def analysis(p, norm_required: bool):
        p.add_argument("--norm", choices=sorted(NORMS), required=norm_required, default="max")
        p.add_argument("--no-inference", action="store_true", help="use every constituent type")
        p.add_argument("--literal", action="store_true", help="literal inference transfer table")
        p.add_argument("--annotated", action="store_true", help="context-sensitive (annotated) norms")
        p.add_argument("--mono", action="store_true", help="monomorphize first")

    def execution(p):
        p.add_argument("--entry", required=True)
        p.add_argument("--args", required=True, help='JSON list, e.g. [["Cons", 2, ["Nil"]]]')
        p.add_argument("--budget", type=_positive)
        p.add_argument("--max-steps", type=_positive, default=10_000)
        p.add_argument("--json", action="store_true")

    p = add("check", "parse and typecheck")
    p.set_defaults(func=cmd_check)

    p = add("run", "execute a procedure")
    execution(p)
    p.add_argument("--trace", action="store_true", help="print the decoration sequence")
    p.set_defaults(func=cmd_run)

    p = add("infer", "relevant-type inference")
    p.add_argument("--json", action="store_true")
    p.add_argument("--literal", action="store_true", help="literal inference transfer table")
    p.add_argument("--mono", action="store_true", help="monomorphize first")
    p.set_defaults(func=cmd_infer)

    p = add("abstract", "size abstraction")
    analysis(p, norm_required=True)
    p.add_argument("--neg-inf", choices=NEG_INF_POLICIES)
    p.add_argument("--linearize", action="store_true", help="replace max by auxiliary variables")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.set_defaults(func=cmd_abstract)

    p = add("verify", "replay a concrete run in the abstract semantics")
    analysis(p, norm_required=True)
    execution(p)
    p.set_defaults(func=cmd_verify)

    p = add("mono", "print the monomorphized program")
    p.set_defaults(func=cmd_mono)

    p = add("measure", "norm of a closed value")
    p.add_argument("--term", required=True)
    p.add_argument("--type", default="Int")
    p.add_argument("--norm", choices=sorted(NORMS), required=True)
    p.set_defaults(func=cmd_measure)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return ns.func(ns)
    except UsageError as e:
        _diag("error", str(e))
        return EXIT_USAGE
    except (EvaluationError, SoundnessViolation) as e:
        _diag(type(e).__name__, str(e))
        return EXIT_FINDING
    except NormaError as e:
        _diag(type(e).__name__, str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
