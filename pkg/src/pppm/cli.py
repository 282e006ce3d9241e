"""Command-line front end: check, lint, query, render, report.

Exit codes:
    0  success (including Deny query decisions; decisions are data)
    1  validation errors in the policy
    2  lint findings at error severity (warnings too with --deny-warnings)
    3  parse error
    4  usage error (bad flags, unknown ids, unreadable files)

Output is UTF-8 with LF endings and contains no timestamps or absolute paths,
so repeated invocations are byte-identical.  Setting PPPM_NO_COLOR (or piping
stdout) disables the severity coloring of `lint`.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .conditions import ConditionError, TimeOfDay, Value
from .dsl import LoweringError, ParseError, lower, parse_policy
from .lints import LintConfig, RULES_BY_ID, format_findings, run_lints
from .model import PolicyModel, UnknownEntityError
from .query import QueryEvaluationError, can_access
from .render import RenderOptions, emit_graph, emit_tables

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_LINT = 2
EXIT_PARSE = 3
EXIT_USAGE = 4

_COLORS = {"error": "\x1b[31m", "warning": "\x1b[33m", "info": "\x1b[36m"}
_RESET = "\x1b[0m"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pppm", description="Privacy policy permission model tool")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_check = sub.add_parser("check", help="parse and validate a policy file")
    p_check.add_argument("file")

    p_lint = sub.add_parser("lint", help="run the gap-analysis lints")
    p_lint.add_argument("file")
    p_lint.add_argument(
        "--rules",
        action="append",
        default=None,
        metavar="IDS",
        help="comma-separated rule ids to enable (default: all)",
    )
    p_lint.add_argument(
        "--deny-warnings",
        action="store_true",
        help="exit 2 on warnings as well as errors",
    )
    p_lint.add_argument(
        "--format",
        choices=("text", "tsv"),
        default="text",
        dest="fmt",
    )

    p_query = sub.add_parser("query", help="ask whether a role may access an attribute")
    p_query.add_argument("file")
    p_query.add_argument("--role", required=True)
    p_query.add_argument("--attribute", required=True)
    p_query.add_argument("--purpose", default=None)
    p_query.add_argument(
        "--ctx",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="context binding; value is an integer, decimal, HH:MM, true/false, or quoted string",
    )

    p_render = sub.add_parser("render", help="emit the layered diagram as DOT text")
    p_render.add_argument("file")
    p_render.add_argument(
        "--layers",
        default="all",
        help="comma-separated subset of roles,purposes,attributes,role-purpose,purpose-attribute,all",
    )
    p_render.add_argument("--no-legend", action="store_true")
    p_render.add_argument("--no-group-clusters", action="store_true")
    p_render.add_argument("--out", default=None)

    p_report = sub.add_parser("report", help="emit the tabular report")
    p_report.add_argument("file")
    p_report.add_argument("--out", default=None)

    return parser


def _load_model(path: str) -> PolicyModel:
    """Read, parse, and lower a policy file; raises _CliExit on failure."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise _CliExit(EXIT_USAGE, f"cannot read {path}: {exc.strerror}")
    try:
        decls = parse_policy(text)
    except ParseError as exc:
        raise _CliExit(EXIT_PARSE, f"{path}:{exc}")
    try:
        return lower(decls)
    except LoweringError as exc:
        lines = [f"{path}:{d.span}: {d.message}" for d in exc.diagnostics]
        raise _CliExit(EXIT_VALIDATION, "\n".join(lines))


class _CliExit(Exception):
    def __init__(self, code: int, message: str = "") -> None:
        super().__init__(message)
        self.code = code
        self.message = message


def _parse_ctx_value(text: str) -> Value:
    if text in ("true", "false"):
        return text == "true"
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    if ":" in text:
        hh, _, mm = text.partition(":")
        if hh.isdigit() and mm.isdigit() and int(hh) <= 23 and int(mm) <= 59:
            return TimeOfDay(int(hh) * 60 + int(mm))
        raise UsageError(f"invalid time of day {text!r}")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise UsageError(
            f"invalid context value {text!r} "
            "(expected integer, decimal, HH:MM, true/false, or a quoted string)"
        )


def _parse_ctx(bindings: list[str]) -> dict[str, Value]:
    ctx: dict[str, Value] = {}
    for binding in bindings:
        name, eq, value = binding.partition("=")
        if not eq or not name:
            raise UsageError(f"invalid context binding {binding!r} (expected NAME=VALUE)")
        ctx[name.lower()] = _parse_ctx_value(value)
    return ctx


def _write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise _CliExit(EXIT_USAGE, f"cannot write {out}: {exc.strerror}")


def _cmd_check(args: argparse.Namespace) -> int:
    _load_model(args.file)
    return EXIT_OK


def _cmd_lint(args: argparse.Namespace) -> int:
    model = _load_model(args.file)
    enabled = None
    if args.rules is not None:
        ids = [r for chunk in args.rules for r in chunk.split(",") if r]
        for rule_id in ids:
            if rule_id not in RULES_BY_ID:
                raise UsageError(f"unknown lint rule {rule_id!r}")
        enabled = frozenset(ids)
    findings = run_lints(model, LintConfig(enabled=enabled))
    if args.fmt == "tsv":
        sys.stdout.write(format_findings(findings))
    else:
        color = sys.stdout.isatty() and not os.environ.get("PPPM_NO_COLOR")
        for f in findings:
            severity = f.severity
            if color:
                severity = f"{_COLORS[f.severity]}{f.severity}{_RESET}"
            sys.stdout.write(f"{f.rule} {severity} {f.subject}: {f.message}\n")
    if any(f.severity == "error" for f in findings):
        return EXIT_LINT
    if args.deny_warnings and any(f.severity == "warning" for f in findings):
        return EXIT_LINT
    return EXIT_OK


def _cmd_query(args: argparse.Namespace) -> int:
    model = _load_model(args.file)
    ctx = _parse_ctx(args.ctx)
    try:
        decision = can_access(model, args.role, args.attribute, args.purpose, ctx)
    except UnknownEntityError as exc:
        raise UsageError(str(exc))
    except (QueryEvaluationError, ConditionError) as exc:
        raise UsageError(str(exc))
    sys.stdout.write(decision.describe() + "\n")
    return EXIT_OK


def _cmd_render(args: argparse.Namespace) -> int:
    model = _load_model(args.file)
    layers = tuple(part for part in args.layers.split(",") if part)
    options = RenderOptions(
        layers=layers,
        show_legend=not args.no_legend,
        cluster_groups=not args.no_group_clusters,
    )
    try:
        text = emit_graph(model, options)
    except ValueError as exc:
        raise UsageError(str(exc))
    _write_output(text, args.out)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    model = _load_model(args.file)
    _write_output(emit_tables(model), args.out)
    return EXIT_OK


_COMMANDS = {
    "check": _cmd_check,
    "lint": _cmd_lint,
    "query": _cmd_query,
    "render": _cmd_render,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (check, lint, query, render, report)")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"pppm: error: {exc}\n")
        return EXIT_USAGE
    except _CliExit as exc:
        if exc.message:
            sys.stderr.write(exc.message + "\n")
        return exc.code


if __name__ == "__main__":
    raise SystemExit(main())
