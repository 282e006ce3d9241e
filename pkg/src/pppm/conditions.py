"""Condition predicates attached to permission grants.

Grammar:

    cond   := chain ("and" chain)*
    chain  := operand (relop operand)+
    relop  := "<" | "<=" | ">" | ">=" | "==" | "!="

Operands are variable names, numbers, times of day (HH:MM, 24h), quoted
strings, or the boolean literals ``true``/``false``.  ``now`` is an ordinary
variable reserved for the caller-supplied current time; the library never
reads a clock.

Evaluation is three-valued.  A comparison involving an unbound variable is
Unknown; chains and conjunctions combine by Kleene logic, so a chain with a
definitively false link is False even if another link is Unknown.  A type
clash between two bound operands is an authoring bug and raises
ConditionTypeError instead of returning Unknown.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union


class ConditionError(ValueError):
    """Base class for condition parsing and evaluation failures."""


class ConditionSyntaxError(ConditionError):
    """Malformed condition text; `offset` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ConditionTypeError(ConditionError):
    """Operands of incompatible types were compared."""


class TriBool(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @staticmethod
    def from_bool(value: bool) -> "TriBool":
        return TriBool.TRUE if value else TriBool.FALSE


def tri_and(a: TriBool, b: TriBool) -> TriBool:
    if a is TriBool.FALSE or b is TriBool.FALSE:
        return TriBool.FALSE
    if a is TriBool.UNKNOWN or b is TriBool.UNKNOWN:
        return TriBool.UNKNOWN
    return TriBool.TRUE


@dataclass(frozen=True, order=True)
class TimeOfDay:
    """Minutes past midnight; compares chronologically."""

    minutes: int

    def __str__(self) -> str:
        return f"{self.minutes // 60:02d}:{self.minutes % 60:02d}"


@dataclass(frozen=True)
class Var:
    name: str


# A literal value as it appears in conditions or evaluation contexts.
Value = Union[int, float, str, bool, TimeOfDay]
Operand = Union[Var, int, float, str, bool, TimeOfDay]

# Bindings supplied by the caller when evaluating.
EvalContext = Mapping[str, Value]

RELOPS = ("<", "<=", ">", ">=", "==", "!=")
ORDER_OPS = frozenset(("<", "<=", ">", ">="))


@dataclass(frozen=True)
class Chain:
    """operand relop operand [relop operand ...] -- pairwise conjunction."""

    operands: tuple[Operand, ...]
    ops: tuple[str, ...]

    def pairs(self) -> Iterator[tuple[Operand, str, Operand]]:
        for i, op in enumerate(self.ops):
            yield self.operands[i], op, self.operands[i + 1]


@dataclass(frozen=True)
class ConditionExpr:
    """Conjunction of comparison chains."""

    chains: tuple[Chain, ...]


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<time>\d{1,2}:\d{2})
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<op><=|>=|==|!=|<|>)
    """,
    re.VERBOSE,
)


def _type_class(value: Operand) -> str | None:
    """Static type of an operand; None when not statically known."""
    if isinstance(value, Var):
        return "time" if value.name == "now" else None
    if type(value) is bool:
        return "bool"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, TimeOfDay):
        return "time"
    if isinstance(value, str):
        return "string"
    raise ConditionTypeError(f"unsupported value type {type(value).__name__}")


def _lex(text: str) -> list[tuple[str, object, int]]:
    tokens: list[tuple[str, object, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ConditionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        raw = m.group()
        if kind == "ws":
            pass
        elif kind == "time":
            hh, mm = raw.split(":")
            if int(hh) > 23 or int(mm) > 59:
                raise ConditionSyntaxError(f"invalid time of day {raw!r}", pos)
            tokens.append(("lit", TimeOfDay(int(hh) * 60 + int(mm)), pos))
        elif kind == "number":
            tokens.append(("lit", float(raw) if "." in raw else int(raw), pos))
        elif kind == "ident":
            word = raw.lower()
            if word == "and":
                tokens.append(("and", word, pos))
            elif word in ("true", "false"):
                tokens.append(("lit", word == "true", pos))
            else:
                # Variable names are case-insensitive; canonical form is lower.
                tokens.append(("var", word, pos))
        elif kind == "string":
            body = raw[1:-1]
            try:
                value = re.sub(r"\\(.)", lambda e: _unescape(e.group(1), pos), body)
            except ConditionSyntaxError:
                raise
            tokens.append(("lit", value, pos))
        else:
            tokens.append(("op", raw, pos))
        pos = m.end()
    tokens.append(("eof", "", pos))
    return tokens


def _unescape(ch: str, offset: int) -> str:
    if ch in ('"', "\\"):
        return ch
    raise ConditionSyntaxError(f"unsupported escape \\{ch}", offset)


def parse_condition(text: str) -> ConditionExpr:
    """Parse condition text; raises ConditionSyntaxError / ConditionTypeError."""
    tokens = _lex(text)
    idx = 0

    def peek() -> tuple[str, object, int]:
        return tokens[idx]

    def take_operand() -> Operand:
        nonlocal idx
        kind, value, pos = tokens[idx]
        if kind == "var":
            idx += 1
            return Var(value)  # type: ignore[arg-type]
        if kind == "lit":
            idx += 1
            return value  # type: ignore[return-value]
        raise ConditionSyntaxError("expected an operand", pos)

    chains: list[Chain] = []
    while True:
        operands = [take_operand()]
        ops: list[str] = []
        kind, value, pos = peek()
        if kind != "op":
            raise ConditionSyntaxError("expected a comparison operator", pos)
        while kind == "op":
            idx += 1
            ops.append(value)  # type: ignore[arg-type]
            operands.append(take_operand())
            _check_pair_types(operands[-2], value, operands[-1], pos)  # type: ignore[arg-type]
            kind, value, pos = peek()
        chains.append(Chain(tuple(operands), tuple(ops)))
        if kind == "and":
            idx += 1
            continue
        if kind == "eof":
            break
        raise ConditionSyntaxError("expected 'and' or end of condition", pos)
    return ConditionExpr(tuple(chains))


def _check_pair_types(left: Operand, op: str, right: Operand, offset: int) -> None:
    lt, rt = _type_class(left), _type_class(right)
    if lt is not None and rt is not None and lt != rt:
        raise ConditionSyntaxError(f"cannot compare {lt} to {rt}", offset)
    if op in ORDER_OPS and ("string" in (lt, rt) or "bool" in (lt, rt)):
        raise ConditionSyntaxError(
            f"ordering comparison {op!r} is not defined for strings or booleans",
            offset,
        )


def render_condition(expr: ConditionExpr) -> str:
    """Canonical text form; parse(render(e)) == e."""
    return " and ".join(_render_chain(chain) for chain in expr.chains)


def _render_chain(chain: Chain) -> str:
    parts = [_render_operand(chain.operands[0])]
    for op, operand in zip(chain.ops, chain.operands[1:]):
        parts.append(op)
        parts.append(_render_operand(operand))
    return " ".join(parts)


def _render_operand(operand: Operand) -> str:
    if isinstance(operand, Var):
        return operand.name
    if type(operand) is bool:
        return "true" if operand else "false"
    if isinstance(operand, (int, float, TimeOfDay)):
        return str(operand)
    escaped = operand.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def evaluate(expr: ConditionExpr, ctx: EvalContext) -> TriBool:
    """Three-valued evaluation of `expr` under the bindings in `ctx`."""
    result = TriBool.TRUE
    for chain in expr.chains:
        for left, op, right in chain.pairs():
            result = tri_and(result, _evaluate_pair(left, op, right, ctx))
    return result


_MISSING = object()


def _evaluate_pair(left: Operand, op: str, right: Operand, ctx: EvalContext) -> TriBool:
    lv = ctx.get(left.name, _MISSING) if isinstance(left, Var) else left
    rv = ctx.get(right.name, _MISSING) if isinstance(right, Var) else right
    if lv is _MISSING or rv is _MISSING:
        return TriBool.UNKNOWN
    lt, rt = _type_class(lv), _type_class(rv)
    if lt != rt:
        raise ConditionTypeError(f"cannot compare {lt} to {rt}")
    if op in ORDER_OPS and lt in ("string", "bool"):
        raise ConditionTypeError(f"ordering comparison {op!r} is not defined for {lt}s")
    if op == "==":
        return TriBool.from_bool(lv == rv)
    if op == "!=":
        return TriBool.from_bool(lv != rv)
    if op == "<":
        return TriBool.from_bool(lv < rv)  # type: ignore[operator]
    if op == "<=":
        return TriBool.from_bool(lv <= rv)  # type: ignore[operator]
    if op == ">":
        return TriBool.from_bool(lv > rv)  # type: ignore[operator]
    return TriBool.from_bool(lv >= rv)  # type: ignore[operator]
