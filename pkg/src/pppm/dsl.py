"""The sectioned policy file format: parse, lower, serialize.

A policy file names the policy and then lists sections in any order:

    policy "imaginary-shop"

    roles { r1: "Manager" }
    role_hierarchy { r1 -> r2 }
    groups { g1: "Personal information" }
    attributes { d1: "Name" groups (g1) collected = yes }
    aggregations { (d6, d2) -> d7 }
    granularities { date2age: "Date2Age" }
    tasks { t1: "Identify client" reads d1 via date2age }
    purposes { p1: "Shipment" = [t1, t2] universal }
    role_purpose { r2 allowed p1 when "age > 18" }
    purpose_task_conditions { p3 task t1 when "age > 18" }
    purpose_group { p1 allowed group g1 when "consent == true" }

`#` starts a comment running to end of line.  Ids match
[A-Za-z_][A-Za-z0-9_]*; strings are double-quoted with \\" and \\\\ escapes.

Parsing produces Declarations (flat entries with source spans); `lower`
resolves ids into a validated PolicyModel, reporting every resolution problem
at once; `serialize` writes a model back in canonical form (fixed section
order, two-space indent, LF) such that lower(parse(serialize(m))) == m.

An attribute may be declared more than once under the same label; the
declarations merge (group sets union).  Contradictory `collected` flags mark
the merged attribute as conflicted, which round-trips and is surfaced by the
collection-conflict lint rather than rejected here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional, Union

from .conditions import (
    ConditionError,
    ConditionExpr,
    parse_condition,
    render_condition,
)
from .model import (
    Aggregation,
    Attribute,
    AttributeGroup,
    GranularityFn,
    PolicyModel,
    Purpose,
    PurposeGroupGrant,
    PurposeTaskCondition,
    Role,
    RoleEdge,
    RolePurposeGrant,
    Task,
    validate,
)


@dataclass(frozen=True)
class Span:
    """1-based source position range."""

    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class ParseError(ValueError):
    def __init__(self, message: str, span: Span, expected: Optional[str] = None) -> None:
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{span}: {message}{hint}")
        self.span = span
        self.expected = expected


@dataclass(frozen=True)
class LowerDiagnostic:
    message: str
    span: Span


class LoweringError(ValueError):
    def __init__(self, diagnostics: list[LowerDiagnostic]) -> None:
        super().__init__(
            "; ".join(f"{d.span}: {d.message}" for d in diagnostics) or "lowering failed"
        )
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class RoleDecl:
    id: str
    label: str
    span: Span


@dataclass(frozen=True)
class RoleEdgeDecl:
    superior: str
    inferior: str
    span: Span


@dataclass(frozen=True)
class GroupDecl:
    id: str
    label: str
    span: Span


@dataclass(frozen=True)
class AttributeDecl:
    id: str
    label: str
    groups: tuple[str, ...]
    collected: Optional[bool]
    span: Span


@dataclass(frozen=True)
class AggregationDecl:
    left: str
    right: str
    product: str
    span: Span


@dataclass(frozen=True)
class GranularityDecl:
    id: str
    description: str
    span: Span


@dataclass(frozen=True)
class TaskDecl:
    id: str
    label: str
    reads: str
    via: Optional[str]
    span: Span


@dataclass(frozen=True)
class PurposeDecl:
    id: str
    label: str
    tasks: tuple[str, ...]
    universal: bool
    span: Span


@dataclass(frozen=True)
class RolePurposeDecl:
    role: str
    purpose: str
    condition: Optional[ConditionExpr]
    span: Span


@dataclass(frozen=True)
class PurposeTaskConditionDecl:
    purpose: str
    task: str
    condition: ConditionExpr
    span: Span


@dataclass(frozen=True)
class PurposeGroupDecl:
    purpose: str
    group: str
    condition: Optional[ConditionExpr]
    span: Span


Decl = Union[
    RoleDecl,
    RoleEdgeDecl,
    GroupDecl,
    AttributeDecl,
    AggregationDecl,
    GranularityDecl,
    TaskDecl,
    PurposeDecl,
    RolePurposeDecl,
    PurposeTaskConditionDecl,
    PurposeGroupDecl,
]


@dataclass(frozen=True)
class Declarations:
    """Parsed policy file: name plus section entries in source order."""

    name: str
    entries: tuple[Decl, ...]


SECTION_NAMES = (
    "roles",
    "role_hierarchy",
    "groups",
    "attributes",
    "aggregations",
    "granularities",
    "tasks",
    "purposes",
    "role_purpose",
    "purpose_task_conditions",
    "purpose_group",
)

_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # ident, string, punct, eof
    text: str
    value: str  # unescaped content for strings, text otherwise
    span: Span


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            value_chars: list[str] = []
            i += 1
            col += 1
            while True:
                if i >= n or text[i] == "\n":
                    raise ParseError(
                        "unterminated string", Span(start_line, start_col, line, col)
                    )
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in ('"', "\\"):
                        raise ParseError(
                            "unsupported escape in string",
                            Span(line, col, line, col + 2),
                        )
                    value_chars.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                value_chars.append(c)
                i += 1
                col += 1
            value = "".join(value_chars)
            tokens.append(
                _Token("string", value, value, Span(start_line, start_col, line, col))
            )
            continue
        m = _ID_RE.match(text, i)
        if m:
            word = m.group()
            i = m.end()
            col += len(word)
            tokens.append(
                _Token("ident", word, word, Span(start_line, start_col, line, col))
            )
            continue
        if text.startswith("->", i):
            i += 2
            col += 2
            tokens.append(
                _Token("punct", "->", "->", Span(start_line, start_col, line, col))
            )
            continue
        if ch in "{}()[]:,=":
            i += 1
            col += 1
            tokens.append(
                _Token("punct", ch, ch, Span(start_line, start_col, line, col))
            )
            continue
        raise ParseError(
            f"unexpected character {ch!r}", Span(start_line, start_col, line, col + 1)
        )
    tokens.append(_Token("eof", "", "", Span(line, col, line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def expect_punct(self, text: str) -> _Token:
        token = self.peek()
        if token.kind != "punct" or token.text != text:
            raise ParseError(f"found {_describe(token)}", token.span, expected=repr(text))
        return self.next()

    def expect_ident(self, what: str = "an identifier") -> _Token:
        token = self.peek()
        if token.kind != "ident":
            raise ParseError(f"found {_describe(token)}", token.span, expected=what)
        return self.next()

    def expect_keyword(self, word: str) -> _Token:
        token = self.peek()
        if token.kind != "ident" or token.text != word:
            raise ParseError(f"found {_describe(token)}", token.span, expected=repr(word))
        return self.next()

    def expect_string(self) -> _Token:
        token = self.peek()
        if token.kind != "string":
            raise ParseError(f"found {_describe(token)}", token.span, expected="a string")
        return self.next()

    def at_keyword(self, word: str, ahead: int = 0) -> bool:
        token = self.peek(ahead)
        return token.kind == "ident" and token.text == word

    def at_punct(self, text: str, ahead: int = 0) -> bool:
        token = self.peek(ahead)
        return token.kind == "punct" and token.text == text


def _describe(token: _Token) -> str:
    if token.kind == "eof":
        return "end of input"
    if token.kind == "string":
        return "a string"
    return repr(token.text)


def _span_between(start: Span, end: Span) -> Span:
    return Span(start.line, start.col, end.end_line, end.end_col)


def parse_policy(text: str) -> Declarations:
    """Parse policy text into declarations; raises ParseError on bad input."""
    parser = _Parser(_lex(text))
    parser.expect_keyword("policy")
    name = parser.expect_string().value
    entries: list[Decl] = []
    while True:
        token = parser.peek()
        if token.kind == "eof":
            break
        if token.kind != "ident" or token.text not in SECTION_NAMES:
            raise ParseError(
                f"found {_describe(token)}", token.span, expected="a section name"
            )
        section = parser.next().text
        parser.expect_punct("{")
        while not parser.at_punct("}"):
            entries.append(_SECTION_PARSERS[section](parser))
        parser.expect_punct("}")
    return Declarations(name, tuple(entries))


def load_policy(text: str) -> PolicyModel:
    """Parse and lower in one step."""
    return lower(parse_policy(text))


def _parse_named_decl(parser: _Parser, cls):
    ident = parser.expect_ident()
    parser.expect_punct(":")
    label = parser.expect_string()
    return cls(ident.text, label.value, _span_between(ident.span, label.span))


def _parse_role(parser: _Parser) -> RoleDecl:
    return _parse_named_decl(parser, RoleDecl)


def _parse_group(parser: _Parser) -> GroupDecl:
    return _parse_named_decl(parser, GroupDecl)


def _parse_granularity(parser: _Parser) -> GranularityDecl:
    return _parse_named_decl(parser, GranularityDecl)


def _parse_role_edge(parser: _Parser) -> RoleEdgeDecl:
    superior = parser.expect_ident()
    parser.expect_punct("->")
    inferior = parser.expect_ident()
    return RoleEdgeDecl(
        superior.text, inferior.text, _span_between(superior.span, inferior.span)
    )


def _parse_attribute(parser: _Parser) -> AttributeDecl:
    ident = parser.expect_ident()
    parser.expect_punct(":")
    label = parser.expect_string()
    end = label.span
    groups: tuple[str, ...] = ()
    collected: Optional[bool] = None
    # Both trailers are optional; two-token lookahead separates them from the
    # next declaration, whose id is always followed by ':'.
    if parser.at_keyword("groups") and parser.at_punct("(", 1):
        parser.next()
        parser.expect_punct("(")
        members = [parser.expect_ident().text]
        while parser.at_punct(","):
            parser.next()
            members.append(parser.expect_ident().text)
        end = parser.expect_punct(")").span
        groups = tuple(members)
    if parser.at_keyword("collected") and parser.at_punct("=", 1):
        parser.next()
        parser.expect_punct("=")
        flag = parser.expect_ident("'yes' or 'no'")
        if flag.text not in ("yes", "no"):
            raise ParseError(
                f"found {_describe(flag)}", flag.span, expected="'yes' or 'no'"
            )
        collected = flag.text == "yes"
        end = flag.span
    return AttributeDecl(
        ident.text, label.value, groups, collected, _span_between(ident.span, end)
    )


def _parse_aggregation(parser: _Parser) -> AggregationDecl:
    start = parser.expect_punct("(")
    left = parser.expect_ident()
    parser.expect_punct(",")
    right = parser.expect_ident()
    parser.expect_punct(")")
    parser.expect_punct("->")
    product = parser.expect_ident()
    return AggregationDecl(
        left.text, right.text, product.text, _span_between(start.span, product.span)
    )


def _parse_task(parser: _Parser) -> TaskDecl:
    ident = parser.expect_ident()
    parser.expect_punct(":")
    label = parser.expect_string()
    parser.expect_keyword("reads")
    reads = parser.expect_ident()
    end = reads.span
    via: Optional[str] = None
    if parser.at_keyword("via") and parser.peek(1).kind == "ident" and not parser.at_punct(":", 2):
        parser.next()
        fn = parser.expect_ident()
        via = fn.text
        end = fn.span
    return TaskDecl(
        ident.text, label.value, reads.text, via, _span_between(ident.span, end)
    )


def _parse_purpose(parser: _Parser) -> PurposeDecl:
    ident = parser.expect_ident()
    parser.expect_punct(":")
    label = parser.expect_string()
    end = label.span
    tasks: tuple[str, ...] = ()
    universal = False
    if parser.at_punct("="):
        parser.next()
        parser.expect_punct("[")
        members = [parser.expect_ident().text]
        while parser.at_punct(","):
            parser.next()
            members.append(parser.expect_ident().text)
        end = parser.expect_punct("]").span
        tasks = tuple(members)
    # 'universal' could also start the next declaration as an id; a following
    # ':' disambiguates.
    if parser.at_keyword("universal") and not parser.at_punct(":", 1):
        end = parser.next().span
        universal = True
    return PurposeDecl(
        ident.text, label.value, tasks, universal, _span_between(ident.span, end)
    )


def _parse_condition_string(parser: _Parser) -> ConditionExpr:
    token = parser.expect_string()
    try:
        return parse_condition(token.value)
    except ConditionError as exc:
        raise ParseError(f"invalid condition: {exc}", token.span) from exc


def _parse_role_purpose(parser: _Parser) -> RolePurposeDecl:
    role = parser.expect_ident()
    parser.expect_keyword("allowed")
    purpose = parser.expect_ident()
    end = purpose.span
    condition: Optional[ConditionExpr] = None
    if parser.at_keyword("when") and parser.peek(1).kind == "string":
        parser.next()
        end = parser.peek().span
        condition = _parse_condition_string(parser)
    return RolePurposeDecl(
        role.text, purpose.text, condition, _span_between(role.span, end)
    )


def _parse_purpose_task_condition(parser: _Parser) -> PurposeTaskConditionDecl:
    purpose = parser.expect_ident()
    parser.expect_keyword("task")
    task = parser.expect_ident()
    parser.expect_keyword("when")
    end = parser.peek().span
    condition = _parse_condition_string(parser)
    return PurposeTaskConditionDecl(
        purpose.text, task.text, condition, _span_between(purpose.span, end)
    )


def _parse_purpose_group(parser: _Parser) -> PurposeGroupDecl:
    purpose = parser.expect_ident()
    parser.expect_keyword("allowed")
    parser.expect_keyword("group")
    group = parser.expect_ident()
    end = group.span
    condition: Optional[ConditionExpr] = None
    if parser.at_keyword("when") and parser.peek(1).kind == "string":
        parser.next()
        end = parser.peek().span
        condition = _parse_condition_string(parser)
    return PurposeGroupDecl(
        purpose.text, group.text, condition, _span_between(purpose.span, end)
    )


_SECTION_PARSERS = {
    "roles": _parse_role,
    "role_hierarchy": _parse_role_edge,
    "groups": _parse_group,
    "attributes": _parse_attribute,
    "aggregations": _parse_aggregation,
    "granularities": _parse_granularity,
    "tasks": _parse_task,
    "purposes": _parse_purpose,
    "role_purpose": _parse_role_purpose,
    "purpose_task_conditions": _parse_purpose_task_condition,
    "purpose_group": _parse_purpose_group,
}


def lower(decls: Declarations) -> PolicyModel:
    """Resolve declarations into a validated PolicyModel.

    All resolution problems (unknown ids, duplicates, tasks conditioned
    outside their purpose, hierarchy/derivation cycles) are collected and
    raised together as LoweringError, each with the offending span.
    """
    diagnostics: list[LowerDiagnostic] = []

    def bad(message: str, span: Span) -> None:
        diagnostics.append(LowerDiagnostic(message, span))

    roles: list[Role] = []
    role_edge_decls: list[RoleEdgeDecl] = []
    groups: list[AttributeGroup] = []
    attributes: list[Attribute] = []
    attr_spans: dict[str, Span] = {}
    aggregation_decls: list[AggregationDecl] = []
    granularities: list[GranularityFn] = []
    tasks: list[Task] = []
    purposes: list[Purpose] = []
    rp_decls: list[RolePurposeDecl] = []
    ptc_decls: list[PurposeTaskConditionDecl] = []
    pg_decls: list[PurposeGroupDecl] = []

    def declare(seen: set[str], ident: str, kind: str, span: Span) -> bool:
        if ident in seen:
            bad(f"duplicate {kind} id {ident!r}", span)
            return False
        seen.add(ident)
        return True

    seen_roles: set[str] = set()
    seen_groups: set[str] = set()
    seen_grans: set[str] = set()
    seen_tasks: set[str] = set()
    seen_purposes: set[str] = set()
    attr_index: dict[str, int] = {}

    for decl in decls.entries:
        if isinstance(decl, RoleDecl):
            if declare(seen_roles, decl.id, "role", decl.span):
                if not decl.label:
                    bad(f"role {decl.id!r} has an empty label", decl.span)
                roles.append(Role(decl.id, decl.label))
        elif isinstance(decl, GroupDecl):
            if declare(seen_groups, decl.id, "group", decl.span):
                groups.append(AttributeGroup(decl.id, decl.label))
        elif isinstance(decl, GranularityDecl):
            if declare(seen_grans, decl.id, "granularity function", decl.span):
                granularities.append(GranularityFn(decl.id, decl.description))
        elif isinstance(decl, TaskDecl):
            if declare(seen_tasks, decl.id, "task", decl.span):
                tasks.append(Task(decl.id, decl.label, decl.reads, decl.via))
        elif isinstance(decl, PurposeDecl):
            if declare(seen_purposes, decl.id, "purpose", decl.span):
                purposes.append(
                    Purpose(decl.id, decl.label, decl.tasks, decl.universal)
                )
        elif isinstance(decl, AttributeDecl):
            if decl.id not in attr_index:
                attr_index[decl.id] = len(attributes)
                attr_spans[decl.id] = decl.span
                attributes.append(
                    Attribute(
                        decl.id,
                        decl.label,
                        frozenset(decl.groups),
                        decl.collected,
                    )
                )
            else:
                # Re-declaration: merge group sets and collection votes so a
                # policy's own contradictions stay representable.
                existing = attributes[attr_index[decl.id]]
                if existing.label != decl.label:
                    bad(
                        f"attribute {decl.id!r} redeclared with a different label "
                        f"({existing.label!r} vs {decl.label!r})",
                        decl.span,
                    )
                    continue
                merged_groups = existing.groups | frozenset(decl.groups)
                collected = existing.collected
                conflict = existing.collected_conflict
                if decl.collected is not None:
                    if conflict or (collected is not None and collected != decl.collected):
                        collected = None
                        conflict = True
                    elif collected is None:
                        collected = decl.collected
                attributes[attr_index[decl.id]] = replace(
                    existing,
                    groups=merged_groups,
                    collected=collected,
                    collected_conflict=conflict,
                )
        elif isinstance(decl, RoleEdgeDecl):
            role_edge_decls.append(decl)
        elif isinstance(decl, AggregationDecl):
            aggregation_decls.append(decl)
        elif isinstance(decl, RolePurposeDecl):
            rp_decls.append(decl)
        elif isinstance(decl, PurposeTaskConditionDecl):
            ptc_decls.append(decl)
        else:
            pg_decls.append(decl)

    role_ids = {r.id for r in roles}
    group_ids = {g.id for g in groups}
    attr_ids = set(attr_index)
    gran_ids = {g.id for g in granularities}
    task_ids = {t.id for t in tasks}
    purposes_by_id = {p.id: p for p in purposes}

    derived = {decl.product for decl in aggregation_decls}
    attributes = [
        replace(attr, derived=attr.id in derived) if attr.id in derived else attr
        for attr in attributes
    ]

    for attr in attributes:
        for group_id in sorted(attr.groups):
            if group_id not in group_ids:
                bad(
                    f"attribute {attr.id!r} references unknown group {group_id!r}",
                    attr_spans[attr.id],
                )

    role_edges: list[RoleEdge] = []
    seen_edges: set[tuple[str, str]] = set()
    for decl in role_edge_decls:
        for endpoint in (decl.superior, decl.inferior):
            if endpoint not in role_ids:
                bad(f"unknown role {endpoint!r} in role_hierarchy", decl.span)
        if decl.superior == decl.inferior:
            bad(f"role {decl.superior!r} cannot be its own inferior", decl.span)
        if (decl.superior, decl.inferior) in seen_edges:
            bad(f"duplicate role edge {decl.superior} -> {decl.inferior}", decl.span)
        seen_edges.add((decl.superior, decl.inferior))
        role_edges.append(RoleEdge(decl.superior, decl.inferior))

    aggregations: list[Aggregation] = []
    for decl in aggregation_decls:
        for ref in (decl.left, decl.right, decl.product):
            if ref not in attr_ids:
                bad(f"unknown attribute {ref!r} in aggregation", decl.span)
        if decl.product in (decl.left, decl.right):
            bad(
                f"aggregation product {decl.product!r} cannot be one of its sources",
                decl.span,
            )
        aggregations.append(Aggregation(decl.left, decl.right, decl.product))

    for task in tasks:
        span = next(
            d.span for d in decls.entries if isinstance(d, TaskDecl) and d.id == task.id
        )
        if task.reads not in attr_ids:
            bad(f"task {task.id!r} reads unknown attribute {task.reads!r}", span)
        if task.via is not None and task.via not in gran_ids:
            bad(
                f"task {task.id!r} uses unknown granularity function {task.via!r}",
                span,
            )

    for purpose in purposes:
        span = next(
            d.span
            for d in decls.entries
            if isinstance(d, PurposeDecl) and d.id == purpose.id
        )
        listed: set[str] = set()
        for task_id in purpose.tasks:
            if task_id not in task_ids:
                bad(f"purpose {purpose.id!r} lists unknown task {task_id!r}", span)
            if task_id in listed:
                bad(
                    f"purpose {purpose.id!r} lists task {task_id!r} more than once",
                    span,
                )
            listed.add(task_id)

    rp_grants: list[RolePurposeGrant] = []
    seen_grants: set[tuple[str, str]] = set()
    for decl in rp_decls:
        if decl.role not in role_ids:
            bad(f"unknown role {decl.role!r} in role_purpose", decl.span)
        if decl.purpose not in seen_purposes:
            bad(f"unknown purpose {decl.purpose!r} in role_purpose", decl.span)
        if (decl.role, decl.purpose) in seen_grants:
            bad(
                f"role {decl.role!r} is granted purpose {decl.purpose!r} more than once",
                decl.span,
            )
        seen_grants.add((decl.role, decl.purpose))
        rp_grants.append(RolePurposeGrant(decl.role, decl.purpose, decl.condition))

    pt_conditions: list[PurposeTaskCondition] = []
    seen_ptc: set[tuple[str, str]] = set()
    for decl in ptc_decls:
        purpose = purposes_by_id.get(decl.purpose)
        if purpose is None:
            bad(f"unknown purpose {decl.purpose!r} in purpose_task_conditions", decl.span)
        if decl.task not in task_ids:
            bad(f"unknown task {decl.task!r} in purpose_task_conditions", decl.span)
        elif purpose is not None and decl.task not in purpose.tasks:
            bad(
                f"task {decl.task!r} is not part of purpose {decl.purpose!r}",
                decl.span,
            )
        if (decl.purpose, decl.task) in seen_ptc:
            bad(
                f"purpose {decl.purpose!r} conditions task {decl.task!r} more than once",
                decl.span,
            )
        seen_ptc.add((decl.purpose, decl.task))
        pt_conditions.append(
            PurposeTaskCondition(decl.purpose, decl.task, decl.condition)
        )

    pg_grants: list[PurposeGroupGrant] = []
    seen_pg: set[tuple[str, str]] = set()
    for decl in pg_decls:
        if decl.purpose not in seen_purposes:
            bad(f"unknown purpose {decl.purpose!r} in purpose_group", decl.span)
        if decl.group not in group_ids:
            bad(f"unknown group {decl.group!r} in purpose_group", decl.span)
        if (decl.purpose, decl.group) in seen_pg:
            bad(
                f"purpose {decl.purpose!r} is granted group {decl.group!r} more than once",
                decl.span,
            )
        seen_pg.add((decl.purpose, decl.group))
        pg_grants.append(PurposeGroupGrant(decl.purpose, decl.group, decl.condition))

    model = PolicyModel(
        name=decls.name,
        roles=tuple(roles),
        role_edges=tuple(role_edges),
        groups=tuple(groups),
        attributes=tuple(attributes),
        aggregations=tuple(aggregations),
        granularities=tuple(granularities),
        tasks=tuple(tasks),
        purposes=tuple(purposes),
        rp_grants=tuple(rp_grants),
        pt_conditions=tuple(pt_conditions),
        pg_grants=tuple(pg_grants),
    )

    if not diagnostics:
        # Everything resolvable was checked above; what remains is graph
        # shape (hierarchy and derivation cycles).
        for error in validate(model):
            span = _span_for_validation(decls, error.rule, error.subject)
            bad(error.message, span)

    if diagnostics:
        raise LoweringError(diagnostics)
    return model


def _span_for_validation(decls: Declarations, rule: str, subject: str) -> Span:
    if rule == "role-cycle":
        members = set(subject.split(","))
        for decl in decls.entries:
            if isinstance(decl, RoleEdgeDecl) and {decl.superior, decl.inferior} <= members:
                return decl.span
    if rule == "aggregation-cycle":
        members = set(subject.split(","))
        for decl in decls.entries:
            if isinstance(decl, AggregationDecl) and decl.product in members:
                return decl.span
    for decl in decls.entries:
        return decl.span
    return Span(1, 1, 1, 1)


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def serialize(model: PolicyModel) -> str:
    """Canonical text form of a valid model.

    Sections appear in grammar order, entries in model (declaration) order,
    group lists sorted, two-space indent, LF endings.  A collection conflict
    is written as two declarations so it survives a round trip.
    """
    lines: list[str] = [f"policy {_quote(model.name)}"]

    def section(name: str, rows: list[str]) -> None:
        if not rows:
            return
        lines.append("")
        lines.append(f"{name} {{")
        lines.extend(f"  {row}" for row in rows)
        lines.append("}")

    section("roles", [f"{r.id}: {_quote(r.label)}" for r in model.roles])
    section(
        "role_hierarchy",
        [f"{e.superior} -> {e.inferior}" for e in model.role_edges],
    )
    section("groups", [f"{g.id}: {_quote(g.label)}" for g in model.groups])

    attr_rows: list[str] = []
    for attr in model.attributes:
        row = f"{attr.id}: {_quote(attr.label)}"
        if attr.groups:
            row += f" groups ({', '.join(sorted(attr.groups))})"
        if attr.collected_conflict:
            attr_rows.append(row + " collected = yes")
            attr_rows.append(f"{attr.id}: {_quote(attr.label)} collected = no")
            continue
        if attr.collected is not None:
            row += f" collected = {'yes' if attr.collected else 'no'}"
        attr_rows.append(row)
    section("attributes", attr_rows)

    section(
        "aggregations",
        [f"({a.left}, {a.right}) -> {a.product}" for a in model.aggregations],
    )
    section(
        "granularities",
        [f"{g.id}: {_quote(g.description)}" for g in model.granularities],
    )

    task_rows: list[str] = []
    for task in model.tasks:
        row = f"{task.id}: {_quote(task.label)} reads {task.reads}"
        if task.via is not None:
            row += f" via {task.via}"
        task_rows.append(row)
    section("tasks", task_rows)

    purpose_rows: list[str] = []
    for purpose in model.purposes:
        row = f"{purpose.id}: {_quote(purpose.label)}"
        if purpose.tasks:
            row += f" = [{', '.join(purpose.tasks)}]"
        if purpose.universal:
            row += " universal"
        purpose_rows.append(row)
    section("purposes", purpose_rows)

    rp_rows: list[str] = []
    for grant in model.rp_grants:
        row = f"{grant.role} allowed {grant.purpose}"
        if grant.condition is not None:
            row += f" when {_quote(render_condition(grant.condition))}"
        rp_rows.append(row)
    section("role_purpose", rp_rows)

    section(
        "purpose_task_conditions",
        [
            f"{c.purpose} task {c.task} when {_quote(render_condition(c.condition))}"
            for c in model.pt_conditions
        ],
    )

    pg_rows: list[str] = []
    for grant in model.pg_grants:
        row = f"{grant.purpose} allowed group {grant.group}"
        if grant.condition is not None:
            row += f" when {_quote(render_condition(grant.condition))}"
        pg_rows.append(row)
    section("purpose_group", pg_rows)

    return "\n".join(lines) + "\n"
