"""Independent brute-force reference implementations.

Each function recomputes a library result by the most literal method
available (path enumeration, fixpoint iteration, explicit truth tables)
without sharing traversal code with the package, so agreement between the two
is meaningful.
"""

from __future__ import annotations

from typing import Optional

from pppm.conditions import (
    ConditionExpr,
    EvalContext,
    Operand,
    TimeOfDay,
    TriBool,
    Var,
)
from pppm.model import PolicyModel


def brute_inferiors(model: PolicyModel, role_id: str) -> set[str]:
    """Reachable-by-any-path set, via explicit path enumeration."""
    edges = [(e.superior, e.inferior) for e in model.role_edges]
    found: set[str] = set()
    stack: list[tuple[str, ...]] = [(role_id,)]
    while stack:
        path = stack.pop()
        for sup, inf in edges:
            if sup != path[-1] or inf in path:
                continue
            found.add(inf)
            stack.append(path + (inf,))
    found.discard(role_id)
    return found


def brute_aggregation_sources(model: PolicyModel, attribute_id: str) -> set[str]:
    """Transitive sources by rescanning the aggregation list to a fixpoint."""
    sources: set[str] = set()
    changed = True
    while changed:
        changed = False
        for agg in model.aggregations:
            if agg.product == attribute_id or agg.product in sources:
                for src in (agg.left, agg.right):
                    if src != attribute_id and src not in sources:
                        sources.add(src)
                        changed = True
    return sources


_TRI_AND = {
    (TriBool.TRUE, TriBool.TRUE): TriBool.TRUE,
    (TriBool.TRUE, TriBool.UNKNOWN): TriBool.UNKNOWN,
    (TriBool.TRUE, TriBool.FALSE): TriBool.FALSE,
    (TriBool.UNKNOWN, TriBool.TRUE): TriBool.UNKNOWN,
    (TriBool.UNKNOWN, TriBool.UNKNOWN): TriBool.UNKNOWN,
    (TriBool.UNKNOWN, TriBool.FALSE): TriBool.FALSE,
    (TriBool.FALSE, TriBool.TRUE): TriBool.FALSE,
    (TriBool.FALSE, TriBool.UNKNOWN): TriBool.FALSE,
    (TriBool.FALSE, TriBool.FALSE): TriBool.FALSE,
}

_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _resolve(operand: Operand, ctx: EvalContext):
    if isinstance(operand, Var):
        return ctx[operand.name] if operand.name in ctx else None
    return operand


def brute_evaluate(expr: ConditionExpr, ctx: EvalContext) -> TriBool:
    """Expand every chain into its adjacent pairs and fold the Kleene table.

    Assumes well-typed input (the generators only produce comparable pairs);
    type errors are out of scope here.
    """
    result = TriBool.TRUE
    for chain in expr.chains:
        for i, op in enumerate(chain.ops):
            left = _resolve(chain.operands[i], ctx)
            right = _resolve(chain.operands[i + 1], ctx)
            if left is None or right is None:
                pair = TriBool.UNKNOWN
            else:
                pair = TriBool.TRUE if _OPS[op](left, right) else TriBool.FALSE
            result = _TRI_AND[(result, pair)]
    return result


def brute_effective_purposes(model: PolicyModel, role_id: str) -> list[tuple[str, Optional[ConditionExpr], str]]:
    """(purpose, condition, via) triples from the role and its brute inferiors."""
    usable = {role_id} | brute_inferiors(model, role_id)
    triples = {
        (g.purpose, g.condition, g.role)
        for g in model.rp_grants
        if g.role in usable
    }
    return sorted(triples, key=lambda t: (t[0], t[2]))


def brute_can_access(
    model: PolicyModel,
    role_id: str,
    attribute_id: str,
    purpose_id: Optional[str],
    ctx: EvalContext,
) -> str:
    """Outcome only, by enumerating every (grant, source) pair exhaustively."""
    outcomes: list[TriBool] = []
    for purpose, grant_cond, _via in brute_effective_purposes(model, role_id):
        if purpose_id is not None and purpose != purpose_id:
            continue
        p = model.purposes_by_id[purpose]
        pt = {(c.purpose, c.task): c.condition for c in model.pt_conditions}
        pair_conds: list[list[ConditionExpr]] = []
        for task_id in p.tasks:
            task = model.tasks_by_id[task_id]
            if task.reads == attribute_id:
                conds = [grant_cond, pt.get((purpose, task_id))]
                pair_conds.append([c for c in conds if c is not None])
        for grant in model.pg_grants:
            if grant.purpose != purpose:
                continue
            members = {a.id for a in model.attributes if grant.group in a.groups}
            if attribute_id in members:
                conds = [grant_cond, grant.condition]
                pair_conds.append([c for c in conds if c is not None])
        for conds in pair_conds:
            verdict = TriBool.TRUE
            for cond in conds:
                verdict = _TRI_AND[(verdict, brute_evaluate(cond, ctx))]
            outcomes.append(verdict)
    if TriBool.TRUE in outcomes:
        return "Allow"
    if TriBool.UNKNOWN in outcomes:
        return "Conditional"
    return "Deny"


def make_time(hh: int, mm: int) -> TimeOfDay:
    return TimeOfDay(hh * 60 + mm)
