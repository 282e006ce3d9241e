"""Core domain types for permission models extracted from privacy policies.

A model holds roles (who accesses data), purposes (why, as ordered task
lists), tasks (atomic steps, each reading exactly one attribute), attributes
with optional group memberships, plus the connections: a role hierarchy,
attribute aggregations, role-purpose grants, per-(purpose, task) conditions,
and purpose-group grants.

Models are immutable after construction and safe to share across threads.
`validate` checks every structural invariant and returns a report instead of
raising, so callers can show all problems at once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from .conditions import ConditionExpr


class UnknownEntityError(LookupError):
    """An id does not name an entity of the requested kind."""


class InvalidModelError(ValueError):
    """The requested operation needs a model that passes validation."""


@dataclass(frozen=True)
class Role:
    id: str
    label: str


@dataclass(frozen=True)
class RoleEdge:
    superior: str
    inferior: str


@dataclass(frozen=True)
class AttributeGroup:
    id: str
    label: str


@dataclass(frozen=True)
class Attribute:
    id: str
    label: str
    groups: frozenset[str] = frozenset()
    # True = stated as collected, False = stated as not collected,
    # None = the policy does not say.
    collected: Optional[bool] = None
    # True when declarations contradict each other; collected is then None.
    collected_conflict: bool = False
    # True iff the attribute is the product of some aggregation.
    derived: bool = False


@dataclass(frozen=True)
class Aggregation:
    left: str
    right: str
    product: str


@dataclass(frozen=True)
class GranularityFn:
    """Named precision conversion (e.g. a date-to-age reduction); opaque."""

    id: str
    description: str


@dataclass(frozen=True)
class Task:
    id: str
    label: str
    reads: str
    via: Optional[str] = None


@dataclass(frozen=True)
class Purpose:
    id: str
    label: str
    tasks: tuple[str, ...] = ()
    universal: bool = False


@dataclass(frozen=True)
class RolePurposeGrant:
    role: str
    purpose: str
    condition: Optional[ConditionExpr] = None


@dataclass(frozen=True)
class PurposeTaskCondition:
    purpose: str
    task: str
    condition: ConditionExpr


@dataclass(frozen=True)
class PurposeGroupGrant:
    purpose: str
    group: str
    condition: Optional[ConditionExpr] = None


@dataclass(frozen=True)
class PolicyModel:
    name: str
    roles: tuple[Role, ...] = ()
    role_edges: tuple[RoleEdge, ...] = ()
    groups: tuple[AttributeGroup, ...] = ()
    attributes: tuple[Attribute, ...] = ()
    aggregations: tuple[Aggregation, ...] = ()
    granularities: tuple[GranularityFn, ...] = ()
    tasks: tuple[Task, ...] = ()
    purposes: tuple[Purpose, ...] = ()
    rp_grants: tuple[RolePurposeGrant, ...] = ()
    pt_conditions: tuple[PurposeTaskCondition, ...] = ()
    pg_grants: tuple[PurposeGroupGrant, ...] = ()

    # Lookup caches live in __dict__ and do not take part in equality.
    @cached_property
    def roles_by_id(self) -> dict[str, Role]:
        return {r.id: r for r in self.roles}

    @cached_property
    def groups_by_id(self) -> dict[str, AttributeGroup]:
        return {g.id: g for g in self.groups}

    @cached_property
    def attributes_by_id(self) -> dict[str, Attribute]:
        return {a.id: a for a in self.attributes}

    @cached_property
    def granularities_by_id(self) -> dict[str, GranularityFn]:
        return {g.id: g for g in self.granularities}

    @cached_property
    def tasks_by_id(self) -> dict[str, Task]:
        return {t.id: t for t in self.tasks}

    @cached_property
    def purposes_by_id(self) -> dict[str, Purpose]:
        return {p.id: p for p in self.purposes}

    def role(self, role_id: str) -> Role:
        return _lookup(self.roles_by_id, role_id, "role")

    def group(self, group_id: str) -> AttributeGroup:
        return _lookup(self.groups_by_id, group_id, "group")

    def attribute(self, attribute_id: str) -> Attribute:
        return _lookup(self.attributes_by_id, attribute_id, "attribute")

    def granularity(self, fn_id: str) -> GranularityFn:
        return _lookup(self.granularities_by_id, fn_id, "granularity function")

    def task(self, task_id: str) -> Task:
        return _lookup(self.tasks_by_id, task_id, "task")

    def purpose(self, purpose_id: str) -> Purpose:
        return _lookup(self.purposes_by_id, purpose_id, "purpose")

    def group_members(self, group_id: str) -> tuple[str, ...]:
        """Ids of attributes belonging to `group_id`, in declaration order."""
        self.group(group_id)
        return tuple(a.id for a in self.attributes if group_id in a.groups)


def _lookup(table, key: str, kind: str):
    try:
        return table[key]
    except KeyError:
        raise UnknownEntityError(f"unknown {kind} {key!r}") from None


@dataclass(frozen=True)
class ValidationError:
    rule: str
    subject: str
    message: str


def validate(model: PolicyModel) -> list[ValidationError]:
    """Return every violated structural invariant; empty list iff valid.

    References may dangle in the input; nothing is mutated.  The report is
    sorted by (rule, subject, message) so repeated runs are byte-identical.
    """
    errors: list[ValidationError] = []

    def err(rule: str, subject: str, message: str) -> None:
        errors.append(ValidationError(rule, subject, message))

    for kind, entities in (
        ("role", model.roles),
        ("group", model.groups),
        ("attribute", model.attributes),
        ("granularity function", model.granularities),
        ("task", model.tasks),
        ("purpose", model.purposes),
    ):
        seen: set[str] = set()
        for entity in entities:
            if entity.id in seen:
                err("duplicate-id", entity.id, f"{kind} {entity.id!r} declared more than once")
            seen.add(entity.id)

    role_ids = {r.id for r in model.roles}
    group_ids = {g.id for g in model.groups}
    attr_ids = {a.id for a in model.attributes}
    gran_ids = {g.id for g in model.granularities}
    task_ids = {t.id for t in model.tasks}
    purpose_ids = {p.id for p in model.purposes}

    for role in model.roles:
        if not role.label:
            err("empty-label", role.id, f"role {role.id!r} has an empty label")

    seen_edges: set[tuple[str, str]] = set()
    for edge in model.role_edges:
        subject = f"{edge.superior}->{edge.inferior}"
        for endpoint in (edge.superior, edge.inferior):
            if endpoint not in role_ids:
                err("unknown-id", subject, f"role hierarchy references unknown role {endpoint!r}")
        if edge.superior == edge.inferior:
            err("role-self-edge", subject, f"role {edge.superior!r} cannot be its own inferior")
        if (edge.superior, edge.inferior) in seen_edges:
            err("duplicate-role-edge", subject, f"duplicate role edge {subject}")
        seen_edges.add((edge.superior, edge.inferior))

    for scc in _cycles(role_ids, [(e.superior, e.inferior) for e in model.role_edges if e.superior != e.inferior]):
        names = ", ".join(scc)
        err("role-cycle", ",".join(scc), f"roles form a hierarchy cycle: {names}")

    for attribute in model.attributes:
        for group_id in sorted(attribute.groups):
            if group_id not in group_ids:
                err("unknown-id", attribute.id,
                    f"attribute {attribute.id!r} references unknown group {group_id!r}")
        if attribute.collected_conflict and attribute.collected is not None:
            err("collected-conflict-flag", attribute.id,
                f"attribute {attribute.id!r} marks a collection conflict but also a definite flag")

    products = {a.product for a in model.aggregations}
    for aggregation in model.aggregations:
        subject = f"({aggregation.left},{aggregation.right})->{aggregation.product}"
        for ref in (aggregation.left, aggregation.right, aggregation.product):
            if ref not in attr_ids:
                err("unknown-id", subject, f"aggregation references unknown attribute {ref!r}")
        if aggregation.product in (aggregation.left, aggregation.right):
            err("aggregation-self", subject,
                f"aggregation product {aggregation.product!r} cannot be one of its sources")

    agg_edges = [
        (src, a.product)
        for a in model.aggregations
        for src in (a.left, a.right)
        if src != a.product
    ]
    for scc in _cycles(attr_ids | products, agg_edges):
        names = ", ".join(scc)
        err("aggregation-cycle", ",".join(scc), f"attributes form a derivation cycle: {names}")

    for attribute in model.attributes:
        if attribute.derived != (attribute.id in products):
            err("derived-flag", attribute.id,
                f"attribute {attribute.id!r} derived flag does not match the aggregations")

    for task in model.tasks:
        if task.reads not in attr_ids:
            err("unknown-id", task.id, f"task {task.id!r} reads unknown attribute {task.reads!r}")
        if task.via is not None and task.via not in gran_ids:
            err("unknown-id", task.id,
                f"task {task.id!r} uses unknown granularity function {task.via!r}")

    for purpose in model.purposes:
        seen_tasks: set[str] = set()
        for task_id in purpose.tasks:
            if task_id not in task_ids:
                err("unknown-id", purpose.id,
                    f"purpose {purpose.id!r} lists unknown task {task_id!r}")
            if task_id in seen_tasks:
                err("duplicate-task-in-purpose", purpose.id,
                    f"purpose {purpose.id!r} lists task {task_id!r} more than once")
            seen_tasks.add(task_id)

    seen_grants: set[tuple[str, str]] = set()
    for grant in model.rp_grants:
        subject = f"{grant.role}:{grant.purpose}"
        if grant.role not in role_ids:
            err("unknown-id", subject, f"grant references unknown role {grant.role!r}")
        if grant.purpose not in purpose_ids:
            err("unknown-id", subject, f"grant references unknown purpose {grant.purpose!r}")
        if (grant.role, grant.purpose) in seen_grants:
            err("duplicate-grant", subject,
                f"role {grant.role!r} is granted purpose {grant.purpose!r} more than once")
        seen_grants.add((grant.role, grant.purpose))

    seen_ptc: set[tuple[str, str]] = set()
    for ptc in model.pt_conditions:
        subject = f"{ptc.purpose}:{ptc.task}"
        purpose = model.purposes_by_id.get(ptc.purpose)
        if purpose is None:
            err("unknown-id", subject, f"task condition references unknown purpose {ptc.purpose!r}")
        if ptc.task not in task_ids:
            err("unknown-id", subject, f"task condition references unknown task {ptc.task!r}")
        elif purpose is not None and ptc.task not in purpose.tasks:
            err("task-not-in-purpose", subject,
                f"task {ptc.task!r} is not part of purpose {ptc.purpose!r}")
        if (ptc.purpose, ptc.task) in seen_ptc:
            err("duplicate-task-condition", subject,
                f"purpose {ptc.purpose!r} conditions task {ptc.task!r} more than once")
        seen_ptc.add((ptc.purpose, ptc.task))

    seen_pg: set[tuple[str, str]] = set()
    for grant in model.pg_grants:
        subject = f"{grant.purpose}:{grant.group}"
        if grant.purpose not in purpose_ids:
            err("unknown-id", subject, f"group grant references unknown purpose {grant.purpose!r}")
        if grant.group not in group_ids:
            err("unknown-id", subject, f"group grant references unknown group {grant.group!r}")
        if (grant.purpose, grant.group) in seen_pg:
            err("duplicate-group-grant", subject,
                f"purpose {grant.purpose!r} is granted group {grant.group!r} more than once")
        seen_pg.add((grant.purpose, grant.group))

    errors.sort(key=lambda e: (e.rule, e.subject, e.message))
    return errors


def _cycles(nodes: set[str], edges: list[tuple[str, str]]) -> list[list[str]]:
    """Strongly connected components with more than one node, sorted.

    Self-edges are reported separately by the caller, so singleton SCCs are
    ignored here.  Iterative Tarjan keeps deep hierarchies off the call stack.
    """
    adjacency: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in edges:
        if src in adjacency and dst in adjacency:
            adjacency[src].append(dst)
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    sccs: list[list[str]] = []

    for start in sorted(nodes):
        if start in index:
            continue
        work: list[tuple[str, int]] = [(start, 0)]
        while work:
            node, child_idx = work.pop()
            if child_idx == 0:
                index[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            children = adjacency[node]
            for i in range(child_idx, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index[child])
            if advanced:
                continue
            if lowlink[node] == index[node]:
                component: list[str] = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                if len(component) > 1:
                    sccs.append(sorted(component))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
    return sorted(sccs)


def inferiors(model: PolicyModel, role_id: str) -> list[str]:
    """Roles transitively below `role_id`, breadth-first, ties by id.

    The role itself is excluded; on a valid (acyclic) model it can never
    appear.  Unknown ids raise UnknownEntityError.
    """
    model.role(role_id)
    children: dict[str, list[str]] = {}
    for edge in model.role_edges:
        children.setdefault(edge.superior, []).append(edge.inferior)
    seen: set[str] = {role_id}
    order: list[str] = []
    queue = deque(sorted(set(children.get(role_id, ()))))
    seen.update(queue)
    while queue:
        current = queue.popleft()
        order.append(current)
        for nxt in sorted(set(children.get(current, ()))):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return order


def aggregation_sources(model: PolicyModel, attribute_id: str) -> set[str]:
    """All attributes the target is transitively derived from."""
    model.attribute(attribute_id)
    upstream: dict[str, set[str]] = {}
    for aggregation in model.aggregations:
        upstream.setdefault(aggregation.product, set()).update(
            (aggregation.left, aggregation.right)
        )
    sources: set[str] = set()
    frontier = deque([attribute_id])
    while frontier:
        current = frontier.popleft()
        for src in upstream.get(current, ()):
            if src not in sources:
                sources.add(src)
                frontier.append(src)
    sources.discard(attribute_id)
    return sources
