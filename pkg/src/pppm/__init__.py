"""Privacy policy permission models: parse, validate, lint, query, render.

The package models a privacy policy as roles, purposes, tasks, and data
attributes, plus the grants that connect them.  Policies are written in a
small declarative text format, checked for structural gaps, and queried for
concrete access decisions.
"""

from __future__ import annotations

from .conditions import (
    ConditionError,
    ConditionExpr,
    ConditionSyntaxError,
    ConditionTypeError,
    EvalContext,
    TimeOfDay,
    TriBool,
    evaluate,
    parse_condition,
    render_condition,
)
from .dsl import (
    Declarations,
    LoweringError,
    ParseError,
    Span,
    load_policy,
    lower,
    parse_policy,
    serialize,
)
from .lints import Finding, LintConfig, LintRule, RULES, format_findings, run_lints
from .model import (
    Aggregation,
    Attribute,
    AttributeGroup,
    GranularityFn,
    InvalidModelError,
    PolicyModel,
    Purpose,
    PurposeGroupGrant,
    PurposeTaskCondition,
    Role,
    RoleEdge,
    RolePurposeGrant,
    Task,
    UnknownEntityError,
    ValidationError,
    aggregation_sources,
    inferiors,
    validate,
)
from .query import (
    AccessPath,
    AttributeSource,
    Decision,
    EffectiveGrant,
    Outcome,
    QueryEvaluationError,
    accessible_attributes,
    can_access,
    effective_purposes,
)
from .render import RenderOptions, emit_graph, emit_tables

__version__ = "0.1.0"

__all__ = [
    "AccessPath",
    "Aggregation",
    "Attribute",
    "AttributeGroup",
    "AttributeSource",
    "ConditionError",
    "ConditionExpr",
    "ConditionSyntaxError",
    "ConditionTypeError",
    "Decision",
    "Declarations",
    "EffectiveGrant",
    "EvalContext",
    "Finding",
    "GranularityFn",
    "InvalidModelError",
    "LintConfig",
    "LintRule",
    "LoweringError",
    "Outcome",
    "ParseError",
    "PolicyModel",
    "Purpose",
    "PurposeGroupGrant",
    "PurposeTaskCondition",
    "QueryEvaluationError",
    "RULES",
    "RenderOptions",
    "Role",
    "RoleEdge",
    "RolePurposeGrant",
    "Span",
    "Task",
    "TimeOfDay",
    "TriBool",
    "UnknownEntityError",
    "ValidationError",
    "accessible_attributes",
    "aggregation_sources",
    "can_access",
    "effective_purposes",
    "emit_graph",
    "emit_tables",
    "evaluate",
    "format_findings",
    "inferiors",
    "load_policy",
    "lower",
    "parse_condition",
    "parse_policy",
    "render_condition",
    "run_lints",
    "serialize",
    "validate",
    "__version__",
]
