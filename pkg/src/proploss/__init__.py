"""Propositions over text prompts, compiled to differentiable attention losses.

Parse a predicate-logic description of what a prompt demands, lower it to a
fuzzy loss over per-token attention maps, take exact gradients, and descend
synthetic channel-softmax stacks until the proposition holds.
"""

from .amap import (
    format_amap, format_manifest, format_pgm, format_trajectory_csv,
    parse_amap, parse_manifest, read_amap, read_manifest, write_amap,
    write_manifest, write_pgm,
)
from .autodiff import (
    GradientCheckReport, check_gradient, check_gradient_logits,
    evaluate_with_gradient, gradient, logit_gradient,
)
from .compiler import (
    ConjunctEval, ConjunctInfo, EvalResult, LossGraph, compile_proposition,
    evaluate, evaluate_detailed, normalize_map,
)
from .engine import available_engines, current_engine, set_engine
from .errors import (
    AmapFormatError, AmbiguousClass, BadShape, BoundaryInput, DomainError,
    ManifestError, NonCrispInput, ParseError, PatternMismatch, ShapeMismatch,
    UnboundPredicate, UnboundVariable, UnsupportedForm,
)
from .frontend import (
    PromptTemplate, SlotRole, TemplateClass, TokenBinding, extract,
    match_classes, parse_template, possession_verbs,
)
from .guidance import (
    GuidanceConfig, StepRecord, Trajectory, ablate_implication_direction,
    containment, graph_tokens, guidance_step, init_logits, run,
)
from .logic import (
    And, Atom, Exists, FalseProp, Forall, Iff, Implies, Not, Or, Proposition,
    TrueProp, TRUE, FALSE, free_vars, is_closed, normalize,
    ordered_predicates, parse_dsl, predicates, print_dsl,
)
from .oracle import crisp_oracle
from .stack import AttentionStack, SOT_LABEL, channel_softmax, softmax_stack

__version__ = "0.1.0"

__all__ = [
    "AmapFormatError", "AmbiguousClass", "And", "Atom", "AttentionStack",
    "BadShape", "BoundaryInput", "ConjunctEval", "ConjunctInfo",
    "DomainError", "EvalResult", "Exists", "FALSE", "FalseProp", "Forall",
    "GradientCheckReport", "GuidanceConfig", "Iff", "Implies", "LossGraph",
    "ManifestError", "NonCrispInput", "Not", "Or", "ParseError",
    "PatternMismatch", "PromptTemplate", "Proposition", "SOT_LABEL",
    "ShapeMismatch", "SlotRole", "StepRecord", "TemplateClass",
    "TokenBinding", "TRUE", "Trajectory", "TrueProp", "UnboundPredicate",
    "UnboundVariable", "UnsupportedForm", "ablate_implication_direction",
    "available_engines", "channel_softmax", "check_gradient",
    "check_gradient_logits", "compile_proposition", "containment",
    "crisp_oracle", "current_engine", "evaluate", "evaluate_detailed",
    "evaluate_with_gradient", "extract", "format_amap", "format_manifest",
    "format_pgm", "format_trajectory_csv", "free_vars", "gradient",
    "graph_tokens", "guidance_step", "init_logits", "is_closed",
    "logit_gradient", "match_classes", "normalize", "normalize_map",
    "ordered_predicates", "parse_amap", "parse_dsl", "parse_manifest",
    "parse_template", "possession_verbs", "predicates", "print_dsl",
    "read_amap", "read_manifest", "run", "set_engine", "softmax_stack",
    "write_amap", "write_manifest", "write_pgm",
]
