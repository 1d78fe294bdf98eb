"""Compile ordered context-dependent rewrite rules into functional transducers."""

from .automata import Dfsa, Dfst, Fst, apply_dfst, apply_functional
from .compiler import CompiledRuleset, CompileError, NonTotalRuleset, compile_ruleset
from .fsttext import deserialize_compiled, serialize_compiled
from .rulefile import RuleSyntaxError, parse_rule_file
from .rules import Bundle, Rule, RuleSet
from .runtime import (NoMarkerAtPosition, TraceRecord, UnknownSymbol, apply_composed, apply_items,
                      apply_staged, oracle_apply, oracle_items)

__version__ = "0.1.0"
