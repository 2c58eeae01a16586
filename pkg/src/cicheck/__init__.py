"""Consistency checking of conditional-independence statements for causal discovery."""

from .core import (CIStatement, Domain, KnowledgeBase, StageResult, ValidationError, VarSet, Verdict,
                   canonicalize, is_marginal, negate, overlap)
from .engine import CirInstance, DecisionTrace, EngineConfig, decide

__all__ = [
    "CIStatement", "CirInstance", "DecisionTrace", "Domain", "EngineConfig", "KnowledgeBase",
    "StageResult", "ValidationError", "VarSet", "Verdict", "canonicalize", "decide", "is_marginal",
    "negate", "overlap",
]
