"""Runtime checkers wrapping a CI-test backend.

``ed`` (error detection) tests first and then checks that the answer is
consistent with everything accepted so far. ``p`` (pruning) first asks
whether the answer is already entailed and only calls the backend otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .citests import CIBackend, CIQuery, CITestResult
from .core import CIStatement, KnowledgeBase, Verdict, negate
from .engine import CirInstance, DecisionTrace, EngineConfig, decide

log = logging.getLogger(__name__)

MODES = ("off", "ed", "p")


@dataclass
class CheckOutcome:
    statement: CIStatement
    action: str  # "tested" | "entailed" | "aborted"
    result: CITestResult
    trace: DecisionTrace | None = None
    alarm: bool = False


class CheckAbort(RuntimeError):
    """Raised by ED-Check under the abort policy; carries the offending outcome."""

    def __init__(self, outcome: CheckOutcome):
        super().__init__(f"inconsistent CI statement rejected: {outcome.statement}")
        self.outcome = outcome


@dataclass
class CheckerState:
    kb: KnowledgeBase
    mode: str = "ed"
    config: EngineConfig = field(default_factory=EngineConfig)
    on_inconsistent: str = "abort"  # ED-Check: "abort" | "alert"
    commit_entailed: bool = True
    fallback_active: bool = False
    # False once a commit relied on a solver timeout, so the KB may be inconsistent
    kb_certain: bool = True
    decide_calls: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown checker mode {self.mode!r}")
        if self.on_inconsistent not in ("abort", "alert"):
            raise ValueError("on_inconsistent must be 'abort' or 'alert'")

    @classmethod
    def new(cls, width: int, mode: str = "ed", threshold: int = 10, **kw) -> "CheckerState":
        return cls(KnowledgeBase(width, threshold=threshold), mode, **kw)

    @property
    def inconsistency_threshold(self) -> int:
        return self.kb.threshold

    def check(self, stmt: CIStatement) -> tuple[Verdict, DecisionTrace]:
        self.decide_calls += 1
        inst = CirInstance(self.kb.width, self.kb.extended(stmt))
        return decide(inst, stmt, self.config)


def _kb_trace() -> DecisionTrace:
    return DecisionTrace(stages={"kb": "consistent"}, concluded_by="kb")


def ed_check(state: CheckerState, q: CIQuery, backend: CIBackend) -> CheckOutcome:
    if state.mode != "ed":
        raise ValueError("ed_check needs a checker in 'ed' mode")
    res = backend.test(q)
    gamma = res.statement
    if gamma in state.kb and state.kb_certain:
        return CheckOutcome(gamma, "tested", res, _kb_trace())
    verdict, trace = state.check(gamma)
    if verdict is Verdict.CONSISTENT:
        state.kb.add(gamma, snapshot=True)
        state.kb_certain &= not trace.unknown
        return CheckOutcome(gamma, "tested", res, trace)
    if state.on_inconsistent == "abort":
        raise CheckAbort(CheckOutcome(gamma, "aborted", res, trace, alarm=True))
    log.warning("ED-Check: query %d produced a statement inconsistent with the KB; not committed",
                q.sequence_index)
    return CheckOutcome(gamma, "tested", res, trace, alarm=True)


def register_inconsistency(state: CheckerState) -> CheckerState:
    """Roll back to the previous snapshot and engage fallback at the threshold."""
    if state.kb.snapshots:
        state.kb.rollback()
    else:
        state.kb.inconsistency_count += 1
    if state.kb.exhausted:
        state.fallback_active = True
        log.warning("P-Check: %d inconsistencies, falling back to plain CI tests",
                    state.kb.inconsistency_count)
    return state


def p_check(state: CheckerState, q: CIQuery, backend: CIBackend) -> CheckOutcome:
    if state.mode != "p":
        raise ValueError("p_check needs a checker in 'p' mode")
    while not state.fallback_active:
        gamma = q.statement(True)
        not_gamma = negate(gamma)
        if state.kb_certain:
            # a consistent KB already fixes the answer to any statement it contains
            for known in (gamma, not_gamma):
                if known in state.kb:
                    return CheckOutcome(known, "entailed", CITestResult(known, source="entailed"), _kb_trace())
        v_ind, t_ind = state.check(gamma)
        if v_ind is Verdict.INCONSISTENT and state.kb_certain:
            return _entailed(state, not_gamma, t_ind)
        v_dep, t_dep = state.check(not_gamma)
        if v_ind is Verdict.INCONSISTENT and v_dep is Verdict.INCONSISTENT:
            register_inconsistency(state)
            continue
        if v_ind is Verdict.INCONSISTENT:
            return _entailed(state, not_gamma, t_ind)
        if v_dep is Verdict.INCONSISTENT:
            return _entailed(state, gamma, t_dep)
        res = backend.test(q)
        state.kb.add(res.statement, snapshot=True)
        state.kb_certain &= not (t_ind.unknown or t_dep.unknown)
        return CheckOutcome(res.statement, "tested", res, t_dep)
    res = backend.test(q)
    return CheckOutcome(res.statement, "tested", res, None)


def _entailed(state: CheckerState, stmt: CIStatement, trace: DecisionTrace) -> CheckOutcome:
    if state.commit_entailed:
        state.kb.add(stmt, snapshot=True)
        state.kb_certain &= not trace.unknown
    return CheckOutcome(stmt, "entailed", CITestResult(stmt, source="entailed"), trace)
