"""Four-stage CI-consistency decision procedure.

1. marginality analysis (proves consistency of marginal-only sets),
2. graphoid saturation (refutes),
3. overlap decomposition: one small SMT instance per axiom, raced against
4. the full SMT instance.

Solver ``unknown`` (timeouts) counts as consistent.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from .core import CIStatement, StageResult, Verdict, canonicalize, is_marginal, overlap
from .encoding import AXIOMS, SmtInstance, emit_smtlib
from .graphoid import Closure, ClosureCapExceeded
from .solver import SolverConfigError, SolverOutcome, Status, resolve_solver, solve_external

log = logging.getLogger(__name__)

STAGES = ("o1", "o2", "o3", "smt")


@dataclass
class EngineConfig:
    o1: bool = True
    o2: bool = True
    o3: bool = True
    smt: bool = True
    closure_cap: int = 100_000
    timeout_ms: int = 60_000
    solver: str | None = None
    axioms: tuple[str, ...] = AXIOMS
    style: str = "standard"
    # up to this width the full instance uses the propositional ground form
    ground_max_width: int = 7
    jobs: int | None = None

    def workers(self, n_tasks: int) -> int:
        jobs = self.jobs or max(2, os.cpu_count() or 1)
        return max(1, min(jobs, n_tasks))


@dataclass
class CirInstance:
    width: int
    statements: list[CIStatement]

    def __post_init__(self):
        self.statements = [canonicalize(s) for s in self.statements]
        if any(s.width != self.width for s in self.statements):
            raise ValueError("statement widths differ from instance width")


@dataclass
class DecisionTrace:
    stages: dict[str, str] = field(default_factory=dict)
    timings_ms: dict[str, float] = field(default_factory=dict)
    concluded_by: str = ""
    subproblems: int = 0
    solver_calls: int = 0
    solver_status: dict[str, str] = field(default_factory=dict)
    unknown: bool = False

    def to_json(self) -> dict:
        return {
            "stages": dict(self.stages),
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
            "concluded_by": self.concluded_by,
            "subproblems": self.subproblems,
            "solver_calls": self.solver_calls,
            "solver_status": dict(self.solver_status),
            "unknown": self.unknown,
        }


def _triples(statements):
    return {s.triple: s.independent for s in statements}


def _degenerate(statements) -> bool:
    seen = {}
    for s in statements:
        if seen.setdefault(s.triple, s.independent) != s.independent:
            return True
    return False


def o1_marginality(inst: CirInstance) -> StageResult:
    """Non-degenerate sets of pairwise marginal statements always have a model.

    Only statements between single variables qualify: with set-valued sides,
    e.g. {A ⊥ BC, B ⊥ AC, AB ⊥̸ C}, marginal statements can contradict each other.
    """
    marginal = [s for s in inst.statements if is_marginal(s)]
    if _degenerate(marginal):
        return StageResult.INCONSISTENT
    pairwise = all(len(s.x) == 1 and len(s.y) == 1 for s in marginal)
    if pairwise and len(marginal) == len(inst.statements):
        return StageResult.CONSISTENT
    return StageResult.INCONCLUSIVE


def o2_graphoid(inst: CirInstance, cap: int = 100_000) -> StageResult:
    if cap < len(inst.statements):
        raise ValueError("closure cap below the number of statements")
    if _degenerate(inst.statements):
        return StageResult.INCONSISTENT
    dependent = frozenset(s.triple for s in inst.statements if not s.independent)
    if not dependent:
        return StageResult.INCONCLUSIVE
    closure = Closure(cap, stop_on=dependent)
    try:
        for s in inst.statements:
            if s.independent:
                closure.add(*s.triple)
        closure.saturate()
    except ClosureCapExceeded:
        log.info("graphoid closure hit the cap of %d", cap)
        return StageResult.INCONCLUSIVE
    return StageResult.INCONSISTENT if closure.hit is not None else StageResult.INCONCLUSIVE


def o3_subproblems(inst: CirInstance, gamma: CIStatement, axioms=AXIOMS, **kw) -> list[SmtInstance]:
    """One single-axiom instance per axiom over the statements overlapping ``gamma``."""
    gamma = canonicalize(gamma)
    related = [s for s in inst.statements if s != gamma and overlap(s, gamma)]
    facts = related + [gamma]
    return [SmtInstance.from_statements(inst.width, facts, axioms=(ax,), label=f"o3:{ax}", **kw)
            for ax in AXIOMS if ax in axioms]


def _is_z3(solver: str | None) -> bool:
    try:
        return os.path.basename(resolve_solver(solver)).startswith("z3")
    except SolverConfigError:
        return False


def full_instance(inst: CirInstance, config: EngineConfig) -> SmtInstance:
    common = dict(axioms=config.axioms, timeout_ms=config.timeout_ms, style=config.style)
    if config.style == "standard" and inst.width <= config.ground_max_width:
        tactic = "sat" if _is_z3(config.solver) else None
        return SmtInstance.from_statements(inst.width, inst.statements, form="ground",
                                           label="smt:ground", tactic=tactic, **common)
    return SmtInstance.from_statements(inst.width, inst.statements, label="smt", **common)


def _run_portfolio(tasks: list[SmtInstance], config: EngineConfig, trace: DecisionTrace):
    """Race the SMT tasks. Returns (status, label) of the deciding result.

    UNSAT from any task decides. SAT decides only when it comes from a full
    instance (subproblems are weaker than the full instance).
    """
    cancel = threading.Event()
    outcomes: dict[str, SolverOutcome] = {}
    decided = None
    with ThreadPoolExecutor(max_workers=config.workers(len(tasks))) as pool:
        futures = {}
        for t in tasks:
            script = emit_smtlib(t)
            futures[pool.submit(_solve_task, script, t.timeout_ms, config.solver, cancel)] = t.label
        pending = set(futures)
        try:
            while pending and decided is None:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    label = futures[fut]
                    out = fut.result()
                    if out is None:
                        continue
                    outcomes[label] = out
                    if out.status is Status.UNSAT:
                        decided = (Status.UNSAT, label)
                        break
                    if out.status is Status.SAT and label.startswith("smt"):
                        decided = (Status.SAT, label)
                        break
        finally:
            cancel.set()
    trace.solver_calls += len(outcomes)
    for label, out in outcomes.items():
        trace.solver_status[label] = out.status.value + (f"({out.reason})" if out.reason else "")
    return decided


def _solve_task(script, timeout_ms, solver, cancel):
    if cancel.is_set():
        return None
    return solve_external(script, timeout_ms, solver, cancel)


def decide(inst: CirInstance, incoming: CIStatement | None = None,
           config: EngineConfig | None = None) -> tuple[Verdict, DecisionTrace]:
    config = config or EngineConfig()
    trace = DecisionTrace()

    def stage(name, fn):
        t0 = time.perf_counter()
        res = fn()
        trace.timings_ms[name] = (time.perf_counter() - t0) * 1000
        trace.stages[name] = res.value
        return res

    def conclude(name, verdict):
        trace.concluded_by = name
        trace.timings_ms["total"] = sum(v for k, v in trace.timings_ms.items() if k != "total")
        return verdict, trace

    if config.o1:
        r = stage("o1", lambda: o1_marginality(inst))
        if r is StageResult.CONSISTENT:
            return conclude("o1", Verdict.CONSISTENT)
        if r is StageResult.INCONSISTENT:
            return conclude("o1", Verdict.INCONSISTENT)
    if config.o2:
        r = stage("o2", lambda: o2_graphoid(inst, max(config.closure_cap, len(inst.statements))))
        if r is StageResult.INCONSISTENT:
            return conclude("o2", Verdict.INCONSISTENT)

    # the full instance goes first so it is never starved by subproblems
    tasks = [full_instance(inst, config)] if config.smt else []
    if config.o3 and inst.statements:
        gamma = incoming if incoming is not None else inst.statements[-1]
        subs = o3_subproblems(inst, gamma, config.axioms, timeout_ms=config.timeout_ms, style=config.style)
        trace.subproblems = len(subs)
        tasks += subs
    if not tasks:
        trace.stages["fallback"] = StageResult.CONSISTENT.value
        return conclude("fallback", Verdict.CONSISTENT)

    t0 = time.perf_counter()
    decided = _run_portfolio(tasks, config, trace)
    elapsed = (time.perf_counter() - t0) * 1000
    if decided is not None and decided[0] is Status.UNSAT:
        name = "o3" if decided[1].startswith("o3") else "smt"
        trace.timings_ms[name] = elapsed
        trace.stages[name] = StageResult.INCONSISTENT.value
        if name == "smt" and config.o3:
            trace.stages["o3"] = StageResult.INCONCLUSIVE.value
        return conclude(name, Verdict.INCONSISTENT)
    if config.o3:
        trace.stages["o3"] = StageResult.INCONCLUSIVE.value
    if config.smt:
        trace.timings_ms["smt"] = elapsed
        trace.stages["smt"] = StageResult.CONSISTENT.value
        trace.unknown = decided is None
        return conclude("smt", Verdict.CONSISTENT)
    trace.timings_ms["o3"] = elapsed
    trace.stages["fallback"] = StageResult.CONSISTENT.value
    return conclude("fallback", Verdict.CONSISTENT)
