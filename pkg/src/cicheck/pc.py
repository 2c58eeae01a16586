"""PC algorithm: order-increasing skeleton search, then orientation.

Pairs are visited in lexicographic ``(x, y)`` order and conditioning sets in
lexicographic combination order. Adjacency is re-read after every deletion.
"""

from __future__ import annotations

import itertools
import time
from collections import Counter
from dataclasses import dataclass, field

from .checkers import CheckAbort, CheckerState, CheckOutcome, ed_check, p_check
from .citests import CIBackend, CIQuery, QueryLog
from .core import Domain, VarSet
from .engine import EngineConfig
from .graphs import PDAG, SepsetTable, orient_cpdag


@dataclass
class PcConfig:
    max_order: int | None = None  # defaults to n - 2
    checker: str = "off"  # off | ed | p
    engine: EngineConfig = field(default_factory=EngineConfig)
    on_inconsistent: str = "abort"
    threshold: int = 10
    commit_entailed: bool = True
    meek_r4: bool = False

    def order_limit(self, n: int) -> int:
        top = max(n - 2, 0)
        if self.max_order is None:
            return top
        if self.max_order < 0:
            raise ValueError("max_order must be nonnegative")
        return min(self.max_order, top)


class DirectProvider:
    """Answers every query with the backend; no knowledge base."""

    def __init__(self, backend: CIBackend):
        self.backend = backend

    def ask(self, q: CIQuery) -> CheckOutcome:
        res = self.backend.test(q)
        return CheckOutcome(res.statement, "tested", res)


class CheckedProvider:
    def __init__(self, state: CheckerState, backend: CIBackend):
        self.state = state
        self.backend = backend

    def ask(self, q: CIQuery) -> CheckOutcome:
        if self.state.mode == "ed":
            return ed_check(self.state, q, self.backend)
        if self.state.mode == "p":
            return p_check(self.state, q, self.backend)
        res = self.backend.test(q)
        return CheckOutcome(res.statement, "tested", res)


def make_provider(width: int, backend: CIBackend, config: PcConfig):
    if config.checker == "off":
        return DirectProvider(backend)
    state = CheckerState.new(width, config.checker, threshold=config.threshold, config=config.engine,
                             on_inconsistent=config.on_inconsistent,
                             commit_entailed=config.commit_entailed)
    return CheckedProvider(state, backend)


@dataclass
class SkeletonCounts:
    tests: int = 0
    entailed: int = 0
    per_order: Counter = field(default_factory=Counter)
    alarms: list[int] = field(default_factory=list)  # query indices
    first_alarm_test: int | None = None  # backend-test index of the first alarm

    @property
    def queries(self) -> int:
        return self.tests + self.entailed


@dataclass
class PcRunReport:
    pdag: PDAG
    sepsets: SepsetTable
    tests: int
    entailed: int
    per_order: dict[int, int]
    aborted: bool = False
    alarms: list[int] = field(default_factory=list)
    first_alarm_test: int | None = None
    wall_ms: float = 0.0
    kb_inconsistencies: int = 0
    fallback: bool = False
    log: QueryLog | None = None

    @property
    def queries(self) -> int:
        return self.tests + self.entailed

    def to_json(self, timings: bool = True) -> dict:
        out = {
            "pdag": self.pdag.to_json(),
            "sepsets": self.sepsets.to_json(),
            "tests": self.tests,
            "entailed": self.entailed,
            "queries": self.queries,
            "per_order": {str(k): v for k, v in sorted(self.per_order.items())},
            "aborted": self.aborted,
            "alarms": self.alarms,
            "first_alarm_test": self.first_alarm_test,
            "kb_inconsistencies": self.kb_inconsistencies,
            "fallback": self.fallback,
            "orientation_conflicts": self.pdag.conflicts,
        }
        if timings:
            out["wall_ms"] = round(self.wall_ms, 3)
        return out


def learn_skeleton(domain: Domain, provider, config: PcConfig | None = None,
                   log: QueryLog | None = None, counts: SkeletonCounts | None = None):
    """Returns ``(skeleton, sepsets, counts)``; ``skeleton`` is fully undirected."""
    config = config or PcConfig()
    n = len(domain)
    counts = counts if counts is not None else SkeletonCounts()
    adj = [set(range(n)) - {i} for i in range(n)]
    sepsets = SepsetTable()
    limit = config.order_limit(n)

    def single(i):
        return VarSet.of([i], n)

    order = 0
    while order <= limit:
        any_pair = False
        for x in range(n):
            for y in range(n):
                if y not in adj[x]:
                    continue
                nbrs = sorted(adj[x] - {y})
                if len(nbrs) < order:
                    continue
                any_pair = True
                for s in itertools.combinations(nbrs, order):
                    if y not in adj[x]:
                        break
                    q = CIQuery(single(x), single(y), VarSet.of(s, n), counts.tests + 1)
                    try:
                        outcome = provider.ask(q)
                    except CheckAbort as exc:
                        outcome = exc.outcome
                    if outcome.action == "entailed":
                        counts.entailed += 1
                    else:
                        counts.tests += 1
                    counts.per_order[order] += 1
                    if log is not None:
                        log.record(counts.queries, outcome.result)
                    if outcome.alarm:
                        counts.alarms.append(counts.queries)
                        if counts.first_alarm_test is None:
                            counts.first_alarm_test = counts.tests
                    if outcome.action == "aborted":
                        exc = CheckAbort(outcome)
                        exc.partial = (_skeleton(adj, domain), sepsets, counts)
                        raise exc
                    if outcome.alarm:
                        continue  # rejected answer: keep the edge
                    if outcome.statement.independent:
                        adj[x].discard(y)
                        adj[y].discard(x)
                        sepsets.record(x, y, s)
                        break
        if not any_pair:
            break
        order += 1
    return _skeleton(adj, domain), sepsets, counts


def _skeleton(adj, domain: Domain) -> PDAG:
    n = len(adj)
    edges = frozenset((a, b) for a in range(n) for b in adj[a] if a < b)
    return PDAG(n, frozenset(), edges, domain.names)


def run_pc(domain: Domain, backend: CIBackend, config: PcConfig | None = None,
           log: QueryLog | None = None) -> PcRunReport:
    """Full PC run. A checker abort yields a report with ``aborted=True``."""
    config = config or PcConfig()
    provider = make_provider(len(domain), backend, config)
    counts = SkeletonCounts()
    t0 = time.perf_counter()
    aborted = False
    try:
        skeleton, sepsets, counts = learn_skeleton(domain, provider, config, log, counts)
        pdag = orient_cpdag(skeleton, sepsets, config.meek_r4)
    except CheckAbort as exc:
        # partial skeleton, left unoriented
        aborted = True
        pdag, sepsets, counts = exc.partial
    state = getattr(provider, "state", None)
    return PcRunReport(
        pdag=pdag, sepsets=sepsets, tests=counts.tests, entailed=counts.entailed,
        per_order=dict(counts.per_order), aborted=aborted, alarms=counts.alarms,
        first_alarm_test=counts.first_alarm_test, wall_ms=(time.perf_counter() - t0) * 1000,
        kb_inconsistencies=state.kb.inconsistency_count if state else 0,
        fallback=state.fallback_active if state else False, log=log,
    )
