"""Ablation harness: corrupted knowledge bases checked under stage configurations."""

from __future__ import annotations

import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .citests import OracleBackend, QueryLog
from .core import CIStatement, Domain, Verdict, dumps_statements, negate, parse_statements
from .engine import CirInstance, EngineConfig, decide
from .graphs import DAG, sample_er_dag
from .pc import run_pc

# name -> (o1, o2, o3, smt)
STAGE_CONFIGS = {
    "o2": (False, True, False, False),
    "o2+o3": (False, True, True, False),
    "full": (False, False, False, True),
    "all": (True, True, True, True),
}


def stage_config(name: str, base: EngineConfig | None = None) -> EngineConfig:
    try:
        o1, o2, o3, smt = STAGE_CONFIGS[name]
    except KeyError:
        raise ValueError(f"unknown stage configuration {name!r}; choose from {sorted(STAGE_CONFIGS)}") from None
    return replace(base or EngineConfig(), o1=o1, o2=o2, o3=o3, smt=smt)


@dataclass
class BenchInstance:
    name: str
    domain: Domain
    statements: list[CIStatement]
    flipped: list[int] = field(default_factory=list)  # 0-based positions


def oracle_log(dag: DAG) -> tuple[Domain, list[CIStatement]]:
    """Distinct statements produced by a perfect-oracle PC run on ``dag``."""
    domain = Domain(dag.names)
    log = QueryLog(domain)
    run_pc(domain, OracleBackend(dag), log=log)
    seen, out = set(), []
    for s in log.statements():
        if s.triple not in seen:
            seen.add(s.triple)
            out.append(s)
    return domain, out


def corrupt(statements: list[CIStatement], rate_percent: float, rng: np.random.Generator):
    """Flip ``round(len * rate%)`` (at least one) statements.

    Statements are canonical, so a statement and its symmetric counterpart are
    the same triple and one flip covers both.
    """
    k = min(len(statements), max(1, round(len(statements) * rate_percent / 100.0)))
    idx = sorted(int(i) for i in rng.choice(len(statements), size=k, replace=False))
    out = list(statements)
    for i in idx:
        out[i] = negate(out[i])
    return out, idx


def build_corpus(n: int, instances: int, rate_percent: float = 5.0, seed: int = 0,
                 edge_prob: float = 0.5) -> list[BenchInstance]:
    """Corrupted copies of one oracle log drawn from a seeded ER network."""
    dag = sample_er_dag(n, edge_prob, seed)
    domain, base = oracle_log(dag)
    rng = np.random.default_rng(seed)
    corpus = []
    for i in range(instances):
        stmts, idx = corrupt(base, rate_percent, rng)
        corpus.append(BenchInstance(f"kb{i:03d}", domain, stmts, idx))
    return corpus


def write_corpus(corpus: list[BenchInstance], directory: Path):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for inst in corpus:
        (directory / f"{inst.name}.jsonl").write_text(dumps_statements(inst.domain, inst.statements))


def load_corpus(directory: Path) -> list[BenchInstance]:
    out = []
    for path in sorted(Path(directory).glob("*.jsonl")):
        domain, stmts = parse_statements(path.read_text())
        out.append(BenchInstance(path.stem, domain, stmts))
    return out


@dataclass
class ConfigSummary:
    refuted: int
    total: int
    mean_ms: float
    median_ms: float
    max_ms: float

    def to_json(self) -> dict:
        return {"refuted": self.refuted, "total": self.total, "mean_ms": round(self.mean_ms, 3),
                "median_ms": round(self.median_ms, 3), "max_ms": round(self.max_ms, 3)}


@dataclass
class BenchReport:
    configs: list[str]
    rows: list[dict] = field(default_factory=list)  # one per (instance, config)
    summary: dict[str, ConfigSummary] = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def refuted(self, config: str) -> set[str]:
        return {r["instance"] for r in self.rows if r["config"] == config and r["verdict"] == "inconsistent"}

    def times(self, config: str) -> list[float]:
        return [r["ms"] for r in self.rows if r["config"] == config]

    def to_json(self) -> dict:
        return {
            "spec": self.spec,
            "configs": self.configs,
            "summary": {k: v.to_json() for k, v in self.summary.items()},
            "rows": self.rows,
        }


def _summarize(rows: list[dict]) -> ConfigSummary:
    times = [r["ms"] for r in rows]
    if not times:
        return ConfigSummary(0, 0, 0.0, 0.0, 0.0)
    return ConfigSummary(sum(r["verdict"] == "inconsistent" for r in rows), len(rows),
                         statistics.fmean(times), statistics.median(times), max(times))


def _run_one(inst: BenchInstance, cfg_name: str, cfg: EngineConfig) -> dict:
    verdict, trace = decide(CirInstance(len(inst.domain), inst.statements), None, cfg)
    return {
        "instance": inst.name,
        "config": cfg_name,
        "verdict": verdict.value,
        "stage": trace.concluded_by,
        "ms": trace.timings_ms.get("total", 0.0),
        "unknown": trace.unknown,
    }


def run_bench(corpus: list[BenchInstance], configs=("o2", "o2+o3", "full", "all"),
              base: EngineConfig | None = None, workers: int = 1, spec: dict | None = None) -> BenchReport:
    """Decide every instance under every configuration; rows keep corpus order."""
    cfgs = {name: stage_config(name, base) for name in configs}
    jobs = [(inst, name) for name in configs for inst in corpus]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda j: _run_one(j[0], j[1], cfgs[j[1]]), jobs))
    report = BenchReport(list(configs), rows, spec=dict(spec or {}))
    for name in configs:
        report.summary[name] = _summarize([r for r in rows if r["config"] == name])
    return report
