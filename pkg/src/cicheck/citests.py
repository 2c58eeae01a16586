"""CI-test backends: d-separation oracle, stratified chi-squared, error injection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Protocol

import numpy as np
from scipy.special import gammaincc

from .bayesnet import Dataset
from .core import CIStatement, Domain, ValidationError, VarSet, canonicalize, negate
from .graphs import DAG, d_separated

MIN_STRATUM = 5
SOURCES = ("oracle", "chi2", "injected", "entailed")


@dataclass(frozen=True)
class CIQuery:
    x: VarSet
    y: VarSet
    z: VarSet
    sequence_index: int = 0

    def __post_init__(self):
        # reuse the statement validator
        CIStatement(self.x, self.y, self.z, True)

    def statement(self, independent: bool) -> CIStatement:
        return canonicalize(CIStatement(self.x, self.y, self.z, independent))


@dataclass(frozen=True)
class CITestResult:
    statement: CIStatement
    p_value: float | None = None
    statistic: float | None = None
    df: int | None = None
    source: str = "oracle"
    note: str = ""

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")


class CIBackend(Protocol):
    def test(self, q: CIQuery) -> CITestResult: ...


def oracle_test(g: DAG, q: CIQuery) -> CITestResult:
    return CITestResult(q.statement(d_separated(g, q.x, q.y, q.z)), source="oracle")


class OracleBackend:
    """Perfect CI oracle answering by d-separation in ``dag``."""

    def __init__(self, dag: DAG):
        self.dag = dag

    def test(self, q: CIQuery) -> CITestResult:
        return oracle_test(self.dag, q)


def chi_squared_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-squared distribution (regularized upper incomplete gamma)."""
    if df <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, statistic / 2.0))


def _stratum_statistic(xs: np.ndarray, ys: np.ndarray) -> tuple[float, int]:
    xv, xi = np.unique(xs, return_inverse=True)
    yv, yi = np.unique(ys, return_inverse=True)
    table = np.zeros((len(xv), len(yv)))
    np.add.at(table, (xi, yi), 1)
    total = table.sum()
    expected = table.sum(axis=1, keepdims=True) * table.sum(axis=0, keepdims=True) / total
    stat = float(((table - expected) ** 2 / expected).sum())
    return stat, (len(xv) - 1) * (len(yv) - 1)


def chi2_test(data: Dataset, q: CIQuery, alpha: float = 0.05) -> CITestResult:
    """Pearson chi-squared summed over the strata of ``z``.

    Strata with fewer than ``MIN_STRATUM`` rows are skipped. Independence is
    declared when ``p >= alpha``.
    """
    if len(q.x) != 1 or len(q.y) != 1:
        raise ValidationError("chi-squared test needs singleton x and y")
    (xi,), (yi,) = q.x.indices(), q.y.indices()
    zs = q.z.indices()
    xcol, ycol = data.column(xi), data.column(yi)
    if zs:
        _, strata = np.unique(data.data[:, list(zs)], axis=0, return_inverse=True)
        strata = strata.reshape(-1)
    else:
        strata = np.zeros(data.m, dtype=np.int64)
    stat, df, used = 0.0, 0, 0
    order = np.argsort(strata, kind="stable")
    bounds = np.flatnonzero(np.diff(strata[order])) + 1
    for rows in np.split(order, bounds):
        if len(rows) < MIN_STRATUM:
            continue
        used += 1
        s, d = _stratum_statistic(xcol[rows], ycol[rows])
        stat += s
        df += d
    if not used:
        return CITestResult(q.statement(True), 1.0, 0.0, 0, "chi2", "low-support")
    p = chi_squared_sf(stat, df)
    return CITestResult(q.statement(p >= alpha), p, stat, df, "chi2")


class Chi2Backend:
    def __init__(self, data: Dataset, alpha: float = 0.05):
        self.data = data
        self.alpha = alpha

    def test(self, q: CIQuery) -> CITestResult:
        return chi2_test(self.data, q, self.alpha)


class InjectingBackend:
    """Wraps a backend and negates the k-th issued test for every k in ``flip_indices``."""

    def __init__(self, inner: CIBackend, flip_indices: Iterable[int] = ()):
        self.inner = inner
        self.flip_indices = frozenset(flip_indices)
        if any(k < 1 for k in self.flip_indices):
            raise ValueError("flip indices are 1-based")
        self.issued = 0

    def test(self, q: CIQuery) -> CITestResult:
        self.issued += 1
        res = self.inner.test(q)
        if self.issued not in self.flip_indices:
            return res
        return CITestResult(negate(res.statement), res.p_value, res.statistic, res.df, "injected")


def inject_errors(backend: CIBackend, flip_indices: Iterable[int]) -> InjectingBackend:
    return InjectingBackend(backend, flip_indices)


def flip_indices_for_rate(total_tests: int, rate_percent: float, seed: int) -> list[int]:
    """``k = round(K * r%)`` (at least one) distinct indices from ``1..K``."""
    if total_tests < 1:
        return []
    k = min(total_tests, max(1, round(total_tests * rate_percent / 100.0)))
    rng = np.random.default_rng(seed)
    return sorted(int(i) + 1 for i in rng.choice(total_tests, size=k, replace=False))


@dataclass
class QueryLog:
    """Per-query JSONL log shared by PC runs and checkers."""

    domain: Domain
    records: list[dict] = field(default_factory=list)

    def record(self, index: int, result: CITestResult):
        s = result.statement
        self.records.append({
            "index": index,
            "x": self.domain.set_names(s.x),
            "y": self.domain.set_names(s.y),
            "z": self.domain.set_names(s.z),
            "independent": s.independent,
            "p_value": result.p_value,
            "source": result.source,
        })

    def dumps(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in self.records)

    def statements(self) -> list[CIStatement]:
        return [self.domain.stmt(r["x"], r["y"], r["z"], r["independent"]) for r in self.records]
