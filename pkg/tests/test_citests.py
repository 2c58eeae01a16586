import json
from collections import defaultdict

import numpy as np
import pytest
from scipy import stats

from cicheck.bayesnet import Dataset
from cicheck.citests import (MIN_STRATUM, Chi2Backend, CIQuery, InjectingBackend, OracleBackend, QueryLog,
                             chi2_test, chi_squared_sf, flip_indices_for_rate)
from cicheck.core import Domain, VarSet
from cicheck.graphs import DAG


def q(x, y, z=(), n=3, index=0):
    return CIQuery(VarSet.of([x], n), VarSet.of([y], n), VarSet.of(z, n), index)


def chi2_reference(data, x, y, zs):
    """Pearson statistic summed over strata, built with plain loops and scipy."""
    strata = defaultdict(list)
    for row in data:
        strata[tuple(row[list(zs)])].append(row)
    stat, df = 0.0, 0
    for rows in strata.values():
        if len(rows) < MIN_STRATUM:
            continue
        xv = sorted({r[x] for r in rows})
        yv = sorted({r[y] for r in rows})
        table = np.zeros((len(xv), len(yv)))
        for r in rows:
            table[xv.index(r[x]), yv.index(r[y])] += 1
        if min(table.shape) > 1:
            s, _, d, _ = stats.chi2_contingency(table, correction=False)
            stat += s
            df += d
    return stat, df, (stats.chi2.sf(stat, df) if df else 1.0)


def test_survival_function_matches_scipy():
    for s, d in [(0.5, 1), (3.84, 1), (10.0, 4), (50.0, 30)]:
        assert chi_squared_sf(s, d) == pytest.approx(stats.chi2.sf(s, d), rel=1e-10)
    assert chi_squared_sf(3.0, 0) == 1.0


@pytest.mark.parametrize("seed", range(6))
def test_chi2_matches_reference(seed):
    rng = np.random.default_rng(seed)
    m = 300
    z = rng.integers(0, 3, m)
    x = (z + rng.integers(0, 2, m)) % 3
    y = (x * (seed % 2) + rng.integers(0, 3, m)) % 3
    data = np.column_stack([x, y, z])
    ds = Dataset(("X", "Y", "Z"), data)
    for zs in ([], [2]):
        res = chi2_test(ds, q(0, 1, zs))
        stat, df, p = chi2_reference(data, 0, 1, zs)
        assert res.statistic == pytest.approx(stat, rel=1e-9)
        assert res.df == df
        assert res.p_value == pytest.approx(p, rel=1e-9, abs=1e-300)


def test_small_strata_skipped_and_low_support():
    data = np.array([[0, 0, k] for k in range(8)])
    res = chi2_test(Dataset(("X", "Y", "Z"), data), q(0, 1, [2]))
    assert res.statement.independent and res.note == "low-support" and res.p_value == 1.0


def test_deterministic_copy_is_dependent():
    rng = np.random.default_rng(0)
    x = rng.integers(0, 2, 2000)
    res = Chi2Backend(Dataset(("X", "Y"), np.column_stack([x, x])), 0.05).test(q(0, 1, n=2))
    assert not res.statement.independent and res.p_value < 1e-12


def test_oracle_backend_returns_canonical_statement():
    g = DAG(3, {(0, 1), (1, 2)})
    res = OracleBackend(g).test(q(2, 0, [1]))
    assert res.statement.independent and res.source == "oracle"
    assert res.statement.x.indices() == (0,)


def test_injection_flips_exact_indices():
    g = DAG(3, {(0, 1), (1, 2)})
    inj = InjectingBackend(OracleBackend(g), [2])
    first, second, third = (inj.test(q(0, 2, [1])) for _ in range(3))
    assert first.statement.independent and third.statement.independent
    assert not second.statement.independent and second.source == "injected"
    assert inj.issued == 3
    with pytest.raises(ValueError):
        InjectingBackend(OracleBackend(g), [0])


def test_flip_indices_for_rate():
    idx = flip_indices_for_rate(200, 5, seed=1)
    assert len(idx) == 10 and len(set(idx)) == 10 and all(1 <= i <= 200 for i in idx)
    assert idx == flip_indices_for_rate(200, 5, seed=1)
    assert len(flip_indices_for_rate(10, 1, seed=0)) == 1
    assert flip_indices_for_rate(0, 5, seed=0) == []


def test_query_log_round_trip():
    d = Domain(["A", "B", "C"])
    g = DAG(3, {(0, 1), (1, 2)}, d.names)
    logq = QueryLog(d)
    res = OracleBackend(g).test(q(0, 2, [1]))
    logq.record(1, res)
    rec = json.loads(logq.dumps())
    assert rec == {"index": 1, "x": ["A"], "y": ["C"], "z": ["B"], "independent": True,
                   "p_value": None, "source": "oracle"}
    assert logq.statements() == [res.statement]


def test_false_positive_rate_is_calibrated():
    # p-values under the null should be uniform; allow about 2.5 standard errors
    qq = q(0, 1, n=2)
    rejected = 0
    for seed in range(2000):
        rng = np.random.default_rng(10_000 + seed)
        data = Dataset(("X", "Y"), rng.integers(0, 2, (2000, 2)))
        rejected += not Chi2Backend(data).test(qq).statement.independent
    assert 0.04 <= rejected / 2000 <= 0.06
