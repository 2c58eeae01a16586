import itertools
import json

import pytest

from cicheck.core import VarSet
from cicheck.graphs import (DAG, PDAG, CycleError, SepsetTable, d_separated, enumerate_dsep_statements,
                            orient_cpdag, sample_er_dag, shd)
from oracles import dsep_bruteforce, markov_class


def chain():
    return DAG(3, {(0, 1), (1, 2)}, ("A", "B", "C"))


def collider():
    return DAG(3, {(0, 2), (1, 2)}, ("X", "Y", "Z"))


def test_cycle_rejected():
    with pytest.raises(CycleError):
        DAG(3, {(0, 1), (1, 2), (2, 0)})


def test_dag_json_round_trip():
    g = sample_er_dag(6, 0.5, 3)
    assert DAG.from_json(json.loads(json.dumps(g.to_json()))) == g


def test_dsep_textbook_cases():
    g = chain()
    assert not d_separated(g, 0, 2)
    assert d_separated(g, 0, 2, [1])
    g = collider()
    assert d_separated(g, 0, 1)
    assert not d_separated(g, 0, 1, [2])


def test_dsep_descendant_of_collider_opens_path():
    g = DAG(4, {(0, 2), (1, 2), (2, 3)})
    assert not d_separated(g, 0, 1, [3])


def test_dsep_accepts_varsets():
    g = chain()
    assert d_separated(g, VarSet.of([0], 3), VarSet.of([2], 3), VarSet.of([1], 3))


@pytest.mark.parametrize("seed", range(15))
def test_dsep_matches_path_enumeration(seed):
    n = 3 + seed % 3
    g = sample_er_dag(n, 0.5, 100 + seed)
    for x, y in itertools.combinations(range(n), 2):
        rest = [v for v in range(n) if v not in (x, y)]
        for k in range(len(rest) + 1):
            for z in itertools.combinations(rest, k):
                assert d_separated(g, x, y, z) == dsep_bruteforce(g, [x], [y], z)


def test_enumerate_dsep_statements_counts():
    g = chain()
    stmts = enumerate_dsep_statements(g)
    # 3 pairs x {empty, the third variable}
    assert len(stmts) == 6
    indep = [s for s in stmts if s.independent]
    assert len(indep) == 1 and indep[0].z.indices() == (1,)


def test_sepset_table():
    t = SepsetTable()
    t.record(2, 0, [1])
    assert t.get_set(0, 2) == frozenset({1})
    assert t.get_set(0, 1) is None
    with pytest.raises(ValueError):
        t.record(0, 1, [0])


def test_orient_collider():
    skel = PDAG(3, frozenset(), frozenset({(0, 2), (1, 2)}))
    sep = SepsetTable()
    sep.record(0, 1, [])
    out = orient_cpdag(skel, sep)
    assert out.status(0, 2) == "->" and out.status(1, 2) == "->"


def test_orient_chain_stays_undirected():
    skel = PDAG(3, frozenset(), frozenset({(0, 1), (1, 2)}))
    sep = SepsetTable()
    sep.record(0, 2, [1])
    out = orient_cpdag(skel, sep)
    assert out.undirected == frozenset({(0, 1), (1, 2)})


def test_meek_r1_propagates():
    # 0 -> 2 <- 1 and 2 - 3: R1 orients 2 -> 3
    skel = PDAG(4, frozenset(), frozenset({(0, 2), (1, 2), (2, 3)}))
    sep = SepsetTable()
    sep.record(0, 1, [])
    sep.record(0, 3, [2])
    sep.record(1, 3, [2])
    out = orient_cpdag(skel, sep)
    assert out.status(2, 3) == "->"


def _true_sepsets(g):
    sep = SepsetTable()
    for x, y in itertools.combinations(range(g.n), 2):
        if g.adjacent(x, y):
            continue
        rest = [v for v in range(g.n) if v not in (x, y)]
        for k in range(len(rest) + 1):
            found = next((z for z in itertools.combinations(rest, k) if d_separated(g, x, y, z)), None)
            if found is not None:
                sep.record(x, y, found)
                break
    return sep


@pytest.mark.parametrize("seed", range(25))
def test_cpdag_matches_markov_equivalence_class(seed):
    g = sample_er_dag(5, 0.5, 200 + seed)
    skel = PDAG(g.n, frozenset(), frozenset(g.edges))
    out = orient_cpdag(skel, _true_sepsets(g))
    members = markov_class(g)
    compelled = set.intersection(*(set(m) for m in members))
    assert out.directed == frozenset(compelled)
    assert out.skeleton() == g.skeleton()


def test_shd_exhaustive_on_three_nodes():
    statuses = ["", "->", "<-", "-"]
    pairs = list(itertools.combinations(range(3), 2))
    graphs = []
    for combo in itertools.product(statuses, repeat=3):
        d, u = set(), set()
        for (a, b), s in zip(pairs, combo):
            if s == "->":
                d.add((a, b))
            elif s == "<-":
                d.add((b, a))
            elif s == "-":
                u.add((a, b))
        graphs.append((combo, PDAG(3, frozenset(d), frozenset(u))))
    for (ca, a), (cb, b) in itertools.product(graphs, repeat=2):
        assert shd(a, b) == sum(x != y for x, y in zip(ca, cb))


def test_shd_with_dag_argument():
    g = collider()
    assert shd(g, g.to_pdag()) == 0
    assert shd(g, PDAG(3, frozenset(), frozenset())) == 2


@pytest.mark.parametrize("seed", range(10))
def test_er_sampler_is_acyclic_and_seeded(seed):
    a = sample_er_dag(7, 0.4, seed)
    assert a == sample_er_dag(7, 0.4, seed)
    assert len(a.topological_order()) == 7


def test_er_extremes():
    assert not sample_er_dag(5, 0.0, 1).edges
    assert len(sample_er_dag(5, 1.0, 1).edges) == 10
    with pytest.raises(ValueError):
        sample_er_dag(3, 1.5, 0)
