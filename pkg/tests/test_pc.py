import itertools

import pytest

from cicheck.citests import CITestResult, OracleBackend, QueryLog
from cicheck.core import Domain, negate
from cicheck.graphs import DAG, d_separated, sample_er_dag
from cicheck.pc import PcConfig, run_pc
from oracles import markov_class

XYZ = Domain(["X", "Y", "Z"])
COLLIDER = DAG(3, frozenset({(0, 2), (1, 2)}))  # X -> Z <- Y


class FlipTriple:
    """Oracle answers, except that the given triple is negated."""

    def __init__(self, dag, triple):
        self.oracle = OracleBackend(dag)
        self.triple = triple

    def test(self, q):
        res = self.oracle.test(q)
        if res.statement.triple != self.triple:
            return res
        return CITestResult(negate(res.statement), source="injected")


def compelled(g):
    members = markov_class(g)
    directed = {e for e in members[0] if all(e in m for m in members)}
    undirected = {(min(a, b), max(a, b)) for a, b in members[0] if (a, b) not in directed}
    return directed, undirected


def test_chain_sepset():
    chain = DAG(3, frozenset({(0, 1), (1, 2)}))
    rep = run_pc(Domain(["A", "B", "C"]), OracleBackend(chain))
    assert rep.sepsets.get_set(0, 2) == frozenset({1})
    assert rep.pdag.undirected == {(0, 1), (1, 2)} and not rep.pdag.directed


def test_collider_is_oriented():
    rep = run_pc(XYZ, OracleBackend(COLLIDER))
    assert rep.pdag.directed == {(0, 2), (1, 2)} and not rep.pdag.undirected
    assert rep.sepsets.get_set(0, 1) == frozenset()


def test_injected_error_deletes_true_edge_without_checker():
    bad = XYZ.stmt("Y", "Z", ("X",)).triple
    rep = run_pc(XYZ, FlipTriple(COLLIDER, bad))
    assert not rep.pdag.adjacent(1, 2)
    assert rep.sepsets.get_set(1, 2) == frozenset({0})


def test_ed_check_aborts_on_injected_error():
    bad = XYZ.stmt("Y", "Z", ("X",)).triple
    rep = run_pc(XYZ, FlipTriple(COLLIDER, bad), PcConfig(checker="ed"))
    assert rep.aborted and rep.alarms == [rep.queries]
    assert rep.pdag.adjacent(1, 2) and not rep.pdag.directed


def test_ed_alert_keeps_the_edge():
    bad = XYZ.stmt("Y", "Z", ("X",)).triple
    rep = run_pc(XYZ, FlipTriple(COLLIDER, bad), PcConfig(checker="ed", on_inconsistent="alert"))
    assert not rep.aborted and len(rep.alarms) == 1
    assert rep.pdag.directed == {(0, 2), (1, 2)}


@pytest.mark.parametrize("n,seed", [(n, s) for n in range(3, 8) for s in range(4)])
def test_oracle_pc_recovers_the_markov_class(n, seed):
    g = sample_er_dag(n, 0.4, 100 * n + seed)
    rep = run_pc(Domain.of_size(n), OracleBackend(g))
    assert rep.pdag.skeleton() == g.skeleton()
    for key, s in rep.sepsets.items():
        a, b = sorted(key)
        assert d_separated(g, [a], [b], s)
    if n <= 5:
        directed, undirected = compelled(g)
        assert rep.pdag.directed == directed and rep.pdag.undirected == undirected


def test_max_order_limits_conditioning():
    g = sample_er_dag(5, 0.5, 1)
    rep = run_pc(Domain.of_size(5), OracleBackend(g), PcConfig(max_order=0))
    assert set(rep.per_order) == {0}
    with pytest.raises(ValueError):
        PcConfig(max_order=-1).order_limit(4)


@pytest.mark.parametrize("seed", range(2))
def test_p_check_same_pdag_fewer_tests(seed):
    g = sample_er_dag(5, 0.5, seed)
    d = Domain.of_size(5)
    plain = run_pc(d, OracleBackend(g))
    checked = run_pc(d, OracleBackend(g), PcConfig(checker="p"))
    assert checked.pdag == plain.pdag
    assert checked.queries == plain.tests
    assert checked.tests < plain.tests and checked.entailed > 0


def test_query_log_and_report_json():
    log = QueryLog(XYZ)
    rep = run_pc(XYZ, OracleBackend(COLLIDER), log=log)
    assert len(log.records) == rep.queries
    assert [r["index"] for r in log.records] == list(range(1, rep.queries + 1))
    js = rep.to_json(timings=False)
    assert "wall_ms" not in js and js["tests"] == rep.tests
    assert js == run_pc(XYZ, OracleBackend(COLLIDER)).to_json(timings=False)


def test_every_adjacent_pair_is_queried_in_both_directions_at_order_zero():
    g = DAG(3, frozenset(itertools.combinations(range(3), 2)))
    rep = run_pc(XYZ, OracleBackend(g))
    assert rep.per_order[0] == 6
