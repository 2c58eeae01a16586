import pytest
from hypothesis import given, strategies as st

from cicheck.core import (CIStatement, Domain, DomainMismatch, KnowledgeBase, ValidationError, VarSet,
                          canonicalize, dumps_statements, is_marginal, negate, overlap, parse_statements)

W = 5


def vs(*idx, width=W):
    return VarSet.of(idx, width)


masks = st.integers(min_value=0, max_value=(1 << W) - 1)


@st.composite
def statements(draw):
    roles = draw(st.lists(st.integers(0, 3), min_size=W, max_size=W))
    x = sum(1 << i for i, r in enumerate(roles) if r == 1)
    y = sum(1 << i for i, r in enumerate(roles) if r == 2)
    z = sum(1 << i for i, r in enumerate(roles) if r == 3)
    if not x or not y:
        x, y = 1, 2
        z &= ~3
    return CIStatement.from_masks(x, y, z, draw(st.booleans()), W)


def test_varset_ops():
    a, b = vs(0, 1), vs(1, 2)
    assert (a | b).indices() == (0, 1, 2)
    assert (a & b).indices() == (1,)
    assert (a - b).indices() == (0,)
    assert vs(1) <= a and not a <= vs(1)
    assert 0 in a and 2 not in a
    assert len(VarSet.empty(W)) == 0 and not VarSet.empty(W)


def test_varset_width_checks():
    with pytest.raises(DomainMismatch):
        vs(0) | VarSet.of([0], 3)
    with pytest.raises(ValidationError):
        VarSet.of([7], 3)


def test_statement_validation():
    with pytest.raises(ValidationError):
        CIStatement(vs(0), vs(0, 1), vs(), True)
    with pytest.raises(ValidationError):
        CIStatement(VarSet.empty(W), vs(1), vs(), True)
    with pytest.raises(ValidationError):
        CIStatement(vs(0), vs(1), vs(1), True)


@given(statements())
def test_canonical_form(s):
    c = canonicalize(s)
    assert c.x.mask < c.y.mask
    assert canonicalize(c) == c
    swapped = CIStatement(s.y, s.x, s.z, s.independent)
    assert canonicalize(swapped) == c
    assert negate(negate(c)) == c and negate(c).triple == c.triple


@given(statements(), statements())
def test_overlap_is_support_intersection(a, b):
    assert overlap(a, b).mask == (a.support & b.support).mask


def test_marginal():
    assert is_marginal(CIStatement(vs(0), vs(1), vs(), False))
    assert not is_marginal(CIStatement(vs(0), vs(1), vs(2), False))


def test_domain_stmt_and_format():
    d = Domain(["X", "Y", "Z"])
    s = d.stmt("Y", "X", ["Z"], independent=False)
    assert s.x.indices() == (0,) and s.y.indices() == (1,)
    assert "Z" in d.format(s)
    with pytest.raises(ValidationError):
        d.index("Q")


@given(st.lists(statements(), max_size=8))
def test_jsonl_round_trip(stmts):
    d = Domain.of_size(W)
    canon = [canonicalize(s) for s in stmts]
    d2, back = parse_statements(dumps_statements(d, canon), d)
    assert back == canon


def test_parse_errors_carry_line_numbers():
    text = '{"x": ["A"], "y": ["B"], "z": [], "independent": true}\n{"x": ["A"], "y": ["B"]}\n'
    with pytest.raises(ValidationError, match="line 2"):
        parse_statements(text)
    with pytest.raises(ValidationError, match="line 1"):
        parse_statements("not json\n")


def test_parse_builds_domain_in_order_of_appearance():
    text = '{"x": ["B"], "y": ["A"], "z": ["C"], "independent": false}\n'
    d, stmts = parse_statements(text)
    assert d.names == ("B", "A", "C")
    assert stmts[0].z.indices() == (2,)


def test_kb_snapshot_rollback():
    d = Domain.of_size(3)
    kb = KnowledgeBase(3)
    a = d.stmt(0, 1)
    b = d.stmt(0, 2, [1], False)
    assert kb.add(a, snapshot=True)
    assert kb.add(b, snapshot=True)
    assert not kb.add(a)
    assert len(kb) == 2 and b in kb
    kb.rollback()
    assert list(kb) == [a] and kb.inconsistency_count == 1
    kb.rollback()
    assert len(kb) == 0
    with pytest.raises(IndexError):
        kb.rollback()


def test_kb_degenerate_and_extended():
    d = Domain.of_size(3)
    kb = KnowledgeBase(3, threshold=1)
    s = d.stmt(0, 1)
    kb.add(s)
    assert kb.extended(s) == [s]
    assert kb.extended(negate(s)) == [s, negate(s)]
    kb.add(negate(s))
    assert kb.degenerate
    kb.snapshot()
    kb.rollback()
    assert kb.exhausted
    with pytest.raises(DomainMismatch):
        kb.add(Domain.of_size(4).stmt(0, 1))
