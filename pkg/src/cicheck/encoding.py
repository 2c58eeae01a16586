"""SMT-LIB2 encoding of CI-consistency instances.

Sets are bit-vectors of the domain width, ``CI`` is an uninterpreted function
``(BV n)^3 -> (BV 2)`` with codes ``01`` (independent), ``00`` (dependent) and
``11`` (invalid arguments). Axioms come in two interchangeable forms:

``quantified``
    one universally quantified assertion group per axiom, every ``CI``
    occurrence guarded by ``Valid``.
``ground``
    the same axioms instantiated over every valid tuple of the finite
    domain. On valid arguments ``CI`` only takes the values ``00`` and
    ``01``, so each valid ``CI`` application becomes one Boolean constant
    ``i_<x>_<y>_<z>`` (true = independent) and the instance is purely
    propositional. Instances that only repeat another instance or whose
    guard is unsatisfiable are left out. With symmetry enabled, triples are
    written in canonical orientation instead of asserting swap
    equivalences. Equisatisfiable with the quantified form, and far easier
    for solvers to prove satisfiable.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

from .core import CIStatement, ValidationError, VarSet

AXIOMS = (
    "symmetry",
    "decomposition",
    "weak_union",
    "contraction",
    "intersection",
    "composition",
    "weak_transitivity",
    "chordality",
)
STYLES = ("standard", "appendix-verbatim")
FORMS = ("quantified", "ground")
INDEPENDENT, DEPENDENT, INVALID = "01", "00", "11"


def set2vec(s: VarSet, width: int | None = None) -> str:
    """Bit string of ``s``, most significant (highest index) bit first."""
    width = s.width if width is None else width
    if s.mask >> width:
        raise ValidationError("set does not fit the requested width")
    return format(s.mask, f"0{width}b")


def bv(mask: int, width: int) -> str:
    return "#b" + format(mask, f"0{width}b")


def is_valid_triple(x: int, y: int, z: int) -> bool:
    return bool(x) and bool(y) and not (x & y or x & z or y & z)


def encode_fact(stmt: CIStatement) -> str:
    code = INDEPENDENT if stmt.independent else DEPENDENT
    w = stmt.width
    return f"(assert (= (CI {bv(stmt.x.mask, w)} {bv(stmt.y.mask, w)} {bv(stmt.z.mask, w)}) #b{code}))"


# -- quantified form ---------------------------------------------------------

def _preamble(width: int) -> list[str]:
    t = f"(_ BitVec {width})"
    zero = bv(0, width)
    if width == 1:
        popcount = "u"
    else:
        popcount = "(bvadd " + " ".join(
            f"((_ zero_extend {width - 1}) ((_ extract {i} {i}) u))" for i in range(width)) + ")"
    return [
        f"(declare-fun CI ({t} {t} {t}) (_ BitVec 2))",
        f"(define-fun Valid ((x {t}) (y {t}) (z {t})) Bool"
        f" (and (= (bvand x y) {zero}) (= (bvand x z) {zero}) (= (bvand y z) {zero})"
        f" (not (= x {zero})) (not (= y {zero}))))",
        f"(define-fun One ((u {t})) Bool (= {popcount} {bv(1, width)}))",
        f"(define-fun Ind ((x {t}) (y {t}) (z {t})) Bool (= (CI x y z) #b{INDEPENDENT}))",
    ]


def _forall(width: int, names: str, body: str) -> str:
    binders = " ".join(f"({v} (_ BitVec {width}))" for v in names)
    return f"(assert (forall ({binders}) {body}))"


def _guarded(premises: list[tuple[str, str, str]], conclusion, extra: tuple[str, ...] = ()) -> str:
    """Implication whose guard validates every CI occurrence; ``conclusion`` is a
    triple or a list of triples (read as a disjunction)."""
    concl = [conclusion] if isinstance(conclusion, tuple) else list(conclusion)
    guards = list(extra) + [f"(Valid {a} {b} {c})" for a, b, c in premises + concl]
    guards += [f"(Ind {a} {b} {c})" for a, b, c in premises]
    rhs = [f"(Ind {a} {b} {c})" for a, b, c in concl]
    rhs_text = rhs[0] if len(rhs) == 1 else "(or " + " ".join(rhs) + ")"
    return f"(=> (and {' '.join(guards)}) {rhs_text})"


def _and(parts: list[str]) -> str:
    return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"


def encode_axioms(width: int, axioms=AXIOMS, style: str = "standard") -> list[str]:
    """Quantified assertions for the enabled axioms, preceded by totality of ``CI``."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if style not in STYLES:
        raise ValueError(f"unknown axiom style {style!r}")
    unknown = set(axioms) - set(AXIOMS)
    if unknown:
        raise ValueError(f"unknown axioms {sorted(unknown)}")
    n = width
    yw, zw, zy, zu, xy = "(bvor y w)", "(bvor z w)", "(bvor z y)", "(bvor z u)", "(bvor x y)"
    out = [
        _forall(n, "xyz", f"(=> (Valid x y z) (or (= (CI x y z) #b{DEPENDENT}) (= (CI x y z) #b{INDEPENDENT})))"),
        _forall(n, "xyz", f"(=> (not (Valid x y z)) (= (CI x y z) #b{INVALID}))"),
    ]
    for ax in AXIOMS:
        if ax not in axioms:
            continue
        if ax == "symmetry":
            out.append(_forall(n, "xyz", "(= (CI x y z) (CI y x z))"))
        elif ax == "decomposition":
            out.append(_forall(n, "xyzw", _and([
                _guarded([("x", yw, "z")], ("x", "y", "z")),
                _guarded([("x", yw, "z")], ("x", "w", "z")),
            ])))
        elif ax == "weak_union":
            out.append(_forall(n, "xyzw", _guarded([("x", yw, "z")], ("x", "y", zw))))
        elif ax == "contraction":
            out.append(_forall(n, "xyzw", _guarded([("x", "y", "z"), ("x", "w", zy)], ("x", yw, "z"))))
        elif ax == "intersection":
            out.append(_forall(n, "xyzw", _guarded([("x", "y", zw), ("x", "w", zy)], ("x", yw, "z"))))
        elif ax == "composition":
            out.append(_forall(n, "xyzw", _guarded([("x", "y", "z"), ("x", "w", "z")], ("x", yw, "z"))))
        elif ax == "weak_transitivity":
            if style == "standard":
                out.append(_forall(n, "xyzu", _guarded(
                    [("x", "y", "z"), ("x", "y", zu)], [("x", "u", "z"), ("u", "y", "z")], ("(One u)",))))
            else:
                prem = [("x", "y", "z"), ("x", "w", zu)]
                out.append(_forall(n, "xyzwu", _and([
                    _guarded(prem, ("u", "y", "z"), ("(One u)",)),
                    _guarded(prem, ("x", "u", "z"), ("(One u)",)),
                ])))
        elif ax == "chordality":
            ones = ("(One x)", "(One y)", "(One z)", "(One w)")
            prem = [("x", "y", zw), ("z", "w", xy)]
            if style == "standard":
                out.append(_forall(n, "xyzw", _guarded(prem, [("x", "y", "z"), ("x", "y", "w")], ones)))
            else:
                out.append(_forall(n, "xyzw", _and([
                    _guarded(prem, ("x", "y", "z"), ones),
                    _guarded(prem, ("x", "y", "w"), ones),
                ])))
    return out


# -- ground form ---------------------------------------------------------------

def _roles(n: int, k: int):
    """Every assignment of the n variables to k roles (role 0 = unused), as masks."""
    for roles in itertools.product(range(k), repeat=n):
        masks = [0] * k
        for i, r in enumerate(roles):
            masks[r] |= 1 << i
        yield masks


def _atom(x: int, y: int, z: int, fold: bool) -> str:
    if fold and x > y:
        x, y = y, x
    return f"i_{x}_{y}_{z}"


@functools.lru_cache(maxsize=16)
def _ground_axioms(width: int, axioms: frozenset, fold: bool) -> tuple[str, ...]:
    n = width

    def t(x, y, z):
        return _atom(x, y, z, fold)

    def imp(prem, concl):
        lhs = prem[0] if len(prem) == 1 else "(and " + " ".join(prem) + ")"
        rhs = concl[0] if len(concl) == 1 else "(or " + " ".join(concl) + ")"
        return f"(assert (=> {lhs} {rhs}))"

    decls, out = [], []
    for _, x, y, z in _roles(n, 4):
        if x and y and (not fold or x < y):
            decls.append(f"(declare-const {t(x, y, z)} Bool)")
        if x and y and x < y and not fold and "symmetry" in axioms:
            out.append(f"(assert (= {t(x, y, z)} {t(y, x, z)}))")
    four = axioms & {"decomposition", "weak_union", "contraction", "intersection", "composition"}
    if four:
        for _, x, y, z, w in _roles(n, 5):
            if not (x and y and w):
                continue
            if "decomposition" in four:
                out.append(imp([t(x, y | w, z)], [t(x, y, z)]))
            if "weak_union" in four:
                out.append(imp([t(x, y | w, z)], [t(x, y, z | w)]))
            if "contraction" in four:
                out.append(imp([t(x, y, z), t(x, w, z | y)], [t(x, y | w, z)]))
            if "intersection" in four:
                out.append(imp([t(x, y, z | w), t(x, w, z | y)], [t(x, y | w, z)]))
            if "composition" in four:
                out.append(imp([t(x, y, z), t(x, w, z)], [t(x, y | w, z)]))
    if "weak_transitivity" in axioms:
        for _, x, y, z in _roles(n, 4):
            if not (x and y):
                continue
            for i in range(n):
                u = 1 << i
                if u & (x | y | z):
                    continue
                out.append(imp([t(x, y, z), t(x, y, z | u)], [t(x, u, z), t(u, y, z)]))
    if "chordality" in axioms and n >= 4:
        for a, b, c, d in itertools.permutations(range(n), 4):
            x, y, z, w = 1 << a, 1 << b, 1 << c, 1 << d
            out.append(imp([t(x, y, z | w), t(z, w, x | y)], [t(x, y, z), t(x, y, w)]))
    return tuple(decls + out)


def ground_axioms(width: int, axioms=AXIOMS) -> list[str]:
    """Quantifier-free instantiation of the (standard) axioms over ``width`` bits."""
    axioms = frozenset(axioms)
    return list(_ground_axioms(width, axioms, "symmetry" in axioms))


# -- instances -----------------------------------------------------------------

@dataclass(frozen=True)
class SmtInstance:
    width: int
    facts: tuple[tuple[tuple[int, int, int], str], ...] = ()
    axioms: tuple[str, ...] = AXIOMS
    timeout_ms: int = 60_000
    style: str = "standard"
    form: str = "quantified"
    label: str = field(default="full", compare=False)
    # ground form only: emit (check-sat-using <tactic>) instead of (check-sat)
    tactic: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(a for a in AXIOMS if a in set(self.axioms)))
        if self.style not in STYLES:
            raise ValueError(f"unknown axiom style {self.style!r}")
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == "ground" and self.style != "standard":
            raise ValueError("the ground form only supports the standard axiom style")
        for (x, y, z), code in self.facts:
            if not is_valid_triple(x, y, z):
                raise ValidationError(f"invalid fact triple {(x, y, z)}")
            if code not in (INDEPENDENT, DEPENDENT):
                raise ValidationError(f"fact code must be 00 or 01, got {code!r}")
            if max(x, y, z) >> self.width:
                raise ValidationError("fact does not fit the instance width")

    @classmethod
    def from_statements(cls, width: int, statements, **kw) -> "SmtInstance":
        facts = []
        for s in statements:
            if s.width != width:
                raise ValidationError("statement width differs from instance width")
            facts.append(((s.x.mask, s.y.mask, s.z.mask), INDEPENDENT if s.independent else DEPENDENT))
        return cls(width, tuple(facts), **kw)


def emit_smtlib(inst: SmtInstance) -> str:
    n = inst.width
    lines = [f"; cicheck instance: {inst.label}, width {n}, {len(inst.facts)} facts, {inst.form} axioms"]
    if inst.form == "quantified":
        lines.append("(set-logic UFBV)")
        lines += _preamble(n)
        lines += encode_axioms(n, inst.axioms, inst.style)
        for (x, y, z), code in inst.facts:
            lines.append(f"(assert (= (CI {bv(x, n)} {bv(y, n)} {bv(z, n)}) #b{code}))")
        lines.append("(check-sat)")
    else:
        fold = "symmetry" in inst.axioms
        lines.append("(set-logic QF_UF)")
        lines += ground_axioms(n, inst.axioms)
        for (x, y, z), code in inst.facts:
            atom = _atom(x, y, z, fold)
            lines.append(f"(assert {atom})" if code == INDEPENDENT else f"(assert (not {atom}))")
        lines.append(f"(check-sat-using {inst.tactic})" if inst.tactic else "(check-sat)")
    return "\n".join(lines) + "\n"
