"""Saturation of independence statements under the definite graphoid rules.

Statements are canonical mask triples ``(x, y, z)`` with ``x < y``. Rules:
symmetry (through the canonical form), decomposition and weak union one
variable at a time, contraction, intersection and composition.
"""

from __future__ import annotations

from collections import defaultdict, deque
from typing import Iterable


class ClosureCapExceeded(RuntimeError):
    pass


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def _subsets(mask: int):
    """Non-empty subsets of ``mask``."""
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def _key(x: int, y: int, z: int) -> tuple[int, int, int]:
    return (x, y, z) if x < y else (y, x, z)


class Closure:
    """Incremental graphoid closure.

    ``stop_on`` is an optional set of canonical triples; adding any of them
    stops saturation early and is reported through ``hit``.
    """

    def __init__(self, cap: int = 100_000, stop_on: set | frozenset = frozenset()):
        self.cap = cap
        self.stop_on = stop_on
        self.members: set[tuple[int, int, int]] = set()
        self.hit: tuple[int, int, int] | None = None
        self._by_xz: dict[tuple[int, int], set[int]] = defaultdict(set)
        self._queue: deque = deque()

    def add(self, x: int, y: int, z: int):
        key = _key(x, y, z)
        if key in self.members:
            return
        self.members.add(key)
        self._by_xz[(x, z)].add(y)
        self._by_xz[(y, z)].add(x)
        self._queue.append(key)
        if key in self.stop_on and self.hit is None:
            self.hit = key
        if len(self.members) > self.cap:
            raise ClosureCapExceeded(f"closure exceeded {self.cap} statements")

    def saturate(self) -> "Closure":
        add, by_xz = self.add, self._by_xz
        while self._queue and self.hit is None:
            a, b, c = self._queue.popleft()
            for x, y in ((a, b), (b, a)):
                z = c
                if y & (y - 1):
                    for v in _bits(y):
                        add(x, y ^ v, z)
                        add(x, y ^ v, z | v)
                # contraction, this statement as x ⊥ y | z
                for w in list(by_xz.get((x, z | y), ())):
                    add(x, y | w, z)
                # contraction, this statement as x ⊥ w | z' with y ⊆ z'
                for t in _subsets(z):
                    if t in by_xz.get((x, z ^ t), ()):
                        add(x, y | t, z ^ t)
                # intersection: x ⊥ y | z'∪w and x ⊥ w | z'∪y
                for w in _subsets(z):
                    zr = z ^ w
                    if w in by_xz.get((x, zr | y), ()):
                        add(x, y | w, zr)
                # composition
                for w in list(by_xz.get((x, z), ())):
                    if w != y:
                        add(x, y | w, z)
                if self.hit is not None:
                    break
        return self


def graphoid_closure(triples: Iterable[tuple[int, int, int]], cap: int = 100_000) -> set[tuple[int, int, int]]:
    """Closure of independence triples; raises :class:`ClosureCapExceeded` past ``cap``."""
    c = Closure(cap)
    for x, y, z in triples:
        c.add(x, y, z)
    return c.saturate().members


def derivable(statements, cap: int = 100_000) -> list:
    """Independence statements that follow from the *other* independence statements."""
    indep = [s for s in statements if s.independent]
    triples = [s.triple for s in indep]
    out = []
    for i, s in enumerate(indep):
        c = Closure(cap, stop_on=frozenset([triples[i]]))
        for j, t in enumerate(triples):
            if j != i:
                c.add(*t)
        c.saturate()
        if c.hit is not None:
            out.append(s)
    return out
