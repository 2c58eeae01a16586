"""DAGs, PDAGs, d-separation, PC orientation rules, SHD and random DAGs."""

from __future__ import annotations

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import CIStatement, ValidationError, VarSet

log = logging.getLogger(__name__)


class CycleError(ValueError):
    pass


def _default_names(n: int) -> tuple[str, ...]:
    return tuple(f"X{i}" for i in range(n))


@dataclass(frozen=True)
class DAG:
    n: int
    edges: frozenset[tuple[int, int]]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        if not self.names:
            object.__setattr__(self, "names", _default_names(self.n))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != self.n:
            raise ValidationError("names length differs from n")
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n) or a == b:
                raise ValidationError(f"bad edge {a}->{b}")
        parents = [set() for _ in range(self.n)]
        children = [set() for _ in range(self.n)]
        for a, b in self.edges:
            parents[b].add(a)
            children[a].add(b)
        object.__setattr__(self, "_parents", tuple(frozenset(p) for p in parents))
        object.__setattr__(self, "_children", tuple(frozenset(c) for c in children))
        self.topological_order()  # raises on cycles

    def parents(self, v: int) -> frozenset[int]:
        return self._parents[v]

    def children(self, v: int) -> frozenset[int]:
        return self._children[v]

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self._parents]
        queue = deque(v for v in range(self.n) if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for c in sorted(self._children[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != self.n:
            raise CycleError("graph contains a directed cycle")
        return order

    def ancestors_of(self, nodes: Iterable[int]) -> set[int]:
        """``nodes`` together with all their ancestors."""
        seen = set(nodes)
        stack = list(seen)
        while stack:
            for p in self._parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)

    def to_pdag(self) -> "PDAG":
        return PDAG(self.n, self.edges, frozenset(), self.names)

    def to_json(self) -> dict:
        return {"n": self.n, "names": list(self.names), "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DAG":
        return cls(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]), tuple(obj.get("names") or ()))


@dataclass(frozen=True)
class PDAG:
    n: int
    directed: frozenset[tuple[int, int]]
    undirected: frozenset[tuple[int, int]]
    names: tuple[str, ...] = ()
    conflicts: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "directed", frozenset((int(a), int(b)) for a, b in self.directed))
        object.__setattr__(self, "undirected", frozenset(
            (min(int(a), int(b)), max(int(a), int(b))) for a, b in self.undirected))
        if not self.names:
            object.__setattr__(self, "names", _default_names(self.n))
        object.__setattr__(self, "names", tuple(self.names))
        for a, b in self.directed:
            if (b, a) in self.directed:
                raise ValidationError(f"2-cycle between {a} and {b}")
            if (min(a, b), max(a, b)) in self.undirected:
                raise ValidationError(f"pair {a},{b} both directed and undirected")
        for a, b in self.directed | self.undirected:
            if not (0 <= a < self.n and 0 <= b < self.n) or a == b:
                raise ValidationError(f"bad edge {a},{b}")

    @classmethod
    def complete(cls, n: int, names: tuple[str, ...] = ()) -> "PDAG":
        return cls(n, frozenset(), frozenset(itertools.combinations(range(n), 2)), names)

    def status(self, a: int, b: int) -> str:
        """Edge status of ``a``-``b`` seen from ``a``: '', '-', '->', '<-'."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if (min(a, b), max(a, b)) in self.undirected:
            return "-"
        return ""

    def adjacent(self, a: int, b: int) -> bool:
        return self.status(a, b) != ""

    def neighbors(self, v: int) -> set[int]:
        return {u for u in range(self.n) if u != v and self.adjacent(u, v)}

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.directed | self.undirected)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "names": list(self.names),
            "edges": [list(e) for e in sorted(self.directed)],
            "undirected": [list(e) for e in sorted(self.undirected)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PDAG":
        return cls(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]),
                   frozenset(tuple(e) for e in obj.get("undirected", [])), tuple(obj.get("names") or ()))


class SepsetTable(dict):
    """Unordered node pair -> recorded separating set (a frozenset of nodes)."""

    def record(self, a: int, b: int, s: Iterable[int]):
        s = frozenset(s)
        if a in s or b in s:
            raise ValidationError("separating set contains an endpoint")
        self[frozenset((a, b))] = s

    def get_set(self, a: int, b: int) -> frozenset[int] | None:
        return self.get(frozenset((a, b)))

    def to_json(self) -> list:
        return [[sorted(k), sorted(v)] for k, v in sorted(self.items(), key=lambda kv: sorted(kv[0]))]


def _mask_nodes(s: VarSet | Iterable[int] | int) -> set[int]:
    if isinstance(s, VarSet):
        return set(s)
    if isinstance(s, int):
        return {s}
    return set(s)


def d_separated(g: DAG, x, y, z=()) -> bool:
    """Reachability ("Bayes ball") test of ``x ⊥_G y | z``.

    Sets may be :class:`VarSet`, iterables of node indices, or a single index.
    """
    xs, ys, zs = _mask_nodes(x), _mask_nodes(y), _mask_nodes(z)
    if not xs or not ys:
        raise ValidationError("x and y must be non-empty")
    if xs & ys or xs & zs or ys & zs:
        raise ValidationError("x, y, z must be pairwise disjoint")
    anc_z = g.ancestors_of(zs)
    # direction True: arrived from a child (travelling up), False: from a parent
    frontier = [(v, True) for v in xs]
    visited = set()
    while frontier:
        v, up = frontier.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v not in zs and v in ys:
            return False
        if up and v not in zs:
            frontier.extend((p, True) for p in g.parents(v))
            frontier.extend((c, False) for c in g.children(v))
        elif not up:
            if v not in zs:
                frontier.extend((c, False) for c in g.children(v))
            if v in anc_z:
                frontier.extend((p, True) for p in g.parents(v))
    return True


def enumerate_dsep_statements(g: DAG, max_cond: int | None = None) -> list[CIStatement]:
    """All singleton-pair statements with conditioning sets up to ``max_cond``.

    Pairs come in lexicographic order, conditioning sets by size then
    lexicographically.
    """
    n = g.n
    if max_cond is None:
        max_cond = max(n - 2, 0)
    if max_cond > max(n - 2, 0):
        raise ValueError(f"max_cond {max_cond} exceeds n-2")
    out = []
    for a, b in itertools.combinations(range(n), 2):
        rest = [v for v in range(n) if v != a and v != b]
        for k in range(max_cond + 1):
            for cond in itertools.combinations(rest, k):
                out.append(CIStatement(VarSet.of([a], n), VarSet.of([b], n), VarSet.of(cond, n),
                                       d_separated(g, {a}, {b}, cond)))
    return out


class _EdgeState:
    """Mutable orientation state used while applying orientation rules."""

    def __init__(self, pdag: PDAG):
        self.n = pdag.n
        self.directed = set(pdag.directed)
        self.undirected = set(pdag.undirected)
        self.conflicts = 0

    def adj(self, a, b):
        return (a, b) in self.directed or (b, a) in self.directed or (min(a, b), max(a, b)) in self.undirected

    def und(self, a, b):
        return (min(a, b), max(a, b)) in self.undirected

    def arrow(self, a, b):
        return (a, b) in self.directed

    def orient(self, a, b, overwrite=False) -> bool:
        if (a, b) in self.directed:
            return False
        if (b, a) in self.directed:
            if not overwrite:
                return False
            self.conflicts += 1
            log.warning("orientation conflict on %d-%d, keeping %d->%d", a, b, a, b)
            self.directed.discard((b, a))
        self.undirected.discard((min(a, b), max(a, b)))
        self.directed.add((a, b))
        return True

    def freeze(self, names) -> PDAG:
        return PDAG(self.n, frozenset(self.directed), frozenset(self.undirected), names, self.conflicts)


def _meek_pass(st: _EdgeState, r4: bool) -> bool:
    n = st.n
    changed = False
    for a, b in sorted(st.undirected):
        for u, v in ((a, b), (b, a)):
            if not st.und(u, v):
                break
            others = [w for w in range(n) if w != u and w != v]
            # R1: w -> u - v, w and v nonadjacent  =>  u -> v
            if any(st.arrow(w, u) and not st.adj(w, v) for w in others):
                st.orient(u, v)
                changed = True
                break
            # R2: u -> w -> v and u - v  =>  u -> v
            if any(st.arrow(u, w) and st.arrow(w, v) for w in others):
                st.orient(u, v)
                changed = True
                break
            # R3: u - c -> v, u - d -> v, c and d nonadjacent  =>  u -> v
            mids = [w for w in others if st.und(u, w) and st.arrow(w, v)]
            if any(not st.adj(c, d) for c, d in itertools.combinations(mids, 2)):
                st.orient(u, v)
                changed = True
                break
            # R4: u - d, d -> c -> v, u adjacent to c, d and v nonadjacent  =>  u -> v
            if r4 and any(st.und(u, d) and st.arrow(d, c) and st.arrow(c, v) and st.adj(u, c)
                          and not st.adj(d, v) for c in others for d in others if c != d):
                st.orient(u, v)
                changed = True
                break
    return changed


def orient_cpdag(skeleton: PDAG, sepsets: Mapping, meek_r4: bool = False) -> PDAG:
    """Orient v-structures from ``sepsets`` and close under Meek's rules.

    Colliding orientations are resolved last-writer-wins; the number of such
    conflicts is kept on the returned PDAG's ``conflicts`` field.
    """
    if skeleton.directed:
        raise ValidationError("skeleton must be fully undirected")
    st = _EdgeState(skeleton)
    n = skeleton.n
    for z in range(n):
        for x, y in itertools.combinations(range(n), 2):
            if z in (x, y) or not (st.adj(x, z) and st.adj(y, z)) or skeleton.adjacent(x, y):
                continue
            sep = sepsets.get(frozenset((x, y)))
            if sep is None or z not in sep:
                st.orient(x, z, overwrite=True)
                st.orient(y, z, overwrite=True)
    while _meek_pass(st, meek_r4):
        pass
    return st.freeze(skeleton.names)


def shd(a: PDAG | DAG, b: PDAG | DAG) -> int:
    """Number of node pairs whose edge status (absent, a->b, b->a, undirected) differs."""
    if isinstance(a, DAG):
        a = a.to_pdag()
    if isinstance(b, DAG):
        b = b.to_pdag()
    if a.n != b.n:
        raise ValueError(f"node counts differ: {a.n} vs {b.n}")
    return sum(a.status(i, j) != b.status(i, j) for i, j in itertools.combinations(range(a.n), 2))


def sample_er_dag(n: int, edge_prob: float, seed: int, names: tuple[str, ...] = ()) -> DAG:
    """Erdős–Rényi DAG: each pair kept with ``edge_prob``, oriented by a random order."""
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    draws = rng.random(n * (n - 1) // 2)
    edges = set()
    for k, (i, j) in enumerate(itertools.combinations(range(n), 2)):
        if draws[k] < edge_prob:
            edges.add((int(order[i]), int(order[j])))
    return DAG(n, frozenset(edges), names)


def load_graph(path) -> DAG | PDAG:
    with open(path) as fh:
        obj = json.load(fh)
    return PDAG.from_json(obj) if "undirected" in obj else DAG.from_json(obj)
