"""Discrete Bayesian networks: Dirichlet CPTs, ancestral sampling, JSON/CSV I/O.

Random numbers come from numpy's ``PCG64`` bit generator. Sampling gives
each variable its own child stream of ``SeedSequence(seed)`` so a column
depends only on the CPTs (and streams) of the variable and its ancestors.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .graphs import DAG

ROW_TOL = 1e-9
_NET_FIELDS = ("n", "names", "cards", "edges", "cpts")


class NetworkFormatError(ValueError):
    pass


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class DiscreteBayesNet:
    dag: DAG
    cards: tuple[int, ...]
    cpts: list[np.ndarray]  # cpts[v][rank(parent assignment), category]

    def __post_init__(self):
        self.cards = tuple(int(c) for c in self.cards)
        if len(self.cards) != self.dag.n or len(self.cpts) != self.dag.n:
            raise NetworkFormatError("cards/cpts length differs from node count")
        for v in range(self.dag.n):
            if self.cards[v] < 2:
                raise NetworkFormatError(f"{self.dag.names[v]}: cardinality must be >= 2")
            table = np.asarray(self.cpts[v], dtype=float)
            expected = (self.n_rows(v), self.cards[v])
            if table.shape != expected:
                raise NetworkFormatError(f"{self.dag.names[v]}: CPT shape {table.shape}, expected {expected}")
            for r, row in enumerate(table):
                if np.any(row < 0) or abs(row.sum() - 1.0) > ROW_TOL:
                    raise NetworkFormatError(f"{self.dag.names[v]}: row {r} is not a distribution")
            self.cpts[v] = table

    @property
    def names(self) -> tuple[str, ...]:
        return self.dag.names

    def parent_list(self, v: int) -> list[int]:
        return sorted(self.dag.parents(v))

    def n_rows(self, v: int) -> int:
        return math.prod(self.cards[p] for p in self.parent_list(v))

    def row_index(self, v: int, assignment) -> np.ndarray | int:
        """Lexicographic rank of the parents' values; last parent varies fastest.

        ``assignment`` maps parent index -> value (scalar or array of values).
        """
        rank = 0
        for p in self.parent_list(v):
            rank = rank * self.cards[p] + assignment[p]
        return rank

    def to_json(self) -> dict:
        return {
            "n": self.dag.n,
            "names": list(self.names),
            "cards": list(self.cards),
            "edges": [list(e) for e in sorted(self.dag.edges)],
            "cpts": {self.names[v]: self.cpts[v].tolist() for v in range(self.dag.n)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_json(cls, obj) -> "DiscreteBayesNet":
        if not isinstance(obj, dict):
            raise NetworkFormatError("network must be a JSON object")
        unknown = set(obj) - set(_NET_FIELDS)
        missing = set(_NET_FIELDS) - set(obj)
        if unknown:
            raise NetworkFormatError(f"unknown fields: {sorted(unknown)}")
        if missing:
            raise NetworkFormatError(f"missing fields: {sorted(missing)}")
        dag = DAG(int(obj["n"]), frozenset(tuple(e) for e in obj["edges"]), tuple(obj["names"]))
        cpts = obj["cpts"]
        if set(cpts) != set(dag.names):
            raise NetworkFormatError("cpts keys must match names")
        return cls(dag, tuple(obj["cards"]), [np.asarray(cpts[name], dtype=float) for name in dag.names])


def sample_cpts(dag: DAG, cards, alpha: float = 1.0, seed: int = 0) -> DiscreteBayesNet:
    """Draw every CPT row from a symmetric Dirichlet(alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    cards = tuple(int(c) for c in cards)
    if any(c < 2 for c in cards):
        raise NetworkFormatError("cardinalities must be >= 2")
    rng = _generator(seed)
    cpts = []
    for v in range(dag.n):
        rows = math.prod(cards[p] for p in sorted(dag.parents(v)))
        table = rng.dirichlet([alpha] * cards[v], size=rows)
        cpts.append(table / table.sum(axis=1, keepdims=True))
    return DiscreteBayesNet(dag, cards, cpts)


@dataclass
class Dataset:
    names: tuple[str, ...]
    data: np.ndarray  # (m, n) integer codes

    @property
    def m(self) -> int:
        return self.data.shape[0]

    def column(self, v: int) -> np.ndarray:
        return self.data[:, v]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.names) + "\n")
        for row in self.data:
            buf.write(",".join(str(int(c)) for c in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        lines = text.splitlines()
        if not lines:
            raise ValueError("empty CSV")
        names = tuple(lines[0].split(","))
        rows = [[int(c) for c in line.split(",")] for line in lines[1:] if line]
        data = np.array(rows, dtype=np.int64).reshape(len(rows), len(names))
        if data.size and data.min() < 0:
            raise ValueError("category codes must be non-negative")
        return cls(names, data)


def forward_sample(bn: DiscreteBayesNet, m: int, seed: int = 0) -> Dataset:
    if m < 1:
        raise ValueError("m must be >= 1")
    n = bn.dag.n
    streams = [_generator(s) for s in np.random.SeedSequence(seed).spawn(n)]
    data = np.zeros((m, n), dtype=np.int64)
    for v in bn.dag.topological_order():
        u = streams[v].random(m)
        rows = bn.row_index(v, {p: data[:, p] for p in bn.parent_list(v)})
        cum = np.cumsum(bn.cpts[v], axis=1)[rows]
        codes = (u[:, None] >= cum).sum(axis=1)
        data[:, v] = np.minimum(codes, bn.cards[v] - 1)
    return Dataset(bn.names, data)


def load_network(path) -> DiscreteBayesNet:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"invalid JSON: {exc}") from None
    return DiscreteBayesNet.from_json(obj)


def save_network(bn: DiscreteBayesNet, path):
    with open(path, "w") as fh:
        fh.write(bn.dumps())
