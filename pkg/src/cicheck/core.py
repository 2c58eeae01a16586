"""Domain vocabulary: variable sets, CI statements and the knowledge base."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

MAX_VARIABLES = 63


class ValidationError(ValueError):
    """Raised for malformed sets or CI triples."""


class DomainMismatch(ValueError):
    pass


class StageResult(enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    INCONCLUSIVE = "inconclusive"


class Verdict(enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class Variable:
    index: int
    name: str


@dataclass(frozen=True)
class VarSet:
    """A subset of an ``n``-variable domain stored as a bit mask (bit i <=> variable i)."""

    mask: int
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_VARIABLES:
            raise ValidationError(f"domain width {self.width} outside 1..{MAX_VARIABLES}")
        if self.mask < 0 or self.mask >> self.width:
            raise ValidationError(f"mask {self.mask:#x} does not fit width {self.width}")

    @classmethod
    def of(cls, indices: Iterable[int], width: int) -> "VarSet":
        mask = 0
        for i in indices:
            if not 0 <= i < width:
                raise ValidationError(f"variable index {i} outside domain of size {width}")
            mask |= 1 << i
        return cls(mask, width)

    @classmethod
    def empty(cls, width: int) -> "VarSet":
        return cls(0, width)

    def _check(self, other: "VarSet"):
        if self.width != other.width:
            raise DomainMismatch(f"width {self.width} != {other.width}")

    def __or__(self, other: "VarSet") -> "VarSet":
        self._check(other)
        return VarSet(self.mask | other.mask, self.width)

    def __and__(self, other: "VarSet") -> "VarSet":
        self._check(other)
        return VarSet(self.mask & other.mask, self.width)

    def __sub__(self, other: "VarSet") -> "VarSet":
        self._check(other)
        return VarSet(self.mask & ~other.mask, self.width)

    def __le__(self, other: "VarSet") -> bool:  # subset
        self._check(other)
        return self.mask & other.mask == self.mask

    def __contains__(self, index: int) -> bool:
        return 0 <= index < self.width and bool(self.mask >> index & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __iter__(self) -> Iterator[int]:
        m, i = self.mask, 0
        while m:
            if m & 1:
                yield i
            m >>= 1
            i += 1

    def indices(self) -> tuple[int, ...]:
        return tuple(self)


@dataclass(frozen=True)
class CIStatement:
    """``x ⊥ y | z`` when ``independent`` else ``x ⊥̸ y | z``.

    Construction enforces disjointness and non-empty ``x``/``y``; it does not
    enforce orientation, use :func:`canonicalize` for that.
    """

    x: VarSet
    y: VarSet
    z: VarSet
    independent: bool = True

    def __post_init__(self):
        w = self.x.width
        if self.y.width != w or self.z.width != w:
            raise DomainMismatch("statement sets come from different domains")
        if not self.x or not self.y:
            raise ValidationError("x and y must be non-empty")
        if self.x.mask & self.y.mask or self.x.mask & self.z.mask or self.y.mask & self.z.mask:
            raise ValidationError("x, y, z must be pairwise disjoint")

    @property
    def width(self) -> int:
        return self.x.width

    @property
    def triple(self) -> tuple[int, int, int]:
        """Canonical (x, y, z) mask triple, ignoring the flag."""
        a, b = self.x.mask, self.y.mask
        return (a, b, self.z.mask) if a < b else (b, a, self.z.mask)

    @property
    def support(self) -> VarSet:
        return self.x | self.y | self.z

    @classmethod
    def from_masks(cls, x: int, y: int, z: int, independent: bool, width: int) -> "CIStatement":
        return cls(VarSet(x, width), VarSet(y, width), VarSet(z, width), independent)


def canonicalize(stmt: CIStatement) -> CIStatement:
    if stmt.x.mask <= stmt.y.mask:
        return stmt
    return CIStatement(stmt.y, stmt.x, stmt.z, stmt.independent)


def negate(stmt: CIStatement) -> CIStatement:
    return CIStatement(stmt.x, stmt.y, stmt.z, not stmt.independent)


def overlap(a: CIStatement, b: CIStatement) -> VarSet:
    if a.width != b.width:
        raise DomainMismatch(f"width {a.width} != {b.width}")
    return a.support & b.support


def is_marginal(stmt: CIStatement) -> bool:
    return not stmt.z


class Domain:
    """Named variables with dense indices ``0..n-1``."""

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if not names:
            raise ValidationError("domain must contain at least one variable")
        if len(set(names)) != len(names):
            raise ValidationError("variable names must be unique")
        if len(names) > MAX_VARIABLES:
            raise ValidationError(f"at most {MAX_VARIABLES} variables are supported")
        self.names = names
        self._index = {name: i for i, name in enumerate(names)}

    @classmethod
    def of_size(cls, n: int) -> "Domain":
        return cls([f"X{i}" for i in range(n)])

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other) -> bool:
        return isinstance(other, Domain) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Domain({list(self.names)!r})"

    @property
    def variables(self) -> list[Variable]:
        return [Variable(i, name) for i, name in enumerate(self.names)]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"unknown variable {name!r}") from None

    def varset(self, items: Iterable[str | int]) -> VarSet:
        return VarSet.of((i if isinstance(i, int) else self.index(i) for i in items), len(self))

    def stmt(self, x, y, z=(), independent: bool = True) -> CIStatement:
        """Build a canonical statement; single names may be passed bare."""
        def as_items(v):
            return [v] if isinstance(v, (str, int)) else v
        return canonicalize(CIStatement(
            self.varset(as_items(x)), self.varset(as_items(y)), self.varset(as_items(z)), independent))

    def set_names(self, s: VarSet) -> list[str]:
        return [self.names[i] for i in s]

    def format(self, stmt: CIStatement) -> str:
        rel = "⊥" if stmt.independent else "⊥̸"
        text = f"{{{','.join(self.set_names(stmt.x))}}} {rel} {{{','.join(self.set_names(stmt.y))}}}"
        if stmt.z:
            text += f" | {{{','.join(self.set_names(stmt.z))}}}"
        return text

    def to_record(self, stmt: CIStatement) -> dict:
        return {
            "x": self.set_names(stmt.x),
            "y": self.set_names(stmt.y),
            "z": self.set_names(stmt.z),
            "independent": stmt.independent,
        }

    def from_record(self, rec: dict) -> CIStatement:
        if not isinstance(rec, dict) or set(rec) != {"x", "y", "z", "independent"}:
            raise ValidationError("record must have exactly the fields x, y, z, independent")
        if not isinstance(rec["independent"], bool):
            raise ValidationError("independent must be a boolean")
        for key in ("x", "y", "z"):
            if not isinstance(rec[key], list) or not all(isinstance(v, str) for v in rec[key]):
                raise ValidationError(f"{key} must be a list of variable names")
        return self.stmt(rec["x"], rec["y"], rec["z"], rec["independent"])


def dumps_statements(domain: Domain, statements: Iterable[CIStatement]) -> str:
    return "".join(json.dumps(domain.to_record(s), ensure_ascii=False) + "\n" for s in statements)


def parse_statements(text: str, domain: Domain | None = None) -> tuple[Domain, list[CIStatement]]:
    """Parse CI-statement JSONL.

    Without an explicit ``domain`` the variables are indexed in order of first
    appearance. Errors carry the 1-based line number.
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if domain is None:
        seen: dict[str, None] = {}
        for _, rec in records:
            if isinstance(rec, dict):
                for key in ("x", "y", "z"):
                    for name in rec.get(key) or []:
                        if isinstance(name, str):
                            seen.setdefault(name)
        if not records:
            return Domain(["_"]), []
        if not seen:
            raise ValidationError(f"line {records[0][0]}: record names no variables")
        domain = Domain(list(seen))
    out = []
    for lineno, rec in records:
        try:
            out.append(domain.from_record(rec))
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    return domain, out


@dataclass
class KnowledgeBase:
    """Ordered, de-duplicated list of accepted statements with snapshot/rollback.

    ``snapshot()`` pushes the current length; ``rollback()`` truncates to the
    most recent snapshot, pops it and counts one inconsistency.
    """

    width: int
    threshold: int = 10
    statements: list[CIStatement] = field(default_factory=list)
    snapshots: list[int] = field(default_factory=list)
    inconsistency_count: int = 0

    def __post_init__(self):
        self._flags: dict[tuple[int, int, int], set[bool]] = {}
        for s in self.statements:
            self._flags.setdefault(s.triple, set()).add(s.independent)

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self):
        return iter(self.statements)

    def __contains__(self, stmt: CIStatement) -> bool:
        return stmt.independent in self._flags.get(stmt.triple, ())

    @property
    def degenerate(self) -> bool:
        """True when some triple is present with both flags."""
        return any(len(v) == 2 for v in self._flags.values())

    @property
    def exhausted(self) -> bool:
        return self.inconsistency_count >= self.threshold

    def add(self, stmt: CIStatement, snapshot: bool = False) -> bool:
        if stmt.width != self.width:
            raise DomainMismatch(f"statement width {stmt.width} != KB width {self.width}")
        if snapshot:
            self.snapshot()
        stmt = canonicalize(stmt)
        if stmt in self:
            return False
        self.statements.append(stmt)
        self._flags.setdefault(stmt.triple, set()).add(stmt.independent)
        return True

    def snapshot(self) -> int:
        self.snapshots.append(len(self.statements))
        return len(self.statements)

    def rollback(self) -> int:
        if not self.snapshots:
            raise IndexError("rollback without a snapshot")
        keep = self.snapshots.pop()
        for s in self.statements[keep:]:
            flags = self._flags[s.triple]
            flags.discard(s.independent)
            if not flags:
                del self._flags[s.triple]
        del self.statements[keep:]
        self.inconsistency_count += 1
        return keep

    def extended(self, stmt: CIStatement) -> list[CIStatement]:
        """Statements plus ``stmt`` (deduplicated) without mutating the KB."""
        stmt = canonicalize(stmt)
        return list(self.statements) if stmt in self else [*self.statements, stmt]
