"""Young diagrams and Gelfand-Tsetlin patterns.

Row and column indices are 1-based everywhere in the public API, so that
``box_stats(lam, 1, 1)`` is the top-left box. Parts beyond the length of a
partition read as zero.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence


class InvalidBox(ValueError):
    pass


class InvalidPattern(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Partition:
    """Weakly decreasing sequence of positive integers (trailing zeros dropped)."""

    parts: tuple[int, ...] = ()

    def __init__(self, parts: Sequence[int] = ()):
        parts = tuple(int(p) for p in parts)
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts are not weakly decreasing: {parts}")
        object.__setattr__(self, "parts", parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __repr__(self) -> str:
        return f"Partition({list(self.parts)})"

    def __str__(self) -> str:
        return "[" + ",".join(str(p) for p in self.parts) + "]"

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def row(self, i: int) -> int:
        """Part ``lambda_i`` (1-based), zero past the length."""
        if i < 1:
            raise IndexError(i)
        return self.parts[i - 1] if i <= len(self.parts) else 0

    def padded(self, n: int) -> tuple[int, ...]:
        if len(self.parts) > n:
            raise ValueError(f"{self} has more than {n} parts")
        return self.parts + (0,) * (n - len(self.parts))

    def boxes(self) -> Iterator[tuple[int, int]]:
        for i, p in enumerate(self.parts, 1):
            for j in range(1, p + 1):
                yield i, j

    def add_box(self, i: int) -> "Partition":
        """Partition with one box appended to row ``i``; raises if not a diagram."""
        if i > 1 and self.row(i - 1) == self.row(i):
            raise InvalidBox(f"cannot add a box to row {i} of {self}")
        if i > len(self.parts) + 1:
            raise InvalidBox(f"row {i} is not addable in {self}")
        parts = list(self.padded(max(i, len(self.parts))))
        parts[i - 1] += 1
        return Partition(parts)

    @classmethod
    def parse(cls, text: str) -> "Partition":
        text = text.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise ValueError(f"expected bracketed parts, got {text!r}")
        body = text[1:-1].strip()
        return cls([int(t) for t in body.split(",")] if body else [])


EMPTY = Partition()


@dataclass(frozen=True)
class BoxStats:
    arm: int
    leg: int
    coarm: int
    coleg: int


def conjugate(lam: Partition) -> Partition:
    if not lam.parts:
        return EMPTY
    return Partition([sum(1 for p in lam.parts if p >= i) for i in range(1, lam.parts[0] + 1)])


def box_stats(lam: Partition, i: int, j: int, conj: Partition | None = None) -> BoxStats:
    if i < 1 or j < 1 or lam.row(i) < j:
        raise InvalidBox(f"({i},{j}) is not a box of {lam}")
    if conj is None:
        conj = conjugate(lam)
    return BoxStats(arm=lam.row(i) - j, leg=conj.row(j) - i, coarm=j - 1, coleg=i - 1)


def interlaces(mu: Partition, lam: Partition) -> bool:
    """True iff ``lam_1 >= mu_1 >= lam_2 >= mu_2 >= ...``."""
    n = max(len(lam), len(mu) + 1)
    for i in range(1, n + 1):
        if not lam.row(i) >= mu.row(i) >= lam.row(i + 1):
            return False
    return True


@dataclass(frozen=True)
class GTPattern:
    """Interlacing stack ``lambda^n < ... < lambda^N``; ``rows[0]`` is level ``base_level``."""

    base_level: int
    rows: tuple[Partition, ...]

    def __init__(self, base_level: int, rows: Sequence[Partition | Sequence[int]]):
        rows = tuple(r if isinstance(r, Partition) else Partition(r) for r in rows)
        if base_level < 1:
            raise InvalidPattern("base level must be positive")
        if not rows:
            raise InvalidPattern("a pattern needs at least one row")
        for offset, row in enumerate(rows):
            if len(row) > base_level + offset:
                raise InvalidPattern(f"level {base_level + offset} row {row} is too long")
        for lower, upper in zip(rows, rows[1:]):
            if not interlaces(lower, upper):
                raise InvalidPattern(f"{lower} does not interlace {upper}")
        object.__setattr__(self, "base_level", int(base_level))
        object.__setattr__(self, "rows", rows)

    @property
    def top_level(self) -> int:
        return self.base_level + len(self.rows) - 1

    def level(self, j: int) -> Partition:
        if not self.base_level <= j <= self.top_level:
            raise IndexError(j)
        return self.rows[j - self.base_level]

    @classmethod
    def empty(cls, n: int, N: int) -> "GTPattern":
        return cls(n, [EMPTY] * (N - n + 1))

    def to_json(self) -> str:
        return json.dumps([list(r.padded(self.base_level + k)) for k, r in enumerate(self.rows)])

    @classmethod
    def from_json(cls, text: str, base_level: int = 1) -> "GTPattern":
        return cls(base_level, [Partition(r) for r in json.loads(text)])

    def as_key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(r.parts for r in self.rows)


def x_coordinates(p: GTPattern) -> dict[tuple[int, int], int]:
    """Particle positions ``x^j_i = lambda^j_i - i + 1`` keyed by ``(i, j)``."""
    out = {}
    for j in range(p.base_level, p.top_level + 1):
        lam = p.level(j)
        for i in range(1, j + 1):
            out[(i, j)] = lam.row(i) - i + 1
    return out


def from_x_coordinates(x: dict[tuple[int, int], int], base_level: int = 1) -> GTPattern:
    levels = sorted({j for _, j in x})
    rows = [Partition([x[(i, j)] + i - 1 for i in range(1, j + 1)]) for j in levels]
    return GTPattern(base_level, rows)


def ell_coordinates(lam: Partition, N: int, theta: float) -> tuple[float, ...]:
    """Increasing coordinates ``l_i = lambda_{N-i+1} + theta * i``."""
    if len(lam) > N:
        raise ValueError(f"{lam} has more than N={N} parts")
    return tuple(lam.row(N - i + 1) + theta * i for i in range(1, N + 1))


def iter_partitions(max_parts: int, max_weight: int, max_part: int | None = None) -> Iterator[Partition]:
    """All partitions with at most ``max_parts`` parts and weight at most ``max_weight``,
    in order of increasing weight."""
    for w in range(max_weight + 1):
        for parts in _fixed_weight(w, max_parts, w if max_part is None else min(w, max_part)):
            yield Partition(parts)


def _fixed_weight(w: int, k: int, cap: int) -> Iterator[tuple[int, ...]]:
    if w == 0:
        yield ()
        return
    if k == 0:
        return
    for first in range(min(w, cap), 0, -1):
        for rest in _fixed_weight(w - first, k - 1, first):
            yield (first,) + rest


def iter_interlacing(lam: Partition, max_parts: int | None = None) -> Iterator[Partition]:
    """All ``mu`` with ``mu < lam`` (and at most ``max_parts`` parts)."""
    n = len(lam) if max_parts is None else min(len(lam), max_parts)
    ranges = [range(lam.row(i + 1), lam.row(i) + 1) for i in range(1, n + 1)]

    def rec(i: int, acc: list[int]) -> Iterator[Partition]:
        if i == n:
            yield Partition(acc)
            return
        for v in ranges[i]:
            acc.append(v)
            yield from rec(i + 1, acc)
            acc.pop()

    if max_parts is not None and len(lam) > max_parts + 1:
        return
    yield from rec(0, [])


def iter_patterns(n: int, N: int, max_weight: int) -> Iterator[GTPattern]:
    """Every pattern on levels ``n..N`` with ``|lambda^N| <= max_weight``."""
    for top in iter_partitions(N, max_weight):
        yield from _patterns_below(n, N, [top])


def _patterns_below(n: int, level: int, rows: list[Partition]) -> Iterator[GTPattern]:
    if level == n:
        yield GTPattern(n, list(reversed(rows)))
        return
    for mu in iter_interlacing(rows[-1], level - 1):
        rows.append(mu)
        yield from _patterns_below(n, level - 1, rows)
        rows.pop()
