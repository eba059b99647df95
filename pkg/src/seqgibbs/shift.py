"""Words, eventually periodic tails and one-block factor maps on full shifts.

Symbols are the integers ``0 .. q-1``.  A point of the full shift is represented
by a finite :class:`Word` followed by a :class:`TailSpec`; together they form a
:class:`Point`, which is what the potentials are evaluated on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


def _check_symbols(symbols: Sequence[int], q: int) -> tuple[int, ...]:
    out = tuple(int(s) for s in symbols)
    for s in out:
        if not 0 <= s < q:
            raise ValueError(f"symbol {s} outside alphabet of size {q}")
    return out


@dataclass(frozen=True)
class Alphabet:
    q: int

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("alphabet needs at least two symbols")

    def __iter__(self):
        return iter(range(self.q))

    def __len__(self):
        return self.q


@dataclass(frozen=True)
class Word:
    """Finite word over the alphabet ``{0, ..., q-1}``."""

    symbols: tuple[int, ...]
    q: int = 2

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("alphabet needs at least two symbols")
        object.__setattr__(self, "symbols", _check_symbols(self.symbols, self.q))

    @classmethod
    def of(cls, symbols: Sequence[int] | str, q: int = 2) -> "Word":
        if isinstance(symbols, str):
            symbols = [int(c) for c in symbols.split()] if " " in symbols else [int(c) for c in symbols]
        return cls(tuple(symbols), q)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.symbols[item], self.q)
        return self.symbols[item]

    def __add__(self, other: "Word") -> "Word":
        if other.q != self.q:
            raise ValueError("cannot concatenate words over different alphabets")
        return Word(self.symbols + other.symbols, self.q)

    def __str__(self) -> str:
        return " ".join(str(s) for s in self.symbols)

    @property
    def code(self) -> int:
        return word_code(self.symbols, self.q)


@dataclass(frozen=True)
class TailSpec:
    """Eventually periodic continuation ``preperiod + period + period + ...``."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(int(s) for s in self.preperiod))
        object.__setattr__(self, "period", tuple(int(s) for s in self.period))
        if len(self.period) < 1:
            raise ValueError("tail period must be nonempty")
        if min(self.preperiod + self.period) < 0:
            raise ValueError("negative symbol in tail")

    @classmethod
    def constant(cls, symbol: int = 0) -> "TailSpec":
        return cls((), (symbol,))

    @classmethod
    def after(cls, word: Sequence[int], tail: "TailSpec") -> "TailSpec":
        """The tail ``word + tail`` seen as a new tail."""
        return cls(tuple(word) + tail.preperiod, tail.period)

    def max_symbol(self) -> int:
        return max(self.preperiod + self.period)

    def symbol(self, i: int) -> int:
        if i < len(self.preperiod):
            return self.preperiod[i]
        return self.period[(i - len(self.preperiod)) % len(self.period)]

    def prefix(self, length: int) -> tuple[int, ...]:
        return tuple(self.symbol(i) for i in range(length))

    def shifted(self, j: int) -> "TailSpec":
        if j <= len(self.preperiod):
            return TailSpec(self.preperiod[j:], self.period)
        r = (j - len(self.preperiod)) % len(self.period)
        return TailSpec((), self.period[r:] + self.period[:r])

    def first_index(self, symbol: int) -> int | None:
        for i, s in enumerate(self.preperiod):
            if s == symbol:
                return i
        for i, s in enumerate(self.period):
            if s == symbol:
                return len(self.preperiod) + i
        return None


@dataclass(frozen=True)
class Point:
    """The infinite sequence ``word`` followed by ``tail``."""

    word: tuple[int, ...]
    tail: TailSpec

    @classmethod
    def of(cls, word: Word | Sequence[int], tail: TailSpec) -> "Point":
        symbols = word.symbols if isinstance(word, Word) else tuple(word)
        return cls(tuple(int(s) for s in symbols), tail)

    def symbol(self, i: int) -> int:
        n = len(self.word)
        return self.word[i] if i < n else self.tail.symbol(i - n)

    def prefix(self, length: int) -> tuple[int, ...]:
        n = len(self.word)
        if length <= n:
            return self.word[:length]
        return self.word + self.tail.prefix(length - n)

    def shift(self, j: int) -> "Point":
        n = len(self.word)
        if j <= n:
            return Point(self.word[j:], self.tail)
        return Point((), self.tail.shifted(j - n))

    def first_index(self, symbol: int) -> int | None:
        for i, s in enumerate(self.word):
            if s == symbol:
                return i
        k = self.tail.first_index(symbol)
        return None if k is None else len(self.word) + k

    def as_tail(self) -> TailSpec:
        return TailSpec.after(self.word, self.tail)


@dataclass(frozen=True)
class FactorMap:
    """One-block factor map induced by a surjective symbol table ``A1 -> A2``."""

    q1: int
    q2: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(b) for b in self.table))
        if len(self.table) != self.q1:
            raise ValueError(f"factor table needs {self.q1} entries, got {len(self.table)}")
        if self.q1 < 2 or self.q2 < 2:
            raise ValueError("alphabets need at least two symbols")
        _check_symbols(self.table, self.q2)
        if set(self.table) != set(range(self.q2)):
            raise ValueError("factor table is not surjective")

    @classmethod
    def identity(cls, q: int) -> "FactorMap":
        return cls(q, q, tuple(range(q)))

    @property
    def fibers(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(a for a in range(self.q1) if self.table[a] == b) for b in range(self.q2))

    def fiber(self, b: int) -> tuple[int, ...]:
        return self.fibers[b]

    def fiber_count(self, z: Word | Sequence[int]) -> int:
        fibers = self.fibers
        return int(np.prod([len(fibers[b]) for b in z], dtype=np.int64)) if len(z) else 1

    def is_identity(self) -> bool:
        return self.q1 == self.q2 and self.table == tuple(range(self.q1))


def shift_word(w: Word, j: int) -> Word:
    if j < 0 or j > len(w):
        raise IndexError(f"cannot shift a word of length {len(w)} by {j}")
    return w[j:]


def apply_factor(pi: FactorMap, x: Word) -> Word:
    if x.q != pi.q1:
        raise ValueError(f"word over alphabet {x.q}, factor expects {pi.q1}")
    return Word(tuple(pi.table[a] for a in x.symbols), pi.q2)


def fiber_words(pi: FactorMap, z: Word) -> Iterator[Word]:
    """Lazily enumerate the preimages of ``z`` in lexicographic order."""
    if z.q != pi.q2:
        raise ValueError(f"word over alphabet {z.q}, factor image has {pi.q2}")
    fibers = pi.fibers
    for x in itertools.product(*(fibers[b] for b in z.symbols)):
        yield Word(x, pi.q1)


def all_words(q: int, n: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(q), repeat=n)


def word_code(symbols: Sequence[int], q: int) -> int:
    code = 0
    for s in symbols:
        code = code * q + int(s)
    return code


def word_from_code(code: int, q: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        code, r = divmod(code, q)
        out.append(r)
    return tuple(reversed(out))


def window_codes(seq: np.ndarray, q: int, width: int) -> np.ndarray:
    """Codes of all length-``width`` windows of the last axis of ``seq``."""
    seq = np.asarray(seq, dtype=np.int64)
    n = seq.shape[-1] - width + 1
    if n <= 0:
        return np.zeros(seq.shape[:-1] + (0,), dtype=np.int64)
    codes = np.zeros(seq.shape[:-1] + (n,), dtype=np.int64)
    for i in range(width):
        codes = codes * q + seq[..., i:i + n]
    return codes
