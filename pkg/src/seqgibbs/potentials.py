"""Potentials on full shifts: values, Birkhoff sums and variation bounds.

Three families are supported:

* :class:`LocallyConstant` -- depends on the first ``depth`` coordinates only.
* :class:`GeometricSeries` -- ``psi(x) = sum_n theta**n * g(x_n)``.
* :class:`Renewal` -- the two-symbol renewal potential constant on the sets
  ``M_k = [1^k 0]`` with value ``a_k`` there and ``0`` at the fixed point ``1^inf``.

Every evaluation returns a ``(value, radius)`` pair.  With an explicit
:class:`~seqgibbs.shift.TailSpec` the point is fully known and the radius is 0.
Passing ``tail=None`` means the continuation is unknown: the value is taken at
the canonical all-zeros continuation and the radius bounds the error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .shift import Point, TailSpec, Word, all_words, window_codes, word_code

CANONICAL_TAIL = TailSpec.constant(0)


def _as_point(x, tail: TailSpec | None) -> Point:
    symbols = x.symbols if isinstance(x, Word) else tuple(x)
    return Point.of(symbols, CANONICAL_TAIL if tail is None else tail)


class Potential:
    """Common interface; subclasses implement the family-specific pieces."""

    q: int
    kind: str

    def value(self, point: Point) -> float:
        raise NotImplementedError

    def orbit(self, point: Point, n: int) -> np.ndarray:
        """``psi(sigma^t point)`` for ``t = 0 .. n-1``."""
        return np.array([self.value(point.shift(t)) for t in range(n)], dtype=float)

    def variation_bound(self, n: int) -> float:
        raise NotImplementedError

    def variation_at(self, word, tail: TailSpec | None) -> float:
        raise NotImplementedError

    def xi(self, word, tail: TailSpec | None) -> tuple[float, bool]:
        """``(xi_n, exact)`` at the point ``word + tail`` with ``n = len(word)``."""
        raise NotImplementedError

    def sup_norm(self) -> float:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LocallyConstant(Potential):
    """Potential determined by the first ``depth`` symbols.

    ``table[code(a_0 ... a_{depth-1})]`` holds the value in natural-log scale,
    where ``code`` is the base-``q`` number with ``a_0`` most significant.  Entries
    may be ``-inf`` (forbidden transitions in degenerate fixtures).
    """

    q: int
    depth: int
    table: np.ndarray
    kind: str = field(default="locally_constant", init=False)

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float).reshape(-1)
        if self.q < 2 or self.depth < 1:
            raise ValueError("need q >= 2 and depth >= 1")
        if table.size != self.q ** self.depth:
            raise ValueError(f"table needs {self.q ** self.depth} entries, got {table.size}")
        if np.any(np.isnan(table)) or np.any(table == np.inf):
            raise ValueError("table entries must be finite or -inf")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def zero(cls, q: int = 2) -> "LocallyConstant":
        return cls(q, 1, np.zeros(q))

    @classmethod
    def bernoulli(cls, probs) -> "LocallyConstant":
        probs = np.asarray(probs, dtype=float)
        with np.errstate(divide="ignore"):
            return cls(len(probs), 1, np.log(probs))

    @classmethod
    def from_transition_matrix(cls, matrix) -> "LocallyConstant":
        """``psi(x) = log matrix[x_0, x_1]``."""
        matrix = np.asarray(matrix, dtype=float)
        with np.errstate(divide="ignore"):
            return cls(matrix.shape[0], 2, np.log(matrix).reshape(-1))

    @classmethod
    def from_function(cls, q: int, depth: int, func: Callable[[tuple[int, ...]], float]) -> "LocallyConstant":
        return cls(q, depth, np.array([func(w) for w in all_words(q, depth)], dtype=float))

    def window_value(self, symbols) -> float:
        return float(self.table[word_code(symbols, self.q)])

    def value(self, point: Point) -> float:
        return self.window_value(point.prefix(self.depth))

    def orbit(self, point: Point, n: int) -> np.ndarray:
        seq = np.array(point.prefix(n + self.depth - 1), dtype=np.int64)
        return self.table[window_codes(seq, self.q, self.depth)]

    def _completion_rows(self, n: int) -> np.ndarray:
        return self.table.reshape(self.q ** n, self.q ** (self.depth - n))

    def variation_bound(self, n: int) -> float:
        if n >= self.depth:
            return 0.0
        rows = self._completion_rows(n)
        return float(max(_spread(row) for row in rows))

    def variation_at(self, word, tail: TailSpec | None) -> float:
        n = len(word)
        if n >= self.depth:
            return 0.0
        point = _as_point(word, tail)
        v = self.value(point)
        row = self._completion_rows(n)[word_code(point.word[:n], self.q)]
        return float(max(_gap(v, r) for r in row))

    def xi(self, word, tail: TailSpec | None) -> tuple[float, bool]:
        point = _as_point(word, tail)
        n = len(point.word)
        m = self.depth
        first = max(0, n - m + 1)
        if first >= n:
            return 0.0, True
        x_seq = np.array(point.prefix(n + m - 1), dtype=np.int64)
        x_vals = self.table[window_codes(x_seq[first:], self.q, m)]
        best = 0.0
        for cont in all_words(self.q, m - 1):
            y_seq = np.concatenate([x_seq[:n], np.array(cont, dtype=np.int64)])
            y_vals = self.table[window_codes(y_seq[first:], self.q, m)]
            total = sum(_gap(a, b) for a, b in zip(x_vals, y_vals))
            best = max(best, total)
        return best, True

    def sup_norm(self) -> float:
        finite = self.table[np.isfinite(self.table)]
        return float(np.max(np.abs(finite))) if finite.size else 0.0

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.q,
            "depth": self.depth,
            "table": [_json_float(v) for v in self.table],
        }


@dataclass(frozen=True, eq=False)
class GeometricSeries(Potential):
    """``psi(x) = sum_{n >= 0} theta**n * g[x_n]`` with ``0 < theta < 1``."""

    theta: float
    g: tuple[float, ...]
    kind: str = field(default="geometric", init=False)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie strictly inside (0, 1)")
        g = tuple(float(v) for v in self.g)
        if len(g) < 2 or not all(math.isfinite(v) for v in g):
            raise ValueError("g needs at least two finite values")
        object.__setattr__(self, "g", g)

    @property
    def q(self) -> int:
        return len(self.g)

    @property
    def g_range(self) -> float:
        return max(self.g) - min(self.g)

    def _tail_value(self, tail: TailSpec) -> float:
        th, g = self.theta, self.g
        pre = sum(th ** j * g[s] for j, s in enumerate(tail.preperiod))
        p = len(tail.period)
        cycle = sum(th ** j * g[s] for j, s in enumerate(tail.period)) / (1.0 - th ** p)
        return pre + th ** len(tail.preperiod) * cycle

    def value(self, point: Point) -> float:
        th, g = self.theta, self.g
        head = sum(th ** j * g[s] for j, s in enumerate(point.word))
        return head + th ** len(point.word) * self._tail_value(point.tail)

    def orbit(self, point: Point, n: int) -> np.ndarray:
        out = np.empty(n)
        v = self.value(point.shift(n))
        seq = point.prefix(n)
        for t in range(n - 1, -1, -1):
            v = self.g[seq[t]] + self.theta * v
            out[t] = v
        return out

    def variation_bound(self, n: int) -> float:
        return self.theta ** n * self.g_range / (1.0 - self.theta)

    def variation_at(self, word, tail: TailSpec | None) -> float:
        point = _as_point(word, tail)
        n = len(point.word)
        rest = self.value(point.shift(n))
        lo, hi = min(self.g) / (1.0 - self.theta), max(self.g) / (1.0 - self.theta)
        return self.theta ** n * max(rest - lo, hi - rest)

    def xi(self, word, tail: TailSpec | None) -> tuple[float, bool]:
        n = len(word)
        return sum(self.variation_bound(i) for i in range(1, n + 1)), False

    def pressure(self) -> float:
        """Closed-form pressure ``log sum_a exp(g[a] / (1 - theta))``."""
        c = 1.0 / (1.0 - self.theta)
        vals = np.array(self.g) * c
        return float(np.log(np.sum(np.exp(vals - vals.max()))) + vals.max())

    def sup_norm(self) -> float:
        return max(abs(v) for v in self.g) / (1.0 - self.theta)

    def to_spec(self) -> dict:
        return {"kind": self.kind, "theta": self.theta, "g": list(self.g)}


RENEWAL_FORMULAS: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    # a_k = c * log((k+1)/(k+2)) for k >= 1
    "log_ratio": lambda c=2.0: (lambda k: c * np.log((k + 1.0) / (k + 2.0))),
    # a_k = c * (k+1)**(-p) for k >= 1
    "power": lambda c=-1.0, p=2.0: (lambda k: c * (k + 1.0) ** (-p)),
}


@dataclass(frozen=True, eq=False)
class Renewal(Potential):
    """Two-symbol renewal potential: ``a_k`` on ``M_k = [1^k 0]``, 0 at ``1^inf``.

    ``a_0`` is given separately; ``a_k`` for ``k >= 1`` comes from a named closed
    form in :data:`RENEWAL_FORMULAS`.  Series diagnostics and sup-based bounds
    look at ``k <= horizon`` only.
    """

    a0: float = 0.0
    formula: str = "log_ratio"
    params: dict = field(default_factory=dict)
    horizon: int = 1_000_000
    kind: str = field(default="renewal", init=False)

    def __post_init__(self):
        if self.formula not in RENEWAL_FORMULAS:
            raise ValueError(f"unknown renewal formula {self.formula!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "_gen", RENEWAL_FORMULAS[self.formula](**self.params))

    @property
    def q(self) -> int:
        return 2

    def coeff(self, k: int) -> float:
        return float(self.a0) if k == 0 else float(self._gen(np.float64(k)))

    def coeffs(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        with np.errstate(divide="ignore"):
            out = np.asarray(self._gen(ks.astype(float)), dtype=float)
        return np.where(ks == 0, float(self.a0), out)

    @cached_property
    def a(self) -> np.ndarray:
        """``a_k`` for ``k = 0 .. horizon``."""
        return self.coeffs(np.arange(self.horizon + 1))

    @cached_property
    def _abs_suffix_max(self) -> np.ndarray:
        return np.maximum.accumulate(np.abs(self.a)[::-1])[::-1]

    def value(self, point: Point) -> float:
        k = point.first_index(0)
        return 0.0 if k is None else self.coeff(k)

    def orbit(self, point: Point, n: int) -> np.ndarray:
        seq = point.prefix(n)
        nxt = point.shift(n).first_index(0)
        out = np.empty(n)
        for t in range(n - 1, -1, -1):
            if seq[t] == 0:
                nxt = 0
            elif nxt is not None:
                nxt += 1
            out[t] = 0.0 if nxt is None else self.coeff(nxt)
        return out

    def variation_bound(self, n: int) -> float:
        k = max(n - 1, 0)
        if k > self.horizon:
            return 2.0 * abs(self.coeff(k))
        return 2.0 * float(self._abs_suffix_max[k])

    def variation_at(self, word, tail: TailSpec | None) -> float:
        if 0 in tuple(word):
            return 0.0
        return self.variation_bound(len(word))

    def xi(self, word, tail: TailSpec | None) -> tuple[float, bool]:
        symbols = tuple(word)
        if symbols and symbols[-1] == 0:
            return 0.0, True
        run = len(symbols)
        if 0 in symbols:
            run = len(symbols) - 1 - max(i for i, s in enumerate(symbols) if s == 0)
        return sum(self.variation_bound(i) for i in range(1, run + 1)), False

    def partial_sums(self) -> np.ndarray:
        """``s_k = a_0 + ... + a_k`` up to the horizon."""
        return np.cumsum(self.a)

    def series_diagnostics(self) -> dict:
        s = self.partial_sums()
        e = np.exp(s)
        k = np.arange(s.size)
        return {
            "horizon": self.horizon,
            "s_at_horizon": float(s[-1]),
            "a_at_horizon": float(self.a[-1]),
            "sum_exp_s": float(e.sum()),
            "sum_k1_exp_s": float(((k + 1) * e).sum()),
        }

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.a)))

    def to_spec(self) -> dict:
        return {
            "kind": self.kind,
            "a0": self.a0,
            "formula": self.formula,
            "params": dict(sorted(self.params.items())),
            "horizon": self.horizon,
        }


def _spread(row: np.ndarray) -> float:
    finite = row[np.isfinite(row)]
    if finite.size == 0:
        return 0.0
    if finite.size < row.size:
        return math.inf
    return float(finite.max() - finite.min())


def _gap(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b)


def _json_float(v: float):
    v = float(v)
    return v if math.isfinite(v) else "-inf"


def potential_from_spec(spec: dict) -> Potential:
    """Build a potential from its JSON-style description."""
    kind = spec.get("kind")
    if kind == "locally_constant":
        if "transition_matrix" in spec:
            return LocallyConstant.from_transition_matrix(spec["transition_matrix"])
        if "probabilities" in spec:
            return LocallyConstant.bernoulli(spec["probabilities"])
        table = [(-math.inf if v in ("-inf", None) else float(v)) for v in spec["table"]]
        return LocallyConstant(int(spec["q"]), int(spec.get("depth", 1)), np.array(table))
    if kind == "zero":
        return LocallyConstant.zero(int(spec.get("q", 2)))
    if kind == "geometric":
        return GeometricSeries(float(spec["theta"]), tuple(spec["g"]))
    if kind == "renewal":
        return Renewal(
            a0=float(spec.get("a0", 0.0)),
            formula=spec.get("formula", "log_ratio"),
            params=dict(spec.get("params", {})),
            horizon=int(spec.get("horizon", 1_000_000)),
        )
    raise ValueError(f"unknown potential kind {kind!r}")


# -- module-level operations -------------------------------------------------

def evaluate(psi: Potential, x, tail: TailSpec | None) -> tuple[float, float]:
    """``(psi(x + tail), radius)``; requires ``len(x) >= 1``."""
    if len(x) < 1:
        raise ValueError("need a nonempty word")
    value = psi.value(_as_point(x, tail))
    radius = 0.0 if tail is not None else psi.variation_at(x, None)
    return value, radius


def birkhoff(psi: Potential, x, tail: TailSpec | None, n: int) -> tuple[float, float]:
    """Birkhoff sum ``sum_{i<n} psi(sigma^i (x + tail))`` with accumulated radius."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0.0, 0.0
    point = _as_point(x, tail)
    if tail is None:
        if n > len(point.word):
            raise ValueError("unknown tail: Birkhoff length cannot exceed the word")
        radius = sum(psi.variation_at(point.word[i:], None) for i in range(n))
    else:
        radius = 0.0
    return float(np.sum(psi.orbit(point, n))), float(radius)


def variation_bound(psi: Potential, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return psi.variation_bound(n)


def variation_at(psi: Potential, x, tail: TailSpec | None) -> float:
    if len(x) < 1:
        raise ValueError("need a nonempty word")
    return psi.variation_at(x, tail)


def xi_n(psi: Potential, x, tail: TailSpec | None) -> float:
    """``xi_n`` at ``x + tail``; exact or an upper bound depending on the family."""
    if len(x) < 1:
        raise ValueError("need a nonempty word")
    return psi.xi(x, tail)[0]


def xi_n_is_exact(psi: Potential, x, tail: TailSpec | None) -> bool:
    return psi.xi(x, tail)[1]


def orbit_matrix(psi: Potential, paths: np.ndarray, n: int) -> np.ndarray:
    """``psi(sigma^t x)`` for ``t < n`` along each row of ``paths``.

    Rows are continued by the canonical all-zeros tail past their end.
    """
    paths = np.asarray(paths, dtype=np.int64)
    rows, L = paths.shape
    if n > L:
        raise ValueError("orbit length exceeds the path length")
    if isinstance(psi, LocallyConstant):
        ext = np.concatenate([paths, np.zeros((rows, psi.depth - 1), dtype=np.int64)], axis=1)
        return psi.table[window_codes(ext[:, :n + psi.depth - 1], psi.q, psi.depth)]
    if isinstance(psi, Renewal):
        dist = np.empty((rows, L), dtype=np.int64)
        nxt = np.full(rows, L, dtype=np.int64)  # zero tail starts at index L
        for t in range(L - 1, -1, -1):
            nxt = np.where(paths[:, t] == 0, t, nxt)
            dist[:, t] = nxt - t
        return psi.coeffs(dist[:, :n])
    if isinstance(psi, GeometricSeries):
        g = np.asarray(psi.g)
        out = np.empty((rows, L))
        v = np.full(rows, psi.g[0] / (1.0 - psi.theta))
        for t in range(L - 1, -1, -1):
            v = g[paths[:, t]] + psi.theta * v
            out[:, t] = v
        return out[:, :n]
    raise TypeError(f"no vectorised orbit for {type(psi).__name__}")
