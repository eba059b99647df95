"""Transfer matrices, Perron eigendata, pressure and cylinder measures.

A locally constant potential of depth ``m`` is handled through its Markov lift
on contexts of length ``c = max(m, 2) - 1``.  The transfer matrix is

    M[s, s'] = exp(psi(a_0 ... a_c))

where ``s = a_0 ... a_{c-1}`` and ``s' = a_1 ... a_c``.  With this convention the
RPF operator acts on functions of the first ``c`` coordinates as ``M.T``, the
right Perron vector of ``M`` gives the conformal masses of the contexts and the
left Perron vector is the eigenfunction ``h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .potentials import (
    CANONICAL_TAIL,
    GeometricSeries,
    LocallyConstant,
    Potential,
    Renewal,
)
from .shift import Point, TailSpec, Word, window_codes, word_code

DENSE_LIMIT = 256


class ConvergenceError(RuntimeError):
    """Power iteration did not reach the requested residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Markov-lift transfer matrix of a locally constant potential."""

    q: int
    depth: int
    log_table: np.ndarray

    @property
    def context(self) -> int:
        return self.depth - 1

    @property
    def n_states(self) -> int:
        return self.q ** self.context

    @cached_property
    def matrix(self):
        S, q = self.n_states, self.q
        codes = np.arange(q * S)
        rows, cols = codes // q, codes % S
        vals = np.exp(self.log_table)
        if S <= DENSE_LIMIT:
            out = np.zeros((S, S))
            out[rows, cols] = vals
            return out
        return sp.csr_matrix((vals, (rows, cols)), shape=(S, S))

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)


def lift(psi: LocallyConstant) -> LocallyConstant:
    """Depth-1 potentials become depth 2 so contexts are never empty."""
    if psi.depth >= 2:
        return psi
    return LocallyConstant(psi.q, 2, np.repeat(psi.table, psi.q))


def build_transfer(psi: LocallyConstant) -> TransferMatrix:
    lifted = lift(psi)
    return TransferMatrix(lifted.q, lifted.depth, lifted.table)


@dataclass(frozen=True, eq=False)
class RpfEigendata:
    transfer: TransferMatrix
    lam: float
    ell: np.ndarray
    h: np.ndarray
    iterations: int
    residual: float

    @property
    def pressure(self) -> float:
        return math.log(self.lam)

    @property
    def q(self) -> int:
        return self.transfer.q

    @property
    def context(self) -> int:
        return self.transfer.context

    @cached_property
    def log_ell(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.ell)

    @cached_property
    def log_h(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.h)


def _power(matvec, S: int, tol: float, max_iter: int) -> tuple[np.ndarray, float, int, float]:
    v = np.ones(S)
    lam, res = 0.0, math.inf
    for it in range(1, max_iter + 1):
        w = matvec(v)
        lam = float(v @ w) / float(v @ v)
        res = float(np.max(np.abs(w - lam * v)) / np.max(np.abs(v)))
        if res <= tol:
            return v, lam, it, res
        v = w / np.max(np.abs(w))
    raise ConvergenceError(f"power iteration stalled at residual {res:.3e}", res, max_iter)


def rpf_solve(T: TransferMatrix, tol: float = 1e-12, max_iter: int = 100_000) -> RpfEigendata:
    """Perron root and vectors by power iteration from the all-ones vector.

    The residual is measured on the matrix scaled by its largest entry, relative
    to the sup norm of the iterate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = T.matrix
    scale = float(M.max())
    A = M / scale
    At = A.T.tocsr() if sp.issparse(A) else A.T
    right, lam_r, it_r, res_r = _power(lambda v: A @ v, T.n_states, tol, max_iter)
    left, lam_l, it_l, res_l = _power(lambda v: At @ v, T.n_states, tol, max_iter)
    right = np.clip(right, 0.0, None)
    left = np.clip(left, 0.0, None)
    ell = right / right.sum()
    h = left / float(left @ ell)
    return RpfEigendata(
        transfer=T,
        lam=0.5 * (lam_r + lam_l) * scale,
        ell=ell,
        h=h,
        iterations=max(it_r, it_l),
        residual=max(res_r, res_l),
    )


def solve(psi: LocallyConstant, tol: float = 1e-12, max_iter: int = 100_000) -> RpfEigendata:
    return rpf_solve(build_transfer(psi), tol, max_iter)


# -- cylinder measures -------------------------------------------------------

class CylinderMeasure:
    """Provider ``word -> mass`` over a fixed alphabet."""

    kind: str = "abstract"
    q: int

    def log_mass(self, word) -> float:
        raise NotImplementedError

    def mass(self, word) -> float:
        return math.exp(self.log_mass(word))

    @property
    def additivity_tolerance(self) -> float:
        return 1e-10


def _digits(codes: np.ndarray, q: int, n: int) -> np.ndarray:
    out = np.empty(codes.shape + (n,), dtype=np.int64)
    c = codes.copy()
    for i in range(n - 1, -1, -1):
        out[..., i] = c % q
        c //= q
    return out


class MarkovMeasure(CylinderMeasure):
    """Conformal or equilibrium measure of a locally constant potential.

    For ``|w| >= c`` the log-mass is

        H(w[:c]) + sum_t (psi(window_t) - P) + log ell(w[-c:])

    with ``H = log h`` for the equilibrium measure and ``H = 0`` for the
    conformal one.  Shorter words are summed over their context completions.
    """

    def __init__(self, eig: RpfEigendata, kind: str = "equilibrium"):
        if kind not in ("conformal", "equilibrium"):
            raise ValueError(f"unknown measure kind {kind!r}")
        self.eig = eig
        self.kind = kind
        self.q = eig.q
        self.c = eig.context
        self.S = eig.transfer.n_states
        self.log_table = eig.transfer.log_table
        self.P = eig.pressure
        head = eig.log_h if kind == "equilibrium" else np.zeros(self.S)
        self.head = head
        with np.errstate(invalid="ignore"):
            self.ctx = head + eig.log_ell

    def log_mass(self, word) -> float:
        w = tuple(word)
        n = len(w)
        if n == 0:
            return float(logsumexp(self.ctx))
        q, c = self.q, self.c
        if n < c:
            lo = word_code(w, q) * q ** (c - n)
            return float(logsumexp(self.ctx[lo:lo + q ** (c - n)]))
        seq = np.asarray(w, dtype=np.int64)
        body = self.log_table[window_codes(seq, q, c + 1)].sum() - (n - c) * self.P
        return float(self.head[word_code(w[:c], q)] + body + self.eig.log_ell[word_code(w[n - c:], q)])

    def all_log_masses(self, n: int) -> np.ndarray:
        """Log-masses of all ``q**n`` words of length ``n`` in code order."""
        q, c = self.q, self.c
        if n == 0:
            return np.array([self.log_mass(())])
        if n <= c:
            return logsumexp(self.ctx.reshape(q ** n, q ** (c - n)), axis=1)
        words = _digits(np.arange(q ** n, dtype=np.int64), q, n)
        return self.log_masses(words)

    def log_masses(self, words: np.ndarray) -> np.ndarray:
        """Vectorised log-mass for a 2-D array of equal-length words (length >= c)."""
        words = np.asarray(words, dtype=np.int64)
        q, c = self.q, self.c
        n = words.shape[-1]
        if n < c:
            return np.array([self.log_mass(w) for w in words])
        first = window_codes(words[..., :c], q, c)[..., 0]
        last = window_codes(words[..., n - c:], q, c)[..., 0]
        body = self.log_table[window_codes(words, q, c + 1)].sum(axis=-1) - (n - c) * self.P
        return self.head[first] + body + self.eig.log_ell[last]

    def log_mass_choices(self, choices: Sequence[Sequence[int]]) -> float:
        """``log sum mu[x]`` over words with ``x_i`` in ``choices[i]``.

        Forward DP over contexts; cost linear in the word length.
        """
        choices = [tuple(ch) for ch in choices]
        if len(choices) < self.c:
            choices = choices + [tuple(range(self.q))] * (self.c - len(choices))
        a = forward_choices(self.log_table, self.q, self.c, choices, self.head, self.P)
        return float(logsumexp(a + self.eig.log_ell))


def conformal_mass(eig: RpfEigendata, word) -> float:
    return MarkovMeasure(eig, "conformal").mass(word)


def equilibrium_mass(eig: RpfEigendata, word) -> float:
    return MarkovMeasure(eig, "equilibrium").mass(word)


class EmpiricalMeasure(CylinderMeasure):
    """Prefix frequencies of sampled paths; additivity holds to ``3 / sqrt(N)``."""

    kind = "empirical"

    def __init__(self, paths: np.ndarray, q: int):
        self.paths = np.asarray(paths, dtype=np.int64)
        self.q = q

    @property
    def sample_size(self) -> int:
        return int(self.paths.shape[0])

    @property
    def additivity_tolerance(self) -> float:
        return 3.0 / math.sqrt(self.sample_size)

    def log_mass(self, word) -> float:
        w = np.asarray(tuple(word), dtype=np.int64)
        if w.size > self.paths.shape[1]:
            raise ValueError("word longer than the sampled paths")
        hits = np.all(self.paths[:, :w.size] == w, axis=1).sum()
        return math.log(hits / self.sample_size) if hits else -math.inf


def context_digits(q: int, c: int) -> np.ndarray:
    return _digits(np.arange(q ** c, dtype=np.int64), q, c)


def forward_choices(log_table: np.ndarray, q: int, c: int, choices: Sequence[Sequence[int]],
                    head: np.ndarray | None = None, shift: float = 0.0) -> np.ndarray:
    """Log-weights over final contexts of ``sum_x exp(sum_windows (psi - shift))``.

    ``x`` ranges over words with ``x_i`` in ``choices[i]`` (at least ``c`` sets);
    ``head`` adds a weight on the first context.
    """
    S = q ** c
    if len(choices) < c:
        raise ValueError("need at least one choice set per context symbol")
    digits = context_digits(q, c)
    mask = np.ones(S, dtype=bool)
    for i in range(c):
        mask &= np.isin(digits[:, i], tuple(choices[i]))
    a = np.where(mask, 0.0 if head is None else head, -np.inf)
    return advance_choices(log_table, q, c, a, choices[c:], shift)


def advance_choices(log_table: np.ndarray, q: int, c: int, a: np.ndarray,
                    choices: Sequence[Sequence[int]], shift: float = 0.0) -> np.ndarray:
    """Continue a context-indexed log-weight vector through more choice sets."""
    S = q ** c
    base = np.arange(S, dtype=np.int64) * q
    for ch in choices:
        A = a.reshape(q, S // q)
        out = np.full((S // q, q), -np.inf)
        for b in ch:
            phi = log_table[base + b].reshape(q, S // q)
            out[:, b] = logsumexp(A + phi, axis=0) - shift
        a = out.reshape(S)
    return a


def conformal_mass_bruteforce(psi: LocallyConstant, word) -> float:
    """Conformal mass by direct enumeration; independent of the power iteration.

    ``nu[w] = lam**-n * sum_u exp(psi^n(w u)) nu[u]`` over contexts ``u``, with the
    context masses taken from a dense eigendecomposition.
    """
    lp = lift(psi)
    q, c = lp.q, lp.depth - 1
    S = q ** c
    M = np.zeros((S, S))
    for code in range(S * q):
        M[code // q, code % S] = math.exp(lp.table[code])
    vals, vecs = np.linalg.eig(M)
    top = int(np.argmax(vals.real))
    lam = float(vals[top].real)
    ell = np.abs(vecs[:, top].real)
    ell /= ell.sum()
    w = tuple(int(s) for s in word)
    n = len(w)
    total = 0.0
    for u in range(S):
        seq = w + tuple(int(d) for d in np.base_repr(u, q).zfill(c)) if c else w
        s = sum(lp.table[word_code(seq[t:t + c + 1], q)] for t in range(n))
        total += math.exp(s) * ell[u]
    return total / lam ** n


# -- pressure identity and sampling ------------------------------------------

def context_kernel(eig: RpfEigendata) -> np.ndarray:
    """Normalised transition probabilities ``K[s, b]`` to the context ``(s b)[1:]``."""
    q, S = eig.q, eig.transfer.n_states
    codes = np.arange(S * q, dtype=np.int64)
    nxt = codes % S
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = eig.transfer.log_table - eig.pressure + eig.log_ell[nxt] - np.repeat(eig.log_ell, q)
    K = np.exp(logk).reshape(S, q)
    return np.nan_to_num(K, nan=0.0)


def pressure_identity_gap(eig: RpfEigendata) -> float:
    """``|P - (entropy + integral of psi)|`` for the equilibrium measure."""
    q, S = eig.q, eig.transfer.n_states
    K = context_kernel(eig)
    rho = eig.h * eig.ell
    phi = eig.transfer.log_table.reshape(S, q)
    live = K > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        entropy = -np.sum(np.where(live, rho[:, None] * K * np.log(K), 0.0))
        integral = np.sum(np.where(live, rho[:, None] * K * phi, 0.0))
    return abs(eig.pressure - (entropy + integral))


def sample_paths(eig: RpfEigendata, n: int, n_paths: int, seed: int) -> np.ndarray:
    """``n_paths`` equilibrium words of length ``n`` as an int array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    q, c, S = eig.q, eig.context, eig.transfer.n_states
    rho = eig.h * eig.ell
    rho = rho / rho.sum()
    state = np.minimum(np.searchsorted(np.cumsum(rho), rng.random(n_paths), side="right"), S - 1)
    out = np.empty((n_paths, max(n, c)), dtype=np.int64)
    out[:, :c] = _digits(state, q, c)
    cum = np.cumsum(context_kernel(eig), axis=1)
    cum[:, -1] = np.inf
    for t in range(c, n):
        u = rng.random(n_paths)
        b = np.argmax(cum[state] > u[:, None], axis=1)
        out[:, t] = b
        state = (state * q + b) % S
    return out[:, :n]


def sample_path(eig: RpfEigendata, n: int, seed: int) -> Word:
    return Word(tuple(int(s) for s in sample_paths(eig, n, 1, seed)[0]), eig.q)


# -- truncation and pressure surrogate ---------------------------------------

def truncate(psi: Potential, m: int, tail: TailSpec = CANONICAL_TAIL) -> tuple[LocallyConstant, float]:
    """Depth-``m`` table ``psi(w + tail)`` and the sup-norm error bound."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if isinstance(psi, LocallyConstant) and psi.depth <= m:
        return psi, 0.0
    q = psi.q
    words = _digits(np.arange(q ** m, dtype=np.int64), q, m)
    if isinstance(psi, Renewal) and tail == CANONICAL_TAIL:
        first = np.where(np.any(words == 0, axis=1), np.argmax(words == 0, axis=1), m)
        table = psi.coeffs(first)
    else:
        table = np.array([psi.value(Point(tuple(int(s) for s in w), tail)) for w in words])
    return LocallyConstant(q, m, table), psi.variation_bound(m)


def _maxplus_tail(log_table: np.ndarray, q: int, c: int, steps: int, op=np.max) -> np.ndarray:
    """``V[s] = op over continuations of the sum of ``steps`` windows from context ``s``."""
    S = q ** c
    V = np.zeros(S)
    base = np.arange(S, dtype=np.int64) * q
    for _ in range(steps):
        cand = np.stack([log_table[base + b] + V[(base + b) % S] for b in range(q)], axis=1)
        V = op(cand, axis=1)
    return V


def pressure_limit(psi: Potential, n: int) -> float:
    """``P_n = (1/n) log sum_{|w|=n} exp(sup_[w] psi^n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(psi, LocallyConstant):
        return _pressure_lc(psi, n)
    if isinstance(psi, GeometricSeries):
        return _pressure_geometric(psi, n)
    if isinstance(psi, Renewal):
        return _pressure_renewal(psi, n)
    raise TypeError(f"no pressure surrogate for {type(psi).__name__}")


def _pressure_lc(psi: LocallyConstant, n: int) -> float:
    lp = lift(psi)
    q, c = lp.q, lp.depth - 1
    S = q ** c
    if n < c:
        V = _maxplus_tail(lp.table, q, c, n)
        best = V.reshape(q ** n, q ** (c - n)).max(axis=1)
        return float(logsumexp(best)) / n
    V = _maxplus_tail(lp.table, q, c, c)
    a = np.zeros(S)
    base = np.arange(S, dtype=np.int64) * q
    for _ in range(n - c):
        A = a.reshape(q, S // q)
        nxt = np.empty((S // q, q))
        for b in range(q):
            nxt[:, b] = logsumexp(A + lp.table[base + b].reshape(q, S // q), axis=0)
        a = nxt.reshape(S)
    return float(logsumexp(a + V)) / n


def _pressure_geometric(psi: GeometricSeries, n: int) -> float:
    th = psi.theta
    g = np.asarray(psi.g)
    i = np.arange(n)
    coef = (1.0 - th ** (i + 1)) / (1.0 - th)
    head = logsumexp(coef[:, None] * g[None, :], axis=1).sum()
    tail = g.max() * th * (1.0 - th ** n) / (1.0 - th) ** 2
    return float(head + tail) / n


def _pressure_renewal(psi: Renewal, n: int) -> float:
    ks = np.arange(n + 1)
    a = psi.coeffs(ks)
    s = np.cumsum(a)
    logB = np.full(n + 1, -np.inf)
    logB[0] = 0.0
    for L in range(1, n + 1):
        logB[L] = logsumexp(logB[L - 1::-1][:L] + s[:L])
    tail_sup = np.zeros(n + 1)
    H = min(psi.horizon, 10 * n + 1000)
    ak = psi.coeffs(np.arange(1, H + n + 2))
    cs = np.concatenate([[0.0], np.cumsum(ak)])
    for r in range(1, n + 1):
        # sum_{i=1..r} a_{i+j} over j = 0..H; j = infinity contributes 0
        windows = cs[r:r + H + 1] - cs[:H + 1]
        tail_sup[r] = max(0.0, float(windows.max()))
    total = logsumexp(logB[n - np.arange(n + 1)] + tail_sup)
    return float(total) / n


# -- exact Gibbs constant for Markov lifts -----------------------------------

def gibbs_constant(eig: RpfEigendata, kind: str = "equilibrium") -> float:
    """Smallest ``K`` with all Gibbs ratios in ``[1/K, K]`` for every cylinder.

    The ratio compares ``mu[v]`` with ``exp(psi^{|v|}(y) - |v| P)`` for every
    point ``y`` in ``[v]``; by local constancy only words of length ``<= 2c``
    and continuations of length ``c`` matter.
    """
    mu = MarkovMeasure(eig, kind)
    q, c = eig.q, eig.context
    if q ** (2 * c) > 2 ** 22:
        raise ValueError("context too long for exhaustive Gibbs-constant search")
    table, P = eig.transfer.log_table, eig.pressure
    hi, lo = -np.inf, np.inf
    for L in range(1, 2 * c + 1):
        steps = min(L, c)
        vmax = _maxplus_tail(table, q, c, steps, np.max)
        vmin = _maxplus_tail(table, q, c, steps, np.min)
        if L <= c:
            lm = mu.all_log_masses(L)
            smax = vmax.reshape(q ** L, q ** (c - L)).max(axis=1)
            smin = vmin.reshape(q ** L, q ** (c - L)).min(axis=1)
            body = np.zeros(q ** L)
        else:
            words = _digits(np.arange(q ** L, dtype=np.int64), q, L)
            lm = mu.log_masses(words)
            body = table[window_codes(words, q, c + 1)].sum(axis=1)
            last = window_codes(words[:, L - c:], q, c)[:, 0]
            smax, smin = vmax[last], vmin[last]
        live = np.isfinite(lm)
        with np.errstate(invalid="ignore"):
            r_lo = lm - body - smax + L * P
            r_hi = lm - body - smin + L * P
        hi = max(hi, float(np.max(r_hi[live])))
        lo = min(lo, float(np.min(r_lo[live])))
    return math.exp(max(hi, -lo, 0.0))
