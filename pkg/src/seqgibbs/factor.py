"""Push-forward measures and the image potential under one-block factor maps.

Notation used throughout: ``pi`` maps the source alphabet ``A1`` onto ``A2``,
``z`` is a word over ``A2`` and ``w`` a tail over ``A1``.  For ``0 <= l <= |z|``

    LS_l(z, w) = log sum exp(psi1^{|z|-l}(x_l ... x_{|z|-1} w))

over all fiber words ``x_l ... x_{|z|-1}`` of ``z_l ... z_{|z|-1}``, and

    u_w(z) = exp(LS_0 - LS_1).

With ``n_k = |z| - 1`` this is the ``k``-th approximation of ``exp(psi2(z))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .potentials import CANONICAL_TAIL, GeometricSeries, LocallyConstant, Potential
from .shift import FactorMap, Point, TailSpec, Word, all_words, fiber_words, window_codes, word_code
from .thermo import (
    CylinderMeasure,
    MarkovMeasure,
    context_digits,
    forward_choices,
    lift,
)

LOG_SLACK = 1e-9
ORACLE_MAX_LEN = 12
MAX_TAIL_PREFIXES = 4096


def _symbols(z) -> tuple[int, ...]:
    return z.symbols if isinstance(z, Word) else tuple(int(s) for s in z)


# -- push-forward ------------------------------------------------------------

class PushforwardMeasure(CylinderMeasure):
    """``nu[z] = sum of mu[x]`` over the fiber of ``z``."""

    kind = "pushforward"

    def __init__(self, mu: CylinderMeasure, pi: FactorMap, oracle: bool = False):
        if mu.q != pi.q1:
            raise ValueError("measure alphabet does not match the factor source")
        self.mu = mu
        self.pi = pi
        self.q = pi.q2
        self.oracle = oracle

    def log_mass(self, word) -> float:
        z = _symbols(word)
        if not self.oracle and isinstance(self.mu, MarkovMeasure):
            return self.mu.log_mass_choices([self.pi.fiber(b) for b in z])
        if len(z) > ORACLE_MAX_LEN:
            raise ValueError(f"enumeration limited to words of length <= {ORACLE_MAX_LEN}")
        vals = [self.mu.log_mass(x.symbols) for x in fiber_words(self.pi, Word(z, self.q))]
        return float(logsumexp(vals))


def pushforward_mass(mu: CylinderMeasure, pi: FactorMap, z, oracle: bool = False) -> float:
    return PushforwardMeasure(mu, pi, oracle).mass(z)


# -- fiber sums --------------------------------------------------------------

def _lc_parts(psi: LocallyConstant):
    lp = lift(psi)
    return lp.table, lp.q, lp.depth - 1


def fiber_logsum_bruteforce(psi: Potential, pi: FactorMap, z, tail: TailSpec, l: int = 0) -> float:
    z = _symbols(z)
    if not 0 <= l <= len(z):
        raise ValueError("need 0 <= l <= len(z)")
    if l == len(z):
        return 0.0
    vals = []
    for x in itertools.product(*(pi.fiber(b) for b in z[l:])):
        vals.append(float(np.sum(psi.orbit(Point(x, tail), len(x)))))
    return float(logsumexp(vals))


def _geometric_logsum(psi: GeometricSeries, pi: FactorMap, z: tuple[int, ...], tail_value, l: int):
    L = len(z) - l
    th, g = psi.theta, np.asarray(psi.g)
    i = np.arange(L)
    coef = (1.0 - th ** (i + 1)) / (1.0 - th)
    head = sum(float(logsumexp(coef[t] * g[list(pi.fiber(z[l + t]))])) for t in range(L))
    return head + th * (1.0 - th ** L) / (1.0 - th) * tail_value


def fiber_logsum(psi: Potential, pi: FactorMap, z, tail: TailSpec, l: int = 0,
                 oracle: bool = False) -> float:
    """``LS_l(z, tail)``; dynamic programming unless ``oracle`` is set."""
    z = _symbols(z)
    if not 0 <= l <= len(z):
        raise ValueError("need 0 <= l <= len(z)")
    if l == len(z):
        return 0.0
    if oracle:
        return fiber_logsum_bruteforce(psi, pi, z, tail, l)
    if isinstance(psi, LocallyConstant):
        table, q, c = _lc_parts(psi)
        choices = [pi.fiber(b) for b in z[l:]] + [(s,) for s in tail.prefix(c)]
        return float(logsumexp(forward_choices(table, q, c, choices)))
    if isinstance(psi, GeometricSeries):
        return _geometric_logsum(psi, pi, z, psi.value(Point((), tail)), l)
    return fiber_logsum_bruteforce(psi, pi, z, tail, l)


@lru_cache(maxsize=64)
def _tail_block(psi: LocallyConstant) -> np.ndarray:
    """``T[s, t]``: sum of the ``c`` windows straddling context ``s`` and tail ``t``."""
    table, q, c = _lc_parts(psi)
    d = context_digits(q, c)
    S = q ** c
    seq = np.concatenate([np.repeat(d, S, axis=0), np.tile(d, (S, 1))], axis=1)
    vals = table[window_codes(seq[:, :2 * c], q, c + 1)].sum(axis=1)
    return vals.reshape(S, S)


def fiber_logsums_over_tails(psi: LocallyConstant, pi: FactorMap, z, l: int = 0) -> np.ndarray:
    """``LS_l(z, t)`` for every tail context ``t`` in ``A1^c`` (code order)."""
    z = _symbols(z)
    table, q, c = _lc_parts(psi)
    S = q ** c
    L = len(z) - l
    if L == 0:
        return np.zeros(S)
    fibers = [pi.fiber(b) for b in z[l:]]
    if L >= c and S <= 1024:
        a = forward_choices(table, q, c, fibers)
        return logsumexp(a[:, None] + _tail_block(psi), axis=0)
    out = np.empty(S)
    for code, t in enumerate(context_digits(q, c)):
        ch = fibers + [(int(s),) for s in t]
        out[code] = logsumexp(forward_choices(table, q, c, ch))
    return out


def u_value(psi: Potential, pi: FactorMap, z, tail: TailSpec, oracle: bool = False) -> float:
    return math.exp(fiber_logsum(psi, pi, z, tail, 0, oracle) - fiber_logsum(psi, pi, z, tail, 1, oracle))


# -- intervals ---------------------------------------------------------------

@dataclass(frozen=True)
class UInterval:
    k: int
    n_k: int
    log_min: float
    log_max: float
    inflation: float = 0.0
    exact: bool = True

    @property
    def min_u(self) -> float:
        return math.exp(self.log_min)

    @property
    def max_u(self) -> float:
        return math.exp(self.log_max)

    @property
    def log_lambda(self) -> float:
        return self.log_max - self.log_min

    @property
    def lam(self) -> float:
        return math.exp(self.log_lambda)


def _tail_prefix_len(q: int, L: int) -> int:
    while L > 1 and q ** L > MAX_TAIL_PREFIXES:
        L -= 1
    return L


def lambda_interval(psi: Potential, pi: FactorMap, z, k: int, n_k: int | None = None,
                    L: int = 16) -> UInterval:
    """``Lambda_k`` as min and max of ``u`` over tails, using ``z[:n_k + 1]``."""
    z = _symbols(z)
    n_k = k if n_k is None else n_k
    if len(z) < n_k + 1:
        raise ValueError("z is shorter than n_k + 1")
    zz = z[:n_k + 1]
    if isinstance(psi, LocallyConstant):
        logu = fiber_logsums_over_tails(psi, pi, zz, 0) - fiber_logsums_over_tails(psi, pi, zz, 1)
        return UInterval(k, n_k, float(logu.min()), float(logu.max()))
    Lp = _tail_prefix_len(psi.q, L)
    logu = []
    for prefix in all_words(psi.q, Lp):
        tail = TailSpec(prefix, (0,))
        logu.append(fiber_logsum(psi, pi, zz, tail, 0) - fiber_logsum(psi, pi, zz, tail, 1))
    n = len(zz)
    delta = sum(psi.variation_bound(Lp + i) for i in range(1, n + 1))
    delta += sum(psi.variation_bound(Lp + i) for i in range(1, n))
    return UInterval(k, n_k, min(logu) - delta, max(logu) + delta, inflation=delta, exact=False)


def lambda_sequence(psi: Potential, pi: FactorMap, z, k_max: int, k_min: int = 1) -> list[UInterval]:
    return [lambda_interval(psi, pi, z, k) for k in range(k_min, k_max + 1)]


def intervals_nested(intervals) -> bool:
    for a, b in zip(intervals, intervals[1:]):
        if b.log_min < a.log_min - LOG_SLACK or b.log_max > a.log_max + LOG_SLACK:
            return False
    return True


def lambdas_monotone(intervals) -> bool:
    return all(b.lam <= a.lam + LOG_SLACK for a, b in zip(intervals, intervals[1:]))


def check_nesting(psi: Potential, pi: FactorMap, z, k_max: int) -> bool:
    return intervals_nested(lambda_sequence(psi, pi, z, k_max))


def check_lambda_monotone(psi: Potential, pi: FactorMap, z, k_max: int) -> bool:
    return lambdas_monotone(lambda_sequence(psi, pi, z, k_max))


# -- lemma-level checks ------------------------------------------------------

def _batch_advance(table: np.ndarray, q: int, c: int, a: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Advance a batch ``a[B, S]`` by one fixed symbol per row and column of ``cols``."""
    S = q ** c
    base = np.arange(S, dtype=np.int64) * q
    rows = np.arange(a.shape[0])
    for b in cols.T:
        phi = table[base[None, :] + b[:, None]].reshape(-1, q, S // q)
        red = logsumexp(a.reshape(-1, q, S // q) + phi, axis=1)
        out = np.full((a.shape[0], S // q, q), -np.inf)
        out[rows, :, b] = red
        a = out.reshape(-1, S)
    return a


def p_ki_min_ratio(psi: LocallyConstant, pi: FactorMap, z, i: int, k: int) -> float:
    """``min over xbar of min_w P / max_w P`` for ``n_i = i < n_k = k``.

    ``P(xbar, w)`` is the share of the ``x_1 .. x_{n_k}`` fiber sum whose last
    ``n_k - n_i`` symbols equal ``xbar``.  All ``xbar`` are processed as one batch.
    """
    z = _symbols(z)
    if not 0 <= i < k < len(z):
        raise ValueError("need 0 <= i < k < len(z)")
    table, q, c = _lc_parts(psi)
    denom = fiber_logsums_over_tails(psi, pi, z[:k + 1], 1)
    head = [pi.fiber(b) for b in z[1:i + 1]]
    X = np.array(list(itertools.product(*(pi.fiber(b) for b in z[i + 1:k + 1]))), dtype=np.int64)
    h = len(head)
    if h >= c:
        a = np.broadcast_to(forward_choices(table, q, c, head), (len(X), q ** c))
        a = _batch_advance(table, q, c, a, X)
    elif h + X.shape[1] >= c:
        digits = context_digits(q, c)
        mask = np.ones((len(X), q ** c), dtype=bool)
        for p in range(h):
            mask &= np.isin(digits[:, p], head[p])[None, :]
        for p in range(h, c):
            mask &= digits[None, :, p] == X[:, p - h, None]
        a = _batch_advance(table, q, c, np.where(mask, 0.0, -np.inf), X[:, c - h:])
    else:
        raise ValueError("word too short for the context length")
    logp = logsumexp(a[:, :, None] + _tail_block(psi)[None, :, :], axis=1) - denom[None, :]
    return float(np.exp(logp.min(axis=1) - logp.max(axis=1)).min())


def p_ki_ratio_check(psi: LocallyConstant, pi: FactorMap, z, i: int, k: int, K: float) -> bool:
    return p_ki_min_ratio(psi, pi, z, i, k) >= K ** -4 - LOG_SLACK


def fiber_variation(psi: Potential, pi: FactorMap, z, j: int) -> float:
    """``sup |psi(x) - psi(y)|`` over ``x`` in the fiber of ``z`` and ``y`` sharing ``j`` symbols."""
    z = _symbols(z)
    if not isinstance(psi, LocallyConstant):
        return psi.variation_bound(j)
    m = psi.depth
    if j >= m:
        return 0.0
    q = psi.q
    fibers = [pi.fiber(b) for b in z[:m]] + [tuple(range(q))] * max(0, m - len(z))
    rows = psi.table.reshape(q ** j, q ** (m - j))
    best = 0.0
    for x in itertools.product(*fibers[:j]):
        row = rows[word_code(x, q)]
        allowed = [word_code(r, q) for r in itertools.product(*fibers[j:m])]
        X = row[allowed]
        best = max(best, float(X.max() - row.min()), float(row.max() - X.min()))
    return best


@dataclass(frozen=True)
class RecursionSides:
    i: int
    k: int
    c: float
    variation_sum: float
    lam_i: float
    lam_k: float

    @property
    def rhs(self) -> float:
        return self.c * math.exp(2.0 * self.variation_sum) + (1.0 - self.c) * self.lam_i

    @property
    def holds(self) -> bool:
        return self.lam_k <= self.rhs * (1.0 + LOG_SLACK)


def recursion_sides(psi: Potential, pi: FactorMap, z, i: int, k: int, K: float,
                    intervals: dict | None = None) -> RecursionSides:
    z = _symbols(z)
    if not i < k:
        raise ValueError("need i < k")
    lam = {}
    for idx in (i, k):
        iv = intervals.get(idx) if intervals else None
        lam[idx] = (iv or lambda_interval(psi, pi, z, idx)).lam
    var = sum(fiber_variation(psi, pi, z[n:], k - n) for n in range(i + 1))
    return RecursionSides(i, k, K ** -4, var, lam[i], lam[k])


def check_recursion(psi: Potential, pi: FactorMap, z, i: int, k: int, K: float) -> bool:
    return recursion_sides(psi, pi, z, i, k, K).holds


# -- image potential ----------------------------------------------------------

@dataclass(frozen=True)
class Psi2Estimate:
    z: tuple[int, ...]
    k: int
    value: float
    error: float


def psi2(psi: Potential, pi: FactorMap, z, k: int) -> Psi2Estimate:
    """Log-midpoint of ``Lambda_k``; the error is half its log-width."""
    z = _symbols(z)
    iv = lambda_interval(psi, pi, z, k)
    return Psi2Estimate(z[:k + 1], k, 0.5 * (iv.log_min + iv.log_max), 0.5 * iv.log_lambda)


def psi2_birkhoff_check(psi: Potential, pi: FactorMap, z, n: int, k: int,
                        tail: TailSpec = CANONICAL_TAIL) -> tuple[float, float]:
    """``(residual, accumulated error)`` of the telescoped Birkhoff identity.

    ``psi2`` at ``sigma^i z`` uses ``k - i`` so every term reads the same prefix
    ``z[:k + 1]``; the fiber sums use one fixed tail.
    """
    z = _symbols(z)
    if not 0 <= n < k < len(z):
        raise ValueError("need 0 <= n < k < len(z)")
    ests = [psi2(psi, pi, z[i:], k - i) for i in range(n + 1)]
    total = sum(e.value for e in ests)
    zz = z[:k + 1]
    exact = fiber_logsum(psi, pi, zz, tail, 0) - fiber_logsum(psi, pi, zz, tail, n + 1)
    return abs(total - exact), sum(e.error for e in ests)


def image_log_ratio(nu: CylinderMeasure, psi2_values, P: float, z, l: int, n_i: int) -> float:
    """``log nu[z_l .. z_{n_i}] - sum_{t=l}^{n_i} (psi2(sigma^t z) - P)``."""
    z = _symbols(z)
    return nu.log_mass(z[l:n_i + 1]) - float(np.sum(np.asarray(psi2_values)[l:n_i + 1])) + (n_i - l + 1) * P


def image_gibbs_check(nu: CylinderMeasure, psi2_values, P: float, z, n_i: int, l: int) -> float:
    return math.exp(image_log_ratio(nu, psi2_values, P, z, l, n_i))


@dataclass(frozen=True)
class ImageScan:
    depth: int
    K: float
    max_log_dev: float
    n_ratios: int

    @property
    def K_prime(self) -> float:
        return math.exp(self.max_log_dev) / self.K ** 2


def psi2_along(psi: Potential, pi: FactorMap, z, k: int, extension: int | None = None) -> np.ndarray:
    """``psi2(sigma^t z)`` for ``t < |z|``; ``z`` is continued by the symbol-0 tail."""
    z = _symbols(z)
    ext = k + 1 if extension is None else extension
    zz = z + (0,) * ext
    return np.array([psi2(psi, pi, zz[t:], k).value for t in range(len(z))])


def image_gibbs_scan(mu: MarkovMeasure, psi: Potential, pi: FactorMap, P: float, K: float,
                     depth: int, k: int = 10) -> ImageScan:
    """Worst image Gibbs ratio over every ``z`` of length ``depth`` and every ``l <= n_i``."""
    nu = PushforwardMeasure(mu, pi)
    worst, count = 0.0, 0
    cache: dict[tuple[int, ...], float] = {}
    point_cache: dict[tuple[int, ...], float] = {}
    for z in all_words(pi.q2, depth):
        zz = z + (0,) * (k + 1)
        vals = np.empty(depth)
        for t in range(depth):
            key = zz[t:t + k + 1]
            if key not in point_cache:
                point_cache[key] = psi2(psi, pi, key, k).value
            vals[t] = point_cache[key]
        for l in range(depth):
            for n_i in range(l, depth):
                key = z[l:n_i + 1]
                if key not in cache:
                    cache[key] = nu.log_mass(key)
                dev = abs(cache[key] - float(vals[l:n_i + 1].sum()) + (n_i - l + 1) * P)
                worst = max(worst, dev)
                count += 1
    return ImageScan(depth, K, worst, count)


def check_regular(mu: CylinderMeasure, psi: Potential, P: float, K: float, pi: FactorMap, z,
                  tail: TailSpec | None = CANONICAL_TAIL) -> tuple[bool, dict]:
    """Do all fiber words of ``z`` share their first Gibbs time?"""
    from .gibbs import gibbs_times
    z = _symbols(z)
    firsts = {}
    for x in fiber_words(pi, Word(z, pi.q2)):
        cert = gibbs_times(mu, psi, P, K, x.symbols, tail, len(z))
        firsts[x.symbols] = cert.times[0] if cert.times else None
    return len(set(firsts.values())) == 1, firsts


# -- decay models -------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    model: str
    params: dict
    residual: float
    k_range: tuple[int, int]
    alternatives: dict = field(default_factory=dict)


def _stretched_rms(k: np.ndarray, y: np.ndarray, beta: float) -> tuple[float, float, float]:
    X = np.column_stack([np.ones_like(k), k ** beta])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    return float(np.sqrt(np.mean(r ** 2))), float(coef[0]), float(coef[1])


def modulus_fit(ks, osc) -> DecayFit:
    """Fit ``Gamma * theta**(k**beta)`` and ``Gamma * k**(-s)`` to ``log osc``.

    Both models are linear in ``log osc`` once ``beta`` is fixed; ``beta`` is
    profiled over ``(0, 1]`` with ``beta = 1`` always tried.  The model with the
    smaller root-mean-square residual wins.
    """
    k = np.asarray(ks, dtype=float)
    o = np.asarray(osc, dtype=float)
    if k.size != o.size or k.size < 4:
        raise ValueError("need at least four (k, osc) pairs")
    if np.any(o <= 0) or not np.all(np.isfinite(o)):
        raise ValueError("oscillations must be positive and finite")
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    y = np.log(o)

    res = minimize_scalar(lambda b: _stretched_rms(k, y, b)[0], bounds=(1e-3, 1.0), method="bounded",
                          options={"xatol": 1e-10})
    cands = [1.0, float(res.x)]
    fits = [(b,) + _stretched_rms(k, y, b) for b in cands]
    fits = [f for f in fits if f[3] < 0 and abs(f[2]) < 700]
    if fits:
        beta, s_rms, lg, lt = min(fits, key=lambda f: (f[1], -f[0]))
        stretched = DecayFit("stretched", {"Gamma": math.exp(lg), "theta": math.exp(lt), "beta": beta},
                             s_rms, (int(k.min()), int(k.max())))
    else:
        stretched = None

    X = np.column_stack([np.ones_like(k), -np.log(k)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    p_rms = float(np.sqrt(np.mean((y - X @ coef) ** 2)))
    polynomial = None
    if coef[1] > 0:
        polynomial = DecayFit("polynomial", {"Gamma": math.exp(coef[0]), "s": float(coef[1])},
                              p_rms, (int(k.min()), int(k.max())))
    options = [f for f in (stretched, polynomial) if f is not None]
    if not options:
        raise ValueError("data are not decaying under either model")
    best = min(options, key=lambda f: f.residual)
    alt = {f.model: f.residual for f in options}
    return DecayFit(best.model, best.params, best.residual, best.k_range, alt)


# -- lumped Markov chains -----------------------------------------------------

def lumped_chain(psi: LocallyConstant, pi: FactorMap, tol: float = 1e-12):
    """``(pibar, Pbar)`` when ``exp(psi)`` is a lumpable stochastic matrix, else ``None``.

    ``pibar`` comes from a linear solve on ``Pbar`` alone, so it is independent of
    the source chain's stationary vector.
    """
    if psi.depth != 2 or psi.q != pi.q1:
        return None
    q1, q2 = pi.q1, pi.q2
    Pm = np.exp(psi.table.reshape(q1, q1))
    if not np.allclose(Pm.sum(axis=1), 1.0, atol=tol):
        return None
    agg = np.zeros((q1, q2))
    for j in range(q1):
        agg[:, pi.table[j]] += Pm[:, j]
    Pbar = np.zeros((q2, q2))
    for b in range(q2):
        rows = agg[list(pi.fiber(b))]
        if np.ptp(rows, axis=0).max() > tol:
            return None
        Pbar[b] = rows[0]
    A = np.vstack([Pbar.T - np.eye(q2), np.ones(q2)])
    rhs = np.zeros(q2 + 1)
    rhs[-1] = 1.0
    pibar = np.linalg.lstsq(A, rhs, rcond=None)[0]
    return pibar, Pbar


def lumped_mass(pibar: np.ndarray, Pbar: np.ndarray, z) -> float:
    z = _symbols(z)
    if not z:
        return 1.0
    m = pibar[z[0]]
    for a, b in zip(z, z[1:]):
        m *= Pbar[a, b]
    return float(m)
