"""Sequential Gibbs checks: ratios, Gibbs times, weak-Gibbs profiles and growth.

For a measure ``mu``, potential ``psi`` and constants ``K, P`` an integer ``n`` is
a Gibbs time of ``x`` when every ratio

    mu[x_j ... x_{n-1}] / exp(psi^{n-j}(sigma^j x) - (n-j) P),   0 <= j < n,

lies in ``[1/K, K]``.  All comparisons are done on log-ratios with an absolute
slack of ``LOG_TOL``; the interval is closed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import (
    CANONICAL_TAIL,
    GeometricSeries,
    LocallyConstant,
    Potential,
    Renewal,
    birkhoff,
    orbit_matrix,
)
from .shift import Point, TailSpec, all_words, window_codes
from .thermo import CylinderMeasure, MarkovMeasure

LOG_TOL = 1e-9


class NullCylinderError(ValueError):
    """A cylinder in the scan has zero mass, so its ratio is undefined."""


def log_gibbs_ratio(mu: CylinderMeasure, psi: Potential, P: float, x, tail: TailSpec | None,
                    n: int, j: int) -> tuple[float, float]:
    """``(log ratio, radius)``; the radius is the Birkhoff-sum uncertainty."""
    x = tuple(x)
    if not 0 <= j < n <= len(x):
        raise ValueError("need 0 <= j < n <= len(x)")
    lm = mu.log_mass(x[j:n])
    if lm == -math.inf:
        raise NullCylinderError(f"cylinder {x[j:n]} has zero mass")
    s, rad = birkhoff(psi, x[j:], tail, n - j)
    return lm - s + (n - j) * P, rad


def gibbs_ratio(mu: CylinderMeasure, psi: Potential, P: float, x, tail: TailSpec | None,
                n: int, j: int) -> float:
    return math.exp(log_gibbs_ratio(mu, psi, P, x, tail, n, j)[0])


def _markov_log_masses(mu: MarkovMeasure, x: np.ndarray, N: int) -> np.ndarray:
    """``LM[j, n] = log mu[x_j .. x_{n-1}]`` for ``0 <= j < n <= N`` (nan elsewhere)."""
    q, c = mu.q, mu.c
    LM = np.full((N + 1, N + 1), np.nan)
    j, n = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    L = n - j
    if N >= c:
        ctx = window_codes(x[:N], q, c)
        phi = mu.log_table[window_codes(x[:N], q, c + 1)] - mu.P
        dead = np.isneginf(phi)
        cum = np.concatenate([[0.0], np.cumsum(np.where(dead, 0.0, phi))])
        ndead = np.concatenate([[0], np.cumsum(dead)])
        long = L >= max(c, 1)
        jj, nn = j[long], n[long]
        with np.errstate(invalid="ignore"):
            vals = mu.head[ctx[jj]] + cum[nn - c] - cum[jj] + mu.eig.log_ell[ctx[nn - c]]
        LM[long] = np.where(ndead[nn - c] > ndead[jj], -np.inf, vals)
    for length in range(1, min(c, N + 1)):
        table = mu.all_log_masses(length)
        codes = window_codes(x[:N], q, length)
        starts = np.arange(codes.size)
        LM[starts, starts + length] = table[codes]
    return LM


def log_ratio_matrix(mu: CylinderMeasure, psi: Potential, P: float, x, tail: TailSpec | None,
                     N: int) -> tuple[np.ndarray, np.ndarray]:
    """All log-ratios ``R[j, n]`` and radii for ``0 <= j < n <= N``."""
    x = tuple(x)
    if N > len(x):
        raise ValueError("scan horizon exceeds the word length")
    point = Point(x, CANONICAL_TAIL if tail is None else tail)
    ocum = np.concatenate([[0.0], np.cumsum(psi.orbit(point, N))])
    if tail is None:
        rad = np.array([psi.variation_at(x[t:], None) for t in range(N)])
    else:
        rad = np.zeros(N)
    rcum = np.concatenate([[0.0], np.cumsum(rad)])
    if isinstance(mu, MarkovMeasure):
        LM = _markov_log_masses(mu, np.asarray(x, dtype=np.int64), N)
    else:
        LM = np.full((N + 1, N + 1), np.nan)
        for n in range(1, N + 1):
            for j in range(n):
                LM[j, n] = mu.log_mass(x[j:n])
    j, n = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    upper = n > j
    if np.any(LM[upper] == -np.inf):
        jj, nn = np.argwhere(upper & (LM == -np.inf))[0]
        raise NullCylinderError(f"cylinder {x[jj:nn]} has zero mass")
    R = np.where(upper, LM - (ocum[n] - ocum[j]) + (n - j) * P, np.nan)
    radius = np.where(upper, rcum[n] - rcum[j], np.nan)
    return R, radius


def _maximal_times(R: np.ndarray, radius: np.ndarray, K: float) -> tuple[int, ...]:
    bound = math.log(K) + LOG_TOL
    with np.errstate(invalid="ignore"):
        bad = ~(np.abs(R) + radius <= bound)
    N = R.shape[0] - 1
    return tuple(n for n in range(1, N + 1) if not bad[:n, n].any())


@dataclass(frozen=True, eq=False)
class GibbsCertificate:
    mu: CylinderMeasure
    psi: Potential
    K: float
    P: float
    word: tuple[int, ...]
    tail: TailSpec | None
    N: int
    times: tuple[int, ...]


def gibbs_times(mu: CylinderMeasure, psi: Potential, P: float, K: float, x,
                tail: TailSpec | None, N: int) -> GibbsCertificate:
    """Scan ``n = 1..N`` and keep every Gibbs time at the fixed constant ``K``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    x = tuple(x)
    R, radius = log_ratio_matrix(mu, psi, P, x, tail, N)
    return GibbsCertificate(mu, psi, K, P, x, tail, N, _maximal_times(R, radius, K))


def minimal_gibbs_constant(mu: CylinderMeasure, psi: Potential, P: float, x,
                           tail: TailSpec | None, n: int) -> float:
    """Smallest ``K`` making ``n`` a Gibbs time of ``x``."""
    R, radius = log_ratio_matrix(mu, psi, P, x, tail, n)
    return math.exp(float(np.max(np.abs(R[:n, n]) + radius[:n, n])))


def shift_consistency_check(cert: GibbsCertificate) -> bool:
    """Recompute the time list and the Gibbs times of every shifted point."""
    again = gibbs_times(cert.mu, cert.psi, cert.P, cert.K, cert.word, cert.tail, cert.N)
    if again.times != tuple(cert.times):
        return False
    if list(cert.times) != sorted(set(cert.times)):
        return False
    top = max(cert.times, default=0)
    for s in range(1, top):
        shifted = gibbs_times(cert.mu, cert.psi, cert.P, cert.K, cert.word[s:], cert.tail, cert.N - s)
        have = set(shifted.times)
        if any(t - s not in have for t in cert.times if t > s):
            return False
    return True


def nonlacunarity_profile(times) -> np.ndarray:
    """Consecutive ratios ``n_{i+1} / n_i``; empty with fewer than two times."""
    t = np.asarray(getattr(times, "times", times), dtype=float)
    if t.size < 2:
        return np.array([])
    return t[1:] / t[:-1]


# -- weak Gibbs ---------------------------------------------------------------

@dataclass(frozen=True)
class WeakGibbsProfile:
    ns: np.ndarray
    K: np.ndarray
    kind: str
    exact: bool

    @property
    def log_over_n(self) -> np.ndarray:
        return np.log(self.K) / self.ns


def _sup_xi(psi: Potential, n: int) -> tuple[float, bool]:
    if isinstance(psi, LocallyConstant):
        m = psi.depth
        if m == 1:
            return 0.0, True
        best = 0.0
        r = min(n, m - 1)
        for s in all_words(psi.q, r):
            word = (0,) * (n - r) + s
            for u in all_words(psi.q, m - 1):
                best = max(best, psi.xi(word, TailSpec(u, (0,)))[0])
        return best, True
    if isinstance(psi, Renewal):
        vals = [psi.xi((0,) * (n - r) + (1,) * r, CANONICAL_TAIL)[0] for r in range(n + 1)]
        return max(vals), False
    if isinstance(psi, GeometricSeries):
        return psi.xi((0,) * n, CANONICAL_TAIL)
    raise TypeError(f"no weak-Gibbs profile for {type(psi).__name__}")


def weak_gibbs_profile(psi: Potential, N: int, ns=None) -> WeakGibbsProfile:
    """``K_n = exp(sup xi_n)`` over representatives of all ``n``-cylinders."""
    ns = np.arange(1, N + 1) if ns is None else np.asarray(ns)
    vals = [_sup_xi(psi, int(n)) for n in ns]
    return WeakGibbsProfile(ns, np.exp([v for v, _ in vals]), "global", all(e for _, e in vals))


def pointwise_weak_gibbs(psi: Potential, x, tail: TailSpec | None, N: int) -> WeakGibbsProfile:
    x = tuple(x)
    vals = [psi.xi(x[:n], TailSpec.after(x[n:], tail or CANONICAL_TAIL)) for n in range(1, N + 1)]
    return WeakGibbsProfile(np.arange(1, N + 1), np.exp([v for v, _ in vals]), "pointwise",
                            all(e for _, e in vals))


def ones_cylinder_deviation(mu: CylinderMeasure, psi: Renewal, P: float, n: int) -> float:
    """``max |log mu[1^n] - psi^n(y) + nP|`` over ``y`` in ``[1^n]``.

    On ``[1^n]`` the renewal Birkhoff sum is ``s_{n+j} - s_j`` when the first zero
    of ``y`` sits at ``n + j``, and 0 at the fixed point; all ``j`` up to the
    potential's horizon are scanned.
    """
    s = psi.partial_sums()
    H = s.size - 1 - n
    sums = np.append(s[n:n + H + 1] - s[:H + 1], 0.0)
    base = mu.log_mass((1,) * n) + n * P
    return float(np.max(np.abs(base - sums)))


# -- Monte Carlo growth of Gibbs times ---------------------------------------

@dataclass(frozen=True)
class GrowthReport:
    n_paths: int
    horizon: int
    first_times: np.ndarray
    slopes: np.ndarray
    counts: np.ndarray
    exceptional: tuple[int, ...]

    @property
    def mean_first(self) -> float:
        v = self.first_times[np.isfinite(self.first_times)]
        return float(v.mean()) if v.size else math.nan

    @property
    def se_first(self) -> float:
        v = self.first_times[np.isfinite(self.first_times)]
        return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan

    @property
    def mean_slope(self) -> float:
        v = self.slopes[np.isfinite(self.slopes)]
        return float(v.mean()) if v.size else math.nan

    @property
    def se_slope(self) -> float:
        v = self.slopes[np.isfinite(self.slopes)]
        return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan

    @property
    def mean_increment(self) -> float:
        """Pooled ``n_k / k`` at the last Gibbs time of each path."""
        ok = self.counts > 0
        return float(np.sum(self.last_times[ok]) / np.sum(self.counts[ok])) if ok.any() else math.nan

    last_times: np.ndarray = field(default_factory=lambda: np.array([]))


def chain_gibbs_times(paths: np.ndarray, mu: MarkovMeasure, psi: Potential, P: float, K: float,
                      horizon: int) -> np.ndarray:
    """Boolean ``(paths, horizon + 1)`` array marking ``n_1 < n_2 < ...``.

    Times follow ``n_k = n_{k-1} + n_1(sigma^{n_{k-1}} x)``.  Symbols past the
    horizon only feed the potential values near the end of the scan.
    """
    paths = np.asarray(paths, dtype=np.int64)
    rows = paths.shape[0]
    N = horizon
    q, c = mu.q, mu.c
    bound = math.log(K) + LOG_TOL
    O = orbit_matrix(psi, paths, N)
    ocum = np.concatenate([np.zeros((rows, 1)), np.cumsum(O, axis=1)], axis=1)
    x = paths[:, :N]
    ctx = window_codes(x, q, c)                      # (rows, N - c + 1)
    phi = mu.log_table[window_codes(x, q, c + 1)]    # (rows, N - c)
    D = phi - mu.P - O[:, :N - c] + P
    dcum = np.concatenate([np.zeros((rows, 1)), np.cumsum(D, axis=1)], axis=1)
    A = mu.head[ctx] - dcum                          # index a = 0 .. N - c
    b_idx = np.arange(c, N + 1)
    B = np.full((rows, N + 1), np.nan)
    B[:, c:] = (dcum[:, b_idx - c] + mu.eig.log_ell[ctx[:, b_idx - c]]
                - (ocum[:, b_idx] - ocum[:, b_idx - c]) + c * P)
    okshort = np.ones((rows, N + 1, c), dtype=bool)
    for L in range(1, c):
        table = mu.all_log_masses(L)
        codes = window_codes(x, q, L)                # start a = 0 .. N - L
        ends = np.arange(L, N + 1)
        S = table[codes] - (ocum[:, ends] - ocum[:, ends - L]) + L * P
        good = np.abs(S) <= bound
        okshort[:, L:, L] = okshort[:, L:, L - 1] & good
        okshort[:, :L, L] = okshort[:, :L, L - 1]
    hits = np.zeros((rows, N + 1), dtype=bool)
    start = np.zeros(rows, dtype=np.int64)
    runmax = np.full(rows, -np.inf)
    runmin = np.full(rows, np.inf)
    r = np.arange(rows)
    for b in range(1, N + 1):
        n = b - start
        grow = n >= c
        if c <= b:
            a = b - c
            runmax = np.where(grow, np.maximum(runmax, A[:, a]), runmax)
            runmin = np.where(grow, np.minimum(runmin, A[:, a]), runmin)
        short_ok = okshort[r, b, np.minimum(n, c - 1)]
        with np.errstate(invalid="ignore"):
            long_ok = ~grow | ((runmax + B[:, b] <= bound) & (runmin + B[:, b] >= -bound))
        hit = short_ok & long_ok
        hits[:, b] = hit
        start = np.where(hit, b, start)
        runmax = np.where(hit, -np.inf, runmax)
        runmin = np.where(hit, np.inf, runmin)
    return hits


def growth_report(hits: np.ndarray) -> GrowthReport:
    rows, width = hits.shape
    N = width - 1
    counts = hits.sum(axis=1)
    first = np.where(counts > 0, np.argmax(hits, axis=1), np.nan).astype(float)
    k = np.cumsum(hits, axis=1) * hits               # k index at each time, 0 elsewhere
    t = np.arange(width)[None, :] * hits
    with np.errstate(invalid="ignore", divide="ignore"):
        sk, st = k.sum(1), t.sum(1)
        skk, skt = (k * k).sum(1), (k * t).sum(1)
        denom = counts * skk - sk ** 2
        slopes = np.where(counts >= 2, (counts * skt - sk * st) / denom, np.nan)
    last = np.where(counts > 0, N - np.argmax(hits[:, ::-1], axis=1), 0)
    exceptional = tuple(int(i) for i in np.flatnonzero(counts == 0))
    return GrowthReport(rows, N, first, slopes, counts, exceptional, last_times=last)


def gibbs_time_growth(paths: np.ndarray, mu: MarkovMeasure, psi: Potential, P: float, K: float,
                      horizon: int | None = None) -> GrowthReport:
    paths = np.asarray(paths, dtype=np.int64)
    horizon = paths.shape[1] if horizon is None else horizon
    return growth_report(chain_gibbs_times(paths, mu, psi, P, K, horizon))


def mean_entrance_time(paths: np.ndarray, symbol: int = 0, horizon: int | None = None) -> tuple[float, int]:
    """Mean of ``1 + first index of symbol`` over paths that hit it, and the miss count."""
    paths = np.asarray(paths)
    horizon = paths.shape[1] if horizon is None else horizon
    hit = paths[:, :horizon] == symbol
    found = hit.any(axis=1)
    first = np.argmax(hit, axis=1) + 1
    return float(first[found].mean()), int((~found).sum())
