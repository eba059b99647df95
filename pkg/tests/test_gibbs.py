import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqgibbs.gibbs import (
    GibbsCertificate,
    NullCylinderError,
    chain_gibbs_times,
    gibbs_ratio,
    gibbs_time_growth,
    gibbs_times,
    growth_report,
    log_gibbs_ratio,
    log_ratio_matrix,
    mean_entrance_time,
    minimal_gibbs_constant,
    nonlacunarity_profile,
    ones_cylinder_deviation,
    pointwise_weak_gibbs,
    shift_consistency_check,
    weak_gibbs_profile,
)
from seqgibbs.potentials import CANONICAL_TAIL, LocallyConstant
from seqgibbs.shift import TailSpec, all_words
from seqgibbs.thermo import CylinderMeasure, MarkovMeasure, gibbs_constant, sample_paths, solve

HOFBAUER_WORD = (1, 1, 0, 1, 1, 0, 1, 1, 1, 0) + (1, 0) * 20


class Opaque(CylinderMeasure):
    """Hides the Markov structure so the generic code path runs."""

    def __init__(self, mu):
        self.mu, self.q = mu, mu.q

    def log_mass(self, word):
        return self.mu.log_mass(word)


@pytest.fixture(scope="module")
def bernoulli():
    psi = LocallyConstant.bernoulli([0.3, 0.7])
    return psi, MarkovMeasure(solve(psi), "equilibrium")


def test_bernoulli_ratios_are_one(bernoulli):
    psi, mu = bernoulli
    x = tuple(int(s) for s in np.random.default_rng(0).integers(2, size=30))
    R, rad = log_ratio_matrix(mu, psi, 0.0, x, None, 30)
    upper = np.triu_indices(31, 1)
    assert np.max(np.abs(R[upper])) < 1e-12
    assert np.all(rad[upper] == 0)
    assert gibbs_ratio(mu, psi, 0.0, x, None, 17, 4) == pytest.approx(1.0, abs=1e-12)
    cert = gibbs_times(mu, psi, 0.0, 1 + 1e-9, x, None, 30)
    assert cert.times == tuple(range(1, 31))


@given(st.integers(0, 2 ** 20))
def test_matrix_matches_single_ratios(seed):
    rng = np.random.default_rng(seed)
    psi = LocallyConstant(2, 3, rng.normal(size=8))
    e = solve(psi)
    mu = MarkovMeasure(e, "conformal")
    x = tuple(int(s) for s in rng.integers(2, size=9))
    tail = TailSpec.constant(1)
    R, rad = log_ratio_matrix(mu, psi, e.pressure, x, tail, 8)
    R2, _ = log_ratio_matrix(Opaque(mu), psi, e.pressure, x, tail, 8)
    assert np.allclose(R, R2, equal_nan=True, atol=1e-10)
    for n, j in [(1, 0), (5, 2), (8, 0), (8, 7)]:
        val, r = log_gibbs_ratio(mu, psi, e.pressure, x, tail, n, j)
        assert val == pytest.approx(R[j, n], abs=1e-10)


def test_conformal_ratios_bounded_by_gibbs_constant():
    rng = np.random.default_rng(1)
    psi = LocallyConstant(3, 2, rng.normal(size=9))
    e = solve(psi)
    K = gibbs_constant(e, "conformal")
    for x in sample_paths(e, 12, 10, 0):
        R, rad = log_ratio_matrix(MarkovMeasure(e, "conformal"), psi, e.pressure, tuple(x), CANONICAL_TAIL, 12)
        assert np.nanmax(np.abs(R)) <= math.log(K) + 1e-9


def test_minimal_constant_makes_a_gibbs_time():
    rng = np.random.default_rng(3)
    psi = LocallyConstant(2, 3, rng.normal(size=8))
    e = solve(psi)
    mu = MarkovMeasure(e, "equilibrium")
    x = tuple(int(s) for s in rng.integers(2, size=15))
    K = minimal_gibbs_constant(mu, psi, e.pressure, x, None, 10)
    assert 10 in gibbs_times(mu, psi, e.pressure, K * (1 + 1e-12), x, None, 15).times
    assert 10 not in gibbs_times(mu, psi, e.pressure, K * (1 - 1e-6), x, None, 15).times


def test_hofbauer_example_times(hofbauer12):
    psi12, err, eig = hofbauer12
    nu = MarkovMeasure(eig, "conformal")
    cert = gibbs_times(nu, psi12, eig.pressure, math.exp(err + 1e-9), HOFBAUER_WORD, None, 30)
    assert {3, 6, 10} <= set(cert.times)
    assert shift_consistency_check(cert)
    assert np.all(nonlacunarity_profile(cert) >= 1)


def test_tampered_certificate_rejected(bernoulli):
    psi, mu = bernoulli
    cert = gibbs_times(mu, psi, 0.0, 1 + 1e-9, (0, 1, 1, 0, 1), None, 5)
    holes = GibbsCertificate(mu, psi, cert.K, cert.P, cert.word, cert.tail, cert.N, (1, 2, 4, 5))
    assert shift_consistency_check(cert)
    assert not shift_consistency_check(holes)


def test_nonlacunarity_profile():
    assert nonlacunarity_profile((2, 4, 5)).tolist() == [2.0, 1.25]
    assert nonlacunarity_profile((3,)).size == 0


def test_null_cylinder():
    # golden-mean shift: the word 1 1 is forbidden
    psi = LocallyConstant(2, 2, np.array([0.0, 0.0, 0.0, -np.inf]))
    e = solve(psi)
    assert e.pressure == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)
    mu = MarkovMeasure(e, "equilibrium")
    with pytest.raises(NullCylinderError):
        log_ratio_matrix(mu, psi, e.pressure, (0, 1, 1), None, 3)


def test_weak_gibbs_depth_one_is_trivial():
    prof = weak_gibbs_profile(LocallyConstant.bernoulli([0.3, 0.7]), 10)
    assert np.all(prof.K == 1.0) and prof.exact


def test_weak_gibbs_bruteforce_locally_constant():
    rng = np.random.default_rng(6)
    psi = LocallyConstant(2, 3, rng.normal(size=8))
    prof = weak_gibbs_profile(psi, 5)
    assert prof.exact
    for n, Kn in zip(prof.ns, prof.K):
        best = max(psi.xi(w, TailSpec(u, (0,)))[0] for w in all_words(2, int(n)) for u in all_words(2, 2))
        assert math.log(Kn) == pytest.approx(best, abs=1e-12)


def test_weak_gibbs_hofbauer(hofbauer):
    prof = weak_gibbs_profile(hofbauer, 30)
    r = prof.log_over_n
    assert r[29] < r[9]
    pw = pointwise_weak_gibbs(hofbauer, HOFBAUER_WORD, CANONICAL_TAIL, 30)
    assert pw.K[9] == 1.0  # the prefix ends with a return to the zero cylinder


def test_ones_cylinder_deviation_grows(hofbauer, hofbauer12):
    psi12, err, eig = hofbauer12
    nu = MarkovMeasure(eig, "conformal")
    d = [ones_cylinder_deviation(nu, hofbauer, eig.pressure, n) for n in (5, 10, 20, 30)]
    assert d == sorted(d) and d[3] > d[1]


def naive_chain(mu, psi, P, K, x, horizon):
    times, start = [], 0
    while start < horizon:
        cert = gibbs_times(mu, psi, P, K, x[start:], CANONICAL_TAIL, horizon - start)
        if not cert.times:
            break
        start += cert.times[0]
        times.append(start)
    return times


@pytest.mark.parametrize("seed", [0, 1])
def test_chain_engine_matches_naive_loop(seed):
    rng = np.random.default_rng(seed)
    psi = LocallyConstant(2, 3, rng.normal(scale=0.7, size=8))
    e = solve(psi)
    mu = MarkovMeasure(e, "equilibrium")
    paths = sample_paths(e, 40, 12, seed)
    K = math.exp(0.6)
    hits = chain_gibbs_times(paths, mu, psi, e.pressure, K, 30)
    for row, h in zip(paths, hits):
        expect = naive_chain(mu, psi, e.pressure, K, tuple(int(s) for s in row), 30)
        assert np.flatnonzero(h).tolist() == expect


def test_bernoulli_growth_is_unit(bernoulli):
    psi, mu = bernoulli
    paths = sample_paths(mu.eig, 100, 50, 0)
    rep = gibbs_time_growth(paths, mu, psi, 0.0, 1 + 1e-9, 100)
    assert np.all(rep.first_times == 1)
    assert np.allclose(rep.slopes, 1.0)
    assert rep.mean_increment == 1.0 and rep.exceptional == ()


def test_growth_report_slopes():
    hits = np.zeros((2, 11), dtype=bool)
    hits[0, [2, 4, 6, 8, 10]] = True
    hits[1, [3]] = True
    rep = growth_report(hits)
    assert rep.slopes[0] == pytest.approx(2.0)
    assert math.isnan(rep.slopes[1])
    assert rep.first_times.tolist() == [2.0, 3.0]
    assert rep.counts.tolist() == [5, 1]


def test_mean_entrance_time():
    paths = np.array([[1, 1, 0], [0, 1, 1], [1, 1, 1]])
    mean, misses = mean_entrance_time(paths, 0)
    assert mean == 2.0 and misses == 1
