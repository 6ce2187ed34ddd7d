import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import special, stats

from patchvar import copulas as C
from patchvar.errors import AdmissibilityError, DomainError
from patchvar.marginals import norm_ppf

from conftest import KS_CRIT, ks_uniform

N = 100_000


def _r_values(d):
    return [-1 / (d - 1), 0.0, 0.3, 1.0]


@pytest.mark.parametrize("d", range(2, 51))
def test_spectral_algebra(d):
    for r in _r_values(d):
        f = C.spectral_factor(d, r)
        t = f.basis
        eye = np.eye(d)
        assert np.max(np.abs(t.T @ t - eye)) <= 1e-12
        assert np.max(np.abs(t @ t.T - eye)) <= 1e-12
        assert np.max(np.abs(f.A @ f.A.T - C.equicorrelation_matrix(d, r))) <= 1e-12


def _det(m):
    # cofactor expansion, independent of LAPACK
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    return sum((-1) ** j * m[0, j] * _det(np.delete(m[1:], j, axis=1)) for j in range(n))


@pytest.mark.parametrize("d", range(2, 9))
def test_eigenvalues_are_characteristic_roots(d):
    for r in _r_values(d):
        f = C.spectral_factor(d, r)
        sigma = C.equicorrelation_matrix(d, r)
        for lam in f.eigenvalues:
            assert abs(_det(sigma - lam * np.eye(d))) <= 1e-9


def test_spectral_examples():
    assert_allclose(C.spectral_factor(4, 0.2).eigenvalues, [1.6, 0.8, 0.8, 0.8], atol=1e-15)
    f = C.spectral_factor(3, -0.5)
    assert_allclose(f.eigenvalues, [0, 1.5, 1.5], atol=1e-15)
    expected = np.full((3, 3), -0.5) + 1.5 * np.eye(3)
    assert_allclose(f.A @ f.A.T, expected, atol=1e-15)
    f = C.spectral_factor(2, 0.0)
    assert_allclose(f.A @ f.A.T, np.eye(2), atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 5, 19, 50])
def test_admissibility_boundary_exact(d):
    lo = -1 / (d - 1)
    C.spectral_factor(d, lo)
    C.spectral_factor(d, 1.0)
    C.GaussianEqui(d, lo)
    for bad in (lo - 1e-9, 1 + 1e-9):
        with pytest.raises(AdmissibilityError):
            C.spectral_factor(d, bad)
        with pytest.raises(AdmissibilityError):
            C.GaussianEqui(d, bad)
    # min eigenvalue sign flips exactly at the boundary
    assert 1 + (d - 1) * (lo - 1e-9) < 0 <= 1 + (d - 1) * lo + 1e-15


def test_dimension_checks():
    with pytest.raises(DomainError):
        C.Independence(1)
    with pytest.raises(DomainError):
        C.Countermonotone(3)


def test_minimal_correlation_gaussian():
    assert C.minimal_correlation_gaussian(2) == C.GaussianEqui(2, -1.0)
    assert_allclose(C.minimal_correlation_gaussian(19).r, -1 / 18)
    assert_allclose(C.minimal_correlation_gaussian(3).r, -0.5)


def test_min_corr_spearman_d3(rng):
    w = C.sample(C.minimal_correlation_gaussian(3), rng, N)
    rho = stats.spearmanr(w).statistic
    off = rho[np.triu_indices(3, 1)]
    # Gaussian-copula Spearman rho: (6/pi) asin(r/2)
    assert_allclose(off, 6 / np.pi * np.arcsin(-0.25), atol=0.01)
    assert np.all(np.abs(off + 0.48) <= 0.02)


def test_countermonotone_d2_gaussian(rng):
    w = C.sample(C.GaussianEqui(2, -1.0), rng, 10_000)
    assert np.max(np.abs(w[:, 1] - (1 - w[:, 0]))) <= 1e-9


def test_min_corr_hyperplane_d19(rng):
    w = C.sample(C.minimal_correlation_gaussian(19), rng, 10_000)
    z = norm_ppf(np.clip(w, 1e-300, 1 - 1e-16))
    inner = (np.abs(z) < 7).all(axis=1)
    assert np.max(np.abs(z[inner].sum(axis=1))) <= 1e-7
    # e' Sigma e vanishes on the boundary
    e = np.ones(19)
    assert abs(e @ C.equicorrelation_matrix(19, -1 / 18) @ e) <= 1e-12


def test_countermonotone_example():
    class Fixed:
        def random(self, size):
            return np.full(size, 0.3)

    assert_allclose(C.sample(C.Countermonotone(), Fixed()), [0.3, 0.7])


def test_comonotone_columns_equal(rng):
    w = C.sample(C.Comonotone(4), rng, 1000)
    assert np.all(w == w[:, :1])


def _variants(panel):
    ranks, _ = C.ranks_from_data(panel.losses[:, :4])
    return [
        C.Independence(3),
        C.Comonotone(3),
        C.Countermonotone(),
        C.GaussianEqui(4, 0.3),
        C.minimal_correlation_gaussian(5),
        C.BernsteinRanks(ranks),
    ]


def test_marginal_uniformity_all_variants(panel, rng):
    for spec in _variants(panel):
        w = C.sample(spec, rng, N)
        assert w.shape == (N, spec.d)
        for k in range(spec.d):
            assert ks_uniform(w[:, k]) < KS_CRIT(N), (spec, k)


def test_sample_shapes(rng):
    assert C.sample(C.Independence(3), rng).shape == (3,)
    assert C.sample(C.Independence(3), rng, 5).shape == (5, 3)


def test_ranks_examples(panel):
    r, ties = C.ranks_from_data(np.array([[10.0], [30.0], [20.0]]))
    assert_array_equal(r[:, 0], [1, 3, 2]) and not ties
    r, ties = C.ranks_from_data(np.array([[5.0], [5.0]]))
    assert_array_equal(r[:, 0], [1, 2])
    assert ties
    r, ties = C.ranks_from_data(panel.losses)
    year10 = panel.years.index("10")
    assert r[year10, 0] == 20
    assert panel.losses[year10, 0] == 170.725
    # the printed panel repeats 0.477 (Area 6) and 1.581 (Area 9); first occurrence ranks lower
    assert ties
    a6, a9 = panel.areas.index("Area 6"), panel.areas.index("Area 9")
    y = {k: panel.years.index(k) for k in ("2", "9", "5", "8")}
    assert r[y["9"], a6] == r[y["2"], a6] + 1
    assert r[y["8"], a9] == r[y["5"], a9] + 1


def test_bernstein_validates_permutations():
    with pytest.raises(DomainError):
        C.BernsteinRanks(np.array([[1, 1], [2, 2], [2, 3]]))
    with pytest.raises(DomainError):
        C.BernsteinRanks(np.array([[0, 1], [1, 2]]))


def test_bernstein_beta_mixture_identity(panel):
    ranks, _ = C.ranks_from_data(panel.losses)
    n = ranks.shape[0]
    x = np.linspace(0, 1, 100)
    for k in range(ranks.shape[1]):
        r = ranks[:, k][:, None]
        mix = special.betainc(r, n + 1 - r, x[None, :]).mean(axis=0)
        assert np.max(np.abs(mix - x)) <= 1e-10


def test_bernstein_is_rank_driven(rng):
    # perfectly concordant ranks give strongly positive dependence
    ranks = np.tile(np.arange(1, 21)[:, None], (1, 2))
    w = C.sample(C.BernsteinRanks(ranks), rng, 20_000)
    assert stats.spearmanr(w[:, 0], w[:, 1]).statistic > 0.9


def test_determinism():
    for spec in (C.Independence(3), C.GaussianEqui(3, 0.2), C.Countermonotone()):
        a = C.sample(spec, np.random.default_rng(5), 100)
        b = C.sample(spec, np.random.default_rng(5), 100)
        assert_array_equal(a, b)


@pytest.mark.parametrize("d,r", list(itertools.product([2, 7], [-0.1, 0.5])))
def test_gaussian_sample_correlation(d, r, rng):
    w = C.sample(C.GaussianEqui(d, r), rng, N)
    z = norm_ppf(w)
    c = np.corrcoef(z, rowvar=False)
    assert_allclose(c[np.triu_indices(d, 1)], r, atol=0.02)
