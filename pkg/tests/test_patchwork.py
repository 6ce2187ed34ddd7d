import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from patchvar import analytic2d as A
from patchvar import copulas as C
from patchvar import marginals as M
from patchvar.errors import DomainError
from patchvar.patchwork import PatchworkCopula, RiskModel, aggregate, draw_block, sample_risks, sample_w

from conftest import KS_CRIT, ks_distance, ks_uniform

N = 100_000


def test_beta_range_and_dimensions():
    with pytest.raises(DomainError):
        PatchworkCopula(C.Independence(2), C.Countermonotone(), 1.5)
    with pytest.raises(DomainError):
        PatchworkCopula(C.Independence(2), C.Countermonotone(), -0.1)
    with pytest.raises(DomainError):
        PatchworkCopula(C.Independence(3), C.Countermonotone(), 0.1)
    with pytest.raises(DomainError):
        RiskModel((M.exponential(),), C.Independence(2))


def test_degenerate_beta(rng):
    body, tail = C.Independence(2), C.Countermonotone()
    seed = 11
    w0 = sample_w(PatchworkCopula(body, tail, 0.0), np.random.default_rng(seed), 1000)
    sw, b, t, _ = draw_block(PatchworkCopula(body, tail, 0.0), np.random.default_rng(seed), 1000)
    assert_array_equal(w0, b)
    w1 = sample_w(PatchworkCopula(body, tail, 1.0), np.random.default_rng(seed), 1000)
    sw, b, t, _ = draw_block(PatchworkCopula(body, tail, 1.0), np.random.default_rng(seed), 1000)
    assert_array_equal(w1, t)


@pytest.mark.parametrize("beta", [0.005, 0.25, 0.9])
def test_uniform_margins(beta, rng):
    pc = PatchworkCopula(C.Independence(3), C.minimal_correlation_gaussian(3), beta)
    w = sample_w(pc, rng, N)
    for k in range(3):
        assert ks_uniform(w[:, k]) < KS_CRIT(N)


@pytest.mark.parametrize("beta", [0.005, 0.25, 0.9])
def test_support_split_exact(beta, rng):
    pc = PatchworkCopula(C.Independence(3), C.Comonotone(3), beta)
    w = sample_w(pc, rng, N)
    lo = (w <= 1 - beta).all(axis=1)
    hi = (w >= 1 - beta).all(axis=1)
    assert np.all(lo | hi)


def test_body_fraction(rng):
    pc = PatchworkCopula(C.Independence(2), C.Independence(2), 0.25)
    w = sample_w(pc, rng, N)
    frac = np.mean((w <= 0.75).all(axis=1))
    assert abs(frac - 0.75) <= 3 * np.sqrt(0.75 * 0.25 / N)
    assert abs(frac - 0.75) <= 0.01


def test_switch_independent_of_uniforms(rng):
    pc = PatchworkCopula(C.Independence(2), C.Independence(2), 0.3)
    switch, body, tail, beta = draw_block(pc, rng, N)
    indicator = switch >= 1 - beta
    bins = np.minimum((body[:, 0] * 10).astype(int), 9)
    table = np.array([np.bincount(bins[indicator == s], minlength=10) for s in (False, True)])
    assert stats.chi2_contingency(table).pvalue > 0.001
    bins = np.minimum((tail[:, 0] * 10).astype(int), 9)
    table = np.array([np.bincount(bins[indicator == s], minlength=10) for s in (False, True)])
    assert stats.chi2_contingency(table).pvalue > 0.001


def test_sample_risks_identity_transform():
    class Fixed:
        def random(self, size):
            return np.full(size, 0.4)

    model = RiskModel((M.uniform(),) * 3, C.Comonotone(3))
    assert_allclose(sample_risks(model, Fixed()), [0.4, 0.4, 0.4])


def test_pareto_quantile_transform():
    from patchvar import kernels

    kinds, mu, sigma = RiskModel((M.pareto(), M.pareto()), C.Independence(2)).margin_arrays()
    x = kernels.quantile_matrix(np.array([[0.995, 0.995]]), kinds, mu, sigma)
    assert_allclose(x[0], [199, 199], rtol=1e-12)
    assert_allclose(aggregate(x[0]), 398, rtol=1e-12)


def test_exponential_margin_preserved(rng):
    model = RiskModel((M.exponential(),) * 2,
                      PatchworkCopula(C.Independence(2), C.Countermonotone(), 0.005))
    x = sample_risks(model, rng, N)
    assert ks_distance(x[:, 0], lambda t: 1 - np.exp(-t)) < KS_CRIT(N)
    assert ks_distance(x[:, 1], lambda t: 1 - np.exp(-t)) < KS_CRIT(N)


def test_aggregate():
    assert aggregate([1, 2, 3]) == 6
    assert aggregate([199, 199]) == 398
    assert aggregate(np.zeros(4)) == 0
    assert_array_equal(aggregate(np.ones((3, 2))), [2, 2, 2])


def test_beta_zero_matches_independent_sum(rng):
    model = RiskModel((M.exponential(),) * 2,
                      PatchworkCopula(C.Independence(2), C.Independence(2), 0.0))
    s = aggregate(sample_risks(model, rng, N))
    assert ks_distance(s, lambda x: A.independent_sum_cdf("exponential", x)) < KS_CRIT(N)


def test_fixed_draw_order():
    # switch first, then body, then tail, from one stream
    pc = PatchworkCopula(C.Independence(2), C.Independence(2), 0.3)
    switch, body, tail, _ = draw_block(pc, np.random.default_rng(3), 4)
    g = np.random.default_rng(3)
    assert_array_equal(switch, g.random(4))
    assert_array_equal(body, g.random((4, 2)))
    assert_array_equal(tail, g.random((4, 2)))
