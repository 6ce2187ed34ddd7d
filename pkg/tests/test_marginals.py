import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, stats

from patchvar import marginals as M
from patchvar.casestudy import display_round
from patchvar.errors import DegenerateDataError, DomainError

from conftest import read_published

FAMILIES = [M.exponential(), M.uniform(), M.pareto(), M.lognormal(0.4, 1.3)]


def test_cdf_examples():
    assert M.cdf(M.exponential(), 0) == 0
    assert_allclose(M.cdf(M.pareto(), 199), 0.995, rtol=1e-15)
    assert M.cdf(M.uniform(), 0.5) == 0.5
    assert M.cdf(M.uniform(), -1) == 0 and M.cdf(M.uniform(), 3) == 1
    assert M.cdf(M.lognormal(0, 1), 0) == 0


def test_quantile_examples():
    assert_allclose(M.quantile(M.exponential(), 0.995), 5.29832, atol=5e-6)
    assert_allclose(M.quantile(M.exponential(), 0.995), -math.log(0.005), rtol=1e-15)
    assert_allclose(M.quantile(M.pareto(), 0.995), 199, rtol=1e-12)
    assert_allclose(M.quantile(M.lognormal(0, 1), 0.5), 1.0, rtol=1e-15)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_rejects_closed_endpoints(u):
    with pytest.raises(DomainError):
        M.quantile(M.exponential(), u)


def test_pdf_examples():
    assert M.pdf(M.exponential(), 0) == 1
    assert M.pdf(M.pareto(), 1) == 0.25
    assert M.pdf(M.uniform(), 2) == 0


def test_lognormal_requires_positive_sigma():
    with pytest.raises(DomainError):
        M.lognormal(0.0, 0.0)
    with pytest.raises(DomainError):
        M.lognormal(0.0, -1.0)


def test_scalar_in_scalar_out():
    assert isinstance(M.cdf(M.exponential(), 1.0), float)
    assert M.cdf(M.exponential(), [1.0, 2.0]).shape == (2,)


@pytest.mark.parametrize("m", FAMILIES, ids=lambda m: m.name)
def test_round_trip(m):
    u = np.linspace(0.001, 0.999, 1000)
    tol = 1e-8 if m.kind == M.Kind.LOGNORMAL else 1e-12
    assert np.max(np.abs(M.cdf(m, M.quantile(m, u)) - u)) <= tol


@pytest.mark.parametrize("m", FAMILIES, ids=lambda m: m.name)
def test_pdf_integrates_to_one(m):
    lo, hi = m.support()
    total, _ = integrate.quad(lambda x: M.pdf(m, x), lo, hi, limit=200)
    assert abs(total - 1) < 1e-6


@pytest.mark.parametrize("m", FAMILIES, ids=lambda m: m.name)
def test_pdf_is_derivative_of_cdf(m):
    x = M.quantile(m, np.linspace(0.05, 0.95, 19))
    h = 1e-6 * np.maximum(1, x)
    fd = (M.cdf(m, x + h) - M.cdf(m, x - h)) / (2 * h)
    assert_allclose(M.pdf(m, x), fd, rtol=1e-6)


def test_lognormal_matches_scipy():
    m = M.lognormal(1.2, 0.7)
    x = np.linspace(0.1, 20, 50)
    ref = stats.lognorm(s=0.7, scale=math.exp(1.2))
    assert_allclose(M.cdf(m, x), ref.cdf(x), rtol=1e-12)
    assert_allclose(M.pdf(m, x), ref.pdf(x), rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_cdf_monotone_and_inverse(u):
    for m in FAMILIES:
        x = M.quantile(m, u)
        assert 0 <= M.cdf(m, x) <= 1
        assert M.cdf(m, x * (1 + 1e-9) + 1e-12) >= M.cdf(m, x)


def test_fit_lognormal_hand_computable():
    m = M.fit_lognormal([math.e, math.e**3])
    assert_allclose(m.mu, 2.0, rtol=1e-15)
    assert_allclose(m.sigma, math.sqrt(2.0), rtol=1e-15)


def test_fit_lognormal_errors():
    with pytest.raises(DegenerateDataError):
        M.fit_lognormal([math.e, math.e])
    with pytest.raises(DomainError):
        M.fit_lognormal([1.0])
    with pytest.raises(DomainError):
        M.fit_lognormal([1.0, 0.0, 2.0])


def test_fit_lognormal_panel_columns(panel):
    a1 = M.fit_lognormal(panel.column("Area 1"))
    a11 = M.fit_lognormal(panel.column("Area 11"))
    assert (display_round(a1.mu, 3), display_round(a1.sigma, 3)) == (2.806, 1.216)
    assert (display_round(a11.mu, 3), display_round(a11.sigma, 3)) == (-0.323, 1.088)


def test_fit_lognormal_reproduces_published_parameters(panel):
    _, pub = read_published("published_table5.csv")
    fits = [M.fit_lognormal(panel.losses[:, k]) for k in range(panel.d)]
    assert [display_round(m.mu, 3) for m in fits] == pub["mu"]
    assert [display_round(m.sigma, 3) for m in fits] == pub["sigma"]
