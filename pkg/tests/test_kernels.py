import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from patchvar import kernels
from patchvar import marginals as M

BACKENDS = kernels.available()
KINDS = np.array([0, 1, 2, 3, 3], dtype=np.intc)
MU = np.array([0.0, 0.0, 0.0, 1.2, -0.3])
SIGMA = np.array([1.0, 1.0, 1.0, 0.8, 1.5])
MARGINS = [M.exponential(), M.uniform(), M.pareto(), M.lognormal(1.2, 0.8), M.lognormal(-0.3, 1.5)]


@pytest.fixture
def block(rng):
    m = 5000
    return rng.random(m), rng.random((m, 5)), rng.random((m, 5))


def test_fallback_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("name", BACKENDS)
def test_mix_matches_definition(name, block):
    switch, body, tail = block
    beta = 0.2
    w = kernels.patchwork_mix(switch, body, tail, beta, backend=name)
    in_body = switch < 0.8
    assert_array_equal(w[in_body], 0.8 * body[in_body])
    assert_array_equal(w[~in_body], 0.8 + 0.2 * tail[~in_body])


@pytest.mark.parametrize("name", BACKENDS)
def test_quantiles_match_marginals(name, block):
    _, body, _ = block
    x = kernels.quantile_matrix(body, KINDS, MU, SIGMA, backend=name)
    for k, m in enumerate(MARGINS):
        assert_allclose(x[:, k], M.quantile(m, body[:, k]), rtol=1e-13)


@pytest.mark.parametrize("name", BACKENDS)
def test_rowsum_and_fused(name, block):
    switch, body, tail = block
    w = kernels.patchwork_mix(switch, body, tail, 0.1, backend=name)
    x = kernels.quantile_matrix(w, KINDS, MU, SIGMA, backend=name)
    s = kernels.quantile_rowsum(w, KINDS, MU, SIGMA, backend=name)
    f = kernels.patchwork_sum(switch, body, tail, 0.1, KINDS, MU, SIGMA, backend=name)
    assert_allclose(s, x.sum(axis=1), rtol=1e-14)
    assert_array_equal(f, s)


def test_backends_agree(block):
    switch, body, tail = block
    ref = kernels.patchwork_sum(switch, body, tail, 0.05, KINDS, MU, SIGMA, backend="python")
    for name in BACKENDS:
        out = kernels.patchwork_sum(switch, body, tail, 0.05, KINDS, MU, SIGMA, backend=name)
        assert_allclose(out, ref, rtol=1e-13)


@pytest.mark.parametrize("name", BACKENDS)
def test_endpoints_nudged(name):
    w = np.array([[0.0, 1.0, 1.0, 0.0, 1.0]])
    x = kernels.quantile_matrix(w, KINDS, MU, SIGMA, backend=name)
    assert np.all(np.isfinite(x))
    nudged = kernels.get_backend(name).nudge(np.array([[0.0, 1.0, 0.5]]))
    assert_array_equal(nudged, [[np.nextafter(0, 1), np.nextafter(1, 0), 0.5]])


@pytest.mark.parametrize("name", BACKENDS)
def test_bad_codes(name):
    w = np.full((2, 2), 0.5)
    with pytest.raises(ValueError):
        kernels.quantile_matrix(w, np.array([0, 7], dtype=np.intc), np.zeros(2), np.ones(2),
                                backend=name)
    with pytest.raises(ValueError):
        kernels.quantile_matrix(w, np.array([0], dtype=np.intc), np.zeros(1), np.ones(1),
                                backend=name)


def test_env_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, PATCHVAR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from patchvar import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
