from pathlib import Path

import numpy as np
import pytest

from patchvar import casestudy

DATA = Path(__file__).parent / "data"


def ks_uniform(u):
    """Kolmogorov-Smirnov distance of a sample to the uniform cdf on [0, 1]."""
    u = np.sort(np.asarray(u, dtype=float))
    n = u.size
    i = np.arange(1, n + 1)
    return max(np.max(i / n - u), np.max(u - (i - 1) / n))


def ks_distance(sample, cdf):
    """Kolmogorov-Smirnov distance between a sample and a continuous ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - f), np.max(f - (i - 1) / n))


KS_CRIT = lambda n: 1.95 / np.sqrt(n)  # noqa: E731


@pytest.fixture(scope="session")
def panel():
    return casestudy.bundled_panel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def read_published(name):
    import csv

    with open(DATA / name) as fh:
        rows = list(csv.reader(fh))
    return rows[0][1:], {r[0]: [float(v) for v in r[1:]] for r in rows[1:]}
