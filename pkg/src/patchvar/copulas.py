"""Copula samplers for the body and tail of a patchwork copula.

Every sampler draws from an explicit ``numpy.random.Generator`` and returns
an array of shape ``(size, d)``; the module keeps no hidden random state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import AdmissibilityError, DomainError
from .marginals import norm_cdf

__all__ = [
    "Independence",
    "Comonotone",
    "Countermonotone",
    "GaussianEqui",
    "BernsteinRanks",
    "CopulaSpec",
    "SpectralFactor",
    "spectral_factor",
    "orthonormal_basis",
    "equicorrelation_matrix",
    "minimal_correlation_gaussian",
    "ranks_from_data",
    "sample",
]


def _check_dim(d):
    if int(d) != d or d < 2:
        raise DomainError(f"copula dimension must be an integer >= 2, got {d}")


@dataclass(frozen=True)
class Independence:
    d: int

    def __post_init__(self):
        _check_dim(self.d)


@dataclass(frozen=True)
class Comonotone:
    """Upper Fréchet bound: one uniform replicated in every coordinate."""

    d: int

    def __post_init__(self):
        _check_dim(self.d)


@dataclass(frozen=True)
class Countermonotone:
    """Lower Fréchet bound ``(u, 1 - u)``; a copula only for d = 2."""

    d: int = 2

    def __post_init__(self):
        if self.d != 2:
            raise DomainError("the countermonotone copula exists only for d = 2")


@dataclass(frozen=True)
class GaussianEqui:
    """Gaussian copula with equicorrelation matrix (1 - r) I + r E."""

    d: int
    r: float

    def __post_init__(self):
        _check_dim(self.d)
        _check_admissible(self.d, self.r)

    @cached_property
    def factor(self) -> "SpectralFactor":
        return spectral_factor(self.d, self.r)


@dataclass(frozen=True, eq=False)
class BernsteinRanks:
    """Rank-based Bernstein copula of degree n.

    ``ranks`` is an ``(n, d)`` integer matrix; every column must be a
    permutation of 1..n.  ``ties_broken`` records whether the ranks were
    produced from data containing ties.
    """

    ranks: np.ndarray
    ties_broken: bool = field(default=False)

    def __post_init__(self):
        ranks = np.array(self.ranks, dtype=np.int64)
        if ranks.ndim != 2:
            raise DomainError("rank matrix must be two-dimensional")
        n, d = ranks.shape
        _check_dim(d)
        if n < 2:
            raise DomainError("rank matrix needs at least 2 observations")
        expected = np.arange(1, n + 1)
        for i in range(d):
            if not np.array_equal(np.sort(ranks[:, i]), expected):
                raise DomainError(f"rank column {i} is not a permutation of 1..{n}")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)

    @property
    def d(self) -> int:
        return self.ranks.shape[1]

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BernsteinRanks):
            return NotImplemented
        return np.array_equal(self.ranks, other.ranks)

    def __hash__(self):
        return hash(self.ranks.tobytes())


CopulaSpec = Union[Independence, Comonotone, Countermonotone, GaussianEqui, BernsteinRanks]


@dataclass(frozen=True, eq=False)
class SpectralFactor:
    """Closed-form factor A = T sqrt(diag(eigenvalues)) with A A^T = Sigma_d."""

    d: int
    r: float
    basis: np.ndarray
    eigenvalues: np.ndarray
    A: np.ndarray


def _check_admissible(d, r):
    if not (-1.0 / (d - 1) <= r <= 1.0):
        raise AdmissibilityError(
            f"equicorrelation r={r!r} outside [-1/(d-1), 1] = [{-1.0 / (d - 1)!r}, 1] "
            f"for d={d}: matrix is not positive semidefinite"
        )


def orthonormal_basis(d: int) -> np.ndarray:
    """Eigenvector basis T of the equicorrelation matrix.

    Column 1 is ``e / sqrt(d)``; column j >= 2 has ``-1/sqrt(j(j-1))`` above
    the diagonal, ``sqrt((j-1)/j)`` on it and zeros below.
    """
    _check_dim(d)
    T = np.zeros((d, d))
    T[:, 0] = 1.0 / np.sqrt(d)
    for j in range(2, d + 1):
        T[: j - 1, j - 1] = -1.0 / np.sqrt(j * (j - 1))
        T[j - 1, j - 1] = np.sqrt((j - 1) / j)
    return T


def equicorrelation_matrix(d: int, r: float) -> np.ndarray:
    return (1.0 - r) * np.eye(d) + r * np.ones((d, d))


def spectral_factor(d: int, r: float) -> SpectralFactor:
    """Spectral factor of the d-dimensional equicorrelation matrix.

    No eigensolver is involved, so the singular boundary r = -1/(d-1)
    (first eigenvalue zero) is handled exactly.

    Raises
    ------
    AdmissibilityError
        If r lies outside [-1/(d-1), 1].
    """
    _check_dim(d)
    _check_admissible(d, r)
    lam = np.full(d, 1.0 - r)
    lam[0] = 1.0 + (d - 1) * r
    # r at the lower boundary can leave a -1e-16 residue in the first root
    lam = np.maximum(lam, 0.0)
    T = orthonormal_basis(d)
    A = T * np.sqrt(lam)
    return SpectralFactor(d=d, r=float(r), basis=T, eigenvalues=lam, A=A)


def minimal_correlation_gaussian(d: int) -> GaussianEqui:
    """Gaussian copula with the most negative admissible equicorrelation -1/(d-1)."""
    _check_dim(d)
    return GaussianEqui(d, -1.0 / (d - 1))


def ranks_from_data(data) -> tuple[np.ndarray, bool]:
    """Columnwise ranks 1..n, ties broken by order of first occurrence.

    Returns the rank matrix and a flag telling whether any tie was broken.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 2:
        raise DomainError("ranks_from_data needs at least 2 observations")
    order = np.argsort(data, axis=0, kind="stable")
    ranks = np.empty_like(order)
    cols = np.arange(data.shape[1])
    ranks[order, cols] = np.arange(1, n + 1)[:, None]
    ties = any(len(np.unique(data[:, i])) < n for i in cols)
    return ranks, ties


def sample(spec: CopulaSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw from a copula.

    Returns shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
    """
    m = 1 if size is None else int(size)
    out = _sample_block(spec, rng, m)
    return out[0] if size is None else out


def _sample_block(spec, rng, m):
    d = spec.d
    if isinstance(spec, Independence):
        return rng.random((m, d))
    if isinstance(spec, Comonotone):
        return np.repeat(rng.random((m, 1)), d, axis=1)
    if isinstance(spec, Countermonotone):
        u = rng.random(m)
        return np.column_stack([u, 1.0 - u])
    if isinstance(spec, GaussianEqui):
        y = rng.standard_normal((m, d))
        return norm_cdf(y @ spec.factor.A.T)
    if isinstance(spec, BernsteinRanks):
        j = rng.integers(0, spec.n, size=m)
        r = spec.ranks[j]
        return rng.beta(r, spec.n + 1 - r)
    raise DomainError(f"unknown copula spec {spec!r}")
