"""One-dimensional loss distributions used as margins.

Four families are supported: the unit exponential, unit uniform and unit
Pareto (``x / (1 + x)``) distributions of the two-dimensional examples, and
the lognormal distribution fitted to the Nat-Cat panel.

All functions accept scalars or array_like input and return a float for
scalar input, an ndarray otherwise.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateDataError, DomainError

__all__ = [
    "Kind",
    "Marginal",
    "exponential",
    "uniform",
    "pareto",
    "lognormal",
    "cdf",
    "quantile",
    "pdf",
    "fit_lognormal",
    "norm_cdf",
    "norm_ppf",
]


class Kind(enum.IntEnum):
    # integer codes are shared with the compiled kernels
    EXPONENTIAL = 0
    UNIFORM = 1
    PARETO = 2
    LOGNORMAL = 3


@dataclass(frozen=True)
class Marginal:
    """Loss distribution descriptor.

    ``mu`` and ``sigma`` are the log-scale parameters and are only
    meaningful for ``Kind.LOGNORMAL``.
    """

    kind: Kind
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.LOGNORMAL:
            if not np.isfinite(self.mu):
                raise DomainError(f"lognormal mu must be finite, got {self.mu}")
            if not (self.sigma > 0 and np.isfinite(self.sigma)):
                raise DomainError(f"lognormal sigma must be > 0, got {self.sigma}")

    @property
    def name(self) -> str:
        return self.kind.name.lower()

    def cdf(self, x):
        return cdf(self, x)

    def quantile(self, u):
        return quantile(self, u)

    def pdf(self, x):
        return pdf(self, x)

    def support(self) -> tuple[float, float]:
        if self.kind is Kind.UNIFORM:
            return 0.0, 1.0
        return 0.0, np.inf


def exponential() -> Marginal:
    return Marginal(Kind.EXPONENTIAL)


def uniform() -> Marginal:
    return Marginal(Kind.UNIFORM)


def pareto() -> Marginal:
    return Marginal(Kind.PARETO)


def lognormal(mu: float, sigma: float) -> Marginal:
    return Marginal(Kind.LOGNORMAL, float(mu), float(sigma))


def norm_cdf(x):
    """Standard normal cdf."""
    return ndtr(x)


def norm_ppf(u):
    """Standard normal quantile."""
    return ndtri(u)


def _out(values, scalar):
    return float(values) if scalar else values


def cdf(m: Marginal, x):
    """Distribution function F(x); zero below the support."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if m.kind is Kind.EXPONENTIAL:
            out = np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0)
        elif m.kind is Kind.UNIFORM:
            out = np.clip(x, 0.0, 1.0)
        elif m.kind is Kind.PARETO:
            xp = np.maximum(x, 0.0)
            out = np.where(x > 0, xp / (1.0 + xp), 0.0)
            out = np.where(np.isposinf(x), 1.0, out)
        else:
            xp = np.where(x > 0, x, 1.0)
            out = np.where(x > 0, ndtr((np.log(xp) - m.mu) / m.sigma), 0.0)
    return _out(out, scalar)


def quantile(m: Marginal, u):
    """Pseudo-inverse Q(u) = inf{x : F(x) >= u} for u in the open interval (0, 1)."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("quantile requires u strictly inside (0, 1)")
    if m.kind is Kind.EXPONENTIAL:
        out = -np.log1p(-u)
    elif m.kind is Kind.UNIFORM:
        out = u.copy()
    elif m.kind is Kind.PARETO:
        out = u / (1.0 - u)
    else:
        out = np.exp(m.mu + m.sigma * ndtri(u))
    return _out(out, scalar)


def pdf(m: Marginal, x):
    """Lebesgue density; zero outside the support."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if m.kind is Kind.EXPONENTIAL:
            out = np.where(x >= 0, np.exp(-np.maximum(x, 0.0)), 0.0)
        elif m.kind is Kind.UNIFORM:
            out = np.where((x >= 0) & (x <= 1), 1.0, 0.0)
        elif m.kind is Kind.PARETO:
            out = np.where(x >= 0, 1.0 / (1.0 + np.maximum(x, 0.0)) ** 2, 0.0)
        else:
            xp = np.where(x > 0, x, 1.0)
            z = (np.log(xp) - m.mu) / m.sigma
            dens = np.exp(-0.5 * z * z) / (xp * m.sigma * np.sqrt(2 * np.pi))
            out = np.where(x > 0, dens, 0.0)
    return _out(out, scalar)


def fit_lognormal(losses) -> Marginal:
    """Fit a lognormal margin from the mean and standard deviation of log-losses.

    The standard deviation uses the ``n - 1`` divisor.

    Raises
    ------
    DomainError
        Non-positive losses or fewer than two observations.
    DegenerateDataError
        All log-losses equal (zero dispersion).
    """
    losses = np.asarray(losses, dtype=float).ravel()
    if losses.size < 2:
        raise DomainError("fit_lognormal needs at least 2 observations")
    if np.any(~(losses > 0)) or not np.all(np.isfinite(losses)):
        raise DomainError("fit_lognormal requires strictly positive finite losses")
    logs = np.log(losses)
    sigma = float(np.std(logs, ddof=1))
    if not sigma > 0:
        raise DegenerateDataError("log-losses have zero dispersion")
    return lognormal(float(np.mean(logs)), sigma)
