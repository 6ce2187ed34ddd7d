"""Two-block patchwork copulas and the risk models built on them.

A patchwork copula places a body copula U on [0, 1-beta]^d and a tail
copula V on [1-beta, 1]^d, choosing between them with an independent
Bernoulli switch::

    W = I * (1 - beta) * U + (1 - I) * (1 - beta + beta * V),  P(I = 1) = 1 - beta

W again has uniform margins.  Feeding W through margin quantiles gives a
risk vector with the prescribed margins whose aggregate is typically
pushed towards an unfavourable (superadditive) VaR.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import kernels
from .copulas import CopulaSpec, sample as sample_copula
from .errors import DomainError
from .marginals import Marginal

__all__ = [
    "PatchworkCopula",
    "RiskModel",
    "draw_block",
    "sample_w",
    "sample_risks",
    "aggregate",
]


@dataclass(frozen=True)
class PatchworkCopula:
    body: CopulaSpec
    tail: CopulaSpec
    beta: float

    def __post_init__(self):
        # beta = 0 / 1 select the body / tail outright
        if not (0.0 <= self.beta <= 1.0):
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if self.body.d != self.tail.d:
            raise DomainError(
                f"body and tail dimensions differ ({self.body.d} != {self.tail.d})"
            )

    @property
    def d(self) -> int:
        return self.body.d

    @property
    def p(self) -> float:
        return 1.0 - self.beta


Copula = Union[PatchworkCopula, CopulaSpec]


@dataclass(frozen=True)
class RiskModel:
    margins: tuple[Marginal, ...]
    copula: Copula

    def __post_init__(self):
        object.__setattr__(self, "margins", tuple(self.margins))
        if len(self.margins) != self.copula.d:
            raise DomainError(
                f"{len(self.margins)} margins for a {self.copula.d}-dimensional copula"
            )

    @property
    def d(self) -> int:
        return len(self.margins)

    def margin_arrays(self):
        """Margin codes and log-scale parameters in the layout the kernels expect."""
        kinds = np.array([int(m.kind) for m in self.margins], dtype=np.intc)
        mu = np.array([m.mu for m in self.margins], dtype=float)
        sigma = np.array([m.sigma for m in self.margins], dtype=float)
        return kinds, mu, sigma


def draw_block(copula: Copula, rng: np.random.Generator, m: int):
    """Draw the raw inputs for ``m`` paths in the fixed order switch, body, tail.

    Returns ``(switch, body, tail, beta)``.  A bare copula is treated as a
    patchwork with beta = 0 whose switch and tail are not drawn.
    """
    if isinstance(copula, PatchworkCopula):
        switch = rng.random(m)
        body = sample_copula(copula.body, rng, m)
        tail = sample_copula(copula.tail, rng, m)
        return switch, body, tail, copula.beta
    body = sample_copula(copula, rng, m)
    return np.zeros(m), body, body, 0.0


def sample_w(pc: Copula, rng: np.random.Generator, size: int | None = None,
             backend: str | None = None) -> np.ndarray:
    """Sample the patchwork copula W; shape ``(d,)`` or ``(size, d)``."""
    m = 1 if size is None else int(size)
    switch, body, tail, beta = draw_block(pc, rng, m)
    if not isinstance(pc, PatchworkCopula):
        w = body
    else:
        w = kernels.patchwork_mix(switch, body, tail, beta, backend=backend)
    return w[0] if size is None else w


def sample_risks(model: RiskModel, rng: np.random.Generator, size: int | None = None,
                 backend: str | None = None) -> np.ndarray:
    """Sample the risk vector X = (Q_1(W_1), ..., Q_d(W_d)).

    Uniforms exactly at 0 or 1 are moved one representable step inside
    the open interval before the quantile transform.
    """
    w = sample_w(model.copula, rng, size=size if size is not None else 1, backend=backend)
    kinds, mu, sigma = model.margin_arrays()
    x = kernels.quantile_matrix(w, kinds, mu, sigma, backend=backend)
    return x[0] if size is None else x


def aggregate(x: Sequence[float] | np.ndarray):
    """Aggregate loss S = sum of the components (row-wise for 2-d input)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(x.sum())
    return x.sum(axis=-1)
