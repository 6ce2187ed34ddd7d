"""Patchwork copulas for generating unfavourable Value-at-Risk scenarios.

Subpackages
-----------
marginals
    Loss distributions (exponential, uniform, Pareto, lognormal).
copulas
    Body/tail copula samplers including the minimal correlation Gaussian
    copula and the rank-based Bernstein copula.
patchwork
    The two-block patchwork construction and risk models.
analytic2d
    Closed-form two-dimensional engine (cdfs, quantiles, optimal mixing weight).
engine
    Seeded, shard-invariant Monte-Carlo aggregation with VaR/ES estimators.
casestudy
    The 19-area Nat-Cat panel, lognormal fits, correlations and VaR survey.
kernels
    Compiled hot loops with a pure numpy fallback selected at import.
"""
from .errors import (
    AdmissibilityError,
    ConfigurationError,
    DegenerateDataError,
    DegenerateTailError,
    DomainError,
    IngestionError,
    PatchvarError,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigurationError",
    "DegenerateDataError",
    "DegenerateTailError",
    "DomainError",
    "IngestionError",
    "PatchvarError",
    "__version__",
]
