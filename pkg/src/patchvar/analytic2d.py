"""Exact two-dimensional engine for identically distributed margins.

For two margins F and a patchwork copula with independent body and tail,
the aggregate ``S = X_1 + X_2`` has a closed-form distribution for the
exponential, uniform and Pareto families.  This module provides

* the transformed-margin cdfs of the body and tail pieces,
* numeric convolution of densities/cdfs by adaptive quadrature (an
  independent route used to validate the closed forms),
* piecewise closed-form cdf/density of S, of the independent sum T and of
  the worst case H (countermonotone tail),
* quantile inversion by bisection and the VaR-maximising mixing weight,
* the Solvency II standard-formula volume factor.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError
from .marginals import Marginal, cdf as margin_cdf, exponential, norm_ppf, pareto
from .marginals import pdf as margin_pdf, quantile as margin_quantile, uniform

__all__ = [
    "Family",
    "family",
    "PiecewiseCurve",
    "VarSummary",
    "lower_tail_cdf",
    "upper_tail_cdf",
    "lower_tail_pdf",
    "shifted_tail_cdf",
    "shifted_tail_pdf",
    "convolve_density",
    "convolve_cdf",
    "mixture_cdf",
    "mixture_pdf",
    "sum_cdf",
    "sum_pdf",
    "sum_cdf_curve",
    "sum_pdf_curve",
    "independent_sum_cdf",
    "independent_sum_pdf",
    "worst_case_cdf",
    "worst_case_curve",
    "sum_quantile",
    "uniform_sum_quantile_closed",
    "independent_sum_quantile",
    "worst_var",
    "optimize_beta",
    "var_summary",
    "scr_volume_factor",
    "scr_curve",
]


class Family(str, enum.Enum):
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"
    PARETO = "pareto"

    @property
    def marginal(self) -> Marginal:
        return {"exponential": exponential, "uniform": uniform, "pareto": pareto}[self.value]()


_ALIASES = {"exp": Family.EXPONENTIAL, "unif": Family.UNIFORM, "par": Family.PARETO}


def family(name) -> Family:
    """Parse a family name (``exp``, ``exponential``, ``uniform``, ``pareto`` ...)."""
    if isinstance(name, Family):
        return name
    key = str(name).strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    try:
        return Family(key)
    except ValueError:
        raise DomainError(f"unknown example family {name!r}") from None


def _check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")


def _check_u(u, what="u"):
    if not (0.0 < u < 1.0):
        raise DomainError(f"{what} must lie in (0, 1), got {u}")


# ---------------------------------------------------------------------------
# piecewise curves


@dataclass(frozen=True)
class PiecewiseCurve:
    """Function given by closed-form segments between ordered breakpoints.

    ``segments[k]`` applies on ``[breakpoints[k-1], breakpoints[k])`` with
    ``lower``/``upper`` as outer bounds; outside the domain the constant
    ``below``/``above`` is returned.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[Callable[[np.ndarray], np.ndarray], ...]
    lower: float = 0.0
    upper: float = math.inf
    below: float = 0.0
    above: float = 1.0

    def __post_init__(self):
        if len(self.segments) != len(self.breakpoints) + 1:
            raise ValueError("need one more segment than breakpoints")
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise ValueError("breakpoints must be ordered")

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        idx = np.searchsorted(self.breakpoints, x, side="right")
        inside = (x >= self.lower) & (x <= self.upper)
        with np.errstate(all="ignore"):
            for k, seg in enumerate(self.segments):
                mask = inside & (idx == k)
                if mask.any():
                    out[mask] = seg(x[mask])
        out[x < self.lower] = self.below
        out[x > self.upper] = self.above
        return float(out[0]) if scalar else out


def _exp_curves(beta):
    b = beta
    L = -math.log(b)
    lb = math.log(b)
    cdf = PiecewiseCurve(
        (L, 2 * L),
        (
            lambda x: (1 - (1 + x) * np.exp(-x)) / (1 - b),
            lambda x: (1 - 2 * b + 2 * np.exp(-x) * lb + (1 + x) * np.exp(-x)) / (1 - b),
            lambda x: (b - 2 * np.exp(-x) * lb - (1 + x) * np.exp(-x)) / b,
        ),
    )
    pdf = PiecewiseCurve(
        (L, 2 * L),
        (
            lambda x: x * np.exp(-x) / (1 - b),
            lambda x: (2 * L - x) * np.exp(-x) / (1 - b),
            lambda x: (x - 2 * L) * np.exp(-x) / b,
        ),
        above=0.0,
    )
    return cdf, pdf


def _uniform_curves(beta):
    b = beta
    cdf = PiecewiseCurve(
        (1 - b, 2 - 2 * b, 2 - b),
        (
            lambda x: x * x / (2 * (1 - b)),
            lambda x: (4 * x * (1 - b) - x * x - 2 * (1 - b) ** 2) / (2 * (1 - b)),
            lambda x: (4 * (1 - b) * (1 - x) + x * x - 2 * b + 2 * b * b) / (2 * b),
            lambda x: (2 * b - 4 * (1 - x) - x * x) / (2 * b),
        ),
        upper=2.0,
    )
    pdf = PiecewiseCurve(
        (1 - b, 2 - 2 * b, 2 - b),
        (
            lambda x: x / (1 - b),
            lambda x: (2 - 2 * b - x) / (1 - b),
            lambda x: (x - 2 + 2 * b) / b,
            lambda x: (2 - x) / b,
        ),
        upper=2.0,
        above=0.0,
    )
    return cdf, pdf


def _pareto_G(x):
    return (x * x + 2 * x - 2 * np.log1p(x)) / (2 + x) ** 2


def _pareto_g(x):
    return 2 * (x * x + 2 * x + 2 * (1 + x) * np.log1p(x)) / ((1 + x) * (2 + x) ** 3)


def _pareto_curves(beta):
    b = beta
    Q = 1 / b - 1

    def mid_cdf(x):
        num = (1 - 2 * b) * x * x + (4 - 6 * b) * x - 4 * b + 4 + 2 * np.log(b * x + 2 * b - 1)
        return num / ((2 + x) ** 2 * (1 - b))

    def mid_pdf(x):
        s = b * (x + 2)
        num = 2 * s - s * s - 2 * (s - 1) * np.log(s - 1)
        return 2 * num / ((1 - b) * (x + 2) ** 3 * (s - 1))

    # beyond 2Q the tail pieces are unit Pareto scaled by 1/beta
    cdf = PiecewiseCurve(
        (Q, 2 * Q),
        (
            lambda x: _pareto_G(x) / (1 - b),
            mid_cdf,
            lambda x: (1 - b) + b * _pareto_G(b * x - 2 + 2 * b),
        ),
    )
    pdf = PiecewiseCurve(
        (Q, 2 * Q),
        (
            lambda x: _pareto_g(x) / (1 - b),
            mid_pdf,
            lambda x: b * b * _pareto_g(b * x - 2 + 2 * b),
        ),
        above=0.0,
    )
    return cdf, pdf


_BUILDERS = {
    Family.EXPONENTIAL: _exp_curves,
    Family.UNIFORM: _uniform_curves,
    Family.PARETO: _pareto_curves,
}


def sum_cdf_curve(fam, beta) -> PiecewiseCurve:
    fam = family(fam)
    _check_beta(beta)
    return _BUILDERS[fam](beta)[0]


def sum_pdf_curve(fam, beta) -> PiecewiseCurve:
    fam = family(fam)
    _check_beta(beta)
    return _BUILDERS[fam](beta)[1]


def sum_cdf(fam, beta, x):
    """Closed-form cdf F_S(x, beta) of S = X_1 + X_2 (independent body and tail)."""
    return sum_cdf_curve(fam, beta)(x)


def sum_pdf(fam, beta, x):
    """Closed-form density f_S(x, beta)."""
    return sum_pdf_curve(fam, beta)(x)


_INDEPENDENT = {
    Family.EXPONENTIAL: (
        PiecewiseCurve((), (lambda x: -np.expm1(-x) - x * np.exp(-x),)),
        PiecewiseCurve((), (lambda x: x * np.exp(-x),), above=0.0),
    ),
    Family.UNIFORM: (
        PiecewiseCurve((1.0,), (lambda x: x * x / 2, lambda x: 1 - (2 - x) ** 2 / 2), upper=2.0),
        PiecewiseCurve((1.0,), (lambda x: x, lambda x: 2 - x), upper=2.0, above=0.0),
    ),
    Family.PARETO: (
        PiecewiseCurve((), (_pareto_G,)),
        PiecewiseCurve((), (_pareto_g,), above=0.0),
    ),
}


def independent_sum_cdf(fam, x):
    """cdf G of T = Q(U_1) + Q(U_2) with independent uniforms."""
    return _INDEPENDENT[family(fam)][0](x)


def independent_sum_pdf(fam, x):
    return _INDEPENDENT[family(fam)][1](x)


def worst_case_curve(fam, beta) -> PiecewiseCurve:
    """cdf H(x, beta) of S when the tail copula is countermonotone."""
    fam = family(fam)
    _check_beta(beta)
    b = beta
    body, _ = _BUILDERS[fam](beta)
    two_q = 2 * float(margin_quantile(fam.marginal, 1 - b))
    if fam is Family.EXPONENTIAL:
        start = -2 * math.log(b / 2)
        # b^2 - 4 e^-x written without cancellation near the start
        tail = lambda x: 1 - b + b * np.sqrt(np.maximum(-np.expm1(start - x), 0.0))  # noqa: E731
    elif fam is Family.PARETO:
        start = 4 / b - 2
        # b^2 - 4b / (2 + x) = b^2 (x - start) / (2 + x)
        tail = lambda x: 1 - b + b * np.sqrt(np.maximum((x - start) / (2 + x), 0.0))  # noqa: E731
    else:
        # countermonotone uniform tail sums to the constant 2 - beta
        start = 2 - b
        tail = lambda x: np.ones_like(x)  # noqa: E731
    flat = lambda x: np.full_like(x, 1 - b)  # noqa: E731
    upper = 2.0 if fam is Family.UNIFORM else math.inf
    return PiecewiseCurve((two_q, start), (body, flat, tail), upper=upper)


def worst_case_cdf(fam, beta, x):
    return worst_case_curve(fam, beta)(x)


# ---------------------------------------------------------------------------
# transformed margins and numeric convolution


def lower_tail_cdf(m: Marginal, beta, x):
    """cdf of Q((1 - beta) U): F(x) / (1 - beta), capped at 1 above Q(1 - beta)."""
    _check_beta(beta)
    q = float(margin_quantile(m, 1 - beta))
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    out = np.where(x <= q, np.asarray(margin_cdf(m, x)) / (1 - beta), 1.0)
    out = np.minimum(out, 1.0)
    return float(out) if scalar else out


def upper_tail_cdf(m: Marginal, beta, x):
    """cdf of Q(1 - beta + beta V): 0 below Q(1 - beta), (F(x) + beta - 1) / beta above."""
    _check_beta(beta)
    q = float(margin_quantile(m, 1 - beta))
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    out = np.where(x < q, 0.0, (np.asarray(margin_cdf(m, x)) + beta - 1) / beta)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if scalar else out


def lower_tail_pdf(m: Marginal, beta, x):
    """Density of the body piece: f(x) / (1 - beta) on [0, Q(1 - beta)]."""
    q = float(margin_quantile(m, 1 - beta))
    x = np.asarray(x, dtype=float)
    return np.where((x >= 0) & (x <= q), np.asarray(margin_pdf(m, x)) / (1 - beta), 0.0)


def shifted_tail_cdf(m: Marginal, beta, y):
    """cdf of the tail piece shifted to start at 0: (F(y + Q(1-beta)) + beta - 1) / beta."""
    q = float(margin_quantile(m, 1 - beta))
    y = np.asarray(y, dtype=float)
    return np.where(y < 0, 0.0, np.clip((np.asarray(margin_cdf(m, y + q)) + beta - 1) / beta, 0, 1))


def shifted_tail_pdf(m: Marginal, beta, y):
    q = float(margin_quantile(m, 1 - beta))
    y = np.asarray(y, dtype=float)
    return np.where(y >= 0, np.asarray(margin_pdf(m, y + q)) / beta, 0.0)


_QUAD = dict(epsabs=1e-10, epsrel=1e-10, limit=200)


def _support(support):
    lo, hi = float(support[0]), float(support[1])
    if math.isinf(hi):
        if not (lo >= 0 and math.isfinite(lo)):
            raise DomainError(f"infinite support must be [M, inf) with M >= 0, got {support}")
        return lo, hi
    if not (lo == 0 and hi > 0):
        raise DomainError(f"finite support must be [0, M] with M > 0, got {support}")
    return lo, hi


def _check_common(support, g_support):
    if g_support is not None and tuple(map(float, g_support)) != tuple(map(float, support)):
        raise DomainError(f"densities live on different supports {support} and {g_support}")


def convolve_density(f, g, x, support=(0.0, 1.0), g_support=None) -> float:
    """Density of X + Y at ``x`` for independent X ~ f, Y ~ g by adaptive quadrature.

    Both densities must be concentrated on the same interval, either a
    finite ``[0, M]`` or an infinite ``[M, inf)``.  The result vanishes at
    ``x = 2M`` in both cases.
    """
    lo, hi = _support(support)
    _check_common(support, g_support)
    x = float(x)
    if math.isinf(hi):
        if x <= 2 * lo:
            return 0.0
        a, b = lo, x - lo
    else:
        if x <= 0 or x >= 2 * hi:
            return 0.0
        a, b = max(0.0, x - hi), min(x, hi)
    if b <= a:
        return 0.0
    val, _ = integrate.quad(lambda y: f(x - y) * g(y), a, b, **_QUAD)
    return float(val)


def convolve_cdf(F, g, x, support=(0.0, 1.0)) -> float:
    """cdf of X + Y at ``x``: the integral of F(x - y) g(y) over the support of Y."""
    lo, hi = _support(support)
    x = float(x)
    if math.isinf(hi):
        if x <= 2 * lo:
            return 0.0
        a, b = lo, x - lo
        return float(integrate.quad(lambda y: F(x - y) * g(y), a, b, **_QUAD)[0])
    if x <= 0:
        return 0.0
    if x >= 2 * hi:
        return 1.0
    # below x - M the factor F(x - y) is 1
    cut = max(0.0, x - hi)
    head = integrate.quad(g, 0.0, cut, **_QUAD)[0] if cut > 0 else 0.0
    body = integrate.quad(lambda y: F(x - y) * g(y), cut, min(x, hi), **_QUAD)[0]
    return float(head + body)


def _mixture_parts(fam, beta):
    fam = family(fam)
    _check_beta(beta)
    m = fam.marginal
    q = float(margin_quantile(m, 1 - beta))
    top = m.support()[1]
    tail_support = (0.0, top - q)
    return m, q, tail_support


def mixture_cdf(fam, beta, x) -> float:
    """F_S(x, beta) by numeric convolution of the transformed margins.

    Independent of the closed forms: ``(1 - beta)`` times the two-fold
    convolution of the body piece below ``2 Q(1 - beta)``, and
    ``(1 - beta) + beta`` times the convolution of the shifted tail piece above.
    """
    m, q, tail_support = _mixture_parts(fam, beta)
    x = float(x)
    if x <= 2 * q:
        F = lambda t: float(lower_tail_cdf(m, beta, t)) if t >= 0 else 0.0  # noqa: E731
        f = lambda t: float(lower_tail_pdf(m, beta, t))  # noqa: E731
        return (1 - beta) * convolve_cdf(F, f, x, (0.0, q))
    Fb = lambda t: float(shifted_tail_cdf(m, beta, t))  # noqa: E731
    fb = lambda t: float(shifted_tail_pdf(m, beta, t))  # noqa: E731
    return (1 - beta) + beta * convolve_cdf(Fb, fb, x - 2 * q, tail_support)


def mixture_pdf(fam, beta, x) -> float:
    """f_S(x, beta) by numeric convolution of the transformed densities."""
    m, q, tail_support = _mixture_parts(fam, beta)
    x = float(x)
    if x <= 2 * q:
        f = lambda t: float(lower_tail_pdf(m, beta, t))  # noqa: E731
        return (1 - beta) * convolve_density(f, f, x, (0.0, q))
    fb = lambda t: float(shifted_tail_pdf(m, beta, t))  # noqa: E731
    return beta * convolve_density(fb, fb, x - 2 * q, tail_support)


# ---------------------------------------------------------------------------
# quantiles


def _invert(F, u, upper, relative, strict=False, tol=1e-10):
    """Smallest x >= 0 with F(x) >= u (or F(x) > u when ``strict``) by bisection."""
    hit = (lambda v: v > u) if strict else (lambda v: v >= u)
    lo = 0.0
    if math.isinf(upper):
        hi = 1.0
        while not hit(F(hi)):
            lo, hi = hi, 2 * hi
            if hi > 1e300:
                raise DomainError("quantile bracket diverged")
    else:
        hi = upper
    while True:
        width = hi - lo
        if width <= (tol * max(hi, 1.0) if relative else tol):
            return hi
        mid = lo + 0.5 * width
        if mid <= lo or mid >= hi:
            return hi
        if hit(F(mid)):
            hi = mid
        else:
            lo = mid


def sum_quantile(fam, beta, u) -> float:
    """Q_S(u, beta) = inf{x : F_S(x, beta) >= u} to 1e-10 (relative for Pareto)."""
    fam = family(fam)
    _check_u(u)
    curve = sum_cdf_curve(fam, beta)
    return _invert(curve, u, curve.upper, relative=fam is Family.PARETO)


def uniform_sum_quantile_closed(beta, u) -> float:
    """Closed-form Q_S for the uniform family, valid for 1 - beta <= u <= 1 - beta/2."""
    _check_beta(beta)
    if not (1 - beta <= u <= 1 - beta / 2):
        raise DomainError(f"closed form needs 1 - beta <= u <= 1 - beta/2, got u={u}")
    return 2 - 2 * beta + math.sqrt(2 * beta * (beta + u - 1))


def independent_sum_quantile(fam, u) -> float:
    fam = family(fam)
    _check_u(u)
    curve = _INDEPENDENT[fam][0]
    return _invert(curve, u, curve.upper, relative=fam is Family.PARETO)


def worst_var(fam, alpha) -> float:
    """Worst VaR: the upper (1 - alpha)-quantile of H(., alpha), sup{x : H(x) <= 1 - alpha}."""
    fam = family(fam)
    _check_u(alpha, "alpha")
    curve = worst_case_curve(fam, alpha)
    return _invert(curve, 1 - alpha, curve.upper, relative=fam is Family.PARETO, strict=True)


def optimize_beta(fam, alpha, grid_step=None, xatol=1e-6):
    """Mixing weight maximising VaR_alpha(S) = Q_S(1 - alpha, beta) over [alpha, 4 alpha].

    A grid with step ``alpha / 50`` locates the maximum, which is then
    refined by bounded scalar minimisation on the neighbouring cells.

    Returns
    -------
    (beta_star, var_star)
    """
    fam = family(fam)
    if not (0.0 < alpha < 0.5):
        raise DomainError(f"alpha must lie in (0, 0.5), got {alpha}")
    step = alpha / 50 if grid_step is None else grid_step
    lo, hi = alpha, min(4 * alpha, 1 - 1e-12)
    grid = np.arange(lo, hi + 0.5 * step, step)
    grid = grid[grid <= hi]
    values = np.array([sum_quantile(fam, b, 1 - alpha) for b in grid])
    k = int(np.argmax(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda t: -sum_quantile(fam, t, 1 - alpha),
        bounds=(a, b),
        method="bounded",
        options={"xatol": xatol * 0.1},
    )
    best_beta, best_val = float(grid[k]), float(values[k])
    if -res.fun >= best_val:
        best_beta, best_val = float(res.x), float(-res.fun)
    return best_beta, best_val


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class VarSummary:
    alpha: float
    beta: float
    var_s: float
    var_t: float
    wvar: float
    svar: float

    def as_row(self):
        return [self.alpha, self.beta, self.var_s, self.var_t, self.wvar, self.svar]

    HEADER = ("alpha", "beta", "var_s", "var_t", "wvar", "svar")


def var_summary(fam, alpha, beta) -> VarSummary:
    """VaR_alpha of S (patchwork), of T (independent), worst VaR and the sum of margin VaRs."""
    fam = family(fam)
    _check_u(alpha, "alpha")
    _check_beta(beta)
    return VarSummary(
        alpha=alpha,
        beta=beta,
        var_s=sum_quantile(fam, beta, 1 - alpha),
        var_t=independent_sum_quantile(fam, 1 - alpha),
        wvar=worst_var(fam, alpha),
        svar=2 * float(margin_quantile(fam.marginal, 1 - alpha)),
    )


def scr_volume_factor(sigma, alpha=0.005):
    """Standard-formula SCR volume factor for a lognormal loss ratio with mean 1.

    ``exp(k * sqrt(ln(1 + sigma^2))) / sqrt(1 + sigma^2) - 1`` with ``k`` the
    standard normal ``1 - alpha`` quantile.
    """
    scalar = np.ndim(sigma) == 0
    s = np.asarray(sigma, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("sigma must be positive")
    _check_u(alpha, "alpha")
    k = norm_ppf(1 - alpha)
    v = np.log1p(s * s)
    out = np.expm1(k * np.sqrt(v) - 0.5 * v)
    return float(out) if scalar else out


def scr_curve(sigmas: Sequence[float], alpha=0.005) -> np.ndarray:
    """Rows (sigma, rho(sigma), 3 sigma) for plotting the factor against its approximation."""
    s = np.asarray(sigmas, dtype=float)
    return np.column_stack([s, scr_volume_factor(s, alpha), 3 * s])
