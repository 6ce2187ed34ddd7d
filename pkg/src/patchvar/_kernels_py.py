"""Pure numpy implementation of the simulation hot loops.

Mirrors ``_kernels.pyx`` operation for operation (same mixing arithmetic,
same endpoint nudge, same left-to-right row summation) so both backends
agree to within last-ulp differences of ``exp``/``log1p``.
"""
import numpy as np
from scipy.special import ndtri

NAME = "python"

_TINY = np.nextafter(0.0, 1.0)
_BELOW_ONE = np.nextafter(1.0, 0.0)


def patchwork_mix(switch, body, tail, beta):
    p = 1.0 - beta
    in_body = (switch < p)[:, None]
    return np.where(in_body, p * body, p + beta * tail)


def nudge(w):
    return np.clip(w, _TINY, _BELOW_ONE)


def _column_quantile(w, kind, mu, sigma):
    if kind == 0:
        return -np.log1p(-w)
    if kind == 1:
        return w.copy()
    if kind == 2:
        return w / (1.0 - w)
    if kind == 3:
        return np.exp(mu + sigma * ndtri(w))
    raise ValueError(f"unknown margin code {kind}")


def quantile_matrix(w, kinds, mu, sigma):
    w = nudge(np.asarray(w, dtype=float))
    if len(kinds) != w.shape[1]:
        raise ValueError("one margin code per column required")
    out = np.empty_like(w)
    for k in range(w.shape[1]):
        out[:, k] = _column_quantile(w[:, k], int(kinds[k]), mu[k], sigma[k])
    return out


def quantile_rowsum(w, kinds, mu, sigma):
    x = quantile_matrix(w, kinds, mu, sigma)
    s = x[:, 0].copy()
    for k in range(1, x.shape[1]):
        s += x[:, k]
    return s


def patchwork_sum(switch, body, tail, beta, kinds, mu, sigma):
    return quantile_rowsum(patchwork_mix(switch, body, tail, beta), kinds, mu, sigma)
