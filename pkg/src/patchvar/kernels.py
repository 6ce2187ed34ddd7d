"""Backend selection for the simulation hot loops.

The compiled Cython extension is used when importable; otherwise the numpy
implementation is used.  Set ``PATCHVAR_PURE_PYTHON=1`` to force the
fallback.  Both backends expose the same functions:

``patchwork_mix(switch, body, tail, beta)``
    Mix body/tail copula blocks into patchwork uniforms.
``quantile_matrix(w, kinds, mu, sigma)``
    Apply per-column margin quantiles (after nudging 0/1 into the open
    interval).
``quantile_rowsum(w, kinds, mu, sigma)``
    Same, summed over each row.
``patchwork_sum(switch, body, tail, beta, kinds, mu, sigma)``
    Fused mix + quantile + row sum.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_FUNCS = ("patchwork_mix", "quantile_matrix", "quantile_rowsum", "patchwork_sum")


def available() -> list[str]:
    names = [_kernels_py.NAME]
    if _compiled is not None:
        names.insert(0, _compiled.NAME)
    return names


def get_backend(name: str | None = None):
    """Return the backend module called ``name`` (default: the active one)."""
    if name is None:
        return _active
    if name == _kernels_py.NAME:
        return _kernels_py
    if _compiled is not None and name == _compiled.NAME:
        return _compiled
    raise ValueError(f"kernel backend {name!r} not available (have {available()})")


def _select():
    if os.environ.get("PATCHVAR_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
        return _kernels_py
    return _compiled


_active = _select()
BACKEND = _active.NAME


def _contig(a):
    return np.ascontiguousarray(a, dtype=float)


def patchwork_mix(switch, body, tail, beta, backend=None):
    b = get_backend(backend)
    return b.patchwork_mix(_contig(switch), _contig(body), _contig(tail), float(beta))


def quantile_matrix(w, kinds, mu, sigma, backend=None):
    b = get_backend(backend)
    return b.quantile_matrix(_contig(w), np.asarray(kinds), _contig(mu), _contig(sigma))


def quantile_rowsum(w, kinds, mu, sigma, backend=None):
    b = get_backend(backend)
    return b.quantile_rowsum(_contig(w), np.asarray(kinds), _contig(mu), _contig(sigma))


def patchwork_sum(switch, body, tail, beta, kinds, mu, sigma, backend=None):
    b = get_backend(backend)
    return b.patchwork_sum(
        _contig(switch), _contig(body), _contig(tail), float(beta),
        np.asarray(kinds), _contig(mu), _contig(sigma),
    )
