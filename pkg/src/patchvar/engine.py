"""Seeded Monte-Carlo aggregation with empirical VaR / ES estimators.

Paths are generated in fixed-size blocks.  Block ``k`` draws from its own
stream ``SeedSequence(master_seed, spawn_key=(k,))``, so the sample depends
only on ``(master_seed, n_paths, model)``; shards merely group blocks and
may run on worker threads.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from . import __version__, kernels
from .copulas import BernsteinRanks, CopulaSpec
from .errors import ConfigurationError, DegenerateTailError, DomainError
from .patchwork import PatchworkCopula, RiskModel, draw_block

__all__ = [
    "BLOCK_SIZE",
    "MAX_PATHS",
    "SimulationConfig",
    "EmpiricalSample",
    "block_stream",
    "describe",
    "config_digest",
    "simulate",
    "empirical_var",
    "empirical_es",
    "empirical_cdf_points",
    "var_index",
    "write_sample_csv",
    "read_sample_csv",
    "write_cdf_points_csv",
]

BLOCK_SIZE = 8192
MAX_PATHS = 50_000_000
VAR_CONVENTION = "order statistic ceil((1-alpha) n)"


@dataclass(frozen=True)
class SimulationConfig:
    model: RiskModel
    n_paths: int
    master_seed: int
    shards: int = 1

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigurationError(f"n_paths must be a positive integer, got {self.n_paths}")
        if self.n_paths > MAX_PATHS:
            raise ConfigurationError(f"n_paths={self.n_paths} exceeds the cap {MAX_PATHS}")
        if int(self.shards) != self.shards or self.shards < 1:
            raise ConfigurationError(f"shards must be a positive integer, got {self.shards}")
        if not (0 <= int(self.master_seed) < 2**64):
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """Sorted aggregate losses plus provenance metadata."""

    values: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise DomainError("sample must be one-dimensional")
        if v.size > 1 and np.any(np.diff(v) < 0):
            v = np.sort(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def block_stream(master_seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=(int(block),)))
    )


def _describe_copula(c) -> dict:
    if isinstance(c, PatchworkCopula):
        return {"patchwork": {"body": _describe_copula(c.body),
                              "tail": _describe_copula(c.tail), "beta": c.beta}}
    if isinstance(c, BernsteinRanks):
        return {"bernstein_ranks": c.ranks.tolist()}
    name = type(c).__name__.lower()
    return {name: {k: v for k, v in vars(c).items() if k in ("d", "r")}}


def describe(model: RiskModel) -> dict:
    """JSON-friendly canonical description of a risk model."""
    return {
        "margins": [{"kind": m.name, "mu": m.mu, "sigma": m.sigma} for m in model.margins],
        "copula": _describe_copula(model.copula),
    }


def config_digest(config: SimulationConfig) -> str:
    payload = {
        "model": describe(config.model),
        "n_paths": int(config.n_paths),
        "master_seed": int(config.master_seed),
        "block_size": BLOCK_SIZE,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _run_block(model, kinds, mu, sigma, seed, block, m, backend):
    rng = block_stream(seed, block)
    switch, body, tail, beta = draw_block(model.copula, rng, m)
    return kernels.patchwork_sum(switch, body, tail, beta, kinds, mu, sigma, backend=backend)


def simulate(config: SimulationConfig, backend: str | None = None) -> EmpiricalSample:
    """Simulate ``n_paths`` aggregate losses S = sum_i Q_i(W_i), returned sorted."""
    model = config.model
    kinds, mu, sigma = model.margin_arrays()
    n = int(config.n_paths)
    n_blocks = math.ceil(n / BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n - k * BLOCK_SIZE) for k in range(n_blocks)]
    groups = np.array_split(np.arange(n_blocks), min(config.shards, n_blocks))

    def run_group(blocks):
        return [
            _run_block(model, kinds, mu, sigma, config.master_seed, int(k), sizes[k], backend)
            for k in blocks
        ]

    if len(groups) == 1:
        parts = run_group(groups[0])
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            parts = [p for chunk in pool.map(run_group, groups) for p in chunk]
    values = np.sort(np.concatenate(parts), kind="stable")
    meta = {
        "master_seed": int(config.master_seed),
        "n_paths": n,
        "config_digest": config_digest(config),
        "backend": kernels.get_backend(backend).NAME,
        "block_size": BLOCK_SIZE,
        "var_convention": VAR_CONVENTION,
        "version": __version__,
    }
    if isinstance(model.copula, PatchworkCopula):
        meta["beta"] = model.copula.beta
        meta["p"] = model.copula.p
    return EmpiricalSample(values, meta)


def _sorted_values(s) -> np.ndarray:
    if isinstance(s, EmpiricalSample):
        return s.values
    v = np.sort(np.asarray(s, dtype=float).ravel())
    return v


def var_index(n: int, alpha: float) -> int:
    """Zero-based index of the ceil((1 - alpha) n)-th order statistic."""
    # round away float noise such as (1 - 0.005) * 1000 = 994.9999999999999
    k = math.ceil(round((1.0 - alpha) * n, 9))
    return min(max(k, 1), n) - 1


def empirical_var(s, alpha: float) -> float:
    """VaR_alpha estimate: the ceil((1 - alpha) n)-th smallest value."""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    v = _sorted_values(s)
    if v.size == 0:
        raise DomainError("empirical_var of an empty sample")
    return float(v[var_index(v.size, alpha)])


def empirical_es(s, alpha: float) -> float:
    """ES_alpha estimate: mean of the sample points strictly above the VaR estimate."""
    v = _sorted_values(s)
    var = empirical_var(v, alpha)
    tail = v[v > var]
    if tail.size == 0:
        raise DegenerateTailError(f"no sample point strictly above VaR={var}")
    return float(tail.mean())


def empirical_cdf_points(s, grid: Iterable[float]) -> np.ndarray:
    """Fraction of the sample less than or equal to each grid point."""
    v = _sorted_values(s)
    g = np.asarray(list(grid), dtype=float)
    if v.size == 0:
        raise DomainError("empirical cdf of an empty sample")
    return np.searchsorted(v, g, side="right") / v.size


def write_sample_csv(path, sample: EmpiricalSample) -> None:
    """One sorted value per line below a header carrying seed and config digest."""
    meta = sample.metadata
    with open(path, "w", newline="") as fh:
        fh.write(f"# master_seed={meta.get('master_seed', '')} "
                 f"config_digest={meta.get('config_digest', '')}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s"])
        for x in sample.values:
            w.writerow([repr(float(x))])


def read_sample_csv(path) -> EmpiricalSample:
    meta = {}
    values = []
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for item in first[1:].split():
                key, _, val = item.partition("=")
                meta[key] = val
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            values.append(float(row[0]))
    return EmpiricalSample(np.array(values), meta)


def write_cdf_points_csv(path, grid, probs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "p"])
        for x, p in zip(grid, probs):
            w.writerow([repr(float(x)), repr(float(p))])
