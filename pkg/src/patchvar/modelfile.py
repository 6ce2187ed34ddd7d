"""Flat key-value model files for the ``simulate`` command.

One ``key = value`` pair per line; ``#`` starts a comment.  Example::

    margin = exponential
    margin = exponential
    body   = independence
    tail   = countermonotone
    beta   = 0.1

See ``docs/model_format.md`` for the full grammar.
"""
from __future__ import annotations

from pathlib import Path

from . import marginals
from .copulas import (
    BernsteinRanks,
    Comonotone,
    Countermonotone,
    GaussianEqui,
    Independence,
    minimal_correlation_gaussian,
    ranks_from_data,
)
from .errors import IngestionError, PatchvarError
from .patchwork import PatchworkCopula, RiskModel

__all__ = ["parse_model", "load_model"]

_KEYS = ("margin", "copula", "body", "tail", "beta")


def _fail(src, lineno, msg):
    raise IngestionError(f"{src}:{lineno}: {msg}")


def _number(tok, src, lineno, what):
    try:
        return float(tok)
    except ValueError:
        _fail(src, lineno, f"{what}: cannot parse {tok!r} as a number")


def _parse_margin(value, src, lineno):
    parts = value.split()
    name = parts[0].lower()
    count = 1
    if len(parts) >= 3 and parts[-2] == "x":
        # trailing "x N" repeats the margin
        try:
            count = int(parts[-1])
        except ValueError:
            _fail(src, lineno, f"repeat count {parts[-1]!r} is not an integer")
        if count < 1:
            _fail(src, lineno, "repeat count must be positive")
        parts = parts[:-2]
    args = parts[1:]
    if name in ("exponential", "uniform", "pareto"):
        if args:
            _fail(src, lineno, f"{name} takes no parameters")
        m = getattr(marginals, name)()
    elif name == "lognormal":
        if len(args) != 2:
            _fail(src, lineno, "lognormal needs two parameters: mu sigma")
        mu = _number(args[0], src, lineno, "mu")
        sigma = _number(args[1], src, lineno, "sigma")
        try:
            m = marginals.lognormal(mu, sigma)
        except PatchvarError as exc:
            _fail(src, lineno, str(exc))
    else:
        _fail(src, lineno, f"unknown margin {parts[0]!r}")
    return [m] * count


def _parse_copula(value, d, base, src, lineno):
    parts = value.split()
    name = parts[0].lower()
    args = parts[1:]

    def want(n):
        if len(args) != n:
            _fail(src, lineno, f"{name} takes {n} parameter(s), got {len(args)}")

    try:
        if name == "independence":
            want(0)
            return Independence(d)
        if name == "comonotone":
            want(0)
            return Comonotone(d)
        if name == "countermonotone":
            want(0)
            return Countermonotone(d)
        if name == "min_corr_gauss":
            want(0)
            return minimal_correlation_gaussian(d)
        if name == "gaussian_equi":
            want(1)
            return GaussianEqui(d, _number(args[0], src, lineno, "r"))
        if name == "bernstein":
            want(1)
            from .casestudy import load_panel

            path = Path(args[0])
            if not path.is_absolute():
                path = base / path
            panel = load_panel(path)
            if panel.d != d:
                _fail(src, lineno, f"bernstein data has {panel.d} columns, model has {d} margins")
            ranks, ties = ranks_from_data(panel.losses)
            return BernsteinRanks(ranks, ties_broken=ties)
    except IngestionError:
        raise
    except PatchvarError as exc:
        _fail(src, lineno, str(exc))
    _fail(src, lineno, f"unknown copula {parts[0]!r}")


def parse_model(text: str, source: str = "<model>", base: Path | None = None) -> RiskModel:
    """Parse model-file text into a :class:`RiskModel`.

    Raises
    ------
    IngestionError
        On any schema violation; the message carries ``source:line``.
    """
    base = Path(".") if base is None else Path(base)
    margins = []
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower(), value.strip()
        if not sep or not key:
            _fail(source, lineno, f"expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            _fail(source, lineno, f"unknown key {key!r} (expected one of {', '.join(_KEYS)})")
        if not value:
            _fail(source, lineno, f"empty value for {key!r}")
        if key == "margin":
            margins.extend(_parse_margin(value, source, lineno))
        elif key in entries:
            _fail(source, lineno, f"duplicate key {key!r} (first on line {entries[key][1]})")
        else:
            entries[key] = (value, lineno)

    last = max([ln for _, ln in entries.values()], default=0)
    if len(margins) < 2:
        _fail(source, last, "a model needs at least two margins")
    d = len(margins)
    patch = [k for k in ("body", "tail", "beta") if k in entries]
    if "copula" in entries and patch:
        _fail(source, entries[patch[0]][1], "use either 'copula' or 'body'/'tail'/'beta', not both")
    if "copula" in entries:
        value, ln = entries["copula"]
        copula = _parse_copula(value, d, base, source, ln)
    elif len(patch) == 3:
        body = _parse_copula(entries["body"][0], d, base, source, entries["body"][1])
        tail = _parse_copula(entries["tail"][0], d, base, source, entries["tail"][1])
        beta_s, ln = entries["beta"]
        beta = _number(beta_s, source, ln, "beta")
        try:
            copula = PatchworkCopula(body, tail, beta)
        except PatchvarError as exc:
            _fail(source, ln, str(exc))
    else:
        missing = [k for k in ("body", "tail", "beta") if k not in entries]
        _fail(source, last, f"missing key(s): {', '.join(missing) if patch else 'copula'}")
    return RiskModel(tuple(margins), copula)


def load_model(path) -> RiskModel:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read model file {path}: {exc}") from exc
    return parse_model(text, source=str(path), base=path.parent)
