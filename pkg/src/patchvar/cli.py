"""``patchvar`` command line.

Subcommands
-----------
analytic   closed-form curves and VaR summary for a two-margin example family
optimize   beta sweep and the VaR-maximizing beta
simulate   Monte-Carlo run of a model file
casestudy  Nat-Cat case-study tables and the VaR survey
replay     re-run a command from its manifest and compare output digests

Every command writes CSV files plus ``manifest.json`` into ``--out``
(default: ``$PATCHVAR_OUTPUT_DIR`` or ``./out``).  Exit status is 0 on
success, 1 on runtime or data errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, analytic2d, casestudy, engine, kernels, modelfile
from .errors import PatchvarError

OUTPUT_ENV = "PATCHVAR_OUTPUT_DIR"
MANIFEST = "manifest.json"


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {v}")
    return v


def _unit_closed(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {v}")
    return v


def _family(text):
    try:
        return analytic2d.family(text).value
    except PatchvarError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_manifest(out: Path, command: str, params: dict, files, seed=None, backend=None,
                    extra=None):
    manifest = {
        "command": command,
        "params": params,
        "master_seed": seed,
        "version": __version__,
        "backend": backend,
        "outputs": {Path(f).name: _sha256(f) for f in files},
    }
    if extra:
        manifest["extra"] = extra
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# commands


def cmd_analytic(out: Path, family, beta, alpha, x_max=None, points=1001):
    fam = analytic2d.family(family)
    summary = analytic2d.var_summary(fam, alpha, beta)
    if x_max is None:
        x_max = 1.25 * summary.wvar
    if not x_max > 0:
        raise PatchvarError("x-max must be positive")
    x = np.linspace(0.0, x_max, points)
    cols = [
        x,
        analytic2d.sum_pdf(fam, beta, x),
        analytic2d.sum_cdf(fam, beta, x),
        analytic2d.independent_sum_cdf(fam, x),
        analytic2d.worst_case_cdf(fam, beta, x),
    ]
    curves = out / "curves.csv"
    _csv(curves, ["x", "f_S", "F_S", "G", "H"], zip(*cols))
    summ = out / "summary.csv"
    _csv(summ, ["family", *analytic2d.VarSummary.HEADER], [[fam.value, *summary.as_row()]])
    print(f"{fam.value}: beta={beta} alpha={alpha}")
    print(f"  VaR(S)={summary.var_s:.4f}  VaR(T)={summary.var_t:.4f}  "
          f"wVaR={summary.wvar:.4f}  SVaR={summary.svar:.4f}")
    return [curves, summ], None


def cmd_optimize(out: Path, family, alpha, points=151):
    fam = analytic2d.family(family)
    betas = np.linspace(alpha, 4 * alpha, points)
    sweep = out / "sweep.csv"
    _csv(sweep, ["beta", "q_s"],
         [(b, analytic2d.sum_quantile(fam, b, 1 - alpha)) for b in betas])
    beta_star, q_star = analytic2d.optimize_beta(fam, alpha)
    opt = out / "optimum.csv"
    _csv(opt, ["family", "alpha", "beta", "q_s"], [[fam.value, alpha, beta_star, q_star]])
    print(f"{fam.value}: beta*={beta_star:.6f}  Q_S(1-alpha, beta*)={q_star:.4f}")
    return [sweep, opt], None


def cmd_simulate(out: Path, model_path, n, seed, alpha, shards=1, backend=None):
    model_path = Path(model_path)
    model = modelfile.load_model(model_path)
    sample = engine.simulate(engine.SimulationConfig(model, n, seed, shards), backend=backend)
    var = engine.empirical_var(sample, alpha)
    try:
        es = engine.empirical_es(sample, alpha)
    except PatchvarError:
        es = float("nan")
    meta = sample.metadata
    report = out / "report.csv"
    _csv(report, ["alpha", "var", "es", "n_paths", "master_seed", "beta", "var_convention",
                  "config_digest"],
         [[alpha, var, es, n, seed, meta.get("beta", ""), meta["var_convention"],
           meta["config_digest"]]])
    sample_csv = out / "sample.csv"
    engine.write_sample_csv(sample_csv, sample)
    print(f"n={n} seed={seed}: VaR_{alpha}={var:.6g}  ES_{alpha}={es:.6g}")
    return [report, sample_csv], {"model_sha256": _sha256(model_path)}


def cmd_casestudy(out: Path, data, n, seed, alpha, shards=1, scr_curve=False,
                  tail_grid=(1000.0, 8000.0, 701), backend=None):
    panel = casestudy.load_panel(data) if data else casestudy.bundled_panel()
    files = []
    t5, t6, t7 = out / "table5.csv", out / "table6.csv", out / "table7.csv"
    casestudy.write_table5(t5, panel, digits=3)
    casestudy.write_correlation_table(t6, panel, on_logs=False, digits=2)
    casestudy.write_correlation_table(t7, panel, on_logs=True, digits=2)
    files += [t5, t6, t7]

    specs = casestudy.table8_specs(n, seed, alpha)
    reports, samples = casestudy.scenario_grid(panel, specs, shards=shards,
                                               return_samples=True, backend=backend)
    t8 = out / "table8.csv"
    casestudy.write_table8(t8, reports)
    files.append(t8)

    lo, hi, k = tail_grid
    grid = np.linspace(lo, hi, int(k))
    labels = [f"F{i + 1}" for i in range(len(samples))]
    curves = out / "tail_cdf.csv"
    casestudy.write_tail_curves(curves, grid, samples, labels)
    files.append(curves)

    if scr_curve:
        sigmas = np.round(np.arange(1, 101) / 100, 2)
        scr = out / "scr_curve.csv"
        _csv(scr, ["sigma", "rho", "three_sigma"], analytic2d.scr_curve(sigmas, alpha))
        files.append(scr)

    print(f"SVaR = {reports[0].svar:,.0f} MMU")
    print(f"{'p':>6}  {'V':<15} {'VaR':>8} {'ES':>8}")
    for r in reports:
        print(f"{r.p:6.3f}  {r.tail:<15} {r.var:8.0f} {r.es:8.0f}")
    return files, None


# ---------------------------------------------------------------------------
# parser


def _out_dir(value):
    if value:
        return Path(value)
    return Path(os.environ.get(OUTPUT_ENV) or "out")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="patchvar", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./out)")

    a = sub.add_parser("analytic", help="closed-form curves and VaR summary")
    a.add_argument("--family", required=True, type=_family, help="exp, uniform or pareto")
    a.add_argument("--beta", required=True, type=_unit_closed)
    a.add_argument("--alpha", type=_probability, default=0.005)
    a.add_argument("--x-max", type=float, default=None)
    a.add_argument("--points", type=_positive_int, default=1001)
    common(a)

    o = sub.add_parser("optimize", help="VaR-maximizing beta")
    o.add_argument("--family", required=True, type=_family)
    o.add_argument("--alpha", type=_probability, default=0.005)
    o.add_argument("--points", type=_positive_int, default=151)
    common(o)

    s = sub.add_parser("simulate", help="Monte-Carlo run of a model file")
    s.add_argument("model", help="model file (see docs/model_format.md)")
    s.add_argument("--n", type=_positive_int, default=100_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--alpha", type=_probability, default=0.005)
    s.add_argument("--shards", type=_positive_int, default=1)
    s.add_argument("--backend", choices=kernels.available(), default=None)
    common(s)

    c = sub.add_parser("casestudy", help="Nat-Cat case-study tables and VaR survey")
    c.add_argument("--data", default=None, help="loss panel CSV (default: bundled panel)")
    c.add_argument("--n", type=_positive_int, default=100_000)
    c.add_argument("--seed", type=_seed, default=0)
    c.add_argument("--alpha", type=_probability, default=0.005)
    c.add_argument("--shards", type=_positive_int, default=1)
    c.add_argument("--scr-curve", action="store_true", help="also write the SCR volume-factor curve")
    c.add_argument("--tail-grid", nargs=3, type=float, default=(1000.0, 8000.0, 701),
                   metavar=("LO", "HI", "POINTS"))
    c.add_argument("--backend", choices=kernels.available(), default=None)
    common(c)

    r = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    r.add_argument("manifest")
    r.add_argument("--out", default=None, help="where to write the replayed outputs (default: a temp dir)")
    return p


def _dispatch(command: str, params: dict, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    if command == "analytic":
        return cmd_analytic(out, params["family"], params["beta"], params["alpha"],
                            params["x_max"], params["points"])
    if command == "optimize":
        return cmd_optimize(out, params["family"], params["alpha"], params["points"])
    if command == "simulate":
        return cmd_simulate(out, params["model"], params["n"], params["seed"], params["alpha"],
                            params["shards"], params["backend"])
    if command == "casestudy":
        return cmd_casestudy(out, params["data"], params["n"], params["seed"], params["alpha"],
                             params["shards"], params["scr_curve"], tuple(params["tail_grid"]),
                             params["backend"])
    raise PatchvarError(f"unknown command {command!r}")


def _replay(manifest_path, out_arg) -> int:
    manifest = json.loads(Path(manifest_path).read_text())
    params = dict(manifest["params"])
    command = manifest["command"]
    if command == "simulate":
        model = Path(params["model"])
        expected = manifest.get("extra", {}).get("model_sha256")
        if expected and _sha256(model) != expected:
            print(f"error: model file {model} changed since the manifest was written", file=sys.stderr)
            return 1
    if params.get("backend") is None and manifest.get("backend"):
        params["backend"] = manifest["backend"]
        if params["backend"] not in kernels.available():
            print(f"error: backend {params['backend']!r} is not available here", file=sys.stderr)
            return 1
    out = Path(out_arg) if out_arg else Path(tempfile.mkdtemp(prefix="patchvar-replay-"))
    files, _ = _dispatch(command, params, out)
    got = {Path(f).name: _sha256(f) for f in files}
    bad = [k for k, v in manifest["outputs"].items() if got.get(k) != v]
    for name in sorted(manifest["outputs"]):
        print(f"{'OK  ' if name not in bad else 'DIFF'} {name}")
    print(f"replayed into {out}")
    return 1 if bad else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return _replay(args.manifest, args.out)
        params = {k: v for k, v in vars(args).items() if k not in ("command", "out")}
        if "tail_grid" in params:
            params["tail_grid"] = list(params["tail_grid"])
        if params.get("model"):
            params["model"] = str(Path(params["model"]).resolve())
        if params.get("data"):
            params["data"] = str(Path(params["data"]).resolve())
        out = _out_dir(args.out)
        files, extra = _dispatch(args.command, params, out)
        backend = None
        if args.command in ("simulate", "casestudy"):
            backend = kernels.get_backend(params.get("backend")).NAME
        _write_manifest(out, args.command, params, files, seed=params.get("seed"),
                        backend=backend, extra=extra)
        print(f"wrote {len(files)} file(s) and {MANIFEST} to {out}")
        return 0
    except (PatchvarError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
