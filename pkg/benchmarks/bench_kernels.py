"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--n 1000000] [--d 19] [--repeat 5]

Times the fused patchwork/quantile/row-sum kernel on pre-drawn inputs and a
full ``engine.simulate`` run, and checks that both backends agree.
"""
import argparse
import time

import numpy as np

from patchvar import copulas as C
from patchvar import engine as E
from patchvar import kernels
from patchvar import marginals as M
from patchvar.patchwork import PatchworkCopula, RiskModel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--d", type=int, default=19)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    n, d = args.n, args.d
    margins = tuple(M.lognormal(rng.normal(2, 1), rng.uniform(0.5, 2)) for _ in range(d))
    model = RiskModel(margins, PatchworkCopula(C.Independence(d), C.minimal_correlation_gaussian(d), 0.006))
    kinds, mu, sigma = model.margin_arrays()
    switch, body, tail = rng.random(n), rng.random((n, d)), rng.random((n, d))

    backends = kernels.available()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND}); n={n} d={d}")
    print(f"{'backend':<8} {'patchwork_sum [s]':>18} {'simulate [s]':>14}")
    results = {}
    for name in backends:
        t_k, out = best_of(lambda: kernels.patchwork_sum(switch, body, tail, 0.006, kinds, mu, sigma,
                                                         backend=name), args.repeat)
        cfg = E.SimulationConfig(model, n, 1)
        t_s, sample = best_of(lambda: E.simulate(cfg, backend=name), max(1, args.repeat // 2))
        results[name] = (t_k, t_s, out, sample.values)
        print(f"{name:<8} {t_k:>18.3f} {t_s:>14.3f}")

    if len(results) > 1:
        ref = results["python"]
        for name, (t_k, t_s, out, values) in results.items():
            if name == "python":
                continue
            print(f"speedup {name}/python: kernel x{ref[0] / t_k:.1f}, simulate x{ref[1] / t_s:.1f}")
            np.testing.assert_allclose(out, ref[2], rtol=1e-13)
            np.testing.assert_allclose(values, ref[3], rtol=1e-13)
        print("outputs agree to rtol 1e-13")


if __name__ == "__main__":
    main()
