"""Compiled vs pure-Python ball kernel on the workloads the package runs.

    python3 benchmarks/bench_kernel.py [--repeat N]

Both backends must give bit-identical arrays; the script checks that
before reporting timings.
"""

import argparse
import time

import numpy as np

from spmcert.geometry import DesignParams
from spmcert.kantorovich import fgm_system
from spmcert.numerics.kernel import backend_module, leaf_grid
from spmcert.polysys import leg_polys
from spmcert.variety import pack_o_polys


def _available():
    out = ["python"]
    try:
        backend_module("cython")
        out.append("cython")
    except (ImportError, ValueError):
        pass
    return out


def _workloads(n):
    rng = np.random.default_rng(0)
    legs = leg_polys(DesignParams())
    packed = pack_o_polys([p for leg in legs for p in leg])
    om = np.column_stack([rng.uniform(-0.18, 0.18, (n, 2)), np.zeros(n)])
    orad = np.full((n, 3), 5e-3)
    sysm = fgm_system()
    jm = rng.uniform(0.5, 2.0, (n, 3))
    jr = np.full((n, 3), 2.0**-9)

    def variety(backend):
        return packed.eval_grid(om, orad, backend)

    lm, lr = packed.eval_grid(om, orad, "python")

    def leaves(backend):
        return leaf_grid(lm[:, 0], lr[:, 0], lm[:, 1], lr[:, 1], lm[:, 2], lr[:, 2], backend)

    def hessians(backend):
        h = sysm.eval_hess(jm, jr, om, orad, backend)
        return [x.m for row in h for r_ in row for x in r_]

    return {"leg quadratics (o-polys)": variety, "(+++) leaf": leaves, "Hessian balls (6 vars)": hessians}


def _flat(res):
    if isinstance(res, np.ndarray):
        return [res]
    out = []
    for x in res:
        out.extend(_flat(x))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000, help="points per workload")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _available()
    print(f"backends: {', '.join(backends)}; {args.n} points, best of {args.repeat}")
    print(f"{'workload':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in _workloads(args.n).items():
        times, results = [], []
        for b in backends:
            best = float("inf")
            for _ in range(args.repeat):
                t = time.perf_counter()
                res = fn(b)
                best = min(best, time.perf_counter() - t)
            times.append(best)
            results.append(_flat(res))
        if len(results) > 1:
            same = all(np.array_equal(a, c, equal_nan=True) for a, c in zip(results[0], results[1]))
            if not same:
                raise SystemExit(f"{name}: backends disagree")
        line = f"{name:28s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            line += f"{times[0] / times[1]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
