"""Time the compiled and pure-numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--rows 780] [--repeat 5]

The default row count matches one training fold of the 40-subject corpus
(30 subjects x 26 recordings). Results are printed as a small table; the
objectives reached by the two backends are compared so a speedup never
hides a divergence. Weights themselves can differ by more than the solver
tolerance on correlated columns, where the optimum is flat.
"""

import argparse
import time

import numpy as np

from fsgate._backend import available_backends


def _best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _problem(rows, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, p))
    X[:, 1:] += 0.8 * X[:, :1]  # correlated columns, like the jitter/shimmer families
    w = np.zeros(p)
    w[: min(p, 3)] = (1.0, -0.5, 0.25)[: min(p, 3)]
    y = (rng.uniform(size=rows) < 1.0 / (1.0 + np.exp(-(X @ w)))).astype(np.float64)
    return np.ascontiguousarray(X), y


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=780)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy kernels are available")

    cases = []
    for p in (1, 3, 10, 26):
        X, y = _problem(args.rows, p, p)
        cases.append((f"fit p={p:<2d} gd", X, y, 0.0))
    X, y = _problem(args.rows, 26, 99)
    cases.append(("fit p=26 l1 ", X, y, 0.01))

    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, X, y, l1 in cases:
        times, objective = {}, {}
        for name, k in backends.items():
            t, res = _best_of(
                lambda: k.logistic_fit(X, y, np.zeros(X.shape[1]), 0.0, l1, 0.0, 1e-6, 5000, False),
                args.repeat,
            )
            w, b = res[0], res[1]
            times[name] = t
            objective[name] = backends["python"].logistic_loss(X, y, w, b) + l1 * np.abs(w).sum()
        _report(label, times)
        if len(objective) == 2:
            gap = abs(objective["cython"] - objective["python"])
            assert gap < 1e-9, f"backends reach objectives {gap:g} apart"

    col = np.random.default_rng(0).lognormal(size=args.rows)
    times = {}
    for name, k in backends.items():
        times[name], _ = _best_of(lambda: [k.yj_loglik(col, lam) for lam in np.linspace(-5, 5, 60)], args.repeat)
    _report("yj loglik x60", times)


def _report(label, times):
    cells = "".join(f"{1e3 * t:>10.2f}ms" for t in times.values())
    speed = times["python"] / times["cython"] if len(times) == 2 else float("nan")
    print(f"{label:<16}{cells}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
