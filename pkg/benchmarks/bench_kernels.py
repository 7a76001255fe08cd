"""Compare the compiled and NumPy phase-completion kernels.

Times the raw multi-start descent and a full ``solve_phases`` call on
Haar-derived matrices for each backend.

Usage::

    python3 benchmarks/bench_kernels.py --sizes 3 4 6 --repeats 5
"""
import argparse
import time

import numpy as np

from unistochastic import _kernels, phase_solver
from unistochastic._kernels import _lm_py
from unistochastic.linalg_core import haar_unitary, transition_probability_matrix

try:
    from unistochastic._kernels import _lm as _lm_c
except ImportError:
    _lm_c = None


def _best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _solve_with(module, pis):
    saved = _kernels.lm_multistart, _kernels.residual_jacobian, _kernels.RELEASES_GIL
    _kernels.lm_multistart = module.lm_multistart
    _kernels.residual_jacobian = module.residual_jacobian
    _kernels.RELEASES_GIL = module is _lm_c
    try:
        for pi in pis:
            phase_solver.solve_phases(pi)
    finally:
        _kernels.lm_multistart, _kernels.residual_jacobian, _kernels.RELEASES_GIL = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[3, 4, 6])
    parser.add_argument("--starts", type=int, default=32, help="starts per descent batch")
    parser.add_argument("--matrices", type=int, default=5, help="matrices per full-solve timing")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _lm_c is None:
        print("compiled extension not built; only the NumPy kernel is available")
    backends = [("python", _lm_py)] + ([("compiled", _lm_c)] if _lm_c is not None else [])
    rng = np.random.default_rng(args.seed)

    print(f"{'N':>3} {'task':<12} " + " ".join(f"{name:>12}" for name, _ in backends) + "  speedup")
    for n in args.sizes:
        u = haar_unitary(n, rng)
        sigma = np.abs(u)
        starts = rng.uniform(-np.pi, np.pi, (args.starts, (n - 1) ** 2))
        pis = [transition_probability_matrix(haar_unitary(n, rng)) for _ in range(args.matrices)]
        rows = {
            "descent": [_best_of(lambda m=m: m.lm_multistart(sigma, starts, 500, 1e-12, 1e-3),
                                 args.repeats) for _, m in backends],
            "solve": [_best_of(lambda m=m: _solve_with(m, pis), args.repeats) for _, m in backends],
        }
        for task, times in rows.items():
            speed = f"{times[0] / times[-1]:7.1f}x" if len(times) > 1 else "      -"
            print(f"{n:>3} {task:<12} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + "  " + speed)


if __name__ == "__main__":
    main()
