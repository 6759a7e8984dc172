"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times one synchronous round (several sizes and thread counts), the dense LU
solve behind the oracle and the Jacobi eigensolver, for each backend.
"""

import argparse
import timeit

import numpy as np

from dtle_net import _backend, network, solver
from dtle_net.fixtures import generate_random_problem
from dtle_net.problem import decompose


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def round_case(n, m, seed=0):
    p = generate_random_problem(n, 0.5, seed)
    locals_ = decompose(p, m)
    A, Q, offsets, alphas = solver._system(locals_)
    g = network.metropolis_adjacency(m, network.ring_edges(m))
    W = np.ascontiguousarray(network.weight_matrix(g, alphas).W)
    s = solver.init_state(locals_, "random", 1.0, seed)
    Xo, Yo = np.empty_like(s.X), np.empty_like(s.Y)
    return lambda mod, threads: (lambda: mod.round_step(A, Q, offsets, alphas, W, s.X, s.Y, Xo, Yo, threads))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _backend.fallback)]
    if _backend.compiled is not None:
        backends.append(("compiled", _backend.compiled))
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<28}{'backend':<10}{'threads':>8}{'time [us]':>14}{'speedup':>10}")
    for n, m in ((10, 5), (20, 5), (40, 8)):
        case = round_case(n, m)
        base = None
        for name, mod in backends:
            for threads in ((1,) if name == "python" else (1, 2, 4)):
                t = best(case(mod, threads), args.repeat, 200 if n <= 20 else 20)
                base = base or t
                print(f"{f'round_step n={n} m={m}':<28}{name:<10}{threads:>8}{t * 1e6:>14.1f}{base / t:>10.2f}")

    rng = np.random.default_rng(1)
    for size in (25, 100):
        M = rng.normal(size=(size, size)) + size * np.eye(size)
        b = rng.normal(size=size)
        base = None
        for name, mod in backends:
            t = best(lambda: mod.lu_solve(M.copy(), b.copy(), 1e-12), args.repeat, 20)
            base = base or t
            print(f"{f'lu_solve {size}x{size}':<28}{name:<10}{1:>8}{t * 1e6:>14.1f}{base / t:>10.2f}")

    for size in (10, 40):
        G = rng.normal(size=(size, size))
        S = G + G.T
        base = None
        for name, mod in backends:
            t = best(lambda: mod.jacobi_eigenvalues(S.copy(), 1e-12 * np.linalg.norm(S)), args.repeat, 5)
            base = base or t
            print(f"{f'jacobi {size}x{size}':<28}{name:<10}{1:>8}{t * 1e6:>14.1f}{base / t:>10.2f}")


if __name__ == "__main__":
    main()
