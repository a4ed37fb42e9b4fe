"""Time the compiled simplex core against the pure-Python fallback.

Two workloads: the node programs of the congestion instance (large and
degenerate) and a batch of small random programs like those in the
randomized test suites.  Both backends must return the same pivots; the
script stops if they disagree.

Usage:
    python3 benchmarks/bench_simplex.py [--agents 10] [--random 200] [--repeat 3]
"""

import argparse
import time

import numpy as np

from infodesign.congestion import CongestionParams, generate_congestion
from infodesign.lp import LinearProgram, available_backends, solve_lp
from infodesign.solver import backward_induct, node_lp


def congestion_programs(k):
    spec = generate_congestion(CongestionParams(k=k))
    sol = backward_induct(spec)
    tree = sol.tree
    progs = [node_lp(spec, nd, sol.W[1], sol.V[1]).lp for nd in tree.levels[0]]
    progs += [node_lp(spec, nd).lp for nd in tree.levels[1]]
    return progs


def random_programs(count, seed=0):
    rng = np.random.default_rng(seed)
    progs = []
    for _ in range(count):
        n, m_eq, m_ge = rng.integers(4, 30), rng.integers(1, 6), rng.integers(4, 40)
        x0 = rng.uniform(0, 1, n)
        A_eq = rng.normal(size=(m_eq, n))
        A_ge = rng.normal(size=(m_ge, n))
        progs.append(LinearProgram(c=rng.normal(size=n), A_eq=A_eq, b_eq=A_eq @ x0,
                                   A_ge=A_ge, b_ge=A_ge @ x0 - rng.uniform(0, 1, m_ge), upper=np.full(n, 2.0)))
    return progs


def timed(progs, backend, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        sols = [solve_lp(lp, backend=backend) for lp in progs]
        best = min(best, time.perf_counter() - start)
    return best, sols


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--agents", type=int, default=10, help="agents in the congestion instance")
    parser.add_argument("--random", type=int, default=200, help="number of random programs")
    parser.add_argument("--repeat", type=int, default=3, help="best of this many runs")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled core not built; only the python backend is available")
    workloads = {
        f"congestion k={args.agents}": congestion_programs(args.agents),
        f"random x{args.random}": random_programs(args.random),
    }
    print(f"{'workload':<20} {'backend':<9} {'seconds':>9} {'pivots':>8} {'speedup':>8}")
    for name, progs in workloads.items():
        base = None
        ref = None
        for backend in reversed(backends):
            secs, sols = timed(progs, backend, args.repeat)
            pivots = [s.pivots for s in sols]
            if ref is None:
                ref = pivots
            elif pivots != ref:
                raise SystemExit(f"{name}: backends disagree on pivot counts")
            base = base or secs
            print(f"{name:<20} {backend:<9} {secs:>9.4f} {sum(pivots):>8} {base / secs:>7.1f}x")


if __name__ == "__main__":
    main()
