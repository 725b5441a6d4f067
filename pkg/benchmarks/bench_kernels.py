"""Benchmark: compiled vs pure-Python stepping kernel.

Runs identical seeded workloads on both backends, verifies the
trajectories agree bit-for-bit, and reports events/second.

    python3 benchmarks/bench_kernels.py [--runs 8] [--heavy]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from anyonsim.engine import Geometry, backend, run_single
from anyonsim.potential import LatticeParams, build_potential
from anyonsim.shadow import table_one_preset


def bench(which: str, L: int, mu_over_j: float, gamma_p: float, seeds, integrator="kmc"):
    table = build_potential(
        LatticeParams(j=3.0, mu=mu_over_j * 3.0, grid=(L, L))
    ).set_v_eff(30.0)
    spec = table_one_preset(mu_over_j)
    taus = []
    events = 0
    t0 = time.perf_counter()
    for seed in seeds:
        r = run_single(
            Geometry.torus(L), table, spec, gamma_p,
            seed=seed, backend=which, integrator=integrator,
        )
        taus.append(r.tau)
        events += r.n_events
    elapsed = time.perf_counter() - t0
    return np.array(taus), events, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=8)
    parser.add_argument("--heavy", action="store_true",
                        help="add a 12x12 low-error-rate workload")
    args = parser.parse_args()

    if not backend.HAVE_COMPILED:
        print("compiled kernel not built; nothing to compare")
        return

    workloads = [("6x6  kmc      gp=3e-4", 6, -0.4, 3e-4, "kmc"),
                 ("6x6  fixed-dt gp=3e-4", 6, -0.4, 3e-4, "fixed_dt")]
    if args.heavy:
        workloads.append(("12x12 kmc     gp=1e-4", 12, -0.4, 1e-4, "kmc"))

    print(f"{'workload':24s} {'backend':9s} {'runs':>5s} {'events':>9s} "
          f"{'time':>8s} {'events/s':>10s} {'speedup':>8s}")
    for name, L, mu, gp, integ in workloads:
        seeds = range(args.runs)
        res = {}
        for which in ("python", "compiled"):
            taus, events, elapsed = bench(which, L, mu, gp, seeds, integ)
            res[which] = (taus, events, elapsed)
            rate = events / elapsed if elapsed else float("inf")
            speedup = res["python"][2] / elapsed if which == "compiled" else 1.0
            print(f"{name:24s} {which:9s} {args.runs:>5d} {events:>9d} "
                  f"{elapsed:>7.2f}s {rate:>10.0f} {speedup:>7.1f}x")
        if not np.array_equal(res["python"][0], res["compiled"][0]):
            raise SystemExit("MISMATCH: backends disagree on identical seeds")
    print("trajectory parity: identical taus on both backends")


if __name__ == "__main__":
    main()
