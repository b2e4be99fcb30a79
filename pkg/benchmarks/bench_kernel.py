"""Time the compiled stepping kernel against the pure-Python one.

    python3 benchmarks/bench_kernel.py [--periods N] [--repeat R]

Both kernels run the same closed-loop load step; the script also checks the
traces are bitwise identical.
"""
import argparse
import time

import numpy as np

from anampc.buck.simulate import KERNELS, Scenario, simulate
from anampc.harness import reference_config, run_pipeline


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--periods", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    cfg = reference_config()
    res = run_pipeline(cfg, check_samples=0)
    p = cfg.plant
    sc = Scenario.load_step(a.periods, a.periods // 2 * p.T, 0.0, 10.0, p.V_in,
                            x0=tuple(res.equilibrium.x))
    times, traces = {}, {}
    for name in sorted(KERNELS):
        times[name], traces[name] = best_of(
            lambda: simulate(p, sc, policy=res.policy, estimator=res.estimator, kernel=name), a.repeat)
        print(f"{name:>9}: {times[name] * 1e3:9.2f} ms for {a.periods} periods "
              f"({times[name] / a.periods * 1e6:.1f} us/period)")
    if "compiled" not in KERNELS:
        print("compiled kernel not built; only the Python kernel was timed")
        return
    print(f"speed-up: {times['python'] / times['compiled']:.1f}x")
    same = all(np.array_equal(getattr(traces["python"], c), getattr(traces["compiled"], c))
               for c in ("i_L", "v_C", "v_o", "d", "io_hat"))
    print("traces bitwise identical:", same)


if __name__ == "__main__":
    main()
