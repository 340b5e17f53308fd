"""Time the compiled episode loop against the pure-Python one.

    python benchmarks/bench_backends.py --reps 200

Both backends consume the same random stream, so the script also checks that
they report the same Monte-Carlo mean.
"""
import argparse
import time

from nsbandits import engine
from nsbandits.forge import forge_eg_mid, forge_restart_composite, forge_ucb
from nsbandits.policies import EpsilonGreedy, Restarted, UcbKnownHorizon

WORKLOADS = {
    "ucb T=1000 K=2": lambda: (forge_ucb(1000, 2)[0], UcbKnownHorizon()),
    "eps-greedy T=1000 K=2": lambda: (forge_eg_mid(1000, 2), EpsilonGreedy(0.1)),
    "restart(4) ucb T=4000": lambda: (forge_restart_composite(4000, 2, 4, 2, "ucb"),
                                      Restarted(UcbKnownHorizon(), 4)),
}


def timed(inst, spec, reps, backend):
    t0 = time.perf_counter()
    rep = engine.monte_carlo_regret(inst, spec, reps, backend=backend)
    return time.perf_counter() - t0, rep.mean


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    if engine._kernel is None:
        raise SystemExit("compiled kernel not built; reinstall with Cython available")
    print(f"{'workload':<24} {'python s':>9} {'cython s':>9} {'speedup':>8}  same mean")
    for name, make in WORKLOADS.items():
        inst, spec = make()
        tp, mp = timed(inst, spec, args.reps, "python")
        tc, mc = timed(inst, spec, args.reps, "cython")
        print(f"{name:<24} {tp:9.3f} {tc:9.3f} {tp / tc:7.1f}x  {mp == mc}")


if __name__ == "__main__":
    main()
