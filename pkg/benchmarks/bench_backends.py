"""Compare the compiled and pure-numpy backends on the hot kernels.

Times kernel powering, Poisson sweeps, and the walker ensemble on a
square-triangle environment, best of --repeats.  Also cross-checks that
both backends produce bit-identical walks and matching solves, since the
speedup claim is only interesting if the outputs agree.

    python3 benchmarks/bench_backends.py [--side 16] [--walkers 20000]
"""

import argparse
import time

import numpy as np

from rwre import backend, cycles, environment as envmod, rng
from rwre.analysis import assemble_kernel
from rwre.corrector import build_env_chain, local_drift


def _best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _tasks(env, args):
    k = assemble_kernel(env)
    chain = build_env_chain(env)
    drift = local_drift(chain)
    rhs = drift.vectors[:, 1]
    cum = np.cumsum(env.step_probs, axis=1)
    streams = rng.walker_streams(args.seed, args.walkers)
    start = np.zeros(env.dimension, dtype=np.int64)
    cps = np.array([args.steps], dtype=np.int64)

    def power():
        p = k.to_dense()
        for _ in range(args.powers):
            p = backend.kernel_power_step(k.probs, k.nbr, p)
        return p

    def poisson():
        u, residual, sweeps = backend.poisson_sweeps(
            k.probs, k.nbr, rhs, chain.q, 0.5, 1e-12, 10**6, None
        )
        if residual >= 1e-12:
            raise RuntimeError(f"solver stalled at {residual:.3e}")
        return u

    def ensemble():
        return backend.walk_ensemble(cum, env.steps, env.side, env.strides, start, streams, cps)

    return {"kernel_power": power, "poisson_sweeps": poisson, "walk_ensemble": ensemble}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--side", type=int, default=16)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--walkers", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=1024)
    ap.add_argument("--powers", type=int, default=32, help="kernel power steps per timing")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    env = envmod.build_environment(cycles.square_triangle(), args.side, args.seed)
    names = ["numpy"] + (["numba"] if backend.HAVE_NUMBA else [])
    times: dict = {}
    outputs: dict = {}
    for name in names:
        backend.use(name)
        tasks = _tasks(env, args)
        for task, fn in tasks.items():
            fn()  # warm-up; compiles the numba path on first call
            times[(name, task)] = _best_of(fn, args.repeats)
            outputs[(name, task)] = fn()
    backend.use(None)

    if backend.HAVE_NUMBA:
        walks_equal = np.array_equal(
            outputs[("numpy", "walk_ensemble")], outputs[("numba", "walk_ensemble")]
        )
        power_gap = float(
            np.abs(outputs[("numpy", "kernel_power")] - outputs[("numba", "kernel_power")]).max()
        )
        poisson_gap = float(
            np.abs(outputs[("numpy", "poisson_sweeps")] - outputs[("numba", "poisson_sweeps")]).max()
        )
        print(f"walks bit-identical: {walks_equal}")
        print(f"kernel power max gap: {power_gap:.3e}")
        print(f"poisson solution max gap: {poisson_gap:.3e}")
        if not walks_equal:
            return 1
        print()

    tasks = sorted({task for _, task in times})
    width = max(len(t) for t in tasks)
    header = f"{'task':<{width}}  " + "".join(f"{n:>12}" for n in names)
    if backend.HAVE_NUMBA:
        header += f"{'speedup':>10}"
    print(header)
    for task in tasks:
        row = f"{task:<{width}}  " + "".join(f"{times[(n, task)]:>12.4f}" for n in names)
        if backend.HAVE_NUMBA:
            row += f"{times[('numpy', task)] / times[('numba', task)]:>10.1f}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
