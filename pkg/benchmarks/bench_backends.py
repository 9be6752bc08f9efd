"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--nodes 50000] [--repeat 5]

Kernel timings import both implementations side by side. The end-to-end
row runs a short simulation in a subprocess per backend, because the
backend is fixed at import time by ``CITESIM_BACKEND``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from citesim.kernels import _numba, _numpy
from citesim.seedgen import ErSpec, gen_erdos_renyi_gnm

SIM_SNIPPET = """
import time
from citesim import kernels
from citesim.distributions import FitnessLaw, OutDegreeDist, synthetic_recency_table
from citesim.engine import SimConfig, run_simulation
from citesim.seedgen import ErSpec, gen_erdos_renyi_gnm
seed = gen_erdos_renyi_gnm(ErSpec({n}, {m}), 1, FitnessLaw())
cfg = SimConfig(recency_table=synthetic_recency_table(), years={years},
                out_degree=OutDegreeDist.decaying(), master_seed=1)
run_simulation(SimConfig(recency_table=cfg.recency_table, years=1, superstars=()), seed)  # warm up
t = time.perf_counter()
run_simulation(cfg, seed)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def best_of(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(n, rng):
    g = gen_erdos_renyi_gnm(ErSpec(n, int(n * 1.83)), 7)
    ip, ix = g.undirected_csr()
    p, r, f = rng.random(n), rng.random(n), rng.random(n)
    excluded = rng.random(n) < 0.01
    u = rng.random(n)
    return {
        "composite_topk": lambda m: m.composite_topk(p, r, f, excluded, 0.2, 0.3, 0.5, u, 50),
        "triangle_counts": lambda m: m.triangle_counts(ip, ix),
        "core_numbers": lambda m: m.core_numbers(ip, ix),
    }


def simulate(backend, n, years):
    code = SIM_SNIPPET.format(n=n, m=int(n * 1.83), years=years)
    env = {**os.environ, "CITESIM_BACKEND": backend}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    assert name == backend, f"asked for {backend}, ran {name}"
    return float(secs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=50_000, help="seed graph size for the kernel timings")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sim-nodes", type=int, default=5_000)
    ap.add_argument("--sim-years", type=int, default=10)
    ap.add_argument("--skip-sim", action="store_true", help="kernel timings only")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numpy s':>10}{'numba s':>10}{'speedup':>9}")
    for name, call in kernel_cases(args.nodes, rng).items():
        t_np = best_of(lambda: call(_numpy), args.repeat)
        t_nb = best_of(lambda: call(_numba), args.repeat)
        print(f"{name:<18}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.1f}x")
    if not args.skip_sim:
        t_np = simulate("numpy", args.sim_nodes, args.sim_years)
        t_nb = simulate("numba", args.sim_nodes, args.sim_years)
        label = f"simulate {args.sim_nodes}/{args.sim_years}y"
        print(f"{label:<18}{t_np:>10.2f}{t_nb:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
