"""Compare the numba and numpy kernels, then time one end-to-end query per backend.

    python benchmarks/bench_kernels.py [--nnz 2000000] [--rank 4] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hinanom import kernels
from hinanom._accel import HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_mttkrp(nnz, rank, repeat, rng):
    n_out, n_a, n_b = 20_000, 20_000, 10
    out_idx = rng.integers(n_out, size=nnz)
    order, indptr = kernels.group_entries(out_idx, n_out)
    idx_a = rng.integers(n_a, size=nnz)[order]
    idx_b = rng.integers(n_b, size=nnz)[order]
    vals = rng.random(nnz)
    fa, fb = rng.random((n_a, rank)), rng.random((n_b, rank))
    args = (indptr, idx_a, idx_b, vals, fa, fb)
    t_np, ref = best_of(lambda: kernels.mttkrp_numpy(*args), repeat)
    row = {"kernel": "mttkrp", "size": nnz, "numpy_s": t_np}
    if HAVE_NUMBA:
        kernels.mttkrp_numba(*args)  # compile
        t_nb, got = best_of(lambda: kernels.mttkrp_numba(*args), repeat)
        row.update(numba_s=t_nb, max_abs_diff=float(np.abs(got - ref).max()))
    return row


def bench_min_dist(m, k, dim, repeat, rng):
    points, centers = rng.random((m, dim)), rng.random((k, dim))
    t_np, (d_ref, a_ref) = best_of(lambda: kernels.min_distances_numpy(points, centers), repeat)
    row = {"kernel": "min_distances", "size": m, "numpy_s": t_np}
    if HAVE_NUMBA:
        kernels.min_distances_numba(points, centers)
        t_nb, (d, a) = best_of(lambda: kernels.min_distances_numba(points, centers), repeat)
        row.update(numba_s=t_nb, max_abs_diff=float(np.abs(d - d_ref).max()),
                   argmin_equal=bool((a == a_ref).all()))
    return row


QUERY_SNIPPET = """
import time, warnings
from hinanom import kernels
from hinanom.synth import SynthConfig, generate_network, inject_anomalies, generate_query
from hinanom.qanet import QanetParams, run_query
net = inject_anomalies(generate_network(SynthConfig(n_nodes=2000, seed=1)), 0.05, 0.5, seed=2)
lq = generate_query(net, 5, seed=3)
warnings.simplefilter("ignore")
run_query(net.graph, lq.query, QanetParams(seed=0))
t0 = time.perf_counter()
for _ in range(3):
    run_query(net.graph, lq.query, QanetParams(seed=0))
print(kernels.BACKEND, (time.perf_counter() - t0) / 3)
"""


def bench_query():
    rows = []
    for disable in ("1", "0"):
        env = dict(os.environ, HINANOM_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", QUERY_SNIPPET], env=env, capture_output=True, text=True,
                             check=True).stdout.split()
        rows.append((out[0], float(out[1])))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nnz", type=int, default=2_000_000)
    ap.add_argument("--rank", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-query", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"numba available: {HAVE_NUMBA}")
    print("kernel\tsize\tnumpy_s\tnumba_s\tspeedup\tmax_abs_diff")
    for row in (bench_mttkrp(args.nnz, args.rank, args.repeat, rng),
                bench_min_dist(200_000, 8, args.rank, args.repeat, rng)):
        nb = row.get("numba_s", float("nan"))
        print(f"{row['kernel']}\t{row['size']}\t{row['numpy_s']:.4f}\t{nb:.4f}\t"
              f"{row['numpy_s'] / nb:.2f}\t{row.get('max_abs_diff', float('nan')):.2e}")
    if not args.skip_query:
        print("\nbackend\tquery_s (N=2000, type 5, rank 4)")
        for backend, t in bench_query():
            print(f"{backend}\t{t:.3f}")


if __name__ == "__main__":
    main()
