"""Acceptance criteria, one test each.

Every test records a single ``CRITERION n PASS|FAIL: ...`` line; the lines
are printed together at the end of the pytest run (see conftest) and when
this file is executed directly.
"""
import itertools
import math
import time
import warnings

import numpy as np
import pytest

from hinanom.baselines import baseline_distances
from hinanom.evaluation import ExperimentConfig, lift_index, run_experiment
from hinanom.graph import schema_of
from hinanom.metapath import count_matrix, enumerate_metapaths, make_metapath
from hinanom.qanet import AnomalyQuery, QanetParams, RankedList, query_tensor, run_query, score_query
from hinanom.synth import SynthConfig, generate_network, generate_query, inject_anomalies
from hinanom.tensor import CpFactors, SparseTensor3, cp_als, fit, project_mode1
from hinanom.toy import CANDIDATES, REFERENCE, toy_graph
from conftest import random_typed_graph
from oracles import dense_cp, dfs_path_counts, lstsq_rows
from table2 import METHOD_COLUMNS, QANET_ORDER, TABLE2, TOLERANCE
from test_metapath import random_metapath

RESULTS = {}

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def report(number, passed, detail, gating=True):
    tag = "PASS" if passed else "FAIL"
    suffix = "" if gating else " (informational)"
    RESULTS[number] = f"CRITERION {number} {tag}{suffix}: {detail}"
    print(RESULTS[number])
    if gating:
        assert passed, RESULTS[number]


def _toy_query(g):
    return AnomalyQuery.create(g, [g.index_of(REFERENCE)], [g.index_of(c) for c in CANDIDATES])


def test_criterion_1_table2_golden():
    t0 = time.perf_counter()
    g = toy_graph()
    s = schema_of(g)
    q = _toy_query(g)
    apv = next(p for p in enumerate_metapaths(s) if p.name(s) == "APV")
    worst, rank_ok = 0.0, True
    for method, col in METHOD_COLUMNS.items():
        ranked = RankedList.from_scores(q.candidates, baseline_distances(g, q, method, [apv], s))
        for name, row in TABLE2.items():
            v = g.index_of(name)
            worst = max(worst, abs(ranked.score_of(v) - row[col]))
            rank_ok &= ranked.rank_of(v) == row[col + 1]
    elapsed = time.perf_counter() - t0
    report(1, worst <= TOLERANCE and rank_ok and elapsed < 1.0,
           f"max |error| {worst:.2e} (<= {TOLERANCE}), ranks exact: {rank_ok}, {elapsed:.3f}s (< 1s)")


def test_criterion_2_qanet_toy_ranking():
    g = toy_graph()
    q = _toy_query(g)
    sarah, joe = g.index_of("Sarah"), g.index_of("Joe")
    runs = sarah_ok = joe_first = full = 0
    per_rank = {}
    for rank in (2, 3, 4):
        for seed in range(20):
            ranked = run_query(g, q, QanetParams(rank=rank, clusters=1, seed=seed))
            runs += 1
            sarah_ok += ranked.score_of(sarah) <= 1e-6 and ranked.rank_of(sarah) == 6
            joe_first += ranked.rank_of(joe) == 1
            hit = tuple(g.node_labels[v] for v in ranked.nodes) == QANET_ORDER
            full += hit
            per_rank[rank] = per_rank.get(rank, 0) + hit
    ok = sarah_ok == runs and joe_first >= 0.8 * runs and full >= 0.5 * runs
    detail = ", ".join(f"F={r}: {n}/20" for r, n in per_rank.items())
    report(2, ok, f"Sarah zero+last {sarah_ok}/{runs}, Joe first {joe_first}/{runs} (>= 80%), "
                  f"full order {full}/{runs} (>= 50%; {detail})")


def test_criterion_3_lift_bounds():
    values = []
    nodes = list(range(10))
    for pos in itertools.combinations(nodes, 5):
        truth = {v: v in pos for v in nodes}
        values.append(lift_index(RankedList.from_scores(nodes, np.arange(10, 0, -1.0)), truth))
    best = lift_index(RankedList.from_scores(nodes, np.arange(10, 0, -1.0)), {v: v < 5 for v in nodes})
    worst = lift_index(RankedList.from_scores(nodes, np.arange(10, 0, -1.0)), {v: v >= 5 for v in nodes})
    ok = min(values) >= 0.3 - 1e-12 and max(values) <= 0.8 + 1e-12 and math.isclose(best, 0.8) \
        and math.isclose(worst, 0.3)
    report(3, ok, f"{len(values)} arrangements in [{min(values):.4f}, {max(values):.4f}], "
                  f"perfect {best:.4f}, inverted {worst:.4f}")


@pytest.mark.slow
def test_criterion_4_baseline_dominance():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(sweep_variable="network_size", sweep_values=(2000,),
                           synth=SynthConfig(n_nodes=2000, n_colors=4, n_types=2, p_intra=0.02,
                                             p_inter=0.002, p_anom=0.5),
                           qanet=QanetParams(rank=4, clusters=1), query_type=5, ref_size=20, cand_size=10,
                           repetitions=20, seed=0)
    means = {r.method: r.mean_li for r in run_experiment(cfg)}
    elapsed = time.perf_counter() - t0
    margin = min(means["qanet"] - means[m] for m in ("netout", "pathsim", "cossim"))
    ok = margin >= 0.03 and means["qanet"] >= 0.55 and elapsed < 600
    report(4, ok, "mean LI " + ", ".join(f"{m} {v:.3f}" for m, v in means.items())
           + f"; QANet margin {margin:+.3f} (needs >= +0.03), {elapsed:.0f}s")


def test_criterion_5_cp_als_oracle():
    fits, monotone = [], True
    for tseed in range(10):
        rng = np.random.default_rng(tseed)
        t = SparseTensor3.from_dense(dense_cp(*(rng.random((d, 3)) for d in (30, 40, 5))))
        best = 0.0
        for seed in range(5):
            f = cp_als(t, rank=3, iterations=50, seed=seed)
            best = max(best, fit(t, f))
            monotone &= bool(np.all(np.diff(f.residuals) <= 1e-12))
        fits.append(best)
    report(5, min(fits) >= 0.999 and monotone,
           f"worst best-of-5 fit over 10 tensors {min(fits):.5f} (>= 0.999), residuals non-increasing: {monotone}")


def test_criterion_6_projection_oracle():
    worst = 0.0
    for seed in range(25):
        rng = np.random.default_rng(seed)
        X = rng.random((8, 12, 6)) * (rng.random((8, 12, 6)) < 0.5)
        B, C = rng.random((12, 3)), rng.random((6, 3))
        if seed >= 20:
            B[:, 2], C[:, 2] = B[:, 0], C[:, 0]
        B, C = B / np.linalg.norm(B, axis=0), C / np.linalg.norm(C, axis=0)
        got = project_mode1(SparseTensor3.from_dense(X), CpFactors(np.zeros((8, 3)), B, C, np.ones(3)))
        ref = lstsq_rows(X, B, C)
        worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))
    report(6, worst <= 1e-8, f"max relative error {worst:.2e} over 20 full-rank and 5 rank-deficient cases")


def test_criterion_7_count_oracle():
    checked = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        g, edges = random_typed_graph(rng)
        s = schema_of(g)
        p = make_metapath(s, random_metapath(rng, s, int(rng.integers(1, 5))))
        if np.array_equal(count_matrix(g, p).counts.toarray(), dfs_path_counts(g.n_nodes, edges, p.steps)):
            checked += 1
    report(7, checked == 100, f"{checked}/100 random graphs match DFS enumeration exactly")


def _median_time(fn, repeat=5):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


@pytest.mark.slow
def test_criterion_8_scaling():
    fixed, early, nnz = {}, {}, {}
    for n in (5000, 10000):
        net = inject_anomalies(generate_network(SynthConfig(n_nodes=n, seed=1)), 0.05, 0.5, seed=2)
        q = generate_query(net, 5, seed=3).query
        nodes = list(q.reference + q.candidates)
        # Precomputed rows of the network tensor for the query nodes (untimed).
        tensor = query_tensor(net.graph, nodes)
        nnz[n] = tensor.nnz
        ref_rows, cand_rows = list(range(len(q.reference))), list(range(len(q.reference), len(nodes)))
        # The complexity bound is per ALS sweep, so the gate uses a fixed sweep count.
        fixed[n] = _median_time(lambda: score_query(tensor, ref_rows, cand_rows, QanetParams(seed=0, als_tol=0.0)))
        early[n] = _median_time(lambda: score_query(tensor, ref_rows, cand_rows, QanetParams(seed=0)))
    ratio = fixed[10000] / fixed[5000]
    report(8, ratio <= 2.6, f"50-sweep query time {fixed[5000]:.3f}s -> {fixed[10000]:.3f}s, ratio {ratio:.2f} "
                            f"(<= 2.6); with early stopping {early[5000]:.3f}s -> {early[10000]:.3f}s "
                            f"(ratio {early[10000] / early[5000]:.2f}); tensor nnz {nnz[5000]} -> {nnz[10000]}",
           gating=False)


if __name__ == "__main__":
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, fn in sorted(globals().items()):
            if name.startswith("test_criterion_"):
                try:
                    fn()
                except AssertionError:
                    pass
