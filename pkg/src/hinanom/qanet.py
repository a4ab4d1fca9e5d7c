"""Query-based anomaly ranking: tensor features, k-means, nearest-center distance."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ParameterError, QueryError
from .graph import HinGraph, schema_of
from .metapath import MetaPath, enumerate_metapaths
from .tensor import SparseTensor3, build_network_tensor, cp_als, project_mode1, slice_rows

# Scores equal to this many decimals count as tied and keep input order.
TIE_DECIMALS = 12


@dataclass(frozen=True)
class AnomalyQuery:
    reference: tuple[int, ...]
    candidates: tuple[int, ...]
    node_type: int

    @classmethod
    def create(cls, graph: HinGraph, reference: Sequence[int], candidates: Sequence[int]) -> "AnomalyQuery":
        """Validate id lists against ``graph`` and infer the shared node type."""
        reference = tuple(int(v) for v in reference)
        candidates = tuple(int(v) for v in candidates)
        for name, ids in (("reference", reference), ("candidate", candidates)):
            if not ids:
                raise QueryError(f"{name} set is empty")
            if len(set(ids)) != len(ids):
                raise QueryError(f"{name} set has duplicate nodes")
            bad = [v for v in ids if not 0 <= v < graph.n_nodes]
            if bad:
                raise QueryError(f"{name} node id {bad[0]} is not in the graph")
        types = {int(graph.node_type[v]) for v in reference + candidates}
        if len(types) != 1:
            names = sorted(graph.type_labels[t] for t in types)
            raise QueryError(f"reference and candidate nodes must share one type, found {names}")
        return cls(reference, candidates, types.pop())


@dataclass(frozen=True)
class QanetParams:
    rank: int = 4
    clusters: int = 1
    als_iterations: int = 50
    kmeans_max_iterations: int = 100
    seed: int = 0
    max_length: int = 2
    # Stop ALS early once the fit moves less than this; 0 runs every sweep.
    als_tol: float = 1e-6

    def validate(self, n_reference: int) -> None:
        if self.rank < 1:
            raise ParameterError("rank must be >= 1")
        if self.clusters < 1:
            raise ParameterError("clusters must be >= 1")
        if self.clusters > n_reference:
            raise ParameterError(f"clusters={self.clusters} exceeds the reference set size {n_reference}")
        if self.als_iterations < 1 or self.kmeans_max_iterations < 1:
            raise ParameterError("iteration counts must be >= 1")
        if not self.als_tol >= 0:
            raise ParameterError("als_tol must be >= 0")


@dataclass(frozen=True)
class RankedList:
    """Candidates sorted by score, highest first."""

    entries: tuple[tuple[int, float], ...]

    @classmethod
    def from_scores(cls, nodes: Sequence[int], scores) -> "RankedList":
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (len(nodes),):
            raise ValueError("one score per node is required")
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise ValueError("scores must be finite and non-negative")
        order = np.argsort(-np.round(scores, TIE_DECIMALS), kind="stable")
        return cls(tuple((int(nodes[o]), float(scores[o])) for o in order))

    @property
    def nodes(self) -> list[int]:
        return [v for v, _ in self.entries]

    @property
    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.entries])

    def rank_of(self, node: int) -> int:
        """1-based rank of ``node``."""
        return self.nodes.index(node) + 1

    def score_of(self, node: int) -> float:
        return dict(self.entries)[node]

    def __len__(self):
        return len(self.entries)


def kmeans(points, k: int, seed: int = 0, max_iterations: int = 100):
    """Lloyd's algorithm from a seeded k-means++ start.

    Stops when assignments stop changing or after ``max_iterations``. A
    cluster that loses all its points is re-seeded with the point farthest
    from its center, taken from a cluster that has points to spare.

    Returns
    -------
    centers : (k, F) ndarray
    assignments : (M,) int ndarray
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("points must be a 2-D array")
    m = X.shape[0]
    if not 1 <= k <= m:
        raise ParameterError(f"k={k} must lie in [1, {m}]")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(m)]
    d2 = kernels.min_distances(X, centers[:1])[0]
    for c in range(1, k):
        total = d2.sum()
        idx = rng.choice(m, p=d2 / total) if total > 0 else rng.integers(m)
        centers[c] = X[idx]
        d2 = np.minimum(d2, kernels.min_distances(X, centers[c:c + 1])[0])

    assign = None
    for _ in range(max_iterations):
        dist, new_assign = kernels.min_distances(X, centers)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        counts = np.bincount(assign, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # Only take from clusters that keep at least one point.
            donor = np.where(counts[assign] > 1, dist, -1.0)
            far = int(np.argmax(donor))
            counts[assign[far]] -= 1
            counts[c] += 1
            assign[far] = c
            dist[far] = 0.0
        for c in range(k):
            centers[c] = X[assign == c].mean(axis=0)
    return centers, assign


def anomaly_scores(candidate_features, centers) -> np.ndarray:
    """Euclidean distance from every candidate row to its nearest center."""
    feats = np.atleast_2d(np.asarray(candidate_features, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if feats.shape[1] != centers.shape[1]:
        raise ValueError("candidate features and centers differ in dimension")
    return np.sqrt(kernels.min_distances(feats, centers)[0])


def query_tensor(graph: HinGraph, nodes: Sequence[int], metapaths: Sequence[MetaPath] | None = None,
                 max_length: int = 2) -> SparseTensor3:
    """Rows of the network tensor for ``nodes`` only."""
    if metapaths is None:
        metapaths = enumerate_metapaths(schema_of(graph), max_length)
    return build_network_tensor(graph, metapaths, rows=list(nodes))


def score_query(tensor: SparseTensor3, reference_rows: Sequence[int], candidate_rows: Sequence[int],
                params: QanetParams) -> np.ndarray:
    """QANet scores given a tensor whose rows include reference and candidates."""
    x_ref = slice_rows(tensor, reference_rows)
    x_cand = slice_rows(tensor, candidate_rows)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        factors = cp_als(x_ref, params.rank, params.als_iterations, params.seed, tol=params.als_tol)
    cand_features = project_mode1(x_cand, factors)
    centers, _ = kmeans(factors.features, params.clusters, params.seed, params.kmeans_max_iterations)
    return anomaly_scores(cand_features, centers)


def run_query(graph: HinGraph, query: AnomalyQuery, params: QanetParams = QanetParams(),
              tensor: SparseTensor3 | None = None) -> RankedList:
    """Rank ``query.candidates`` by distance to the reference clusters.

    ``tensor`` may be a precomputed full network tensor (rows = all nodes);
    otherwise only the rows the query needs are built.
    """
    params.validate(len(query.reference))
    if params.rank > len(query.reference):
        warnings.warn(f"rank {params.rank} exceeds the reference set size {len(query.reference)}",
                      RuntimeWarning, stacklevel=2)
    if tensor is None:
        nodes = list(dict.fromkeys(query.reference + query.candidates))
        tensor = query_tensor(graph, nodes, max_length=params.max_length)
        pos = {v: r for r, v in enumerate(nodes)}
        ref_rows = [pos[v] for v in query.reference]
        cand_rows = [pos[v] for v in query.candidates]
    else:
        ref_rows, cand_rows = list(query.reference), list(query.candidates)
    scores = score_query(tensor, ref_rows, cand_rows, params)
    return RankedList.from_scores(query.candidates, scores)


def read_query_file(path, graph: HinGraph) -> AnomalyQuery:
    """Parse ``ref: a,b,...`` / ``cand: c,d,...`` lines of node labels."""
    sets = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in ("ref", "cand"):
            raise QueryError(f"{path}:{lineno}: expected 'ref: ...' or 'cand: ...'")
        sets[key] = [lab.strip() for lab in rest.split(",") if lab.strip()]
    for key in ("ref", "cand"):
        if key not in sets:
            raise QueryError(f"{path}: missing '{key}:' line")
    return AnomalyQuery.create(graph, [graph.index_of(v) for v in sets["ref"]],
                               [graph.index_of(v) for v in sets["cand"]])


def write_query_file(path, graph: HinGraph, query: AnomalyQuery) -> None:
    labels = graph.node_labels
    Path(path).write_text(f"ref: {','.join(labels[v] for v in query.reference)}\n"
                          f"cand: {','.join(labels[v] for v in query.candidates)}\n", encoding="utf-8")


def format_ranked(ranked: RankedList, labels: Sequence[str]) -> str:
    return "".join(f"{r}\t{labels[v]}\t{s:.6f}\n" for r, (v, s) in enumerate(ranked.entries, start=1))
