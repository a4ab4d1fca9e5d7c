"""Closed-form meta-path outlier scorers: NetOut, PathSim and CosSim.

Each similarity ``Omega`` is summed over the reference set and turned into a
distance ``clamp(1 - Omega / |S_R|, 0, 1)``; candidates are ranked by
distance, highest first.
"""
from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import HinGraph, NetworkSchema, schema_of
from .metapath import CountMatrix, MetaPath, count_matrix, make_metapath
from .qanet import AnomalyQuery, RankedList

METHODS = ("netout", "pathsim", "cossim")


def _to_distance(omega, n_ref):
    return np.clip(1.0 - np.asarray(omega, dtype=np.float64) / n_ref, 0.0, 1.0)


def _block(counts: CountMatrix, rows, cols) -> np.ndarray:
    m = counts.counts
    if counts.rows is not None:
        pos = {v: r for r, v in enumerate(counts.rows)}
        rows = [pos[v] for v in rows]
    return np.asarray(m[rows][:, cols].todense(), dtype=np.float64)


def _diag(counts: CountMatrix, nodes) -> np.ndarray:
    return np.array([_block(counts, [v], [v])[0, 0] for v in nodes])


def netout_distance(cross, cand_self, n_ref) -> np.ndarray:
    """Distances from ``cross[c, r] = pi(c, r)`` and ``cand_self[c] = pi(c, c)``."""
    cross = np.asarray(cross, dtype=np.float64)
    cand_self = np.asarray(cand_self, dtype=np.float64)
    isolated = cand_self == 0
    if isolated.any():
        warnings.warn(f"{int(isolated.sum())} candidate(s) have no meta-path instance to themselves; "
                      "assigned distance 1", RuntimeWarning, stacklevel=3)
    safe = np.where(isolated, 1.0, cand_self)
    dist = _to_distance(cross.sum(axis=1) / safe, n_ref)
    dist[isolated] = 1.0
    return dist


def pathsim_distance(cross, cand_self, ref_self, n_ref) -> np.ndarray:
    cross = np.asarray(cross, dtype=np.float64)
    denom = (np.asarray(cand_self, dtype=np.float64)[:, None] + np.asarray(ref_self, dtype=np.float64)[None, :])
    sim = np.divide(2.0 * cross, denom, out=np.zeros_like(cross), where=denom > 0)
    return _to_distance(sim.sum(axis=1), n_ref)


def cossim_distance(cand_vectors, ref_vectors, n_ref) -> np.ndarray:
    """Distances from neighbour vectors (rows), dense or sparse."""
    cv = sp.csr_matrix(cand_vectors, dtype=np.float64)
    rv = sp.csr_matrix(ref_vectors, dtype=np.float64)
    dots = np.asarray((cv @ rv.T).todense())
    cn = np.sqrt(np.asarray(cv.multiply(cv).sum(axis=1)).ravel())
    rn = np.sqrt(np.asarray(rv.multiply(rv).sum(axis=1)).ravel())
    denom = cn[:, None] * rn[None, :]
    cos = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
    return _to_distance(cos.sum(axis=1), n_ref)


def netout(counts: CountMatrix, query: AnomalyQuery) -> RankedList:
    """Rank by NetOut; ``counts`` must be for a symmetric meta-path."""
    cand, ref = list(query.candidates), list(query.reference)
    d = netout_distance(_block(counts, cand, ref), _diag(counts, cand), len(ref))
    return RankedList.from_scores(cand, d)


def pathsim(counts: CountMatrix, query: AnomalyQuery) -> RankedList:
    cand, ref = list(query.candidates), list(query.reference)
    d = pathsim_distance(_block(counts, cand, ref), _diag(counts, cand), _diag(counts, ref), len(ref))
    return RankedList.from_scores(cand, d)


def cossim(neighbor_vectors: CountMatrix, query: AnomalyQuery) -> RankedList:
    """Rank by CosSim; rows of ``neighbor_vectors`` are the count vectors of the (asymmetric) meta-path."""
    m = neighbor_vectors.counts
    cand, ref = list(query.candidates), list(query.reference)
    if neighbor_vectors.rows is not None:
        pos = {v: r for r, v in enumerate(neighbor_vectors.rows)}
        cand_r, ref_r = [pos[v] for v in cand], [pos[v] for v in ref]
    else:
        cand_r, ref_r = cand, ref
    return RankedList.from_scores(cand, cossim_distance(m[cand_r], m[ref_r], len(ref)))


def default_rhos(schema: NetworkSchema, node_type: int) -> list[MetaPath]:
    """Every single-relation meta-path leaving ``node_type``."""
    return [make_metapath(schema, [r.id]) for r in schema.relations if r.src_type == node_type]


def baseline_distances(graph: HinGraph, query: AnomalyQuery, method: str,
                       rhos: Sequence[MetaPath] | None = None, schema: NetworkSchema | None = None) -> np.ndarray:
    """Distances of ``query.candidates`` averaged over several meta-paths.

    For every ``rho`` only the rows of the query nodes are counted. NetOut
    and PathSim use the counts of ``rho`` followed by its reverse, obtained
    as ``M @ M.T``; CosSim uses the rows of ``M`` as neighbour vectors.
    """
    if method not in METHODS:
        raise ValueError(f"unknown baseline method {method!r}")
    schema = schema or schema_of(graph)
    if rhos is None:
        rhos = default_rhos(schema, query.node_type)
    if not rhos:
        return np.ones(len(query.candidates))
    cand, ref = list(query.candidates), list(query.reference)
    n_c = len(cand)
    nodes = cand + ref
    total = np.zeros(n_c)
    for rho in rhos:
        M = count_matrix(graph, rho, rows=nodes).counts.astype(np.float64)
        if method == "cossim":
            total += cossim_distance(M[:n_c], M[n_c:], len(ref))
            continue
        sym = np.asarray((M @ M.T).todense())
        cross = sym[:n_c, n_c:]
        diag = np.diag(sym)
        if method == "netout":
            total += netout_distance(cross, diag[:n_c], len(ref))
        else:
            total += pathsim_distance(cross, diag[:n_c], diag[n_c:], len(ref))
    return total / len(rhos)


def rank_baseline(graph: HinGraph, query: AnomalyQuery, method: str,
                  rhos: Sequence[MetaPath] | None = None) -> RankedList:
    return RankedList.from_scores(query.candidates, baseline_distances(graph, query, method, rhos))
