"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Every kernel comes in two flavours, ``*_numba`` and ``*_numpy``; the bare
name is bound at import time according to :data:`hinanom._accel.USE_NUMBA`.
Both flavours accumulate each output row in the order of the input entries,
so results do not depend on the numba thread count.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange

__all__ = ["mttkrp", "mttkrp_numba", "mttkrp_numpy", "min_distances",
           "min_distances_numba", "min_distances_numpy", "BACKEND"]


def group_entries(out_idx, n_out):
    """Stable sort permutation and CSR-style row pointer for ``out_idx``."""
    order = np.argsort(out_idx, kind="stable")
    counts = np.bincount(out_idx, minlength=n_out)
    indptr = np.zeros(n_out + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return order, indptr


@njit(parallel=True, cache=True)
def _mttkrp_rows(indptr, idx_a, idx_b, vals, fa, fb):
    n_out = indptr.shape[0] - 1
    rank = fa.shape[1]
    out = np.zeros((n_out, rank))
    for r in prange(n_out):
        for e in range(indptr[r], indptr[r + 1]):
            a = idx_a[e]
            b = idx_b[e]
            v = vals[e]
            for f in range(rank):
                out[r, f] += v * fa[a, f] * fb[b, f]
    return out


def mttkrp_numba(indptr, idx_a, idx_b, vals, fa, fb):
    """Matricized-tensor times Khatri-Rao product on row-grouped COO entries.

    Parameters
    ----------
    indptr : (n_out + 1,) int64
        Row pointer; entries ``indptr[r]:indptr[r+1]`` belong to output row r.
    idx_a, idx_b : (nnz,) int64
        Indices into ``fa`` and ``fb`` for every entry, in grouped order.
    vals : (nnz,) float64
    fa, fb : (*, F) float64
        The two factor matrices of the modes being contracted.

    Returns
    -------
    out : (n_out, F) float64
        ``out[r, f] = sum_e vals[e] * fa[idx_a[e], f] * fb[idx_b[e], f]``.
    """
    return _mttkrp_rows(indptr, idx_a, idx_b, vals,
                        np.ascontiguousarray(fa, dtype=np.float64),
                        np.ascontiguousarray(fb, dtype=np.float64))


def mttkrp_numpy(indptr, idx_a, idx_b, vals, fa, fb):
    n_out = indptr.shape[0] - 1
    rank = fa.shape[1]
    rows = np.repeat(np.arange(n_out), np.diff(indptr))
    prod = vals[:, None] * fa[idx_a] * fb[idx_b]
    out = np.empty((n_out, rank))
    for f in range(rank):
        out[:, f] = np.bincount(rows, weights=prod[:, f], minlength=n_out)
    return out


@njit(parallel=True, cache=True)
def _min_dist(points, centers):
    m = points.shape[0]
    k = centers.shape[0]
    dim = points.shape[1]
    dist = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    for i in prange(m):
        best = np.inf
        best_j = 0
        for j in range(k):
            s = 0.0
            for f in range(dim):
                d = points[i, f] - centers[j, f]
                s += d * d
            if s < best:
                best = s
                best_j = j
        dist[i] = best
        arg[i] = best_j
    return dist, arg


def min_distances_numba(points, centers):
    """Squared distance from each point to its nearest center, and that center.

    Ties go to the lowest center index.
    """
    return _min_dist(np.ascontiguousarray(points, dtype=np.float64),
                     np.ascontiguousarray(centers, dtype=np.float64))


def min_distances_numpy(points, centers):
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    diff = points[:, None, :] - centers[None, :, :]
    sq = np.einsum("ijf,ijf->ij", diff, diff)
    arg = np.argmin(sq, axis=1)
    return sq[np.arange(len(points)), arg], arg.astype(np.int64)


if USE_NUMBA:
    BACKEND = "numba"
    mttkrp = mttkrp_numba
    min_distances = min_distances_numba
else:
    BACKEND = "numpy"
    mttkrp = mttkrp_numpy
    min_distances = min_distances_numpy
