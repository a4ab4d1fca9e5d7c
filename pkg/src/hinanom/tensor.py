"""Sparse 3-way meta-path tensors and CP (PARAFAC) decomposition by ALS.

Layout convention used throughout: the mode-1 unfolding of an ``I x J x K``
tensor puts entry ``(i, j, k)`` at column ``j + k*J``, which is the row
layout produced by ``khatri_rao(C, B)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ParameterError
from .graph import HinGraph
from .metapath import MetaPath, count_matrix

RIDGE = 1e-10
FIT_TOL = 1e-6
_COND_LIMIT = 1e12
_DENSE_CHUNK = 4_000_000
# Relative squared residuals below this are recomputed exactly.
_EXACT_BELOW = 1e-8


@dataclass(frozen=True)
class SparseTensor3:
    """Coordinate-form ``I x J x K`` tensor with unique coordinates."""

    dims: tuple[int, int, int]
    i: np.ndarray
    j: np.ndarray
    k: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        for name in ("i", "j", "k"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).ravel())
        object.__setattr__(self, "vals", np.asarray(self.vals, dtype=np.float64).ravel())
        n = self.vals.size
        if not (self.i.size == self.j.size == self.k.size == n):
            raise ValueError("coordinate arrays differ in length")
        for idx, d in zip((self.i, self.j, self.k), dims):
            if n and (idx.min() < 0 or idx.max() >= d):
                raise ValueError("tensor index out of range")
        if not np.all(np.isfinite(self.vals)):
            raise ValueError("tensor values must be finite")
        if n and np.unique(self.linear_index()).size != n:
            raise ValueError("duplicate tensor coordinates")

    @classmethod
    def from_dense(cls, dense) -> "SparseTensor3":
        dense = np.asarray(dense, dtype=np.float64)
        i, j, k = np.nonzero(dense)
        return cls(dense.shape, i, j, k, dense[i, j, k])

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def linear_index(self) -> np.ndarray:
        _, nj, nk = self.dims
        return (self.i * nj + self.j) * nk + self.k

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dims)
        out[self.i, self.j, self.k] = self.vals
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.vals, self.vals)))


def build_network_tensor(graph: HinGraph, metapaths: Sequence[MetaPath],
                         rows: Sequence[int] | None = None) -> SparseTensor3:
    """Stack meta-path count matrices as frontal slices ``X[:, :, k]``.

    With ``rows`` only those nodes' rows are materialized; the result equals
    ``slice_rows(build_network_tensor(graph, metapaths), rows)``.
    """
    if not metapaths:
        raise ParameterError("at least one meta-path is required")
    n = graph.n_nodes
    n_rows = n if rows is None else len(rows)
    parts_i, parts_j, parts_k, parts_v = [], [], [], []
    for k, mp in enumerate(metapaths):
        coo = count_matrix(graph, mp, rows=rows).counts.tocoo()
        parts_i.append(coo.row)
        parts_j.append(coo.col)
        parts_k.append(np.full(coo.nnz, k, dtype=np.int64))
        parts_v.append(coo.data.astype(np.float64))
    return SparseTensor3((n_rows, n, len(metapaths)), np.concatenate(parts_i), np.concatenate(parts_j),
                         np.concatenate(parts_k), np.concatenate(parts_v))


def slice_rows(tensor: SparseTensor3, nodes: Sequence[int]) -> SparseTensor3:
    """Sub-tensor whose row ``r`` is row ``nodes[r]`` of ``tensor``."""
    nodes = np.asarray(list(nodes), dtype=np.int64)
    if nodes.size == 0:
        raise ParameterError("slice_rows needs at least one node")
    if nodes.min() < 0 or nodes.max() >= tensor.dims[0]:
        raise ParameterError("row id out of range")
    if np.unique(nodes).size != nodes.size:
        raise ParameterError("duplicate row ids")
    pos = np.full(tensor.dims[0], -1, dtype=np.int64)
    pos[nodes] = np.arange(nodes.size)
    new_i = pos[tensor.i]
    keep = new_i >= 0
    return SparseTensor3((nodes.size, tensor.dims[1], tensor.dims[2]), new_i[keep], tensor.j[keep],
                         tensor.k[keep], tensor.vals[keep])


def unfold_mode1(tensor: SparseTensor3) -> sp.csr_matrix:
    ni, nj, nk = tensor.dims
    return sp.csr_matrix((tensor.vals, (tensor.i, tensor.j + tensor.k * nj)), shape=(ni, nj * nk))


def khatri_rao(C: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; row ``j + k*J`` holds ``C[k] * B[j]``."""
    C = np.asarray(C, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if C.ndim != 2 or B.ndim != 2 or C.shape[1] != B.shape[1]:
        raise ValueError(f"khatri_rao needs equal column counts, got {C.shape} and {B.shape}")
    return (C[:, None, :] * B[None, :, :]).reshape(C.shape[0] * B.shape[0], C.shape[1])


def hadamard(M1: np.ndarray, M2: np.ndarray) -> np.ndarray:
    M1 = np.asarray(M1, dtype=np.float64)
    M2 = np.asarray(M2, dtype=np.float64)
    if M1.shape != M2.shape:
        raise ValueError(f"hadamard needs equal shapes, got {M1.shape} and {M2.shape}")
    return M1 * M2


def solve_gram(rhs: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Solve ``X @ gram = rhs`` for symmetric PSD ``gram``.

    Well-conditioned systems go through a Cholesky solve. Otherwise the
    eigenvalues below ``RIDGE * max(diag)`` are dropped, which is the
    vanishing-ridge limit and gives the minimum-norm least-squares solution.
    """
    f = gram.shape[0]
    scale = float(np.max(np.diag(gram))) if f else 0.0
    if scale <= 0.0:
        return np.zeros_like(rhs)
    if np.linalg.cond(gram) < _COND_LIMIT:
        try:
            chol = np.linalg.cholesky(gram)
            y = np.linalg.solve(chol, rhs.T)
            return np.linalg.solve(chol.T, y).T
        except np.linalg.LinAlgError:
            pass
    w, V = np.linalg.eigh(gram)
    keep = w > RIDGE * scale
    return ((rhs @ V[:, keep]) / w[keep]) @ V[:, keep].T


class _ModeView:
    """Entries of a tensor regrouped by one mode, ready for MTTKRP."""

    def __init__(self, tensor: SparseTensor3, mode: int):
        idx = (tensor.i, tensor.j, tensor.k)
        others = [m for m in range(3) if m != mode]
        order, self.indptr = kernels.group_entries(idx[mode], tensor.dims[mode])
        self.others = others
        self.idx_a = np.ascontiguousarray(idx[others[0]][order])
        self.idx_b = np.ascontiguousarray(idx[others[1]][order])
        self.vals = np.ascontiguousarray(tensor.vals[order])

    def mttkrp(self, factors):
        return kernels.mttkrp(self.indptr, self.idx_a, self.idx_b, self.vals,
                              factors[self.others[0]], factors[self.others[1]])


@dataclass
class CpFactors:
    """CP model ``X ~ sum_f scales[f] * A[:, f] o B[:, f] o C[:, f]``.

    Columns of A, B and C have unit norm (or are zero); all magnitude lives
    in ``scales``. ``features`` gives ``A @ diag(scales)``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    scales: np.ndarray
    residuals: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def rank(self) -> int:
        return int(self.scales.size)

    @property
    def features(self) -> np.ndarray:
        return self.A * self.scales

    def reconstruct(self) -> np.ndarray:
        return np.einsum("if,jf,kf,f->ijk", self.A, self.B, self.C, self.scales)

    def permuted(self, perm) -> "CpFactors":
        perm = np.asarray(perm)
        return CpFactors(self.A[:, perm], self.B[:, perm], self.C[:, perm], self.scales[perm])


def _normalize(M):
    norms = np.linalg.norm(M, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return M / safe, norms


def _residual_sq(tensor: SparseTensor3, A, B, C, row_order=None) -> float:
    """Exact squared residual, densified one block of rows at a time."""
    ni, nj, nk = tensor.dims
    if row_order is None:
        row_order = kernels.group_entries(tensor.i, ni)
    order, indptr = row_order
    step = max(1, _DENSE_CHUNK // max(1, nj * nk))
    total = 0.0
    for lo in range(0, ni, step):
        hi = min(ni, lo + step)
        block = np.einsum("if,jf,kf->ijk", A[lo:hi], B, C)
        sel = order[indptr[lo]:indptr[hi]]
        block[tensor.i[sel] - lo, tensor.j[sel], tensor.k[sel]] -= tensor.vals[sel]
        total += float(np.einsum("ijk,ijk->", block, block))
    return total


def fit(tensor: SparseTensor3, factors: CpFactors) -> float:
    """Relative fit ``1 - ||X - model|| / ||X||``."""
    if tensor.dims != (factors.A.shape[0], factors.B.shape[0], factors.C.shape[0]):
        raise ParameterError("factor shapes do not match tensor dims")
    res = np.sqrt(_residual_sq(tensor, factors.features, factors.B, factors.C))
    normx = tensor.norm()
    if normx == 0.0:
        return 1.0 if res == 0.0 else 0.0
    return 1.0 - res / normx


def _solve_a(view0, tensor, row_order, normx_sq, B, C):
    """Mode-1 least-squares A for fixed B, C and its relative squared residual.

    The residual comes from ``||X||^2 - 2<X, M> + ||M||^2``, which costs
    O(nnz * F). Below ``_EXACT_BELOW`` that difference loses its digits to
    cancellation, so the residual is recomputed exactly.
    """
    m0 = view0.mttkrp([None, B, C])
    A = solve_gram(m0, (C.T @ C) * (B.T @ B))
    model_sq = float(np.sum((A.T @ A) * (B.T @ B) * (C.T @ C)))
    res = max(normx_sq - 2.0 * float(np.sum(A * m0)) + model_sq, 0.0) / normx_sq
    if res < _EXACT_BELOW:
        res = _residual_sq(tensor, A, B, C, row_order) / normx_sq
    return A, res


def _extrapolate(view0, tensor, row_order, normx_sq, prev_bc, cur, res, it):
    """Line search along the last B, C step; A is re-solved exactly.

    The move is kept only when it lowers the residual, so the recorded
    sequence stays non-increasing.
    """
    A, B, C = cur
    step = it ** (1.0 / 3.0)
    B2, _ = _normalize(prev_bc[0] + step * (B - prev_bc[0]))
    C2, _ = _normalize(prev_bc[1] + step * (C - prev_bc[1]))
    A2, res2 = _solve_a(view0, tensor, row_order, normx_sq, B2, C2)
    if res2 < res:
        return A2, B2, C2, res2
    return A, B, C, res


def cp_als(tensor: SparseTensor3, rank: int = 4, iterations: int = 50, seed: int = 0,
           tol: float = FIT_TOL, line_search: bool = True) -> CpFactors:
    """Fit a rank-``rank`` CP model by alternating least squares.

    B and C start from seeded uniform [0, 1) draws and A from a first mode-1
    solve. Each sweep updates B, C and then A, each by an exact
    least-squares solve, so the squared residual never increases; A is
    always the mode-1 least-squares solution for the final B and C.

    With ``line_search`` each sweep also tries an extrapolated B, C (step
    ``it**(1/3)`` along the last update) and keeps it if the residual drops,
    which shortens the slow stretches plain ALS shows on collinear factors.

    ``residuals`` records ``||X - model||^2 / ||X||^2`` after every sweep.
    Iteration stops after ``iterations`` sweeps or once the relative fit
    changes by less than ``tol``.
    """
    if rank < 1:
        raise ParameterError("rank must be >= 1")
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    ni, nj, nk = tensor.dims
    if rank > ni:
        warnings.warn(f"decomposition rank {rank} exceeds the {ni} rows being decomposed; "
                      "the model is degenerate", RuntimeWarning, stacklevel=2)
    rng = np.random.default_rng(seed)
    B = rng.random((nj, rank))
    C = rng.random((nk, rank))
    normx_sq = float(np.dot(tensor.vals, tensor.vals))
    if normx_sq == 0.0:
        return CpFactors(np.zeros((ni, rank)), _normalize(B)[0], _normalize(C)[0], np.zeros(rank),
                         residuals=[0.0], n_iter=0)

    views = [_ModeView(tensor, m) for m in range(3)]
    row_order = kernels.group_entries(tensor.i, ni)
    B, _ = _normalize(B)
    C, _ = _normalize(C)
    A = solve_gram(views[0].mttkrp([None, B, C]), (C.T @ C) * (B.T @ B))
    residuals = []
    prev_fit = None
    prev_bc = None
    it = 0
    for it in range(1, iterations + 1):
        old_bc = (B, C)
        B = solve_gram(views[1].mttkrp([A, None, C]), (C.T @ C) * (A.T @ A))
        B, norms = _normalize(B)
        C = C * norms
        C = solve_gram(views[2].mttkrp([A, B, None]), (B.T @ B) * (A.T @ A))
        C, norms = _normalize(C)
        A = A * norms
        A, res = _solve_a(views[0], tensor, row_order, normx_sq, B, C)
        if line_search and prev_bc is not None:
            A, B, C, res = _extrapolate(views[0], tensor, row_order, normx_sq, prev_bc, (A, B, C), res, it)
        prev_bc = old_bc if line_search else None
        residuals.append(res)
        cur_fit = 1.0 - np.sqrt(res)
        if prev_fit is not None and abs(cur_fit - prev_fit) < tol:
            break
        prev_fit = cur_fit
    A, scales = _normalize(A)
    return CpFactors(A, B, C, scales, residuals=residuals, n_iter=it)


def project_mode1(candidate_tensor: SparseTensor3, factors: CpFactors) -> np.ndarray:
    """Candidate loadings ``X_C(1) (C kr B) (C'C * B'B)^-1``.

    B and C are the unit-norm factors, so the returned rows live in the same
    space as ``factors.features`` and are directly comparable to them.
    """
    ni, nj, nk = candidate_tensor.dims
    if nj != factors.B.shape[0] or nk != factors.C.shape[0]:
        raise ParameterError(f"candidate tensor dims {candidate_tensor.dims} do not match factors "
                             f"(J={factors.B.shape[0]}, K={factors.C.shape[0]})")
    B, C = factors.B, factors.C
    rhs = _ModeView(candidate_tensor, 0).mttkrp([None, B, C])
    return solve_gram(rhs, hadamard(C.T @ C, B.T @ B))


def write_factors_tsv(path, matrix: np.ndarray) -> None:
    """Row-major TSV dump, one matrix row per line."""
    np.savetxt(path, np.atleast_2d(matrix), delimiter="\t", fmt="%.10g")
