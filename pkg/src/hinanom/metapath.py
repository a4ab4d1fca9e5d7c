"""Meta-path enumeration and instance-count matrices."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CountOverflowError, SchemaError
from .graph import HinGraph, NetworkSchema

_INT64_LIMIT = float(2**63)


@dataclass(frozen=True)
class MetaPath:
    """A composable sequence of relation steps.

    Step ``s`` follows relation ``relations[s]`` forwards, or backwards when
    ``inverted[s]`` is set. Backward steps only appear for relations that
    have no inverse relation in the schema (see :func:`make_metapath`), which
    keeps :func:`reverse` an involution.
    """

    relations: tuple[int, ...]
    inverted: tuple[bool, ...]
    node_types: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.relations)

    @property
    def steps(self):
        return tuple(zip(self.relations, self.inverted))

    def name(self, schema: NetworkSchema) -> str:
        labels = [schema.type_labels[t] for t in self.node_types]
        sep = "" if all(len(lab) == 1 for lab in labels) else "-"
        return sep.join(labels)

    def describe(self, schema: NetworkSchema) -> str:
        parts = [schema.relations[r].label + ("^T" if inv else "") for r, inv in self.steps]
        return f"{self.name(schema)} [{', '.join(parts)}]"


def make_metapath(schema: NetworkSchema, steps) -> MetaPath:
    """Build a meta-path from relation ids or ``(relation, inverted)`` pairs."""
    rels, invs = [], []
    for step in steps:
        r, inv = (step, False) if isinstance(step, (int, np.integer)) else step
        r = int(r)
        if not 0 <= r < len(schema.relations):
            raise SchemaError(f"relation id {r} not in schema")
        if inv and schema.inverse[r] >= 0:
            r, inv = schema.inverse[r], False
        rels.append(r)
        invs.append(bool(inv))
    if not rels:
        raise SchemaError("a meta-path needs at least one relation")
    types = []
    for r, inv in zip(rels, invs):
        rel = schema.relations[r]
        a, b = (rel.dst_type, rel.src_type) if inv else (rel.src_type, rel.dst_type)
        if types and types[-1] != a:
            raise SchemaError("relations in meta-path do not compose")
        if not types:
            types.append(a)
        types.append(b)
    return MetaPath(tuple(rels), tuple(invs), tuple(types))


def reverse(metapath: MetaPath, schema: NetworkSchema) -> MetaPath:
    steps = []
    for r, inv in reversed(metapath.steps):
        if inv:
            steps.append((r, False))
        elif schema.inverse[r] >= 0:
            steps.append((schema.inverse[r], False))
        else:
            steps.append((r, True))
    return make_metapath(schema, steps)


def is_symmetric(metapath: MetaPath, schema: NetworkSchema) -> bool:
    return reverse(metapath, schema) == metapath


def symmetric_closure(metapath: MetaPath, schema: NetworkSchema) -> MetaPath:
    """``P`` followed by its reverse; e.g. APV becomes APVPA."""
    return make_metapath(schema, metapath.steps + reverse(metapath, schema).steps)


def enumerate_metapaths(schema: NetworkSchema, max_length: int = 2) -> list[MetaPath]:
    """All forward relation sequences of length 1..max_length that compose.

    Sorted lexicographically by relation-id sequence; the position in this
    list is the tensor slice index.
    """
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    rels = schema.relations
    found = []
    frontier = [(r.id,) for r in rels]
    for _ in range(max_length):
        found.extend(frontier)
        nxt = []
        for seq in frontier:
            end = rels[seq[-1]].dst_type
            nxt.extend(seq + (r.id,) for r in rels if r.src_type == end)
        frontier = nxt
    found.sort()
    return [make_metapath(schema, seq) for seq in found]


@dataclass(frozen=True)
class CountMatrix:
    """``counts[i, j]`` is the number of instances of ``metapath`` from i to j.

    When ``rows`` is set the matrix only holds those source rows, in order.
    """

    metapath: MetaPath
    counts: sp.csr_matrix
    rows: tuple[int, ...] | None = None


def _checked_product(left: sp.csr_matrix, right: sp.csr_matrix) -> sp.csr_matrix:
    # Entries are non-negative, so partial sums never exceed the final value
    # and an overflow happens only if a true count reaches 2**63.
    if left.nnz and right.nnz:
        bound = float(np.max(left.sum(axis=1, dtype=np.float64))) * float(right.max())
        if bound >= _INT64_LIMIT / 4:
            approx = left.astype(np.float64) @ right.astype(np.float64)
            if approx.nnz and approx.max() >= _INT64_LIMIT * (1 - 1e-9):
                raise CountOverflowError("meta-path instance count exceeds the int64 range")
    out = (left @ right).tocsr()
    out.sort_indices()
    return out


def _step_matrix(graph: HinGraph, r: int, inv: bool) -> sp.csr_matrix:
    if r >= graph.n_relations:
        raise SchemaError(f"relation id {r} absent from graph")
    a = graph.relation_adj(r)
    return a.T.tocsr() if inv else a


def count_matrix(graph: HinGraph, metapath: MetaPath, rows: Sequence[int] | None = None) -> CountMatrix:
    """Instance counts as the product of per-relation adjacency matrices.

    Passing ``rows`` restricts the result to those source nodes, which costs
    only as much as the paths starting there.
    """
    steps = metapath.steps
    if rows is None:
        m = _step_matrix(graph, *steps[0])
        rows_t = None
    else:
        rows_t = tuple(int(v) for v in rows)
        n = graph.n_nodes
        sel = sp.csr_matrix((np.ones(len(rows_t), dtype=np.int64), (np.arange(len(rows_t)), rows_t)),
                            shape=(len(rows_t), n))
        m = _checked_product(sel, _step_matrix(graph, *steps[0]))
    for r, inv in steps[1:]:
        m = _checked_product(m, _step_matrix(graph, r, inv))
    m = sp.csr_matrix(m, dtype=np.int64)
    m.eliminate_zeros()
    return CountMatrix(metapath, m, rows_t)


def write_count_cache(directory, graph: HinGraph, schema: NetworkSchema, metapaths: Sequence[MetaPath]) -> Path:
    """Store count matrices as ``i<TAB>j<TAB>count`` files plus a manifest.

    The manifest lists slices in enumeration order: ``k``, name, file name
    and the step list (``relation`` or ``relation~`` for a backward step).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"# nodes\t{graph.n_nodes}"]
    for k, mp in enumerate(metapaths):
        fname = f"slice_{k:03d}.tsv"
        coo = count_matrix(graph, mp).counts.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(directory / fname, "w", encoding="utf-8") as fh:
            fh.writelines(f"{i}\t{j}\t{c}\n" for i, j, c in
                          zip(coo.row[order].tolist(), coo.col[order].tolist(), coo.data[order].tolist()))
        steps = ",".join(f"{r}{'~' if inv else ''}" for r, inv in mp.steps)
        lines.append(f"{k}\t{mp.name(schema)}\t{fname}\t{steps}")
    (directory / "manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return directory / "manifest.tsv"


def read_count_cache(directory, schema: NetworkSchema) -> list[CountMatrix]:
    directory = Path(directory)
    n = None
    out = []
    for line in (directory / "manifest.tsv").read_text(encoding="utf-8").splitlines():
        if line.startswith("# nodes"):
            n = int(line.split("\t")[1])
            continue
        if not line.strip():
            continue
        _, _, fname, steps = line.split("\t")
        mp = make_metapath(schema, [(int(s.rstrip("~")), s.endswith("~")) for s in steps.split(",")])
        data = np.loadtxt(directory / fname, dtype=np.int64, ndmin=2).reshape(-1, 3)
        m = sp.csr_matrix((data[:, 2], (data[:, 0], data[:, 1])), shape=(n, n), dtype=np.int64)
        out.append(CountMatrix(mp, m))
    return out
