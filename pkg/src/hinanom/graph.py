"""Heterogeneous network model, schema derivation and TSV ingestion."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import IngestionError, SchemaError

REVERSE_SUFFIX = "^-1"


def reverse_label(label: str) -> str:
    """Name of the auto-generated reverse relation for ``label``."""
    if label.endswith(REVERSE_SUFFIX):
        return label[: -len(REVERSE_SUFFIX)]
    return label + REVERSE_SUFFIX


class HinGraph:
    """Typed nodes plus typed directed edges.

    Nodes carry dense ids ``0..N-1``; ``node_type[v]`` is an index into
    ``type_labels``. Edge ``e`` runs ``src[e] -> dst[e]`` under relation
    ``rel[e]``, an index into ``relation_labels``; ``relation_ends[r]`` holds
    the (source type, destination type) the relation connects. Parallel edges
    are kept and show up as multiplicities in :meth:`relation_adj`.

    Instances are treated as immutable.
    """

    def __init__(self, node_labels, type_labels, node_type, relation_labels,
                 relation_ends, src, dst, rel):
        self.node_labels = tuple(node_labels)
        self.type_labels = tuple(type_labels)
        self.node_type = np.asarray(node_type, dtype=np.int64)
        self.relation_labels = tuple(relation_labels)
        self.relation_ends = tuple((int(a), int(b)) for a, b in relation_ends)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.rel = np.asarray(rel, dtype=np.int64)
        self._validate()
        self._label_index = None
        self._adj = None

    def _validate(self):
        n = len(self.node_labels)
        if self.node_type.shape != (n,):
            raise IngestionError("node_type length does not match node count")
        if n and (self.node_type.min() < 0 or self.node_type.max() >= len(self.type_labels)):
            raise IngestionError("node type id out of range")
        if not (self.src.shape == self.dst.shape == self.rel.shape):
            raise IngestionError("edge arrays differ in length")
        if len(self.relation_ends) != len(self.relation_labels):
            raise SchemaError("relation_ends and relation_labels differ in length")
        if self.src.size == 0:
            return
        for arr in (self.src, self.dst):
            if arr.min() < 0 or arr.max() >= n:
                raise IngestionError("edge endpoint is not a valid node id")
        if self.rel.min() < 0 or self.rel.max() >= len(self.relation_labels):
            raise SchemaError("edge relation id out of range")
        ends = np.array(self.relation_ends, dtype=np.int64).reshape(-1, 2)
        bad = (self.node_type[self.src] != ends[self.rel, 0]) | (self.node_type[self.dst] != ends[self.rel, 1])
        if bad.any():
            e = int(np.flatnonzero(bad)[0])
            raise SchemaError(
                f"edge {self.node_labels[self.src[e]]!r} -> {self.node_labels[self.dst[e]]!r} "
                f"does not match the endpoint types of relation {self.relation_labels[self.rel[e]]!r}")

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    @property
    def n_relations(self) -> int:
        return len(self.relation_labels)

    def index_of(self, label: str) -> int:
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.node_labels)}
        try:
            return self._label_index[label]
        except KeyError:
            raise IngestionError(f"unknown node label {label!r}") from None

    def relation_adj(self, r: int) -> sp.csr_matrix:
        """N x N int64 count matrix of relation ``r`` (entry = edge multiplicity)."""
        if self._adj is None:
            n = self.n_nodes
            adj = []
            for rr in range(self.n_relations):
                m = self.rel == rr
                a = sp.coo_matrix((np.ones(int(m.sum()), dtype=np.int64), (self.src[m], self.dst[m])),
                                  shape=(n, n)).tocsr()
                a.sum_duplicates()
                a.sort_indices()
                adj.append(a)
            self._adj = adj
        return self._adj[r]

    def __eq__(self, other):
        if not isinstance(other, HinGraph):
            return NotImplemented
        return (self.node_labels == other.node_labels
                and self.type_labels == other.type_labels
                and np.array_equal(self.node_type, other.node_type)
                and self.relation_labels == other.relation_labels
                and self.relation_ends == other.relation_ends
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.rel, other.rel))

    __hash__ = None

    def __repr__(self):
        return (f"HinGraph(nodes={self.n_nodes}, edges={self.n_edges}, "
                f"types={len(self.type_labels)}, relations={self.n_relations})")


class _Builder:
    """Accumulates labelled nodes and edges in first-appearance order."""

    def __init__(self):
        self.node_index = {}
        self.node_labels = []
        self.node_type = []
        self.type_index = {}
        self.rel_index = {}
        self.rel_ends = []
        self.src, self.dst, self.rel = [], [], []

    def add_node(self, label, type_label, where=""):
        t = self.type_index.setdefault(type_label, len(self.type_index))
        i = self.node_index.get(label)
        if i is None:
            self.node_index[label] = len(self.node_labels)
            self.node_labels.append(label)
            self.node_type.append(t)
        elif self.node_type[i] != t:
            raise IngestionError(f"{where}node {label!r} redeclared with a different type")

    def _relation(self, label, ends, where):
        r = self.rel_index.get(label)
        if r is None:
            r = self.rel_index[label] = len(self.rel_ends)
            self.rel_ends.append(ends)
        elif self.rel_ends[r] != ends:
            types = list(self.type_index)
            old = tuple(types[t] for t in self.rel_ends[r])
            new = tuple(types[t] for t in ends)
            raise SchemaError(f"{where}relation {label!r} connects {new[0]}->{new[1]} "
                              f"but was first seen as {old[0]}->{old[1]}")
        return r

    def add_edge(self, s_label, d_label, rel_label, undirected=False, where=""):
        try:
            s = self.node_index[s_label]
            d = self.node_index[d_label]
        except KeyError as exc:
            raise IngestionError(f"{where}unknown node label {exc.args[0]!r}") from None
        ends = (self.node_type[s], self.node_type[d])
        r = self._relation(rel_label, ends, where)
        if undirected:
            rr = self._relation(reverse_label(rel_label), ends[::-1], where)
        self.src.append(s)
        self.dst.append(d)
        self.rel.append(r)
        if undirected:
            self.src.append(d)
            self.dst.append(s)
            self.rel.append(rr)

    def build(self) -> HinGraph:
        return HinGraph(self.node_labels, list(self.type_index), self.node_type,
                        list(self.rel_index), self.rel_ends, self.src, self.dst, self.rel)


def _records(handle, n_fields, kind, name):
    for lineno, raw in enumerate(handle, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != n_fields:
            raise IngestionError(f"{name}:{lineno}: expected {n_fields} tab-separated {kind} fields, "
                                 f"got {len(fields)}")
        yield lineno, fields


def graph_from_records(nodes: Iterable[tuple[str, str]], edges: Iterable[tuple[str, str, str]],
                       undirected: bool = False) -> HinGraph:
    """Build a graph from ``(label, type)`` and ``(src, dst, relation)`` tuples."""
    b = _Builder()
    for label, type_label in nodes:
        b.add_node(label, type_label)
    for s, d, r in edges:
        b.add_edge(s, d, r, undirected=undirected)
    return b.build()


def load_graph(node_file, edge_file, undirected: bool = False) -> HinGraph:
    """Read tab-separated node and edge files.

    Node lines are ``label<TAB>type``; edge lines ``src<TAB>dst<TAB>relation``.
    Blank lines and ``#`` comments are skipped. Ids are assigned in order of
    first appearance. With ``undirected=True`` every edge is also inserted
    reversed under the relation ``<relation>^-1``.
    """
    b = _Builder()
    node_file, edge_file = Path(node_file), Path(edge_file)
    with open(node_file, encoding="utf-8") as fh:
        for lineno, (label, type_label) in _records(fh, 2, "node", node_file.name):
            b.add_node(label, type_label, where=f"{node_file.name}:{lineno}: ")
    with open(edge_file, encoding="utf-8") as fh:
        for lineno, (s, d, r) in _records(fh, 3, "edge", edge_file.name):
            b.add_edge(s, d, r, undirected=undirected, where=f"{edge_file.name}:{lineno}: ")
    return b.build()


def write_graph(graph: HinGraph, node_file, edge_file) -> None:
    """Write ``graph`` in the format read by :func:`load_graph`."""
    with open(node_file, "w", encoding="utf-8", newline="\n") as fh:
        buf = io.StringIO()
        for label, t in zip(graph.node_labels, graph.node_type):
            buf.write(f"{label}\t{graph.type_labels[t]}\n")
        fh.write(buf.getvalue())
    with open(edge_file, "w", encoding="utf-8", newline="\n") as fh:
        buf = io.StringIO()
        labels, rels = graph.node_labels, graph.relation_labels
        for s, d, r in zip(graph.src.tolist(), graph.dst.tolist(), graph.rel.tolist()):
            buf.write(f"{labels[s]}\t{labels[d]}\t{rels[r]}\n")
        fh.write(buf.getvalue())


@dataclass(frozen=True)
class Relation:
    id: int
    label: str
    src_type: int
    dst_type: int


@dataclass(frozen=True)
class NetworkSchema:
    """Type-level view of a graph.

    ``inverse[r]`` is the id of the relation whose adjacency is exactly the
    transpose of relation ``r`` (possibly ``r`` itself), or -1 if none exists.
    """

    type_labels: tuple[str, ...]
    relations: tuple[Relation, ...]
    inverse: tuple[int, ...]

    @property
    def node_types(self) -> tuple[int, ...]:
        return tuple(range(len(self.type_labels)))

    def type_id(self, type_) -> int:
        if isinstance(type_, (int, np.integer)):
            if 0 <= type_ < len(self.type_labels):
                return int(type_)
        elif type_ in self.type_labels:
            return self.type_labels.index(type_)
        raise SchemaError(f"unknown node type {type_!r}")

    def describe(self) -> str:
        lines = [f"node types: {', '.join(self.type_labels)}"]
        for r in self.relations:
            inv = self.inverse[r.id]
            extra = f" (inverse of {self.relations[inv].label})" if inv >= 0 else ""
            lines.append(f"relation {r.id}: {r.label}: "
                         f"{self.type_labels[r.src_type]} -> {self.type_labels[r.dst_type]}{extra}")
        return "\n".join(lines)


def schema_of(graph: HinGraph) -> NetworkSchema:
    """Derive the schema; relation inverses are detected from the adjacency."""
    present_types = sorted(set(graph.node_type.tolist()))
    if present_types != list(range(len(graph.type_labels))):
        raise SchemaError("graph declares node types without nodes")
    rels = tuple(Relation(r, graph.relation_labels[r], *graph.relation_ends[r])
                 for r in range(graph.n_relations))
    inverse = [-1] * len(rels)
    for r in rels:
        if inverse[r.id] >= 0:
            continue
        a = graph.relation_adj(r.id)
        for s in rels:
            if (s.src_type, s.dst_type) != (r.dst_type, r.src_type) or inverse[s.id] >= 0:
                continue
            b = graph.relation_adj(s.id)
            if a.nnz == b.nnz and (a.T.tocsr() != b).nnz == 0:
                inverse[r.id] = s.id
                inverse[s.id] = r.id
                break
    return NetworkSchema(graph.type_labels, rels, tuple(inverse))


def nodes_of_type(graph: HinGraph, type_) -> np.ndarray:
    """Ascending ids of all nodes of ``type_`` (type id or type label)."""
    if isinstance(type_, str):
        if type_ not in graph.type_labels:
            raise SchemaError(f"unknown node type {type_!r}")
        t = graph.type_labels.index(type_)
    else:
        t = int(type_)
        if not 0 <= t < len(graph.type_labels):
            raise SchemaError(f"unknown node type {type_!r}")
    ids = np.flatnonzero(graph.node_type == t)
    if ids.size == 0:
        raise SchemaError(f"unknown node type {type_!r}")
    return ids


def labels_to_ids(graph: HinGraph, labels: Sequence[str]) -> list[int]:
    return [graph.index_of(lab) for lab in labels]
