"""Synthetic typed networks with planted colour communities, anomaly
injection and labelled query generation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationError, ParameterError
from .graph import HinGraph, load_graph, write_graph
from .qanet import AnomalyQuery


@dataclass(frozen=True)
class SynthConfig:
    n_nodes: int = 2000
    n_colors: int = 4
    n_types: int = 2
    p_intra: float = 0.02
    p_inter: float = 0.002
    p_anom: float = 0.5
    anomaly_fraction: float = 0.05
    seed: int = 0

    def validate(self):
        if self.n_colors < 1:
            raise ParameterError("n_colors must be >= 1")
        if self.n_types < 1:
            raise ParameterError("n_types must be >= 1")
        if self.n_nodes < self.n_colors:
            raise ParameterError("n_nodes must be >= n_colors")
        if not 0.0 <= self.p_inter <= self.p_intra <= 1.0:
            raise ParameterError("need 0 <= p_inter <= p_intra <= 1")
        if self.p_inter == self.p_intra and self.p_intra > 0:
            raise ParameterError("p_inter must be smaller than p_intra")
        if not 0.0 <= self.p_anom <= 1.0:
            raise ParameterError("p_anom must lie in [0, 1]")
        if not 0.0 < self.anomaly_fraction < 1.0:
            raise ParameterError("anomaly_fraction must lie in (0, 1)")

    @property
    def type_labels(self) -> tuple[str, ...]:
        return tuple(f"T{t}" for t in range(self.n_types))


@dataclass
class LabeledNetwork:
    """A graph plus its planted colours (1..C) and anomaly flags.

    ``pairs`` lists each undirected link once as ``(u, v)`` with ``u < v``.
    """

    graph: HinGraph
    color: np.ndarray
    is_anomalous: np.ndarray
    pairs: np.ndarray = field(repr=False)

    @property
    def node_type(self) -> np.ndarray:
        return self.graph.node_type


def _graph_from_pairs(node_type, type_labels, pairs) -> HinGraph:
    """Store every link in both directions under relation ``(type(src), type(dst))``."""
    n = node_type.size
    n_t = len(type_labels)
    u, v = pairs[:, 0], pairs[:, 1]
    src = np.empty(2 * len(u), dtype=np.int64)
    dst = np.empty_like(src)
    src[0::2], dst[0::2] = u, v
    src[1::2], dst[1::2] = v, u
    code = node_type[src] * n_t + node_type[dst]
    uniq, first = np.unique(code, return_index=True)
    order = uniq[np.argsort(first)]
    rel_of_code = np.full(n_t * n_t, -1, dtype=np.int64)
    rel_of_code[order] = np.arange(order.size)
    ends = [(int(c // n_t), int(c % n_t)) for c in order]
    labels = [f"{type_labels[a]}-{type_labels[b]}" for a, b in ends]
    return HinGraph([f"n{i}" for i in range(n)], type_labels, node_type, labels, ends,
                    src, dst, rel_of_code[code])


def generate_network(config: SynthConfig) -> LabeledNetwork:
    """Draw types and colours uniformly, then link each unordered pair with
    probability ``p_intra`` (same colour) or ``p_inter`` (different colours)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = config.n_nodes
    node_type = rng.integers(config.n_types, size=n)
    color = rng.integers(1, config.n_colors + 1, size=n)
    us, vs = [], []
    for i in range(n - 1):
        draw = rng.random(n - i - 1)
        same = color[i + 1:] == color[i]
        hit = np.flatnonzero(draw < np.where(same, config.p_intra, config.p_inter))
        if hit.size:
            us.append(np.full(hit.size, i, dtype=np.int64))
            vs.append(hit + i + 1)
    pairs = _stack_pairs(us, vs)
    graph = _graph_from_pairs(node_type, config.type_labels, pairs)
    return LabeledNetwork(graph, color, np.zeros(n, dtype=bool), pairs)


def _stack_pairs(us, vs):
    if not us:
        return np.zeros((0, 2), dtype=np.int64)
    return np.column_stack([np.concatenate(us), np.concatenate(vs)]).astype(np.int64)


def inject_anomalies(network: LabeledNetwork, fraction: float = 0.05, p_anom: float = 0.5,
                     seed: int = 0, keep_edges: bool = False) -> LabeledNetwork:
    """Turn ``ceil(fraction * |colour group|)`` nodes per colour into anomalies.

    Selected nodes lose their links (unless ``keep_edges``) and are then
    linked to every other node independently with probability ``p_anom``.
    """
    if not 0.0 < fraction < 1.0:
        raise ParameterError("fraction must lie in (0, 1)")
    if not 0.0 <= p_anom <= 1.0:
        raise ParameterError("p_anom must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = network.graph.n_nodes
    selected = []
    for c in np.unique(network.color):
        group = np.flatnonzero(network.color == c)
        if group.size == 0:
            continue
        take = min(group.size, math.ceil(fraction * group.size))
        selected.append(np.sort(rng.choice(group, size=take, replace=False)))
    selected = np.sort(np.concatenate(selected)) if selected else np.zeros(0, dtype=np.int64)
    flag = network.is_anomalous.copy()
    flag[selected] = True
    is_sel = np.zeros(n, dtype=bool)
    is_sel[selected] = True

    pairs = network.pairs
    if not keep_edges:
        pairs = pairs[~(is_sel[pairs[:, 0]] | is_sel[pairs[:, 1]])]
    us, vs = [pairs[:, 0]], [pairs[:, 1]]
    existing = set(map(tuple, network.pairs.tolist())) if keep_edges else set()
    done = np.zeros(n, dtype=bool)
    others = np.arange(n)
    for s in selected:
        mask = (others != s) & ~done
        targets = others[mask]
        hit = targets[rng.random(targets.size) < p_anom]
        lo, hi = np.minimum(hit, s), np.maximum(hit, s)
        if existing:
            keep = np.array([(a, b) not in existing for a, b in zip(lo.tolist(), hi.tolist())], dtype=bool)
            lo, hi = lo[keep], hi[keep]
        us.append(lo)
        vs.append(hi)
        done[s] = True
    new_pairs = _stack_pairs(us, vs)
    graph = _graph_from_pairs(network.graph.node_type, network.graph.type_labels, new_pairs)
    return LabeledNetwork(graph, network.color.copy(), flag, new_pairs)


@dataclass(frozen=True)
class LabeledQuery:
    query: AnomalyQuery
    abnormal: dict
    query_type: int
    colors: tuple[int, ...]

    @property
    def labels(self) -> list[int]:
        """1 for abnormal, 0 for normal, in candidate order."""
        return [int(self.abnormal[v]) for v in self.query.candidates]


def _halves(total):
    return math.ceil(total / 2), total // 2


def generate_query(network: LabeledNetwork, query_type: int, ref_size: int = 20, cand_size: int = 10,
                   seed: int = 0) -> LabeledQuery:
    """Sample a reference/candidate pair of one of six compositions.

    Types 1, 3 and 5 take the reference from one colour i; types 2, 4 and 6
    split it between colours i and j. The candidate set is half normal
    (same colours as the reference) and half abnormal: other colours for
    types 1-2, injected anomalies for 3-4 and both for 5-6 (anomalies take
    the larger share). All nodes share one randomly chosen type; candidates
    are disjoint from the reference and returned in shuffled order.
    """
    if query_type not in range(1, 7):
        raise ParameterError("query_type must be in 1..6")
    if ref_size < 1 or cand_size < 1:
        raise ParameterError("ref_size and cand_size must be >= 1")
    rng = np.random.default_rng(seed)
    g = network.graph
    colors = np.unique(network.color)
    n_ref_colors = 1 if query_type % 2 == 1 else 2
    if colors.size < n_ref_colors + (1 if query_type in (1, 2, 5, 6) else 0):
        raise GenerationError(f"query type {query_type} needs more colours than the network has")
    t = int(rng.integers(len(g.type_labels)))
    ref_colors = tuple(int(c) for c in rng.choice(colors, size=n_ref_colors, replace=False))

    of_type = g.node_type == t
    clean = of_type & ~network.is_anomalous
    in_ref_color = np.isin(network.color, ref_colors)

    def pick(mask, size, what, exclude=()):
        pool = np.setdiff1d(np.flatnonzero(mask), np.asarray(exclude, dtype=np.int64))
        if pool.size < size:
            raise GenerationError(f"need {size} {what} nodes of type {g.type_labels[t]}, only {pool.size} available")
        return rng.choice(pool, size=size, replace=False) if size else np.zeros(0, dtype=np.int64)

    if n_ref_colors == 1:
        reference = pick(clean & (network.color == ref_colors[0]), ref_size, f"colour-{ref_colors[0]}")
    else:
        a, b = _halves(ref_size)
        reference = np.concatenate([
            pick(clean & (network.color == ref_colors[0]), a, f"colour-{ref_colors[0]}"),
            pick(clean & (network.color == ref_colors[1]), b, f"colour-{ref_colors[1]}")])

    normal_n, abnormal_n = _halves(cand_size)
    if query_type in (3, 4):
        abnormal_n, normal_n = normal_n, abnormal_n
    normal = pick(clean & in_ref_color, normal_n, "reference-colour", exclude=reference)
    other_colour = clean & ~in_ref_color
    anomalous = of_type & network.is_anomalous
    if query_type in (1, 2):
        abnormal = pick(other_colour, abnormal_n, "other-colour")
    elif query_type in (3, 4):
        abnormal = pick(anomalous, abnormal_n, "anomalous")
    else:
        n_anom, n_other = _halves(abnormal_n)
        abnormal = np.concatenate([pick(anomalous, n_anom, "anomalous"),
                                   pick(other_colour, n_other, "other-colour")])
    candidates = np.concatenate([normal, abnormal])
    candidates = candidates[rng.permutation(candidates.size)]
    labels = {int(v): bool(network.is_anomalous[v] or network.color[v] not in ref_colors) for v in candidates}
    query = AnomalyQuery.create(g, reference.tolist(), candidates.tolist())
    return LabeledQuery(query, labels, query_type, ref_colors)


def write_labels(path, network: LabeledNetwork) -> None:
    """Sidecar file: ``label<TAB>colour<TAB>anomalous(0/1)``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{lab}\t{c}\t{int(a)}\n" for lab, c, a in
                      zip(network.graph.node_labels, network.color.tolist(), network.is_anomalous.tolist()))


def write_network(directory, network: LabeledNetwork) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"nodes": directory / "nodes.tsv", "edges": directory / "edges.tsv", "labels": directory / "labels.tsv"}
    write_graph(network.graph, paths["nodes"], paths["edges"])
    write_labels(paths["labels"], network)
    return paths


def read_network(node_file, edge_file, label_file) -> LabeledNetwork:
    graph = load_graph(node_file, edge_file)
    n = graph.n_nodes
    color = np.zeros(n, dtype=np.int64)
    flag = np.zeros(n, dtype=bool)
    seen = np.zeros(n, dtype=bool)
    for line in Path(label_file).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        lab, c, a = line.split("\t")
        v = graph.index_of(lab)
        color[v], flag[v], seen[v] = int(c), a.strip() == "1", True
    if not seen.all():
        raise GenerationError("label file does not cover every node")
    mask = graph.src < graph.dst
    pairs = np.column_stack([graph.src[mask], graph.dst[mask]])
    return LabeledNetwork(graph, color, flag, pairs)
