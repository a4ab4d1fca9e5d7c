"""Seven-author bibliographic toy network.

Each author's paper counts per venue:

    ============  ====  ===  ====  ========
    author        VLDB  KDD  STOC  SIGGRAPH
    ============  ====  ===  ====  ========
    Reference       10   10     1         1
    Sarah           10   10     1         1
    Rob              0    1    20        20
    Lucy             0    5    10        10
    Joe              0    0     0         1
    Mikel            0    1     0         0
    Emma             0    0     0        30
    ============  ====  ===  ====  ========

Sarah co-authors every one of the reference author's papers, so the two
have identical rows under every meta-path; all other papers are
single-author. Edges are ``writes`` (A->P) and ``published_in`` (P->V),
loaded with reverses.
"""
from __future__ import annotations

from .graph import HinGraph, graph_from_records

VENUES = ("VLDB", "KDD", "STOC", "SIGGRAPH")
PAPER_COUNTS = {
    "Reference": (10, 10, 1, 1),
    "Sarah": (10, 10, 1, 1),
    "Rob": (0, 1, 20, 20),
    "Lucy": (0, 5, 10, 10),
    "Joe": (0, 0, 0, 1),
    "Mikel": (0, 1, 0, 0),
    "Emma": (0, 0, 0, 30),
}
AUTHORS = tuple(PAPER_COUNTS)
REFERENCE = "Reference"
CO_AUTHOR = {"Sarah": "Reference"}
# Stable tie order that matches the published rank columns.
CANDIDATES = ("Emma", "Rob", "Lucy", "Joe", "Mikel", "Sarah")


def toy_records():
    nodes = [(a, "A") for a in AUTHORS]
    edges = []
    papers = []
    for author in AUTHORS:
        if author in CO_AUTHOR:
            continue
        for venue, count in zip(VENUES, PAPER_COUNTS[author]):
            for _ in range(count):
                pid = f"paper{len(papers) + 1:03d}"
                papers.append(pid)
                edges.append((author, pid, "writes"))
                edges.extend((other, pid, "writes") for other, host in CO_AUTHOR.items() if host == author)
                edges.append((pid, venue, "published_in"))
    nodes.extend((p, "P") for p in papers)
    nodes.extend((v, "V") for v in VENUES)
    return nodes, edges


def toy_graph() -> HinGraph:
    nodes, edges = toy_records()
    return graph_from_records(nodes, edges, undirected=True)
