"""Timeline construction from pairwise relation decisions.

Non-Vague decisions become confidence-weighted directed edges. While the
graph has a cycle, the lowest-confidence edge lying on some cycle is dropped.
The remaining DAG is ordered with Kahn's algorithm, narrative order breaking
ties.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class CycleError(Exception):
    pass


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    confidence: float
    relation: str = "Before"

    def key(self):
        return (self.confidence, self.src, self.dst)


@dataclass
class TimelineGraph:
    order: dict[str, int] = field(default_factory=dict)  # event id -> narrative index
    edges: dict[tuple[str, str], Edge] = field(default_factory=dict)

    def add_vertex(self, v: str, narrative_idx: int | None = None) -> None:
        if v not in self.order:
            self.order[v] = len(self.order) if narrative_idx is None else narrative_idx

    def add_edge(self, edge: Edge) -> None:
        if edge.src == edge.dst:
            raise ValueError(f"self-loop on {edge.src}")
        if (edge.src, edge.dst) in self.edges:
            raise ValueError(f"duplicate edge {edge.src}->{edge.dst}")
        self.add_vertex(edge.src)
        self.add_vertex(edge.dst)
        self.edges[(edge.src, edge.dst)] = edge

    @property
    def vertices(self) -> list[str]:
        return sorted(self.order, key=lambda v: (self.order[v], v))

    def successors(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {v: [] for v in self.order}
        for s, d in sorted(self.edges):
            adj[s].append(d)
        return adj

    def copy(self) -> "TimelineGraph":
        return TimelineGraph(dict(self.order), dict(self.edges))


def build_graph(pairwise: Iterable[tuple], narrative_index: dict[str, int] | None = None) -> TimelineGraph:
    """Graph from ``(e_i, e_j, decision, confidence)`` tuples.

    ``Before`` adds e_i -> e_j, ``After`` adds e_j -> e_i; ``Simultaneous`` and
    ``Vague`` add no edge. Vertices without ``narrative_index`` entries are
    numbered in order of first appearance.
    """
    g = TimelineGraph()
    for v, idx in sorted((narrative_index or {}).items(), key=lambda t: (t[1], t[0])):
        g.add_vertex(v, idx)
    seen: set[frozenset] = set()
    offset = max(g.order.values(), default=-1) + 1
    for e_i, e_j, decision, confidence in pairwise:
        pair = frozenset((e_i, e_j))
        if pair in seen or e_i == e_j:
            raise ValueError(f"duplicate or degenerate pair ({e_i}, {e_j})")
        seen.add(pair)
        for v in (e_i, e_j):
            if v not in g.order:
                g.add_vertex(v, offset)
                offset += 1
        if decision == "Before":
            g.add_edge(Edge(e_i, e_j, float(confidence), decision))
        elif decision == "After":
            g.add_edge(Edge(e_j, e_i, float(confidence), decision))
    return g


def _reaches(adj: dict[str, set[str]], start: str, goal: str) -> bool:
    stack, seen = [start], {start}
    while stack:
        u = stack.pop()
        if u == goal:
            return True
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def make_acyclic(g: TimelineGraph) -> tuple[TimelineGraph, list[Edge]]:
    """Greedy removal of the globally weakest edge on a cycle, until acyclic.

    Edges are visited once in ascending (confidence, src, dst) order; an edge
    on a cycle at its turn is the global minimum among current cycle edges,
    since removals only ever shrink the set of edges that lie on cycles.
    """
    out = g.copy()
    adj: dict[str, set[str]] = {v: set() for v in out.order}
    for s, d in out.edges:
        adj[s].add(d)
    removed: list[Edge] = []
    for edge in sorted(out.edges.values(), key=Edge.key):
        if _reaches(adj, edge.dst, edge.src):
            adj[edge.src].discard(edge.dst)
            del out.edges[(edge.src, edge.dst)]
            removed.append(edge)
    return out, removed


def topo_sort(dag: TimelineGraph) -> list[str]:
    """Kahn's algorithm, popping the smallest narrative index first."""
    indeg = {v: 0 for v in dag.order}
    adj = dag.successors()
    for _, d in dag.edges:
        indeg[d] += 1
    heap = [(dag.order[v], v) for v, n in indeg.items() if n == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, u = heapq.heappop(heap)
        out.append(u)
        for w in adj[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, (dag.order[w], w))
    if len(out) != len(indeg):
        raise CycleError("graph still has a cycle")
    return out


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost Levenshtein distance over whole tokens."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def timeline_metrics(pred: Sequence[str], gold: Sequence[str]) -> tuple[int, int]:
    if sorted(pred) != sorted(gold):
        raise ValueError("predicted and gold timelines cover different events")
    return int(list(pred) == list(gold)), edit_distance(pred, gold)


@dataclass(frozen=True)
class TimelineResult:
    doc_id: str
    timeline: list[str]
    removed: list[Edge]


def construct(doc_id: str, pairwise, narrative_index=None) -> TimelineResult:
    dag, removed = make_acyclic(build_graph(pairwise, narrative_index))
    return TimelineResult(doc_id, topo_sort(dag), removed)
