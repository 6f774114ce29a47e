"""Union-Find decoder: cluster growth by half-edges, then peeling."""

from __future__ import annotations

from collections import deque

import numpy as np

from ..lattice import CodeLayout
from .base import BOUNDARY, Decoder


class UnionFindDecoder(Decoder):
    name = "uf"

    def __init__(self, layout: CodeLayout):
        super().__init__(layout)
        self._graphs = {s: _UFGraph(g) for s, g in self.graphs.items()}

    def decode_sector(self, sector, syndrome):
        graph = self._graphs[sector]
        correction, ok = graph.decode(np.flatnonzero(syndrome).tolist())
        out = np.zeros(self.layout.n_data, np.uint8)
        out[correction] = 1
        return out, not ok, float("nan")


class _UFGraph:
    """Decoding graph with one private boundary vertex per boundary edge."""

    def __init__(self, graph):
        self.n_checks = graph.m
        self.edges: list[tuple[int, int, int]] = []
        nb = 0
        for a, b, q in graph.edges:
            if b == BOUNDARY:
                b = graph.m + nb
                nb += 1
            self.edges.append((a, b, q))
        self.n_vertices = graph.m + nb
        self.incident: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for e, (a, b, _) in enumerate(self.edges):
            self.incident[a].append(e)
            self.incident[b].append(e)

    def is_boundary(self, v: int) -> bool:
        return v >= self.n_checks

    def decode(self, defects: list[int]) -> tuple[list[int], bool]:
        if not defects:
            return [], True
        nv = self.n_vertices
        parent = list(range(nv))
        members: dict[int, list[int]] = {}
        parity: dict[int, int] = {}
        boundary: dict[int, bool] = {}
        in_cluster = [False] * nv
        support = [0] * len(self.edges)

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        def adopt(v):
            in_cluster[v] = True
            members[v] = [v]
            parity[v] = 0
            boundary[v] = self.is_boundary(v)

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra == rb:
                return
            if len(members[ra]) < len(members[rb]) or (
                len(members[ra]) == len(members[rb]) and rb < ra
            ):
                ra, rb = rb, ra
            parent[rb] = ra
            members[ra].extend(members.pop(rb))
            parity[ra] ^= parity.pop(rb)
            boundary[ra] = boundary[ra] or boundary.pop(rb)

        for v in defects:
            adopt(v)
            parity[v] = 1

        def active_roots():
            return sorted(r for r in members if parity[r] and not boundary[r])

        active = active_roots()
        while active:
            grown = []
            for root in active:
                for v in members[root]:
                    for e in self.incident[v]:
                        if support[e] < 2:
                            support[e] += 1
                            if support[e] == 2:
                                grown.append(e)
            for e in grown:
                a, b, _ = self.edges[e]
                for v in (a, b):
                    if not in_cluster[v]:
                        adopt(v)
                union(a, b)
            active = active_roots()

        return self._peel(defects, support, find, members)

    def _peel(self, defects, support, find, members):
        marked = set(defects)
        adjacency: dict[int, list[tuple[int, int]]] = {}
        for e, s in enumerate(support):
            if s == 2:
                a, b, _ = self.edges[e]
                adjacency.setdefault(a, []).append((b, e))
                adjacency.setdefault(b, []).append((a, e))
        for v in adjacency:
            adjacency[v].sort()

        correction = []
        ok = True
        for root in sorted(members):
            verts = sorted(members[root])
            bverts = [v for v in verts if self.is_boundary(v)]
            if not bverts:
                edges, residue = self._peel_tree(verts[0], adjacency, marked)
                ok = ok and not residue
                correction.extend(edges)
                continue
            # a cluster touching the boundary can be peeled towards any of its
            # boundary vertices; keep the lightest result
            best = None
            for start in bverts:
                edges, _ = self._peel_tree(start, adjacency, marked)
                if best is None or len(edges) < len(best):
                    best = edges
            correction.extend(best)
        return correction, ok

    def _peel_tree(self, start, adjacency, marked):
        """Peel one spanning tree grown from ``start``; returns (qubits, root parity)."""
        order = [start]
        tree_edge = {start: None}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w, e in adjacency.get(u, ()):
                if w not in tree_edge:
                    tree_edge[w] = (u, e)
                    order.append(w)
                    queue.append(w)
        mark = {v: 1 for v in order if v in marked}
        qubits = []
        for v in reversed(order[1:]):
            if mark.get(v):
                u, e = tree_edge[v]
                qubits.append(self.edges[e][2])
                mark[u] = mark.get(u, 0) ^ 1
        return qubits, bool(mark.get(start))
