from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..lattice import CodeLayout, ErrorState, Syndrome

BOUNDARY = -1
SECTORS = ("x", "z")


@dataclass(eq=False)
class DecodeResult:
    correction: ErrorState
    defect_count: int
    correction_weight: int
    failed: bool = False
    # MWPM-family only: total weight of the chosen matching, summed over both sectors.
    matching_weight: float = math.nan


class DecodingGraph:
    """Check graph of one CSS sector.

    Vertices are the rows of ``h``; every column (qubit) is an edge between the
    checks it touches, or between its single check and the boundary. Distances
    and paths are hop counts over check-to-check edges; boundary distance is the
    shortest hop count to a boundary edge.
    """

    def __init__(self, h: np.ndarray, coords: np.ndarray | None = None):
        self.h = np.asarray(h, dtype=np.uint8)
        self.m, self.n = self.h.shape
        self.coords = coords
        self.edges: list[tuple[int, int, int]] = []
        self.adjacency: list[list[tuple[int, int]]] = [[] for _ in range(self.m)]
        self.boundary_qubit: dict[int, int] = {}
        for q in range(self.n):
            checks = np.flatnonzero(self.h[:, q]).tolist()
            if len(checks) == 2:
                a, b = checks
                self.edges.append((a, b, q))
                self.adjacency[a].append((b, q))
                self.adjacency[b].append((a, q))
            elif len(checks) == 1:
                self.edges.append((checks[0], BOUNDARY, q))
                self.boundary_qubit.setdefault(checks[0], q)
            elif len(checks) > 2:
                raise ValueError(f"qubit {q} touches {len(checks)} checks; not a matching graph")
        for nbrs in self.adjacency:
            nbrs.sort()
        self._all_pairs()

    def _all_pairs(self) -> None:
        m = self.m
        self.dist = np.full((m, m), np.inf)
        # parent[src][v] = (previous vertex, qubit) on a shortest path from src
        self._parent: list[dict[int, tuple[int, int]]] = []
        for src in range(m):
            parent = {src: (src, -1)}
            self.dist[src, src] = 0
            queue = deque([src])
            while queue:
                u = queue.popleft()
                for v, q in self.adjacency[u]:
                    if v not in parent:
                        parent[v] = (u, q)
                        self.dist[src, v] = self.dist[src, u] + 1
                        queue.append(v)
            self._parent.append(parent)

        self.boundary_dist = np.full(m, np.inf)
        self._boundary_via = [-1] * m
        for i in range(m):
            for c in sorted(self.boundary_qubit):
                cand = self.dist[i, c] + 1
                if cand < self.boundary_dist[i]:
                    self.boundary_dist[i] = cand
                    self._boundary_via[i] = c

        self.pair_paths = [[self._path(i, j) for j in range(m)] for i in range(m)]
        self.boundary_paths = [
            self._path(i, self._boundary_via[i]) + [self.boundary_qubit[self._boundary_via[i]]]
            if self._boundary_via[i] >= 0
            else []
            for i in range(m)
        ]

    def _path(self, i: int, j: int) -> list[int]:
        parent = self._parent[i]
        if j not in parent:
            return []
        qubits = []
        v = j
        while v != i:
            v, q = parent[v]
            qubits.append(q)
        return qubits


class Decoder:
    """Common batching and caching for sector-wise CSS decoders.

    Subclasses implement :meth:`decode_sector`, returning ``(correction bits,
    failed, matching weight)`` for one sector syndrome. Results are memoised by
    syndrome, which is safe because decoding is a pure function of it.
    """

    name = "base"
    cache_limit = 1 << 20

    def __init__(self, layout: CodeLayout):
        self.layout = layout
        self.graphs = {
            "x": DecodingGraph(layout.h_z, layout.z_check_coords),
            "z": DecodingGraph(layout.h_x, layout.x_check_coords),
        }
        self._cache: dict[tuple[str, bytes], tuple[np.ndarray, bool, float]] = {}

    def decode_sector(self, sector: str, syndrome: np.ndarray) -> tuple[np.ndarray, bool, float]:
        raise NotImplementedError

    def get_params(self) -> dict:
        return {}

    def _cached(self, sector: str, syndrome: np.ndarray) -> tuple[np.ndarray, bool, float]:
        key = (sector, syndrome.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            if len(self._cache) >= self.cache_limit:
                self._cache.clear()
            hit = self.decode_sector(sector, syndrome)
            self._cache[key] = hit
        return hit

    def decode(self, syndrome: Syndrome) -> DecodeResult:
        if syndrome.s_z.shape != (self.layout.m_z,) or syndrome.s_x.shape != (self.layout.m_x,):
            raise ValueError("syndrome shape does not match layout")
        cx, fx, wx = self._cached("x", syndrome.s_z)
        cz, fz, wz = self._cached("z", syndrome.s_x)
        correction = ErrorState(cx.copy(), cz.copy())
        return DecodeResult(
            correction=correction,
            defect_count=syndrome.defect_count,
            correction_weight=correction.weight,
            failed=bool(fx or fz),
            matching_weight=wx + wz,
        )

    def decode_batch(self, s_z: np.ndarray, s_x: np.ndarray):
        """Decode rows of syndromes; returns ``(c_x, c_z, failed)`` arrays."""
        c_x, f_x = self._decode_rows("x", s_z)
        c_z, f_z = self._decode_rows("z", s_x)
        return c_x, c_z, f_x | f_z

    def _decode_rows(self, sector: str, rows: np.ndarray):
        n = self.layout.n_data
        out = np.zeros((rows.shape[0], n), np.uint8)
        failed = np.zeros(rows.shape[0], bool)
        if rows.shape[0] == 0:
            return out, failed
        uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        corr = np.zeros((uniq.shape[0], n), np.uint8)
        fail = np.zeros(uniq.shape[0], bool)
        for u in range(uniq.shape[0]):
            if not uniq[u].any():
                continue
            c, f, _ = self._cached(sector, np.ascontiguousarray(uniq[u]))
            corr[u] = c
            fail[u] = f
        return corr[inverse], fail[inverse]

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}(d={self.layout.distance}{', ' if params else ''}{params})"
