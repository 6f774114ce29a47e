"""Minimum-weight perfect matching decoders."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from ..lattice import CodeLayout
from .base import Decoder


@dataclass(frozen=True)
class GuideTable:
    """Per-edge weight multipliers keyed ``"i-j"`` (check pair) or ``"i-B"`` (boundary).

    Check indices are local to a sector; the same table reweights both sectors.
    """

    multipliers: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, value in self.multipliers.items():
            value = float(value)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"guide multiplier for edge {key!r} must be positive, got {value}")
            clean[_canonical_key(key)] = value
        object.__setattr__(self, "multipliers", clean)

    @classmethod
    def load(cls, path: str | Path) -> GuideTable:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError(f"{path}: guide table must be a JSON object")
        return cls(data)

    def pair(self, i: int, j: int) -> float:
        a, b = sorted((i, j))
        return self.multipliers.get(f"{a}-{b}", 1.0)

    def boundary(self, i: int) -> float:
        return self.multipliers.get(f"{i}-B", 1.0)


def _canonical_key(key: str) -> str:
    parts = str(key).strip().split("-")
    if len(parts) != 2:
        raise ValueError(f"malformed guide edge key {key!r}")
    a, b = parts
    if b.upper() == "B":
        return f"{int(a)}-B"
    lo, hi = sorted((int(a), int(b)))
    return f"{lo}-{hi}"


def min_weight_boundary_matching(
    pair_w: np.ndarray, boundary_w: np.ndarray
) -> tuple[list[tuple[int, int]], float]:
    """Exact minimum-weight matching where each defect pairs up or exits to the boundary.

    ``pair_w`` is a symmetric k-by-k weight matrix and ``boundary_w`` the k
    boundary weights. Returns ``(pairs, weight)`` with boundary exits encoded as
    ``(i, -1)``.
    """
    k = len(boundary_w)
    if k == 0:
        return [], 0.0
    if k == 1:
        return [(0, -1)], float(boundary_w[0])
    if k == 2:
        if pair_w[0, 1] < boundary_w[0] + boundary_w[1]:
            return [(0, 1)], float(pair_w[0, 1])
        return [(0, -1), (1, -1)], float(boundary_w[0] + boundary_w[1])

    g = nx.Graph()
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            # a pair edge no cheaper than two boundary exits never improves the optimum
            if pair_w[i, j] < boundary_w[i] + boundary_w[j]:
                edges.append((i, j, float(pair_w[i, j])))
    for i in range(k):
        edges.append((i, k + i, float(boundary_w[i])))
    for i in range(k):
        for j in range(i + 1, k):
            edges.append((k + i, k + j, 0.0))
    top = 1.0 + max(w for _, _, w in edges)
    g.add_nodes_from(range(2 * k))
    g.add_weighted_edges_from((u, v, top - w) for u, v, w in edges)
    matching = nx.max_weight_matching(g, maxcardinality=True)

    pairs = []
    total = 0.0
    for u, v in matching:
        u, v = min(u, v), max(u, v)
        if v < k:
            pairs.append((u, v))
            total += pair_w[u, v]
        elif u < k:
            pairs.append((u, -1))
            total += boundary_w[u]
    pairs.sort()
    return pairs, float(total)


class MWPMDecoder(Decoder):
    """Matches defects along shortest lattice paths, boundary exits allowed."""

    name = "mwpm"

    def __init__(self, layout: CodeLayout, guide: GuideTable | None = None):
        super().__init__(layout)
        self.guide = guide

    def get_params(self) -> dict:
        return {"guide": None if self.guide is None else len(self.guide.multipliers)}

    def edge_weights(self, sector: str, defects: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        graph = self.graphs[sector]
        pair_w = graph.dist[np.ix_(defects, defects)].astype(float)
        boundary_w = graph.boundary_dist[defects].astype(float)
        if self.guide is not None:
            for a, i in enumerate(defects):
                boundary_w[a] *= self.guide.boundary(int(i))
                for b in range(a + 1, len(defects)):
                    mult = self.guide.pair(int(i), int(defects[b]))
                    pair_w[a, b] *= mult
                    pair_w[b, a] *= mult
        return pair_w, boundary_w

    def decode_sector(self, sector, syndrome):
        graph = self.graphs[sector]
        defects = np.flatnonzero(syndrome)
        pair_w, boundary_w = self.edge_weights(sector, defects)
        pairs, weight = min_weight_boundary_matching(pair_w, boundary_w)
        correction = np.zeros(self.layout.n_data, np.uint8)
        for a, b in pairs:
            i = defects[a]
            path = graph.boundary_paths[i] if b < 0 else graph.pair_paths[i][defects[b]]
            correction[path] ^= 1
        return correction, False, weight


class GuidedMWPMDecoder(MWPMDecoder):
    """MWPM with edge weights rescaled by a :class:`GuideTable`."""

    name = "guided-mwpm"

    def __init__(self, layout: CodeLayout, guide: GuideTable):
        if guide is None:
            raise ValueError("guided-mwpm needs a guide table")
        super().__init__(layout, guide)
