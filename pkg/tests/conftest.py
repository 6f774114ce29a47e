from __future__ import annotations

import itertools

import numpy as np
import pytest


def dense_gf2(a, b) -> np.ndarray:
    """Row-by-column GF(2) product with plain Python integers."""
    a = [[int(v) for v in row] for row in np.atleast_2d(a)]
    b = [[int(v) for v in row] for row in np.atleast_2d(b)]
    cols = list(zip(*b))
    return np.array([[sum(x * y for x, y in zip(row, col)) % 2 for col in cols] for row in a], dtype=np.uint8)


def brute_force_matching(pair_w: np.ndarray, boundary_w: np.ndarray) -> float:
    """Minimum total weight over every way to pair defects or send them to the boundary."""
    k = len(boundary_w)

    def best(remaining: tuple[int, ...]) -> float:
        if not remaining:
            return 0.0
        i, rest = remaining[0], remaining[1:]
        out = boundary_w[i] + best(rest)
        for pos, j in enumerate(rest):
            out = min(out, pair_w[i, j] + best(rest[:pos] + rest[pos + 1 :]))
        return out

    return float(best(tuple(range(k))))


def weight_patterns(n: int, max_weight: int):
    for w in range(1, max_weight + 1):
        for support in itertools.combinations(range(n), w):
            v = np.zeros(n, np.uint8)
            v[list(support)] = 1
            yield v


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
