"""Rotated planar surface code layouts and GF(2) syndrome algebra.

Data qubit ``(r, c)`` for ``0 <= r, c < d`` has index ``r * d + c``. A plaquette
is addressed by its top-left corner ``(r, c)`` and covers the qubits
``(r..r+1, c..c+1)`` that lie on the lattice; its centre sits at the half-integer
point ``(r + 0.5, c + 0.5)``. Plaquettes follow a checkerboard: ``(r + c)`` even
is X-type, odd is Z-type. Weight-2 plaquettes on the top and bottom edges are
X-type only, those on the left and right edges Z-type only.

Bit vectors are dense ``uint8`` numpy arrays holding 0/1. Batched routines take
2-D arrays with one trial per row.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class CodeLayout:
    distance: int
    h_x: np.ndarray
    h_z: np.ndarray
    l_x_test: np.ndarray
    l_z_test: np.ndarray
    x_check_coords: np.ndarray
    z_check_coords: np.ndarray

    @property
    def n_data(self) -> int:
        return self.h_x.shape[1]

    @property
    def m_x(self) -> int:
        return self.h_x.shape[0]

    @property
    def m_z(self) -> int:
        return self.h_z.shape[0]

    def to_dict(self) -> dict:
        def rows(mat):
            return ["".join(map(str, row)) for row in mat.tolist()]

        return {
            "distance": self.distance,
            "n_data": self.n_data,
            "h_x": rows(self.h_x),
            "h_z": rows(self.h_z),
            "l_x_test": "".join(map(str, self.l_x_test.tolist())),
            "l_z_test": "".join(map(str, self.l_z_test.tolist())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(eq=False)
class ErrorState:
    """X/Z flip vectors of one trial plus loss flags."""

    e_x: np.ndarray
    e_z: np.ndarray
    erased: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.e_x = _as_bits(self.e_x)
        self.e_z = _as_bits(self.e_z)
        if self.erased is None:
            self.erased = np.zeros_like(self.e_x)
        else:
            self.erased = _as_bits(self.erased)
        if not (self.e_x.shape == self.e_z.shape == self.erased.shape):
            raise ValueError(
                f"error vectors differ in length: {self.e_x.shape}, "
                f"{self.e_z.shape}, {self.erased.shape}"
            )

    @classmethod
    def zeros(cls, n: int) -> ErrorState:
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    def __len__(self) -> int:
        return self.e_x.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ErrorState):
            return NotImplemented
        return (
            np.array_equal(self.e_x, other.e_x)
            and np.array_equal(self.e_z, other.e_z)
            and np.array_equal(self.erased, other.erased)
        )

    @property
    def weight(self) -> int:
        return int(self.e_x.sum()) + int(self.e_z.sum())


@dataclass(eq=False)
class Syndrome:
    s_z: np.ndarray
    s_x: np.ndarray

    def __post_init__(self):
        self.s_z = _as_bits(self.s_z)
        self.s_x = _as_bits(self.s_x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Syndrome):
            return NotImplemented
        return np.array_equal(self.s_z, other.s_z) and np.array_equal(self.s_x, other.s_x)

    @property
    def defect_count(self) -> int:
        return int(self.s_z.sum()) + int(self.s_x.sum())


def _as_bits(v) -> np.ndarray:
    return np.asarray(v, dtype=np.uint8) & 1


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=None)
def build_code(distance: int) -> CodeLayout:
    """Build the distance-``distance`` rotated surface code.

    Layouts are cached and their arrays are read-only, so the same object can be
    shared freely between callers.
    """
    if isinstance(distance, bool) or not isinstance(distance, (int, np.integer)):
        raise TypeError(f"distance must be an integer, got {distance!r}")
    d = int(distance)
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be odd and >= 3, got {d}")

    x_rows, z_rows, x_coords, z_coords = [], [], [], []
    for r in range(-1, d):
        for c in range(-1, d):
            support = [
                rr * d + cc
                for rr in (r, r + 1)
                for cc in (c, c + 1)
                if 0 <= rr < d and 0 <= cc < d
            ]
            is_x = (r + c) % 2 == 0
            if len(support) == 4:
                keep = True
            elif len(support) == 2:
                on_top_or_bottom = r in (-1, d - 1)
                keep = is_x if on_top_or_bottom else not is_x
            else:
                keep = False
            if not keep:
                continue
            row = np.zeros(d * d, np.uint8)
            row[support] = 1
            if is_x:
                x_rows.append(row)
                x_coords.append((r + 0.5, c + 0.5))
            else:
                z_rows.append(row)
                z_coords.append((r + 0.5, c + 0.5))

    # The all-ones vector overlaps every weight-2 and weight-4 check evenly and
    # every weight-d row or column logical oddly, so its parity on a
    # syndrome-free residual is exactly the logical class, for both sectors.
    ones = np.ones(d * d, np.uint8)
    return CodeLayout(
        distance=d,
        h_x=_frozen(np.array(x_rows, np.uint8)),
        h_z=_frozen(np.array(z_rows, np.uint8)),
        l_x_test=_frozen(ones.copy()),
        l_z_test=_frozen(ones.copy()),
        x_check_coords=_frozen(np.array(x_coords, float)),
        z_check_coords=_frozen(np.array(z_coords, float)),
    )


def gf2_matvec(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``h @ v mod 2`` for a single vector or a batch of row vectors."""
    v = np.asarray(v, dtype=np.uint8)
    if v.ndim == 1:
        return ((h.astype(np.int32) @ v.astype(np.int32)) & 1).astype(np.uint8)
    return ((v.astype(np.int32) @ h.T.astype(np.int32)) & 1).astype(np.uint8)


def _check_length(layout: CodeLayout, err: ErrorState) -> None:
    if len(err) != layout.n_data:
        raise ValueError(
            f"error vector length {len(err)} does not match n_data={layout.n_data}"
        )


def extract_syndrome(layout: CodeLayout, err: ErrorState) -> Syndrome:
    _check_length(layout, err)
    return Syndrome(s_z=gf2_matvec(layout.h_z, err.e_x), s_x=gf2_matvec(layout.h_x, err.e_z))


def residual(err: ErrorState, correction: ErrorState) -> ErrorState:
    if len(err) != len(correction):
        raise ValueError(
            f"error length {len(err)} does not match correction length {len(correction)}"
        )
    return ErrorState(err.e_x ^ correction.e_x, err.e_z ^ correction.e_z, err.erased.copy())


def logical_failure(layout: CodeLayout, res: ErrorState) -> bool:
    _check_length(layout, res)
    x_flip = int(res.e_x.astype(np.int32) @ layout.l_x_test.astype(np.int32)) & 1
    z_flip = int(res.e_z.astype(np.int32) @ layout.l_z_test.astype(np.int32)) & 1
    return bool(x_flip or z_flip)


def logical_failures(layout: CodeLayout, res_x: np.ndarray, res_z: np.ndarray) -> np.ndarray:
    """Batched failure indicator over rows of residual arrays."""
    x_flip = (res_x.astype(np.int32) @ layout.l_x_test.astype(np.int32)) & 1
    z_flip = (res_z.astype(np.int32) @ layout.l_z_test.astype(np.int32)) & 1
    return (x_flip | z_flip).astype(bool)
