"""Seeded Pauli and GKP noise samplers.

Every random bit is a pure function of ``(base_seed, distance, sweep_index,
trial_index, lane, position)``, so a trial replays identically no matter which
worker evaluates it or in what order.

Seed mixing: ``s = base_seed``, then for each of ``distance, sweep_index,
trial_index, lane``: ``s = splitmix64(s ^ (value * GOLDEN))``. Draw ``i`` of a
lane stream is ``splitmix64(s + i * GOLDEN)``, i.e. the ordinary splitmix64
sequence started at ``s``. Uniforms take the top 53 bits; Gaussians use the
inverse normal CDF of ``(k + 0.5) / 2**53``.

Lane layout (``n`` data qubits, ``m_z``/``m_x`` checks):

====  ========  ==========================================================
lane  name      draws
====  ========  ==========================================================
0     q         ``n``: Pauli X flips or GKP position displacements
1     p         ``n``: Pauli Z flips or GKP momentum displacements
2     gate      ``2n``: X flips then Z flips
3     idle      ``2n``: X flips then Z flips
4     loss      ``3n``: loss decision, replacement X coin, replacement Z coin
5     meas      ``m_z + m_x``: flips of ``s_z`` then ``s_x``
====  ========  ==========================================================

GKP channels compose in the order digitization, gate, idle, loss, measurement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .lattice import CodeLayout, ErrorState

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
GKP_LATTICE = math.sqrt(math.pi)

LANE_Q, LANE_P, LANE_GATE, LANE_IDLE, LANE_LOSS, LANE_MEAS = range(6)

_U = np.uint64
_GOLDEN64 = _U(GOLDEN)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN64
    z = (z ^ (z >> _U(30))) * _M1
    z = (z ^ (z >> _U(27))) * _M2
    return z ^ (z >> _U(31))


@dataclass(frozen=True)
class SeedContext:
    base_seed: int
    distance: int
    sweep_index: int
    trial_index: int


def mix_seed(ctx: SeedContext, lane: int = 0) -> int:
    s = ctx.base_seed & MASK64
    for value in (ctx.distance, ctx.sweep_index, ctx.trial_index, lane):
        s = splitmix64(s ^ ((value * GOLDEN) & MASK64))
    return s


def mix_seeds(
    base_seed: int, distance: int, sweep_index: int, trial_indices, lane: int
) -> np.ndarray:
    """Vectorised :func:`mix_seed` over an array of trial indices."""
    s = splitmix64((base_seed & MASK64) ^ ((distance * GOLDEN) & MASK64))
    s = splitmix64(s ^ ((sweep_index * GOLDEN) & MASK64))
    trials = np.asarray(trial_indices, dtype=np.uint64)
    s = splitmix64_array(_U(s) ^ (trials * _GOLDEN64))
    return splitmix64_array(s ^ _U((lane * GOLDEN) & MASK64))


def stream_words(seeds: np.ndarray, count: int, offset: int = 0) -> np.ndarray:
    """Draws ``offset .. offset+count-1`` of each seed's stream, shape (T, count)."""
    idx = np.arange(offset, offset + count, dtype=np.uint64) * _GOLDEN64
    return splitmix64_array(seeds[:, None] + idx[None, :])


def words_to_uniform(words: np.ndarray) -> np.ndarray:
    return (words >> _U(11)).astype(np.float64) * 2.0**-53


def words_to_normal(words: np.ndarray) -> np.ndarray:
    return ndtri(((words >> _U(11)).astype(np.float64) + 0.5) * 2.0**-53)


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class NoiseConfig:
    mode: str = "pauli"
    p: float = 0.0
    sigma: float = 0.0
    p_gate: float = 0.0
    p_meas: float = 0.0
    p_idle: float = 0.0
    p_loss: float = 0.0
    loss_map: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        if self.mode not in ("pauli", "gkp"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        for name in ("p", "p_gate", "p_meas", "p_idle", "p_loss"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.loss_map is not None:
            object.__setattr__(self, "loss_map", tuple(float(v) for v in self.loss_map))
            if any(not 0.0 <= v <= 1.0 for v in self.loss_map):
                raise ValueError("loss_map entries must lie in [0, 1]")

    def with_value(self, name: str, value: float) -> NoiseConfig:
        return replace(self, **{name: value})

    def loss_probabilities(self, n: int) -> np.ndarray:
        if self.loss_map is None:
            return np.full(n, self.p_loss)
        if len(self.loss_map) != n:
            raise ValueError(f"loss_map has {len(self.loss_map)} entries, layout has {n} qubits")
        return np.asarray(self.loss_map, dtype=float)


PAPER_DEFAULT = NoiseConfig(
    mode="gkp", sigma=0.20, p_gate=0.005, p_meas=0.01, p_idle=0.005, p_loss=0.005
)
PRESETS = {"paper-default": PAPER_DEFAULT}


def load_loss_map(path: str | Path) -> tuple[float, ...]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError(f"{path}: loss map must be a JSON array of probabilities")
    return tuple(float(v) for v in data)


# -- GKP digitization ------------------------------------------------------


def gkp_digitize(delta):
    """Parity of the nearest lattice index of a displacement, ties away from zero."""
    n = np.floor(np.abs(np.asarray(delta, dtype=float)) / GKP_LATTICE + 0.5)
    flips = (n.astype(np.int64) & 1).astype(np.uint8)
    return int(flips) if flips.ndim == 0 else flips


def gkp_flip_probability(sigma: float, terms: int = 64) -> float:
    """Probability that an N(0, sigma^2) displacement digitizes to a flip."""
    if sigma <= 0:
        return 0.0
    total = 0.0
    for n in range(1, 2 * terms, 2):
        lo = (n - 0.5) * GKP_LATTICE / sigma
        hi = (n + 0.5) * GKP_LATTICE / sigma
        mass = ndtr(-lo) - ndtr(-hi)
        total += mass
        if mass < 1e-300:
            break
    return float(min(1.0, 2.0 * total))


def _xor_prob(a: float, b: float) -> float:
    return a * (1 - b) + b * (1 - a)


def effective_flip_probability(cfg: NoiseConfig) -> float:
    """Marginal per-qubit X (or Z) flip probability implied by ``cfg``."""
    if cfg.mode == "pauli":
        return cfg.p
    p = _xor_prob(_xor_prob(gkp_flip_probability(cfg.sigma), cfg.p_gate), cfg.p_idle)
    loss = float(np.mean(cfg.loss_map)) if cfg.loss_map is not None else cfg.p_loss
    return (1 - loss) * p + loss * 0.5


# -- samplers --------------------------------------------------------------


class NoiseBatch(NamedTuple):
    """Sampled noise for a block of trials, one row per trial."""

    e_x: np.ndarray
    e_z: np.ndarray
    erased: np.ndarray
    meas_z: np.ndarray
    meas_x: np.ndarray

    def error_state(self, row: int = 0) -> ErrorState:
        return ErrorState(self.e_x[row], self.e_z[row], self.erased[row])


def _bernoulli(seeds: np.ndarray, prob, count: int, offset: int = 0) -> np.ndarray:
    return (words_to_uniform(stream_words(seeds, count, offset)) < prob).astype(np.uint8)


def sample_batch(
    layout: CodeLayout,
    cfg: NoiseConfig,
    base_seed: int,
    sweep_index: int,
    trial_indices,
) -> NoiseBatch:
    trials = np.atleast_1d(np.asarray(trial_indices, dtype=np.uint64))
    n, d = layout.n_data, layout.distance
    t = trials.shape[0]

    def seeds(lane):
        return mix_seeds(base_seed, d, sweep_index, trials, lane)

    if cfg.mode == "pauli":
        e_x = _bernoulli(seeds(LANE_Q), cfg.p, n)
        e_z = _bernoulli(seeds(LANE_P), cfg.p, n)
        zeros = np.zeros((t, n), np.uint8)
        return NoiseBatch(
            e_x, e_z, zeros, np.zeros((t, layout.m_z), np.uint8), np.zeros((t, layout.m_x), np.uint8)
        )

    if cfg.sigma > 0:
        e_x = gkp_digitize(cfg.sigma * words_to_normal(stream_words(seeds(LANE_Q), n)))
        e_z = gkp_digitize(cfg.sigma * words_to_normal(stream_words(seeds(LANE_P), n)))
    else:
        e_x = np.zeros((t, n), np.uint8)
        e_z = np.zeros((t, n), np.uint8)
    for lane, prob in ((LANE_GATE, cfg.p_gate), (LANE_IDLE, cfg.p_idle)):
        if prob > 0:
            flips = _bernoulli(seeds(lane), prob, 2 * n)
            e_x ^= flips[:, :n]
            e_z ^= flips[:, n:]

    loss_probs = cfg.loss_probabilities(n)
    if loss_probs.any():
        words = stream_words(seeds(LANE_LOSS), 3 * n)
        erased = (words_to_uniform(words[:, :n]) < loss_probs[None, :]).astype(np.uint8)
        coin_x = (words_to_uniform(words[:, n : 2 * n]) < 0.5).astype(np.uint8)
        coin_z = (words_to_uniform(words[:, 2 * n :]) < 0.5).astype(np.uint8)
        lost = erased.astype(bool)
        e_x = np.where(lost, coin_x, e_x)
        e_z = np.where(lost, coin_z, e_z)
    else:
        erased = np.zeros((t, n), np.uint8)

    if cfg.p_meas > 0:
        flips = _bernoulli(seeds(LANE_MEAS), cfg.p_meas, layout.m_z + layout.m_x)
        meas_z, meas_x = flips[:, : layout.m_z], flips[:, layout.m_z :]
    else:
        meas_z = np.zeros((t, layout.m_z), np.uint8)
        meas_x = np.zeros((t, layout.m_x), np.uint8)
    return NoiseBatch(e_x, e_z, erased, meas_z, meas_x)


def sample_pauli(layout: CodeLayout, cfg: NoiseConfig, ctx: SeedContext) -> ErrorState:
    if cfg.mode != "pauli":
        raise ValueError("sample_pauli requires a pauli-mode NoiseConfig")
    _check_ctx(layout, ctx)
    return sample_batch(layout, cfg, ctx.base_seed, ctx.sweep_index, [ctx.trial_index]).error_state()


def sample_gkp(
    layout: CodeLayout, cfg: NoiseConfig, ctx: SeedContext
) -> tuple[ErrorState, tuple[np.ndarray, np.ndarray]]:
    """One GKP trial: the data error and the ``(s_z, s_x)`` measurement flip masks."""
    if cfg.mode != "gkp":
        raise ValueError("sample_gkp requires a gkp-mode NoiseConfig")
    _check_ctx(layout, ctx)
    batch = sample_batch(layout, cfg, ctx.base_seed, ctx.sweep_index, [ctx.trial_index])
    return batch.error_state(), (batch.meas_z[0], batch.meas_x[0])


def _check_ctx(layout: CodeLayout, ctx: SeedContext) -> None:
    if ctx.distance != layout.distance:
        raise ValueError(
            f"seed context distance {ctx.distance} does not match layout distance {layout.distance}"
        )
