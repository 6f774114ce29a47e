"""Sum-product belief propagation on the Tanner graph of each sector.

Messages live on Tanner-graph edges. Every neighbourhood sum is accumulated
slot by slot in a fixed order, so a syndrome decodes bit-identically whether it
is processed alone or inside a batch.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..lattice import CodeLayout
from .base import Decoder

_TINY = 1e-300
_EDGE = 1.0 - 1e-15


class BPOutcome(NamedTuple):
    hard: np.ndarray
    posterior_llr: np.ndarray
    iterations: np.ndarray | int
    converged: np.ndarray | bool


def channel_llr(prior, n: int) -> np.ndarray:
    p = np.broadcast_to(np.asarray(prior, dtype=float), (n,))
    if np.any((p <= 0) | (p >= 0.5)):
        raise ValueError(f"BP prior must lie in (0, 0.5), got {prior}")
    return np.log((1 - p) / p)


class TannerGraph:
    def __init__(self, h: np.ndarray):
        self.h = np.asarray(h, dtype=np.uint8)
        self.m, self.n = self.h.shape
        checks, variables = np.nonzero(self.h)
        self.edge_check = checks
        self.edge_var = variables
        self.n_edges = len(checks)
        # padded slot tables; padding points at a sentinel edge index
        self.check_slots = _slots(checks, self.m, self.n_edges)
        self.var_slots = _slots(variables, self.n, self.n_edges)


def _slots(owner: np.ndarray, count: int, sentinel: int) -> np.ndarray:
    width = max(1, int(np.bincount(owner, minlength=count).max(initial=0)))
    table = np.full((count, width), sentinel, dtype=np.intp)
    fill = np.zeros(count, dtype=np.intp)
    for e, o in enumerate(owner):
        table[o, fill[o]] = e
        fill[o] += 1
    return table


def belief_propagation_batch(
    graph: TannerGraph, syndromes: np.ndarray, prior, max_iters: int = 50
) -> BPOutcome:
    """Flooding sum-product decoding for each row of ``syndromes``.

    Hard decisions (posterior flip probability above one half) are taken after
    every iteration; a row stops updating once its decision reproduces its
    syndrome.
    """
    s = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
    b = s.shape[0]
    n, ne = graph.n, graph.n_edges
    llr0 = channel_llr(prior, n)

    hard = np.zeros((b, n), np.uint8)
    posterior = np.broadcast_to(llr0, (b, n)).copy()
    iterations = np.zeros(b, np.int64)
    done = ~s.any(axis=1)
    if done.all() or max_iters == 0:
        return BPOutcome(hard, posterior, iterations, done)

    sign_s = np.where(s.astype(bool), -1.0, 1.0)[:, graph.edge_check]
    v2c = np.broadcast_to(llr0[graph.edge_var], (b, ne)).copy()
    active = np.flatnonzero(~done)
    for it in range(1, max_iters + 1):
        msg = v2c[active]
        t = np.tanh(msg / 2)
        # sentinel column: |t| = 1, positive
        mag = np.concatenate([np.log(np.maximum(np.abs(t), _TINY)), np.zeros((len(active), 1))], axis=1)
        neg = np.concatenate([(t < 0).astype(np.int64), np.zeros((len(active), 1), np.int64)], axis=1)
        row_mag = mag[:, graph.check_slots[:, 0]]
        row_neg = neg[:, graph.check_slots[:, 0]]
        for k in range(1, graph.check_slots.shape[1]):
            row_mag = row_mag + mag[:, graph.check_slots[:, k]]
            row_neg = row_neg + neg[:, graph.check_slots[:, k]]
        excl_mag = row_mag[:, graph.edge_check] - mag[:, :ne]
        excl_neg = (row_neg[:, graph.edge_check] - neg[:, :ne]) % 2
        prod = np.exp(excl_mag) * np.where(excl_neg, -1.0, 1.0)
        c2v = sign_s[active] * 2 * np.arctanh(np.clip(prod, -_EDGE, _EDGE))

        c2v_pad = np.concatenate([c2v, np.zeros((len(active), 1))], axis=1)
        post = np.broadcast_to(llr0, (len(active), n)).copy()
        for k in range(graph.var_slots.shape[1]):
            post = post + c2v_pad[:, graph.var_slots[:, k]]
        v2c[active] = post[:, graph.edge_var] - c2v

        decision = (post < 0).astype(np.uint8)
        posterior[active] = post
        hard[active] = decision
        iterations[active] = it
        check = (decision.astype(np.int32) @ graph.h.T.astype(np.int32)) & 1
        converged = (check == s[active]).all(axis=1)
        done[active[converged]] = True
        active = active[~converged]
        if active.size == 0:
            break
    return BPOutcome(hard, posterior, iterations, done)


def belief_propagation(h: np.ndarray, syndrome: np.ndarray, prior, max_iters: int = 50) -> BPOutcome:
    """Single-syndrome form of :func:`belief_propagation_batch`."""
    out = belief_propagation_batch(TannerGraph(h), np.asarray(syndrome)[None, :], prior, max_iters)
    return BPOutcome(out.hard[0], out.posterior_llr[0], int(out.iterations[0]), bool(out.converged[0]))


def perturbation_factors(n: int, restart: int, strength: float) -> np.ndarray:
    """Fixed multiplicative prior perturbation ``exp(strength * u)``, ``u`` in [-1, 1).

    The factors depend only on ``(n, restart)``, so a perturbed retry is still a
    pure function of the syndrome.
    """
    from ..noise import splitmix64_array, words_to_uniform

    seeds = splitmix64_array(np.arange(n, dtype=np.uint64) + np.uint64(restart << 32))
    return np.exp(strength * (2 * words_to_uniform(seeds) - 1))


class BeliefPropagationDecoder(Decoder):
    """Sum-product BP with perturbed-prior retries on non-convergence.

    Qubits sitting symmetrically on one check (two boundary qubits of the same
    plaquette, say) leave plain BP undecided forever. When a pass fails, it is
    rerun up to ``restarts`` times with priors scaled by fixed pseudo-random
    factors; the decode fails only if every pass does.
    """

    name = "bp"

    def __init__(
        self,
        layout: CodeLayout,
        prior: float = 0.05,
        max_iters: int = 50,
        restarts: int = 3,
        strength: float = 1.0,
    ):
        super().__init__(layout)
        channel_llr(prior, 1)
        if max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {max_iters}")
        if restarts < 0:
            raise ValueError(f"restarts must be >= 0, got {restarts}")
        self.prior = float(prior)
        self.max_iters = int(max_iters)
        self.restarts = int(restarts)
        self.strength = float(strength)
        n = layout.n_data
        self._priors = [np.full(n, self.prior)] + [
            np.minimum(self.prior * perturbation_factors(n, r, self.strength), 0.5 - 1e-9)
            for r in range(1, self.restarts + 1)
        ]
        self._tanner = {s: TannerGraph(g.h) for s, g in self.graphs.items()}

    def get_params(self) -> dict:
        return {
            "prior": self.prior,
            "max_iters": self.max_iters,
            "restarts": self.restarts,
            "strength": self.strength,
        }

    def _run(self, sector: str, syndromes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        hard = None
        converged = None
        pending = np.arange(syndromes.shape[0])
        for priors in self._priors:
            out = belief_propagation_batch(self._tanner[sector], syndromes[pending], priors, self.max_iters)
            if hard is None:
                hard, converged = out.hard, out.converged.copy()
            else:
                fixed = out.converged
                hard[pending[fixed]] = out.hard[fixed]
                converged[pending[fixed]] = True
            pending = np.flatnonzero(~converged)
            if pending.size == 0:
                break
        return hard, converged

    def decode_sector(self, sector, syndrome):
        hard, converged = self._run(sector, syndrome[None, :])
        return hard[0], not bool(converged[0]), float("nan")

    def _decode_rows(self, sector, rows):
        # decode all uncached unique syndromes in one vectorised pass
        if rows.shape[0]:
            uniq = np.unique(rows, axis=0)
            missing = [u for u in uniq if u.any() and (sector, u.tobytes()) not in self._cache]
            if missing:
                batch = np.array(missing, dtype=np.uint8)
                hard, converged = self._run(sector, batch)
                if len(self._cache) + len(missing) >= self.cache_limit:
                    self._cache.clear()
                for row, h, conv in zip(batch, hard, converged):
                    self._cache[(sector, row.tobytes())] = (h, not bool(conv), float("nan"))
        return super()._decode_rows(sector, rows)
