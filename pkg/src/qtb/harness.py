"""Monte Carlo sweep execution.

For every decoder, distance and grid point the harness samples ``trials``
independent noise realisations, extracts syndromes, decodes, and counts logical
failures. Trials are split into contiguous shards that may run in worker
processes; each trial draws its randomness from its own mixed seed and shard
counters are summed, so the output does not depend on the worker count.
"""

from __future__ import annotations

import math
import multiprocessing
import os
import time
import warnings
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import stats
from .decoders import DECODER_NAMES, Decoder, GuideTable, make_decoder
from .lattice import build_code, gf2_matvec, logical_failures
from .noise import PAPER_DEFAULT, NoiseConfig, effective_flip_probability, sample_batch


SHARD_LIMIT = 4096
ABLATION_COMPONENTS = {"gate": "p_gate", "meas": "p_meas", "idle": "p_idle", "loss": "p_loss"}
ABLATION_LEVELS = (0.0, 0.0025, 0.005, 0.01)
DENSE_WINDOW = (0.08, 0.24, 0.01)


@dataclass
class SweepSpec:
    mode: str = "pauli"
    decoders: tuple[str, ...] = ("mwpm",)
    distances: tuple[int, ...] = (3, 5, 7)
    variable: str | None = None
    start: float = 0.01
    stop: float = 0.1
    step: float = 0.01
    values: tuple[float, ...] | None = None
    trials: int = 1000
    base_seed: int = 0
    threads: int = 1
    noise: NoiseConfig | None = None
    guide_table: str | None = None
    bp_max_iters: int = 50
    parallel_points: bool = False

    def __post_init__(self):
        self.decoders = tuple(self.decoders)
        self.distances = tuple(int(d) for d in self.distances)
        if self.mode not in ("pauli", "gkp"):
            raise ValueError(f"unknown mode {self.mode!r}")
        unknown = [d for d in self.decoders if d not in DECODER_NAMES]
        if unknown:
            raise ValueError(f"unknown decoder(s) {unknown}; expected {list(DECODER_NAMES)}")
        if not self.decoders:
            raise ValueError("no decoders requested")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.values is None and not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.noise is None:
            self.noise = PAPER_DEFAULT if self.mode == "gkp" else NoiseConfig(mode="pauli")
        elif self.noise.mode != self.mode:
            self.noise = replace(self.noise, mode=self.mode)
        if self.variable is None:
            self.variable = "sigma" if self.mode == "gkp" else "p"
        if not hasattr(self.noise, self.variable) or self.variable in ("mode", "loss_map"):
            raise ValueError(f"cannot sweep over {self.variable!r}")

    def grid(self) -> np.ndarray:
        if self.values is not None:
            pts = np.asarray(self.values, dtype=float)
        else:
            if self.stop < self.start:
                raise ValueError("empty sweep grid: stop < start")
            count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
            pts = np.array([round(self.start + i * self.step, 12) for i in range(count)])
        if pts.size == 0:
            raise ValueError("empty sweep grid")
        return pts

    def resolved_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


@dataclass
class SweepPointRecord:
    mode: str
    decoder: str
    distance: int
    variable: str
    x: float
    trials: int
    failures: int
    ler: float
    ci_low: float
    ci_high: float
    mean_defects: float
    mean_correction_weight: float
    decoder_failure_rate: float
    runtime_s: float
    base_seed: int

    @property
    def estimate(self) -> stats.PointEstimate:
        return stats.PointEstimate(self.trials, self.failures, self.ler, self.ci_low, self.ci_high)


@dataclass
class SweepResult:
    records: list[SweepPointRecord]
    skipped: list[tuple[str, str]] = field(default_factory=list)
    runtime_s: float = 0.0

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


# -- trial evaluation (runs inside workers) --------------------------------


@dataclass(frozen=True)
class _Shard:
    decoder: str
    distance: int
    noise: NoiseConfig
    base_seed: int
    sweep_index: int
    start: int
    stop: int
    guide: tuple[tuple[str, float], ...] | None
    bp_prior: float
    bp_max_iters: int


_decoder_cache: dict[tuple, Decoder] = {}


def _decoder_for(shard: _Shard) -> Decoder:
    key = (shard.decoder, shard.distance, shard.guide, shard.bp_prior, shard.bp_max_iters)
    dec = _decoder_cache.get(key)
    if dec is None:
        if len(_decoder_cache) > 64:
            _decoder_cache.clear()
        dec = make_decoder(
            shard.decoder,
            build_code(shard.distance),
            guide=GuideTable(dict(shard.guide)) if shard.guide is not None else None,
            prior=shard.bp_prior,
            max_iters=shard.bp_max_iters,
        )
        _decoder_cache[key] = dec
    return dec


def run_shard(shard: _Shard) -> np.ndarray:
    """Counters ``[failures, defects, correction weight, decoder failures]`` for a trial range."""
    layout = build_code(shard.distance)
    decoder = _decoder_for(shard)
    trials = np.arange(shard.start, shard.stop, dtype=np.uint64)
    noise = sample_batch(layout, shard.noise, shard.base_seed, shard.sweep_index, trials)
    s_z = gf2_matvec(layout.h_z, noise.e_x) ^ noise.meas_z
    s_x = gf2_matvec(layout.h_x, noise.e_z) ^ noise.meas_x
    c_x, c_z, failed = decoder.decode_batch(s_z, s_x)
    fail = logical_failures(layout, noise.e_x ^ c_x, noise.e_z ^ c_z)
    return np.array(
        [
            int(fail.sum()),
            int(s_z.sum()) + int(s_x.sum()),
            int(c_x.sum()) + int(c_z.sum()),
            int(failed.sum()),
        ],
        dtype=np.int64,
    )


def bp_prior_for(cfg: NoiseConfig) -> float:
    return float(min(max(effective_flip_probability(cfg), 1e-6), 0.5 - 1e-6))


# -- orchestration ---------------------------------------------------------


def _shard_bounds(trials: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, min(SHARD_LIMIT, math.ceil(trials / workers)))
    return [(a, min(a + size, trials)) for a in range(0, trials, size)]


def _resolve_guide(spec: SweepSpec) -> tuple[GuideTable | None, str | None]:
    if spec.guide_table is None:
        return None, "no guide table configured"
    path = Path(spec.guide_table)
    if not path.is_file():
        return None, f"guide table {path} not found"
    return GuideTable.load(path), None


def _executor(workers: int) -> Executor | None:
    if workers <= 1:
        return None
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else None)
    return ProcessPoolExecutor(max_workers=workers, mp_context=ctx)


def run_sweep(spec: SweepSpec) -> SweepResult:
    grid = spec.grid()
    workers = spec.resolved_threads()
    guide, guide_problem = (None, None)
    if "guided-mwpm" in spec.decoders:
        guide, guide_problem = _resolve_guide(spec)

    # the decoder list is fixed here and applied to every point
    decoders = []
    skipped = []
    for name in spec.decoders:
        if name == "guided-mwpm" and guide is None:
            msg = f"skipping guided-mwpm: {guide_problem}"
            warnings.warn(msg, stacklevel=2)
            skipped.append((name, guide_problem))
            continue
        decoders.append(name)
    guide_items = tuple(sorted(guide.multipliers.items())) if guide is not None else None

    records: list[SweepPointRecord] = []
    t_begin = time.perf_counter()
    pool = _executor(workers)
    try:
        for name in decoders:
            for d in spec.distances:
                build_code(d)
                shard_groups = []
                for idx, x in enumerate(grid):
                    cfg = spec.noise.with_value(spec.variable, float(x))
                    shards = [
                        _Shard(
                            decoder=name,
                            distance=d,
                            noise=cfg,
                            base_seed=spec.base_seed,
                            sweep_index=idx,
                            start=a,
                            stop=b,
                            guide=guide_items if name == "guided-mwpm" else None,
                            bp_prior=bp_prior_for(cfg) if name == "bp" else 0.05,
                            bp_max_iters=spec.bp_max_iters,
                        )
                        for a, b in _shard_bounds(spec.trials, workers)
                    ]
                    shard_groups.append(shards)
                # untimed warm-up trial
                run_shard(replace(shard_groups[0][0], stop=shard_groups[0][0].start + 1))
                records.extend(_run_points(spec, name, d, grid, shard_groups, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(records, skipped, time.perf_counter() - t_begin)


def _map(pool: Executor | None, shards: list[_Shard]) -> list[np.ndarray]:
    if pool is None:
        return [run_shard(s) for s in shards]
    return list(pool.map(run_shard, shards))


def _run_points(spec, name, d, grid, shard_groups, pool) -> list[SweepPointRecord]:
    if spec.parallel_points:
        t0 = time.perf_counter()
        flat = _map(pool, [s for group in shard_groups for s in group])
        per_point = (time.perf_counter() - t0) / len(grid)
        totals, i = [], 0
        for group in shard_groups:
            totals.append(np.sum(flat[i : i + len(group)], axis=0))
            i += len(group)
        times = [per_point] * len(grid)
    else:
        totals, times = [], []
        for group in shard_groups:
            t0 = time.perf_counter()
            totals.append(np.sum(_map(pool, group), axis=0))
            times.append(time.perf_counter() - t0)

    out = []
    n = spec.trials
    for x, counts, runtime in zip(grid, totals, times):
        failures, defects, weight, dec_fail = (int(v) for v in counts)
        est = stats.wilson_ci(failures, n)
        out.append(
            SweepPointRecord(
                mode=spec.mode,
                decoder=name,
                distance=d,
                variable=spec.variable,
                x=float(x),
                trials=n,
                failures=failures,
                ler=est.ler,
                ci_low=est.ci_low,
                ci_high=est.ci_high,
                mean_defects=defects / n,
                mean_correction_weight=weight / n,
                decoder_failure_rate=dec_fail / n,
                runtime_s=runtime,
                base_seed=spec.base_seed,
            )
        )
    return out


# -- analyses built on sweeps ----------------------------------------------


def curves_by_key(records) -> dict[tuple[str, int], stats.Curve]:
    """Group records into ``(decoder, distance) -> Curve`` sorted by x."""
    groups: dict[tuple[str, int], list[SweepPointRecord]] = {}
    for r in records:
        groups.setdefault((r.decoder, r.distance), []).append(r)
    out = {}
    for key, rows in groups.items():
        rows.sort(key=lambda r: r.x)
        out[key] = stats.Curve([r.x for r in rows], [r.trials for r in rows], [r.failures for r in rows])
    return out


@dataclass
class FidelityReport:
    t_serial: float
    t_parallel: float
    speedup: float
    throughput_serial: float
    throughput_parallel: float
    keys: list[tuple[str, int, float]]
    ler_serial: np.ndarray
    ler_parallel: np.ndarray
    deltas: np.ndarray
    mean_delta: float
    max_delta: float
    correlation: float
    max_decoder_failure_delta: float
    serial: SweepResult = field(repr=False, default=None)
    parallel: SweepResult = field(repr=False, default=None)


def run_fidelity_study(spec: SweepSpec, serial_threads: int = 1, parallel_threads: int = 4) -> FidelityReport:
    if parallel_threads < 2:
        raise ValueError("the parallel run needs at least two workers")
    # both timed runs start cold: forked workers would otherwise inherit the
    # syndrome memo filled by the serial run
    _decoder_cache.clear()
    serial = run_sweep(replace(spec, threads=serial_threads))
    _decoder_cache.clear()
    parallel = run_sweep(replace(spec, threads=parallel_threads))
    s_map = {(r.decoder, r.distance, r.x): r for r in serial.records}
    p_map = {(r.decoder, r.distance, r.x): r for r in parallel.records}
    keys = sorted(set(s_map) & set(p_map))
    if not keys:
        raise ValueError("serial and parallel runs share no sweep points")
    ler_s = np.array([s_map[k].ler for k in keys])
    ler_p = np.array([p_map[k].ler for k in keys])
    fd = stats.fidelity_delta(ler_s, ler_p)
    total = spec.trials * len(keys)
    return FidelityReport(
        t_serial=serial.runtime_s,
        t_parallel=parallel.runtime_s,
        speedup=stats.speedup(serial.runtime_s, parallel.runtime_s),
        throughput_serial=stats.throughput(total, serial.runtime_s),
        throughput_parallel=stats.throughput(total, parallel.runtime_s),
        keys=keys,
        ler_serial=ler_s,
        ler_parallel=ler_p,
        deltas=fd.deltas,
        mean_delta=fd.mean,
        max_delta=fd.max,
        correlation=fd.correlation,
        max_decoder_failure_delta=max(
            abs(s_map[k].decoder_failure_rate - p_map[k].decoder_failure_rate) for k in keys
        ),
        serial=serial,
        parallel=parallel,
    )


@dataclass
class AblationResult:
    decoder: str
    distance: int
    component: str
    levels: tuple[float, ...]
    points: list[stats.PointEstimate]
    slope: float


def run_ablation(
    spec: SweepSpec, component: str, levels=ABLATION_LEVELS
) -> tuple[list[AblationResult], SweepResult]:
    """One-factor sweep of a single GKP channel; the others stay at ``spec.noise``."""
    if component not in ABLATION_COMPONENTS:
        raise ValueError(f"unknown ablation component {component!r}; expected {sorted(ABLATION_COMPONENTS)}")
    if spec.mode != "gkp":
        raise ValueError("noise ablation applies to gkp mode")
    levels = tuple(float(v) for v in levels)
    sweep = run_sweep(replace(spec, variable=ABLATION_COMPONENTS[component], values=levels))
    out = []
    for (decoder, d), curve in sorted(curves_by_key(sweep.records).items()):
        points = [stats.wilson_ci(int(k), int(n)) for k, n in zip(curve.failures, curve.trials)]
        out.append(
            AblationResult(decoder, d, component, tuple(curve.x), points, stats.ablation_slope(curve.x, curve.ler))
        )
    return out, sweep


@dataclass
class CrossingRow:
    decoder: str
    d_small: int
    d_large: int
    crossing: float


def crossing_table(records) -> list[CrossingRow]:
    """Interpolated crossing for every decoder and consecutive distance pair."""
    curves = curves_by_key(records)
    rows = []
    for decoder in sorted({k[0] for k in curves}):
        ds = sorted(d for (name, d) in curves if name == decoder)
        for d1, d2 in zip(ds, ds[1:]):
            a, b = curves[(decoder, d1)], curves[(decoder, d2)]
            x = stats._crossing(a.x, a.ler - b.ler) if np.array_equal(a.x, b.x) else math.nan
            rows.append(CrossingRow(decoder, d1, d2, x))
    return rows


def run_dense_window(spec: SweepSpec) -> tuple[SweepResult, list[CrossingRow]]:
    sweep = run_sweep(spec)
    return sweep, crossing_table(sweep.records)


def dense_window_spec(**overrides) -> SweepSpec:
    start, stop, step = DENSE_WINDOW
    base = dict(
        mode="gkp",
        decoders=DECODER_NAMES,
        distances=(3, 5, 7),
        start=start,
        stop=stop,
        step=step,
        trials=2500,
    )
    base.update(overrides)
    return SweepSpec(**base)
