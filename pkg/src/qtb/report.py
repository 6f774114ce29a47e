"""Tables derived from sweep records: Pareto fronts, joins and bootstrap summaries."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import stats
from .harness import AblationResult, FidelityReport, SweepPointRecord, curves_by_key
from .io import EmptyDataError


class GridMismatchError(ValueError):
    """Compared sweeps do not share their grid coordinates."""


@dataclass
class ParetoRow:
    decoder: str
    runtime_s: float
    ler: float
    pareto: bool


def pareto_report(entries: Sequence[tuple[str, float, float]]) -> list[ParetoRow]:
    """Flag decoders not dominated in (runtime, LER).

    A decoder is dominated if another is no worse on both axes and strictly
    better on at least one.
    """
    if not entries:
        raise EmptyDataError("no decoders to compare")
    rows = []
    for name, rt, ler in entries:
        dominated = any(
            (rt2 <= rt and ler2 <= ler) and (rt2 < rt or ler2 < ler)
            for other, rt2, ler2 in entries
            if other != name
        )
        rows.append(ParetoRow(name, float(rt), float(ler), not dominated))
    return rows


def pareto_from_records(records: Sequence[SweepPointRecord], reference_x: float, distance: int | None = None):
    """Total sweep runtime and LER at ``reference_x`` per decoder."""
    if distance is None:
        distance = max(r.distance for r in records)
    entries = []
    for decoder in sorted({r.decoder for r in records}):
        rows = [r for r in records if r.decoder == decoder and r.distance == distance]
        at_ref = [r for r in rows if math.isclose(r.x, reference_x, rel_tol=0, abs_tol=1e-12)]
        if not at_ref:
            raise GridMismatchError(f"{decoder}: reference point x={reference_x} missing at d={distance}")
        entries.append((decoder, sum(r.runtime_s for r in rows), at_ref[0].ler))
    return pareto_report(entries)


def merge_shared_grid(tables: dict[str, Sequence[SweepPointRecord]]):
    """Inner-join tables on exact ``(distance, x)``.

    Returns ``(joined, dropped)``: ``joined`` maps each shared key to the
    per-table records, ``dropped`` counts unmatched rows per table.
    """
    if len(tables) < 2:
        raise ValueError("need at least two tables to join")
    keyed = {name: {(r.distance, r.x): r for r in rows} for name, rows in tables.items()}
    shared = set.intersection(*(set(k) for k in keyed.values()))
    if not shared:
        raise GridMismatchError("tables share no (distance, x) points")
    dropped = {name: len(k) - len(shared) for name, k in keyed.items()}
    if any(dropped.values()):
        msg = f"dropped rows without a counterpart: {dropped}"
        warnings.warn(msg, stacklevel=2)
    joined = {key: {name: keyed[name][key] for name in tables} for key in sorted(shared)}
    return joined, dropped


def check_grid_alignment(records: Sequence[SweepPointRecord]) -> None:
    """Every decoder must carry byte-identical x coordinates at every distance."""
    if not records:
        raise EmptyDataError("no records")
    grids: dict[int, dict[str, list[float]]] = {}
    for r in records:
        grids.setdefault(r.distance, {}).setdefault(r.decoder, []).append(r.x)
    for d, per_decoder in grids.items():
        reference = None
        for name, xs in sorted(per_decoder.items()):
            xs = sorted(xs)
            if reference is None:
                reference = (name, xs)
            elif xs != reference[1]:
                raise GridMismatchError(f"d={d}: grid of {name} differs from grid of {reference[0]}")


def _pairs(curves):
    for decoder in sorted({k[0] for k in curves}):
        ds = sorted(d for (name, d) in curves if name == decoder)
        for d1, d2 in zip(ds, ds[1:]):
            yield decoder, d1, d2


def crossing_bootstrap_rows(records, resamples: int, seed: int) -> list[dict]:
    curves = curves_by_key(records)
    rows = []
    for i, (decoder, d1, d2) in enumerate(_pairs(curves)):
        summary = stats.bootstrap_crossings(
            curves[(decoder, d1)], curves[(decoder, d2)], resamples, seed=[seed, i], decoder=decoder, pair=(d1, d2)
        )
        rows.append(
            {
                "decoder": decoder,
                "d_small": d1,
                "d_large": d2,
                "q05": summary.q05,
                "q50": summary.median,
                "q95": summary.q95,
                "valid_count": summary.valid_count,
                "total_resamples": summary.total_resamples,
            }
        )
    if not rows:
        raise EmptyDataError("crossing bootstrap needs at least two distances per decoder")
    return rows


def distance_gain_rows(records) -> list[dict]:
    curves = curves_by_key(records)
    rows = []
    for decoder, d1, d2 in _pairs(curves):
        small, large = curves[(decoder, d1)], curves[(decoder, d2)]
        for x, g in zip(small.x, stats.distance_gain(small, large)):
            rows.append({"decoder": decoder, "d_small": d1, "d_large": d2, "x": float(x), "gain": float(g)})
    if not rows:
        raise EmptyDataError("distance gain needs at least two distances per decoder")
    return rows


def rank_stability_rows(records, resamples: int, seed: int) -> list[dict]:
    curves = curves_by_key(records)
    rows = []
    for i, d in enumerate(sorted({k[1] for k in curves})):
        per_decoder = {name: c for (name, dd), c in curves.items() if dd == d}
        if len(per_decoder) < 2:
            continue
        for band in stats.rank_stability(per_decoder, resamples, seed=[seed, i]):
            rows.append(
                {
                    "distance": d,
                    "x": band.x,
                    "decoder": band.decoder,
                    "rank": band.rank,
                    "q05": band.q05,
                    "q50": band.q50,
                    "q95": band.q95,
                }
            )
    if not rows:
        raise EmptyDataError("rank stability needs at least two decoders")
    rows.sort(key=lambda r: (r["distance"], r["x"], r["decoder"]))
    return rows


def effect_size_rows(records, resamples: int, seed: int) -> list[dict]:
    """All ordered decoder pairs per distance (row minus column)."""
    curves = curves_by_key(records)
    rows = []
    for d in sorted({k[1] for k in curves}):
        names = sorted(name for (name, dd) in curves if dd == d)
        for i, a in enumerate(names):
            for j, b in enumerate(names):
                if a == b:
                    continue
                es = stats.effect_size(curves[(a, d)], curves[(b, d)], resamples, seed=[seed, d, i, j], names=(a, b))
                rows.append(
                    {
                        "distance": d,
                        "decoder_a": a,
                        "decoder_b": b,
                        "mean_delta": es.mean_delta,
                        "ci_low": es.ci_low,
                        "ci_high": es.ci_high,
                    }
                )
    if not rows:
        raise EmptyDataError("effect size needs at least two decoders")
    return rows


def ablation_rows(results: Sequence[AblationResult]) -> list[dict]:
    rows = []
    for res in results:
        for level, pt in zip(res.levels, res.points):
            rows.append(
                {
                    "decoder": res.decoder,
                    "distance": res.distance,
                    "component": res.component,
                    "level": level,
                    "trials": pt.trials,
                    "failures": pt.failures,
                    "ler": pt.ler,
                    "ci_low": pt.ci_low,
                    "ci_high": pt.ci_high,
                    "slope": res.slope,
                }
            )
    return rows


def fidelity_rows(report: FidelityReport, stable: bool = False) -> list[dict]:
    t_s = 0.0 if stable else report.t_serial
    t_p = 0.0 if stable else report.t_parallel
    rows = []
    for (decoder, d, x), ls, lp, delta in zip(report.keys, report.ler_serial, report.ler_parallel, report.deltas):
        rows.append(
            {
                "decoder": decoder,
                "distance": d,
                "x": x,
                "ler_serial": float(ls),
                "ler_parallel": float(lp),
                "abs_delta": float(delta),
                "mean_abs_delta": report.mean_delta,
                "max_abs_delta": report.max_delta,
                "correlation": report.correlation,
                "t_serial": t_s,
                "t_parallel": t_p,
                "speedup": math.nan if stable else report.speedup,
                "throughput_parallel": math.nan if stable else report.throughput_parallel,
            }
        )
    return rows


def crossing_rows(table) -> list[dict]:
    return [
        {"decoder": r.decoder, "d_small": r.d_small, "d_large": r.d_large, "crossing": r.crossing} for r in table
    ]


def ler_matrix(records) -> np.ndarray:
    return np.array([r.ler for r in records])
