from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
import pytest

from qtb import harness
from qtb.decoders import DECODER_NAMES, decode_mwpm
from qtb.harness import (
    SweepPointRecord,
    SweepSpec,
    bp_prior_for,
    crossing_table,
    curves_by_key,
    dense_window_spec,
    run_ablation,
    run_fidelity_study,
    run_sweep,
)
from qtb.lattice import ErrorState, build_code, extract_syndrome, logical_failure, residual
from qtb.noise import NoiseConfig


@pytest.fixture
def guide_path(tmp_path):
    path = tmp_path / "guide.json"
    path.write_text(json.dumps({"0-1": 1.2, "3-B": 1.3}))
    return str(path)


def test_noiseless_sweep_has_no_failures(guide_path):
    spec = SweepSpec(
        mode="pauli", decoders=DECODER_NAMES, distances=(3,), values=(0.0,), trials=1, guide_table=guide_path
    )
    result = run_sweep(spec)
    assert len(result) == 4
    for rec in result:
        assert rec.failures == 0 and rec.ler == 0 and rec.mean_defects == 0


def test_full_flip_matches_direct_evaluation():
    code = build_code(3)
    err = ErrorState(np.ones(9, np.uint8), np.ones(9, np.uint8))
    s = extract_syndrome(code, err)
    expected = logical_failure(code, residual(err, decode_mwpm(code, s).correction))
    rec = run_sweep(SweepSpec(mode="pauli", distances=(3,), values=(1.0,), trials=20)).records[0]
    assert rec.failures == (20 if expected else 0)
    assert rec.mean_defects == s.defect_count


def test_grid_points_are_exact_decimals():
    spec = SweepSpec(mode="pauli", start=0.08, stop=0.13, step=0.005)
    grid = spec.grid()
    assert len(grid) == 11
    assert grid[3] == 0.095 and grid[-1] == 0.13


def test_dense_window_has_seventeen_points():
    spec = dense_window_spec()
    assert len(spec.grid()) == 17
    assert spec.grid()[0] == 0.08 and spec.grid()[-1] == 0.24
    assert spec.trials == 2500 and spec.mode == "gkp"


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(decoders=("neural",)),
        dict(decoders=()),
        dict(mode="qudit"),
        dict(trials=0),
        dict(step=0.0),
        dict(variable="loss_map"),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        SweepSpec(start=0.2, stop=0.1).grid()
    with pytest.raises(ValueError):
        SweepSpec(values=()).grid()


def test_worker_count_does_not_change_counts(monkeypatch):
    spec = SweepSpec(mode="gkp", decoders=("mwpm", "uf", "bp"), distances=(3, 5), values=(0.2, 0.4), trials=700)
    serial = run_sweep(spec)
    monkeypatch.setattr(harness, "SHARD_LIMIT", 64)
    sharded = run_sweep(spec)
    parallel = run_sweep(dataclasses.replace(spec, threads=3))
    for a, b, c in zip(serial, sharded, parallel):
        assert (a.decoder, a.distance, a.x) == (b.decoder, b.distance, b.x) == (c.decoder, c.distance, c.x)
        assert a.failures == b.failures == c.failures
        assert a.mean_defects == b.mean_defects == c.mean_defects
        assert a.mean_correction_weight == c.mean_correction_weight


def test_parallel_points_mode_matches():
    base = dict(mode="pauli", decoders=("mwpm",), distances=(3,), values=(0.05, 0.1), trials=300)
    a = run_sweep(SweepSpec(**base))
    b = run_sweep(SweepSpec(**base, threads=2, parallel_points=True))
    assert [r.failures for r in a] == [r.failures for r in b]


def test_seed_changes_samples():
    base = dict(mode="pauli", distances=(5,), values=(0.1,), trials=2000)
    a = run_sweep(SweepSpec(**base, base_seed=1)).records[0]
    b = run_sweep(SweepSpec(**base, base_seed=2)).records[0]
    assert a.failures != b.failures or a.mean_defects != b.mean_defects


def test_record_fields_and_estimate():
    rec = run_sweep(SweepSpec(mode="pauli", distances=(3,), values=(0.05,), trials=200)).records[0]
    assert isinstance(rec, SweepPointRecord)
    assert rec.variable == "p" and rec.trials == 200
    assert rec.ci_low <= rec.ler <= rec.ci_high
    assert rec.estimate.failures == rec.failures
    assert rec.runtime_s > 0


def test_missing_guide_table_skips_with_warning(tmp_path):
    spec = SweepSpec(
        decoders=("mwpm", "guided-mwpm"), distances=(3,), values=(0.05,), trials=10,
        guide_table=str(tmp_path / "absent.json"),
    )
    with pytest.warns(UserWarning, match="guided-mwpm"):
        result = run_sweep(spec)
    assert {r.decoder for r in result} == {"mwpm"}
    assert result.skipped and result.skipped[0][0] == "guided-mwpm"


def test_bp_prior_clamped():
    assert bp_prior_for(NoiseConfig(p=0.0)) == pytest.approx(1e-6)
    assert bp_prior_for(NoiseConfig(p=0.6)) < 0.5
    assert bp_prior_for(NoiseConfig(p=0.1)) == 0.1


def test_ablation_without_noise_is_flat():
    spec = SweepSpec(
        mode="gkp", decoders=("mwpm",), distances=(3,), values=(0.0,), trials=200, noise=NoiseConfig(mode="gkp")
    )
    results, sweep = run_ablation(spec, "gate", (0.0, 0.0, 0.0, 0.0))
    assert all(pt.failures == 0 for pt in results[0].points)
    assert results[0].slope == 0
    assert {r.variable for r in sweep} == {"p_gate"}


def test_gate_ablation_slope_positive():
    spec = SweepSpec(
        mode="gkp", decoders=("mwpm",), distances=(3,), values=(0.0,), trials=10_000, noise=NoiseConfig(mode="gkp")
    )
    results, _ = run_ablation(spec, "gate", (0.0, 0.01))
    assert results[0].points[0].failures == 0
    assert results[0].slope > 0


def test_ablation_rejects_unknown_component_and_pauli():
    spec = SweepSpec(mode="gkp", decoders=("mwpm",), distances=(3,), values=(0.2,), trials=10)
    with pytest.raises(ValueError):
        run_ablation(spec, "crosstalk")
    with pytest.raises(ValueError):
        run_ablation(SweepSpec(mode="pauli", distances=(3,), values=(0.1,)), "gate")


def test_fidelity_study_is_exact():
    spec = SweepSpec(mode="gkp", decoders=("mwpm",), distances=(3,), values=(0.2, 0.3), trials=400)
    report = run_fidelity_study(spec, serial_threads=1, parallel_threads=2)
    assert report.mean_delta == 0 and report.max_delta == 0
    assert report.max_decoder_failure_delta == 0
    assert report.speedup == pytest.approx(report.t_serial / report.t_parallel)
    with pytest.raises(ValueError):
        run_fidelity_study(spec, parallel_threads=1)


def test_curves_and_crossing_table():
    def rec(decoder, d, x, k):
        return SweepPointRecord("pauli", decoder, d, "p", x, 100, k, k / 100, 0, 1, 0, 0, 0, 0, 0)

    records = [
        rec("mwpm", 3, 0.1, 7), rec("mwpm", 3, 0.2, 12), rec("mwpm", 5, 0.2, 10), rec("mwpm", 5, 0.1, 10),
        rec("uf", 3, 0.1, 1), rec("uf", 3, 0.2, 2), rec("uf", 5, 0.1, 5), rec("uf", 5, 0.2, 6),
    ]
    curves = curves_by_key(records)
    assert curves[("mwpm", 5)].x.tolist() == [0.1, 0.2]
    table = {r.decoder: r.crossing for r in crossing_table(records)}
    assert table["mwpm"] == pytest.approx(0.16)
    assert math.isnan(table["uf"])
