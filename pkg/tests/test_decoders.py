from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np
import pytest
from conftest import brute_force_matching, weight_patterns
from hypothesis import given, settings
from hypothesis import strategies as st

from qtb.decoders import (
    DECODER_NAMES,
    BeliefPropagationDecoder,
    GuidedMWPMDecoder,
    GuideTable,
    MWPMDecoder,
    UnionFindDecoder,
    belief_propagation,
    decode_bp,
    decode_guided_mwpm,
    decode_mwpm,
    decode_uf,
    make_decoder,
    min_weight_boundary_matching,
)
from qtb.decoders.bp import channel_llr
from qtb.lattice import ErrorState, Syndrome, build_code, extract_syndrome, logical_failure, residual

# mild reweighting: every multiplier in [1, 1.4] keeps weight-1 repairs optimal
PERTURBED_GUIDE = GuideTable({"0-1": 1.25, "2-B": 1.4, "1-3": 1.1})


def check_graph_distances(h: np.ndarray):
    """Hop distances between checks sharing a qubit, and to the open boundary."""
    g = nx.Graph()
    m = h.shape[0]
    g.add_nodes_from(range(m))
    for q in range(h.shape[1]):
        checks = np.flatnonzero(h[:, q])
        if len(checks) == 2:
            g.add_edge(int(checks[0]), int(checks[1]))
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    pair = np.array([[lengths[i][j] for j in range(m)] for i in range(m)], float)
    edge_checks = {int(np.flatnonzero(h[:, q])[0]) for q in range(h.shape[1]) if h[:, q].sum() == 1}
    boundary = np.array([1 + min(lengths[i][c] for c in edge_checks) for i in range(m)], float)
    return pair, boundary


def all_decoders(code):
    return [
        MWPMDecoder(code),
        UnionFindDecoder(code),
        BeliefPropagationDecoder(code, prior=0.05),
        GuidedMWPMDecoder(code, PERTURBED_GUIDE),
    ]


def zero_syndrome(code) -> Syndrome:
    return Syndrome(np.zeros(code.m_z, np.uint8), np.zeros(code.m_x, np.uint8))


# -- matching core ---------------------------------------------------------


def test_matching_small_cases():
    assert min_weight_boundary_matching(np.zeros((0, 0)), np.zeros(0)) == ([], 0.0)
    assert min_weight_boundary_matching(np.zeros((1, 1)), np.array([2.0])) == ([(0, -1)], 2.0)
    pairs, w = min_weight_boundary_matching(np.array([[0, 1.0], [1.0, 0]]), np.array([3.0, 3.0]))
    assert pairs == [(0, 1)] and w == 1.0
    pairs, w = min_weight_boundary_matching(np.array([[0, 5.0], [5.0, 0]]), np.array([1.0, 2.0]))
    assert pairs == [(0, -1), (1, -1)] and w == 3.0


@settings(max_examples=150, deadline=None)
@given(k=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_matching_is_exact_on_random_weights(k, seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 10, (k, 2))
    pair_w = np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1).round(3)
    boundary_w = r.uniform(0.5, 6, k).round(3)
    pairs, w = min_weight_boundary_matching(pair_w, boundary_w)
    assert w == pytest.approx(brute_force_matching(pair_w, boundary_w), abs=1e-9)
    covered = sorted(i for p in pairs for i in p if i >= 0)
    assert covered == list(range(k))


def test_graph_distances_match_independent_bfs():
    for d in (3, 5):
        code = build_code(d)
        dec = MWPMDecoder(code)
        for sector, h in (("x", code.h_z), ("z", code.h_x)):
            pair, boundary = check_graph_distances(h)
            assert np.array_equal(dec.graphs[sector].dist, pair)
            assert np.array_equal(dec.graphs[sector].boundary_dist, boundary)


def _mwpm_weight_oracle(code, syndrome: Syndrome) -> float:
    total = 0.0
    for h, s in ((code.h_z, syndrome.s_z), (code.h_x, syndrome.s_x)):
        pair, boundary = check_graph_distances(h)
        idx = np.flatnonzero(s)
        total += brute_force_matching(pair[np.ix_(idx, idx)], boundary[idx])
    return total


def test_mwpm_weight_exhaustive_two_qubit_errors_d3():
    code = build_code(3)
    for e in weight_patterns(9, 2):
        for err in (ErrorState(e, np.zeros(9)), ErrorState(np.zeros(9), e)):
            s = extract_syndrome(code, err)
            assert decode_mwpm(code, s).matching_weight == _mwpm_weight_oracle(code, s)


def test_mwpm_weight_random_d5(rng):
    code = build_code(5)
    checked = 0
    while checked < 150:
        e = (rng.random(25) < 0.12).astype(np.uint8)
        s = extract_syndrome(code, ErrorState(e, e))
        if s.s_z.sum() > 8 or s.s_x.sum() > 8:
            continue
        assert decode_mwpm(code, s).matching_weight == _mwpm_weight_oracle(code, s)
        checked += 1


# -- every decoder ---------------------------------------------------------


@pytest.mark.parametrize("d", [3, 5])
def test_all_decoders_fix_weight_one_errors(d):
    code = build_code(d)
    n = code.n_data
    zero = np.zeros(n, np.uint8)
    for dec in all_decoders(code):
        for e in weight_patterns(n, 1):
            for err in (ErrorState(e, zero), ErrorState(zero, e), ErrorState(e, e)):
                res = residual(err, dec.decode(extract_syndrome(code, err)).correction)
                assert not extract_syndrome(code, res).defect_count, dec
                assert not logical_failure(code, res), dec


def test_empty_syndrome_gives_empty_correction():
    code = build_code(5)
    for dec in all_decoders(code):
        out = dec.decode(zero_syndrome(code))
        assert out.correction == ErrorState.zeros(25)
        assert out.correction_weight == 0 and not out.failed
    assert decode_mwpm(code, zero_syndrome(code)).matching_weight == 0


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(["mwpm", "uf", "guided-mwpm"]), seed=st.integers(0, 2**32 - 1))
def test_matching_decoders_always_clear_the_syndrome(name, seed):
    code = build_code(5)
    r = np.random.default_rng(seed)
    err = ErrorState((r.random(25) < 0.15).astype(np.uint8), (r.random(25) < 0.15).astype(np.uint8))
    s = extract_syndrome(code, err)
    dec = make_decoder(name, code, guide=PERTURBED_GUIDE)
    out = dec.decode(s)
    assert extract_syndrome(code, out.correction) == s
    assert out.defect_count == s.defect_count


def test_batch_decoding_matches_single(rng):
    code = build_code(5)
    e_x = (rng.random((64, 25)) < 0.1).astype(np.uint8)
    e_z = (rng.random((64, 25)) < 0.1).astype(np.uint8)
    s_z = (e_x.astype(int) @ code.h_z.T % 2).astype(np.uint8)
    s_x = (e_z.astype(int) @ code.h_x.T % 2).astype(np.uint8)
    for name in DECODER_NAMES:
        batch_dec = make_decoder(name, code, guide=PERTURBED_GUIDE)
        single_dec = make_decoder(name, code, guide=PERTURBED_GUIDE)
        c_x, c_z, failed = batch_dec.decode_batch(s_z, s_x)
        for t in range(64):
            out = single_dec.decode(Syndrome(s_z[t], s_x[t]))
            assert np.array_equal(out.correction.e_x, c_x[t])
            assert np.array_equal(out.correction.e_z, c_z[t])
            assert out.failed == failed[t]


def test_uf_agrees_with_mwpm_on_weight_two_errors():
    code = build_code(3)
    zero = np.zeros(9, np.uint8)
    agree = total = 0
    for e in weight_patterns(9, 2):
        if e.sum() != 2:
            continue
        for err in (ErrorState(e, zero), ErrorState(zero, e)):
            s = extract_syndrome(code, err)
            a = logical_failure(code, residual(err, decode_mwpm(code, s).correction))
            b = logical_failure(code, residual(err, decode_uf(code, s).correction))
            agree += a == b
            total += 1
    assert agree / total >= 0.95


def test_decode_rejects_wrong_shape():
    code = build_code(3)
    with pytest.raises(ValueError):
        MWPMDecoder(code).decode(Syndrome(np.zeros(3), np.zeros(4)))


def test_unknown_decoder_name():
    with pytest.raises(ValueError):
        make_decoder("neural", build_code(3))


# -- guided matching -------------------------------------------------------


def test_all_ones_guide_reduces_to_mwpm(rng):
    code = build_code(5)
    ones = GuideTable({f"{i}-{j}": 1.0 for i in range(12) for j in range(i + 1, 12)})
    for _ in range(100):
        err = ErrorState((rng.random(25) < 0.1).astype(np.uint8), (rng.random(25) < 0.1).astype(np.uint8))
        s = extract_syndrome(code, err)
        a, b = decode_mwpm(code, s), decode_guided_mwpm(code, s, ones)
        assert a.correction == b.correction
        assert a.matching_weight == b.matching_weight


def test_guided_matching_exact_under_reweighting(rng):
    code = build_code(5)
    for _ in range(60):
        i, j = sorted(rng.choice(12, 2, replace=False))
        table = GuideTable({f"{i}-{j}": 2.0, f"{j}-B": 2.0})
        dec = GuidedMWPMDecoder(code, table)
        base = MWPMDecoder(code)
        s = (rng.random(12) < 0.4).astype(np.uint8)
        defects = np.flatnonzero(s)
        if len(defects) > 8:
            continue
        pw, bw = dec.edge_weights("x", defects)
        pw0, bw0 = base.edge_weights("x", defects)
        assert np.all(pw >= pw0) and np.all(bw >= bw0)
        _, _, weight = dec.decode_sector("x", s)
        assert weight == pytest.approx(brute_force_matching(pw, bw))


@pytest.mark.parametrize("bad", [{"0-1": 0.0}, {"0-1": -1.0}, {"0-1": math.inf}, {"0": 1.0}, {"a-b": 1.0}])
def test_guide_table_validation(bad):
    with pytest.raises(ValueError):
        GuideTable(bad)


def test_guide_keys_are_canonical(tmp_path):
    path = tmp_path / "g.json"
    path.write_text('{"3-1": 2.0, "4-b": 3.0}')
    table = GuideTable.load(path)
    assert table.pair(1, 3) == table.pair(3, 1) == 2.0
    assert table.boundary(4) == 3.0
    assert table.pair(0, 1) == 1.0


def test_guided_requires_a_table():
    with pytest.raises(ValueError):
        GuidedMWPMDecoder(build_code(3), None)


# -- belief propagation ----------------------------------------------------


def exact_posteriors(h: np.ndarray, syndrome: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """P(e_i = 1 | syndrome) by enumerating every error pattern."""
    n = h.shape[1]
    num = np.zeros(n)
    z = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        e = np.array(bits)
        if np.array_equal(h @ e % 2, syndrome):
            w = float(np.prod(np.where(e == 1, priors, 1 - priors)))
            z += w
            num += w * e
    return num / z


@pytest.mark.parametrize(
    "h, syndrome, priors",
    [
        (np.array([[1, 1]]), np.array([1]), np.array([0.1, 0.3])),
        (np.array([[1, 1]]), np.array([1]), np.array([0.05, 0.05])),
        (np.array([[1, 1, 1]]), np.array([1]), np.array([0.1, 0.2, 0.3])),
    ],
)
def test_bp_marginals_exact_on_trees(h, syndrome, priors):
    # a single check is a star: one iteration already gives exact marginals
    out = belief_propagation(h.astype(np.uint8), syndrome, priors, max_iters=1)
    expected = exact_posteriors(h, syndrome, priors)
    assert np.allclose(1 / (1 + np.exp(out.posterior_llr)), expected, atol=1e-12)


def test_bp_empty_syndrome_converges_immediately():
    code = build_code(3)
    out = belief_propagation(code.h_z, np.zeros(4, np.uint8), 0.05)
    assert out.converged and out.iterations == 0 and not out.hard.any()


def test_bp_unsatisfiable_budget_reports_failure():
    code = build_code(3)
    s = Syndrome(np.array([1, 0, 0, 0], np.uint8), np.zeros(4, np.uint8))
    result = decode_bp(code, s, prior=0.05, max_iters=0)
    assert result.failed
    assert result.correction == ErrorState.zeros(9)


def test_bp_contradictory_syndrome_fails():
    # two parallel checks on the same qubits can never disagree
    h = np.array([[1, 1], [1, 1]], np.uint8)
    out = belief_propagation(h, np.array([1, 0]), 0.1, max_iters=20)
    assert not out.converged
    assert out.hard.shape == (2,)


@pytest.mark.parametrize("prior", [0.0, 0.5, 0.7, -0.1])
def test_bp_prior_range(prior):
    with pytest.raises(ValueError):
        channel_llr(prior, 3)
