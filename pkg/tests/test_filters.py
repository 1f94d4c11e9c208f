import itertools
from unittest import mock

import numpy as np
import pytest
from conftest import dense_power_sum, random_connected_edges, toy_operator

from gpnet import DataError, ResourceError, UsageError
from gpnet.filters import (
    FilterConfig,
    aggregate,
    apply_alpha_beta,
    channel_sum_features,
    channel_sum_matrix,
    exponent_set,
    load_propagated,
    propagate,
    save_propagated,
)
from gpnet.sparse import build_adjacency, spmm, sym_normalize


def two_node_operator():
    return sym_normalize(build_adjacency([[0, 1]], n=2, add_self_loops=True))


# --- exponent sets ---


def test_exponent_sets_two_channel_reference_config():
    cfg = FilterConfig(m=2, k=3, q0=1, q=(4, 5), d=(0, 3), alpha=1.0, beta=1.0)
    assert exponent_set(cfg, 0).exponents == (1, 5, 9)
    assert exponent_set(cfg, 1).exponents == (4, 9, 14)


def test_exponent_zero_allowed_with_warning():
    cfg = FilterConfig(m=1, k=4, q0=0, q=(1,), d=(0,))
    with pytest.warns(UserWarning):
        exps = exponent_set(cfg, 0)
    assert exps.exponents == (0, 1, 2, 3)


def test_config_rejects_zero_ratio():
    with pytest.raises(UsageError, match=">= 1"):
        FilterConfig(m=1, k=2, q0=1, q=(0,), d=(0,))


def test_config_rejects_bad_beta_and_agg():
    with pytest.raises(UsageError):
        FilterConfig(beta=0.5)
    with pytest.raises(UsageError):
        FilterConfig(aggregation="concat")
    with pytest.raises(UsageError):
        FilterConfig(m=2, q=(1,), d=(0, 0))


def test_channel_out_of_range():
    cfg = FilterConfig()
    with pytest.raises(UsageError):
        exponent_set(cfg, 1)


# --- channel sums ---


def test_channel_sum_features_identity_operator():
    # graph with no edges plus self-loops normalizes to the identity
    S = sym_normalize(build_adjacency(np.empty((0, 2), dtype=np.int64), n=3))
    X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    out = channel_sum_features(S, (1,), X)
    assert np.array_equal(out, X)


def test_channel_sum_features_two_node_hand_value():
    S = two_node_operator()
    X = np.array([[1.0], [3.0]])
    # S X = [[2],[2]] and S^2 X = [[2],[2]], so {1,2} sums to [[4],[4]]
    out = channel_sum_features(S, (1, 2), X)
    assert np.array_equal(out, [[4.0], [4.0]])


def test_channel_sum_features_vs_dense_oracle():
    S = toy_operator(n=6, seed=2)
    rng = np.random.default_rng(1)
    X = rng.standard_normal((6, 4))
    got = channel_sum_features(S, (2, 4), X)
    ref = dense_power_sum(S.to_dense(), (2, 4)) @ X
    np.testing.assert_allclose(got, ref, atol=1e-10)


def test_channel_sum_features_spmm_count_is_max_exponent():
    S = toy_operator(n=5, seed=3)
    X = np.ones((5, 2))
    with mock.patch("gpnet.filters.spmm", side_effect=spmm) as counter:
        channel_sum_features(S, (2, 5, 7), X)
    assert counter.call_count == 7


def test_channel_sum_matrix_single_exponent_is_operator():
    S = toy_operator(n=5, seed=4)
    assert np.array_equal(channel_sum_matrix(S, (1,)), S.to_dense())


def test_channel_sum_matrix_idempotent_two_node():
    S = two_node_operator()
    out = channel_sum_matrix(S, (2,))
    assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_channel_sum_matrix_vs_dense_oracle():
    S = toy_operator(n=5, seed=5)
    got = channel_sum_matrix(S, (1, 3))
    ref = dense_power_sum(S.to_dense(), (1, 3))
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_channel_sum_matrix_streaming_agrees_with_dense():
    S = toy_operator(n=11, seed=6)
    dense = channel_sum_matrix(S, (1, 2, 4))
    streamed = channel_sum_matrix(S, (1, 2, 4), streaming=True, block_rows=3)
    np.testing.assert_allclose(streamed, dense, atol=1e-12)


def test_channel_sum_matrix_resource_error_over_cap():
    S = toy_operator(n=12, seed=7)
    with pytest.raises(ResourceError, match="streaming"):
        channel_sum_matrix(S, (1,), dense_cap=8)


def test_matrix_and_feature_paths_agree():
    S = toy_operator(n=9, seed=8)
    rng = np.random.default_rng(8)
    X = rng.standard_normal((9, 3))
    M = channel_sum_matrix(S, (1, 4))
    F = channel_sum_features(S, (1, 4), X)
    np.testing.assert_allclose(M @ X, F, atol=1e-9)


# --- alpha / beta and aggregation ---


def test_apply_alpha_beta_passthrough():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(apply_alpha_beta(M, 0.0, 1.0), M)


def test_apply_alpha_beta_cancels_identity():
    assert np.array_equal(apply_alpha_beta(np.eye(3), 1.0, -1.0), np.zeros((3, 3)))


def test_apply_alpha_beta_two_node_hand_value():
    M = np.array([[0.5, 0.5], [0.5, 0.5]])
    out = apply_alpha_beta(M, 20.0, -1.0)
    assert np.array_equal(out, [[19.5, -0.5], [-0.5, 19.5]])


def test_aggregate_max_hand_value():
    out = aggregate([np.array([[1.0, 2.0]]), np.array([[3.0, 0.0]])], "max")
    assert np.array_equal(out, [[3.0, 2.0]])


def test_aggregate_avg_of_identical_channels():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(aggregate([M, M, M], "avg"), M)


def test_aggregate_sum_counts_alpha_per_channel():
    # two channels built with alpha=3: aggregate diagonal carries 2*alpha
    f = np.zeros((2, 2))
    g = apply_alpha_beta(f, 3.0, 1.0)
    out = aggregate([g, g], "sum")
    assert np.array_equal(np.diag(out), [6.0, 6.0])


@pytest.mark.parametrize("mode", ["max", "min", "avg", "sum"])
def test_aggregate_permutation_invariant_exactly(mode):
    rng = np.random.default_rng(12)
    mats = [rng.standard_normal((6, 6)) for _ in range(3)]
    base = aggregate(mats, mode)
    for perm in itertools.permutations(mats):
        assert np.array_equal(aggregate(list(perm), mode), base)


def test_aggregate_shape_mismatch():
    with pytest.raises(UsageError):
        aggregate([np.zeros((2, 2)), np.zeros((3, 3))], "sum")


def test_aggregate_single_channel_identity_all_modes():
    M = np.array([[1.0, -2.0], [0.0, 4.0]])
    for mode in ("max", "min", "avg", "sum"):
        assert np.array_equal(aggregate([M], mode), M)


# --- propagate ---


def test_propagate_reduces_to_two_hop_power_bitwise():
    S = toy_operator(n=7, seed=9)
    rng = np.random.default_rng(9)
    X = rng.standard_normal((7, 3))
    cfg = FilterConfig(m=1, k=1, q0=2, q=(1,), d=(0,), alpha=0.0, beta=1.0, aggregation="sum")
    H = propagate(cfg, S, X).H_bar
    assert np.array_equal(H, spmm(S, spmm(S, X)))


def test_propagate_identity_exponent_scales_features():
    S = toy_operator(n=6, seed=10)
    rng = np.random.default_rng(10)
    X = rng.standard_normal((6, 2))
    cfg = FilterConfig(m=1, k=1, q0=0, q=(1,), d=(0,), alpha=1.0, beta=1.0)
    with pytest.warns(UserWarning):
        H = propagate(cfg, S, X).H_bar
    assert np.array_equal(H, 2.0 * X)


@pytest.mark.parametrize("mode", ["sum", "avg"])
def test_propagate_feature_path_matches_matrix_path(mode):
    for seed, n in ((0, 10), (1, 40), (2, 100)):
        S = toy_operator(n=n, seed=seed, extra_edge_prob=0.1)
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, 5))
        cfg = FilterConfig(
            m=2, k=2, q0=1, q=(1, 2), d=(0, 1), alpha=0.7, beta=-1.0, aggregation=mode
        )
        H = propagate(cfg, S, X).H_bar
        mats = [
            apply_alpha_beta(
                channel_sum_matrix(S, exponent_set(cfg, c).exponents), cfg.alpha, cfg.beta
            )
            for c in range(cfg.m)
        ]
        ref = aggregate(mats, mode) @ X
        np.testing.assert_allclose(H, ref, atol=1e-9)


@pytest.mark.parametrize("mode", ["max", "min"])
def test_propagate_extrema_dense_matches_streaming(mode):
    S = toy_operator(n=23, seed=13, extra_edge_prob=0.15)
    rng = np.random.default_rng(13)
    X = rng.standard_normal((23, 4))
    cfg = FilterConfig(
        m=2, k=2, q0=1, q=(1, 3), d=(0, 2), alpha=1.0, beta=1.0, aggregation=mode
    )
    dense = propagate(cfg, S, X).H_bar
    streamed = propagate(cfg, S, X, dense_cap=4, block_rows=5).H_bar
    np.testing.assert_allclose(streamed, dense, atol=1e-12)


@pytest.mark.parametrize("mode", ["sum", "max"])
def test_propagate_node_relabeling_equivariance(mode):
    n = 14
    rng = np.random.default_rng(14)
    edges = random_connected_edges(rng, n, 0.2)
    S = sym_normalize(build_adjacency(edges, n=n))
    X = rng.standard_normal((n, 3))
    cfg = FilterConfig(m=2, k=2, q0=1, q=(1, 2), d=(0, 1), alpha=0.5, beta=1.0, aggregation=mode)
    H = propagate(cfg, S, X).H_bar

    # relabel node i to perm[i]: edges, features and output all permute together
    perm = rng.permutation(n)
    S_p = sym_normalize(build_adjacency(perm[edges], n=n))
    H_p = propagate(cfg, S_p, X_permuted(X, perm)).H_bar
    np.testing.assert_allclose(H_p, X_permuted(H, perm), atol=1e-10)


def X_permuted(X, perm):
    out = np.empty_like(X)
    out[perm] = X
    return out


def test_propagate_linear_in_features():
    S = toy_operator(n=12, seed=15)
    rng = np.random.default_rng(15)
    X1 = rng.standard_normal((12, 3))
    X2 = rng.standard_normal((12, 3))
    cfg = FilterConfig(m=2, k=3, q0=1, q=(1, 2), d=(0, 1), alpha=1.0, beta=1.0, aggregation="avg")
    H12 = propagate(cfg, S, X1 + X2).H_bar
    H1 = propagate(cfg, S, X1).H_bar
    H2 = propagate(cfg, S, X2).H_bar
    np.testing.assert_allclose(H12, H1 + H2, atol=1e-10)


def test_propagate_channel_order_invariant_exactly():
    S = toy_operator(n=9, seed=16)
    rng = np.random.default_rng(16)
    X = rng.standard_normal((9, 2))
    base = FilterConfig(m=3, k=2, q0=1, q=(1, 2, 3), d=(0, 1, 2), alpha=1.0, beta=1.0)
    swapped = FilterConfig(m=3, k=2, q0=1, q=(3, 1, 2), d=(2, 0, 1), alpha=1.0, beta=1.0)
    assert np.array_equal(propagate(base, S, X).H_bar, propagate(swapped, S, X).H_bar)


# --- fingerprints and the cache file ---


def test_fingerprint_distinguishes_config_and_dataset():
    a = FilterConfig(m=1, k=2, q0=1, q=(1,), d=(0,))
    b = FilterConfig(m=1, k=3, q0=1, q=(1,), d=(0,))
    assert a.fingerprint("cora") == a.fingerprint("cora")
    assert a.fingerprint("cora") != a.fingerprint("citeseer")
    assert a.fingerprint("cora") != b.fingerprint("cora")
    assert len(a.fingerprint("x")) == 32


def test_cache_round_trip(tmp_path):
    S = toy_operator(n=6, seed=17)
    X = np.random.default_rng(17).standard_normal((6, 3))
    cfg = FilterConfig(m=1, k=2, q0=1, q=(2,), d=(0,))
    pf = propagate(cfg, S, X, dataset_id="toy")
    path = tmp_path / "toy.prop"
    save_propagated(path, pf)
    back = load_propagated(path, expected_fingerprint=cfg.fingerprint("toy"))
    assert np.array_equal(back.H_bar, pf.H_bar)
    assert back.fingerprint == pf.fingerprint


def test_cache_rejects_wrong_fingerprint(tmp_path):
    S = toy_operator(n=4, seed=18)
    X = np.ones((4, 2))
    pf = propagate(FilterConfig(), S, X, dataset_id="a")
    path = tmp_path / "a.prop"
    save_propagated(path, pf)
    with pytest.raises(DataError):
        load_propagated(path, expected_fingerprint="0" * 32)


def test_cache_rejects_corrupt_file(tmp_path):
    path = tmp_path / "bad.prop"
    path.write_bytes(b"not a cache file at all, wrong magic!!")
    with pytest.raises(DataError):
        load_propagated(path)
    missing = tmp_path / "absent.prop"
    with pytest.raises(DataError):
        load_propagated(missing)


def test_cache_rejects_truncated_payload(tmp_path):
    S = toy_operator(n=5, seed=19)
    pf = propagate(FilterConfig(), S, np.ones((5, 2)))
    path = tmp_path / "t.prop"
    save_propagated(path, pf)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(DataError):
        load_propagated(path)
