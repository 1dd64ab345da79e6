import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsrtest.factor_model import (
    CollinearityError,
    DataError,
    DegenerateEigenspaceWarning,
    PanelData,
    decompose,
    eigenvalue_ratios,
    estimate_factors,
    estimate_num_factors,
    gram_eigenvalues,
    residualize,
)
from fsrtest.simulation import SimulationConfig, generate_panel


def ratio_scan_oracle(X, k_max):
    T, p = X.shape
    mu = np.sort(np.linalg.eigvalsh(X @ X.T / (T * p)))[::-1]
    best, best_k = -1.0, None
    for k in range(1, k_max + 1):
        r = mu[k - 1] / mu[k]
        if r > best:
            best, best_k = r, k
    return best_k


def test_rank_one_panel(rng):
    f = rng.standard_normal(30)
    b = rng.standard_normal(20)
    assert estimate_num_factors(np.outer(f, b), 3) == 1


def test_exact_rank_three(rng):
    X = rng.standard_normal((40, 3)) @ rng.standard_normal((3, 25))
    assert estimate_num_factors(X, 8) == 3


@pytest.mark.parametrize("seed", range(5))
def test_ratio_estimator_matches_dense_oracle(seed):
    X = np.random.default_rng(seed).standard_normal((100, 100))
    assert estimate_num_factors(X, 8) == ratio_scan_oracle(X, 8)


@pytest.mark.parametrize("shape", [(60, 40), (40, 60)])
def test_ratio_estimator_oracle_rectangular(shape, rng):
    X = rng.standard_normal(shape)
    X[:, :5] += 3 * rng.standard_normal((shape[0], 1))
    assert estimate_num_factors(X, 6) == ratio_scan_oracle(X, 6)


def test_k_max_range(rng):
    X = rng.standard_normal((10, 5))
    with pytest.raises(ValueError):
        estimate_num_factors(X, 0)
    with pytest.raises(ValueError):
        estimate_num_factors(X, 5)
    X[2, 3] = np.nan
    with pytest.raises(DataError):
        estimate_num_factors(X, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_ratio_estimator_scale_invariant(seed, c):
    X = np.random.default_rng(seed).standard_normal((20, 15))
    assert estimate_num_factors(c * X, 5) == estimate_num_factors(X, 5)


def test_zero_ratio_is_infinite():
    r = eigenvalue_ratios(np.array([4.0, 1.0, 0.0, 0.0]), 3)
    assert r[0] == 4.0 and np.isinf(r[1]) and np.isinf(r[2])


def test_design2_selects_two_factors():
    hits = 0
    cfg = SimulationConfig.for_design(2, T=100, p=100, seed=2024)
    for rep in range(200):
        hits += estimate_num_factors(generate_panel(cfg, rep).X, 8) == 2
    assert hits >= 190


def test_factor_normalisation(rng):
    X = rng.standard_normal((25, 40))
    F, B, eig = estimate_factors(X, 3)
    np.testing.assert_allclose(F.T @ F, 25 * np.eye(3), atol=1e-8 * 25)
    np.testing.assert_allclose(B, X.T @ F / 25, atol=1e-12)
    assert np.all(np.diff(eig) <= 0)
    np.testing.assert_allclose(eig.sum(), np.trace(X @ X.T) / (25 * 40), rtol=1e-12)


@pytest.mark.parametrize("shape", [(12, 9), (9, 12), (30, 30)])
def test_projector_matches_svd_oracle(shape, rng):
    X = rng.standard_normal(shape)
    K = 3
    F, _, _ = estimate_factors(X, K)
    u, _, _ = np.linalg.svd(X)
    np.testing.assert_allclose(F @ F.T / shape[0], u[:, :K] @ u[:, :K].T, atol=1e-8)


def test_sign_convention(rng):
    F, _, _ = estimate_factors(rng.standard_normal((15, 30)), 4)
    for col in F.T:
        j = np.argmax(np.abs(col))
        assert col[j] > 0


def test_both_gram_branches_agree(rng):
    X = rng.standard_normal((20, 20))
    F1, _, _ = estimate_factors(X, 2)
    F2, _, _ = estimate_factors(np.hstack([X, np.zeros((20, 1))]), 2)  # T < p branch
    F3, _, _ = estimate_factors(X[:, :15], 2)  # T > p branch
    np.testing.assert_allclose(F1 @ F1.T, F2 @ F2.T, atol=1e-9)
    u, _, _ = np.linalg.svd(X[:, :15])
    np.testing.assert_allclose(F3 @ F3.T / 20, u[:, :2] @ u[:, :2].T, atol=1e-9)


def test_exact_low_rank_recovered(rng):
    T, p, K = 30, 12, 2
    Q, _ = np.linalg.qr(rng.standard_normal((T, K)))
    V, _ = np.linalg.qr(rng.standard_normal((p, K)))
    X = np.sqrt(T) * Q @ np.diag([3.0, 1.5]) @ V.T
    F, _, _ = estimate_factors(X, K)
    P = F @ F.T / T
    np.testing.assert_allclose(P @ X, X, atol=1e-10)
    np.testing.assert_allclose(P, Q @ Q.T, atol=1e-10)


def test_k_zero_gives_empty(rng):
    X = rng.standard_normal((8, 5))
    Y = rng.standard_normal(8)
    F, B, _ = estimate_factors(X, 0)
    assert F.shape == (8, 0) and B.shape == (5, 0)
    dec = residualize(PanelData(Y, X), F)
    np.testing.assert_array_equal(dec.U_hat, X)
    np.testing.assert_array_equal(dec.Y_tilde, Y)
    np.testing.assert_array_equal(dec.projector(), np.zeros((8, 8)))


def test_k_too_large(rng):
    with pytest.raises(ValueError):
        estimate_factors(rng.standard_normal((5, 4)), 5)


def test_degenerate_boundary_warns():
    X = np.sqrt(10) * np.eye(10)[:, :4]
    with pytest.warns(DegenerateEigenspaceWarning):
        estimate_factors(X, 2)


def test_outcome_in_factor_span_is_annihilated(rng):
    X = rng.standard_normal((20, 10))
    F, _, _ = estimate_factors(X, 2)
    Y = F @ np.array([1.5, -0.7])
    dec = residualize(PanelData(Y, X), F)
    assert np.linalg.norm(dec.Y_tilde) <= 1e-10 * np.linalg.norm(Y)


def normal_equations_residual(Z, A):
    return A - Z @ np.linalg.solve(Z.T @ Z, Z.T @ A)


def test_residualize_with_w_matches_normal_equations(rng):
    T, p = 10, 6
    X = rng.standard_normal((T, p))
    W = rng.standard_normal((T, 1))
    Y = rng.standard_normal(T)
    F, _, _ = estimate_factors(X, 2)
    dec = residualize(PanelData(Y, X, W), F)
    Z = np.hstack([F, W])
    np.testing.assert_allclose(dec.U_hat, normal_equations_residual(Z, X), atol=1e-8)
    np.testing.assert_allclose(dec.Y_tilde, normal_equations_residual(Z, Y[:, None])[:, 0], atol=1e-8)
    assert dec.used_W


def test_collinear_w_names_columns(rng):
    X = rng.standard_normal((15, 6))
    F, _, _ = estimate_factors(X, 2)
    W = np.column_stack([rng.standard_normal(15), F[:, 0] * 2.0])
    with pytest.raises(CollinearityError, match="factor_1|w_dup"):
        residualize(PanelData(rng.standard_normal(15), X, W, w_names=("w_ok", "w_dup")), F)


def _random_case(seed, with_w):
    r = np.random.default_rng(seed)
    T, p = r.integers(6, 30), r.integers(2, 30)
    K = int(r.integers(0, min(T, p) // 2 + 1))
    X = r.standard_normal((T, p)) * r.uniform(0.1, 10)
    W = r.standard_normal((T, int(r.integers(1, 3)))) if with_w else None
    data = PanelData(r.standard_normal(T), X, W)
    F, _, _ = estimate_factors(X, K)
    return data, F, K


@pytest.mark.parametrize("with_w", [False, True])
def test_projector_invariants(with_w):
    for seed in range(50):
        data, F, K = _random_case(seed, with_w)
        dec = residualize(data, F)
        P = dec.projector()
        scale = np.linalg.norm(data.X)
        np.testing.assert_allclose(P @ P, P, atol=1e-10 * max(scale, 1))
        assert abs(np.trace(P) - (K + data.ell)) < 1e-8
        assert np.max(np.abs(dec.U_hat.T @ F)) <= 1e-8 * scale if K else True
        if with_w:
            assert np.max(np.abs(dec.U_hat.T @ data.W)) <= 1e-8 * scale
            assert np.max(np.abs(data.W.T @ dec.Y_tilde)) <= 1e-8 * max(np.linalg.norm(data.Y), 1)


def test_sign_flip_invariance(rng):
    X = rng.standard_normal((20, 12))
    Y = rng.standard_normal(20)
    W = rng.standard_normal((20, 1))
    F, _, _ = estimate_factors(X, 3)
    G = F.copy()
    G[:, 1] *= -1
    for w in (None, W):
        a = residualize(PanelData(Y, X, w), F)
        b = residualize(PanelData(Y, X, w), G)
        np.testing.assert_allclose(a.projector(), b.projector(), atol=1e-10)
        np.testing.assert_allclose(a.U_hat, b.U_hat, atol=1e-10)
        np.testing.assert_allclose(a.Y_tilde, b.Y_tilde, atol=1e-10)


def test_eigenvalues_nonnegative_and_sorted(rng):
    X = rng.standard_normal((10, 40))
    eig = gram_eigenvalues(X)
    assert eig.shape == (10,)
    assert np.all(np.diff(eig) <= 0)
    assert eig.min() >= -1e-10 * np.linalg.norm(X) ** 2


def test_decompose_estimates_k(rng):
    cfg = SimulationConfig.for_design(1, T=80, p=60, seed=5)
    dec = decompose(generate_panel(cfg, 0))
    assert dec.K_hat == 2
    assert dec.ratios.shape == (8,)
    assert not dec.degenerate_boundary


def test_paneldata_validation(rng):
    with pytest.raises(DataError):
        PanelData(np.ones(5), np.ones((4, 2)))
    with pytest.raises(DataError):
        PanelData(np.array([1.0, np.inf, 2.0]), np.ones((3, 2)))
    with pytest.raises(DataError):
        PanelData(np.ones(3), np.ones((3, 2)), W=np.ones((2, 1)))
    with pytest.raises(DataError):
        PanelData(np.ones(1), np.ones((1, 2)))
    d = PanelData(np.ones(3), np.ones(3))
    assert d.X.shape == (3, 1) and d.ell == 0
