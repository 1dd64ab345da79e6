import numpy as np
import pytest

from fsrtest import simulation
from fsrtest.lasso import DegenerateInputError
from fsrtest.simulation import (
    SimulationConfig,
    draw_covariance_ar1,
    generate_panel,
    run_monte_carlo,
    toeplitz_cholesky,
    toeplitz_covariance,
)
from fsrtest.randomness import StreamKey


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(rho_f=1.0)
    with pytest.raises(ValueError):
        SimulationConfig(rho_u=-0.1)
    with pytest.raises(ValueError):
        SimulationConfig.for_design(4)
    with pytest.raises(ValueError):
        SimulationConfig(K=3)  # gamma_star still has two entries
    with pytest.raises(ValueError):
        SimulationConfig(alphas=(0.1, 1.0))


def test_beta_star_shapes():
    assert SimulationConfig(m=0.4, p=5).beta_star.tolist() == [0.4, 0.2, 0.0, 0.0, 0.0]
    geo = SimulationConfig(m=1.0, p=4, beta_shape="geometric").beta_star
    np.testing.assert_allclose(geo, [1.0, 0.5, 0.25, 0.125])


def test_panel_shapes_and_model():
    cfg = SimulationConfig.for_design(3, T=40, p=30, m=0.3, seed=1)
    data, truth = generate_panel(cfg, 7, return_truth=True)
    assert data.Y.shape == (40,) and data.X.shape == (40, 30)
    np.testing.assert_allclose(data.X, truth["F"] @ truth["B"].T + truth["U"], atol=1e-12)
    expected_y = truth["F"] @ [0.5, 0.5] + truth["U"] @ cfg.beta_star + truth["eps"]
    np.testing.assert_allclose(data.Y, expected_y, atol=1e-12)
    assert np.all(np.abs(truth["B"]) <= 1.0)


def test_reproducible_per_replication():
    cfg = SimulationConfig.for_design(2, T=20, p=10, seed=5)
    a = generate_panel(cfg, 3)
    np.testing.assert_array_equal(a.X, generate_panel(cfg, 3).X)
    assert not np.array_equal(a.X, generate_panel(cfg, 4).X)


def test_design1_errors_serially_uncorrelated():
    T = 2000
    cfg = SimulationConfig.for_design(1, T=T, p=5, seed=2)
    data, truth = generate_panel(cfg, 0, return_truth=True)
    r = data.Y - truth["F"] @ [0.5, 0.5]
    r = r - r.mean()
    ac1 = (r[1:] @ r[:-1]) / (r @ r)
    assert abs(ac1) < 3 / np.sqrt(T)


def test_null_outcome_unrelated_to_idiosyncratics():
    cfg = SimulationConfig.for_design(1, T=10_000, p=10, seed=3)
    data, truth = generate_panel(cfg, 0, return_truth=True)
    coef, *_ = np.linalg.lstsq(truth["U"], data.Y, rcond=None)
    assert np.max(np.abs(coef)) < 0.05


def test_idiosyncratic_covariance_is_toeplitz():
    cfg = SimulationConfig.for_design(1, T=100_000, p=5, seed=4)
    _, truth = generate_panel(cfg, 0, return_truth=True)
    S = np.cov(truth["U"], rowvar=False)
    assert np.max(np.abs(S - toeplitz_covariance(5, 0.6))) < 0.02


def test_stationary_marginals_under_dependence():
    T = 20_000
    cfg = SimulationConfig.for_design(3, T=T, p=3, seed=6)
    _, truth = generate_panel(cfg, 0, return_truth=True)
    for series, rho in ((truth["F"][:, 0], 0.6), (truth["F"][:, 1], 0.6), (truth["eps"], 0.1)):
        # s.e. of the sample variance of a Gaussian AR(1) with unit variance
        se = np.sqrt(2.0 / T * (1 + rho**2) / (1 - rho**2))
        assert abs(series.var() - 1.0) < 3 * se
    rf = truth["F"][:, 0]
    ac = np.corrcoef(rf[1:], rf[:-1])[0, 1]
    assert abs(ac - 0.6) < 0.03


def test_design_nesting_bit_for_bit():
    d1 = SimulationConfig.for_design(1, T=30, p=20, m=0.2, seed=9)
    d2_zero = SimulationConfig(T=30, p=20, m=0.2, seed=9, rho_f=0.0, rho_u=0.0, rho_e=0.0, design="2")
    a, b = generate_panel(d1, 2), generate_panel(d2_zero, 2)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.Y, b.Y)


def test_cholesky_identity_case():
    sample = draw_covariance_ar1(np.eye(3))
    z = sample(StreamKey(1, "x", 0), 100_000)
    C = np.corrcoef(z, rowvar=False)
    assert np.max(np.abs(C - np.eye(3))) < 0.02
    assert np.all(np.abs(z.var(axis=0) - 1) < 0.02)


def test_two_dim_correlation():
    sample = draw_covariance_ar1(np.array([[1.0, 0.6], [0.6, 1.0]]))
    z = sample(StreamKey(2, "x", 0), 100_000)
    assert abs(np.corrcoef(z.T)[0, 1] - 0.6) < 0.01


def test_toeplitz_factorisation():
    L = toeplitz_cholesky(50, 0.6)
    np.testing.assert_allclose(L @ L.T, toeplitz_covariance(50, 0.6), atol=1e-10)
    assert toeplitz_cholesky(50, 0.6) is L  # cached


def test_non_spd_rejected():
    with pytest.raises(np.linalg.LinAlgError):
        draw_covariance_ar1(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        draw_covariance_ar1(np.array([[1.0, 0.5], [0.2, 1.0]]))


def small_cfg(**kw):
    base = dict(T=40, p=30, reps=6, L=40, M=30, seed=13)
    base.update(kw)
    return SimulationConfig.for_design(1, **base)


def test_monte_carlo_deterministic():
    a = run_monte_carlo(small_cfg(reps=1))
    b = run_monte_carlo(small_cfg(reps=1))
    assert a.to_csv(timing=False) == b.to_csv(timing=False)


def test_monte_carlo_workers_do_not_matter():
    cfg = small_cfg(reps=10)
    a = run_monte_carlo(cfg, workers=1, chunk=3)
    b = run_monte_carlo(cfg, workers=3, chunk=3)
    assert a.to_csv(timing=False) == b.to_csv(timing=False)


def test_table_layout():
    t = run_monte_carlo(small_cfg(m=0.4))
    t.extend(run_monte_carlo(small_cfg(m=0.0)))
    csv_text = t.to_csv()
    header = csv_text.splitlines()[0].split(",")
    assert header == list(t.COLUMNS)
    assert len(csv_text.splitlines()) == 1 + 6
    assert "seconds" not in t.to_csv(timing=False)
    for row in t.rows:
        assert 0.0 <= row["reject_rate"] <= 1.0 and row["reps"] == 6
    text = t.to_text()
    assert "Design 1" in text and "a=0.1" in text
    assert t.rate(0.4, 0.1) >= t.rate(0.4, 0.01)


def test_degenerate_replications_are_counted(monkeypatch):
    calls = {"n": 0}
    real = simulation.compute_lambda_bar

    def flaky(U, y, **kw):
        calls["n"] += 1
        if calls["n"] % 2:
            raise DegenerateInputError("forced")
        return real(U, y, **kw)

    monkeypatch.setattr(simulation, "compute_lambda_bar", flaky)
    t = run_monte_carlo(small_cfg(reps=4))
    assert all(row["degenerate_count"] == 2 for row in t.rows)


@pytest.mark.slow
def test_power_increases_with_signal():
    ms = (0.0, 0.1, 0.2, 0.3, 0.4)
    rates = {}
    for m in ms:
        cfg = SimulationConfig.for_design(1, T=100, p=100, m=m, reps=100, L=100, M=100, seed=77)
        t = run_monte_carlo(cfg)
        rates[m] = [t.rate(m, a) for a in cfg.alphas]
    for a_idx in range(3):
        seq = [rates[m][a_idx] for m in ms]
        for lo, hi in zip(seq, seq[1:]):
            se = np.sqrt(max(lo * (1 - lo), 0.01) / 100)
            assert hi >= lo - 2 * se
        assert seq[-1] > seq[0]
