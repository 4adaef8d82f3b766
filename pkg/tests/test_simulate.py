import numpy as np
import pytest
from scipy import stats

from survcut import (GroundTruth, SimConfig, ValidationError,
                     empirical_quantile, gen_features, gen_survival,
                     gen_truth, simulate_dataset)


def test_config_validation():
    with pytest.raises(ValidationError, match="n >= 2"):
        SimConfig(n=1, p=3)
    with pytest.raises(ValidationError, match="correlation"):
        SimConfig(n=10, p=3, rho=1.0)
    with pytest.raises(ValidationError, match="k_star"):
        SimConfig(n=10, p=3, k_star=10)
    with pytest.raises(ValidationError, match="Weibull"):
        SimConfig(n=10, p=3, nu=0.0)
    with pytest.raises(ValidationError, match="censoring"):
        SimConfig(n=10, p=3, censoring_rate=1.0)
    with pytest.raises(ValidationError, match="sparsity"):
        SimConfig(n=10, p=3, sparsity=1.5)


def test_truth_validation():
    with pytest.raises(ValidationError, match="strictly increase"):
        GroundTruth(mu_star=[np.array([0.5, 0.5])],
                    beta_star=[np.array([1.0, -1.0, 0.0])])
    with pytest.raises(ValidationError, match="levels"):
        GroundTruth(mu_star=[np.array([0.5])], beta_star=[np.array([1.0])])
    with pytest.raises(ValidationError, match="align"):
        GroundTruth(mu_star=[np.array([0.5])], beta_star=[])


def test_truth_json_round_trip():
    truth = GroundTruth(
        mu_star=[np.array([-0.3, 0.4]), np.zeros(0)],
        beta_star=[np.array([1.0, -2.0, 1.0]), np.zeros(1)],
        sparse_set=np.array([1]),
    )
    back = GroundTruth.from_dict(truth.to_dict())
    for a, b in zip(back.mu_star, truth.mu_star):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(back.beta_star, truth.beta_star):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(back.sparse_set, truth.sparse_set)


# ---------------------------------------------------------------------------


def test_features_toeplitz_correlation():
    cfg = SimConfig(n=5000, p=6, rho=0.5)
    x = gen_features(cfg, np.random.default_rng(0))
    corr = np.corrcoef(x, rowvar=False)
    adjacent = np.diag(corr, k=1)
    assert np.all(adjacent > 0.45) and np.all(adjacent < 0.55)
    two_apart = np.diag(corr, k=2)
    assert np.all(np.abs(two_apart - 0.25) < 0.05)
    np.testing.assert_allclose(x.var(axis=0, ddof=1), 1.0, atol=0.06)


def test_features_independent_when_rho_zero():
    cfg = SimConfig(n=4000, p=4, rho=0.0)
    x = gen_features(cfg, np.random.default_rng(1))
    corr = np.corrcoef(x, rowvar=False)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.abs(off).max() < 0.06


def test_truth_cutpoints_on_decile_grid():
    cfg = SimConfig(n=400, p=10, k_star=2, sparsity=0.2)
    rng = np.random.default_rng(3)
    x = gen_features(cfg, rng)
    truth = gen_truth(x, cfg, rng)
    for j in range(10):
        if j in truth.sparse_set:
            assert truth.mu_star[j].size == 0
            np.testing.assert_array_equal(truth.beta_star[j], [0.0])
            continue
        grid = np.array([empirical_quantile(x[:, j], u)
                         for u in np.arange(1, 10) / 10.0])
        assert np.isin(truth.mu_star[j], grid).all()
        assert 1 <= truth.mu_star[j].size <= 2


def test_truth_levels_centered_and_alternating():
    cfg = SimConfig(n=300, p=50, k_star=3, sparsity=0.0)
    rng = np.random.default_rng(4)
    x = gen_features(cfg, rng)
    truth = gen_truth(x, cfg, rng)
    for j in range(50):
        b = truth.beta_star[j]
        assert abs(b.sum()) < 1e-12
        diffs = np.diff(b)
        assert np.all(diffs != 0)
        assert np.all(np.sign(diffs[1:]) == -np.sign(diffs[:-1]))


def test_truth_sparse_set_size():
    cfg = SimConfig(n=200, p=10, sparsity=0.2)
    rng = np.random.default_rng(5)
    x = gen_features(cfg, rng)
    truth = gen_truth(x, cfg, rng)
    assert truth.sparse_set.size == 2
    cfg = SimConfig(n=200, p=7, sparsity=0.5)
    truth = gen_truth(gen_features(cfg, rng), cfg, rng)
    assert truth.sparse_set.size == 4  # round(3.5) -> 4


# ---------------------------------------------------------------------------


def test_survival_null_exponential_sanity():
    # nu = sigma = 1 and no effect: T is standard exponential
    cfg = SimConfig(n=10000, p=1, nu=1.0, sigma=1.0, censoring_rate=0.0,
                    sparsity=1.0)
    rng = np.random.default_rng(6)
    x = gen_features(cfg, rng)
    truth = gen_truth(x, cfg, rng)
    z, delta = gen_survival(x, truth, cfg, rng)
    assert delta.all()
    assert abs(z.mean() - 1.0) < 0.05
    ks = stats.kstest(z, "expon").statistic
    assert ks < 0.02


def test_survival_predictor_shifts_times():
    # higher predictor must mean stochastically earlier failure
    cfg = SimConfig(n=6000, p=1, k_star=1, censoring_rate=0.0, sparsity=0.0)
    rng = np.random.default_rng(7)
    x = gen_features(cfg, rng)
    truth = GroundTruth(mu_star=[np.array([0.0])],
                        beta_star=[np.array([-1.0, 1.0])])
    z, delta = gen_survival(x, truth, cfg, rng)
    high = z[x[:, 0] > 0.0]
    low = z[x[:, 0] <= 0.0]
    u = stats.mannwhitneyu(high, low, alternative="less")
    assert u.pvalue < 0.01


def test_survival_censoring_calibration():
    for seed in range(20):
        cfg = SimConfig(n=2000, p=20, k_star=2, censoring_rate=0.3, seed=seed)
        ds, truth = simulate_dataset(cfg)
        rate = 1.0 - ds.events.mean()
        assert abs(rate - 0.3) <= 0.02, f"seed {seed}: rate {rate}"


def test_survival_censoring_small_sample():
    cfg = SimConfig(n=300, p=1, k_star=1, censoring_rate=0.5, seed=11)
    ds, _ = simulate_dataset(cfg)
    assert abs((1.0 - ds.events.mean()) - 0.5) <= 0.05


def test_survival_no_censoring():
    cfg = SimConfig(n=500, p=2, censoring_rate=0.0, seed=8)
    ds, _ = simulate_dataset(cfg)
    assert ds.events.all()


def test_survival_times_positive_and_finite():
    cfg = SimConfig(n=1000, p=5, seed=9)
    ds, _ = simulate_dataset(cfg)
    assert np.isfinite(ds.times).all()
    assert (ds.times >= 0).all()


def test_simulate_deterministic_in_seed():
    cfg = SimConfig(n=300, p=4, seed=42)
    a, ta = simulate_dataset(cfg)
    b, tb = simulate_dataset(cfg)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.events, b.events)
    for ma, mb in zip(ta.mu_star, tb.mu_star):
        np.testing.assert_array_equal(ma, mb)
    c, _ = simulate_dataset(SimConfig(n=300, p=4, seed=43))
    assert not np.array_equal(a.features, c.features)


def test_survival_shape_mismatch_raises():
    cfg = SimConfig(n=100, p=2)
    rng = np.random.default_rng(0)
    x = gen_features(cfg, rng)
    truth = gen_truth(x, cfg, rng)
    with pytest.raises(ValidationError, match="shape"):
        gen_survival(x[:50], truth, cfg, rng)
