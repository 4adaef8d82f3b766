import numpy as np
import pytest
from scipy import stats

from survcut import (ValidationError, fit_bins, logrank_statistic, ls_corrected_p,
                     mt_detect, mt_scan, mt_select, validate_dataset)


def test_logrank_hand_case():
    # two subjects: the in-group one fails first while both are at risk
    res = logrank_statistic(np.array([1.0, 2.0]), np.array([1, 0]),
                            np.array([True, False]))
    np.testing.assert_allclose(res.statistic, 1.0, rtol=1e-14)
    np.testing.assert_allclose(res.score, 0.5, rtol=1e-14)
    np.testing.assert_allclose(res.variance, 0.25, rtol=1e-14)
    np.testing.assert_allclose(res.p_value, stats.chi2.sf(1.0, 1), rtol=1e-12)
    assert not res.degenerate


def test_logrank_identical_groups_is_null():
    # same survival experience interleaved: observed equals expected
    times = np.array([1.0, 1.0, 2.0, 2.0, 3.0, 3.0])
    events = np.ones(6, dtype=np.int64)
    group = np.array([True, False, True, False, True, False])
    res = logrank_statistic(times, events, group)
    np.testing.assert_allclose(res.statistic, 0.0, atol=1e-14)
    np.testing.assert_allclose(res.p_value, 1.0, rtol=1e-14)


def test_logrank_degenerate_variance():
    # everyone in one group: no information, flagged and p = 1
    res = logrank_statistic(np.array([1.0, 2.0, 3.0]), np.array([1, 1, 0]),
                            np.array([True, True, True]))
    assert res.degenerate
    assert res.p_value == 1.0
    assert res.variance == 0.0


def test_logrank_antisymmetric_in_group_label():
    rng = np.random.default_rng(8)
    times = rng.exponential(1.0, 30)
    events = (rng.random(30) < 0.8).astype(np.int64)
    g = rng.random(30) < 0.5
    a = logrank_statistic(times, events, g)
    b = logrank_statistic(times, events, ~g)
    np.testing.assert_allclose(a.score, -b.score, rtol=1e-12)
    np.testing.assert_allclose(a.statistic, b.statistic, rtol=1e-12)


def test_logrank_null_p_values_uniform():
    # permutation null: the chi-square approximation should be honest
    rng = np.random.default_rng(123)
    n = 80
    times = rng.exponential(1.0, n)
    events = (rng.random(n) < 0.85).astype(np.int64)
    ps = []
    for _ in range(2000):
        g = np.zeros(n, dtype=bool)
        g[rng.permutation(n)[: n // 2]] = True
        ps.append(logrank_statistic(times, events, g).p_value)
    ks = stats.kstest(ps, "uniform").statistic
    assert ks < 0.05


# ---------------------------------------------------------------------------


def _signal(seed, n=500, cut=None, effect=1.5):
    rng = np.random.default_rng([404, seed])
    x = rng.uniform(size=n)
    threshold = np.quantile(x, 0.5) if cut is None else cut
    f = np.where(x > threshold, effect, 0.0)
    t = -np.log(rng.uniform(size=n)) * np.exp(-f)
    c = rng.exponential(2.0, size=n)
    return x, np.minimum(t, c), (t <= c).astype(np.int64), threshold


def test_scan_matches_single_split():
    x, times, events, _ = _signal(0, n=120)
    scan = mt_scan(x, times, events)
    for i in (0, scan.n_candidates // 2, scan.n_candidates - 1):
        g = x <= scan.candidates[i]
        ref = logrank_statistic(times, events, g)
        np.testing.assert_allclose(scan.statistics[i], ref.statistic, rtol=1e-10)
        np.testing.assert_allclose(scan.scores[i], ref.score, rtol=1e-10)
        np.testing.assert_allclose(scan.variances[i], ref.variance, rtol=1e-10)
        np.testing.assert_allclose(scan.p_values[i], ref.p_value, rtol=1e-10)


def test_scan_candidates_stay_inside_band():
    x, times, events, _ = _signal(1, n=200)
    scan = mt_scan(x, times, events, band=(0.2, 0.8))
    lo, hi = np.quantile(x, [0.15, 0.85])
    assert scan.candidates.min() >= lo
    assert scan.candidates.max() <= hi
    assert np.all(np.diff(scan.candidates) > 0)


def test_scan_scheme_grid_is_subset_of_all():
    x, times, events, _ = _signal(2, n=300)
    feats = x.reshape(-1, 1)
    scheme = fit_bins(feats, 10)
    all_scan = mt_scan(x, times, events, grid="all")
    sch_scan = mt_scan(x, times, events, grid="scheme", scheme=scheme, feature=0)
    assert sch_scan.n_candidates <= all_scan.n_candidates
    assert np.isin(sch_scan.candidates, all_scan.candidates).all()


def test_scan_constant_feature_is_empty():
    times = np.array([1.0, 2.0, 3.0, 4.0])
    events = np.array([1, 1, 0, 1])
    scan = mt_scan(np.full(4, 5.0), times, events)
    assert scan.n_candidates == 0
    sel = mt_select(scan)
    assert sel.cutpoint is None and sel.n_candidates == 0


def test_scan_validation():
    times = np.array([1.0, 2.0])
    with pytest.raises(ValidationError, match="align"):
        mt_scan(np.array([1.0]), times, np.array([1, 0]))
    with pytest.raises(ValidationError, match="no events"):
        mt_scan(np.array([1.0, 2.0]), times, np.array([0, 0]))
    with pytest.raises(ValidationError, match="band"):
        mt_scan(np.array([1.0, 2.0]), times, np.array([1, 0]), band=(0.9, 0.1))
    with pytest.raises(ValidationError, match="grid"):
        mt_scan(np.array([1.0, 2.0]), times, np.array([1, 0]), grid="bogus")
    with pytest.raises(ValidationError, match="scheme"):
        mt_scan(np.array([1.0, 2.0]), times, np.array([1, 0]), grid="scheme")


# ---------------------------------------------------------------------------


def test_bonferroni_correction_arithmetic():
    x, times, events, _ = _signal(3, n=150)
    scan = mt_scan(x, times, events)
    sel = mt_select(scan, "bonferroni", alpha=0.05)
    i = int(np.argmin(scan.p_values))
    np.testing.assert_allclose(sel.p_corrected,
                               min(1.0, scan.n_candidates * scan.p_values[i]),
                               rtol=1e-14)
    assert sel.index == i


def test_bonferroni_rejects_borderline():
    # corrected p = 20 * 0.01 = 0.2 > 0.05: no selection
    cand = np.linspace(0.0, 1.0, 20)
    from survcut.baselines import ScanResult
    p = np.full(20, 0.5)
    p[7] = 0.01
    scan = ScanResult(cand, np.full(20, 1.0), p, np.full(20, 0.1),
                      np.full(20, 0.2), (0.1, 0.9))
    sel = mt_select(scan, "bonferroni", alpha=0.05)
    assert sel.cutpoint is None
    np.testing.assert_allclose(sel.p_corrected, 0.2, rtol=1e-14)
    sel = mt_select(scan, "bonferroni", alpha=0.25)
    assert sel.cutpoint == cand[7]


def test_amplitude_is_one_step_hazard_ratio():
    from survcut.baselines import ScanResult
    scan = ScanResult(np.array([0.5]), np.array([9.0]), np.array([1e-4]),
                      np.array([-2.0]), np.array([4.0]), (0.1, 0.9))
    sel = mt_select(scan, "bonferroni", alpha=0.05)
    np.testing.assert_allclose(sel.amplitude, 0.5, rtol=1e-14)


def test_ls_correction_formula():
    b = 3.5
    phi = stats.norm.pdf(b)
    expected = phi * (b - 1 / b) * np.log(81.0) + 4 * phi / b
    p, low = ls_corrected_p(b * b, (0.1, 0.9))
    np.testing.assert_allclose(p, expected, rtol=1e-12)
    assert not low


def test_ls_low_statistic_keeps_tail_term_only():
    b = 0.8
    p, low = ls_corrected_p(b * b)
    np.testing.assert_allclose(p, min(1.0, 4 * stats.norm.pdf(b) / b), rtol=1e-12)
    assert low
    p0, low0 = ls_corrected_p(0.0)
    assert p0 == 1.0 and low0


def test_ls_band_enters_through_log_ratio():
    b = 2.5
    phi = stats.norm.pdf(b)
    ratio = (0.75 * 0.75) / (0.25 * 0.25)
    expected = phi * (b - 1 / b) * np.log(ratio) + 4 * phi / b
    p, _ = ls_corrected_p(b * b, (0.25, 0.75))
    np.testing.assert_allclose(p, expected, rtol=1e-12)


def test_select_validation():
    x, times, events, _ = _signal(4, n=100)
    scan = mt_scan(x, times, events)
    with pytest.raises(ValidationError, match="alpha"):
        mt_select(scan, alpha=0.0)
    with pytest.raises(ValidationError, match="correction"):
        mt_select(scan, "holm")


# ---------------------------------------------------------------------------


def test_detect_recovers_median_threshold():
    hits = 0
    for seed in range(20):
        x, times, events, threshold = _signal(seed + 100, n=500)
        ds = validate_dataset(x.reshape(-1, 1), times, events)
        for method in ("mt-b", "mt-ls"):
            model = mt_detect(ds, method)
            assert model.k_hat[0] == 1
        model = mt_detect(ds, "mt-b")
        if abs(model.cutpoints[0][0] - threshold) <= 0.1:
            hits += 1
    assert hits >= 16


def test_detect_one_cut_per_feature_at_most():
    x, times, events, _ = _signal(5, n=400)
    rng = np.random.default_rng(5)
    feats = np.column_stack([x, rng.uniform(size=400)])
    ds = validate_dataset(feats, times, events)
    model = mt_detect(ds, "mt-b")
    assert np.all(model.k_hat <= 1)
    assert model.k_hat[0] == 1


def test_detect_null_false_positive_rate():
    # pure-noise feature: Bonferroni holds the level with room to spare
    false_pos = 0
    reps = 200
    for seed in range(reps):
        rng = np.random.default_rng([505, seed])
        n = 100
        x = rng.uniform(size=n)
        t = -np.log(rng.uniform(size=n))
        c = rng.exponential(2.0, size=n)
        ds = validate_dataset(x.reshape(-1, 1), np.minimum(t, c),
                              (t <= c).astype(np.int64))
        model = mt_detect(ds, "mt-b", alpha=0.05)
        false_pos += int(model.k_hat[0] > 0)
    assert false_pos / reps <= 0.10


def test_detect_unknown_method():
    x, times, events, _ = _signal(6, n=50)
    ds = validate_dataset(x.reshape(-1, 1), times, events)
    with pytest.raises(ValidationError, match="method"):
        mt_detect(ds, "mt-x")


def test_ls_matches_permutation_max_statistic():
    # compare the asymptotic corrected p at b = 3.5 with a permutation
    # estimate of P(max |logrank| over the band exceeds b) at n = 100
    rng = np.random.default_rng(909)
    n = 100
    x = rng.uniform(size=n)
    t = -np.log(rng.uniform(size=n))
    c = rng.exponential(4.0, size=n)
    times = np.minimum(t, c)
    events = (t <= c).astype(np.int64)
    b = 3.5
    exceed = 0
    reps = 2000
    for _ in range(reps):
        perm = rng.permutation(n)
        scan = mt_scan(x[perm], times, events)
        if scan.statistics.max() >= b * b:
            exceed += 1
    asym, _ = ls_corrected_p(b * b)
    assert abs(exceed / reps - asym) <= 0.02
