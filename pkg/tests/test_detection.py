import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from lowdeg._numeric import make_rng
from lowdeg.detection import (
    binomial_moment_bound,
    cov_corrected_constants,
    cov_corrected_row_sums,
    degree2_conditions,
    degree2_samples,
    degree2_stat,
    degree2_threshold,
    degree3_conditions,
    degree3_ratio,
    detection_lambda_boundary,
    empirical_cov_moments,
    ldlr_mean_corrected_bound,
    moments_match_symbolically,
    null_corr_path_value,
    path_family,
    path_family_count,
    path_term_expectation,
    run_detection_experiment,
    sample_cov_corrected,
    sample_mean_corrected,
    symbolic_cov_moments,
    t_max,
)
from lowdeg.models import SubmatrixParams


def test_threshold_and_boundary():
    assert degree2_threshold(100, 5) == pytest.approx(10_000 + 5 * math.sqrt(2) * 1000)
    assert math.isnan(detection_lambda_boundary(1000, 0.2, 5))
    assert t_max(1000, 0.2) < 0
    n, rho, t = 10**6, 0.01, 5
    lb = detection_lambda_boundary(n, rho, t)
    assert lb == pytest.approx(math.sqrt(4 * math.sqrt(2) * t / (0.125 - rho)) * (rho * 1000) ** -1.5)
    conds = degree2_conditions(SubmatrixParams(n, lb, rho), t)
    assert conds["lambda >= boundary"] and conds["0 < t <= t_max"]


def test_stat_matches_definition():
    y = np.arange(9.0).reshape(3, 3)
    assert degree2_stat(y) == 3.0**2 + 12.0**2 + 21.0**2


@pytest.mark.parametrize("which", ["null", "planted"])
def test_degree2_samplers_agree(which):
    p = SubmatrixParams(40, 0.8, 0.2)
    a = degree2_samples(p, which, 3000, 1, "chi2")
    b = degree2_samples(p, which, 3000, 2, "rowsum")
    c = degree2_samples(p, which, 1500, 3, "matrix")
    for x, y in ((a, b), (a, c)):
        se = math.sqrt(x.var() / len(x) + y.var() / len(y))
        assert abs(x.mean() - y.mean()) < 4.5 * se


def test_null_mean_is_n_squared():
    f = degree2_samples(SubmatrixParams(200, 1.0, 0.05), "null", 20_000, 4)
    assert abs(f.mean() - 200**2) < 4 * f.std() / math.sqrt(len(f))


def test_mean_corrected_planted_has_centered_entries():
    p = SubmatrixParams(30, 2.0, 0.3)
    ys = np.stack([sample_mean_corrected(p, s) for s in range(4000)])
    assert abs(ys.mean()) < 0.02


def test_detection_experiment_reports():
    n = 10**6
    rho = n**-0.3
    p = SubmatrixParams(n, detection_lambda_boundary(n, rho, 5), rho)
    rep = run_detection_experiment(p, 5, 2000, 0)
    assert rep.conditions_met
    assert rep.type1_ok and rep.type2_ok
    assert rep.row()["trials"] == 2000
    with pytest.raises(ValueError):
        run_detection_experiment(p, 5, 10, 0)


def test_binomial_moment_bound():
    rng = np.random.default_rng(0)
    for n, q, d in ((100, 0.1, 2), (1000, 0.01, 3), (50, 0.5, 4)):
        x = rng.binomial(n, q, 200_000)
        assert np.mean(np.abs(x - n * q) ** d) <= binomial_moment_bound(n, q, d)


def test_ldlr_bound_fit():
    b = ldlr_mean_corrected_bound(4, 0.01, 0.01, 10**4)
    assert b.C_fitted and b.C > 0
    assert math.fsum(b.r**d for d in range(1, 5)) == pytest.approx(b.series, rel=1e-9)
    fixed = ldlr_mean_corrected_bound(4, 0.01, 0.01, 10**4, C=1.0)
    assert not fixed.C_fitted and fixed.series == b.series
    assert ldlr_mean_corrected_bound(3, 0.0, 0.1, 100).series == 0.0
    big = ldlr_mean_corrected_bound(6, 5.0, 0.3, 10**4)
    assert big.diverging


def test_cov_corrected_constants():
    a, b = cov_corrected_constants(0.2, 0.2)
    assert a**2 == pytest.approx(0.04 * 0.008 * 0.8)
    assert b**2 == pytest.approx(1 + 0.04 * 0.04 * 0.64)


def test_symbolic_moments_match():
    assert moments_match_symbolically()
    m = symbolic_cov_moments()
    lam, rho = sp.symbols("lambda rho", positive=True)
    assert sp.simplify(m["planted"]["row"] - lam**2 * rho**3 * (1 - rho)) == 0
    assert m["planted"]["mean"] == 0


def test_cov_row_sums_match_matrix_sampler():
    p = SubmatrixParams(20, 1.5, 0.3)
    for which in ("null", "planted"):
        direct = np.stack([sample_cov_corrected(p, s, which).sum(axis=1) for s in range(3000)])
        rng = make_rng(9)
        fast = np.stack([cov_corrected_row_sums(p, rng, which) for _ in range(3000)])
        for stat in (lambda r: r[:, 0], lambda r: r[:, 0] * r[:, 1], lambda r: r[:, 0] ** 2):
            x, y = stat(direct), stat(fast)
            se = math.sqrt(x.var() / len(x) + y.var() / len(y))
            assert abs(x.mean() - y.mean()) < 4.5 * se


def test_empirical_cov_moments_small():
    p = SubmatrixParams(10, 0.5, 0.3)
    a = empirical_cov_moments(p, "planted", 4000, 1)
    b = empirical_cov_moments(p, "null", 4000, 2)
    for k in a:
        assert abs(a[k][0] - b[k][0]) < 4.5 * math.hypot(a[k][1], b[k][1])


def test_degree3_ratio_runs():
    p = SubmatrixParams(200, 0.5, 0.1)
    r = degree3_ratio(p, 400, 0)
    assert math.isfinite(r.ratio.estimate) and r.ratio.half_width > 0
    assert degree3_conditions(p)["1/n <= rho <= 1/8"]


@pytest.mark.parametrize("n", range(6, 11))
def test_path_family_count(n):
    for D in (2, 4):
        assert len(path_family(n, D)) == path_family_count(n, D)


def test_path_term_expectation_closed_form():
    lam, rho = Fraction(3, 2), Fraction(1, 3)
    for D in (2, 4):
        k = D // 2
        for M in path_family(8, D)[:20]:
            assert path_term_expectation(M, lam, rho) == lam**D * rho ** (3 * k) * (1 - rho) ** (k + 1)


def test_null_corr_value():
    v = null_corr_path_value(12, 2, 1.0, 0.25)
    fam = path_family(12, 2)
    brute = sum(float(path_term_expectation(M, 1, Fraction(1, 4))) for M in fam) / math.sqrt(len(fam))
    assert v.exact == pytest.approx(brute, rel=1e-12)
    assert v.exact >= v.lower_bound
    with pytest.raises(ValueError):
        null_corr_path_value(12, 4, 1.0, 0.25)
    with pytest.raises(ValueError):
        null_corr_path_value(12, 3, 1.0, 0.25)
