import io
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdeg.bounds import (
    MET,
    VIOLATED,
    classify,
    clique_validity,
    corr_bound_clique,
    corr_bound_enumerated,
    corr_bound_subgraph_closed,
    corr_bound_submatrix_closed,
    log_double_sum_terms,
    phase_sweep,
    read_reports_csv,
    sharp_bounds,
    submatrix_lambda_boundary,
    write_reports_csv,
)
from lowdeg.models import CliqueParams, SubgraphParams, SubmatrixParams
from lowdeg.oracle import build_moment_system_binary, build_moment_system_gaussian, corr_sq_exact

F = Fraction


def test_enumerated_degree_one_by_hand():
    # rooted connected one-edge classes: the root loop (1 copy) and the edge 1-j (n-1 copies)
    lam, rho, n = F(2), F(1, 3), 5
    rep = corr_bound_enumerated(SubmatrixParams(n, lam, rho), 1)
    loop = lam * rho * (1 - rho)
    edge = lam * rho**2 * (1 - rho)
    assert rep.corr_sq_upper == rho**2 + loop**2 + (n - 1) * edge**2
    assert rep.breakdown == {(1, 0): (n - 1) * edge**2, (1, 1): loop**2}


def test_enumerated_dominates_oracle_small():
    p = SubmatrixParams(3, F(1), F(1, 2))
    for D in (1, 2):
        c2 = corr_sq_exact(build_moment_system_gaussian(p, D, exact=True))
        assert c2 <= corr_bound_enumerated(p, D).corr_sq_upper
    for p in (SubgraphParams(4, F(1, 2), F(1, 3), F(2, 3)), CliqueParams(4, F(1, 4))):
        for D in (1, 2):
            c2 = corr_sq_exact(build_moment_system_binary(p, D))
            assert c2 <= corr_bound_enumerated(p, D).corr_sq_upper


def test_enumerated_q1_one_is_clique():
    a = corr_bound_enumerated(SubgraphParams(5, F(1, 4), F(1, 2), F(1)), 2)
    b = corr_bound_enumerated(CliqueParams(5, F(1, 4)), 2)
    assert a.model == "clique" and a.corr_sq_upper == b.corr_sq_upper
    with pytest.raises(ValueError):
        corr_bound_enumerated(SubgraphParams(5, F(1, 4), F(1, 3), F(1)), 2)


def test_mmse_lower_is_clipped():
    rep = corr_bound_enumerated(SubmatrixParams(4, F(50), F(1, 2)), 2)
    assert rep.mmse_lower_raw < 0
    assert rep.mmse_lower == 0


def test_closed_form_condition_and_value():
    n, rho, D, r = 10_000, F(1, 100), 3, F(1, 2)
    lb = submatrix_lambda_boundary(n, rho, D, r)
    assert lb == pytest.approx(0.5 / 12 * min(1, 1 / (0.01 * 100)))
    ok = corr_bound_submatrix_closed(SubmatrixParams(n, lb, rho), D, r)
    assert ok.status == MET
    assert ok.corr_sq_upper == rho**2 / (1 - r * r) ** 2
    assert ok.extras["double_sum"] <= float(ok.corr_sq_upper)
    bad = corr_bound_submatrix_closed(SubmatrixParams(n, 2 * lb, rho), D, r)
    assert bad.status == VIOLATED
    assert bad.corr_sq_upper == bad.extras["double_sum"]


def test_closed_form_grows_as_r_approaches_one():
    p = SubmatrixParams(100, 0.0, F(1, 10))
    vals = [float(corr_bound_submatrix_closed(p, 2, r).corr_sq_upper) for r in (0.5, 0.9, 0.99, 0.999)]
    assert vals == sorted(vals)
    assert vals[-1] > 1e3 * vals[0]
    with pytest.raises(ValueError):
        corr_bound_submatrix_closed(p, 2, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(1e-3, 2.0), st.floats(0.01, 0.5), st.integers(10, 2000))
def test_log_domain_matches_direct(D, lam, rho, n):
    logs = log_double_sum_terms(n, lam * lam, rho, D)
    for (d, h), lv in logs.items():
        direct = rho**2 * (d * (d + 1) ** 2 * lam**2 * rho**2 * n) ** d * (d / (rho**2 * n)) ** h
        if 0 < direct < 1e300:
            assert math.exp(lv) == pytest.approx(direct, rel=1e-8)


def test_huge_instances_stay_finite_in_log_domain():
    rep = corr_bound_submatrix_closed(SubmatrixParams(10**6, 10.0, 0.01), 100, 0.5)
    assert rep.status == VIOLATED
    assert math.isinf(rep.corr_sq_upper)
    assert math.isfinite(rep.log_corr_sq_upper)


def test_subgraph_closed_form_uses_effective_snr():
    p = SubgraphParams(10_000, F(1, 100), F(1, 2), F(1, 2) + F(1, 10**5))
    rep = corr_bound_subgraph_closed(p, 2, F(1, 2))
    assert rep.status == MET
    with pytest.raises(ValueError):
        corr_bound_subgraph_closed(SubgraphParams(10, F(1, 2), F(1, 2), F(1)), 2, F(1, 2))


def test_clique_closed_form_degree_one():
    n, rho = 1000, 0.001
    rep = corr_bound_clique(CliqueParams(n, rho), 1)
    assert rep.corr_sq_upper == pytest.approx(rho**2 + 16 * math.e**2 * n * rho**4, rel=1e-12)
    assert set(rep.breakdown) == {("large", 2)}


def test_clique_closed_form_sums():
    rep = corr_bound_clique(CliqueParams(10**6, 1e-4), 9)
    assert {k for k in rep.breakdown if k[0] == "small"} == {("small", 2), ("small", 3)}
    assert min(t for kind, t in rep.breakdown if kind == "large") == 3
    assert max(t for _, t in rep.breakdown) == 18


def test_clique_small_rho_limit():
    vals = [corr_bound_clique(CliqueParams(100, rho), 2).corr_sq_upper / rho**2 for rho in (1e-3, 1e-5, 1e-7)]
    assert vals[-1] == pytest.approx(1.0, rel=1e-6)
    assert vals == sorted(vals, reverse=True)


def test_clique_validity():
    assert clique_validity(100, 0.001, 3)["e_factor_ok"]
    assert not clique_validity(100, 0.3, 3)["e_factor_ok"]
    rep = corr_bound_clique(CliqueParams(100, 0.3), 3)
    assert rep.status == VIOLATED


def test_clique_enumerated_dominates_oracle():
    p = CliqueParams(4, F(1, 3))
    rep = corr_bound_clique(p, 2, method="enumerated")
    assert corr_sq_exact(build_moment_system_binary(p, 2)) <= rep.corr_sq_upper


def test_sharp_bounds():
    p = SubmatrixParams(64, 0.5, F(1, 16))
    up, lo = sharp_bounds(p, 1, F(1, 2))
    assert up.corr_sq_upper == 2 * F(1, 16) ** 2 / F(1, 4)
    assert math.isnan(lo.corr_sq_upper)
    want = (1 / 16) ** 2 / (4 * math.e) * (math.e * 0.25 * (1 / 256) * 63)
    assert lo.extras["cumulant_sum_lower"] == pytest.approx(want, rel=1e-12)


def test_classify():
    hard = corr_bound_submatrix_closed(SubmatrixParams(10**4, 1e-4, 0.01), 2, 0.5)
    assert classify(hard, None) == "hard"
    easy = corr_bound_submatrix_closed(SubmatrixParams(10**4, 100.0, 0.01), 2, 0.5)
    assert classify(easy, 1e-9) == "easy"
    assert classify(easy, None) == "open"


def test_phase_sweep_and_csv_roundtrip():
    # D^2 r^(D-1) only beats the trivial error once D is large
    reps = phase_sweep([(0.9, 0.5), (-0.1, 0.1)], 10**6, [15], r=0.5)
    assert [r.regime for r in reps] == ["hard", "easy"]
    buf = io.StringIO()
    write_reports_csv(reps, buf)
    rows = read_reports_csv(io.StringIO(buf.getvalue()))
    assert len(rows) == 2 and rows[0]["regime"] == "hard"
    sub = phase_sweep([(0.9, 0.5)], 10**6, [2], r=0.5, model="subgraph", q0=0.5)
    assert sub[0].model == "subgraph"
