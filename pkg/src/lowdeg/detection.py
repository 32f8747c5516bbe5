"""Detection variants of the planted submatrix problem with modified nulls.

Mean-corrected: planted Y = lam (v v^T - E[v v^T]) + Z against i.i.d. N(0,1).
Covariance-corrected: planted Y = lam (u v^T - rho^2 J) + Z against
Y_ij = alpha (r_i + c_j) + beta Z_ij, which has the same first two moments.
Both use asymmetric i.i.d. noise. Also here: the degree-2 and degree-3 row-sum
tests, the explicit low-degree likelihood ratio series, and the null-normalized
correlation of the length-2 path polynomial.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from ._numeric import GENERATOR_NAME, logsumexp, make_rng
from .estimators import ExperimentResult
from .models import SubmatrixParams

CHUNK = 1024


# -- samplers -------------------------------------------------------------------------------


def _check_which(which: str):
    if which not in ("planted", "null"):
        raise ValueError("which must be 'planted' or 'null'")


def sample_mean_corrected(p: SubmatrixParams, seed: int, which: str = "planted") -> np.ndarray:
    _check_which(which)
    rng = make_rng(seed)
    n, rho = p.n, float(p.rho)
    v = (rng.random(n) < rho).astype(float)
    z = rng.standard_normal((n, n))
    if which == "null":
        return z
    mean = rho * rho * np.ones((n, n)) + rho * (1 - rho) * np.eye(n)
    return float(p.lam) * (np.outer(v, v) - mean) + z


def cov_corrected_constants(lam, rho) -> tuple[float, float]:
    """(alpha, beta) with alpha^2 = lam^2 rho^3 (1-rho), beta^2 = 1 + lam^2 rho^2 (1-rho)^2."""
    lam, rho = float(lam), float(rho)
    return (math.sqrt(lam * lam * rho**3 * (1 - rho)), math.sqrt(1 + lam * lam * rho * rho * (1 - rho) ** 2))


def sample_cov_corrected(p: SubmatrixParams, seed: int, which: str = "planted") -> np.ndarray:
    _check_which(which)
    rng = make_rng(seed)
    n, rho = p.n, float(p.rho)
    if which == "planted":
        u = (rng.random(n) < rho).astype(float)
        v = (rng.random(n) < rho).astype(float)
        return float(p.lam) * (np.outer(u, v) - rho * rho) + rng.standard_normal((n, n))
    a, b = cov_corrected_constants(p.lam, rho)
    r = rng.standard_normal(n)
    c = rng.standard_normal(n)
    return a * (r[:, None] + c[None, :]) + b * rng.standard_normal((n, n))


def mean_corrected_row_sums(p: SubmatrixParams, rng: np.random.Generator, which: str) -> np.ndarray:
    """Exact law of (sum_j Y_ij)_i: lam (s v_i - mu) + sqrt(n) z_i, mu = rho + (n-1) rho^2."""
    n, rho = p.n, float(p.rho)
    z = math.sqrt(n) * rng.standard_normal(n)
    if which == "null":
        return z
    v = (rng.random(n) < rho).astype(float)
    mu = rho + (n - 1) * rho * rho
    return float(p.lam) * (v.sum() * v - mu) + z


def cov_corrected_row_sums(p: SubmatrixParams, rng: np.random.Generator, which: str) -> np.ndarray:
    """Exact law of the row sums under either hypothesis.

    Null: alpha n r_i + alpha C + beta sqrt(n) z_i with C = sum_j c_j ~ N(0, n)
    shared by all rows. Planted: lam (u_i s_v - rho^2 n) + sqrt(n) g_i.
    """
    n, rho = p.n, float(p.rho)
    if which == "null":
        a, b = cov_corrected_constants(p.lam, rho)
        C = math.sqrt(n) * rng.standard_normal()
        return a * n * rng.standard_normal(n) + a * C + b * math.sqrt(n) * rng.standard_normal(n)
    u = (rng.random(n) < rho).astype(float)
    s = rng.binomial(n, rho)
    return float(p.lam) * (u * s - rho * rho * n) + math.sqrt(n) * rng.standard_normal(n)


# -- degree-2 test ----------------------------------------------------------------------------


def degree2_stat(y) -> float:
    """f(Y) = sum_i (sum_j Y_ij)^2."""
    y = np.asarray(y, dtype=float)
    return float(np.sum(y.sum(axis=1) ** 2))


def degree2_threshold(n: int, t: float) -> float:
    """tau = n^2 + t sqrt(2) n^(3/2)."""
    return n * n + t * math.sqrt(2.0) * n**1.5


def t_max(n: int, rho) -> float:
    """min{sqrt(rho n)/2, (sqrt 2/18)(1/8 - rho) sqrt n}; nonpositive when rho >= 1/8."""
    rho = float(rho)
    return min(0.5 * math.sqrt(rho * n), math.sqrt(2.0) / 18 * (0.125 - rho) * math.sqrt(n))


def detection_lambda_boundary(n: int, rho, t: float) -> float:
    """sqrt(4 sqrt2 t/(1/8 - rho)) (rho sqrt n)^(-3/2); nan when rho >= 1/8."""
    rho = float(rho)
    if rho >= 0.125:
        return math.nan
    return math.sqrt(4 * math.sqrt(2.0) * t / (0.125 - rho)) * (rho * math.sqrt(n)) ** -1.5


def degree2_conditions(p: SubmatrixParams, t: float) -> dict:
    n, rho = p.n, float(p.rho)
    lb = detection_lambda_boundary(n, rho, t)
    tm = t_max(n, rho)
    return {
        "1/n <= rho < 1/8": 1.0 / n <= rho < 0.125,
        "0 < t <= t_max": 0 < t <= tm,
        "lambda >= boundary": (not math.isnan(lb)) and float(p.lam) >= lb * (1 - 1e-12),
        "t_max": tm,
        "lambda_boundary": lb,
    }


def degree2_samples(p: SubmatrixParams, which: str, trials: int, seed: int, sampler: str = "chi2") -> np.ndarray:
    """Draws of f(Y) under one hypothesis.

    sampler="matrix" builds Y; "rowsum" draws the exact row-sum vector; "chi2"
    uses f = n * chi'^2_n(delta) given s = sum v, with
    delta = [s lam^2 (s - mu)^2 + (n - s) lam^2 mu^2] / n.
    """
    _check_which(which)
    stream = 0 if which == "null" else 1
    out = np.empty(trials)
    n, lam, rho = p.n, float(p.lam), float(p.rho)
    for c, start in enumerate(range(0, trials, CHUNK)):
        m = min(CHUNK, trials - start)
        rng = make_rng(seed, stream, c)
        if sampler == "chi2":
            if which == "null":
                out[start:start + m] = n * rng.chisquare(n, m)
            else:
                s = rng.binomial(n, rho, m).astype(float)
                mu = rho + (n - 1) * rho * rho
                delta = (s * lam * lam * (s - mu) ** 2 + (n - s) * lam * lam * mu * mu) / n
                out[start:start + m] = n * rng.noncentral_chisquare(n, np.maximum(delta, 1e-300))
        elif sampler == "rowsum":
            for i in range(m):
                out[start + i] = float(np.sum(mean_corrected_row_sums(p, rng, which) ** 2))
        elif sampler == "matrix":
            for i in range(m):
                sub = int(rng.integers(0, 2**63 - 1))
                out[start + i] = degree2_stat(sample_mean_corrected(p, sub, which))
        else:
            raise ValueError(f"unknown sampler {sampler!r}")
    return out


@dataclass
class DetectionReport:
    statistic: str
    threshold: float
    t: float
    trials: int
    seed: int
    type1: float
    type2: float
    type1_half_width: float
    type2_half_width: float
    type1_guarantee: float
    type2_guarantee: float
    type1_slack: float
    type2_slack: float
    conditions: dict
    params: dict = field(default_factory=dict)
    sampler: str = "chi2"
    generator: str = GENERATOR_NAME

    @property
    def conditions_met(self) -> bool:
        return all(v for k, v in self.conditions.items() if isinstance(v, bool))

    @property
    def type1_ok(self) -> bool:
        return self.type1 <= self.type1_guarantee + self.type1_slack

    @property
    def type2_ok(self) -> bool:
        return self.type2 <= self.type2_guarantee + self.type2_slack

    def row(self) -> dict:
        return {
            "statistic": self.statistic, "n": self.params.get("n"), "lam": self.params.get("lam"),
            "rho": self.params.get("rho"), "t": self.t, "threshold": self.threshold, "trials": self.trials,
            "seed": self.seed, "sampler": self.sampler, "type1": self.type1, "type1_hw": self.type1_half_width,
            "type1_guarantee": self.type1_guarantee, "type1_ok": self.type1_ok, "type2": self.type2,
            "type2_hw": self.type2_half_width, "type2_guarantee": self.type2_guarantee, "type2_ok": self.type2_ok,
            "conditions_met": self.conditions_met, "generator": self.generator,
        }


def _se(g: float, trials: int) -> float:
    return math.sqrt(max(g * (1 - g), 0.0) / trials)


def run_detection_experiment(p: SubmatrixParams, t: float, trials: int, seed: int,
                             sampler: str = "chi2") -> DetectionReport:
    """Empirical errors of the test f(Y) > tau.

    The guarantees are 1/t^2 (type I) and 2/t^2 (type II); each is allowed a
    slack of 3 binomial standard errors evaluated at the guarantee value.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    tau = degree2_threshold(p.n, t)
    f0 = degree2_samples(p, "null", trials, seed, sampler)
    f1 = degree2_samples(p, "planted", trials, seed, sampler)
    e1 = float(np.mean(f0 >= tau))
    e2 = float(np.mean(f1 <= tau))
    g1, g2 = min(1 / t**2, 1.0), min(2 / t**2, 1.0)
    return DetectionReport(
        "sum_i (sum_j Y_ij)^2", tau, t, trials, seed, e1, e2,
        1.96 * _se(e1, trials), 1.96 * _se(e2, trials), g1, g2,
        3 * _se(g1, trials), 3 * _se(g2, trials), degree2_conditions(p, t),
        {"n": p.n, "lam": float(p.lam), "rho": float(p.rho)}, sampler,
    )


# -- low-degree likelihood ratio bound -----------------------------------------------------------


def binomial_moment_bound(n: int, p, d: float) -> float:
    """sqrt(2 pi) [(2 d p n)^(d/2) + (4d/3)^d] bounds E|Bin(n,p) - pn|^d."""
    if d < 1:
        raise ValueError("d must be at least 1")
    p = float(p)
    return math.sqrt(2 * math.pi) * ((2 * d * p * n) ** (d / 2) + (4 * d / 3) ** d)


def _log_series_term(d: int, lam: float, rho: float, n: int) -> float:
    """log of sqrt(2 pi) 7^d lam^(2d)/d! times the nine-term bracket."""
    L = math.log
    brk = [
        d * L(4 * d * rho * rho * n),
        2 * d * L(8 * d / 3),
        d * L(2 * rho * rho * n) + d / 2 * L(2 * d * rho * rho * n),
        d * L(2 * rho * rho * n) + d * L(4 * d / 3),
        L(2) + 2 * d * L(rho) + d * L(4 * d * rho * n),
        L(2) + 2 * d * L(rho) + 2 * d * L(8 * d / 3),
        L(2) + d * L(2 * rho**3 * n) + d / 2 * L(2 * d * rho * n),
        L(2) + d * L(2 * rho**3 * n) + d * L(4 * d / 3),
        d * L(rho * rho * n),
    ]
    return 0.5 * L(2 * math.pi) + d * L(7) + 2 * d * L(lam) - math.lgamma(d + 1) + logsumexp(brk)


@dataclass
class LDLRBound:
    D: int
    series: float
    log_series: float
    log_terms: list
    diverging: bool
    C: float | None
    r: float | None
    r_form: float | None
    C_fitted: bool


def ldlr_mean_corrected_bound(D: int, lam, rho, n: int, C: float | None = None) -> LDLRBound:
    """Explicit series bounding ||L^{<=D}||^2 - 1, plus the r/(1-r) form.

    r = C D^2 lam^2 max{1, rho^3 n^(3/2)}. Without a caller C, the smallest C with
    sum_{d<=D} r^d >= series is fitted and reported as metadata.
    """
    if D < 1:
        raise ValueError("D must be at least 1")
    lam, rho = float(lam), float(rho)
    if lam == 0:
        return LDLRBound(D, 0.0, -math.inf, [-math.inf] * D, False, C, 0.0 if C is not None else None, 0.0, False)
    logs = [_log_series_term(d, lam, rho, n) for d in range(1, D + 1)]
    log_series = logsumexp(logs)
    series = math.exp(log_series) if log_series < 709 else math.inf
    diverging = D >= 2 and logs[-1] > logs[-2]
    scale = D * D * lam * lam * max(1.0, rho**3 * n**1.5)
    fitted = C is None
    if fitted and math.isfinite(series):
        def gap(c):
            r = c * scale
            return math.fsum(r**d for d in range(1, D + 1)) - series
        hi = 1.0
        while gap(hi) < 0:
            hi *= 2
        C = brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-12)
    r = None if C is None else C * scale
    r_form = None if r is None else (r / (1 - r) if r < 1 else math.inf)
    return LDLRBound(D, series, log_series, logs, diverging, C, r, r_form, fitted)


# -- covariance-corrected model ------------------------------------------------------------------


_LAM, _RHO = sp.symbols("lambda rho", positive=True)


def _expect(expr, bernoulli, gaussian):
    """E of a polynomial in independent Bernoulli(rho) and N(0,1) symbols."""
    expr = sp.expand(expr)
    gens = list(bernoulli) + list(gaussian)
    poly = sp.Poly(expr, *gens)
    total = sp.Integer(0)
    for monom, coef in poly.terms():
        val = coef
        for sym, k in zip(gens, monom):
            if k == 0:
                continue
            if sym in bernoulli:
                val *= _RHO
            elif k % 2:
                val = 0
                break
            else:
                val *= sp.factorial2(k - 1)
        total += val
    return sp.simplify(total)


def symbolic_cov_moments() -> dict:
    """First and second moments of both hypotheses, as sympy expressions in (lambda, rho).

    Keys: mean, var (E Y_ij^2), row (E Y_ij Y_il), col (E Y_ij Y_kj), cross (E Y_ij Y_kl).
    Entries (i,j), (i,l), (k,j), (k,l) with i != k and j != l are enough.
    """
    u_i, u_k, v_j, v_l = sp.symbols("u_i u_k v_j v_l")
    z = sp.symbols("z_ij z_il z_kj z_kl")
    rs = sp.symbols("r_i r_k")
    cs = sp.symbols("c_j c_l")
    alpha = sp.sqrt(_LAM**2 * _RHO**3 * (1 - _RHO))
    beta = sp.sqrt(1 + _LAM**2 * _RHO**2 * (1 - _RHO) ** 2)
    P = {
        "ij": _LAM * (u_i * v_j - _RHO**2) + z[0], "il": _LAM * (u_i * v_l - _RHO**2) + z[1],
        "kj": _LAM * (u_k * v_j - _RHO**2) + z[2], "kl": _LAM * (u_k * v_l - _RHO**2) + z[3],
    }
    Q = {
        "ij": alpha * (rs[0] + cs[0]) + beta * z[0], "il": alpha * (rs[0] + cs[1]) + beta * z[1],
        "kj": alpha * (rs[1] + cs[0]) + beta * z[2], "kl": alpha * (rs[1] + cs[1]) + beta * z[3],
    }
    bern = (u_i, u_k, v_j, v_l)
    gauss = tuple(z) + rs + cs
    out = {}
    for name, Y in (("planted", P), ("null", Q)):
        out[name] = {
            "mean": _expect(Y["ij"], bern, gauss),
            "var": _expect(Y["ij"] ** 2, bern, gauss),
            "row": _expect(Y["ij"] * Y["il"], bern, gauss),
            "col": _expect(Y["ij"] * Y["kj"], bern, gauss),
            "cross": _expect(Y["ij"] * Y["kl"], bern, gauss),
        }
    return out


def moments_match_symbolically() -> bool:
    m = symbolic_cov_moments()
    return all(sp.simplify(m["planted"][k] - m["null"][k]) == 0 for k in m["planted"])


def empirical_cov_moments(p: SubmatrixParams, which: str, samples: int, seed: int) -> dict:
    """Sample means (and standard errors) of Y_11, Y_11^2, Y_11 Y_12, Y_11 Y_21, Y_11 Y_22
    over independent full matrices."""
    vals = {k: [] for k in ("mean", "var", "row", "col", "cross")}
    for s in range(samples):
        y = sample_cov_corrected(p, _mix(seed, s), which)
        vals["mean"].append(y[0, 0])
        vals["var"].append(y[0, 0] ** 2)
        vals["row"].append(y[0, 0] * y[0, 1])
        vals["col"].append(y[0, 0] * y[1, 0])
        vals["cross"].append(y[0, 0] * y[1, 1])
    out = {}
    for k, xs in vals.items():
        a = np.asarray(xs)
        out[k] = (float(a.mean()), float(a.std(ddof=1) / math.sqrt(len(a))))
    return out


def _mix(seed: int, s: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(s,)).generate_state(1, np.uint64)[0])


def degree3_conditions(p: SubmatrixParams) -> dict:
    n, rho, lam = p.n, float(p.rho), float(p.lam)
    return {"1/n <= rho <= 1/8": 1.0 / n <= rho <= 0.125, "lambda <= (rho sqrt n)^-1": lam <= 1 / (rho * math.sqrt(n))}


@dataclass
class Degree3Result:
    ratio: ExperimentResult
    mean_planted: float
    mean_planted_hw: float
    second_moment_null: float
    second_moment_null_hw: float
    mean_null: float
    mean_null_hw: float
    observed_c: float
    conditions: dict


def degree3_ratio(p: SubmatrixParams, trials: int, seed: int) -> Degree3Result:
    """Monte Carlo E_P[f] / sqrt(E_Q[f^2]) for f = sum_i (sum_j Y_ij)^3."""
    fp = np.empty(trials)
    fq = np.empty(trials)
    for c, start in enumerate(range(0, trials, CHUNK)):
        m = min(CHUNK, trials - start)
        rp, rq = make_rng(seed, 1, c), make_rng(seed, 0, c)
        for i in range(m):
            fp[start + i] = np.sum(cov_corrected_row_sums(p, rp, "planted") ** 3)
            fq[start + i] = np.sum(cov_corrected_row_sums(p, rq, "null") ** 3)
    A, sa = float(fp.mean()), float(fp.std(ddof=1) / math.sqrt(trials))
    q2 = fq * fq
    B, sb = float(q2.mean()), float(q2.std(ddof=1) / math.sqrt(trials))
    ratio = A / math.sqrt(B)
    # delta method for A / sqrt(B)
    se = math.sqrt((sa / math.sqrt(B)) ** 2 + (A * sb / (2 * B**1.5)) ** 2)
    scale = float(p.lam) ** 3 * float(p.rho) ** 4 * p.n**2
    res = ExperimentResult(ratio, trials, 1.96 * se, seed, se * math.sqrt(trials), "degree3-ratio",
                           {"n": p.n, "lam": p.lam, "rho": p.rho})
    return Degree3Result(res, A, 1.96 * sa, B, 1.96 * sb, float(fq.mean()), 1.96 * float(fq.std(ddof=1) / math.sqrt(trials)),
                         ratio / scale if scale > 0 else math.nan, degree3_conditions(p))


# -- null-normalized correlation -------------------------------------------------------------------


def path_family_count(n: int, D: int) -> int:
    """|M| for k = D/2 vertex-disjoint length-2 paths on [n], one of them with
    vertex 1 as an endpoint: (n-1)! / ((n-3k)! 2^(k-1) (k-1)!)."""
    if D % 2 or D < 2:
        raise ValueError("D must be even and at least 2")
    k = D // 2
    if 3 * k > n:
        return 0
    return math.factorial(n - 1) // (math.factorial(n - 3 * k) * 2 ** (k - 1) * math.factorial(k - 1))


def path_family(n: int, D: int) -> list[frozenset]:
    """Brute force: every edge set in the family, each edge as (i, j) with i < j."""
    if D % 2 or D < 2:
        raise ValueError("D must be even and at least 2")
    k = D // 2
    # a length-2 path is (middle, {a, c}); enumerate all of them on [n]
    paths = []
    for b in range(1, n + 1):
        for a, c in itertools.combinations([x for x in range(1, n + 1) if x != b], 2):
            paths.append((frozenset({a, b, c}), frozenset({tuple(sorted((a, b))), tuple(sorted((b, c)))}), b))
    out = set()
    for combo in itertools.combinations(range(len(paths)), k):
        vs = [paths[i][0] for i in combo]
        if sum(len(s) for s in vs) != len(frozenset().union(*vs)):
            continue
        # vertex 1 must be an endpoint of some path
        if not any(1 in paths[i][0] and paths[i][2] != 1 for i in combo):
            continue
        out.add(frozenset().union(*(paths[i][1] for i in combo)))
    return sorted(out, key=sorted)


def path_term_expectation(edges, lam, rho) -> Fraction:
    """E_P[Y^M (v_1 - rho)] by enumerating v in {0,1}^V(M); the noise averages out
    because every edge appears once."""
    lam, rho = Fraction(lam), Fraction(rho)
    verts = sorted({x for e in edges for x in e} | {1})
    total = Fraction(0)
    for bits in itertools.product((0, 1), repeat=len(verts)):
        v = dict(zip(verts, bits))
        w = Fraction(1)
        for b in bits:
            w *= rho if b else 1 - rho
        val = v[1] - rho
        for i, j in edges:
            val *= lam * (v[i] * v[j] - rho * rho)
        total += w * val
    return total


@dataclass
class NullCorrValue:
    n: int
    D: int
    count: int
    lower_bound: float
    exact: float
    stated_formula: float
    count_lower_bound: float


def null_corr_path_value(n: int, D: int, lam, rho) -> NullCorrValue:
    """Ratio E_P[f x] / sqrt(E_Q[f^2]) for f = sum_{M} Y^M.

    E_Q[f^2] = |M| and each M contributes lam^D rho^(3k) (1-rho)^(k+1), so the
    exact ratio is lam^D rho^(3k) (1-rho)^(k+1) sqrt|M|.
    """
    if D % 2 or D < 2:
        raise ValueError("D must be even and at least 2")
    if D > n / 4:
        raise ValueError("need D <= n/4")
    k = D // 2
    lam, rho = float(lam), float(rho)
    count = path_family_count(n, D)
    exact = lam**D * rho ** (3 * k) * (1 - rho) ** (k + 1) * math.sqrt(count)
    stated = (1 - rho) * lam**D * rho ** (1.5 * D) * math.sqrt(count)
    lower = (1 - rho) * math.sqrt(2 / n) * (lam * rho**1.5 * n**0.75 / (8 * D) ** 0.25) ** D
    count_lb = (n - 2 * D) ** (3 * k - 1) / (math.factorial(k - 1) * 2 ** (k - 1))
    return NullCorrValue(n, D, count, lower, exact, stated, count_lb)
