"""Upper bounds on Corr^2_{<=D} and the matching lower bounds on MMSE_{<=D}.

Two routes are offered. The enumerated route sums kappa^2/alpha! (or w^2 for the
clique) over rooted connected isomorphism classes, weighting each class by the
number of its labeled copies on [n]. The closed-form routes evaluate the explicit
chains used to bound that sum, in log domain so that n = 10^6, D = 100 is fine.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, TextIO

from ._numeric import Number, exact_sum, exp_or_inf, format_number, logsumexp, safe_log, to_exact
from .cumulants import clique_w, kappa_gaussian, kappa_squared_scaled
from .models import CliqueParams, ModelParams, SubgraphParams, SubmatrixParams, lambda_eff_sq, trivial_mmse
from .multigraph import CLASS_CAP, alpha_factorial, enumerate_rooted_connected

MET = "conditions-met"
VIOLATED = "conditions-violated"

CSV_COLUMNS = ["model", "n", "lam", "q0", "q1", "rho", "D", "r", "method", "corr_sq_upper",
               "log_corr_sq_upper", "mmse_lower", "mmse_lower_raw", "status", "regime"]


@dataclass
class BoundReport:
    """Corr^2 upper bound at degree D, and the MMSE lower bound it implies.

    `breakdown` maps (d, h) to the contribution of edge count d and excess
    h = d + 1 - |V| (or (d, t) with t vertices for the clique closed form); the
    constant term rho^2 is not in it.
    """

    model: str
    params: dict
    D: int
    method: str
    corr_sq_upper: Number
    log_corr_sq_upper: float
    e_x_sq: Number
    status: str = MET
    breakdown: dict = field(default_factory=dict)
    r: Number | None = None
    extras: dict = field(default_factory=dict)
    regime: str = ""

    @property
    def mmse_lower_raw(self) -> Number:
        if isinstance(self.corr_sq_upper, float) and math.isinf(self.corr_sq_upper):
            return -math.inf
        return self.e_x_sq - self.corr_sq_upper

    @property
    def mmse_lower(self) -> Number:
        raw = self.mmse_lower_raw
        if raw >= 0:
            return raw
        return Fraction(0) if isinstance(raw, Fraction) else 0.0

    def row(self) -> dict:
        pr = self.params
        out = {
            "model": self.model, "n": pr.get("n"), "lam": pr.get("lam", ""), "q0": pr.get("q0", ""),
            "q1": pr.get("q1", ""), "rho": pr.get("rho"), "D": self.D, "r": "" if self.r is None else self.r,
            "method": self.method, "corr_sq_upper": self.corr_sq_upper, "log_corr_sq_upper": self.log_corr_sq_upper,
            "mmse_lower": self.mmse_lower, "mmse_lower_raw": self.mmse_lower_raw, "status": self.status,
            "regime": self.regime,
        }
        return {k: ("" if v == "" else format_number(v) if not isinstance(v, str) else v) for k, v in out.items()}


def _param_dict(p: ModelParams) -> dict:
    if isinstance(p, SubmatrixParams):
        return {"n": p.n, "lam": p.lam, "rho": p.rho}
    if isinstance(p, SubgraphParams):
        return {"n": p.n, "q0": p.q0, "q1": p.q1, "rho": p.rho}
    return {"n": p.n, "q0": Fraction(1, 2), "q1": 1, "rho": p.rho}


def _log_of(x: Number) -> float:
    if isinstance(x, Rational):
        x = Fraction(x)
        if x <= 0:
            return -math.inf
        return math.log(x.numerator) - math.log(x.denominator)
    return safe_log(float(x))


def _finish(model, p, D, method, total, breakdown, **kw) -> BoundReport:
    return BoundReport(model, _param_dict(p), D, method, total, _log_of(total), to_exact(p.rho), breakdown=breakdown, **kw)


# -- enumerated class sums ----------------------------------------------------------


def corr_bound_enumerated(p: ModelParams, D: int, cap: int = CLASS_CAP) -> BoundReport:
    """rho^2 + sum over rooted connected classes with 1 <= |alpha| <= D of
    (#copies on [n]) * kappa^2 / alpha!.

    Gaussian model: multigraph classes and kappa_gaussian. Dense subgraph: simple
    classes and the scaled kappa (kappa^2 / (q0 (1-q1))^|alpha|). Clique (or q1 = 1
    with q0 = 1/2): simple classes and w_alpha^2.
    """
    if D < 0:
        raise ValueError("D must be nonnegative")
    if D > cap:
        raise ValueError(f"D = {D} exceeds the class-enumeration cap {cap}")
    if isinstance(p, SubgraphParams) and p.q1 == 1:
        if p.q0 != Fraction(1, 2):
            raise ValueError("q1 = 1 is only handled for the clique (q0 = 1/2)")
        p = CliqueParams(p.n, p.rho)
    if isinstance(p, SubmatrixParams):
        mode, model = "multigraph", "submatrix"

        def term(cls):
            k = kappa_gaussian(cls.canonical, p)
            return k * k / alpha_factorial(cls.canonical)
    elif isinstance(p, SubgraphParams):
        mode, model = "simple", "subgraph"

        def term(cls):
            return kappa_squared_scaled(cls.canonical, p)
    else:
        mode, model = "simple", "clique"

        def term(cls):
            w = clique_w(cls.canonical, p.rho)
            return w * w

    breakdown: dict[tuple[int, int], list] = {}
    for d in range(1, D + 1):
        for cls, count in enumerate_rooted_connected(d, mode, p.n, cap=cap):
            if count == 0:
                continue
            breakdown.setdefault((d, cls.excess), []).append(count * term(cls))
    parts = {k: exact_sum(v) for k, v in sorted(breakdown.items())}
    rho = to_exact(p.rho)
    total = exact_sum([rho * rho, *parts.values()])
    return _finish(model, p, D, "enumerated", total, parts)


# -- closed-form chain for the Gaussian and dense subgraph models ----------------------


def submatrix_lambda_boundary(n: int, rho, D: int, r) -> float:
    """Largest lambda allowed by lambda <= r/(D(D+1)) min{1, 1/(rho sqrt n)}."""
    return float(r) / (D * (D + 1)) * min(1.0, 1.0 / (float(rho) * math.sqrt(n)))


def log_double_sum_terms(n: int, lam_sq: float, rho: float, D: int) -> dict[tuple[int, int], float]:
    """Log of each term rho^2 [d(d+1)^2 lam^2 rho^2 n]^d (d/(rho^2 n))^h, 1 <= d <= D, 0 <= h <= d."""
    out = {}
    base = 2 * math.log(rho)
    for d in range(1, D + 1):
        if lam_sq == 0:
            for h in range(d + 1):
                out[(d, h)] = -math.inf
            continue
        a = d * math.log(d * (d + 1) ** 2 * lam_sq * rho * rho * n)
        b = math.log(d / (rho * rho * n))
        for h in range(d + 1):
            out[(d, h)] = base + a + h * b
    return out


def _closed_chain(model: str, p, lam_sq: Number, D: int, r) -> BoundReport:
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if D < 1:
        raise ValueError("D must be at least 1")
    rho = to_exact(p.rho)
    logs = log_double_sum_terms(p.n, float(lam_sq), float(rho), D)
    log_sum = logsumexp([2 * math.log(float(rho)), *logs.values()])
    double_sum = exp_or_inf(log_sum)
    r_ex = to_exact(r)
    closed = rho * rho / (1 - r_ex * r_ex) ** 2
    bound = submatrix_lambda_boundary(p.n, rho, D, r)
    ok = float(lam_sq) <= bound * bound * (1 + 1e-12)
    extras = {
        "double_sum": double_sum, "log_double_sum": log_sum, "closed_form": closed,
        "lambda": math.sqrt(float(lam_sq)), "lambda_boundary": bound,
    }
    breakdown = {k: exp_or_inf(v) for k, v in logs.items()}
    if ok:
        return _finish(model, p, D, "closed-form", closed, breakdown, r=r, extras=extras)
    # The double sum still bounds the enumerated sum; only the geometric tail needs the condition.
    return BoundReport(model, _param_dict(p), D, "closed-form", double_sum, log_sum, rho,
                       status=VIOLATED, breakdown=breakdown, r=r, extras=extras)


def corr_bound_submatrix_closed(p: SubmatrixParams, D: int, r) -> BoundReport:
    lam = to_exact(p.lam)
    return _closed_chain("submatrix", p, lam * lam, D, r)


def corr_bound_subgraph_closed(p: SubgraphParams, D: int, r) -> BoundReport:
    if p.q1 == 1:
        raise ValueError("q1 = 1: use corr_bound_clique")
    return _closed_chain("subgraph", p, lambda_eff_sq(p), D, r)


# -- planted clique ---------------------------------------------------------------------


def clique_validity(n: int, rho, D: int) -> dict:
    """Numeric proxies for the asymptotic assumptions behind the clique closed form.

    The chain uses (1-rho)^(-2D^2) <= e, which is checked exactly; k = rho n <= sqrt n
    is reported alongside it.
    """
    rho = float(rho)
    e_factor = -2 * D * D * math.log1p(-rho) if rho < 1 else math.inf
    return {"e_factor_ok": e_factor <= 1.0, "log_e_factor": e_factor, "k_below_sqrt_n": rho * n <= math.sqrt(n)}


def corr_bound_clique(p: CliqueParams, D: int, method: str = "closed") -> BoundReport:
    """Clique bound, either the two-sum closed form or the enumerated sum of w^2."""
    if D < 1:
        raise ValueError("D must be at least 1")
    if method == "enumerated":
        rep = corr_bound_enumerated(p, D)
        return rep
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    n, rho = p.n, float(p.rho)
    lr = math.log(rho)
    logs: dict[tuple[int, int], float] = {}
    sq = math.sqrt(D)
    t = 2
    while t <= sq:
        logs[("small", t)] = 2 + (t - 1) * math.log(n) + t * t * math.log(2) + 2 * t * t * math.log(t * t + 1) + 2 * t * lr
        t += 1
    for t in range(max(2, math.ceil(sq)), 2 * D + 1):
        logs[("large", t)] = 2 + (t - 1) * math.log(n) + 2 * D * math.log(t) + 2 * D * math.log(D + 1) + 2 * t * lr
    log_total = logsumexp([2 * lr, *logs.values()])
    total = exp_or_inf(log_total)
    valid = clique_validity(n, rho, D)
    status = MET if valid["e_factor_ok"] else VIOLATED
    return BoundReport("clique", _param_dict(p), D, "closed-form", total, log_total, to_exact(p.rho),
                       status=status, breakdown={k: exp_or_inf(v) for k, v in logs.items()}, extras=valid)


# -- sharp-threshold bounds --------------------------------------------------------------


def sharp_bounds(p: SubmatrixParams, D: int, r) -> tuple[BoundReport, BoundReport]:
    """Upper bound 2 rho^2/(1-r)^2 and the lower bound on the cumulant sum,
    (rho^2/(4e D^{3/2})) [e lam^2 rho^2 (n-D)]^D.

    Returns (upper, lower). The lower report stores its value in
    extras["cumulant_sum_lower"] and has corr_sq_upper = nan.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if D < 1:
        raise ValueError("D must be at least 1")
    n, rho, lam = p.n, float(p.rho), float(p.lam)
    d_cap = math.log2(1 / rho) - 1
    lam_bound = math.sqrt(float(r) / (math.e * rho * rho * n))
    ok_i = lam <= lam_bound * (1 + 1e-12) and D <= min(d_cap, math.sqrt(math.e / 3 * float(r) * rho * rho * n))
    ok_ii = D <= min(d_cap, n - 1)
    upper_val = 2 * to_exact(p.rho) ** 2 / (1 - to_exact(r)) ** 2
    upper = _finish("submatrix", p, D, "sharp-upper", upper_val, {}, r=r, status=MET if ok_i else VIOLATED,
                    extras={"lambda_boundary": lam_bound, "degree_cap": d_cap})
    if lam == 0 or n <= D:
        log_lower = -math.inf
    else:
        log_lower = (2 * math.log(rho) - math.log(4 * math.e) - 1.5 * math.log(D)
                     + D * (1 + 2 * math.log(lam) + 2 * math.log(rho) + math.log(n - D)))
    lower = BoundReport("submatrix", _param_dict(p), D, "sharp-lower", math.nan, math.nan, to_exact(p.rho),
                        status=MET if ok_ii else VIOLATED, r=r,
                        extras={"cumulant_sum_lower": exp_or_inf(log_lower), "log_cumulant_sum_lower": log_lower})
    return upper, lower


# -- phase sweep ---------------------------------------------------------------------------


def classify(rep: BoundReport, guarantee: float | None) -> str:
    """hard: the lower bound is positive under met conditions; easy: an estimator
    guarantee holds and beats the trivial error; open otherwise."""
    trivial = float(trivial_mmse_from(rep))
    if rep.status == MET and float(rep.mmse_lower) > 0:
        return "hard"
    if guarantee is not None and guarantee < trivial:
        return "easy"
    return "open"


def trivial_mmse_from(rep: BoundReport) -> Number:
    rho = rep.e_x_sq
    return rho - rho * rho


def phase_sweep(grid: Iterable[tuple[float, float]], n: int, Ds: Sequence[int], r=Fraction(1, 2),
                model: str = "submatrix", q0=None) -> list[BoundReport]:
    """One closed-form report per (a, b, D) with lam = n^-a, rho = n^-b.

    For model="subgraph" the effective SNR n^-a is realised by q1 = q0 + lam_eff
    sqrt(q0(1-q1)), solved for q1 at the given q0.
    """
    from .estimators import guarantee_check

    out = []
    for a, b in grid:
        lam, rho = float(n) ** (-a), float(n) ** (-b)
        for D in Ds:
            if model == "submatrix":
                p = SubmatrixParams(n, lam, rho)
                rep = corr_bound_submatrix_closed(p, D, r)
            elif model == "subgraph":
                q0f = float(q0 if q0 is not None else 0.5)
                # (q1 - q0)^2 = lam^2 q0 (1 - q1)  ->  q1 = q0 + x with x^2 + lam^2 q0 x - lam^2 q0 (1-q0) = 0
                c = lam * lam * q0f
                x = (-c + math.sqrt(c * c + 4 * c * (1 - q0f))) / 2
                p = SubgraphParams(n, rho, q0f, q0f + x)
                rep = corr_bound_subgraph_closed(p, D, r)
            else:
                raise ValueError(f"unknown model {model!r}")
            rep.extras["a"], rep.extras["b"] = a, b
            g = None
            if D % 2 == 1 and rho <= 0.5:
                chk = guarantee_check(p, D, float(r))
                if chk.status == MET:
                    g = chk.guarantee
            rep.extras["guarantee"] = g
            rep.regime = classify(rep, g)
            out.append(rep)
    return out


def write_reports_csv(reports: Iterable[BoundReport], out: TextIO) -> None:
    w = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
    w.writeheader()
    for rep in reports:
        w.writerow(rep.row())


def read_reports_csv(src: TextIO) -> list[dict]:
    return list(csv.DictReader(src))
