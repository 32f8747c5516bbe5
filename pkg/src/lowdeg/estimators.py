"""Low-degree estimators: the threshold polynomial tau_k applied to a one-row
statistic, their Monte Carlo MSE, and the parameter conditions under which the
MSE is guaranteed to be at most D^2 r^(D-1).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._numeric import GENERATOR_NAME, make_rng
from .models import (CliqueParams, Instance, ModelParams, RowSummary, SubgraphParams, SubmatrixParams,
                     sample_first_rows, sample_row_summaries)

TAU_CAP = 30
CHUNK = 4096
MET = "conditions-met"
VIOLATED = "conditions-violated"
EVEN = "even-degree"


# -- the threshold polynomial -------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdPoly:
    """tau_k(y) = C int_0^y t^k (1-t)^k dt, C = (2k+1) binom(2k, k); coeffs[i] multiplies y^i."""

    k: int
    coeffs: tuple

    @property
    def degree(self) -> int:
        return 2 * self.k + 1

    def exact(self, y) -> Fraction:
        y = Fraction(y)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * y + c
        return acc

    def _horner(self, y):
        acc = np.zeros_like(y)
        for c in reversed(self.coeffs):
            acc = acc * y + float(c)
        return acc

    def __call__(self, y):
        # tau(y) = 1 - tau(1 - y); expanding around the nearer endpoint avoids
        # cancellation between the large alternating coefficients
        y = np.asarray(y, dtype=float)
        hi = y > 0.5
        return np.where(hi, 1.0 - self._horner(np.where(hi, 1.0 - y, 0.0)), self._horner(np.where(hi, 0.0, y)))


@lru_cache(maxsize=None)
def tau_poly(k: int) -> ThresholdPoly:
    if not 0 <= k <= TAU_CAP:
        raise ValueError(f"k = {k} outside 0..{TAU_CAP}")
    C = (2 * k + 1) * math.comb(2 * k, k)
    coeffs = [Fraction(0)] * (2 * k + 2)
    # t^k (1-t)^k = sum_j binom(k,j) (-1)^j t^(k+j)
    for j in range(k + 1):
        coeffs[k + j + 1] = Fraction(C * math.comb(k, j) * (-1) ** j, k + j + 1)
    return ThresholdPoly(k, tuple(coeffs))


def tau_error_bound(k: int, delta: float) -> float:
    """(k + 1/2)(6 delta)^k, valid for |y - l| <= delta with l in {0, 1}."""
    if not 0 <= delta <= 0.5:
        raise ValueError("delta must lie in [0, 1/2]")
    return (k + 0.5) * (6 * delta) ** k


# -- estimator specs ------------------------------------------------------------------------

KINDS = ("diag", "power", "subgraph-power", "clique-power", "constant")


@dataclass(frozen=True)
class EstimatorSpec:
    """tau_k of a row-1 statistic. `constant` ignores Y and predicts rho."""

    kind: str
    k: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimator {self.kind!r}")
        if self.k < 0:
            raise ValueError("k must be nonnegative")

    @property
    def degree(self) -> int:
        return 0 if self.kind == "constant" else 2 * self.k + 1

    @classmethod
    def for_degree(cls, kind: str, D: int) -> "EstimatorSpec":
        """Rounds even D down to the odd degree 2k+1 <= D."""
        if D < 1 and kind != "constant":
            raise ValueError("D must be at least 1")
        return cls(kind, max(D - 1, 0) // 2)


def _check_model(spec: EstimatorSpec, p: ModelParams):
    need = {"diag": SubmatrixParams, "power": SubmatrixParams, "subgraph-power": SubgraphParams,
            "clique-power": CliqueParams}.get(spec.kind)
    if need is not None and not isinstance(p, need):
        raise ValueError(f"{spec.kind} estimator does not apply to the {p.model} model")
    if spec.kind in ("diag", "power") and p.lam == 0:
        raise ValueError("lambda = 0 makes the statistic undefined")
    if spec.kind == "subgraph-power" and p.q1 == p.q0:
        raise ValueError("q1 = q0 makes the statistic undefined")


def statistic(spec: EstimatorSpec, p: ModelParams, y11, row_sum):
    """Inner statistic from Y_11 and the row sum (over i >= 1 for the Gaussian
    model, i >= 2 for graphs)."""
    n = p.n
    if spec.kind == "diag":
        return y11 / float(p.lam)
    if spec.kind == "power":
        return row_sum / (float(p.lam) * float(p.rho) * n)
    if spec.kind == "subgraph-power":
        return (row_sum / (n - 1) - float(p.q0)) / (float(p.q1 - p.q0) * float(p.rho))
    if spec.kind == "clique-power":
        return (2.0 / float(p.rho)) * (row_sum / (n - 1) - 0.5)
    raise ValueError("constant estimator has no statistic")


def predict(spec: EstimatorSpec, p: ModelParams, y11, row_sum):
    _check_model(spec, p)
    if spec.kind == "constant":
        return np.full(np.shape(row_sum), float(p.rho))
    return tau_poly(spec.k)(statistic(spec, p, y11, row_sum))


def evaluate_estimator(spec: EstimatorSpec, instance: Instance) -> float:
    """Prediction of v_1 from one full instance."""
    p = instance.params
    row = np.asarray(instance.observation[0], dtype=float)
    if isinstance(p, SubmatrixParams):
        s = row.sum()
    else:
        s = row[1:].sum()
    return float(predict(spec, p, row[0], s))


# -- Monte Carlo ----------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    estimate: float
    trials: int
    half_width: float
    seed: int
    std: float
    estimator: str = ""
    params: dict = field(default_factory=dict)
    generator: str = GENERATOR_NAME

    @property
    def upper(self) -> float:
        return self.estimate + self.half_width

    @property
    def lower(self) -> float:
        return self.estimate - self.half_width


def _chunk_sums(args):
    spec, p, seed, idx, m, sampler = args
    rng = make_rng(seed, idx)
    if sampler == "summary":
        s: RowSummary = sample_row_summaries(p, rng, m)
        v1, y11, rs = s.v1, s.y11, s.row_sum
    else:
        rows, v1 = sample_first_rows(p, rng, m)
        y11 = rows[:, 0]
        rs = rows.sum(axis=1)
    err = (predict(spec, p, y11, rs) - v1) ** 2
    return math.fsum(err), math.fsum(err * err)


def monte_carlo_mse(spec: EstimatorSpec, p: ModelParams, trials: int, seed: int, jobs: int = 1,
                    sampler: str = "summary", chunk: int = CHUNK) -> ExperimentResult:
    """Sample mean of (f(Y) - v_1)^2 with a normal-approximation 95% interval.

    Trials are split into fixed-size chunks, each with its own counter-based
    stream, so the result does not depend on `jobs`.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if sampler not in ("summary", "row"):
        raise ValueError(f"unknown sampler {sampler!r}")
    _check_model(spec, p)
    tasks = []
    for idx, start in enumerate(range(0, trials, chunk)):
        tasks.append((spec, p, seed, idx, min(chunk, trials - start), sampler))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_chunk_sums, tasks))
    else:
        parts = [_chunk_sums(t) for t in tasks]
    s1 = math.fsum(a for a, _ in parts)
    s2 = math.fsum(b for _, b in parts)
    mean = s1 / trials
    var = max(s2 / trials - mean * mean, 0.0) * trials / (trials - 1) if trials > 1 else 0.0
    std = math.sqrt(var)
    return ExperimentResult(mean, trials, 1.96 * std / math.sqrt(trials), seed, std,
                            estimator=f"{spec.kind}:k={spec.k}", params=_params(p))


def _params(p: ModelParams) -> dict:
    return {k: getattr(p, k) for k in ("n", "lam", "rho", "q0", "q1") if hasattr(p, k)}


# -- guarantees -----------------------------------------------------------------------------


@dataclass
class GuaranteeStatus:
    theorem: str
    estimator: str
    status: str
    D: int
    r: float
    conditions: dict
    guarantee: float | None

    @property
    def met(self) -> bool:
        return self.status == MET


def guarantee_value(D: int, r: float) -> float:
    return D * D * r ** (D - 1)


def diag_lambda_threshold(rho, D: int, r: float) -> float:
    return 12 / r * math.sqrt(math.log(4) + 2 * D * math.log(9 / float(rho)))


def power_lambda_threshold(n: int, rho, D: int, r: float) -> float:
    rho = float(rho)
    return 24 / (r * rho * math.sqrt(n)) * math.sqrt(math.log(8) + 2 * D * math.log(9 / rho))


def power_rho_threshold(n: int, rho, D: int, r: float) -> float:
    """Right side of rho >= (324/(r^2 n)) [log 8 + 2D log(9/rho)] (depends on rho itself)."""
    return 324 / (r * r * n) * (math.log(8) + 2 * D * math.log(9 / float(rho)))


def _graph_log_term(D: int, nu) -> float:
    return math.log(4) + 3 * D * math.log(9 / float(nu))


def guarantee_check(p: ModelParams, D: int, r: float, estimator: str | None = None) -> GuaranteeStatus:
    """Evaluate the sufficient conditions for MSE <= D^2 r^(D-1).

    For the Gaussian model `estimator` picks diag or power; by default the first
    one whose conditions hold is reported (power is tried first).
    """
    r = float(r)
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if isinstance(p, SubmatrixParams) and estimator is None:
        first = guarantee_check(p, D, r, "power")
        return first if first.met or first.status == EVEN else guarantee_check(p, D, r, "diag")
    rho = float(p.rho)
    if D % 2 == 0:
        kind = estimator or ("subgraph-power" if isinstance(p, SubgraphParams) else "clique-power")
        return GuaranteeStatus("-", kind, EVEN, D, r, {"effective_D": D - 1}, None)
    conds: dict[str, tuple] = {"rho <= 1/2": (rho <= 0.5,)}
    if isinstance(p, SubmatrixParams):
        lam = float(p.lam)
        if estimator == "diag":
            thr = diag_lambda_threshold(rho, D, r)
            conds["lambda >= (12/r) sqrt(log 4 + 2D log(9/rho))"] = (lam >= thr, lam, thr)
            theorem = "diagonal-thresholding"
        elif estimator == "power":
            thr = power_lambda_threshold(p.n, rho, D, r)
            conds["lambda >= (24/(r rho sqrt n)) sqrt(log 8 + 2D log(9/rho))"] = (lam >= thr, lam, thr)
            thr2 = power_rho_threshold(p.n, rho, D, r)
            conds["rho >= (324/(r^2 n)) [log 8 + 2D log(9/rho)]"] = (rho >= thr2, rho, thr2)
            theorem = "power-iteration"
        else:
            raise ValueError(f"{estimator!r} is not a Gaussian-model estimator")
        kind = estimator
    elif isinstance(p, SubgraphParams):
        if p.q1 == 1 and p.q0 == Fraction(1, 2):
            return guarantee_check(CliqueParams(p.n, p.rho), D, r)
        q0, q1, nu = float(p.q0), float(p.q1), float(p.nu)
        L = _graph_log_term(D, nu)
        lhs = (q1 - q0) ** 2 / q0
        thr = 216 / (r * r * rho * rho * (p.n - 1)) * L
        conds["(q1-q0)^2/q0 >= 216/(r^2 rho^2 (n-1)) [log 4 + 3D log(9/nu)]"] = (lhs >= thr, lhs, thr)
        thr2 = 864 / (r * r * (p.n - 1)) * L
        conds["q1 rho >= 864/(r^2 (n-1)) [log 4 + 3D log(9/nu)]"] = (q1 * rho >= thr2, q1 * rho, thr2)
        conds["nu > 0"] = (nu > 0, nu)
        theorem, kind = "subgraph-power-iteration", "subgraph-power"
    else:
        thr = 432 / (r * r * (p.n - 1)) * _graph_log_term(D, rho)
        conds["rho^2 >= 432/(r^2 (n-1)) [log 4 + 3D log(9/rho)]"] = (rho * rho >= thr, rho * rho, thr)
        theorem, kind = "clique-power-iteration", "clique-power"
    ok = all(c[0] for c in conds.values())
    return GuaranteeStatus(theorem, kind, MET if ok else VIOLATED, D, r, conds,
                           guarantee_value(D, r) if ok else None)


@dataclass
class LiftResult:
    status: str
    value: float | None
    required_failure_prob: float


def hypercontractive_mse_lift(eps: float, failure_prob: float, D: int, nu_or_rho: float,
                              model: str = "submatrix") -> LiftResult:
    """If (f - x)^2 <= eps except with probability failure_prob, E(f - x)^2 <= 4 eps,
    provided failure_prob <= (1/2)(nu/9)^(cD), c = 2 (Gaussian) or 3 (graphs)."""
    c = 2 if model == "submatrix" else 3
    need = 0.5 * (float(nu_or_rho) / 9) ** (c * D)
    if failure_prob <= need:
        return LiftResult("ok", 4 * eps, need)
    return LiftResult("refused", None, need)


# -- support recovery -----------------------------------------------------------------------


def support_recovery(v_hat) -> np.ndarray:
    """u_i = 1[v_hat_i >= 2/3]."""
    return (np.asarray(v_hat, dtype=float) >= 2.0 / 3.0).astype(np.uint8)


def hamming_error(u_hat, v) -> int:
    return int(np.count_nonzero(np.asarray(u_hat).astype(int) != np.asarray(v).astype(int)))
