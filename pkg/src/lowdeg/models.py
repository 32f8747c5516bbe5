"""Parameter records and samplers for the planted submatrix, dense subgraph and
clique ensembles.

Every sampler is a pure function of (params, seed). Besides full instances there
are samplers for the first row of Y and for the row-1 summaries (Y_11 and the
row sum) that the estimators read; these draw from the exact marginal law, which
is what makes Monte Carlo at n ~ 10^6 cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from ._numeric import Number, make_rng, sqrt_number


def _check_prob(name: str, x, lo_open=True, hi_open=True):
    x = float(x)
    lo_ok = x > 0 if lo_open else x >= 0
    hi_ok = x < 1 if hi_open else x <= 1
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name}={x} out of range")


@dataclass(frozen=True)
class SubmatrixParams:
    """Y = lam * v v^T + W, v_i ~ Bernoulli(rho), W symmetric with N(0,1) off the
    diagonal and N(0,2) on it."""

    n: int
    lam: Number
    rho: Number

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        _check_prob("rho", self.rho)

    @property
    def model(self) -> str:
        return "submatrix"


@dataclass(frozen=True)
class SubgraphParams:
    """Edges independent given v with probability q0 + (q1 - q0) v_i v_j."""

    n: int
    rho: Number
    q0: Number
    q1: Number

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        _check_prob("rho", self.rho)
        _check_prob("q0", self.q0)
        _check_prob("q1", self.q1, hi_open=False)
        if self.q0 > self.q1:
            raise ValueError("need q0 <= q1 (pass the complement graph otherwise)")

    @property
    def model(self) -> str:
        return "subgraph"

    @property
    def nu(self) -> Number:
        return min(self.rho, self.q0, 1 - self.q1)


@dataclass(frozen=True)
class CliqueParams:
    """A clique on a Bernoulli(rho) vertex set planted in G(n, 1/2)."""

    n: int
    rho: Number

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        _check_prob("rho", self.rho, hi_open=False)

    @property
    def model(self) -> str:
        return "clique"

    def as_subgraph(self) -> SubgraphParams:
        return SubgraphParams(self.n, self.rho, Fraction(1, 2), Fraction(1))


ModelParams = Union[SubmatrixParams, SubgraphParams, CliqueParams]


@dataclass(frozen=True, eq=False)
class Instance:
    observation: np.ndarray
    v: np.ndarray
    seed: int
    params: ModelParams

    def __post_init__(self):
        self.observation.setflags(write=False)
        self.v.setflags(write=False)


def lambda_eff_sq(p: SubgraphParams) -> Number:
    """Squared effective SNR (q1 - q0)^2 / (q0 (1 - q1))."""
    if p.q1 == 1:
        raise ValueError("q1 = 1 has no effective SNR; use the clique recursion")
    return (p.q1 - p.q0) ** 2 / (p.q0 * (1 - p.q1))


def lambda_eff(p: SubgraphParams) -> Number:
    return sqrt_number(lambda_eff_sq(p))


def trivial_mmse(p: ModelParams) -> Number:
    return p.rho - p.rho * p.rho


def _bernoulli(rng: np.random.Generator, rho, size) -> np.ndarray:
    return (rng.random(size) < float(rho)).astype(np.uint8)


def sample_submatrix(p: SubmatrixParams, seed: int) -> Instance:
    rng = make_rng(seed)
    n = p.n
    v = _bernoulli(rng, p.rho, n)
    g = rng.standard_normal((n, n))
    w = np.triu(g, 1)
    w = w + w.T + np.diag(math.sqrt(2.0) * np.diag(g))
    y = float(p.lam) * np.outer(v, v) + w
    return Instance(y, v, seed, p)


def sample_subgraph(p: SubgraphParams, seed: int) -> Instance:
    rng = make_rng(seed)
    n = p.n
    v = _bernoulli(rng, p.rho, n)
    probs = float(p.q0) + float(p.q1 - p.q0) * np.outer(v, v)
    a = np.triu(rng.random((n, n)) < probs, 1)
    a = (a | a.T).astype(np.uint8)
    return Instance(a, v, seed, p)


def sample_clique(p: CliqueParams, seed: int) -> Instance:
    inst = sample_subgraph(p.as_subgraph(), seed)
    return Instance(inst.observation.copy(), inst.v.copy(), seed, p)


def sample(p: ModelParams, seed: int) -> Instance:
    if isinstance(p, SubmatrixParams):
        return sample_submatrix(p, seed)
    if isinstance(p, SubgraphParams):
        return sample_subgraph(p, seed)
    return sample_clique(p, seed)


def sample_asymmetric(p: SubmatrixParams, seed: int) -> np.ndarray:
    """Y = (lam / sqrt 2) v v^T + Z with Z i.i.d. N(0,1); returns (Y, v)."""
    rng = make_rng(seed)
    v = _bernoulli(rng, p.rho, p.n)
    z = rng.standard_normal((p.n, p.n))
    return float(p.lam) / math.sqrt(2.0) * np.outer(v, v) + z, v


def symmetrize(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise ValueError("symmetrize needs a square matrix")
    return (y + y.T) / math.sqrt(2.0)


def sample_first_rows(p: ModelParams, rng: np.random.Generator, trials: int):
    """Row 1 of Y for `trials` independent instances, plus v_1.

    Row 1 only depends on v and the first row of the noise, so this is the exact
    marginal of what a full sampler would give.
    """
    n = p.n
    v = _bernoulli(rng, p.rho, (trials, n))
    v1 = v[:, 0].astype(float)
    if isinstance(p, SubmatrixParams):
        rows = float(p.lam) * v1[:, None] * v + rng.standard_normal((trials, n))
        rows[:, 0] += (math.sqrt(2.0) - 1.0) * (rows[:, 0] - float(p.lam) * v1)
        return rows, v1
    q = p.as_subgraph() if isinstance(p, CliqueParams) else p
    probs = float(q.q0) + float(q.q1 - q.q0) * v1[:, None] * v
    rows = (rng.random((trials, n)) < probs).astype(float)
    rows[:, 0] = 0.0
    return rows, v1


@dataclass(frozen=True)
class RowSummary:
    """Per-trial v_1, Y_11 and row sum (over all i for the Gaussian model, i >= 2
    for graphs)."""

    v1: np.ndarray
    y11: np.ndarray
    row_sum: np.ndarray


def sample_row_summaries(p: ModelParams, rng: np.random.Generator, trials: int) -> RowSummary:
    """Exact joint law of (v_1, Y_11, sum_i Y_1i) via sufficient statistics."""
    n = p.n
    v1 = _bernoulli(rng, p.rho, trials).astype(float)
    others = rng.binomial(n - 1, float(p.rho), trials)
    if isinstance(p, SubmatrixParams):
        lam = float(p.lam)
        y11 = lam * v1 + math.sqrt(2.0) * rng.standard_normal(trials)
        rest = lam * v1 * others + math.sqrt(n - 1) * rng.standard_normal(trials)
        return RowSummary(v1, y11, y11 + rest)
    q = p.as_subgraph() if isinstance(p, CliqueParams) else p
    q0, q1 = float(q.q0), float(q.q1)
    inside = rng.binomial(others, q1)
    outside = rng.binomial(n - 1 - others, q0)
    null_row = rng.binomial(n - 1, q0, trials)
    s = np.where(v1 > 0, inside + outside, null_row).astype(float)
    return RowSummary(v1, np.zeros(trials), s)
