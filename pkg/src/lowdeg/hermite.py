"""Probabilists' Hermite polynomials: coefficients, shifted expansions and
Gaussian expectations.

H_k has integer coefficients. The orthonormal h_k = H_k / sqrt(k!) is stored as
the pair (H_k, k!) so that products of normalizations stay rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np
from numpy.polynomial import hermite_e
from numpy.polynomial import polynomial as npoly

K_CAP = 60
DEFAULT_NODES = 64


@dataclass(frozen=True)
class PolyCoeffs:
    """Polynomial sum_i coeffs[i] z^i, divided by sqrt(norm)."""

    coeffs: tuple
    norm: int = 1

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c) if c else (0,))

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Rational) for c in self.coeffs)

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs]) / math.sqrt(self.norm)

    def __call__(self, z):
        return npoly.polyval(z, self.to_float())

    def horner_exact(self, z: Fraction) -> Fraction:
        """Exact value of the unnormalized coefficient form (times sqrt(norm))."""
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc


@lru_cache(maxsize=None)
def _H(k: int) -> tuple[int, ...]:
    if k == 0:
        return (1,)
    if k == 1:
        return (0, 1)
    a, b = _H(k - 1), _H(k - 2)
    out = [0] * (k + 1)
    for i, c in enumerate(a):
        out[i + 1] += c
    for i, c in enumerate(b):
        out[i] -= (k - 1) * c
    return tuple(out)


def _check_k(k: int):
    if not 0 <= k <= K_CAP:
        raise ValueError(f"k = {k} outside 0..{K_CAP}")


def hermite_H(k: int) -> PolyCoeffs:
    """H_0 = 1, H_1 = z, H_{k+1} = z H_k - k H_{k-1}."""
    _check_k(k)
    return PolyCoeffs(_H(k))


def hermite_h(k: int) -> PolyCoeffs:
    _check_k(k)
    return PolyCoeffs(_H(k), math.factorial(k))


def hermite_eval(k: int, z, normalized: bool = False):
    """Evaluate H_k (or h_k) at z by the three-term recurrence."""
    _check_k(k)
    z = np.asarray(z, dtype=float)
    prev, cur = np.ones_like(z), z.copy()
    if k == 0:
        cur = prev
    for j in range(1, k):
        prev, cur = cur, z * cur - j * prev
    if normalized:
        cur = cur / math.sqrt(math.factorial(k))
    return cur


def shift_coefficients(k: int, mu, exact: bool = False) -> list:
    """Coefficients of h_k(z + mu) in the basis h_0..h_k.

    Float mode returns c_l = sqrt(l!/k!) binom(k,l) mu^(k-l). Exact mode returns
    the rational factors binom(k,l) mu^(k-l), i.e. the expansion of H_k(z + mu) in
    H_0..H_k; the two agree after multiplying by sqrt(l!/k!).
    """
    _check_k(k)
    if exact:
        mu = Fraction(mu)
        return [math.comb(k, l) * mu ** (k - l) for l in range(k + 1)]
    mu = float(mu)
    return [math.sqrt(math.factorial(l) / math.factorial(k)) * math.comb(k, l) * mu ** (k - l) for l in range(k + 1)]


def shifted_gram(D: int, mu, var=1, kind: str = "hermite"):
    """Second moments and means of a degree-<=D univariate basis at y ~ N(mu, var).

    kind="hermite": h_k((y)/sigma) in float, via the shifted expansion.
    kind="hermite-exact": sigma^k H_k(y/sigma), whose moments are rational in mu
        and var (no square roots appear).
    kind="monomial": y^k, exact when mu and var are rational.
    Returns (G, m) with G[k][l] = E[p_k p_l] and m[k] = E[p_k].
    """
    if kind == "hermite":
        sigma = math.sqrt(float(var))
        s = float(mu) / sigma
        C = np.zeros((D + 1, D + 1))
        for k in range(D + 1):
            C[k, : k + 1] = shift_coefficients(k, s)
        G = C @ C.T
        m = np.array([s**k / math.sqrt(math.factorial(k)) for k in range(D + 1)])
        return G, m
    if kind == "hermite-exact":
        mu, var = Fraction(mu), Fraction(var)
        G = [[sum((math.comb(k, l) * math.comb(j, l) * math.factorial(l)) * mu ** (k + j - 2 * l) * var**l
                  for l in range(min(k, j) + 1)) for j in range(D + 1)] for k in range(D + 1)]
        m = [mu**k for k in range(D + 1)]
        return G, m
    if kind == "monomial":
        raw = [gaussian_raw_moment(p, mu, var) for p in range(2 * D + 1)]
        G = [[raw[k + j] for j in range(D + 1)] for k in range(D + 1)]
        return G, raw[: D + 1]
    raise ValueError(f"unknown basis kind {kind!r}")


def gaussian_raw_moment(p: int, mu, var):
    """E[y^p] for y ~ N(mu, var); exact for rational inputs."""
    exact = isinstance(mu, Rational) and isinstance(var, Rational)
    total = Fraction(0) if exact else 0.0
    for j in range(0, p + 1, 2):
        dfact = math.prod(range(j - 1, 0, -2)) if j else 1
        term = math.comb(p, j) * dfact * (Fraction(mu) if exact else float(mu)) ** (p - j) * (Fraction(var) if exact else float(var)) ** (j // 2)
        total += term
    return total


@lru_cache(maxsize=None)
def _nodes(nodes: int):
    x, w = hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def gauss_hermite_inner(f: PolyCoeffs, g: PolyCoeffs, nodes: int = DEFAULT_NODES) -> float:
    """E[f(z) g(z)] for z ~ N(0,1), exact up to rounding when deg f + deg g <= 2 nodes - 1."""
    if f.degree + g.degree > 2 * nodes - 1:
        raise ValueError("not enough quadrature nodes for this degree")
    x, w = _nodes(nodes)
    return float(np.dot(w, f(x) * g(x)))


def gauss_hermite_expect(func, nodes: int = DEFAULT_NODES) -> float:
    """E[func(z)] for z ~ N(0,1) by Gauss-Hermite quadrature."""
    x, w = _nodes(nodes)
    return float(np.dot(w, func(x)))
