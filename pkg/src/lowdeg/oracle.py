"""Exact Corr_{<=D} and MMSE_{<=D} on tiny instances from the moment matrix.

For a basis (p_a) of polynomials of degree <= D, with P_ab = E[p_a p_b] and
c_a = E[p_a x], the best correlation is Corr^2 = c^T P^+ c. Expectations are
taken exactly: sum over v in {0,1}^n, and in closed form over the Gaussian noise
(or over the conditionally independent Bernoulli edges).

Gaussian bases:
  "hermite"        orthonormal h_k of each coordinate standardized to unit
                   variance (the diagonal Y_ii / sqrt 2), float.
  "hermite-exact"  sigma^k H_k(y / sigma); its moments are rational in lam,
                   rho and the noise variance, so P and c are exact.
  "monomial"       raw products of coordinates.
All three span the same polynomial space, so Corr does not depend on the choice.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence, TextIO

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from ._numeric import Number, to_exact
from .hermite import gauss_hermite_expect, hermite_eval, shifted_gram
from .models import CliqueParams, SubgraphParams, SubmatrixParams

PINV_RCOND = 1e-10
PSD_TOL = 1e-10
MAX_GAUSSIAN_N = 6
MAX_BINARY_N = 7
MAX_D = 4
MAX_BASIS = 5000


@dataclass(frozen=True)
class Coordinate:
    """Observed Y_ij = scale * v_i v_j + N(0, var)."""

    i: int
    j: int
    scale: Number
    var: Number = 1


def symmetric_coordinates(p: SubmatrixParams) -> list[Coordinate]:
    """Upper triangle of the symmetric model: unit noise off the diagonal, variance 2 on it."""
    lam = to_exact(p.lam)
    out = []
    for i in range(1, p.n + 1):
        for j in range(i, p.n + 1):
            out.append(Coordinate(i, j, lam, 2 if i == j else 1))
    return out


def asymmetric_coordinates(n: int, scale) -> list[Coordinate]:
    """All n^2 entries of Y = scale v v^T + Z with i.i.d. unit noise."""
    return [Coordinate(i, j, scale, 1) for i in range(1, n + 1) for j in range(1, n + 1)]


@dataclass
class MomentSystem:
    P: object
    c: object
    basis: list
    exact: bool
    rho: Number
    kind: str
    coords: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    model: str = "submatrix"
    q: tuple = ()

    @property
    def size(self) -> int:
        return len(self.basis)

    def P_float(self) -> np.ndarray:
        return np.array(self.P, dtype=float)

    def c_float(self) -> np.ndarray:
        return np.array(self.c, dtype=float)

    @property
    def metadata(self) -> dict:
        return {"basis": self.kind, "basis_size": self.size, "exact": self.exact,
                "solve": "exact elimination" if self.exact else f"least squares, rcond={PINV_RCOND}"}

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out)
        w.writerow(["row", "basis", "c"] + [f"P{k}" for k in range(self.size)])
        for a in range(self.size):
            w.writerow([a, str(self.basis[a]), str(self.c[a])] + [str(x) for x in self.P[a]])


def _prior(n: int, rho):
    for bits in itertools.product((0, 1), repeat=n):
        k = sum(bits)
        yield bits, rho**k * (1 - rho) ** (n - k)


def gaussian_basis(n_coords: int, D: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= D, in graded order."""
    out = []
    for d in range(D + 1):
        for combo in itertools.combinations_with_replacement(range(n_coords), d):
            a = [0] * n_coords
            for k in combo:
                a[k] += 1
            out.append(tuple(a))
    return out


def build_moment_system_gaussian(p: SubmatrixParams, D: int, exact: bool = False, basis: str = "hermite",
                                 coords: Sequence[Coordinate] | None = None) -> MomentSystem:
    if p.n > MAX_GAUSSIAN_N or D > MAX_D:
        raise ValueError(f"oracle size guard: need n <= {MAX_GAUSSIAN_N} and D <= {MAX_D}")
    coords = list(coords) if coords is not None else symmetric_coordinates(p)
    kind = basis
    if basis == "hermite" and exact:
        kind = "hermite-exact"
    if exact and kind == "hermite":
        raise ValueError("the orthonormal float basis cannot be exact")
    A = gaussian_basis(len(coords), D)
    if len(A) > MAX_BASIS:
        raise ValueError(f"oracle size guard: basis size {len(A)} > {MAX_BASIS}")
    rho = to_exact(p.rho) if exact else float(p.rho)
    tables = []
    for co in coords:
        pair = []
        for mu in (0, co.scale):
            G, m = shifted_gram(D, to_exact(mu) if exact else float(mu), to_exact(co.var) if exact else float(co.var), kind)
            pair.append((G, m))
        tables.append(pair)
    if exact:
        P, c = _assemble_exact(A, coords, tables, p.n, rho)
    else:
        P, c = _assemble_float(A, coords, tables, p.n, rho)
    return MomentSystem(P, c, A, exact, rho, kind, coords=coords)


def _assemble_float(A, coords, tables, n, rho):
    Aarr = np.array(A, dtype=np.intp)
    B = len(A)
    P = np.zeros((B, B))
    c = np.zeros(B)
    Gs = [[np.asarray(t[0], dtype=float) for t in pair] for pair in tables]
    ms = [[np.asarray(t[1], dtype=float) for t in pair] for pair in tables]
    for bits, w in _prior(n, rho):
        Pv = np.ones((B, B))
        mv = np.ones(B)
        for k, co in enumerate(coords):
            s = bits[co.i - 1] * bits[co.j - 1]
            idx = Aarr[:, k]
            if not idx.any():
                continue
            Pv *= Gs[k][s][np.ix_(idx, idx)]
            mv *= ms[k][s][idx]
        P += w * Pv
        if bits[0]:
            c += w * mv
    return P, c


def _assemble_exact(A, coords, tables, n, rho):
    B = len(A)
    support = [[(k, e) for k, e in enumerate(a) if e] for a in A]
    P = [[Fraction(0)] * B for _ in range(B)]
    c = [Fraction(0)] * B
    for bits, w in _prior(n, rho):
        s = [bits[co.i - 1] * bits[co.j - 1] for co in coords]
        mv = []
        for a in range(B):
            val = Fraction(1)
            for k, e in support[a]:
                val *= tables[k][s[k]][1][e]
            mv.append(val)
        if bits[0]:
            for a in range(B):
                c[a] += w * mv[a]
        for a in range(B):
            ka = dict(support[a])
            for b in range(a, B):
                kb = dict(support[b])
                val = Fraction(1)
                for k in set(ka) | set(kb):
                    val *= tables[k][s[k]][0][ka.get(k, 0)][kb.get(k, 0)]
                    if not val:
                        break
                if val:
                    P[a][b] += w * val
    for a in range(B):
        for b in range(a):
            P[a][b] = P[b][a]
    return P, c


# -- binary models ------------------------------------------------------------------


def _binary_q(p):
    if isinstance(p, CliqueParams):
        return Fraction(1, 2), Fraction(1), "clique"
    if isinstance(p, SubgraphParams):
        return to_exact(p.q0), to_exact(p.q1), "subgraph"
    raise TypeError("binary oracle needs SubgraphParams or CliqueParams")


def binary_basis(n_edges: int, D: int) -> list[int]:
    """Edge subsets of size <= D as bitmasks, graded."""
    out = []
    for d in range(D + 1):
        for combo in itertools.combinations(range(n_edges), d):
            out.append(sum(1 << k for k in combo))
    return out


def build_moment_system_binary(p, D: int, exact: bool = True) -> MomentSystem:
    if p.n > MAX_BINARY_N or D > MAX_D:
        raise ValueError(f"oracle size guard: need n <= {MAX_BINARY_N} and D <= {MAX_D}")
    q0, q1, model = _binary_q(p)
    rho = to_exact(p.rho)
    if not exact:
        q0, q1, rho = float(q0), float(q1), float(rho)
    edges = list(itertools.combinations(range(1, p.n + 1), 2))
    basis = binary_basis(len(edges), D)
    if len(basis) > MAX_BASIS:
        raise ValueError(f"oracle size guard: basis size {len(basis)} > {MAX_BASIS}")
    states = []
    for bits, w in _prior(p.n, rho):
        X = [q0 + (q1 - q0) * bits[i - 1] * bits[j - 1] for i, j in edges]
        states.append((w, bits[0], X))
    cache: dict[int, tuple] = {}

    def moments(mask: int):
        if mask not in cache:
            ks = [k for k in range(len(edges)) if mask >> k & 1]
            tot = Fraction(0) if exact else 0.0
            cross = Fraction(0) if exact else 0.0
            for w, x, X in states:
                val = w
                for k in ks:
                    val *= X[k]
                tot += val
                if x:
                    cross += val
            cache[mask] = (tot, cross)
        return cache[mask]

    B = len(basis)
    P = [[None] * B for _ in range(B)]
    for a in range(B):
        for b in range(a, B):
            P[a][b] = P[b][a] = moments(basis[a] | basis[b])[0]
    c = [moments(m)[1] for m in basis]
    if not exact:
        P = np.array(P, dtype=float)
        c = np.array(c, dtype=float)
    return MomentSystem(P, c, basis, exact, rho, "multilinear", edges=edges, model=model, q=(q0, q1))


# -- solving ---------------------------------------------------------------------------


def _solve_exact(P, c) -> list[Fraction]:
    """A solution of P f = c over the rationals.

    LU over QQ (sympy DomainMatrix) when P is invertible, Gauss-Jordan otherwise.
    """
    B = len(c)
    A = DomainMatrix([[QQ(x.numerator, x.denominator) for x in map(Fraction, row)] for row in P], (B, B), QQ)
    b = DomainMatrix([[QQ(x.numerator, x.denominator)] for x in map(Fraction, c)], (B, 1), QQ)
    try:
        sol = A.lu_solve(b)
    except (DMNonInvertibleMatrixError, ZeroDivisionError):
        return _gauss_jordan(P, c)
    return [Fraction(int(v.numerator), int(v.denominator)) for v in sol.to_list_flat()]


def _gauss_jordan(P, c) -> list[Fraction]:
    """A solution of P f = c by Gauss-Jordan elimination over the rationals.

    c lies in the column space of the Gram matrix P, so the system is consistent;
    free variables are set to zero and c^T f does not depend on that choice.
    """
    B = len(c)
    M = [list(row) + [c[i]] for i, row in enumerate(P)]
    pivots = []
    r = 0
    for col in range(B):
        piv = next((i for i in range(r, B) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][col]
        M[r] = [x * inv for x in M[r]]
        for i in range(B):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [x - f * y for x, y in zip(M[i], M[r])]
        pivots.append(col)
        r += 1
        if r == B:
            break
    for i in range(r, B):
        if M[i][B] != 0:
            raise ArithmeticError("inconsistent moment system")
    f = [Fraction(0)] * B
    for i, col in enumerate(pivots):
        f[col] = M[i][B]
    return f


def _check_psd(P: np.ndarray):
    ev = np.linalg.eigvalsh(P)
    scale = max(1.0, float(ev[-1]))
    if ev[0] < -PSD_TOL * scale * 100:
        raise ArithmeticError(f"moment matrix numerically indefinite (min eigenvalue {ev[0]:.3e})")
    return ev


def best_polynomial(system: MomentSystem):
    """Coefficients P^+ c of the best degree-<=D predictor in the system's basis."""
    if system.exact:
        return _solve_exact(system.P, system.c)
    P, c = system.P_float(), system.c_float()
    _check_psd(P)
    f, *_ = np.linalg.lstsq(P, c, rcond=PINV_RCOND)
    return f


def corr_sq_exact(system: MomentSystem) -> Number:
    f = best_polynomial(system)
    if system.exact:
        return sum((a * b for a, b in zip(system.c, f)), Fraction(0))
    return float(np.dot(system.c_float(), f))


def corr_exact(system: MomentSystem) -> float:
    return math.sqrt(max(float(corr_sq_exact(system)), 0.0))


def mmse_exact(system: MomentSystem, e_x_sq: Number | None = None) -> Number:
    """E[x^2] - Corr^2, with E[x^2] = rho for x = v_1 unless given."""
    ex2 = system.rho if e_x_sq is None else e_x_sq
    return ex2 - corr_sq_exact(system)


# -- direct evaluation of a predictor's error --------------------------------------


def _quadrature_gram(D: int, mu: float, var: float, kind: str):
    sigma = math.sqrt(var)

    def basis_vals(z):
        y = mu + sigma * z
        if kind == "hermite":
            return [hermite_eval(k, y / sigma, normalized=True) for k in range(D + 1)]
        if kind == "hermite-exact":
            return [sigma**k * hermite_eval(k, y / sigma) for k in range(D + 1)]
        return [y**k for k in range(D + 1)]

    G = np.array([[gauss_hermite_expect(lambda z, a=a, b=b: basis_vals(z)[a] * basis_vals(z)[b]) for b in range(D + 1)]
                  for a in range(D + 1)])
    m = np.array([gauss_hermite_expect(lambda z, a=a: basis_vals(z)[a]) for a in range(D + 1)])
    return G, m


def achieved_mse(system: MomentSystem, coeffs) -> Number:
    """E(f(Y) - v_1)^2 evaluated directly, without reusing P or c.

    Gaussian systems: conditional on v, coordinates are independent Gaussians and
    the univariate moments come from Gauss-Hermite quadrature of the basis
    polynomials themselves. Binary systems: exact sum over all graphs Y and all v.
    """
    if system.kind == "multilinear":
        return _achieved_binary(system, coeffs)
    f = np.asarray([float(x) for x in coeffs])
    A = np.array(system.basis, dtype=np.intp)
    D = int(A.sum(axis=1).max())
    rho = float(system.rho)
    n = max(max(co.i, co.j) for co in system.coords)
    tabs = [[_quadrature_gram(D, float(mu), float(co.var), system.kind) for mu in (0, co.scale)] for co in system.coords]
    total = 0.0
    for bits, w in _prior(n, rho):
        B = len(f)
        Pv = np.ones((B, B))
        mv = np.ones(B)
        for k, co in enumerate(system.coords):
            s = bits[co.i - 1] * bits[co.j - 1]
            idx = A[:, k]
            Pv *= tabs[k][s][0][np.ix_(idx, idx)]
            mv *= tabs[k][s][1][idx]
        x = bits[0]
        total += w * (f @ Pv @ f - 2 * x * (f @ mv) + x)
    return total


def _achieved_binary(system: MomentSystem, coeffs):
    edges = system.edges
    q0, q1 = system.q
    rho = system.rho
    n = max(j for _, j in edges) if edges else 1
    exact = system.exact and all(isinstance(x, Rational) for x in coeffs)
    if exact:
        terms = Fraction(0)
        for ys in itertools.product((0, 1), repeat=len(edges)):
            ymask = sum(1 << k for k, y in enumerate(ys) if y)
            fval = sum((cf for cf, m in zip(coeffs, system.basis) if m & ymask == m), Fraction(0))
            for bits, w in _prior(n, rho):
                pr = w
                for k, (i, j) in enumerate(edges):
                    xe = q0 + (q1 - q0) * bits[i - 1] * bits[j - 1]
                    pr *= xe if ys[k] else 1 - xe
                    if not pr:
                        break
                if pr:
                    terms += pr * (fval - bits[0]) ** 2
        return terms
    E = len(edges)
    ys = np.array(list(itertools.product((0, 1), repeat=E)), dtype=np.int64)
    ymask = (ys << np.arange(E)).sum(axis=1)
    masks = np.array(system.basis, dtype=np.int64)
    fvals = ((ymask[:, None] & masks[None, :]) == masks[None, :]).astype(float) @ np.asarray(coeffs, dtype=float)
    total = 0.0
    for bits, w in _prior(n, float(rho)):
        xe = np.array([float(q0) + float(q1 - q0) * bits[i - 1] * bits[j - 1] for i, j in edges])
        pr = np.prod(np.where(ys == 1, xe, 1 - xe), axis=1) * float(w)
        total += float(np.dot(pr, (fvals - bits[0]) ** 2))
    return total
