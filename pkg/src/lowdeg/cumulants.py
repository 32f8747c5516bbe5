"""Cumulant coefficients kappa_alpha, the planted-clique coefficients w_alpha,
and a brute-force joint-cumulant oracle over set partitions.

Values are exact Fractions when the parameters are rational and floats
otherwise. All recursions are memoized on the rooted isomorphism class of alpha,
which is enough because the prior on v is exchangeable in v_2..v_n.

kappa_alpha is homogeneous of degree |alpha| in the signal strength, so the
Gaussian tables are built at unit strength and rescaled.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Sequence, TextIO

from sympy.utilities.iterables import multiset_partitions

from ._numeric import Number, exact_sum, pow_sqrt, to_exact
from .models import CliqueParams, SubgraphParams, SubmatrixParams, lambda_eff_sq
from .multigraph import (
    ROOT,
    Multigraph,
    alpha_factorial,
    canonical_form,
    has_rootless_component,
    sub_multigraphs,
)

KAPPA_CAP = 12
MAX_PARTITION_VARS = 9


class CumulantTable:
    """Memo from canonical class to value. Freeze before sharing across workers."""

    def __init__(self, tag: str, key: tuple):
        self.tag = tag
        self.key = key
        self._memo: dict[Multigraph, Number] = {}
        self.frozen = False

    def __contains__(self, cls: Multigraph) -> bool:
        return cls in self._memo

    def __getitem__(self, cls: Multigraph) -> Number:
        return self._memo[cls]

    def __setitem__(self, cls: Multigraph, value: Number):
        if self.frozen:
            raise RuntimeError("table is frozen")
        self._memo[cls] = value

    def __len__(self) -> int:
        return len(self._memo)

    def freeze(self) -> "CumulantTable":
        self.frozen = True
        return self

    def items(self):
        return sorted(self._memo.items(), key=lambda kv: (kv[0].size, kv[0].edges))

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out)
        w.writerow(["class", "edges", "vertices", "value"])
        for cls, val in self.items():
            w.writerow([str(cls), cls.size, len(cls.vertices), str(val)])


_TABLES: dict[tuple, CumulantTable] = {}


def _table(tag: str, key: tuple) -> CumulantTable:
    k = (tag,) + key
    if k not in _TABLES:
        _TABLES[k] = CumulantTable(tag, key)
    return _TABLES[k]


def _vertex_count_with_root(a: Multigraph) -> int:
    return len(a.vertices | {ROOT})


# -- moments -----------------------------------------------------------------


def _subgraph_moment(a: Multigraph, rho, q0, q1, with_root: bool):
    # E prod_e (q0 + (q1 - q0) v_i v_j): expand over which edges take the signal term
    es = a.edges
    terms = []
    for r in range(len(es) + 1):
        for sub in itertools.combinations(es, r):
            verts = {x for e in sub for x in e}
            if with_root:
                verts.add(ROOT)
            terms.append(q0 ** (len(es) - r) * (q1 - q0) ** r * rho ** len(verts))
    return exact_sum(terms)


def _require_simple(a: Multigraph):
    if not a.is_simple:
        raise ValueError("binary models are indexed by simple graphs")


def moment(a: Multigraph, p) -> Number:
    """E[X^alpha] under the model's signal X."""
    if isinstance(p, SubmatrixParams):
        return to_exact(p.lam) ** a.size * to_exact(p.rho) ** len(a.vertices)
    _require_simple(a)
    if isinstance(p, CliqueParams):
        return to_exact(p.rho) ** len(a.vertices)
    if isinstance(p, SubgraphParams):
        return _subgraph_moment(a, to_exact(p.rho), to_exact(p.q0), to_exact(p.q1), False)
    raise TypeError("unknown model parameters")


def cross_moment(a: Multigraph, p) -> Number:
    """E[x X^alpha] with x = v_1."""
    if isinstance(p, SubmatrixParams):
        return to_exact(p.lam) ** a.size * to_exact(p.rho) ** _vertex_count_with_root(a)
    _require_simple(a)
    if isinstance(p, CliqueParams):
        return to_exact(p.rho) ** _vertex_count_with_root(a)
    if isinstance(p, SubgraphParams):
        return _subgraph_moment(a, to_exact(p.rho), to_exact(p.q0), to_exact(p.q1), True)
    raise TypeError("unknown model parameters")


# -- kappa recursion -----------------------------------------------------------


def _recurse(a: Multigraph, table: CumulantTable, mom: Callable, cross: Callable,
             binomial: bool, shortcut: bool) -> Number:
    cls = canonical_form(a)
    if cls in table:
        return table[cls]
    if shortcut and has_rootless_component(a):
        val = 0
    elif a.size == 0:
        val = cross(a)
    else:
        terms = [cross(a)]
        for beta, coef in sub_multigraphs(a, cap=KAPPA_CAP):
            if beta.size == a.size:
                continue
            kb = _recurse(beta, table, mom, cross, binomial, shortcut)
            if kb == 0:
                continue
            terms.append(-kb * (coef if binomial else 1) * mom(a.minus(beta)))
        val = exact_sum(terms)
    table[cls] = val
    return val


def _check_cap(a: Multigraph):
    if a.size > KAPPA_CAP:
        raise ValueError(f"|alpha| = {a.size} exceeds cap {KAPPA_CAP}")


def gaussian_unit_table(rho, shortcut: bool = True) -> CumulantTable:
    return _table("submatrix", (to_exact(rho), shortcut))


def kappa_gaussian(a: Multigraph, p: SubmatrixParams, shortcut: bool = True) -> Number:
    """kappa_alpha = E[x X^a] - sum_{b < a} kappa_b binom(a,b) E[X^(a-b)], X = lam v v^T."""
    _check_cap(a)
    rho = to_exact(p.rho)
    table = gaussian_unit_table(rho, shortcut)
    unit = _recurse(a, table,
                    lambda g: rho ** len(g.vertices),
                    lambda g: rho ** _vertex_count_with_root(g),
                    True, shortcut)
    return to_exact(p.lam) ** a.size * unit


def kappa_binary(a: Multigraph, p: SubgraphParams, scaled: bool = False, shortcut: bool = True) -> Number:
    """Binary-model recursion (no binomial factor; alpha is a simple graph).

    Unscaled: X_ij = q0 + (q1 - q0) v_i v_j.
    Scaled: X_ij = lam_eff v_i v_j with lam_eff = (q1 - q0) / sqrt(q0 (1 - q1)).
    """
    _check_cap(a)
    _require_simple(a)
    rho = to_exact(p.rho)
    if scaled:
        if p.q1 == 1:
            raise ValueError("q1 = 1 makes the scaling singular; use clique_w for the clique model")
        table = _table("subgraph-scaled", (rho, shortcut))
        unit = _recurse(a, table,
                        lambda g: rho ** len(g.vertices),
                        lambda g: rho ** _vertex_count_with_root(g),
                        False, shortcut)
        return pow_sqrt(lambda_eff_sq(p), a.size) * unit
    q0, q1 = to_exact(p.q0), to_exact(p.q1)
    table = _table("subgraph", (rho, q0, q1, shortcut))
    return _recurse(a, table,
                    lambda g: _subgraph_moment(g, rho, q0, q1, False),
                    lambda g: _subgraph_moment(g, rho, q0, q1, True),
                    False, shortcut)


def kappa_squared_scaled(a: Multigraph, p: SubgraphParams) -> Number:
    """kappa^2 / (q0 (1 - q1))^|alpha|, exact for rational parameters."""
    rho = to_exact(p.rho)
    table = _table("subgraph-scaled", (rho, True))
    unit = _recurse(a, table,
                    lambda g: rho ** len(g.vertices),
                    lambda g: rho ** _vertex_count_with_root(g),
                    False, True)
    return lambda_eff_sq(p) ** a.size * unit * unit


# -- planted clique ------------------------------------------------------------


def clique_M_column(a: Multigraph, rho) -> dict[Multigraph, Number]:
    """Distribution of beta = alpha minus the edges lying inside the clique.

    M_{beta,alpha} = Pr{alpha \\ X = beta}; enumerates memberships of V(alpha).
    """
    _require_simple(a)
    rho = to_exact(rho)
    verts = sorted(a.vertices)
    col: dict[Multigraph, list] = {}
    for bits in itertools.product((0, 1), repeat=len(verts)):
        inside = {v for v, b in zip(verts, bits) if b}
        k = len(inside)
        weight = rho**k * (1 - rho) ** (len(verts) - k)
        beta = Multigraph(tuple(e for e in a.edges if not (e[0] in inside and e[1] in inside)))
        col.setdefault(beta, []).append(weight)
    return {b: exact_sum(ws) for b, ws in col.items()}


def clique_M_entry(beta: Multigraph, a: Multigraph, rho) -> Number:
    if not beta.leq(a):
        raise ValueError("beta is not a subgraph of alpha")
    return clique_M_column(a, rho).get(beta, Fraction(0) if isinstance(to_exact(rho), Rational) else 0.0)


def clique_w(a: Multigraph, rho, shortcut: bool = True) -> Number:
    """w_alpha = (c_alpha - sum_{beta < alpha} w_beta M_{beta,alpha}) / M_{alpha,alpha}."""
    _check_cap(a)
    _require_simple(a)
    rho = to_exact(rho)
    table = _table("clique-w", (rho, shortcut))
    return _clique_w(a, rho, table, shortcut)


def _clique_w(a: Multigraph, rho, table: CumulantTable, shortcut: bool) -> Number:
    cls = canonical_form(a)
    if cls in table:
        return table[cls]
    if shortcut and has_rootless_component(a):
        val = 0
    elif a.size == 0:
        val = rho
    else:
        col = clique_M_column(a, rho)
        terms = [rho ** _vertex_count_with_root(a)]
        for beta, prob in col.items():
            if beta.size == a.size:
                continue
            wb = _clique_w(beta, rho, table, shortcut)
            if wb:
                terms.append(-wb * prob)
        val = exact_sum(terms) / col[a]
    table[cls] = val
    return val


# -- magnitude bounds ------------------------------------------------------------


def kappa_magnitude_bound(a: Multigraph, lam, rho) -> Number:
    """(|a|+1)^|a| lam^|a| rho^|V(a)|."""
    d = a.size
    return (d + 1) ** d * to_exact(lam) ** d * to_exact(rho) ** len(a.vertices)


def w_magnitude_bound(a: Multigraph, rho) -> Number:
    """(|a|+1)^|a| (1-rho)^(-2|a|^2) rho^|V(a)|."""
    d = a.size
    rho = to_exact(rho)
    return (d + 1) ** d * (1 - rho) ** (-2 * d * d) * rho ** len(a.vertices)


# -- partition-formula oracle -------------------------------------------------------


@dataclass(frozen=True)
class Var:
    """A polynomial in vertex indicators: sum of coef * prod_{i in S} v_i."""

    terms: tuple = field(default_factory=tuple)

    @classmethod
    def indicator(cls, i: int) -> "Var":
        return cls(((Fraction(1), frozenset([i])),))

    @classmethod
    def monomial(cls, coef, vertices: Iterable[int]) -> "Var":
        return cls(((to_exact(coef), frozenset(vertices)),))

    @classmethod
    def const(cls, c) -> "Var":
        return cls(((to_exact(c), frozenset()),))

    def __add__(self, other) -> "Var":
        if not isinstance(other, Var):
            other = Var.const(other)
        return Var(self.terms + other.terms)

    __radd__ = __add__

    def __mul__(self, c) -> "Var":
        c = to_exact(c)
        return Var(tuple((c * k, s) for k, s in self.terms))

    __rmul__ = __mul__

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset().union(*(s for _, s in self.terms)) if self.terms else frozenset()

    def value(self, assignment: dict[int, int]):
        total = 0
        for c, s in self.terms:
            if all(assignment[i] for i in s):
                total += c
        return total


def _expect_product(variables: Sequence[Var], rho) -> Number:
    verts = sorted(frozenset().union(*(v.vertices for v in variables)))
    terms = []
    for bits in itertools.product((0, 1), repeat=len(verts)):
        k = sum(bits)
        weight = rho**k * (1 - rho) ** (len(verts) - k)
        asg = dict(zip(verts, bits))
        val = math.prod((v.value(asg) for v in variables), start=Fraction(1) if isinstance(weight, Rational) else 1.0)
        if val:
            terms.append(weight * val)
    return exact_sum(terms) if terms else (Fraction(0) if isinstance(rho, Rational) else 0.0)


def joint_cumulant_partition(variables: Sequence[Var], rho) -> Number:
    """kappa(X_1..X_m) = sum_pi (|pi|-1)! (-1)^(|pi|-1) prod_B E[prod_{i in B} X_i],
    with each v_i ~ Bernoulli(rho) independent."""
    m = len(variables)
    if m == 0 or m > MAX_PARTITION_VARS:
        raise ValueError(f"need 1..{MAX_PARTITION_VARS} variables, got {m}")
    rho = to_exact(rho)
    cache: dict[tuple, Number] = {}

    def block_moment(block) -> Number:
        key = tuple(block)
        if key not in cache:
            cache[key] = _expect_product([variables[i] for i in key], rho)
        return cache[key]

    terms = []
    for part in multiset_partitions(list(range(m))):
        b = len(part)
        prod = math.prod((block_moment(blk) for blk in part), start=Fraction(1) if isinstance(rho, Rational) else 1.0)
        terms.append(math.factorial(b - 1) * (-1) ** (b - 1) * prod)
    return exact_sum(terms)


def gaussian_variables(a: Multigraph, lam) -> list[Var]:
    """x = v_1 followed by lam v_i v_j for every edge of alpha (with repetition)."""
    return [Var.indicator(ROOT)] + [Var.monomial(lam, e) for e in a.edges]


def binary_variables(a: Multigraph, p: SubgraphParams) -> list[Var]:
    q0, q1 = to_exact(p.q0), to_exact(p.q1)
    return [Var.indicator(ROOT)] + [Var.monomial(q1 - q0, e) + q0 for e in a.edges]


def cumulant_rows(model, classes, value_fn) -> list[dict]:
    """Rows (class, |alpha|, |V|, value) for CSV export."""
    rows = []
    for cls in classes:
        g = cls.canonical if hasattr(cls, "canonical") else cls
        rows.append({"model": model, "class": str(g), "edges": g.size,
                     "vertices": len(g.vertices), "alpha_factorial": alpha_factorial(g),
                     "value": value_fn(g)})
    return rows
