"""Multigraphs with self-loops as index sets of the cumulant sums.

A multigraph is stored as a sorted tuple of vertex pairs (i, j) with i <= j,
repeated according to multiplicity. Vertex 1 is the root (the coordinate x = v_1
being estimated). Isomorphism classes are taken relative to the root: relabelings
must fix vertex 1.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, TextIO

Edge = tuple[int, int]

ROOT = 1
SUB_CAP = 12
CLASS_CAP = 8


def _norm(e) -> Edge:
    i, j = int(e[0]), int(e[1])
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class Multigraph:
    edges: tuple[Edge, ...] = ()

    @classmethod
    def of(cls, *edges) -> "Multigraph":
        return cls(tuple(sorted(_norm(e) for e in edges)))

    @classmethod
    def from_counts(cls, counts: dict) -> "Multigraph":
        out = []
        for e, m in counts.items():
            out.extend([_norm(e)] * int(m))
        return cls(tuple(sorted(out)))

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(x for e in self.edges for x in e)

    @property
    def multiplicities(self) -> dict[Edge, int]:
        return dict(Counter(self.edges))

    @property
    def contains_root(self) -> bool:
        return ROOT in self.vertices

    @property
    def is_simple(self) -> bool:
        return all(i != j for i, j in self.edges) and len(set(self.edges)) == len(self.edges)

    def degree(self, v: int) -> int:
        return sum((i == v) + (j == v) for i, j in self.edges)

    def leq(self, other: "Multigraph") -> bool:
        mine, theirs = Counter(self.edges), Counter(other.edges)
        return all(theirs[e] >= m for e, m in mine.items())

    def minus(self, other: "Multigraph") -> "Multigraph":
        if not other.leq(self):
            raise ValueError("subtrahend is not a sub-multigraph")
        c = Counter(self.edges)
        c.subtract(other.edges)
        return Multigraph.from_counts({e: m for e, m in c.items() if m > 0})

    def union(self, other: "Multigraph") -> "Multigraph":
        """Entrywise max (the support union for simple graphs)."""
        c = Counter(self.edges)
        for e, m in Counter(other.edges).items():
            c[e] = max(c[e], m)
        return Multigraph.from_counts(c)

    def relabel(self, mapping: dict[int, int]) -> "Multigraph":
        return Multigraph.of(*((mapping[i], mapping[j]) for i, j in self.edges))

    def __str__(self) -> str:
        return "{" + ",".join(f"{i}-{j}" for i, j in self.edges) + "}"


def alpha_factorial(a: Multigraph) -> int:
    return math.prod(math.factorial(m) for m in Counter(a.edges).values())


def binom_alpha(a: Multigraph, b: Multigraph) -> int:
    ca, cb = Counter(a.edges), Counter(b.edges)
    return math.prod(math.comb(m, cb[e]) for e, m in ca.items())


def sub_multigraphs(a: Multigraph, cap: int = SUB_CAP) -> Iterator[tuple[Multigraph, int]]:
    """All beta <= alpha, each paired with binom(alpha, beta)."""
    if a.size > cap:
        raise ValueError(f"|alpha| = {a.size} exceeds cap {cap}")
    mult = sorted(Counter(a.edges).items())
    for ks in itertools.product(*(range(m + 1) for _, m in mult)):
        beta = []
        coef = 1
        for (e, m), k in zip(mult, ks):
            beta.extend([e] * k)
            coef *= math.comb(m, k)
        yield Multigraph(tuple(beta)), coef


def connected_components(a: Multigraph) -> tuple[list[Multigraph], bool]:
    """Edge sets of the connected components, and whether vertex 1 lies in one."""
    parent: dict[int, int] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in a.vertices:
        parent[v] = v
    for i, j in a.edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, list[Edge]] = {}
    for e in a.edges:
        groups.setdefault(find(e[0]), []).append(e)
    comps = [Multigraph(tuple(sorted(es))) for _, es in sorted(groups.items(), key=lambda kv: min(kv[1]))]
    return comps, a.contains_root


def has_rootless_component(a: Multigraph) -> bool:
    """True if some nonempty component avoids vertex 1 (the vanishing condition)."""
    comps, _ = connected_components(a)
    return any(not c.contains_root for c in comps)


def is_rooted_connected(a: Multigraph) -> bool:
    comps, root = connected_components(a)
    return len(comps) == 1 and root


# -- canonical forms -------------------------------------------------------


def _refine(col: dict[int, int], adj: dict[int, dict[int, int]]) -> dict[int, int]:
    """Equitable refinement of an ordered colouring; old cell order is kept."""
    n_cls = len(set(col.values()))
    while True:
        sig = {v: (col[v], tuple(sorted((col[u], m) for u, m in adj[v].items() if u != v))) for v in col}
        keys = {s: k for k, s in enumerate(sorted(set(sig.values())))}
        new = {v: keys[sig[v]] for v in col}
        if len(keys) == n_cls:
            return new
        col, n_cls = new, len(keys)


@lru_cache(maxsize=1 << 18)
def _canonical(edges: tuple[Edge, ...]) -> tuple[tuple[Edge, ...], int]:
    """Individualization-refinement search; returns (minimal relabeling, |Aut|).

    The number of leaves reaching the minimum equals the number of root-fixing
    automorphisms because refinement commutes with relabeling.
    """
    verts = sorted({x for e in edges for x in e})
    if not verts:
        return (), 1
    adj: dict[int, dict[int, int]] = {v: {} for v in verts}
    for (i, j), m in Counter(edges).items():
        adj[i][j] = m
        if i != j:
            adj[j][i] = m
    init = {v: (0 if v == ROOT else 1, sum(adj[v].values()) + adj[v].get(v, 0), adj[v].get(v, 0)) for v in verts}
    ranks = {s: k for k, s in enumerate(sorted(set(init.values())))}
    start = 1 if ROOT in verts else 2
    best: list = [None, 0]

    def search(col: dict[int, int]):
        col = _refine(col, adj)
        cells: dict[int, list[int]] = {}
        for v, c in col.items():
            cells.setdefault(c, []).append(v)
        target = next((c for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            mapping = {v: start + c for v, c in col.items()}
            cand = tuple(sorted(_norm((mapping[i], mapping[j])) for i, j in edges))
            if best[0] is None or cand < best[0]:
                best[0], best[1] = cand, 1
            elif cand == best[0]:
                best[1] += 1
            return
        for v in cells[target]:
            nxt = {u: 2 * c for u, c in col.items()}
            nxt[v] = 2 * target - 1
            search(nxt)

    search({v: ranks[init[v]] for v in verts})
    return best[0], best[1]


def canonical_form(a: Multigraph) -> Multigraph:
    """Canonical representative under relabelings fixing vertex 1.

    Rooted graphs use labels 1..|V|; graphs without vertex 1 use 2..|V|+1, so the
    representative is itself a valid labeled multigraph of the same kind.
    """
    return Multigraph(_canonical(a.edges)[0])


def automorphism_count(a: Multigraph) -> int:
    return _canonical(a.edges)[1]


def falling(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    return math.perm(n, k)


@dataclass(frozen=True)
class IsoClass:
    canonical: Multigraph
    automorphisms: int

    @property
    def edge_count(self) -> int:
        return self.canonical.size

    @property
    def n_vertices(self) -> int:
        return len(self.canonical.vertices)

    @property
    def contains_root(self) -> bool:
        return self.canonical.contains_root

    @property
    def excess(self) -> int:
        """h = |alpha| + 1 - |V(alpha)|."""
        return self.edge_count + 1 - self.n_vertices

    def embed_count(self, n: int) -> int:
        """Number of labeled multigraphs on [n] in this class."""
        free = self.n_vertices - 1 if self.contains_root else self.n_vertices
        total = falling(n - 1, free)
        q, r = divmod(total, self.automorphisms)
        assert r == 0
        return q

    def embed_polynomial(self) -> str:
        free = self.n_vertices - 1 if self.contains_root else self.n_vertices
        factors = "*".join(f"(n-{k})" for k in range(1, free + 1)) or "1"
        return factors if self.automorphisms == 1 else f"{factors}/{self.automorphisms}"


def iso_class(a: Multigraph) -> IsoClass:
    canon, aut = _canonical(a.edges)
    return IsoClass(Multigraph(canon), aut)


def _extensions(edges: tuple[Edge, ...], simple: bool, rooted_connected: bool) -> Iterator[Edge]:
    verts = {x for e in edges for x in e} | {ROOT}
    top = max(verts)
    old = sorted(verts)
    new = [top + 1] if rooted_connected else [top + 1, top + 2]
    present = set(edges)
    for i in old:
        for j in old + new:
            if j < i:
                continue
            if simple and (i == j or (i, j) in present):
                continue
            yield (i, j)
    if not rooted_connected:
        yield (top + 1, top + 2)
        if not simple:
            yield (top + 1, top + 1)


@lru_cache(maxsize=None)
def _classes(d: int, simple: bool, rooted_connected: bool) -> tuple[IsoClass, ...]:
    level: dict[tuple[Edge, ...], int] = {(): 1}
    for _ in range(d):
        nxt: dict[tuple[Edge, ...], int] = {}
        for edges in level:
            for e in _extensions(edges, simple, rooted_connected):
                canon, aut = _canonical(tuple(sorted(edges + (e,))))
                nxt.setdefault(canon, aut)
        level = nxt
    return tuple(IsoClass(Multigraph(c), a) for c, a in sorted(level.items()))


def _mode_flag(mode: str) -> bool:
    if mode not in ("multigraph", "simple"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode == "simple"


def enumerate_classes(d: int, mode: str = "multigraph", rooted_connected: bool = False, cap: int = CLASS_CAP) -> tuple[IsoClass, ...]:
    """Every rooted isomorphism class of (multi)graphs with exactly d edges."""
    if d > cap:
        raise ValueError(f"d = {d} exceeds the class-enumeration cap {cap}")
    return _classes(d, _mode_flag(mode), rooted_connected)


def enumerate_rooted_connected(d: int, mode: str, n: int, cap: int = CLASS_CAP) -> Iterator[tuple[IsoClass, int]]:
    """Connected classes with d edges spanning vertex 1, with their counts on [n]."""
    for cls in enumerate_classes(d, mode, rooted_connected=True, cap=cap):
        yield cls, cls.embed_count(n)


def iter_labeled(n: int, d: int, mode: str = "multigraph") -> Iterator[Multigraph]:
    """Brute force: every labeled (multi)graph on [n] with exactly d edges."""
    simple = _mode_flag(mode)
    if simple:
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        it = itertools.combinations(pairs, d)
    else:
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
        it = itertools.combinations_with_replacement(pairs, d)
    for es in it:
        yield Multigraph(tuple(sorted(es)))


# -- counting bounds ----------------------------------------------------------


def log_count_bound_general(d: int, h: int, n: int) -> float:
    if d < 1 or not 0 <= h <= d or n < 1:
        raise ValueError("need d >= 1, 0 <= h <= d, n >= 1")
    return d * math.log(d * n) + h * math.log(d / n)


def count_bound_general(d: int, h: int, n: int) -> float:
    """Connected multigraphs with d edges, root spanned, d+1-h vertices: (dn)^d (d/n)^h."""
    return math.exp(log_count_bound_general(d, h, n))


def log_count_bound_refined(d: int, u: int, n: int) -> float:
    if d < 1 or not 1 <= u <= d + 1 or n < 1:
        raise ValueError("need d >= 1, 1 <= u <= d+1, n >= 1")
    return math.log(2) + (u - 1) * (1 + math.log(n)) + (d - u + 1) * math.log(3 * d * d)


def count_bound_refined(d: int, u: int, n: int) -> float:
    """Same family indexed by u = |V|: 2 (en)^(u-1) (3d^2)^(d-u+1)."""
    return math.exp(log_count_bound_refined(d, u, n))


def log_count_bound_clique(D: int, t: int, n: int) -> float:
    if D < 1 or t < 2 or n < 1:
        raise ValueError("need D >= 1, t >= 2, n >= 1")
    return (t - 1) * math.log(n) + min(t * t * math.log(2), 2 * D * math.log(t))


def count_bound_clique(D: int, t: int, n: int) -> float:
    """Simple graphs with <= D edges, root spanned, t vertices: n^(t-1) min(2^(t^2), t^(2D))."""
    return math.exp(log_count_bound_clique(D, t, n))


def cayley_tree_count(n: int, D: int) -> int:
    """Trees with D edges on [n] that span vertex 1: binom(n-1, D) (D+1)^(D-1)."""
    if not 1 <= D <= n - 1:
        raise ValueError("need 1 <= D <= n-1")
    return math.comb(n - 1, D) * (D + 1) ** (D - 1)


def write_class_table(classes: Iterable[IsoClass], out: TextIO, n: int | None = None) -> None:
    w = csv.writer(out)
    w.writerow(["canonical", "edges", "vertices", "contains_root", "automorphisms", "embed_count_poly", "embed_count"])
    for c in classes:
        w.writerow([
            str(c.canonical), c.edge_count, c.n_vertices, int(c.contains_root), c.automorphisms,
            c.embed_polynomial(), "" if n is None else c.embed_count(n),
        ])
