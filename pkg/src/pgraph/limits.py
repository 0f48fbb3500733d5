"""Monomial stable paths and their limiting filtered screens.

A path is stored symbolically on a quasi triangulation E'' by giving every
edge a level k and a positive coefficient x, meaning X_t(e) = x t^-k, or no
level at all for the edges of E'' - E, where X_t vanishes identically.  The
limit is computed by the C/Z/B/D recursion, with I(H) taken to be the
maximal quasi recurrent part of J(H).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .coords import complete_to_quasi_triangulation, is_quasi_triangulation
from .errors import InvariantError, PreconditionError, ValidationError
from .fatgraph import Fatgraph, collapse_edges, edge_components, is_simple_cycle, sub_valence
from .screens import (
    FilteredScreen,
    ScreenPoint,
    face_remove_arc,
    face_split_level,
    is_quasi_recurrent,
    maximal_quasi_recurrent,
    validate_filtered,
    validate_point,
)

INF = math.inf


@dataclass(frozen=True)
class SymbolicPath:
    graph: Fatgraph  # the quasi triangulation E''
    levels: tuple[int | None, ...]
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(None if x is None else int(x) for x in self.levels))
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))

    @property
    def support(self) -> frozenset[int]:
        """The designated q.c.d. E."""
        return frozenset(e for e, k in enumerate(self.levels) if k is not None)

    @property
    def zeros(self) -> frozenset[int]:
        return frozenset(e for e, k in enumerate(self.levels) if k is None)

    def depth(self, e: int) -> float:
        k = self.levels[e]
        return INF if k is None else k

    def X(self, t: Fraction) -> tuple[Fraction, ...]:
        t = Fraction(t)
        return tuple(
            Fraction(0) if k is None else c / t**k for k, c in zip(self.levels, self.coeffs)
        )

    def to_dict(self) -> dict:
        edges = {}
        for e, (k, c) in enumerate(zip(self.levels, self.coeffs)):
            edges[str(e)] = {"level": k, "coeff": [c.numerator, c.denominator]}
        return {"graph": self.graph.to_dict(), "edges": edges}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SymbolicPath":
        g = Fatgraph.from_dict(data["graph"])
        levels, coeffs = [], []
        for e in range(g.n_edges):
            item = data["edges"][str(e)]
            levels.append(item["level"])
            n, d = item.get("coeff", [0, 1])
            coeffs.append(Fraction(int(n), int(d)))
        return cls(g, tuple(levels), tuple(coeffs))


def validate_path(p: SymbolicPath) -> None:
    g = p.graph
    if not is_quasi_triangulation(g):
        raise ValidationError("ambient graph must be a quasi triangulation")
    if len(p.levels) != g.n_edges or len(p.coeffs) != g.n_edges:
        raise ValidationError("one level and coefficient per edge")
    for k, c in zip(p.levels, p.coeffs):
        if k is not None and (k < 0 or c <= 0):
            raise ValidationError("levels are natural numbers and coefficients positive")
    if 0 not in p.levels:
        raise ValidationError("some edge must have level 0")
    if maximal_quasi_recurrent(g, p.zeros):
        raise ValidationError("vanishing edges contain a quasi efficient cycle")


# -- comparability --------------------------------------------------------


def comparability_filtration(p: SymbolicPath) -> tuple[frozenset[int], ...]:
    validate_path(p)
    values = sorted({p.depth(e) for e in range(p.graph.n_edges)})
    return tuple(frozenset(e for e in range(p.graph.n_edges) if p.depth(e) >= v) for v in values)


def filtered_ij(H: Iterable[int], p: SymbolicPath, base_level: float) -> tuple[frozenset[int], frozenset[int]]:
    H = frozenset(H)
    if is_simple_cycle(p.graph, H):
        raise PreconditionError("the IJ lemma does not apply to a simple cycle")
    J = frozenset(e for e in H if p.depth(e) > base_level)
    return maximal_quasi_recurrent(p.graph, J), J


# -- the recursion ----------------------------------------------------------


@dataclass
class RecursionTrace:
    C: list[frozenset[int]] = field(default_factory=list)
    Z: list[frozenset[int]] = field(default_factory=list)
    B: list[frozenset[int]] = field(default_factory=list)
    D: list[frozenset[int]] = field(default_factory=list)
    I: list[frozenset[int]] = field(default_factory=list)

    def screen_A(self, n_edges: int) -> tuple[frozenset[int], ...]:
        """The screen {E, I(D_0), ..., I(D_n)} without empty members."""
        return (frozenset(range(n_edges)),) + tuple(x for x in self.I if x)


def _check_forest(g: Fatgraph, removed: frozenset[int], nxt: frozenset[int]) -> None:
    parent = list(range(len(g.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in removed:
        u, w = (find(v) for v in g.endpoints(e))
        if u == w:
            raise InvariantError("removed arcs do not form a forest")
        parent[u] = w
    touched = sub_valence(g, removed)
    deep = sub_valence(g, nxt)
    hits: dict[int, int] = {}
    for v in touched:
        if v in deep:
            r = find(v)
            hits[r] = hits.get(r, 0) + 1
            if hits[r] > 1:
                raise InvariantError("a removed tree meets the next stage in two points")


def _recursion(p: SymbolicPath) -> RecursionTrace:
    g = p.graph
    tr = RecursionTrace()
    D = frozenset(range(g.n_edges))
    tr.D.append(D)
    removed: frozenset[int] = frozenset()
    while D:
        base = min(p.depth(e) for e in D)
        if base == INF:
            raise InvariantError("a stage consists of vanishing edges only")
        I, J = filtered_ij(D, p, base)
        C = set(J - I)
        Z: set[int] = set()
        nxt: set[int] = set()
        for K in edge_components(g, I):
            if is_simple_cycle(g, K):
                low = min(p.depth(e) for e in K)
                fast = {e for e in K if p.depth(e) > low}
                C |= fast
                Z |= K - fast
            else:
                nxt |= K
        B = D - J
        C, Z, nxt = frozenset(C), frozenset(Z), frozenset(nxt)
        if len(C) + len(Z) + len(B) + len(nxt) != len(D) or (C | Z | B | nxt) != D:
            raise InvariantError("stage output does not partition its input")
        removed |= C
        _check_forest(g, removed, nxt)
        tr.I.append(I)
        tr.C.append(C)
        tr.Z.append(Z)
        tr.B.append(B)
        tr.D.append(nxt)
        D = nxt
    return tr


def limiting_point(p: SymbolicPath) -> tuple[FilteredScreen, ScreenPoint, RecursionTrace]:
    validate_path(p)
    tr = _recursion(p)
    removed = frozenset().union(*tr.C) if tr.C else frozenset()
    kept = frozenset().union(*tr.Z, *tr.B)
    if removed | kept != frozenset(range(p.graph.n_edges)) or removed & kept:
        raise InvariantError("C, Z and B do not cover the quasi triangulation")
    if kept & p.zeros:
        raise InvariantError("a vanishing edge survived")
    h, emap = collapse_edges(p.graph, removed)
    values = sorted({p.levels[e] for e in kept})
    levels = tuple(frozenset(emap[e] for e in kept if p.levels[e] == v) for v in values)
    fs = FilteredScreen(h, levels)
    validate_filtered(fs)
    raw = [Fraction(0)] * h.n_edges
    for e in kept:
        raw[emap[e]] = p.coeffs[e]
    pt = ScreenPoint.normalized(fs, raw)
    return fs, pt, tr


# -- the inverse construction --------------------------------------------------


def construct_path(
    g: Fatgraph,
    sub: Iterable[int],
    point: ScreenPoint,
    rng: random.Random | None = None,
) -> SymbolicPath:
    """Monomial path in C(E) whose limit is ``point``.

    ``g`` is G(E) and ``sub`` the arcs E' of E that survive; ``point`` lives
    on a filtered screen over G(E'), which must equal G(E) with the arcs of
    E - E' collapsed (edges keep their relative order).
    """
    validate_point(point)
    sub = frozenset(sub)
    extra = frozenset(range(g.n_edges)) - sub
    small, emap = collapse_edges(g, extra)
    if small != point.screen.graph:
        raise PreconditionError("the screen is not based on G(E) with E - E' collapsed")
    full = complete_to_quasi_triangulation(g, rng)
    n = point.screen.total_level
    lv = point.screen.level_of()
    levels: list[int | None] = []
    coeffs: list[Fraction] = []
    for e in range(full.n_edges):
        if e >= g.n_edges:
            levels.append(None)
            coeffs.append(Fraction(0))
        elif e in extra:
            levels.append(n + 1)
            coeffs.append(Fraction(1))
        else:
            levels.append(lv[emap[e]])
            coeffs.append(point.weights[emap[e]])
    return SymbolicPath(full, tuple(levels), tuple(coeffs))


def path_from_filtration(
    g: Fatgraph,
    filtration: Sequence[Iterable[int]],
    coeffs: Sequence[Fraction] | None = None,
    rng: random.Random | None = None,
) -> SymbolicPath:
    """A path on a completion of G(E) with the given nested filtration of E."""
    sets = [frozenset(x) for x in filtration]
    full = complete_to_quasi_triangulation(g, rng)
    levels: list[int | None] = []
    cs: list[Fraction] = []
    for e in range(full.n_edges):
        if e >= g.n_edges:
            levels.append(None)
            cs.append(Fraction(0))
            continue
        k = max(i for i, S in enumerate(sets) if e in S)
        levels.append(k)
        cs.append(Fraction(1) if coeffs is None else Fraction(coeffs[e]))
    return SymbolicPath(full, tuple(levels), tuple(cs))


# -- refinement ------------------------------------------------------------------


def refine_level(fs: FilteredScreen, k: int, A: Iterable[int]) -> FilteredScreen:
    """Limiting screen when the arcs of ``A`` in level k vanish one step faster.

    A single arc with a non-puncture endpoint off the deeper levels is
    removed; otherwise A is split off as a new level right below L^k.
    """
    validate_filtered(fs)
    A = frozenset(A)
    if not 0 <= k <= fs.total_level or not A or not A <= fs.levels[k]:
        raise PreconditionError("A must be a nonempty subset of level k")
    g = fs.graph
    if len(A) == 1:
        (e,) = A
        u, w = g.endpoints(e)
        deeper = sub_valence(g, fs.geq(k + 1))
        if u != w and not (g.is_punctured_vertex(u) and g.is_punctured_vertex(w)):
            if any(not g.is_punctured_vertex(v) and v not in deeper for v in (u, w)):
                return face_remove_arc(fs, e)
    if A == fs.levels[k]:
        raise PreconditionError("A must be a proper subset of level k")
    if not is_quasi_recurrent(g, A | fs.geq(k + 1)):
        raise PreconditionError("A together with the deeper levels is not quasi recurrent")
    return face_split_level(fs, k, A)


def refinement_filtration(fs: FilteredScreen, k: int, A: Iterable[int]) -> list[frozenset[int]]:
    A = frozenset(A)
    out = [fs.geq(j) for j in range(k + 1)]
    out.append(fs.geq(k + 1) | A)
    out.extend(fs.geq(j) for j in range(k + 1, fs.total_level + 1))
    return out


def refine_level_via_path(fs: FilteredScreen, k: int, A: Iterable[int], rng=None) -> FilteredScreen:
    """Same as :func:`refine_level` but computed by the limit recursion."""
    p = path_from_filtration(fs.graph, refinement_filtration(fs, k, A), rng=rng)
    return limiting_point(p)[0]


# -- numeric oracle ------------------------------------------------------------


@dataclass(frozen=True)
class SlopeEstimate:
    levels: tuple[int | None, ...]
    conclusive: bool


def numeric_slope_oracle(p: SymbolicPath, ts: Sequence[Fraction]) -> SlopeEstimate:
    """Estimate levels from exact samples of the projectivized path.

    Each edge's level is read off as the log-log slope of X_t(e)/max X_t
    between the last two sample times.
    """
    if len(ts) < 3 or any(b <= a for a, b in zip(ts, ts[1:])):
        raise PreconditionError("need at least three increasing sample times")
    samples = []
    for t in ts:
        X = p.X(Fraction(t))
        top = max(X)
        samples.append([x / top for x in X])
    t1, t2 = math.log(Fraction(ts[-2])), math.log(Fraction(ts[-1]))
    out: list[int | None] = []
    ok = True
    base = min(k for k in p.levels if k is not None)
    for e in range(p.graph.n_edges):
        a, b = samples[-2][e], samples[-1][e]
        if a == 0 and b == 0:
            out.append(None)
            continue
        slope = -(math.log(b) - math.log(a)) / (t2 - t1)
        r = round(slope)
        if abs(slope - r) > 0.1:
            ok = False
        out.append(r + base)
    return SlopeEstimate(tuple(out), ok)


# -- random instances ----------------------------------------------------------


def random_filtered_screen(g: Fatgraph, rng: random.Random, max_levels: int = 3, tries: int = 50) -> FilteredScreen:
    """Sample a filtered screen on G(E) by nesting random quasi recurrent sets."""
    E = frozenset(range(g.n_edges))
    for _ in range(tries):
        chain = [E]
        for _ in range(max_levels - 1):
            cur = chain[-1]
            pick = frozenset(e for e in cur if rng.random() < 0.5)
            nxt = maximal_quasi_recurrent(g, pick)
            if not nxt or nxt == cur:
                break
            chain.append(nxt)
        levels = tuple(chain[i] - (chain[i + 1] if i + 1 < len(chain) else frozenset()) for i in range(len(chain)))
        fs = FilteredScreen(g, levels)
        validate_filtered(fs)
        return fs
    raise InvariantError("unreachable")


def random_point(fs: FilteredScreen, rng: random.Random) -> ScreenPoint:
    raw = [Fraction(rng.randint(1, 9)) for _ in range(fs.graph.n_edges)]
    return ScreenPoint.normalized(fs, raw)
