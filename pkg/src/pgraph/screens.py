"""Quasi recurrence, screens, filtered screens and their boundary curves."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PreconditionError, ValidationError
from .fatgraph import (
    Fatgraph,
    _normalize_cycle,
    collapse_edge,
    edge_components,
    half_edges_of,
    is_simple_cycle,
    sub_faces,
    sub_valence,
)

EdgeSet = frozenset


def is_quasi_recurrent(g: Fatgraph, edges: Iterable[int]) -> bool:
    """Every univalent vertex of G(A) is punctured."""
    for v, k in sub_valence(g, edges).items():
        if k == 1 and not g.is_punctured_vertex(v):
            return False
    return True


def maximal_quasi_recurrent(g: Fatgraph, edges: Iterable[int]) -> frozenset[int]:
    """Prune edges at unpunctured univalent vertices until nothing changes."""
    alive = set(edges)
    val = sub_valence(g, alive)
    stack = [v for v, k in val.items() if k == 1 and not g.is_punctured_vertex(v)]
    while stack:
        v = stack.pop()
        if val.get(v) != 1:
            continue
        e = next(h >> 1 for h in g.vertices[v] if (h >> 1) in alive)
        alive.discard(e)
        for h in (2 * e, 2 * e + 1):
            w = g.vertex_of[h]
            val[w] -= 1
            if val[w] == 1 and not g.is_punctured_vertex(w):
                stack.append(w)
    return frozenset(alive)


# -- faces of subgraphs --------------------------------------------------


def face_sets(g: Fatgraph, edges: Iterable[int]) -> set[frozenset[int]]:
    return {frozenset(c) for c in sub_faces(g, edges)}


def is_face_of(cycle: Iterable[int], g: Fatgraph, edges: Iterable[int]) -> bool:
    c = frozenset(cycle)
    if not c <= half_edges_of(edges):
        return False
    return c in face_sets(g, edges)


# -- screens ---------------------------------------------------------------


@dataclass(frozen=True)
class Screen:
    graph: Fatgraph
    members: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(frozenset(m) for m in self.members))


def validate_screen(s: Screen) -> None:
    g = s.graph
    E = frozenset(range(g.n_edges))
    mem = set(s.members)
    if len(mem) != len(s.members):
        raise ValidationError("repeated screen member")
    if E not in mem:
        raise ValidationError("a screen must contain E")
    for A in mem:
        if not A or not A <= E:
            raise ValidationError("screen members are nonempty edge subsets")
        if not is_quasi_recurrent(g, A):
            raise ValidationError(f"member {sorted(A)} is not quasi recurrent")
    for A in mem:
        for B in mem:
            if not (A <= B or B <= A or not (A & B)):
                raise ValidationError("screen members must be nested or disjoint")
    for A in mem:
        inner = [B for B in mem if B < A]
        if inner and frozenset().union(*inner) == A:
            raise ValidationError(f"member {sorted(A)} is the union of its proper members")


def member_depths(s: Screen) -> dict[frozenset[int], int]:
    mem = list(s.members)
    return {A: sum(1 for B in mem if A < B) for A in mem}


def edge_depths(s: Screen) -> list[int]:
    depth = member_depths(s)
    out = []
    for e in range(s.graph.n_edges):
        out.append(max(d for A, d in depth.items() if e in A))
    return out


@dataclass(frozen=True)
class FilteredScreen:
    graph: Fatgraph
    levels: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(frozenset(L) for L in self.levels))

    @property
    def total_level(self) -> int:
        return len(self.levels) - 1

    def geq(self, k: int) -> frozenset[int]:
        return frozenset().union(*self.levels[k:]) if k <= self.total_level else frozenset()

    def level_of(self) -> list[int]:
        out = [0] * self.graph.n_edges
        for k, L in enumerate(self.levels):
            for e in L:
                out[e] = k
        return out

    @property
    def dimension(self) -> int:
        return sum(len(L) - 1 for L in self.levels)

    def to_dict(self) -> dict:
        return {"graph": self.graph.to_dict(), "levels": [sorted(L) for L in self.levels]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "FilteredScreen":
        return cls(Fatgraph.from_dict(data["graph"]), tuple(frozenset(L) for L in data["levels"]))


def validate_filtered(fs: FilteredScreen) -> None:
    g = fs.graph
    seen: set[int] = set()
    for L in fs.levels:
        if not L:
            raise ValidationError("levels must be nonempty")
        if L & seen:
            raise ValidationError("levels must be pairwise disjoint")
        seen |= L
    if seen != set(range(g.n_edges)):
        raise ValidationError("levels must cover every edge")
    for k in range(len(fs.levels)):
        if not is_quasi_recurrent(g, fs.geq(k)):
            raise ValidationError(f"L^>={k} is not quasi recurrent")


def is_valid_filtered(fs: FilteredScreen) -> bool:
    try:
        validate_filtered(fs)
    except ValidationError:
        return False
    return True


def screen_to_filtered(s: Screen) -> FilteredScreen:
    validate_screen(s)
    depth = edge_depths(s)
    n = max(depth)
    levels = [frozenset(e for e, d in enumerate(depth) if d == k) for k in range(n + 1)]
    # depths are contiguous because every member of depth k sits inside one of depth k-1
    fs = FilteredScreen(s.graph, tuple(levels))
    validate_filtered(fs)
    return fs


def filtered_to_screen(fs: FilteredScreen) -> Screen:
    validate_filtered(fs)
    return Screen(fs.graph, tuple(fs.geq(k) for k in range(len(fs.levels))))


@dataclass(frozen=True)
class ScreenPoint:
    """A point of the cell of a filtered screen: per-level projective weights."""

    screen: FilteredScreen
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = tuple(Fraction(x) for x in self.weights)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, screen: FilteredScreen, raw: Sequence[Fraction]) -> "ScreenPoint":
        w = [Fraction(x) for x in raw]
        for L in screen.levels:
            t = sum((w[e] for e in L), Fraction(0))
            for e in L:
                w[e] = w[e] / t
        return cls(screen, tuple(w))


def validate_point(p: ScreenPoint) -> None:
    validate_filtered(p.screen)
    if len(p.weights) != p.screen.graph.n_edges:
        raise ValidationError("one weight per edge is required")
    if any(x <= 0 for x in p.weights):
        raise ValidationError("weights must be positive")
    for k, L in enumerate(p.screen.levels):
        if sum((p.weights[e] for e in L), Fraction(0)) != 1:
            raise ValidationError(f"weights on level {k} do not sum to one")


# -- boundary curves -------------------------------------------------------


@dataclass(frozen=True)
class CurveOnGraph:
    walk: tuple[int, ...]
    kind: str  # "essential", "puncture-parallel" or "boundary-parallel"
    level: int
    turns: tuple[int, ...]

    @property
    def key(self) -> tuple[int, ...]:
        return _normalize_cycle(self.walk)

    @property
    def edges(self) -> frozenset[int]:
        return frozenset(h >> 1 for h in self.walk)


def _turns(g: Fatgraph, walk: Sequence[int]) -> tuple[int, ...]:
    out = []
    n = len(walk)
    for i in range(n):
        x = walk[i] ^ 1
        y = walk[(i + 1) % n]
        k = 0
        z = x
        while z != y:
            z = g.rotation[z]
            k += 1
            if k > len(g.rotation):
                raise ValidationError("walk is not a closed edge path")
        out.append(k)
    return tuple(out)


def relative_curves(g: Fatgraph, deep: Iterable[int], shallow: Iterable[int], level: int = 0) -> list[CurveOnGraph]:
    """Candidate boundary curves of F(G(deep)) inside F(G(shallow)), tagged.

    Faces of G(deep) that are still faces of G(shallow) are not curves at all.
    For a fatgraph component each remaining face is essential.  A simple cycle
    contributes one curve: essential when neither side is a face of
    G(shallow), puncture-parallel when a side is a face of G(E), and
    boundary-parallel otherwise.
    """
    deep = frozenset(deep)
    shallow = frozenset(shallow)
    if not deep <= shallow:
        raise PreconditionError("deep set must lie inside the shallow set")
    shallow_faces = face_sets(g, shallow)
    all_faces = {frozenset(c) for c in g.boundary_cycles}
    out = []
    for K in edge_components(g, deep):
        faces = sub_faces(g, K)
        if is_simple_cycle(g, K):
            new = [c for c in faces if frozenset(c) not in shallow_faces]
            if not new:
                continue
            old = [c for c in faces if frozenset(c) in shallow_faces]
            walk = min(faces, key=lambda c: min(c))
            if not old:
                kind = "essential"
            elif any(frozenset(c) in all_faces for c in old):
                kind = "puncture-parallel"
            else:
                kind = "boundary-parallel"
            out.append(CurveOnGraph(walk, kind, level, _turns(g, walk)))
            continue
        for c in faces:
            if frozenset(c) not in shallow_faces:
                out.append(CurveOnGraph(c, "essential", level, _turns(g, c)))
    return out


def classify_relative(fs: FilteredScreen, k: int) -> list[CurveOnGraph]:
    if not 0 <= k < fs.total_level:
        raise PreconditionError(f"level {k} out of range")
    return relative_curves(fs.graph, fs.geq(k + 1), fs.geq(k), k + 1)


def relative_boundary(fs: FilteredScreen, k: int) -> list[CurveOnGraph]:
    """The (k+1)-st relative boundary: essential curves only."""
    return [c for c in classify_relative(fs, k) if c.kind == "essential"]


def boundary(fs: FilteredScreen) -> list[CurveOnGraph]:
    out = []
    for k in range(fs.total_level):
        out.extend(relative_boundary(fs, k))
    return out


def boundary_keys(curves: Iterable[CurveOnGraph]) -> frozenset[tuple[int, ...]]:
    return frozenset(c.key for c in curves)


def screen_boundary(s: Screen) -> list[CurveOnGraph]:
    """Union over members A != E of the relative boundary of A in its parent."""
    validate_screen(s)
    depth = member_depths(s)
    E = frozenset(range(s.graph.n_edges))
    out = []
    for A in s.members:
        if A == E:
            continue
        parent = min((B for B in s.members if A < B), key=len)
        out.extend(c for c in relative_curves(s.graph, A, parent, depth[A]) if c.kind == "essential")
    return out


# -- face operations ---------------------------------------------------------


def _renumber(levels: Sequence[frozenset[int]]) -> tuple[frozenset[int], ...]:
    return tuple(L for L in levels if L)


def face_remove_arc(fs: FilteredScreen, e: int) -> FilteredScreen:
    """Collapse the dual edge of arc ``e``; empty levels are dropped."""
    validate_filtered(fs)
    g = fs.graph
    lv = fs.level_of()
    k = lv[e]
    u, w = g.endpoints(e)
    if u == w:
        raise PreconditionError("arc removal needs distinct endpoints")
    deeper = sub_valence(g, fs.geq(k + 1))
    ok = [v for v in (u, w) if not g.is_punctured_vertex(v) and v not in deeper]
    if not ok:
        raise PreconditionError("no endpoint is unpunctured and disjoint from the deeper levels")
    h, emap = collapse_edge(g, e)
    levels = [frozenset(emap[x] for x in L if x != e) for L in fs.levels]
    out = FilteredScreen(h, _renumber(levels))
    validate_filtered(out)
    return out


def face_split_level(fs: FilteredScreen, k: int, A: Iterable[int]) -> FilteredScreen:
    validate_filtered(fs)
    A = frozenset(A)
    if not 0 <= k <= fs.total_level:
        raise PreconditionError(f"level {k} out of range")
    Lk = fs.levels[k]
    if not A or not A < Lk:
        raise PreconditionError("A must be a nonempty proper subset of the level")
    if not is_quasi_recurrent(fs.graph, A | fs.geq(k + 1)):
        raise PreconditionError("A together with the deeper levels is not quasi recurrent")
    levels = list(fs.levels[:k]) + [Lk - A, A] + list(fs.levels[k + 1 :])
    out = FilteredScreen(fs.graph, tuple(levels))
    validate_filtered(out)
    return out


def coalesce_levels(fs: FilteredScreen, k: int) -> FilteredScreen:
    """Merge levels k and k+1 (inverse of a level split)."""
    if not 0 <= k < fs.total_level:
        raise PreconditionError("no level above k to merge")
    levels = list(fs.levels[:k]) + [fs.levels[k] | fs.levels[k + 1]] + list(fs.levels[k + 2 :])
    return FilteredScreen(fs.graph, tuple(levels))
