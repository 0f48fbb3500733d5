"""Partially oriented stratum graphs, the maps between screens and nests, and the flow.

Stratum graphs built from a paired fatgraph use one vertex per component
and name edges by slots: ``("N", s1, s2)`` for a pairing with ``s1 < s2``
and ``("P", s)`` for an unpaired slot.  An edge is oriented out of the
component carrying a boundary cycle (a decorated puncture) and towards the
punctured vertex, or the star, on its other side.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .coords import flip_to_qcd, is_quasi_triangulation
from .errors import InvariantError, PreconditionError, ValidationError
from .fatgraph import Fatgraph, edge_components, sub_faces
from .pairing import Component, PairedFatgraph, Slot, pg_membership, project_pi, validate_pairing
from .screens import ScreenPoint
from .strata import (
    Edge,
    Name,
    Nest,
    NestCell,
    StratumGraph,
    collapse,
    floor_levels,
    is_collapsable,
    maximal_free_subset,
    m_bar,
    min_f,
    validate_nest,
)


@dataclass(frozen=True)
class PartialOrientation:
    graph: StratumGraph
    tails: tuple[tuple[Name, int], ...]  # oriented edges with their initial vertex

    @classmethod
    def of(cls, graph: StratumGraph, tails: Mapping[Name, int]) -> "PartialOrientation":
        for x, v in tails.items():
            if v not in graph.V(x):
                raise ValidationError(f"tail of {x} is not one of its endpoints")
        return cls(graph, tuple((x, tails[x]) for x in graph.names if x in tails))

    @cached_property
    def tail(self) -> dict[Name, int]:
        return dict(self.tails)

    def is_oriented(self, x: Name) -> bool:
        return x in self.tail

    def head(self, x: Name) -> int | None:
        """Terminal vertex of an oriented edge, None for the star."""
        e = self.graph.by_name[x]
        if e.kind == "P":
            return None
        return e.w if self.tail[x] == e.u else e.u

    def out_edges(self, v: int) -> frozenset[Name]:
        return frozenset(x for x, t in self.tails if t == v)

    @cached_property
    def successors(self) -> dict[int, set[int]]:
        out = {v: set() for v in range(self.graph.n_vertices)}
        for x, t in self.tails:
            h = self.head(x)
            if h is not None:
                out[t].add(h)
        return out

    def to_dict(self) -> dict:
        return {"graph": self.graph.to_dict(), "tails": [[x, v] for x, v in self.tails]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dot(self, levels: Mapping[Name, int] | None = None) -> str:
        return self.graph.to_dot(levels, self.tail)


def has_oriented_cycle(o: PartialOrientation) -> bool:
    succ = o.successors
    state: dict[int, int] = {}

    def visit(u) -> bool:
        state[u] = 1
        for w in succ[u]:
            if state.get(w) == 1 or (w not in state and visit(w)):
                return True
        state[u] = 2
        return False

    return any(u not in state and visit(u) for u in succ)


def realizability_failures(o: PartialOrientation) -> list[str]:
    bad = []
    V = range(o.graph.n_vertices)
    if any(not o.out_edges(v) for v in V):
        bad.append("i")
    if not any(o.out_edges(v) and all(o.head(x) is None for x in o.out_edges(v)) for v in V):
        bad.append("ii")
    if has_oriented_cycle(o):
        bad.append("iii")
    return bad


def is_realizable(o: PartialOrientation) -> bool:
    return not realizability_failures(o)


def reachable(o: PartialOrientation, a: int, b: int) -> bool:
    """Oriented path from a to b (of positive length when a == b)."""
    succ = o.successors
    seen = set()
    stack = list(succ[a])
    while stack:
        v = stack.pop()
        if v == b:
            return True
        if v not in seen:
            seen.add(v)
            stack.extend(succ[v])
    return False


def depths(o: PartialOrientation) -> dict[int, int]:
    """d(v): most component vertices on an oriented path from v, v itself excluded."""
    if has_oriented_cycle(o):
        raise PreconditionError("oriented cycle; d is undefined")
    succ = o.successors
    memo: dict[int, int] = {}

    def d(v):
        if v not in memo:
            memo[v] = max((1 + d(w) for w in succ[v]), default=0)
        return memo[v]

    return {v: d(v) for v in range(o.graph.n_vertices)}


def nest_from_orientation(o: PartialOrientation) -> Nest:
    bad = realizability_failures(o)
    if bad:
        raise PreconditionError(f"orientation is not realizable (fails {', '.join(bad)})")
    d = depths(o)
    f = {}
    for e in o.graph.edges:
        if o.is_oriented(e.name):
            f[e.name] = d[o.tail[e.name]]
        else:
            f[e.name] = 1 + max(d[v] for v in e.ends)
    out = Nest.of(o.graph, f)
    ok, cond = validate_nest(out)
    if not ok:
        raise InvariantError(f"minimal compatible function fails nest conditions {cond}")
    if not is_compatible(o, out):
        raise InvariantError("minimal compatible function is not compatible")
    return out


def is_compatible(o: PartialOrientation, f: Nest) -> bool:
    if f.graph != o.graph:
        return False
    return all(o.out_edges(v) == f.min_at(v) for v in range(o.graph.n_vertices))


def orientation_of_nest(f: Nest) -> PartialOrientation | None:
    """The unique partial orientation compatible with ``f``, if any."""
    tails = {}
    for v in range(f.graph.n_vertices):
        for x in f.min_at(v):
            if x in tails or f.graph.by_name[x].is_loop:
                return None
            tails[x] = v
    return PartialOrientation.of(f.graph, tails)


def all_orientations(g: StratumGraph) -> Iterable[PartialOrientation]:
    choices = []
    for e in g.edges:
        if e.kind == "P" or e.is_loop:
            choices.append([None, e.u])
        else:
            choices.append([None, e.u, e.w])
    for pick in itertools.product(*choices):
        yield PartialOrientation.of(g, {e.name: t for e, t in zip(g.edges, pick) if t is not None})


# -- contractibility -----------------------------------------------------------


def is_essential(o: PartialOrientation, n: Name) -> bool:
    e = o.graph.by_name[n]
    if e.kind != "N" or o.is_oriented(n) or e.is_loop:
        return False
    return reachable(o, e.u, e.w) or reachable(o, e.w, e.u)


def is_contractible(o: PartialOrientation, n: Name) -> bool:
    if o.graph.by_name[n].kind != "N":
        raise PreconditionError("only node edges can be contracted")
    return o.is_oriented(n) or not is_essential(o, n)


def unorient_siblings(o: PartialOrientation, n: Name) -> PartialOrientation:
    """G(n): other oriented edges leaving the tail of an oriented n lose their orientation."""
    if not o.is_oriented(n):
        return o
    v = o.tail[n]
    return PartialOrientation.of(o.graph, {x: t for x, t in o.tails if t != v or x == n})


def collapse_oriented(o: PartialOrientation, n: Name) -> PartialOrientation:
    """Collapse n keeping the orientations of all other edges."""
    h = collapse(o.graph, [n])
    e = o.graph.by_name[n]
    lo, hi = min(e.u, e.w), max(e.u, e.w)

    def new_vertex(v):
        if lo == hi:
            return v
        if v == hi:
            return lo
        return v - 1 if v > hi else v

    tails = {x: new_vertex(t) for x, t in o.tails if x != n}
    return PartialOrientation.of(h, tails)


def contracting_sequence(o: PartialOrientation, n: Name) -> tuple[PartialOrientation, PartialOrientation, PartialOrientation]:
    if not is_realizable(o):
        raise PreconditionError("orientation is not realizable")
    if not is_contractible(o, n):
        raise PreconditionError(f"edge {n} is essential")
    mid = unorient_siblings(o, n)
    end = collapse_oriented(mid, n)
    return o, mid, end


def contractible_by_definition(o: PartialOrientation, n: Name) -> bool:
    mid = unorient_siblings(o, n)
    return is_realizable(collapse_oriented(mid, n))


def collapsable_witness(o: PartialOrientation, n: Name) -> Nest | None:
    """A nest compatible with G(n) for which n is collapsable, built from the contraction.

    Take the minimal compatible nest on the collapsed graph and slot n in
    half a level above the least level at the merged vertex.
    """
    mid = unorient_siblings(o, n)
    end = collapse_oriented(mid, n)
    if not is_realizable(end):
        return None
    fp = nest_from_orientation(end)
    e = o.graph.by_name[n]
    merged = min(e.u, e.w)
    j = min(fp(x) for x in fp.graph.star[merged])
    raw = {x: 2 * fp(x) for x in fp.graph.names}
    raw[n] = 2 * j + 1
    f = Nest.of(o.graph, floor_levels(raw))
    ok, _ = validate_nest(f)
    if not ok or not is_compatible(mid, f) or not is_collapsable(f, n):
        return None
    return f


# -- from paired fatgraphs -------------------------------------------------------


def _edge_name(pair) -> tuple:
    a, b = sorted(pair)
    return ("N", a, b)


def stratum_graph_of(pg: PairedFatgraph) -> StratumGraph:
    edges = []
    for p in pg.pairings:
        a, b = sorted(p)
        edges.append(Edge(("N", a, b), "N", a[0], b[0]))
    for s in pg.unpaired_slots():
        edges.append(Edge(("P", s), "P", s[0], None))
    return StratumGraph(len(pg.components), tuple(edges))


def edge_sides(name) -> tuple[Slot, ...]:
    return tuple(name[1:])


def orientation_from_pairing(pg: PairedFatgraph) -> PartialOrientation:
    ok, problems = validate_pairing(pg)
    if not ok:
        raise ValidationError("; ".join(problems))
    if not pg_membership(pg):
        raise ValidationError("paired fatgraph fails the membership conditions")
    g = stratum_graph_of(pg)
    tails = {}
    for e in g.edges:
        decorated = [s for s in edge_sides(e.name) if s[1] == "b"]
        if len(decorated) > 1:
            raise ValidationError("two boundary cycles are paired")
        if decorated:
            tails[e.name] = decorated[0][0]
    return PartialOrientation.of(g, tails)


# -- psi -------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiResult:
    orientation: PartialOrientation
    nest: Nest
    cell: NestCell
    paired: PairedFatgraph
    walks: dict = field(default_factory=dict, compare=False)  # edge name -> (side walks)

    @property
    def graph(self) -> StratumGraph:
        return self.orientation.graph


def _component_level(fs, comp: Component) -> int:
    lv = fs.level_of()
    levels = {lv[t >> 1] for t in comp.tokens}
    if len(levels) != 1:
        raise InvariantError("component mixes screen levels")
    return levels.pop()


def _walk_of_slot(fs, pg: PairedFatgraph, slot: Slot) -> tuple[int, ...]:
    """Closed edge path in G(E) for the horocycle or curve at a slot."""
    g = fs.graph
    ci, kind, rep = slot
    comp = pg.components[ci]
    k = _component_level(fs, comp)
    cg = comp.graph
    if kind == "b":
        cyc = cg.boundary_cycles[cg.face_of[rep]]
        toks = [comp.tokens[h] for h in cyc]
        K = next(K for K in edge_components(g, fs.geq(k)) if toks[0] >> 1 in K)
        face = next(f for f in sub_faces(g, K) if toks[0] in f)
        if not set(toks) <= set(face):
            raise InvariantError("boundary cycle does not lie on one face of its level component")
        return tuple(face)
    vhs = cg.vertices[cg.vertex_of[rep]]
    t = comp.tokens[vhs[0]]
    deeper = fs.geq(k + 1)
    u = g.vertex_of[t]
    deep_here = [h for h in g.vertices[u] if h >> 1 in deeper]
    if not deep_here:
        raise PreconditionError("punctured vertex of the screen graph itself; psi needs an ideal cell decomposition")
    Kp = next(K for K in edge_components(g, deeper) if deep_here[0] >> 1 in K)
    xp = g.rotation[t]
    while xp >> 1 not in Kp:
        xp = g.rotation[xp]
    return tuple(next(f for f in sub_faces(g, Kp) if xp in f))


def _nu(walk, lv, weights) -> tuple[int, Fraction]:
    m = min(lv[h >> 1] for h in walk)
    return m, sum((Fraction(weights[h >> 1]) for h in walk if lv[h >> 1] == m), Fraction(0))


def psi(pt: ScreenPoint) -> PsiResult:
    fs = pt.screen
    g = fs.graph
    if g.punctured_vertices:
        raise PreconditionError("psi is defined here on ideal cell decompositions only")
    pg = project_pi(pt)
    o = orientation_from_pairing(pg)
    lv = fs.level_of()
    raw_level = {}
    coord = {}
    walks = {}
    for e in o.graph.edges:
        sides = edge_sides(e.name)
        ws = [_walk_of_slot(fs, pg, s) for s in sides]
        vals = {_nu(w, lv, pt.weights) for w in ws}
        if len(vals) != 1:
            raise InvariantError(f"the two sides of {e.name} disagree on the curve length")
        (m, c), = vals
        raw_level[e.name] = m
        coord[e.name] = c
        walks[e.name] = tuple(ws)
    nest = Nest.of(o.graph, floor_levels(raw_level))
    ok, bad = validate_nest(nest)
    if not ok:
        raise InvariantError(f"psi produced a function failing nest conditions {bad}")
    if not is_compatible(o, nest):
        raise InvariantError("psi nest is not compatible with the orientation of the projection")
    cell = NestCell.normalized(nest, coord)
    return PsiResult(o, nest, cell, pg, walks)


# -- chi -------------------------------------------------------------------------


@dataclass(frozen=True)
class QcdGeometry:
    """A component already in convex hull position; ``sides`` maps (edge, side) to (kind, rep)."""

    component: Component
    sides: dict


@dataclass(frozen=True)
class LambdaGeometry:
    """A decorated quasi triangulation with marks for every stratum edge side."""

    graph: Fatgraph
    lam: tuple[Fraction, ...]
    sides: dict  # (edge name, side index) -> ("b" | "v", half-edge)
    tokens: tuple[int, ...] | None = None


def chi_combinatorial(graph: StratumGraph, cell: NestCell, geometry: Mapping[int, object]) -> PairedFatgraph:
    """Assemble a paired fatgraph from per-component geometry, decorating exactly Min_f.

    Every component is brought to convex hull position (by flips when given
    lambda lengths), its slots are matched to stratum edges, and decorated
    slots must be exactly the edges of least level at that component.  The
    cell's coordinates on those edges must be proportional to the horocycle
    sums of simplicial coordinates.
    """
    nest = cell.nest
    if nest.graph != graph:
        raise ValidationError("cell lives on another stratum graph")
    comps: list[Component] = []
    slot_of: dict[tuple, Slot] = {}
    for v in range(graph.n_vertices):
        geo = geometry[v]
        if isinstance(geo, QcdGeometry):
            comp = geo.component
            where = dict(geo.sides)
        elif isinstance(geo, LambdaGeometry):
            if not is_quasi_triangulation(geo.graph):
                raise ValidationError(f"component {v} is not a quasi triangulation")
            res = flip_to_qcd(geo.graph, geo.lam, marks=dict(geo.sides))
            toks = tuple(range(res.graph.n_half_edges)) if geo.tokens is None else geo.tokens
            comp = Component(res.graph, toks, res.coords)
            where = {}
            for key, h in res.marks.items():
                kind = geo.sides[key][0]
                cg = res.graph
                rep = cg.vertices[cg.vertex_of[h]][0] if kind == "v" else min(cg.boundary_cycles[cg.face_of[h]])
                where[key] = (kind, rep)
        else:
            raise ValidationError(f"unknown geometry for component {v}")
        mins = nest.min_at(v)
        cg = comp.graph
        seen_slots = set()
        for x in graph.star[v]:
            e = graph.by_name[x]
            sides = [0] if e.kind == "P" else ([0, 1] if e.is_loop else [0 if e.u == v else 1])
            for sd in sides:
                if (x, sd) not in where:
                    raise ValidationError(f"component {v} has no slot for edge {x}")
                kind, rep = where[(x, sd)]
                want = "b" if (x in mins and (not e.is_loop)) else "v"
                if e.is_loop and x in mins:
                    raise ValidationError(f"loop {x} cannot be least level at its vertex")
                if kind != want:
                    raise ValidationError(
                        f"edge {x} at component {v} is {'decorated' if kind == 'b' else 'undecorated'} "
                        f"but {'is' if want == 'b' else 'is not'} of least level"
                    )
                slot_of[(x, sd)] = (v, kind, rep)
                seen_slots.add((kind, rep))
        all_slots = {(k, r) for _, k, r in comp.slots(v)}
        if seen_slots != all_slots:
            raise ValidationError(f"component {v}: stratum edges do not match its punctures")
        # decorated horocycle sums must match the cell up to scale
        ratios = set()
        for x in mins:
            e = graph.by_name[x]
            sd = 0 if e.kind == "P" or e.u == v else 1
            _, rep = where[(x, sd)]
            cyc = cg.boundary_cycles[cg.face_of[rep]]
            horo = sum((comp.weights[h >> 1] for h in cyc), Fraction(0))
            ratios.add(horo / cell.w[x])
        if len(ratios) > 1:
            raise ValidationError(f"component {v}: cell coordinates disagree with horocycle sums")
        comps.append(comp)
    pairs = set()
    for e in graph.edges:
        if e.kind == "N":
            pairs.add(frozenset((slot_of[(e.name, 0)], slot_of[(e.name, 1)])))
    out = PairedFatgraph(tuple(comps), frozenset(pairs))
    ok, problems = validate_pairing(out)
    if not ok:
        raise InvariantError("; ".join(problems))
    return out


def geometry_from_psi(res: PsiResult) -> dict[int, QcdGeometry]:
    out = {}
    for v, comp in enumerate(res.paired.components):
        sides = {}
        for x in res.graph.star[v]:
            slots = edge_sides(x)
            for sd, s in enumerate(slots):
                if s[0] == v:
                    sides[(x, sd)] = (s[1], s[2])
        out[v] = QcdGeometry(comp, sides)
    return out


def chi_of_psi(res: PsiResult) -> PairedFatgraph:
    return chi_combinatorial(res.graph, res.cell, geometry_from_psi(res))


# -- the flow -------------------------------------------------------------------


@dataclass(frozen=True)
class FlowState:
    orientation: PartialOrientation
    lengths: tuple[tuple[Name, Fraction], ...]  # deprojectivized horocycle lengths on oriented edges

    @classmethod
    def of(cls, o: PartialOrientation, lengths: Mapping[Name, Fraction]) -> "FlowState":
        return cls(o, tuple((x, Fraction(lengths[x])) for x, _ in o.tails))

    @cached_property
    def nest(self) -> Nest:
        return nest_from_orientation(self.orientation)

    @cached_property
    def length(self) -> dict[Name, Fraction]:
        return dict(self.lengths)


def _min_length(state: FlowState, names: Iterable[Name]) -> Fraction:
    names = sorted(names, key=lambda x: (state.length[x], repr(x)))
    return state.length[names[0]]


def all_contractible(o: PartialOrientation) -> bool:
    return all(is_contractible(o, n) for n in o.graph.N)


def flow_phase(state: FlowState) -> int | None:
    o = state.orientation
    if any(is_essential(o, n) for n in o.graph.N):
        return 1
    f = state.nest
    for n in o.graph.N:
        e = o.graph.by_name[n]
        if not o.is_oriented(n) and not e.is_loop:
            a, b = (f(next(iter(f.min_at(v)))) for v in (e.u, e.w))
            if a != b:
                return 2
    if m_bar(f):
        return 3
    return None


def theorem_flow_step(state: FlowState) -> FlowState:
    o = state.orientation
    if not is_realizable(o):
        raise PreconditionError("flow state is not realizable")
    phase = flow_phase(state)
    f = state.nest
    tails = dict(o.tail)
    lengths = dict(state.length)
    if phase is None:
        return state
    if phase == 1:
        for n in o.graph.N:
            if is_essential(o, n):
                e = o.graph.by_name[n]
                t = e.u if reachable(o, e.u, e.w) else e.w
                tails[n] = t
                lengths[n] = _min_length(state, o.out_edges(t))
        new = PartialOrientation.of(o.graph, tails)
        if not is_realizable(new) or not all_contractible(new):
            raise InvariantError("orienting essential edges broke realizability or contractibility")
    elif phase == 2:
        if not all_contractible(o):
            raise InvariantError("phase two reached with a non-contractible edge")
        for n in o.graph.N:
            e = o.graph.by_name[n]
            if o.is_oriented(n) or e.is_loop:
                continue
            a, b = (f(next(iter(f.min_at(v)))) for v in (e.u, e.w))
            if a != b:
                t = e.u if a > b else e.w
                tails[n] = t
                lengths[n] = _min_length(state, o.out_edges(t))
        new = PartialOrientation.of(o.graph, tails)
        if not is_realizable(new) or not all_contractible(new):
            raise InvariantError("orienting inessential edges broke realizability or contractibility")
    else:
        pre = all_contractible(o)
        S = maximal_free_subset(f, m_bar(f))
        if not S:
            raise InvariantError("flow stalled above the canonical nest")
        lowered = Nest.of(o.graph, floor_levels({x: k - (1 if x in S else 0) for x, k in f.items}))
        new = orientation_of_nest(lowered)
        if new is None or not is_realizable(new):
            raise InvariantError("lowered nest has no realizable compatible orientation")
        lengths = {}
        for v in range(o.graph.n_vertices):
            keep = o.out_edges(v) & new.out_edges(v)
            if not keep:
                raise InvariantError("old and new least-level sets are disjoint")
            floor_len = _min_length(state, keep)
            for x in new.out_edges(v):
                lengths[x] = state.length[x] if x in keep else floor_len
        if pre and not all_contractible(new):
            raise InvariantError("lowering levels lost contractibility")
    out = FlowState.of(new, lengths)
    if sum(v for _, v in out.nest.items) >= sum(v for _, v in f.items):
        raise InvariantError("flow step did not decrease the total level")
    return out


def run_flow(state: FlowState, cap: int = 1000) -> list[FlowState]:
    out = [state]
    while flow_phase(out[-1]) is not None:
        if len(out) > cap:
            raise InvariantError("flow did not terminate")
        out.append(theorem_flow_step(out[-1]))
    return out


def initial_state(o: PartialOrientation) -> FlowState:
    """Unit lengths on every decorated horocycle."""
    return FlowState.of(o, {x: Fraction(1) for x, _ in o.tails})


def canonical_orientations(g: StratumGraph) -> PartialOrientation:
    from .strata import canonical_nest

    o = orientation_of_nest(canonical_nest(g))
    if o is None:
        raise InvariantError("canonical nest has no compatible orientation")
    return o


def min_level(f: Nest, v: int) -> int:
    return f(next(iter(min_f(f.graph, f.f, v))))
