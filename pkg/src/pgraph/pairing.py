"""Punctured fatgraphs with partial pairing and the projection from screens.

Components are ordinary :class:`Fatgraph` objects together with ``tokens``:
the original half-edge of G(E) that each dense half-edge came from.  Tokens
play the role of the isotopy labels, so two outputs of :func:`project_pi`
over the same G(E) are equal exactly when their token data agree.

Slots are addressed as ``(component, kind, rep)`` with kind ``"v"`` for a
punctured vertex (rep = its marked half-edge) or ``"b"`` for a boundary
cycle (rep = its least half-edge), all in dense numbering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import InvariantError, ValidationError
from .fatgraph import (
    Fatgraph,
    SurfaceType,
    edge_components,
    euler_characteristic,
    is_connected,
    is_simple_cycle,
    sub_faces,
    sub_rotation,
    sub_valence,
    surface_type,
)
from .screens import ScreenPoint, validate_point

Slot = tuple  # (component index, "v" | "b", representative half-edge)


@dataclass(frozen=True)
class Component:
    graph: Fatgraph
    tokens: tuple[int, ...]  # dense half-edge -> original half-edge
    weights: tuple[Fraction, ...]  # per dense edge

    @property
    def token_set(self) -> frozenset[int]:
        return frozenset(self.tokens)

    def slots(self, index: int) -> list[Slot]:
        g = self.graph
        out = [(index, "v", g.vertices[v][0]) for v in g.punctured_vertices]
        out += [(index, "b", min(c)) for c in g.boundary_cycles]
        return out

    def slot_tokens(self, kind: str, rep: int) -> frozenset[int]:
        g = self.graph
        if kind == "v":
            hs = g.vertices[g.vertex_of[rep]]
        else:
            hs = g.boundary_cycles[g.face_of[rep]]
        return frozenset(self.tokens[h] for h in hs)

    def key(self) -> tuple:
        g = self.graph
        t = self.tokens
        rot = frozenset((t[h], t[g.rotation[h]]) for h in range(g.n_half_edges))
        mates = frozenset(frozenset((t[2 * e], t[2 * e + 1])) for e in range(g.n_edges))
        punct = frozenset(frozenset(t[h] for h in g.vertices[v]) for v in g.punctured_vertices)
        w = self.projective_weights()
        weights = frozenset((frozenset((t[2 * e], t[2 * e + 1])), w[e]) for e in range(g.n_edges))
        return (rot, mates, punct, weights)

    def projective_weights(self) -> tuple[Fraction, ...]:
        s = sum(self.weights, Fraction(0))
        return tuple(x / s for x in self.weights)


@dataclass(frozen=True)
class PairedFatgraph:
    components: tuple[Component, ...]
    pairings: frozenset = field(default_factory=frozenset)  # of frozenset({slot, slot})

    def all_slots(self) -> list[Slot]:
        out = []
        for i, c in enumerate(self.components):
            out.extend(c.slots(i))
        return out

    def paired_slots(self) -> dict[Slot, Slot]:
        out = {}
        for p in self.pairings:
            a, b = tuple(p)
            out[a] = b
            out[b] = a
        return out

    def unpaired_slots(self) -> list[Slot]:
        used = self.paired_slots()
        return [s for s in self.all_slots() if s not in used]

    def euler(self) -> int:
        return sum(euler_characteristic(c.graph) for c in self.components)

    def nodal_type(self) -> SurfaceType:
        """Type of the smoothed surface: genus adds the loops of the dual graph."""
        genus = sum(surface_type(c.graph).genus for c in self.components)
        genus += len(self.pairings) - len(self.components) + 1
        return SurfaceType(genus, len(self.unpaired_slots()), self.euler())

    def key(self) -> tuple:
        """Label-level identity: component token data plus pairings by tokens."""
        comps = frozenset(c.key() for c in self.components)

        def tok(slot):
            i, kind, rep = slot
            return (kind, self.components[i].slot_tokens(kind, rep))

        pairs = frozenset(frozenset(tok(s) for s in p) for p in self.pairings)
        return (comps, pairs)

    def to_dict(self) -> dict:
        return {
            "components": [
                {
                    "graph": c.graph.to_dict(),
                    "tokens": list(c.tokens),
                    "weights": [[w.numerator, w.denominator] for w in c.weights],
                }
                for c in self.components
            ],
            "pairings": sorted([list(map(list, sorted(p))) for p in self.pairings]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PairedFatgraph":
        comps = []
        for c in data["components"]:
            g = Fatgraph.from_dict(c["graph"])
            tokens = tuple(c.get("tokens", range(g.n_half_edges)))
            weights = tuple(Fraction(int(a), int(b)) for a, b in c["weights"])
            comps.append(Component(g, tokens, weights))
        pairs = frozenset(frozenset(tuple(s) for s in p) for p in data.get("pairings", []))
        return cls(tuple(comps), pairs)


def single(g: Fatgraph, weights: Iterable[Fraction] | None = None) -> PairedFatgraph:
    w = tuple(Fraction(1) for _ in range(g.n_edges)) if weights is None else tuple(Fraction(x) for x in weights)
    return PairedFatgraph((Component(g, tuple(range(g.n_half_edges)), w),), frozenset())


# -- predicates --------------------------------------------------------------


def validate_pairing(pg: PairedFatgraph) -> tuple[bool, list[str]]:
    problems = []
    slots = set(pg.all_slots())
    seen: dict[Slot, int] = {}
    for p in pg.pairings:
        if len(p) != 2:
            problems.append(f"pair {sorted(p)} does not have two distinct slots")
            continue
        for s in p:
            if s not in slots:
                problems.append(f"{s} is not a slot")
            seen[s] = seen.get(s, 0) + 1
        if not any(s[1] == "v" for s in p):
            problems.append(f"pair {sorted(p)} contains no punctured vertex")
    for s, k in seen.items():
        if k > 1:
            problems.append(f"slot {s} is used {k} times")
    for i, c in enumerate(pg.components):
        if len(c.weights) != c.graph.n_edges or any(w <= 0 for w in c.weights):
            problems.append(f"component {i} needs one positive weight per edge")
        if not is_connected(c.graph):
            problems.append(f"component {i} is disconnected")
    return not problems, problems


def _component_graph(pg: PairedFatgraph) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {i: set() for i in range(len(pg.components))}
    for p in pg.pairings:
        a, b = tuple(p)
        adj[a[0]].add(b[0])
        adj[b[0]].add(a[0])
    return adj


def supported_by(pg: PairedFatgraph, F: SurfaceType) -> bool:
    ok, _ = validate_pairing(pg)
    if not ok:
        return False
    if len(pg.unpaired_slots()) != F.punctures:
        return False
    if any(euler_characteristic(c.graph) >= 0 for c in pg.components):
        return False
    if pg.euler() != F.euler:
        return False
    adj = _component_graph(pg)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(pg.components)


def boundary_arrows(pg: PairedFatgraph) -> set[tuple[int, int]]:
    """Arrow i -> j when a boundary cycle of i is paired with a puncture of j."""
    out = set()
    for p in pg.pairings:
        a, b = tuple(p)
        if a[1] == "b":
            out.add((a[0], b[0]))
        elif b[1] == "b":
            out.add((b[0], a[0]))
    return out


def pg_membership(pg: PairedFatgraph) -> bool:
    used = pg.paired_slots()
    free = [
        i
        for i, c in enumerate(pg.components)
        if all((i, "b", min(cyc)) not in used for cyc in c.graph.boundary_cycles)
    ]
    if not free:
        return False
    arrows = boundary_arrows(pg)
    succ: dict[int, set[int]] = {i: set() for i in range(len(pg.components))}
    for a, b in arrows:
        succ[a].add(b)
    state = {}

    def cyclic(u) -> bool:
        state[u] = 1
        for w in succ[u]:
            if state.get(w) == 1 or (w not in state and cyclic(w)):
                return True
        state[u] = 2
        return False

    return not any(u not in state and cyclic(u) for u in succ)


# -- the projection ------------------------------------------------------------


@dataclass
class _Vertex:
    cyc: list[int]
    punctured: bool
    tag: object = None  # how the vertex arose; used to look up slots


def _corner_attachments(g: Fatgraph, x: int, y: int, wanted: set[int]) -> list[int]:
    out = []
    z = g.rotation[x]
    while z != y:
        if z in wanted:
            out.append(z)
        z = g.rotation[z]
    return out


def _face_attachments(g: Fatgraph, sigma: dict[int, int], face, wanted: set[int]) -> list[int]:
    inv = {b: a for a, b in sigma.items()}
    out = []
    for xp in face:
        out.extend(_corner_attachments(g, inv[xp], xp, wanted))
    return out


@dataclass
class _Piece:
    level: int
    edges: frozenset[int]
    vertices: list[_Vertex]


def project_pi(pt: ScreenPoint) -> PairedFatgraph:
    validate_point(pt)
    fs = pt.screen
    g = fs.graph
    lv = fs.level_of()
    n = fs.total_level
    all_faces = {frozenset(c) for c in g.boundary_cycles}

    pieces: list[_Piece] = []
    # (level, frozenset edges) of simple-cycle components -> data per side
    cycle_sides: dict[frozenset[int], dict] = {}
    deferred_pairs: list[tuple[object, object]] = []  # ("P", piece, vidx) vs face tuple
    horo: list[tuple[int, int]] = []

    def component_at(e: int, m: int) -> frozenset[int]:
        for K in edge_components(g, fs.geq(m)):
            if e in K:
                return K
        raise InvariantError("edge not found at its level")

    for k in range(n, -1, -1):
        Lk = fs.levels[k]
        deeper = fs.geq(k + 1)
        for K in edge_components(g, fs.geq(k)):
            if not (K & Lk) or is_simple_cycle(g, K):
                continue
            own = K & Lk
            wanted = {h for e in own for h in (2 * e, 2 * e + 1)}
            subs = [Kp for Kp in edge_components(g, K & deeper)]
            deep_verts = set(sub_valence(g, K & deeper))
            verts: list[_Vertex] = []
            rot = sub_rotation(g, own)
            for v in sub_valence(g, own):
                if v in deep_verts:
                    continue
                start = next(h for h in g.vertices[v] if h in wanted)
                cyc = [start]
                x = rot[start]
                while x != start:
                    cyc.append(x)
                    x = rot[x]
                verts.append(_Vertex(cyc, g.is_punctured_vertex(v), ("orig", v)))
            piece = _Piece(k, own, verts)
            pidx = len(pieces)
            pieces.append(piece)
            for Kp in subs:
                sigma = sub_rotation(g, Kp)
                faces = sub_faces(g, Kp)
                att = [_face_attachments(g, sigma, c, wanted) for c in faces]
                if is_simple_cycle(g, Kp):
                    sides = {}
                    for c, a in zip(faces, att):
                        if a:
                            verts.append(_Vertex(a, True, ("cyc", Kp, frozenset(c))))
                            sides[frozenset(c)] = (pidx, len(verts) - 1)
                    if len(sides) == 2:
                        (s1, s2) = list(sides.values())
                        deferred_pairs.append((("P", s1), ("P", s2)))
                    elif len(sides) == 1:
                        (bare,) = [frozenset(c) for c, a in zip(faces, att) if not a]
                        (filled,) = sides.values()
                        if bare in all_faces:
                            horo.append(filled)
                    cycle_sides[Kp] = {"sides": sides, "faces": [frozenset(c) for c in faces]}
                else:
                    for c, a in zip(faces, att):
                        if a:
                            verts.append(_Vertex(a, True, ("fat", Kp, tuple(c))))
                            deferred_pairs.append((("P", (pidx, len(verts) - 1)), ("F", tuple(c))))

    # split each piece into connected components and merge bivalent chains
    comps: list[Component] = []
    vertex_home: dict[tuple[int, int], tuple[int, int]] = {}  # (piece, vidx) -> (comp, marked half-edge)
    token_home: dict[int, tuple[int, int]] = {}  # original half-edge -> (comp, dense half-edge)
    w = pt.weights
    for pidx, piece in enumerate(pieces):
        vert_of = {}
        for i, V in enumerate(piece.vertices):
            for h in V.cyc:
                vert_of[h] = i
        # union-find over piece vertices
        parent = list(range(len(piece.vertices)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in piece.edges:
            a, b = find(vert_of[2 * e]), find(vert_of[2 * e + 1])
            parent[a] = b
        groups: dict[int, list[int]] = {}
        for i in range(len(piece.vertices)):
            groups.setdefault(find(i), []).append(i)
        for members in sorted(groups.values()):
            comp_index = len(comps)
            comp, home, thome = _assemble(piece, members, vert_of, w, comp_index)
            comps.append(comp)
            vertex_home.update({(pidx, i): v for i, v in home.items()})
            token_home.update(thome)

    pairs = set()

    def resolve(ref) -> Slot | None:
        kind, data = ref
        if kind == "P":
            c, h = vertex_home[data]
            return (c, "v", h)
        return slot_of_face(data)

    def slot_of_face(face: tuple[int, ...]) -> Slot | None:
        m = min(lv[h >> 1] for h in face)
        h0 = next(h for h in face if lv[h >> 1] == m)
        Km = component_at(h0 >> 1, m)
        if is_simple_cycle(g, Km):
            data = cycle_sides.get(Km)
            if data is None:
                raise InvariantError("simple cycle was never processed by a parent piece")
            fset = frozenset(face)
            if fset in data["sides"]:
                raise InvariantError("asked for the slot of a pinched side")
            others = list(data["sides"].values())
            if len(others) != 1:
                raise InvariantError("bare side without a filled partner")
            c, hm = vertex_home[others[0]]
            return (c, "v", hm)
        c, dense = token_home[h0]
        bc = comps[c].graph.boundary_cycles[comps[c].graph.face_of[dense]]
        return (c, "b", min(bc))

    for a, b in deferred_pairs:
        sa, sb = resolve(a), resolve(b)
        pairs.add(frozenset((sa, sb)))
    out = PairedFatgraph(tuple(comps), frozenset(pairs))
    for c in comps:
        if euler_characteristic(c.graph) >= 0:
            raise InvariantError("a component of the projection has nonnegative Euler characteristic")
    return out


def _assemble(piece: _Piece, members: list[int], vert_of, w, comp_index):
    """Dense component from a group of piece vertices, merging bivalent chains."""
    cyc = {i: list(piece.vertices[i].cyc) for i in members}
    punct = {i: piece.vertices[i].punctured for i in members}
    rot0 = {}
    for c in cyc.values():
        for j, h in enumerate(c):
            rot0[h] = c[(j + 1) % len(c)]
    mate: dict[int, int] = {}
    weight: dict[int, Fraction] = {}  # keyed by the smaller half-edge token
    hs = [h for i in members for h in cyc[i]]
    for h in hs:
        mate[h] = h ^ 1
    for h in hs:
        if h < mate[h]:
            weight[h] = Fraction(w[h >> 1])
    alive = set(members)
    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            if len(cyc[i]) == 2 and not punct[i]:
                x, y = cyc[i]
                a, b = mate[x], mate[y]
                if a == y:
                    raise InvariantError("isolated bivalent loop in a piece")
                wx = weight[min(x, a)]
                wy = weight[min(y, b)]
                del weight[min(x, a)]
                del weight[min(y, b)]
                mate[a], mate[b] = b, a
                del mate[x], mate[y]
                weight[min(a, b)] = wx + wy
                alive.discard(i)
                changed = True
                break
    live = [h for i in sorted(alive) for h in cyc[i]]
    # dense numbering: edges ordered by their least token
    reps = sorted(h for h in live if h < mate[h])
    dense = {}
    tokens = []
    for e, h in enumerate(reps):
        dense[h] = 2 * e
        dense[mate[h]] = 2 * e + 1
        tokens += [h, mate[h]]
    cycles = []
    marks = []
    home = {}
    for i in sorted(alive):
        c = [dense[h] for h in cyc[i]]
        if punct[i]:
            marks.append(len(cycles))
        cycles.append(c)
    g = Fatgraph.from_cycles(cycles, marks)
    for i in sorted(alive):
        if punct[i]:
            home[i] = (comp_index, g.vertices[g.vertex_of[dense[cyc[i][0]]]][0])
    # every token, merged away or not, points at a survivor on its boundary cycle
    thome = {}
    for h0 in rot0:
        if h0 in thome:
            continue
        orbit = [h0]
        x = rot0[h0 ^ 1]
        while x != h0:
            orbit.append(x)
            x = rot0[x ^ 1]
        d = next(dense[x] for x in orbit if x in dense)
        for x in orbit:
            thome[x] = (comp_index, d)
    weights = tuple(weight[h] for h in reps)
    return Component(g, tuple(tokens), weights), home, thome


def pi_equivalent(p: ScreenPoint, q: ScreenPoint) -> bool:
    return project_pi(p).key() == project_pi(q).key()
