"""Half-edge fatgraphs with punctured vertices.

Half-edges are the integers ``0 .. 2E-1`` and edge ``e`` consists of the
half-edges ``2e`` and ``2e+1``, so the edge involution is ``h ^ 1``.  The
``rotation`` permutation sends a half-edge to the next one (counterclockwise)
at its vertex; its orbits are the vertices.

Face tracing convention, used everywhere in the package::

    phi(h) = rotation[h ^ 1]

i.e. walk along ``h`` to the far vertex, then turn to the half-edge that
follows the incoming one in the cyclic order.  The orbits of ``phi`` are the
boundary cycles.  The corner between ``x`` and ``rotation[x]`` belongs to the
boundary cycle containing ``rotation[x]``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Sequence

from .errors import CapExceeded, PreconditionError, ValidationError


def pair(h: int) -> int:
    return h ^ 1


def edge_of(h: int) -> int:
    return h >> 1


def half_edges_of(edges: Iterable[int]) -> set[int]:
    out = set()
    for e in edges:
        out.add(2 * e)
        out.add(2 * e + 1)
    return out


@dataclass(frozen=True)
class SurfaceType:
    genus: int
    punctures: int
    euler: int

    @property
    def supported(self) -> bool:
        return self.euler < 0 and self.punctures > 0


@dataclass(frozen=True)
class Fatgraph:
    """A connected or disconnected fatgraph with ``*``-marked vertices.

    ``punctured`` holds the smallest half-edge of every punctured vertex.
    """

    rotation: tuple[int, ...]
    punctured: frozenset[int] = frozenset()

    def __post_init__(self):
        rot = tuple(int(x) for x in self.rotation)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "punctured", frozenset(int(p) for p in self.punctured))
        n = len(rot)
        if n % 2:
            raise ValidationError("odd number of half-edges")
        if sorted(rot) != list(range(n)):
            raise ValidationError("rotation is not a permutation of the half-edges")
        mins = {c[0] for c in self.vertices}
        bad = self.punctured - mins
        if bad:
            raise ValidationError(f"punctured marks {sorted(bad)} are not vertex representatives")

    # -- construction -------------------------------------------------

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]], punctured: Iterable[int] = ()) -> "Fatgraph":
        """Build from vertex cycles; ``punctured`` lists indices into ``cycles``."""
        seen = [h for c in cycles for h in c]
        n = len(seen)
        if sorted(seen) != list(range(n)):
            raise ValidationError("vertex cycles must use each half-edge 0..2E-1 exactly once")
        rot = [0] * n
        for c in cycles:
            if not c:
                raise ValidationError("empty vertex cycle")
            for i, h in enumerate(c):
                rot[h] = c[(i + 1) % len(c)]
        marks = set()
        for i in punctured:
            marks.add(min(cycles[i]))
        return cls(tuple(rot), frozenset(marks))

    # -- basic structure ----------------------------------------------

    @property
    def n_half_edges(self) -> int:
        return len(self.rotation)

    @property
    def n_edges(self) -> int:
        return len(self.rotation) // 2

    @cached_property
    def vertices(self) -> tuple[tuple[int, ...], ...]:
        """Rotation orbits, each starting at its smallest half-edge, sorted."""
        seen = [False] * len(self.rotation)
        out = []
        for h in range(len(self.rotation)):
            if seen[h]:
                continue
            cyc = []
            x = h
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = self.rotation[x]
            out.append(tuple(cyc))
        return tuple(out)

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        idx = [0] * len(self.rotation)
        for i, c in enumerate(self.vertices):
            for h in c:
                idx[h] = i
        return tuple(idx)

    @cached_property
    def inverse_rotation(self) -> tuple[int, ...]:
        inv = [0] * len(self.rotation)
        for h, x in enumerate(self.rotation):
            inv[x] = h
        return tuple(inv)

    def is_punctured_vertex(self, v: int) -> bool:
        return self.vertices[v][0] in self.punctured

    def is_punctured_at(self, h: int) -> bool:
        return self.is_punctured_vertex(self.vertex_of[h])

    @property
    def punctured_vertices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.vertices) if c[0] in self.punctured)

    def valence(self, v: int) -> int:
        return len(self.vertices[v])

    def phi(self, h: int) -> int:
        return self.rotation[h ^ 1]

    def endpoints(self, e: int) -> tuple[int, int]:
        return self.vertex_of[2 * e], self.vertex_of[2 * e + 1]

    def is_loop(self, e: int) -> bool:
        u, w = self.endpoints(e)
        return u == w

    @cached_property
    def boundary_cycles(self) -> tuple[tuple[int, ...], ...]:
        return tuple(_orbits(len(self.rotation), self.phi))

    @cached_property
    def face_of(self) -> tuple[int, ...]:
        idx = [0] * len(self.rotation)
        for i, c in enumerate(self.boundary_cycles):
            for h in c:
                idx[h] = i
        return tuple(idx)

    def relabel(self, perm: Sequence[int]) -> "Fatgraph":
        """Rename half-edge ``h`` to ``perm[h]``; must respect edges."""
        n = len(self.rotation)
        if sorted(perm) != list(range(n)):
            raise ValidationError("relabeling is not a permutation")
        for h in range(0, n, 2):
            if perm[h] ^ 1 != perm[h + 1]:
                raise ValidationError("relabeling does not respect the edge pairing")
        rot = [0] * n
        for h in range(n):
            rot[perm[h]] = perm[self.rotation[h]]
        marks = set()
        for v in self.punctured_vertices:
            marks.add(min(perm[h] for h in self.vertices[v]))
        return Fatgraph(tuple(rot), frozenset(marks))

    # -- serialization -----------------------------------------------

    def to_dict(self) -> dict:
        return {
            "pairing": [[2 * e, 2 * e + 1] for e in range(self.n_edges)],
            "rotation": [list(c) for c in self.vertices],
            "punctured": list(self.punctured_vertices),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Fatgraph":
        pairs = data.get("pairing")
        cycles = data["rotation"]
        if pairs is None:
            return cls.from_cycles(cycles, data.get("punctured", ()))
        ren = {}
        for i, (a, b) in enumerate(pairs):
            if a == b or a in ren or b in ren:
                raise ValidationError("pairing is not a fixed-point-free involution")
            ren[a] = 2 * i
            ren[b] = 2 * i + 1
        try:
            cyc = [[ren[h] for h in c] for c in cycles]
        except KeyError as exc:
            raise ValidationError(f"half-edge {exc} is not paired") from None
        return cls.from_cycles(cyc, data.get("punctured", ()))

    @classmethod
    def from_json(cls, text: str) -> "Fatgraph":
        return cls.from_dict(json.loads(text))

    def to_dot(self, labels: dict | None = None) -> str:
        lines = ["graph fatgraph {"]
        for v, c in enumerate(self.vertices):
            if c[0] in self.punctured:
                lines.append(f'  v{v} [label="*", shape=doublecircle, style=filled, fillcolor=gray80];')
            else:
                lines.append(f'  v{v} [label="v{v}", shape=circle];')
        for e in range(self.n_edges):
            u, w = self.endpoints(e)
            lab = labels.get(e, e) if labels else e
            lines.append(f'  v{u} -- v{w} [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines)


def _orbits(n: int, perm) -> list[tuple[int, ...]]:
    seen = [False] * n
    out = []
    for h in range(n):
        if seen[h]:
            continue
        cyc = []
        x = h
        while not seen[x]:
            seen[x] = True
            cyc.append(x)
            x = perm(x)
        out.append(tuple(cyc))
    return out


# -- invariants -----------------------------------------------------------


def boundary_cycles(g: Fatgraph) -> tuple[tuple[int, ...], ...]:
    return g.boundary_cycles


def euler_characteristic(g: Fatgraph) -> int:
    """Unpunctured vertices minus edges."""
    return len(g.vertices) - len(g.punctured) - g.n_edges


def edge_components(g: Fatgraph, edges: Iterable[int] | None = None) -> list[frozenset[int]]:
    """Connected components of G(A) as edge sets, sorted by smallest edge."""
    es = sorted(range(g.n_edges) if edges is None else set(edges))
    parent = {e: e for e in es}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    at_vertex: dict[int, int] = {}
    for e in es:
        for h in (2 * e, 2 * e + 1):
            v = g.vertex_of[h]
            if v in at_vertex:
                a, b = find(at_vertex[v]), find(e)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                at_vertex[v] = e
    groups: dict[int, set[int]] = {}
    for e in es:
        groups.setdefault(find(e), set()).add(e)
    return sorted((frozenset(s) for s in groups.values()), key=min)


def is_connected(g: Fatgraph) -> bool:
    if g.n_edges == 0:
        return len(g.vertices) <= 1
    return len(edge_components(g)) == 1


def surface_type(g: Fatgraph) -> SurfaceType:
    if not is_connected(g):
        raise PreconditionError("surface_type needs a connected fatgraph")
    chi = euler_characteristic(g)
    s = len(g.boundary_cycles) + len(g.punctured)
    # V - E + F = 2 - 2g over all vertices and boundary cycles
    two_minus_2g = len(g.vertices) - g.n_edges + len(g.boundary_cycles)
    genus = (2 - two_minus_2g) // 2
    return SurfaceType(genus, s, chi)


def is_qcd_dual(g: Fatgraph) -> bool:
    """Every vertex of valence one or two is punctured."""
    return all(len(c) >= 3 or c[0] in g.punctured for c in g.vertices)


# -- edge collapse ----------------------------------------------------------


def collapse_edge(g: Fatgraph, e: int) -> tuple[Fatgraph, dict[int, int]]:
    """Contract edge ``e``; returns the new graph and the old->new edge map."""
    if not 0 <= e < g.n_edges:
        raise PreconditionError(f"no edge {e}")
    h, hh = 2 * e, 2 * e + 1
    u, w = g.vertex_of[h], g.vertex_of[hh]
    if u == w:
        raise PreconditionError("cannot collapse a loop")
    pu, pw = g.is_punctured_vertex(u), g.is_punctured_vertex(w)
    if pu and pw:
        raise PreconditionError("cannot collapse an edge joining two punctured vertices")

    def after(x):
        out = []
        y = g.rotation[x]
        while y != x:
            out.append(y)
            y = g.rotation[y]
        return out

    merged = after(h) + after(hh)
    emap = {}
    for f in range(g.n_edges):
        if f != e:
            emap[f] = f if f < e else f - 1

    def ren(x):
        return 2 * emap[x >> 1] + (x & 1)

    cycles = []
    punct = []
    for v, c in enumerate(g.vertices):
        if v in (u, w):
            continue
        if g.is_punctured_vertex(v):
            punct.append(len(cycles))
        cycles.append([ren(x) for x in c])
    if merged:
        if pu or pw:
            punct.append(len(cycles))
        cycles.append([ren(x) for x in merged])
    return Fatgraph.from_cycles(cycles, punct), emap


def delete_edge_keep_vertices(g: Fatgraph, e: int) -> tuple[Fatgraph, dict[int, int]]:
    """Remove edge ``e`` from its vertices (used for loop collapse bookkeeping)."""
    emap = {f: (f if f < e else f - 1) for f in range(g.n_edges) if f != e}

    def ren(x):
        return 2 * emap[x >> 1] + (x & 1)

    cycles, punct = [], []
    for v, c in enumerate(g.vertices):
        rest = [ren(x) for x in c if (x >> 1) != e]
        if not rest:
            continue
        if g.is_punctured_vertex(v):
            punct.append(len(cycles))
        cycles.append(rest)
    return Fatgraph.from_cycles(cycles, punct), emap


# -- canonical forms -----------------------------------------------------


@dataclass(frozen=True)
class CanonicalForm:
    code: tuple
    aut: int
    labeling: tuple[int, ...]  # old half-edge -> canonical half-edge


def _bfs_code(g: Fatgraph, start: int, colors):
    n = len(g.rotation)
    lab = [-1] * n
    order = [start, start ^ 1]
    lab[start] = 0
    lab[start ^ 1] = 1
    i = 0
    while i < len(order):
        x = g.rotation[order[i]]
        if lab[x] < 0:
            lab[x] = len(order)
            order.append(x)
            lab[x ^ 1] = len(order)
            order.append(x ^ 1)
        i += 1
    if len(order) != n:
        raise PreconditionError("canonical_form needs a connected fatgraph")
    rot = tuple(lab[g.rotation[d]] for d in order)
    punct = tuple(g.is_punctured_at(d) for d in order)
    col = tuple(colors[d] for d in order) if colors is not None else ()
    return (n, rot, punct, col), tuple(lab)


def canonical_form(g: Fatgraph, colors: Sequence[Hashable] | None = None) -> CanonicalForm:
    """Lexicographically least BFS labeling over all starting half-edges.

    ``colors`` optionally attaches comparable data to half-edges (weights,
    slot labels); isomorphisms must preserve it.  The automorphism count is
    the number of starting half-edges achieving the minimum, since the
    automorphism group of a connected fatgraph acts freely on half-edges.
    """
    n = len(g.rotation)
    if n == 0:
        return CanonicalForm((0, (), (), ()), 1, ())
    best = None
    count = 0
    best_lab = None
    for s in range(n):
        code, lab = _bfs_code(g, s, colors)
        if best is None or code < best:
            best, count, best_lab = code, 1, lab
        elif code == best:
            count += 1
    return CanonicalForm(best, count, best_lab)


def automorphism_count(g: Fatgraph, colors=None) -> int:
    return canonical_form(g, colors).aut


def isomorphic(g1: Fatgraph, g2: Fatgraph) -> bool:
    return canonical_form(g1).code == canonical_form(g2).code


# -- subgraphs ---------------------------------------------------------------


def sub_rotation(g: Fatgraph, edges: Iterable[int]) -> dict[int, int]:
    """Rotation restricted to the half-edges of the edge set."""
    hs = half_edges_of(edges)
    out = {}
    for h in hs:
        x = g.rotation[h]
        while x not in hs:
            x = g.rotation[x]
        out[h] = x
    return out


def sub_faces(g: Fatgraph, edges: Iterable[int]) -> list[tuple[int, ...]]:
    """Boundary cycles of G(A) with the restricted rotation."""
    rot = sub_rotation(g, edges)
    seen = set()
    out = []
    for h in sorted(rot):
        if h in seen:
            continue
        cyc = []
        x = h
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = rot[x ^ 1]
        out.append(tuple(cyc))
    return out


def sub_valence(g: Fatgraph, edges: Iterable[int]) -> dict[int, int]:
    val: dict[int, int] = {}
    for h in half_edges_of(edges):
        v = g.vertex_of[h]
        val[v] = val.get(v, 0) + 1
    return val


def subgraph(g: Fatgraph, edges: Iterable[int]) -> tuple[Fatgraph, tuple[int, ...]]:
    """G(A) as a standalone fatgraph plus the new->old edge map."""
    es = sorted(set(edges))
    new = {e: i for i, e in enumerate(es)}
    rot = sub_rotation(g, es)
    n = 2 * len(es)
    r = [0] * n
    for h, x in rot.items():
        r[2 * new[h >> 1] + (h & 1)] = 2 * new[x >> 1] + (x & 1)
    marks = set()
    for v in sub_valence(g, es):
        if g.is_punctured_vertex(v):
            hs = [2 * new[h >> 1] + (h & 1) for h in g.vertices[v] if (h >> 1) in new]
            marks.add(min(hs))
    return Fatgraph(tuple(r), frozenset(marks)), tuple(es)


def is_simple_cycle(g: Fatgraph, edges: Iterable[int]) -> bool:
    es = set(edges)
    if not es:
        return False
    if len(edge_components(g, es)) != 1:
        return False
    for v, k in sub_valence(g, es).items():
        if k != 2 or g.is_punctured_vertex(v):
            return False
    return True


def quasi_efficient_cycles(
    g: Fatgraph, edges: Iterable[int] | None = None, max_half_edges: int = 24, max_cycles: int = 200000
) -> set[tuple[int, ...]]:
    """Closed walks in G(A) that never backtrack except at punctured vertices.

    Each directed half-edge is used at most once per walk, which keeps the set
    finite; every edge of a quasi recurrent set lies on such a walk.  Cycles are
    returned as tuples of directed half-edges, normalized up to rotation and
    reversal.
    """
    es = set(range(g.n_edges)) if edges is None else set(edges)
    hs = sorted(half_edges_of(es))
    if len(hs) > max_half_edges:
        raise CapExceeded(f"quasi_efficient_cycles capped at {max_half_edges} half-edges")
    at = {}
    for h in hs:
        at.setdefault(g.vertex_of[h], []).append(h)

    def moves(h):
        x = h ^ 1
        v = g.vertex_of[x]
        punct = g.is_punctured_vertex(v)
        return [y for y in at[v] if y != x or punct]

    found: set[tuple[int, ...]] = set()
    for s in hs:
        stack = [(s, [s], {s})]
        while stack:
            h, path, used = stack.pop()
            for y in moves(h):
                if y == s:
                    found.add(_normalize_cycle(path))
                    if len(found) > max_cycles:
                        raise CapExceeded("too many quasi efficient cycles")
                elif y not in used and y > s:
                    stack.append((y, path + [y], used | {y}))
    return found


def _normalize_cycle(path: Sequence[int]) -> tuple[int, ...]:
    n = len(path)
    rots = [tuple(path[i:]) + tuple(path[:i]) for i in range(n)]
    rev = [x ^ 1 for x in reversed(path)]
    rots += [tuple(rev[i:]) + tuple(rev[:i]) for i in range(n)]
    return min(rots)


def is_quasi_efficient(g: Fatgraph, cycle: Sequence[int]) -> bool:
    n = len(cycle)
    if n == 0:
        return False
    for i in range(n):
        h, y = cycle[i], cycle[(i + 1) % n]
        x = h ^ 1
        if g.vertex_of[y] != g.vertex_of[x]:
            return False
        if y == x and not g.is_punctured_at(x):
            return False
    return True


# -- standard examples ---------------------------------------------------


def planar_theta() -> Fatgraph:
    return Fatgraph.from_cycles([(0, 2, 4), (1, 5, 3)])


def genus_one_theta() -> Fatgraph:
    return Fatgraph.from_cycles([(0, 2, 4), (1, 3, 5)])


def figure_eight(genus: int = 0) -> Fatgraph:
    if genus == 0:
        return Fatgraph.from_cycles([(0, 1, 2, 3)])
    return Fatgraph.from_cycles([(0, 2, 1, 3)])


def loop_at_punctured() -> Fatgraph:
    return Fatgraph.from_cycles([(0, 1)], punctured=[0])


def dumbbell() -> Fatgraph:
    """Two loops joined by an edge (edges: loop 0, bridge 1, loop 2)."""
    return Fatgraph.from_cycles([(0, 1, 2), (3, 4, 5)])


def bridge_between_punctures() -> Fatgraph:
    return Fatgraph.from_cycles([(0,), (1,)], punctured=[0, 1])


def collapse_edges(g: Fatgraph, edges: Iterable[int]) -> tuple[Fatgraph, dict[int, int]]:
    """Contract a forest of edges; survivors keep their relative order."""
    out = g
    for e in sorted(set(edges), reverse=True):
        # edges below e keep their index, so descending order needs no remapping
        out, _ = collapse_edge(out, e)
    gone = set(edges)
    survivors = [f for f in range(g.n_edges) if f not in gone]
    return out, {f: i for i, f in enumerate(survivors)}
