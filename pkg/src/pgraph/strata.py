"""Stratum graphs, nests and the level-modification calculus.

A stratum graph has component vertices ``0 .. V-1`` and named edges of two
kinds: ``"N"`` edges (nodes) join two component vertices, possibly the same
one, and ``"P"`` edges (punctures) join a component vertex to its own
univalent star vertex, which is left implicit.  Edge names are arbitrary
sortable hashables and survive collapses, so a nest is just a mapping from
names to levels.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Iterable, Mapping

from .errors import InvariantError, PreconditionError, ValidationError

Name = Hashable


@dataclass(frozen=True)
class Edge:
    name: Name
    kind: str  # "N" or "P"
    u: int
    w: int | None  # None for P edges (the star end)

    @property
    def ends(self) -> tuple[int, ...]:
        """Non-star endpoints, with a loop listed once."""
        if self.w is None or self.w == self.u:
            return (self.u,)
        return (self.u, self.w)

    @property
    def is_loop(self) -> bool:
        return self.kind == "N" and self.u == self.w


@dataclass(frozen=True)
class StratumGraph:
    n_vertices: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: _sort_key(e.name))))

    @classmethod
    def build(cls, n_vertices: int, nodes: Iterable[tuple], punctures: Iterable[tuple]) -> "StratumGraph":
        """``nodes`` are (name, u, w) and ``punctures`` are (name, v)."""
        edges = [Edge(n, "N", u, w) for n, u, w in nodes]
        edges += [Edge(n, "P", v, None) for n, v in punctures]
        return cls(n_vertices, tuple(edges))

    @cached_property
    def by_name(self) -> dict[Name, Edge]:
        return {e.name: e for e in self.edges}

    @cached_property
    def names(self) -> tuple[Name, ...]:
        return tuple(e.name for e in self.edges)

    @cached_property
    def N(self) -> tuple[Name, ...]:
        return tuple(e.name for e in self.edges if e.kind == "N")

    @cached_property
    def P(self) -> tuple[Name, ...]:
        return tuple(e.name for e in self.edges if e.kind == "P")

    @cached_property
    def star(self) -> dict[int, tuple[Name, ...]]:
        out: dict[int, list[Name]] = {v: [] for v in range(self.n_vertices)}
        for e in self.edges:
            for v in e.ends:
                out[v].append(e.name)
        return {v: tuple(x) for v, x in out.items()}

    def V(self, x: Name) -> tuple[int, ...]:
        return self.by_name[x].ends

    @cached_property
    def _adjacency(self) -> dict[Name, frozenset[Name]]:
        out = {}
        for e in self.edges:
            s = set()
            for v in e.ends:
                s.update(self.star[v])
            s.discard(e.name)
            out[e.name] = frozenset(s)
        return out

    def adjacent(self, x: Name) -> frozenset[Name]:
        return self._adjacency[x]

    def to_dict(self) -> dict:
        return {
            "vertices": self.n_vertices,
            "edges": [{"name": e.name, "kind": e.kind, "ends": [e.u] if e.w is None else [e.u, e.w]} for e in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "StratumGraph":
        edges = []
        for item in data["edges"]:
            ends = item["ends"]
            name = name_from_json(item["name"])
            if item["kind"] == "P":
                edges.append(Edge(name, "P", ends[0], None))
            else:
                edges.append(Edge(name, "N", ends[0], ends[1]))
        return cls(int(data["vertices"]), tuple(edges))

    def to_dot(self, levels: Mapping[Name, int] | None = None, tails: Mapping[Name, int] | None = None) -> str:
        lines = ["graph G {" if not tails else "digraph G {"]
        arrow = "->" if tails else "--"
        for v in range(self.n_vertices):
            lines.append(f'  v{v} [label="{v}"];')
        for i, e in enumerate(self.edges):
            lab = f"{e.name}" + (f" : {levels[e.name]}" if levels else "")
            if e.kind == "P":
                lines.append(f'  s{i} [label="*", shape=plaintext];')
                a, b = f"v{e.u}", f"s{i}"
            else:
                a, b = f"v{e.u}", f"v{e.w}"
            attrs = f'label="{lab}"'
            if tails is not None:
                if e.name in tails:
                    if e.kind == "N" and tails[e.name] == e.w:
                        a, b = b, a
                else:
                    attrs += ", dir=none"
            lines.append(f"  {a} {arrow} {b} [{attrs}];")
        lines.append("}")
        return "\n".join(lines)


def _sort_key(x):
    return (type(x).__name__, x)


def validate_stratum_graph(g: StratumGraph) -> None:
    if g.n_vertices < 1:
        raise ValidationError("a stratum graph needs a component vertex")
    names = [e.name for e in g.edges]
    if len(set(names)) != len(names):
        raise ValidationError("edge names must be distinct")
    if not g.P:
        raise ValidationError("a stratum graph needs a puncture edge")
    for e in g.edges:
        if e.kind not in ("N", "P"):
            raise ValidationError(f"unknown edge kind {e.kind}")
        for v in (e.u,) if e.w is None else (e.u, e.w):
            if not 0 <= v < g.n_vertices:
                raise ValidationError(f"edge {e.name} has a bad endpoint")
        if (e.kind == "P") != (e.w is None):
            raise ValidationError("puncture edges have exactly one component endpoint")
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for x in g.star[v]:
            for w in g.V(x):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    if len(seen) != g.n_vertices:
        raise ValidationError("stratum graph is disconnected")


def collapse(g: StratumGraph, names: Iterable[Name]) -> StratumGraph:
    """Contract the given node edges; an edge whose ends already agree is deleted."""
    names = set(names)
    parent = list(range(g.n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x in names:
        e = g.by_name[x]
        if e.kind != "N":
            raise PreconditionError("only node edges can be collapsed")
        a, b = find(e.u), find(e.w)
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = sorted({find(v) for v in range(g.n_vertices)})
    new = {r: i for i, r in enumerate(roots)}
    edges = []
    for e in g.edges:
        if e.name in names:
            continue
        u = new[find(e.u)]
        w = None if e.w is None else new[find(e.w)]
        edges.append(Edge(e.name, e.kind, u, w))
    return StratumGraph(len(roots), tuple(edges))


# -- nests -------------------------------------------------------------------


@dataclass(frozen=True)
class Nest:
    graph: StratumGraph
    items: tuple[tuple[Name, int], ...]

    @classmethod
    def of(cls, graph: StratumGraph, levels: Mapping[Name, int]) -> "Nest":
        return cls(graph, tuple((x, int(levels[x])) for x in graph.names))

    @cached_property
    def f(self) -> dict[Name, int]:
        return dict(self.items)

    def __call__(self, x: Name) -> int:
        return self.f[x]

    @property
    def max_level(self) -> int:
        return max(self.f.values())

    def level(self, k: int) -> frozenset[Name]:
        return frozenset(x for x, v in self.items if v == k)

    @cached_property
    def _mins(self) -> dict[int, frozenset[Name]]:
        return {v: min_f(self.graph, self.f, v) for v in range(self.graph.n_vertices)}

    def min_at(self, v: int) -> frozenset[Name]:
        return self._mins[v]

    def to_dict(self) -> dict:
        return {"graph": self.graph.to_dict(), "levels": [[x, k] for x, k in self.items]}


def name_from_json(x):
    """Edge names come back from JSON with lists where tuples were."""
    return tuple(name_from_json(y) for y in x) if isinstance(x, list) else x


def min_f(g: StratumGraph, f: Mapping[Name, int], v: int) -> frozenset[Name]:
    st = g.star[v]
    if not st:
        return frozenset()
    m = min(f[x] for x in st)
    return frozenset(x for x in st if f[x] == m)


def nest_conditions(g: StratumGraph, f: Mapping[Name, int]) -> list[int]:
    """Numbers of the nest conditions (1-4) that ``f`` violates."""
    bad = []
    if not any(f[p] == 0 for p in g.P):
        bad.append(1)
    if any(f[n] <= 0 for n in g.N):
        bad.append(2)
    for n in g.N:
        if not any(f[x] < f[n] for x in g.adjacent(n)):
            bad.append(3)
            break
    vals = set(f.values())
    if vals != set(range(max(vals) + 1)):
        bad.append(4)
    return sorted(set(bad))


def validate_nest(n: Nest) -> tuple[bool, list[int]]:
    bad = nest_conditions(n.graph, n.f)
    return not bad, bad


def is_nest(g: StratumGraph, f: Mapping[Name, int]) -> bool:
    return not nest_conditions(g, f)


_SIGMA_CACHE: dict[StratumGraph, Nest] = {}


def canonical_nest(g: StratumGraph) -> Nest:
    """Least number of component vertices on a path from each edge to a star."""
    hit = _SIGMA_CACHE.get(g)
    if hit is not None:
        return hit
    if len(_SIGMA_CACHE) > 50000:
        _SIGMA_CACHE.clear()
    validate_stratum_graph(g)
    INF = float("inf")
    delta = [INF] * g.n_vertices
    frontier = []
    for p in g.P:
        v = g.by_name[p].u
        if delta[v] == INF:
            delta[v] = 1
            frontier.append(v)
    d = 1
    while frontier:
        nxt = []
        for v in frontier:
            for x in g.star[v]:
                for w in g.V(x):
                    if delta[w] == INF:
                        delta[w] = d + 1
                        nxt.append(w)
        frontier = nxt
        d += 1
    levels = {}
    for e in g.edges:
        levels[e.name] = 0 if e.kind == "P" else int(min(delta[v] for v in e.ends))
    out = Nest.of(g, levels)
    ok, bad = validate_nest(out)
    if not ok:
        raise InvariantError(f"canonical nest violates conditions {bad}")
    _SIGMA_CACHE[g] = out
    return out


def floor_levels(f: Mapping[Name, int]) -> dict[Name, int]:
    vals = sorted(set(f.values()))
    rank = {v: i for i, v in enumerate(vals)}
    return {x: rank[v] for x, v in f.items()}


def floor_nest(g: StratumGraph, f: Mapping[Name, int]) -> Nest:
    bad = [c for c in nest_conditions(g, f) if c != 4]
    if bad:
        raise PreconditionError(f"conditions {bad} fail before flooring")
    return Nest.of(g, floor_levels(f))


def _check_M(n: Nest, M: Iterable[Name]) -> frozenset[Name]:
    M = frozenset(M)
    f = n.f
    for x in M:
        k = f.get(x)
        if k is None:
            raise PreconditionError("M contains unknown edges")
        if k == 0:
            raise PreconditionError("M must avoid level 0")
    return M


def insert_isolating_levels(n: Nest, M: Iterable[Name]) -> Nest:
    M = _check_M(n, M)
    raw = {x: 2 * k - (1 if x in M else 0) for x, k in n.items}
    return floor_nest(n.graph, raw)


def lower(n: Nest, M: Iterable[Name]) -> dict[Name, int]:
    """f^M as a raw function: decrease the levels of M by one."""
    M = frozenset(M)
    return {x: k - (1 if x in M else 0) for x, k in n.items}


def _C_definition(n: Nest, M: frozenset[Name]) -> frozenset[Name]:
    g = n.graph
    f = n.f
    adj = g._adjacency
    out = []
    for x in g.N:
        fx = f[x] - (x in M)
        for y in adj[x]:
            if f[y] - (y in M) < fx:
                break
        else:
            out.append(x)
    return frozenset(out)


def _C_characterization(n: Nest, M: frozenset[Name]) -> frozenset[Name]:
    g = n.graph
    f = n.f
    mins = n._mins
    star = g.star
    out = []
    for x in g.N:
        if x not in M:
            continue
        fx = f[x]
        good = []
        in_min = False
        for v in g.by_name[x].ends:
            ok = True
            for m in star[v]:
                if m in M and f[m] < fx:
                    ok = False
                    break
            if ok:
                ok = False
                for y in mins[v]:
                    if y not in M and f[y] + 1 == fx:
                        ok = True
                        break
            good.append(ok)
            in_min = in_min or x in mins[v]
        if all(good) or (any(good) and in_min):
            out.append(x)
    return frozenset(out)


def obstruction_C(n: Nest, M: Iterable[Name]) -> frozenset[Name]:
    """Node edges made inadmissible by lowering M; both descriptions are computed."""
    M = _check_M(n, M)
    a = _C_definition(n, M)
    b = _C_characterization(n, M)
    if a != b:
        raise InvariantError(f"C(M) mismatch: definition {sorted(a, key=_sort_key)} vs characterization {sorted(b, key=_sort_key)}")
    return a


def decrease_level(n: Nest, M: Iterable[Name]) -> Nest:
    M = _check_M(n, M)
    C = obstruction_C(n, M)
    fM = lower(n, M)
    h = collapse(n.graph, C)
    raw = {x: fM[x] for x in h.names}
    out = floor_nest(h, raw)
    ok, bad = validate_nest(out)
    if not ok:
        raise InvariantError(f"decreased function violates conditions {bad}")
    return out


def collapsing_sequence(n: Nest, M: Iterable[Name]) -> tuple[Nest, Nest, Nest]:
    """f -> f_M -> (f_M)^M on G_M for a collapsable set M."""
    M = _check_M(n, M)
    if obstruction_C(n, M) != M:
        raise PreconditionError("M is not collapsable")
    mid = insert_isolating_levels(n, M)
    return n, mid, decrease_level(mid, M)


def is_collapsable(n: Nest, x: Name) -> bool:
    if n.graph.by_name[x].kind != "N" or n(x) == 0:
        return False
    return obstruction_C(n, {x}) == {x}


def maximal_free_subset(n: Nest, M: Iterable[Name]) -> frozenset[Name]:
    """Largest S in M with C(S) empty.

    If x lies in T, T is inside S and x is in C(S), then x is in C(T) too
    (lowering fewer neighbours only helps x stay minimal), so every free T
    survives the pruning S -> S - C(S) and the fixpoint is the maximum.
    """
    S = _check_M(n, M)
    while True:
        C = obstruction_C(n, S)
        if not C:
            return S
        S = S - C


def brute_force_free_subsets(n: Nest, M: Iterable[Name]) -> list[frozenset[Name]]:
    M = sorted(_check_M(n, M), key=_sort_key)
    out = []
    for r in range(len(M) + 1):
        for S in itertools.combinations(M, r):
            if not obstruction_C(n, frozenset(S)):
                out.append(frozenset(S))
    return out


def m_bar(n: Nest) -> frozenset[Name]:
    fs = canonical_nest(n.graph)
    return frozenset(x for x in n.graph.names if n(x) > fs(x))


def mring_step(n: Nest) -> Nest:
    S = maximal_free_subset(n, m_bar(n))
    if not S:
        return n
    return floor_nest(n.graph, lower(n, S))


def mring_flow(n: Nest, cap: int | None = None) -> list[Nest]:
    bad = nest_conditions(n.graph, n.f)
    if bad:
        raise PreconditionError(f"not a nest (fails conditions {bad})")
    target = canonical_nest(n.graph)
    limit = cap if cap is not None else len(n.items) * (n.max_level + 1) + 1
    out = [n]
    while out[-1] != target:
        if len(out) > limit:
            raise InvariantError("flow did not reach the canonical nest")
        nxt = mring_step(out[-1])
        if nxt == out[-1]:
            raise InvariantError("flow stalled above the canonical nest")
        if sum(v for _, v in nxt.items) >= sum(v for _, v in out[-1].items):
            raise InvariantError("flow failed to decrease the total level")
        out.append(nxt)
    return out


def m_f(n: Nest) -> int | None:
    fs = canonical_nest(n.graph)
    for k in range(max(n.max_level, fs.max_level) + 1):
        if n.level(k) != fs.level(k):
            return k
    return None


def M_of(n: Nest) -> frozenset[Name]:
    """L_{f_sigma}^{m} - L_f^{m} for the first disagreeing level m."""
    m = m_f(n)
    if m is None:
        return frozenset()
    return canonical_nest(n.graph).level(m) - n.level(m)


def dsigma_faces(n: Nest) -> tuple[list[Nest], list[tuple[frozenset[Name], Nest]]]:
    """Coalescing faces inside D(sigma) and collapsable-level identifications."""
    faces = []
    for k in range(n.max_level):
        M = n.level(k + 1)
        if not obstruction_C(n, M):
            faces.append(floor_nest(n.graph, lower(n, M)))
    idents = []
    for k in range(1, n.max_level + 1):
        M = n.level(k)
        if obstruction_C(n, M) == M:
            idents.append((M, decrease_level(n, M)))
    return faces, idents


@dataclass(frozen=True)
class NestCell:
    nest: Nest
    weights: tuple[tuple[Name, Fraction], ...]

    @classmethod
    def normalized(cls, nest: Nest, raw: Mapping[Name, Fraction]) -> "NestCell":
        out = {}
        for k in range(nest.max_level + 1):
            L = nest.level(k)
            t = sum((Fraction(raw[x]) for x in L), Fraction(0))
            for x in L:
                out[x] = Fraction(raw[x]) / t
        return cls(nest, tuple((x, out[x]) for x in nest.graph.names))

    @cached_property
    def w(self) -> dict[Name, Fraction]:
        return dict(self.weights)


def validate_cell(c: NestCell) -> None:
    ok, bad = validate_nest(c.nest)
    if not ok:
        raise ValidationError(f"nest violates conditions {bad}")
    for k in range(c.nest.max_level + 1):
        L = c.nest.level(k)
        if any(c.w[x] <= 0 for x in L) or sum(c.w[x] for x in L) != 1:
            raise ValidationError(f"level {k} weights are not a point of the open simplex")


# -- enumeration ---------------------------------------------------------------


def _node_key(perm, nodes) -> tuple:
    return tuple(sorted(tuple(sorted((perm[u], perm[w]))) for u, w in nodes))


def _connected(nv: int, nodes) -> bool:
    adj = {v: set() for v in range(nv)}
    for u, w in nodes:
        adj[u].add(w)
        adj[w].add(u)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == nv


def enumerate_stratum_graphs(max_edges: int) -> list[StratumGraph]:
    """All connected stratum graphs with at most ``max_edges`` edges, up to isomorphism.

    Node multisets are kept only in their lexicographically least labelling;
    puncture distributions are then reduced by that multiset's automorphisms.
    """
    out = []
    for nv in range(1, max_edges + 1):
        perms = list(itertools.permutations(range(nv)))
        pairs = [(u, w) for u in range(nv) for w in range(u, nv)]
        for n_nodes in range(nv - 1, max_edges):
            for nodes in itertools.combinations_with_replacement(pairs, n_nodes):
                if not _connected(nv, nodes):
                    continue
                keys = [(_node_key(p, nodes), p) for p in perms]
                if min(k for k, _ in keys) != nodes:
                    continue
                auts = [p for k, p in keys if k == nodes]
                seen = set()
                for total in range(1, max_edges - n_nodes + 1):
                    for pc in itertools.combinations_with_replacement(range(nv), total):
                        pcount = tuple(pc.count(v) for v in range(nv))
                        orbit = []
                        for p in auts:
                            q = [0] * nv
                            for v in range(nv):
                                q[p[v]] = pcount[v]
                            orbit.append(tuple(q))
                        rep = min(orbit)
                        if rep in seen:
                            continue
                        seen.add(rep)
                        named = [(f"n{i}", u, w) for i, (u, w) in enumerate(nodes)]
                        punct = [(f"p{j}", v) for j, v in enumerate(v for v in range(nv) for _ in range(rep[v]))]
                        out.append(StratumGraph.build(nv, named, punct))
    return out


def enumerate_nests(g: StratumGraph, max_level: int) -> list[Nest]:
    """All nests on ``g`` with levels at most ``max_level``."""
    names = g.names
    idx = {x: i for i, x in enumerate(names)}
    p_idx = [idx[x] for x in g.P]
    n_adj = [(idx[x], [idx[y] for y in g.adjacent(x)]) for x in g.N]
    ranges = [range(0, max_level + 1) if x in set(g.P) else range(1, max_level + 1) for x in names]
    out = []
    for vals in itertools.product(*ranges):
        if not any(vals[i] == 0 for i in p_idx):
            continue
        if not all(any(vals[j] < vals[i] for j in adj) for i, adj in n_adj):
            continue
        if len(set(vals)) != max(vals) + 1:
            continue
        out.append(Nest(g, tuple(zip(names, vals))))
    return out
