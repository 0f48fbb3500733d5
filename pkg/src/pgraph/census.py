"""Fatgraph census, the cell complex of paired fatgraphs, and the CLI.

Cells are punctured fatgraphs with partial pairing.  A cell with components
of E_1, ..., E_c edges is an open product of simplices of dimension
sum(E_i - 1).  Each simplex is oriented by listing the component's edges in
canonical order; the product is oriented block by block in component order.

Codimension-one faces come from letting a set Q of edges of one component
go to zero at a common rate.  A single edge that is not quasi recurrent
collapses; a quasi recurrent Q is pushed through the projection from a
total-level-one screen.  The face sits in the closed cell as
Delta(rest) x Delta(Q), and its incidence sign is read off a Jacobian with
the outward normal first, so one formula covers both kinds of face.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import click
import sympy

from .errors import CapExceeded, InvariantError, PreconditionError, ValidationError
from .fatgraph import (
    Fatgraph,
    SurfaceType,
    _bfs_code,
    canonical_form,
    collapse_edge,
    edge_components,
    euler_characteristic,
    is_connected,
    is_qcd_dual,
    surface_type,
)
from .orient import is_realizable, orientation_from_pairing
from .pairing import Component, PairedFatgraph, pg_membership, project_pi, supported_by, validate_pairing
from .screens import FilteredScreen, ScreenPoint, is_quasi_recurrent, is_valid_filtered

DEFAULT_CAP = 12  # half-edges per component


# -- fatgraph enumeration -------------------------------------------------------


def _partitions(total: int, parts: int, least: int, most: int | None = None):
    """Non-increasing tuples of ``parts`` integers >= least summing to total."""
    if most is None:
        most = total
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(most, total - least * (parts - 1)), least - 1, -1):
        for rest in _partitions(total - first, parts - 1, least, first):
            yield (first,) + rest


def _matchings(items: list[int]):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1 :]
        for m in _matchings(rest):
            yield [(a, items[i])] + m


def _face_count(rot: list[int]) -> int:
    seen = [False] * len(rot)
    count = 0
    for h in range(len(rot)):
        if not seen[h]:
            count += 1
            x = h
            while not seen[x]:
                seen[x] = True
                x = rot[x ^ 1]
    return count


def _profiles(g: int, s: int, punctured: bool, max_half_edges: int):
    chi = 2 - 2 * g - s
    n_edges = 1
    while 2 * n_edges <= max_half_edges:
        v_unp = n_edges + chi
        if v_unp >= 0:
            for v_p in range(0, (s if punctured else 1)):
                if v_unp + v_p == 0:
                    continue
                for pv in _partitions(2 * n_edges, v_unp + v_p, 1):
                    # split into unpunctured (>= 3) and punctured valences
                    for unp in set(itertools.combinations(pv, v_unp)):
                        if any(x < 3 for x in unp):
                            continue
                        rest = list(pv)
                        for x in unp:
                            rest.remove(x)
                        yield n_edges, tuple(unp), tuple(rest)
        n_edges += 1


def max_edges(g: int, s: int) -> int:
    return 3 * (2 * g - 2 + s)


def enumerate_fatgraphs(
    g: int, s: int, punctured: bool = False, max_half_edges: int | None = None
) -> list[Fatgraph]:
    """All connected fatgraphs of type (g, s) up to isomorphism.

    With ``punctured`` the graphs may carry punctured vertices (each counts
    as one of the s punctures) and vertices of valence one or two must be
    punctured.  Without it every vertex has valence at least three and all
    punctures are boundary cycles.  Results are canonical relabelings,
    sorted by canonical code.
    """
    if 2 - 2 * g - s >= 0 or g < 0 or s < 1:
        raise PreconditionError("need a hyperbolic type with at least one puncture")
    cap = DEFAULT_CAP if max_half_edges is None else max_half_edges
    if 2 * max_edges(g, s) > cap:
        raise CapExceeded(f"({g},{s}) needs {2 * max_edges(g, s)} half-edges, cap is {cap}")
    found: dict[tuple, Fatgraph] = {}
    for n_edges, unp, punc in _profiles(g, s, punctured, cap):
        valences = list(unp) + list(punc)
        starts = [0]
        for v in valences:
            starts.append(starts[-1] + v)
        n = 2 * n_edges
        slot_rot = [0] * n
        slot_vertex = [0] * n
        for i, v in enumerate(valences):
            for j in range(v):
                slot_rot[starts[i] + j] = starts[i] + (j + 1) % v
                slot_vertex[starts[i] + j] = i
        want_faces = s - len(punc)
        for m in _matchings(list(range(n))):
            label = [0] * n
            for k, (a, b) in enumerate(m):
                label[a] = 2 * k
                label[b] = 2 * k + 1
            rot = [0] * n
            for a in range(n):
                rot[label[a]] = label[slot_rot[a]]
            if _face_count(rot) != want_faces:
                continue
            marks = frozenset(min(label[starts[i] + j] for j in range(valences[i])) for i in range(len(unp), len(valences)))
            fg = Fatgraph(tuple(rot), marks)
            if not is_connected(fg):
                continue
            cf = canonical_form(fg)
            if cf.code not in found:
                found[cf.code] = fg.relabel(cf.labeling)
    return [found[k] for k in sorted(found)]


def valence_profile(fg: Fatgraph) -> tuple[int, ...]:
    return tuple(sorted((len(c) for c in fg.vertices), reverse=True))


def orbifold_euler(g: int, s: int, odd_sign: int = 1, max_half_edges: int | None = None) -> Fraction:
    """Sum over fatgraphs of (-1)^dim / |Aut|, where dim = edges - 1.

    Boundary cycles are unlabeled.  ``odd_sign=-1`` flips the sign attached
    to odd-dimensional cells and leaves the rest alone.
    """
    total = Fraction(0)
    for fg in enumerate_fatgraphs(g, s, max_half_edges=max_half_edges):
        dim = fg.n_edges - 1
        term = Fraction((-1) ** dim, canonical_form(fg).aut)
        total += term * odd_sign if dim % 2 else term
    return total


def harer_zagier_euler(g: int, s: int) -> Fraction:
    """Orbifold Euler characteristic of M_{g,s} with unlabeled punctures."""
    if 2 - 2 * g - s >= 0 or s < 1:
        raise PreconditionError("need a hyperbolic type with at least one puncture")
    if g == 0:
        chi, n = Fraction(1), 3
    else:
        chi, n = -Fraction(sympy.bernoulli(2 * g)) / (2 * g), 1
    while n < s:
        chi *= 2 - 2 * g - n
        n += 1
    return chi / math.factorial(s)


def combinatorial_class_filter(cells: Iterable[Fatgraph], m: Sequence[int], g: int | None = None, s: int | None = None) -> list[Fatgraph]:
    """Fatgraphs with exactly m[i] vertices of valence 2i+3 and no others."""
    cells = list(cells)
    if any(x < 0 for x in m):
        raise ValidationError("class multiplicities must be nonnegative")
    if g is None or s is None:
        if not cells:
            raise PreconditionError("pass g and s when the cell list is empty")
        st = surface_type(cells[0])
        g, s = st.genus, st.punctures
    if sum((2 * i + 1) * x for i, x in enumerate(m)) != 4 * g - 4 + 2 * s:
        raise ValidationError(f"class {tuple(m)} violates sum (2i+1) m_i = {4 * g - 4 + 2 * s}")
    want = sorted((2 * i + 3 for i, x in enumerate(m) for _ in range(x)), reverse=True)
    return [c for c in cells if list(valence_profile(c)) == want and not c.punctured]


# -- canonical keys for paired fatgraphs ---------------------------------------


def _min_labelings(fg: Fatgraph):
    best, labs = None, []
    for h in range(fg.n_half_edges):
        code, lab = _bfs_code(fg, h, None)
        if best is None or code < best:
            best, labs = code, [lab]
        elif code == best:
            labs.append(lab)
    return best, labs


def _slot_halfedges(fg: Fatgraph, kind: str, rep: int) -> tuple[int, ...]:
    if kind == "v":
        return fg.vertices[fg.vertex_of[rep]]
    return fg.boundary_cycles[fg.face_of[rep]]


def _edge_order(fg: Fatgraph, lab) -> list[int]:
    return sorted(range(fg.n_edges), key=lambda e: min(lab[2 * e], lab[2 * e + 1]))


def graded_sign(src: Sequence[Sequence[Hashable]], dst: Sequence[Sequence[Hashable]]) -> int:
    """Sign relating two orientations of the same product of simplices.

    Blocks are ordered vertex lists; a block of k items is a (k-1)-simplex.
    Zero-dimensional blocks are ignored.
    """
    src = [list(b) for b in src if len(b) > 1]
    dst = [list(b) for b in dst if len(b) > 1]
    where = {}
    for j, b in enumerate(dst):
        for p, x in enumerate(b):
            where[x] = (j, p)
    sign = 1
    perm = []
    for b in src:
        js = {where[x][0] for x in b}
        if len(js) != 1:
            raise InvariantError("orientation blocks do not correspond")
        (j,) = js
        if len(b) != len(dst[j]):
            raise InvariantError("orientation blocks have different sizes")
        perm.append(j)
        pos = [where[x][1] for x in b]
        for a, c in itertools.combinations(range(len(pos)), 2):
            if pos[a] > pos[c]:
                sign = -sign
    if sorted(perm) != list(range(len(dst))):
        raise InvariantError("orientation blocks do not correspond")
    dims = [len(b) - 1 for b in src]
    for a, c in itertools.combinations(range(len(perm)), 2):
        if perm[a] > perm[c] and dims[a] * dims[c] % 2:
            sign = -sign
    return sign


@dataclass(frozen=True)
class CellKey:
    code: tuple
    aut: int
    orientation: tuple  # blocks of (component, edge) in the input numbering
    reversing: bool


def canonical_cell(pg: PairedFatgraph, labels: dict | None = None) -> CellKey:
    """Canonical identity of a paired fatgraph, optionally with puncture labels.

    ``labels`` maps unpaired slots to labels; isomorphisms must respect
    them.  The orientation is the edge order under the first labeling that
    attains the minimal key; ``reversing`` records whether some
    automorphism reverses it.
    """
    comps = [c.graph for c in pg.components]
    info = [_min_labelings(fg) for fg in comps]
    order = sorted(range(len(comps)), key=lambda i: info[i][0])
    groups = [list(grp) for _, grp in itertools.groupby(order, key=lambda i: info[i][0])]
    mates = pg.paired_slots()
    labels = labels or {}

    def slot_ref(pos_of, labs, slot):
        i, kind, rep = slot
        lab = labs[i]
        return (pos_of[i], kind, min(lab[h] for h in _slot_halfedges(comps[i], kind, rep)))

    best = None
    hits = []
    for arrangement in itertools.product(*[itertools.permutations(gr) for gr in groups]):
        seq = [i for part in arrangement for i in part]
        pos_of = {i: p for p, i in enumerate(seq)}
        for labs_choice in itertools.product(*[info[i][1] for i in seq]):
            labs = {i: labs_choice[p] for p, i in enumerate(seq)}
            pairs = sorted(tuple(sorted((slot_ref(pos_of, labs, a), slot_ref(pos_of, labs, b)))) for a, b in mates.items() if a < b)
            labl = sorted((slot_ref(pos_of, labs, sl), lb) for sl, lb in labels.items())
            key = (tuple(info[i][0] for i in seq), tuple(pairs), tuple(labl))
            orient = tuple(tuple((i, e) for e in _edge_order(comps[i], labs[i])) for i in seq)
            if best is None or key < best:
                best, hits = key, [orient]
            elif key == best:
                hits.append(orient)
    reversing = any(graded_sign(h, hits[0]) < 0 for h in hits[1:])
    return CellKey(best, len(hits), hits[0], reversing)


# -- cells of the paired fatgraph complex ----------------------------------------


@dataclass(frozen=True)
class Cell:
    pg: PairedFatgraph
    labels: tuple  # sorted (slot, label) pairs; empty in quotient mode
    key: CellKey

    @property
    def dim(self) -> int:
        return sum(c.graph.n_edges - 1 for c in self.pg.components)

    @property
    def label_map(self) -> dict:
        return dict(self.labels)

    def to_dict(self) -> dict:
        d = self.pg.to_dict()
        d["labels"] = [[list(s), lb] for s, lb in self.labels]
        d["dim"] = self.dim
        d["aut"] = self.key.aut
        d["reversing"] = self.key.reversing
        return d


def _unit(fg: Fatgraph) -> Component:
    return Component(fg, tuple(range(fg.n_half_edges)), tuple(Fraction(1) for _ in range(fg.n_edges)))


def in_pg(pg: PairedFatgraph, F: SurfaceType) -> bool:
    """Membership of a paired fatgraph (as a cell) in the complex for F."""
    if not all(is_qcd_dual(c.graph) for c in pg.components):
        return False
    if not supported_by(pg, F) or not pg_membership(pg):
        return False
    try:
        return is_realizable(orientation_from_pairing(pg))
    except ValidationError:
        return False


def _component_types(F: SurfaceType):
    """Multisets of component types (g_i, s_i) and the number of pairs."""
    chi = F.euler
    for c in range(1, -chi + 1):
        for parts in _partitions(-chi, c, 1):
            options = []
            for p in parts:
                # 2 - 2g - s = -p with s >= 1
                options.append([(gi, 2 + p - 2 * gi) for gi in range(0, (p + 1) // 2 + 1) if 2 + p - 2 * gi >= 1 and 2 - 2 * gi - (2 + p - 2 * gi) < 0])
            seen = set()
            for types in itertools.product(*options):
                types = tuple(sorted(types))
                if types in seen:
                    continue
                seen.add(types)
                total_s = sum(t[1] for t in types)
                if (total_s - F.punctures) % 2:
                    continue
                pairs = (total_s - F.punctures) // 2
                if pairs < c - 1:
                    continue
                genus = sum(t[0] for t in types) + pairs - c + 1
                if genus == F.genus:
                    yield types, pairs


def _slot_matchings(slots: list, k: int):
    """Sets of k disjoint pairs of slots, each containing a punctured vertex."""
    if k == 0:
        yield []
        return
    if len(slots) < 2 * k:
        return
    a, rest = slots[0], slots[1:]
    for j, b in enumerate(rest):
        if a[1] == "b" and b[1] == "b":
            continue
        for m in _slot_matchings(rest[:j] + rest[j + 1 :], k - 1):
            yield [frozenset((a, b))] + m
    yield from _slot_matchings(rest, k)


def enumerate_cells(g: int, s: int, quotient: bool = True, max_half_edges: int | None = None) -> list[Cell]:
    """Cells of the paired fatgraph complex of F_g^s.

    In quotient mode cells are isomorphism classes.  Otherwise punctures
    carry labels 1..s and cells are label-preserving isomorphism classes,
    which is the complex itself when the pure mapping class group is
    trivial, as for (0,3).
    """
    F = SurfaceType(g, s, 2 - 2 * g - s)
    cache: dict[tuple, list[Fatgraph]] = {}
    cells: dict[tuple, Cell] = {}
    for types, n_pairs in _component_types(F):
        pools = []
        for t in types:
            if t not in cache:
                cache[t] = enumerate_fatgraphs(t[0], t[1], punctured=True, max_half_edges=max_half_edges)
            pools.append(cache[t])
        # choose components with repetition among equal types
        choices = []
        for t, grp in itertools.groupby(range(len(types)), key=lambda i: types[i]):
            choices.append(list(itertools.combinations_with_replacement(range(len(cache[t])), len(list(grp)))))
        for pick in itertools.product(*choices):
            graphs = []
            for (t, _), idx in zip(itertools.groupby(types), pick):
                graphs.extend(cache[t][i] for i in idx)
            comps = tuple(_unit(fg) for fg in graphs)
            base = PairedFatgraph(comps, frozenset())
            slots = base.all_slots()
            for m in _slot_matchings(slots, n_pairs):
                pg = PairedFatgraph(comps, frozenset(m))
                if not in_pg(pg, F):
                    continue
                free = pg.unpaired_slots()
                labelings = [()] if quotient else [tuple(zip(free, p)) for p in itertools.permutations(range(1, s + 1))]
                for lab in labelings:
                    key = canonical_cell(pg, dict(lab))
                    if key.code not in cells:
                        cells[key.code] = Cell(pg, tuple(sorted(lab)), key)
    return sorted(cells.values(), key=lambda c: (c.dim, c.key.code))


# -- faces ---------------------------------------------------------------------


def _det_sign(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    n = len(m)
    sign = 1
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            m[c], m[p] = m[p], m[c]
            sign = -sign
        if m[c][c] < 0:
            sign = -sign
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return sign


def blowup_sign(order: Sequence[Hashable], Q: Iterable[Hashable]) -> int:
    """Incidence sign of the face Delta(rest) x Delta(Q) of the simplex on ``order``.

    The face is oriented as (rest in order, then Q in order).  The closed
    cell is parametrised near the face by x_rest = (1-t) z, x_Q = t y; the
    sign is that of the outward normal -d/dt followed by the face frame.
    """
    order = list(order)
    Qs = set(Q)
    rest = [x for x in order if x not in Qs]
    qs = [x for x in order if x in Qs]
    if not qs or not rest:
        raise PreconditionError("Q must be a nonempty proper subset")
    n = len(order) - 1
    t = Fraction(1, 3)
    z = [Fraction(k + 1) for k in range(len(rest))]
    z = [x / sum(z) for x in z]
    y = [Fraction(k + 2) for k in range(len(qs))]
    y = [x / sum(y) for x in y]

    # x as a function of (t, z_1..z_a, y_1..y_b) where z_0, y_0 are eliminated
    def column(var):
        d = {}
        if var == "t":
            for x, zz in zip(rest, z):
                d[x] = -zz
            for x, yy in zip(qs, y):
                d[x] = yy
        elif var[0] == "z":
            j = var[1]
            d[rest[j]] = 1 - t
            d[rest[0]] = -(1 - t)
        else:
            j = var[1]
            d[qs[j]] = t
            d[qs[0]] = -t
        return [Fraction(d.get(order[p], 0)) for p in range(1, n + 1)]

    cols = [column("t")] + [column(("z", j)) for j in range(1, len(rest))] + [column(("y", j)) for j in range(1, len(qs))]
    rows = [[cols[c][r] for c in range(n)] for r in range(n)]
    s = _det_sign(rows)
    if s == 0:
        raise InvariantError("degenerate face parametrisation")
    return -s


@dataclass(frozen=True)
class Face:
    cell: tuple  # code of the face cell
    sign: int
    kind: str  # "collapse" or "screen"
    component: int
    edges: frozenset


def _witness(fg: Fatgraph, kind: str, rep: int, dropped: set[int]) -> int | None:
    hs = _slot_halfedges(fg, kind, rep)
    for h in hs:
        if h >> 1 not in dropped:
            return h
    return None


def _collapse_face(pg: PairedFatgraph, i: int, e: int):
    fg = pg.components[i].graph
    new, emap = collapse_edge(fg, e)
    slot_map = {}
    for sl in pg.all_slots():
        if sl[0] != i:
            continue
        _, kind, rep = sl
        h = _witness(fg, kind, rep, {e})
        if h is None and kind == "v":
            # univalent punctured vertex on the collapsed edge
            u, w = fg.endpoints(e)
            far = w if fg.vertex_of[rep] == u else u
            h = next((x for x in fg.vertices[far] if x >> 1 != e), None)
        if h is None:
            return None
        hh = 2 * emap[h >> 1] + (h & 1)
        if kind == "v":
            slot_map[sl] = (i, "v", new.vertices[new.vertex_of[hh]][0])
        else:
            slot_map[sl] = (i, "b", min(new.boundary_cycles[new.face_of[hh]]))
    comps = list(pg.components)
    comps[i] = _unit(new)
    edge_map = {(i, f): (i, emap[f]) for f in emap}
    return comps, slot_map, edge_map, None


def _screen_face(pg: PairedFatgraph, i: int, Q: frozenset):
    fg = pg.components[i].graph
    rest = frozenset(range(fg.n_edges)) - Q
    fs = FilteredScreen(fg, (rest, Q))
    if not is_valid_filtered(fs):
        return None
    R = project_pi(ScreenPoint.normalized(fs, [Fraction(1)] * fg.n_edges))
    base = len(pg.components) - 1
    # slots of component i -> unpaired slots of R, by tokens
    free = R.unpaired_slots()
    slot_map = {}
    pending = []
    for sl in pg.all_slots():
        if sl[0] != i:
            continue
        _, kind, rep = sl
        hs = set(_slot_halfedges(fg, kind, rep))
        hits = [r for r in free if r[1] == kind and R.components[r[0]].slot_tokens(kind, r[2]) <= hs]
        if len(hits) == 1:
            slot_map[sl] = hits[0]
        elif not hits and kind == "b" and all(h >> 1 in Q for h in hs):
            pending.append((sl, hs))
        else:
            return None
    # a face bounded by a vanishing cycle becomes the horocycle vertex on
    # the far side of that cycle
    used = set(slot_map.values())
    for sl, hs in pending:
        K = next(K for K in edge_components(fg, Q) if all(h >> 1 in K for h in hs))
        around = {v for e in K for v in fg.endpoints(e)}
        hits = [
            r
            for r in free
            if r[1] == "v" and r not in used
            and {fg.vertex_of[t] for t in R.components[r[0]].slot_tokens("v", r[2])} <= around
        ]
        if len(hits) != 1:
            return None
        slot_map[sl] = hits[0]
        used.add(hits[0])
    slot_map = {sl: (base + r[0],) + r[1:] for sl, r in slot_map.items()}
    if len(set(slot_map.values())) != len(free):
        return None
    others = [c for k, c in enumerate(pg.components) if k != i]
    comps = others + [_unit(c.graph) for c in R.components]
    edge_map = {}
    for j, c in enumerate(R.components):
        for f in range(c.graph.n_edges):
            edge_map[(i, c.tokens[2 * f] >> 1)] = (base + j, f)
    inner = [frozenset((base + a[0],) + a[1:] for a in p) for p in R.pairings]
    return comps, slot_map, edge_map, inner


def faces_of(cell: Cell, F: SurfaceType, quotient: bool, stats: dict | None = None) -> list[Face]:
    pg = cell.pg
    labels = cell.label_map
    d = cell.dim
    out = []
    blocks = cell.key.orientation
    for bi, block in enumerate(blocks):
        i = block[0][0]
        fg = pg.components[i].graph
        prefix = (-1) ** sum(len(b) - 1 for b in blocks[:bi])
        edges = range(fg.n_edges)
        for r in range(1, fg.n_edges):
            for Q in itertools.combinations(edges, r):
                Q = frozenset(Q)
                qr = is_quasi_recurrent(fg, Q)
                if not qr:
                    if r != 1:
                        continue
                    (e,) = Q
                    if fg.is_loop(e):
                        continue
                    u, w = fg.endpoints(e)
                    if fg.is_punctured_vertex(u) and fg.is_punctured_vertex(w):
                        continue
                    built = _collapse_face(pg, i, e)
                    kind = "collapse"
                else:
                    built = _screen_face(pg, i, Q)
                    kind = "screen"
                if built is None:
                    if stats is not None:
                        stats["lost_slot"] = stats.get("lost_slot", 0) + 1
                    continue
                comps, slot_map, edge_map, inner = built
                fdim = sum(c.graph.n_edges - 1 for c in comps)
                if fdim != d - 1:
                    continue
                # untouched components keep their place after a collapse and
                # move to the front after a screen face
                others = [k for k in range(len(pg.components)) if k != i]
                renum = {k: (k if kind == "collapse" else n) for n, k in enumerate(others)}
                for k in others:
                    for f in range(pg.components[k].graph.n_edges):
                        edge_map[(k, f)] = (renum[k], f)

                def move(sl):
                    if sl in slot_map:
                        return slot_map[sl]
                    return (renum[sl[0]],) + sl[1:]

                pairs = [frozenset(move(a) for a in p) for p in pg.pairings]
                pairs += inner or []
                face_pg = PairedFatgraph(tuple(comps), frozenset(pairs))
                if not in_pg(face_pg, F):
                    if stats is not None:
                        stats["outside"] = stats.get("outside", 0) + 1
                    continue
                face_labels = {move(sl): lb for sl, lb in labels.items()}
                fkey = canonical_cell(face_pg, None if quotient else face_labels)
                rest = [x for x in block if x[1] not in Q]
                qs = [x for x in block if x[1] in Q]
                local = blowup_sign(block, qs)
                induced = list(blocks[:bi]) + [rest, qs] + list(blocks[bi + 1 :])
                induced = [[edge_map[x] for x in b] for b in induced if len(b) > 1]
                sign = prefix * local * graded_sign(induced, fkey.orientation)
                out.append(Face(fkey.code, sign, kind, i, Q))
    return out


# -- cell complexes and homology --------------------------------------------------


@dataclass
class CellComplex:
    cells: dict[int, list]  # dim -> ordered cell ids
    boundary: dict[int, dict]  # dim -> {cell: {face: coefficient}}
    aut: dict = field(default_factory=dict)
    reversing: set = field(default_factory=set)
    signed: bool = True
    data: dict = field(default_factory=dict)  # cell id -> Cell

    def counts(self) -> dict[int, int]:
        return {k: len(v) for k, v in sorted(self.cells.items())}

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in self.counts().items())

    def matrix(self, k: int) -> sympy.Matrix:
        """Boundary from dimension k to k-1, rows indexed by (k-1)-cells."""
        rows = self.cells.get(k - 1, [])
        cols = self.cells.get(k, [])
        ridx = {c: r for r, c in enumerate(rows)}
        M = sympy.zeros(len(rows), len(cols))
        for j, c in enumerate(cols):
            for f, coeff in self.boundary.get(k, {}).get(c, {}).items():
                if f in ridx:
                    M[ridx[f], j] += coeff
        return M

    def unsigned_incidence(self) -> dict[int, dict]:
        return {k: {c: {f: 1 for f in fs} for c, fs in b.items()} for k, b in self.boundary.items()}

    def b0_unsigned(self) -> int:
        """Connected components via the incidence graph."""
        ids = [c for cs in self.cells.values() for c in cs]
        parent = {c: c for c in ids}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in self.boundary.values():
            for c, fs in b.items():
                for f in fs:
                    if f in parent:
                        parent[find(c)] = find(f)
        return len({find(c) for c in ids})


def complex_from_faces(cells: dict[int, list], faces: dict, aut=None, reversing=None, signed=True, data=None) -> CellComplex:
    bd: dict[int, dict] = defaultdict(dict)
    for k, cs in cells.items():
        for c in cs:
            coeffs: dict = defaultdict(int)
            for f, sgn in faces.get(c, []):
                coeffs[f] += sgn
            bd[k][c] = dict(coeffs)
    return CellComplex(dict(cells), dict(bd), aut or {}, set(reversing or ()), signed, data or {})


def codim_two_paths(C: CellComplex) -> dict[tuple, list[int]]:
    """For each pair (cell, face of a face), the signs of the two-step paths."""
    out: dict[tuple, list[int]] = defaultdict(list)
    for k, b in C.boundary.items():
        for c, faces in b.items():
            for f, x in faces.items():
                for ff, y in C.boundary.get(k - 1, {}).get(f, {}).items():
                    if x and y:
                        out[(c, ff)].extend([int(math.copysign(1, x * y))] * abs(x * y))
    return dict(out)


def homology(C: CellComplex, check: bool = True) -> dict[int, int]:
    """Rational Betti numbers.

    Cells whose stabiliser reverses orientation carry no rational chains
    and are dropped.  Raises InvariantError when the boundary does not
    square to zero.
    """
    if not C.signed:
        raise PreconditionError("signed boundaries are needed; use b0_unsigned for diagnostics")
    keep = {k: [c for c in cs if c not in C.reversing] for k, cs in C.cells.items()}
    D = CellComplex(keep, C.boundary, C.aut, set(), True)
    top = max(keep) if keep else -1
    ranks = {}
    mats = {}
    for k in range(1, top + 1):
        mats[k] = D.matrix(k)
        ranks[k] = _rank(mats[k])
    if check:
        for k in range(2, top + 1):
            P = mats[k - 1] * mats[k]
            if P.shape[0] and P.shape[1] and any(x != 0 for x in P):
                raise InvariantError(f"boundary squared is nonzero in degree {k}")
    return {k: len(keep.get(k, [])) - ranks.get(k, 0) - ranks.get(k + 1, 0) for k in range(0, top + 1)}


def _rank(M: sympy.Matrix) -> int:
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0
    from sympy.polys.matrices import DomainMatrix

    return DomainMatrix.from_Matrix(M).convert_to(sympy.QQ).rank()


def smith_invariants(C: CellComplex, k: int) -> list[int]:
    """Nonzero invariant factors of the degree-k boundary over the integers."""
    from sympy.matrices.normalforms import smith_normal_form

    M = C.matrix(k)
    if M.shape[0] == 0 or M.shape[1] == 0:
        return []
    S = smith_normal_form(M, domain=sympy.ZZ)
    return [abs(int(S[i, i])) for i in range(min(S.shape)) if S[i, i] != 0]


def reduced_betti(b: dict[int, int]) -> dict[int, int]:
    out = dict(b)
    if 0 in out:
        out[0] -= 1
    return out


def assemble_pg_complex(g: int, s: int, quotient: bool = True, max_half_edges: int | None = None, stats: dict | None = None) -> CellComplex:
    if (g, s) not in {(0, 3), (0, 4), (1, 1)}:
        raise PreconditionError("the complex is assembled for (0,3), (0,4) and (1,1) only")
    if not quotient and (g, s) != (0, 3):
        raise PreconditionError("embedded cells are enumerated for (0,3) only, where the pure mapping class group is trivial")
    F = SurfaceType(g, s, 2 - 2 * g - s)
    cells = enumerate_cells(g, s, quotient=quotient, max_half_edges=max_half_edges)
    by_code = {c.key.code: c for c in cells}
    by_dim: dict[int, list] = defaultdict(list)
    faces = {}
    for c in cells:
        by_dim[c.dim].append(c.key.code)
        fl = faces_of(c, F, quotient, stats)
        for f in fl:
            if f.cell not in by_code:
                raise InvariantError("a face landed outside the enumerated cells")
        faces[c.key.code] = [(f.cell, f.sign) for f in fl]
    aut = {c.key.code: c.key.aut for c in cells}
    rev = {c.key.code for c in cells if c.key.reversing}
    return complex_from_faces(dict(by_dim), faces, aut, rev, True, by_code)


# -- output helpers --------------------------------------------------------------


def census_rows(g: int, s: int, punctured: bool = False, max_half_edges: int | None = None) -> list[dict]:
    rows = []
    for fg in enumerate_fatgraphs(g, s, punctured=punctured, max_half_edges=max_half_edges):
        rows.append(
            {
                "edges": fg.n_edges,
                "dim": fg.n_edges - 1,
                "valences": list(valence_profile(fg)),
                "punctured_vertices": len(fg.punctured),
                "aut": canonical_form(fg).aut,
                "graph": fg.to_dict(),
            }
        )
    return rows


def _emit(rows: list[dict], fmt: str, dot=None) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        keys = [k for k in rows[0] if not isinstance(rows[0][k], dict)] if rows else []
        w = csv.DictWriter(buf, fieldnames=keys, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(r[k]) if isinstance(r[k], list) else r[k] for k in keys})
        return buf.getvalue()
    if dot is None:
        raise click.UsageError("dot output is not available for this command")
    return dot


# -- command line ---------------------------------------------------------------

EXIT_OK, EXIT_INVALID, EXIT_CAP = 0, 2, 3


def _load(path: str) -> dict:
    with open(path) if path != "-" else sys.stdin as fh:
        return json.load(fh)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except CapExceeded as exc:
            click.echo(f"cap exceeded: {exc}", err=True)
            ctx.exit(EXIT_CAP)
        except (ValueError, TypeError, KeyError) as exc:
            click.echo(f"invalid input: {exc}", err=True)
            ctx.exit(EXIT_INVALID)


FORMAT = click.option("--format", "fmt", type=click.Choice(["json", "dot", "csv"]), default="json", show_default=True)


@click.group(cls=_Group)
def main():
    """Fatgraphs, screens, nests and the paired fatgraph complex."""


@main.command()
@click.argument("path")
def validate(path):
    """Check a fatgraph JSON file and report its surface type."""
    fg = Fatgraph.from_dict(_load(path))
    if not is_connected(fg):
        raise ValidationError("fatgraph is disconnected")
    st = surface_type(fg)
    report = {"genus": st.genus, "punctures": st.punctures, "euler": st.euler, "qcd_dual": is_qcd_dual(fg)}
    click.echo(json.dumps(report, sort_keys=True))
    if not is_qcd_dual(fg):
        sys.exit(EXIT_INVALID)


@main.command()
@click.argument("path")
@click.option("--cap", type=int, default=None, help="maximum number of flips")
@click.option("--seed", type=int, default=0, show_default=True)
@FORMAT
def flip(path, cap, seed, fmt):
    """Flip a lambda-length assignment to its convex hull q.c.d."""
    import random

    from .coords import flip_to_qcd

    data = _load(path)
    fg = Fatgraph.from_dict(data["graph"])
    lam = tuple(Fraction(*map(int, x)) if isinstance(x, list) else Fraction(x) for x in data["lambda"])
    res = flip_to_qcd(fg, lam, rng=random.Random(seed), cap=cap)
    if fmt == "dot":
        click.echo(res.graph.to_dot())
        return
    rows = [{"edge": e, "X": str(x)} for e, x in enumerate(res.coords)]
    if fmt == "csv":
        click.echo(_emit(rows, "csv"))
    else:
        out = {"graph": res.graph.to_dict(), "X": [str(x) for x in res.coords], "flips": res.flips}
        click.echo(json.dumps(out, sort_keys=True))


@main.command()
@click.argument("path")
def limit(path):
    """Limiting point of a symbolic path of simplicial coordinates."""
    from .limits import SymbolicPath, limiting_point

    fs, pt, _ = limiting_point(SymbolicPath.from_dict(_load(path)))
    click.echo(json.dumps({"screen": fs.to_dict(), "weights": [str(w) for w in pt.weights]}, sort_keys=True))


@main.command()
@click.argument("path")
def pi(path):
    """Project a screen point to a paired fatgraph."""
    data = _load(path)
    fs = FilteredScreen.from_dict(data["screen"])
    pt = ScreenPoint(fs, tuple(Fraction(w) for w in data["weights"]))
    click.echo(project_pi(pt).to_json())


@main.command()
@click.argument("path")
@FORMAT
def nestflow(path, fmt):
    """Run the level-lowering flow from a nest to the canonical nest."""
    from .strata import Nest, StratumGraph, mring_flow, name_from_json

    data = _load(path)
    sg = StratumGraph.from_dict(data["graph"])
    levels = {name_from_json(x): int(k) for x, k in data["levels"]}
    steps = mring_flow(Nest.of(sg, levels))
    if fmt == "dot":
        click.echo(sg.to_dot(levels=dict(steps[-1].items)))
        return
    rows = [{"step": i, "levels": [[n, k] for n, k in f.items]} for i, f in enumerate(steps)]
    click.echo(_emit(rows, fmt))


@main.command()
@click.option("--genus", type=int, required=True)
@click.option("--punctures", type=int, required=True)
@click.option("--cap", type=int, default=DEFAULT_CAP, show_default=True, help="half-edges per component")
@click.option("--punctured/--no-punctured", default=False, help="allow punctured vertices")
@FORMAT
def census(genus, punctures, cap, punctured, fmt):
    """List fatgraph classes with automorphism counts."""
    rows = census_rows(genus, punctures, punctured, cap)
    if fmt == "dot":
        click.echo("\n".join(Fatgraph.from_dict(r["graph"]).to_dot() for r in rows))
        return
    click.echo(_emit(rows, fmt))


@main.command(name="homology")
@click.option("--genus", type=int, required=True)
@click.option("--punctures", type=int, required=True)
@click.option("--cap", type=int, default=DEFAULT_CAP, show_default=True)
@click.option("--quotient/--no-quotient", default=True, show_default=True)
def homology_cmd(genus, punctures, cap, quotient):
    """Assemble the paired fatgraph complex and print its Betti numbers."""
    C = assemble_pg_complex(genus, punctures, quotient=quotient, max_half_edges=cap)
    b = homology(C)
    out = {
        "cells": {str(k): v for k, v in C.counts().items()},
        "euler": C.euler_characteristic(),
        "betti": {str(k): v for k, v in b.items()},
        "reduced": {str(k): v for k, v in reduced_betti(b).items()},
        "b0_unsigned": C.b0_unsigned(),
        "reversing_cells": len(C.reversing),
    }
    click.echo(json.dumps(out, sort_keys=True))


@main.command()
@click.option("--genus", type=int, required=True)
@click.option("--punctures", type=int, required=True)
@click.option("--cap", type=int, default=DEFAULT_CAP, show_default=True)
@click.option("--quotient/--no-quotient", default=True, show_default=True)
@FORMAT
def export(genus, punctures, cap, quotient, fmt):
    """Export the cells and signed incidences of the complex."""
    C = assemble_pg_complex(genus, punctures, quotient=quotient, max_half_edges=cap)
    ids = {c: n for n, c in enumerate(c for k in sorted(C.cells) for c in C.cells[k])}
    rows = []
    for k in sorted(C.cells):
        for c in C.cells[k]:
            rows.append(
                {
                    "id": ids[c],
                    "dim": k,
                    "aut": C.aut[c],
                    "reversing": c in C.reversing,
                    "faces": sorted([ids[f], v] for f, v in C.boundary.get(k, {}).get(c, {}).items() if v),
                    "cell": C.data[c].to_dict(),
                }
            )
    if fmt == "dot":
        lines = ["digraph complex {"]
        for r in rows:
            lines.append(f'  c{r["id"]} [label="{r["id"]} (dim {r["dim"]})"];')
            for f, v in r["faces"]:
                lines.append(f'  c{r["id"]} -> c{f} [label="{v:+d}"];')
        lines.append("}")
        click.echo("\n".join(lines))
        return
    click.echo(_emit(rows, fmt))


if __name__ == "__main__":  # pragma: no cover
    main()
