"""Lambda lengths, h-lengths and simplicial coordinates on quasi triangulations.

A quasi triangulation is given by its dual fatgraph: every unpunctured vertex
is trivalent (a triangle) and every punctured vertex is univalent (a
once-punctured monogon).  Lambda lengths live on edges and all arithmetic is
exact over ``Fraction``.

Corners are keyed by the half-edge ``x`` such that the corner runs from ``x``
to ``rotation[x]``; at a univalent punctured vertex the single corner is keyed
by its only half-edge.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import CapExceeded, InvariantError, PreconditionError, ValidationError
from .fatgraph import Fatgraph, canonical_form, collapse_edge, is_qcd_dual, is_quasi_efficient
from .screens import maximal_quasi_recurrent

Lambda = Sequence[Fraction]


def is_quasi_triangulation(g: Fatgraph) -> bool:
    for v, c in enumerate(g.vertices):
        if g.is_punctured_vertex(v):
            if len(c) != 1:
                return False
        elif len(c) != 3:
            return False
    return True


def _check(g: Fatgraph, lam: Lambda):
    if not is_quasi_triangulation(g):
        raise PreconditionError("not a quasi triangulation")
    if len(lam) != g.n_edges:
        raise ValidationError("one lambda length per edge is required")
    if any(x <= 0 for x in lam):
        raise ValidationError("lambda lengths must be positive")


def is_valid_lambda(g: Fatgraph, lam: Lambda) -> bool:
    """Strict triangle inequalities in every triangle."""
    if not is_quasi_triangulation(g) or len(lam) != g.n_edges or any(x <= 0 for x in lam):
        return False
    for v, c in enumerate(g.vertices):
        if len(c) == 3:
            a, b, e = (lam[h >> 1] for h in c)
            if not (a < b + e and b < a + e and e < a + b):
                return False
    return True


def h_lengths(g: Fatgraph, lam: Lambda) -> dict[int, Fraction]:
    _check(g, lam)
    out = {}
    for v, c in enumerate(g.vertices):
        if len(c) == 1:
            out[c[0]] = Fraction(2) / lam[c[0] >> 1]
            continue
        for i in range(3):
            x, y, z = c[i], c[(i + 1) % 3], c[(i + 2) % 3]
            out[x] = Fraction(lam[z >> 1]) / (lam[x >> 1] * lam[y >> 1])
    return out


def half_edge_contribution(g: Fatgraph, lam: Lambda, h: int) -> Fraction:
    c = g.vertices[g.vertex_of[h]]
    if len(c) == 1:
        return Fraction(2) / lam[h >> 1]
    i = c.index(h)
    x = Fraction(lam[h >> 1])
    y = Fraction(lam[c[(i + 1) % 3] >> 1])
    z = Fraction(lam[c[(i + 2) % 3] >> 1])
    return (y * y + z * z - x * x) / (x * y * z)


def simplicial_coordinates(g: Fatgraph, lam: Lambda) -> tuple[Fraction, ...]:
    _check(g, lam)
    return tuple(
        half_edge_contribution(g, lam, 2 * e) + half_edge_contribution(g, lam, 2 * e + 1)
        for e in range(g.n_edges)
    )


def projectivize(values: Sequence[Fraction]) -> tuple[Fraction, ...]:
    total = sum(values, Fraction(0))
    if total <= 0:
        raise ValidationError("cannot projectivize a non-positive total")
    return tuple(Fraction(v) / total for v in values)


def complete_to_quasi_triangulation(g: Fatgraph, rng: random.Random | None = None) -> Fatgraph:
    """Add edges ``E .. E''-1`` until every vertex is a triangle or a monogon.

    Collapsing the added edges gives back ``g``.  A punctured vertex of
    valence k >= 2 sprouts a new univalent punctured vertex and becomes
    unpunctured; vertices of valence above three are split off one corner at
    a time.  ``rng`` picks where each split happens.
    """
    if not is_qcd_dual(g):
        raise PreconditionError("only duals of quasi cell decompositions can be completed")
    cycles = [list(c) for c in g.vertices]
    punct = [g.is_punctured_vertex(v) for v in range(len(cycles))]
    n = g.n_edges

    def offset(k):
        return rng.randrange(k) if rng is not None else 0

    for v in range(len(cycles)):
        c = cycles[v]
        if punct[v] and len(c) >= 2:
            i = offset(len(c))
            cycles[v] = c[i:] + c[:i] + [2 * n]
            punct[v] = False
            cycles.append([2 * n + 1])
            punct.append(True)
            n += 1
    v = 0
    while v < len(cycles):
        c = cycles[v]
        if not punct[v] and len(c) > 3:
            i = offset(len(c))
            c = c[i:] + c[:i]
            cycles[v] = [c[0], c[1], 2 * n]
            cycles.append([2 * n + 1] + c[2:])
            punct.append(False)
            n += 1
            continue
        v += 1
    return Fatgraph.from_cycles(cycles, [i for i, p in enumerate(punct) if p])


# -- flips -----------------------------------------------------------------


def ptolemy_flip(g: Fatgraph, lam: Lambda, e: int) -> tuple[Fatgraph, tuple[Fraction, ...]]:
    """Whitehead move on edge ``e``; the new diagonal keeps index ``e``.

    With ``e`` joining u = (h, x1, x2) and w = (h', y1, y2) the result has
    u = (h, x2, y1) and w = (h', y2, x1), and f = (x1*y1 + x2*y2)/e.
    Flipping twice restores lambda and gives the original graph with the two
    half-edges of ``e`` exchanged.
    """
    _check(g, lam)
    h, hh = 2 * e, 2 * e + 1
    u, w = g.vertex_of[h], g.vertex_of[hh]
    if u == w or len(g.vertices[u]) != 3 or len(g.vertices[w]) != 3:
        raise PreconditionError(f"edge {e} is not the diagonal of an embedded quadrilateral")
    x1 = g.rotation[h]
    x2 = g.rotation[x1]
    y1 = g.rotation[hh]
    y2 = g.rotation[y1]
    rot = list(g.rotation)
    rot[h], rot[x2], rot[y1] = x2, y1, h
    rot[hh], rot[y2], rot[x1] = y2, x1, hh
    new = list(lam)
    new[e] = (Fraction(lam[x1 >> 1]) * lam[y1 >> 1] + Fraction(lam[x2 >> 1]) * lam[y2 >> 1]) / lam[e]
    return _rebuild(g, rot), tuple(Fraction(x) for x in new)


def monogon_flip(g: Fatgraph, lam: Lambda, e: int) -> tuple[Fatgraph, tuple[Fraction, ...]]:
    """Move a once-punctured monogon to the other cusp of its bigon.

    ``e`` joins a univalent punctured vertex to a triangle with other sides
    a, b.  The cyclic order at the triangle reverses and e' = (a + b)^2 / e,
    which keeps the horocyclic length at both cusps of the bigon.
    """
    _check(g, lam)
    h, hh = 2 * e, 2 * e + 1
    if g.is_punctured_at(h):
        h, hh = hh, h
    if not g.is_punctured_at(hh) or g.is_punctured_at(h):
        raise PreconditionError(f"edge {e} does not bound a once-punctured monogon")
    a = g.rotation[h]
    b = g.rotation[a]
    rot = list(g.rotation)
    rot[h], rot[b], rot[a] = b, a, h
    new = list(lam)
    s = Fraction(lam[a >> 1]) + lam[b >> 1]
    new[e] = s * s / lam[e]
    return _rebuild(g, rot), tuple(Fraction(x) for x in new)


def _rebuild(g: Fatgraph, rot: list[int]) -> Fatgraph:
    marks = set()
    for v in g.punctured_vertices:
        hs = g.vertices[v]
        # univalent punctured vertices never change under either flip
        marks.add(hs[0])
    return Fatgraph(tuple(rot), frozenset(marks))


def flip_kind(g: Fatgraph, e: int) -> str | None:
    u, w = g.endpoints(e)
    pu, pw = g.is_punctured_vertex(u), g.is_punctured_vertex(w)
    if u == w:
        return None
    if pu and pw:
        return None
    if pu or pw:
        return "monogon"
    return "ptolemy"


def flip(g: Fatgraph, lam: Lambda, e: int):
    kind = flip_kind(g, e)
    if kind == "ptolemy":
        return ptolemy_flip(g, lam, e)
    if kind == "monogon":
        return monogon_flip(g, lam, e)
    raise PreconditionError(f"edge {e} is unflippable (loop or self-folded configuration)")


# -- telescoping ---------------------------------------------------------------


def included_corner(g: Fatgraph, arrive: int, leave: int) -> int:
    """Key of the corner between arriving and departing half-edges."""
    if arrive == leave:
        return arrive
    if g.rotation[arrive] == leave:
        return arrive
    if g.rotation[leave] == arrive:
        return leave
    raise PreconditionError("half-edges are not adjacent at a trivalent vertex")


def telescoping_sum(g: Fatgraph, lam: Lambda, cycle: Sequence[int]) -> tuple[Fraction, Fraction]:
    """(sum of X along the cycle, twice the sum of included h-lengths)."""
    if not is_quasi_efficient(g, cycle):
        raise PreconditionError("cycle is not quasi efficient")
    X = simplicial_coordinates(g, lam)
    hl = h_lengths(g, lam)
    lhs = sum((X[h >> 1] for h in cycle), Fraction(0))
    n = len(cycle)
    rhs = Fraction(0)
    for i in range(n):
        rhs += hl[included_corner(g, cycle[i] ^ 1, cycle[(i + 1) % n])]
    return lhs, 2 * rhs


# -- bounds ------------------------------------------------------------------


def product_bound_check(g: Fatgraph, lam: Lambda) -> bool:
    X = simplicial_coordinates(g, lam)
    return all(lam[e] * X[e] <= 4 for e in range(g.n_edges))


def lower_bound_check(a: Fraction, b: Fraction, e: Fraction, K: Fraction) -> bool | None:
    """Squared form of: 1 <= a,b,e, alpha = a/(be) <= K < 1 imply b,e >= 1/(2 sqrt K).

    Returns None when the hypotheses fail, else whether 4 K min(b,e)^2 >= 1.
    """
    a, b, e, K = Fraction(a), Fraction(b), Fraction(e), Fraction(K)
    tri = a < b + e and b < a + e and e < a + b
    if not (min(a, b, e) >= 1 and 0 < K < 1 and a / (b * e) <= K and tri):
        return None
    m = min(b, e)
    return 4 * K * m * m >= 1


# -- convex hull by flips ------------------------------------------------------


@dataclass(frozen=True)
class QcdResult:
    graph: Fatgraph
    coords: tuple[Fraction, ...]
    flips: int
    collapsed: tuple[int, ...]
    marks: dict = field(default_factory=dict)


def _face_orbit(g: Fatgraph, h: int) -> list[int]:
    out = [h]
    x = g.phi(h)
    while x != h:
        out.append(x)
        x = g.phi(x)
    return out


def _retarget(g: Fatgraph, marks: dict, kinds: dict, avoid: int) -> dict:
    """Move marks off the half-edges of edge ``avoid`` without changing what they mark.

    A ``"b"`` mark names a boundary cycle and moves along its face; a ``"v"``
    mark names a punctured vertex and never needs to move under a flip.
    """
    out = {}
    for key, h in marks.items():
        if kinds[key] == "b" and h >> 1 == avoid:
            alt = [x for x in _face_orbit(g, h) if x >> 1 != avoid]
            if not alt:
                raise InvariantError("a boundary cycle runs only along the flipped edge")
            h = alt[0]
        out[key] = h
    return out


def flip_to_qcd(
    g: Fatgraph,
    lam: Lambda,
    rng: random.Random | None = None,
    cap: int | None = None,
    marks: dict | None = None,
) -> QcdResult:
    """Flip edges with X < 0 until X >= 0, then collapse the X = 0 edges.

    The default policy flips the lowest-index negative edge; pass ``rng`` to
    pick a random negative edge instead.  The cap is 10 * E^2 flips.

    ``marks`` maps keys to ``(kind, half-edge)`` with kind ``"b"`` (a
    boundary cycle through the half-edge) or ``"v"`` (the punctured vertex
    at it); the result reports where each marked puncture ends up.
    """
    _check(g, lam)
    lam = tuple(Fraction(x) for x in lam)
    limit = 10 * g.n_edges ** 2 if cap is None else cap
    kinds = {k: v[0] for k, v in (marks or {}).items()}
    where = {k: v[1] for k, v in (marks or {}).items()}
    for k, h in where.items():
        if kinds[k] == "v" and not g.is_punctured_at(h):
            raise ValidationError(f"mark {k} is not at a punctured vertex")
    n = 0
    while True:
        X = simplicial_coordinates(g, lam)
        neg = [e for e in range(g.n_edges) if X[e] < 0]
        if not neg:
            break
        if n >= limit:
            raise CapExceeded(f"flip_to_qcd exceeded {limit} flips")
        e = rng.choice(neg) if rng is not None else neg[0]
        if flip_kind(g, e) is None:
            raise InvariantError(f"negative coordinate on unflippable edge {e}")
        where = _retarget(g, where, kinds, e)
        g, lam = flip(g, lam, e)
        n += 1
    zeros = [e for e in range(g.n_edges) if X[e] == 0]
    if maximal_quasi_recurrent(g, zeros):
        raise InvariantError("vanishing coordinates contain a quasi efficient cycle")
    alive = list(range(g.n_edges))
    out = g
    for e in sorted(zeros, reverse=True):
        i = alive.index(e)
        moved = {}
        for k, h in where.items():
            if h >> 1 != i:
                moved[k] = h
            elif kinds[k] == "b":
                moved[k] = next(x for x in _face_orbit(out, h) if x >> 1 != i)
            else:
                # the punctured vertex absorbs the other endpoint; follow the rotation there
                moved[k] = out.rotation[h ^ 1]
                if moved[k] >> 1 == i:
                    raise InvariantError("collapsed edge leaves a punctured vertex empty")
        out, emap = collapse_edge(out, i)
        where = {k: 2 * emap[h >> 1] + (h & 1) for k, h in moved.items()}
        alive.remove(e)
    if kinds:
        for k, h in where.items():
            if kinds[k] == "v" and not out.is_punctured_at(h):
                raise InvariantError(f"mark {k} lost its punctured vertex")
    return QcdResult(out, tuple(X[e] for e in alive), n, tuple(zeros), where)


def qcd_key(res: QcdResult) -> tuple:
    colors = [res.coords[h >> 1] for h in range(res.graph.n_half_edges)]
    return canonical_form(res.graph, colors).code


# -- IO ----------------------------------------------------------------------


def assignment_to_csv(values: Sequence[Fraction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "numerator", "denominator"])
    for e, x in enumerate(values):
        x = Fraction(x)
        w.writerow([e, x.numerator, x.denominator])
    return buf.getvalue()


def assignment_from_csv(text: str) -> tuple[Fraction, ...]:
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["edge"]))
    if [int(r["edge"]) for r in rows] != list(range(len(rows))):
        raise ValidationError("edge indices must be 0..E-1")
    return tuple(Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows)


def assignment_to_json(values: Sequence[Fraction]) -> str:
    return json.dumps([[Fraction(x).numerator, Fraction(x).denominator] for x in values])


def assignment_from_json(text: str) -> tuple[Fraction, ...]:
    data = json.loads(text)
    out = []
    for item in data:
        if isinstance(item, (list, tuple)):
            out.append(Fraction(int(item[0]), int(item[1])))
        else:
            out.append(Fraction(str(item)))
    return tuple(out)
