"""Named fatgraphs used by tests, the CLI and documentation.

``nested_blobs`` is a planar model realizing the labeled subgraph ``a..k``
used to illustrate screens: a square ``b c d e``, a bigon ``f g`` joined to
it by ``a``, a triangle ``i j k`` joined by ``h``, and a five-valent hub
carrying ``l m n o p``.  All three small cycles bound clean faces, so the
triangle is a horocycle.
"""

from __future__ import annotations

from .fatgraph import Fatgraph

NAMES = "abcdefghijklmnop"


def nested_blobs() -> tuple[Fatgraph, dict[str, int]]:
    cycles = [
        (2, 9, 24),  # v1: b e m
        (4, 3, 14),  # v2: c b h
        (6, 5, 22),  # v3: d c l
        (8, 7, 0),  # v4: e d a
        (10, 13, 1),  # w1: f g a
        (12, 11, 26),  # w2: g f n
        (16, 21, 15),  # t1: i k h
        (18, 17, 28),  # t2: j i o
        (20, 19, 30),  # t3: k j p
        (23, 31, 29, 25, 27),  # hub: l p o m n
    ]
    return Fatgraph.from_cycles(cycles), {c: i for i, c in enumerate(NAMES)}


def edge_range(names: dict[str, int], first: str, last: str) -> frozenset[int]:
    """Edges lexicographically between two labels, inclusive."""
    return frozenset(i for c, i in names.items() if first <= c <= last)


def random_quasi_triangulation(rng, trivalent: int, monogons: int = 0, tries: int = 1000) -> Fatgraph:
    """Connected random quasi triangulation with the given vertex counts."""
    n = 3 * trivalent + monogons
    if n % 2 or n == 0 or monogons > trivalent + 2 or (trivalent == 0 and monogons != 2):
        raise ValueError("no connected quasi triangulation with these vertex counts")
    from .fatgraph import is_connected

    for _ in range(tries):
        hs = list(range(n))
        rng.shuffle(hs)
        # pair consecutive shuffled slots into edges; slot i sits at vertex i // 3
        slot_to_half = {}
        for e in range(n // 2):
            slot_to_half[hs[2 * e]] = 2 * e
            slot_to_half[hs[2 * e + 1]] = 2 * e + 1
        cycles = [[slot_to_half[3 * v + j] for j in range(3)] for v in range(trivalent)]
        cycles += [[slot_to_half[3 * trivalent + j]] for j in range(monogons)]
        g = Fatgraph.from_cycles(cycles, range(trivalent, trivalent + monogons))
        if is_connected(g):
            return g
    raise RuntimeError("no connected graph found")


def random_qcd(rng, trivalent: int, monogons: int = 0, collapse: float = 0.3) -> Fatgraph:
    """Random q.c.d. dual: a quasi triangulation with a random forest collapsed."""
    from .fatgraph import collapse_edges
    from .screens import maximal_quasi_recurrent

    g = random_quasi_triangulation(rng, trivalent, monogons)
    pick = [e for e in range(g.n_edges) if rng.random() < collapse and not g.is_loop(e)]
    parent = list(range(len(g.vertices)))
    punct = [g.is_punctured_vertex(v) for v in range(len(g.vertices))]

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    forest = []
    for e in pick:
        a, b = (find(v) for v in g.endpoints(e))
        if a == b or (punct[a] and punct[b]):
            continue
        parent[a] = b
        punct[b] = punct[a] or punct[b]
        forest.append(e)
    assert not maximal_quasi_recurrent(g, forest)
    return collapse_edges(g, forest)[0]
