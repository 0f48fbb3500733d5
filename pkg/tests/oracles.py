"""Brute-force reference computations used by the tests.

Nothing here calls into the algorithms under test beyond reading the raw
rotation data of a fatgraph.
"""

import itertools
import math
from fractions import Fraction


def faces_by_hand(rotation):
    """Orbits of h -> rotation[h ^ 1], traced directly."""
    n = len(rotation)
    seen, out = set(), []
    for h in range(n):
        if h in seen:
            continue
        cyc, x = [], h
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = rotation[x ^ 1]
        out.append(cyc)
    return out


def brute_automorphisms(g):
    """Half-edge bijections commuting with rotation and the edge involution."""
    n = g.n_half_edges
    rot = g.rotation
    count = 0
    for perm in itertools.permutations(range(n)):
        if any(perm[h ^ 1] != perm[h] ^ 1 for h in range(n)):
            continue
        if any(perm[rot[h]] != rot[perm[h]] for h in range(n)):
            continue
        if any(g.is_punctured_at(h) != g.is_punctured_at(perm[h]) for h in range(n)):
            continue
        count += 1
    return count


def random_edge_respecting_perm(rng, n):
    edges = list(range(n // 2))
    rng.shuffle(edges)
    perm = [0] * n
    for e, f in enumerate(edges):
        flip = rng.random() < 0.5
        perm[2 * e] = 2 * f + flip
        perm[2 * e + 1] = 2 * f + (not flip)
    return perm


def random_lambda(rng, g, tries=200):
    """Random positive rationals satisfying every triangle inequality."""
    from pgraph.coords import is_valid_lambda

    for _ in range(tries):
        lam = [Fraction(rng.randint(10, 40), rng.randint(1, 4)) for _ in range(g.n_edges)]
        if is_valid_lambda(g, lam):
            return lam
    # all-equal lengths always satisfy the inequalities
    return [Fraction(1)] * g.n_edges


def quasi_efficient_walks(g, max_len):
    """Every closed non-backtracking (except at punctures) walk up to max_len."""
    hs = range(g.n_half_edges)
    out = []
    for L in range(1, max_len + 1):
        for walk in itertools.product(hs, repeat=L):
            ok = True
            for i in range(L):
                x, y = walk[i] ^ 1, walk[(i + 1) % L]
                if g.vertex_of[x] != g.vertex_of[y] or (x == y and not g.is_punctured_at(x)):
                    ok = False
                    break
            if ok:
                out.append(walk)
    return out


def _cycles(perm):
    seen, out = set(), []
    for h in range(len(perm)):
        if h not in seen:
            cyc, x = [], h
            while x not in seen:
                seen.add(x)
                cyc.append(x)
                x = perm[x]
            out.append(cyc)
    return out


def fatgraph_mass(g, s):
    """Sum of (-1)^(E-1)/|Aut| over fatgraphs of type (g, s), by counting labeled rotations.

    Each class with automorphism group A appears 2^E E!/|A| times among
    rotation systems on a fixed set of E labeled edges.
    """
    total = Fraction(0)
    for E in range(1, 6 * g + 3 * s - 6 + 1):
        n = 2 * E
        hits = 0
        for rot in itertools.permutations(range(n)):
            verts = _cycles(rot)
            if any(len(v) < 3 for v in verts):
                continue
            if len(faces_by_hand(rot)) != s or len(verts) - E + s != 2 - 2 * g:
                continue
            where = {h: i for i, v in enumerate(verts) for h in v}
            parent = list(range(len(verts)))

            def find(x):
                while parent[x] != x:
                    x = parent[x]
                return x

            for h in range(0, n, 2):
                parent[find(where[h])] = find(where[h + 1])
            if len({find(i) for i in range(len(verts))}) == 1:
                hits += 1
        total += Fraction((-1) ** (E - 1) * hits, 2**E * math.factorial(E))
    return total
