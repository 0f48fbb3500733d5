"""Acceptance criteria C1-C9, each timed and reported on one PASS/FAIL line.

Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
"""

import os
import random
import sys
import time
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pgraph.census import assemble_pg_complex, enumerate_fatgraphs, harer_zagier_euler, homology, orbifold_euler, reduced_betti, valence_profile
from pgraph.coords import flip_kind, flip_to_qcd, lower_bound_check, product_bound_check, ptolemy_flip, qcd_key, simplicial_coordinates, telescoping_sum
from pgraph.fatgraph import canonical_form, isomorphic, surface_type
from pgraph.fixtures import random_qcd
from pgraph.limits import construct_path, limiting_point, random_filtered_screen, random_point
from pgraph.orient import chi_of_psi, psi
from pgraph.pairing import pi_equivalent, project_pi
from pgraph.screens import maximal_quasi_recurrent, screen_to_filtered

import suites
from limits_helpers import random_triple
from test_coords import random_closed_walk, random_instance
from test_pairing import example_points
from test_screens import example_screens


LINES = []


def report(name, ok, seconds, budget, detail=""):
    ok = ok and (budget is None or seconds < budget)
    limit = f" (budget {budget} s)" if budget else ""
    line = f"{name} {'PASS' if ok else 'FAIL'} {seconds:.2f} s{limit} {detail}".rstrip()
    LINES.append(line)
    return ok


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# C1: instances are generated up front and only the checks are timed


def ptolemy_instances(n=500):
    rng = random.Random(11)
    out = []
    while len(out) < n:
        g, lam = random_instance(rng, monogons=False)
        es = [e for e in range(g.n_edges) if flip_kind(g, e) == "ptolemy"]
        if es:
            out.append((g, lam, rng.choice(es)))
    return out


def ptolemy_involutions(cases):
    for g, lam, e in cases:
        g1, lam1 = ptolemy_flip(g, lam, e)
        g2, lam2 = ptolemy_flip(g1, lam1, e)
        if tuple(lam2) != tuple(lam) or not isomorphic(g2, g):
            return False
    return True


def telescoping_instances(n=500):
    rng = random.Random(12)
    out = []
    for _ in range(n):
        g, lam = random_instance(rng)
        out.append((g, lam, random_closed_walk(rng, g)))
    return out


def telescoping(cases):
    return all(a == b for a, b in (telescoping_sum(g, lam, w) for g, lam, w in cases))


def bound_instances(n=500):
    rng = random.Random(13)
    return [random_instance(rng) for _ in range(n)]


def product_bound(cases):
    return all(product_bound_check(g, lam) for g, lam in cases)


def lower_bound_instances(n=2000):
    rng = random.Random(14)
    return [tuple(F(rng.randint(4, 400), rng.randint(1, 4)) for _ in range(3)) for _ in range(n)]


def lower_bounds(cases):
    for K in (F(1, 4), F(1, 9), F(1, 100)):
        results = [lower_bound_check(a, b, e, K) for a, b, e in cases]
        if False in results or True not in results:
            return False
    return True


def test_c1_exact_identities():
    oks = []
    for label, make, check in [
        ("ptolemy", ptolemy_instances, ptolemy_involutions),
        ("telescoping", telescoping_instances, telescoping),
        ("lambda*X<=4", bound_instances, product_bound),
        ("lower bound", lower_bound_instances, lower_bounds),
    ]:
        cases = make()
        ok, dt = timed(lambda: check(cases))
        oks.append(report(f"C1 {label}", ok, dt, 1.0, f"n={len(cases)}"))
    assert all(oks)


# C2


def flip_suite(n=200):
    rng = random.Random(21)
    for i in range(n):
        g, lam = random_instance(rng)
        a = flip_to_qcd(g, lam, rng=random.Random(2 * i))
        b = flip_to_qcd(g, lam, rng=random.Random(2 * i + 1))
        if qcd_key(a) != qcd_key(b) or any(x < 0 for x in a.coords):
            return False
        zero = {e for e, x in enumerate(a.coords) if x == 0}
        if maximal_quasi_recurrent(a.graph, zero):
            return False
    return True


def test_c2_flip_to_qcd():
    ok, dt = timed(flip_suite)
    assert report("C2 flip_to_qcd", ok, dt, 10.0)


# C3


def round_trips(n=300):
    rng = random.Random(31)
    for i in range(n):
        g, sub, pt = random_triple(rng)
        p = construct_path(g, sub, pt, random.Random(3 * i))
        fs, q, tr = limiting_point(p)
        if fs != pt.screen or q != pt or tr.D[-1]:
            return False
        for k, D in enumerate(tr.D[:-1]):
            parts = [tr.C[k], tr.Z[k], tr.B[k], tr.D[k + 1]]
            if sum(map(len, parts)) != len(D) or frozenset().union(*parts) != D:
                return False
        other = limiting_point(construct_path(g, sub, pt, random.Random(3 * i + 1)))[:2]
        if other != (fs, q):
            return False
    return True


def test_c3_limits_round_trip():
    ok, dt = timed(round_trips)
    assert report("C3 limits round trip", ok, dt, 30.0)


# C4


def examples():
    g, A, A2, expected = example_screens()
    if screen_to_filtered(A).levels != expected or screen_to_filtered(A2).levels != expected:
        return False
    g, N, p, q = example_points()
    a = project_pi(p)
    if a.key() != project_pi(q).key() or not pi_equivalent(p, q):
        return False
    small = next(c for c in a.components if c.graph.n_edges == 3)
    big = next(c for c in a.components if c.graph.n_edges == 6)
    return sorted(small.projective_weights()) == [F(1, 28), F(13, 28), F(14, 28)] and sorted(big.projective_weights()) == [
        F(x, 78) for x in (8, 12, 13, 14, 15, 16)
    ]


def test_c4_examples():
    ok, dt = timed(examples)
    assert report("C4 worked examples", ok, dt, None)


# C5, C6


def test_c5_nest_calculus():
    stats, dt = timed(lambda: suites.nest_calculus(6, 3))
    detail = f"graphs={stats['graphs']} nests={stats['nests']} C(M)={stats['C(M)']}"
    assert report("C5 nest calculus", stats["flows"] == stats["nests"] > 0, dt, 60.0, detail)


def test_c6_orientation_calculus():
    stats, dt = timed(lambda: suites.orientation_calculus(6, 3))
    detail = f"orientations={stats['orientations']} realizable={stats['realizable']}"
    assert report("C6 orientation calculus", stats["flows"] == stats["realizable"] > 0, dt, None, detail)


# C7


def commuting(n=200):
    rng = random.Random(5)
    done = 0
    while done < n:
        g = random_qcd(rng, rng.choice([2, 2, 4]), 0, collapse=0.3)
        s = surface_type(g)
        if (s.genus, s.punctures) not in [(0, 3), (0, 4), (1, 1)]:
            continue
        pt = random_point(random_filtered_screen(g, rng, 3), rng)
        if chi_of_psi(psi(pt)).key() != project_pi(pt).key():
            return False
        done += 1
    return True


def test_c7_chi_psi():
    ok, dt = timed(commuting)
    assert report("C7 chi psi = pi", ok, dt, 30.0)


# C8


def census_anchor():
    got = sorted((valence_profile(f), canonical_form(f).aut) for f in enumerate_fatgraphs(1, 1))
    chi = orbifold_euler(1, 1)
    return got == [((3, 3), 6), ((4,), 4)] and chi == F(1, 6) - F(1, 4) == harer_zagier_euler(1, 1) == F(-1, 12)


def test_c8_census():
    ok, dt = timed(census_anchor)
    assert report("C8 census anchors", ok, dt, 10.0)


# C9

SNAPSHOT = {0: 6, 1: 9, 2: 4}


def topology():
    C = assemble_pg_complex(0, 3, quotient=False)
    b = homology(C)  # raises if the boundary does not square to zero
    return C.counts() == SNAPSHOT and all(v == 0 for v in reduced_betti(b).values())


def test_c9_topology():
    ok, dt = timed(topology)
    assert report("C9 (0,3) complex contractible", ok, dt, 60.0, f"cells={SNAPSHOT}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
