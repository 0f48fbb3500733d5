import random
from collections import Counter
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from pgraph.coords import (
    assignment_from_csv,
    assignment_from_json,
    assignment_to_csv,
    assignment_to_json,
    complete_to_quasi_triangulation,
    flip,
    flip_kind,
    flip_to_qcd,
    h_lengths,
    is_quasi_triangulation,
    is_valid_lambda,
    lower_bound_check,
    monogon_flip,
    product_bound_check,
    projectivize,
    ptolemy_flip,
    qcd_key,
    simplicial_coordinates,
    telescoping_sum,
)
from pgraph.errors import CapExceeded, PreconditionError, ValidationError
from pgraph.fatgraph import Fatgraph, collapse_edges, is_quasi_efficient, isomorphic, planar_theta, surface_type
from pgraph.fixtures import random_qcd, random_quasi_triangulation
from pgraph.screens import maximal_quasi_recurrent

from oracles import faces_by_hand, random_lambda

TRIANGLE_WITH_MONOGONS = Fatgraph.from_cycles([(0, 2, 4), (1,), (3,), (5,)], punctured=[1, 2, 3])


def random_instance(rng, monogons=True):
    t = rng.choice([2, 4, 6])
    m = rng.choice([0, 0, 2]) if monogons else 0
    g = random_quasi_triangulation(rng, t, m)
    return g, random_lambda(rng, g)


def random_closed_walk(rng, g, tries=50):
    """A random quasi efficient closed walk, or a boundary cycle as fallback."""
    for _ in range(tries):
        start = rng.randrange(g.n_half_edges)
        walk = [start]
        for _ in range(40):
            x = walk[-1] ^ 1
            v = g.vertex_of[x]
            opts = [y for y in g.vertices[v] if y != x or g.is_punctured_vertex(v)]
            y = rng.choice(opts)
            if y == start:
                return walk
            walk.append(y)
    face = g.boundary_cycles[rng.randrange(len(g.boundary_cycles))]
    return list(face)


def horocycles(g, lam):
    H = h_lengths(g, lam)
    return Counter(sum(H[h ^ 1] for h in face) for face in faces_by_hand(g.rotation))


# h-lengths


def test_h_length_corner_formula():
    # [TRIVIAL] alpha = a / (b e)
    g = TRIANGLE_WITH_MONOGONS
    lam = [F(2), F(1), F(1)]
    H = h_lengths(g, lam)
    # corner keyed by 2 lies between sides 1 and 2, opposite side 0
    assert H[2] == 2
    assert H[0] == F(1, 2) and H[4] == F(1, 2)


def test_h_length_monogon():
    # [TRIVIAL] 2 / e at a once-punctured monogon
    g = TRIANGLE_WITH_MONOGONS
    H = h_lengths(g, [F(4), F(4), F(4)])
    assert H[1] == F(1, 2)


def test_h_lengths_all_ones():
    # [TRIVIAL]
    H = h_lengths(planar_theta(), [F(1)] * 3)
    assert set(H.values()) == {1}


# simplicial coordinates


def test_coordinate_all_ones():
    # [TRIVIAL] two triangle sides contribute 1 each
    assert simplicial_coordinates(planar_theta(), [F(1)] * 3) == (2, 2, 2)


def test_coordinate_monogon_case():
    # [TRIVIAL] 1 from the triangle plus 2 from the monogon
    assert simplicial_coordinates(TRIANGLE_WITH_MONOGONS, [F(1)] * 3) == (3, 3, 3)


def test_theta_projectivized():
    # [DERIVED]
    X = simplicial_coordinates(planar_theta(), [F(1)] * 3)
    assert projectivize(X) == (F(1, 3),) * 3


def test_horocycle_equals_corner_sum():
    # [DERIVED] on the theta each cusp sees two corners of h-length 1
    assert horocycles(planar_theta(), [F(1)] * 3) == Counter({F(2): 3})


# flips


def _quad_with_distinct_sides(rng):
    while True:
        g = random_quasi_triangulation(rng, 4)
        for e in range(g.n_edges):
            if flip_kind(g, e) != "ptolemy":
                continue
            x1 = g.rotation[2 * e]
            x2 = g.rotation[x1]
            y1 = g.rotation[2 * e + 1]
            y2 = g.rotation[y1]
            if len({x1 >> 1, x2 >> 1, y1 >> 1, y2 >> 1, e}) == 5:
                return g, e, (x1, x2, y1, y2)


def test_ptolemy_all_ones():
    # [TRIVIAL] (1 + 1) / 1
    g, e, _ = _quad_with_distinct_sides(random.Random(1))
    _, lam = ptolemy_flip(g, [F(1)] * g.n_edges, e)
    assert lam[e] == 2


def test_ptolemy_arithmetic():
    # [TRIVIAL] (a c + b d) / e with a, c and b, d opposite
    g, e, (x1, x2, y1, y2) = _quad_with_distinct_sides(random.Random(2))
    lam = [F(1)] * g.n_edges
    # x2 and y1 meet at the cusp of the face through 2e, so x1 is opposite y1
    assert any(2 * e in f and (x2 ^ 1) in f for f in g.boundary_cycles)
    lam[x1 >> 1], lam[x2 >> 1], lam[y1 >> 1], lam[y2 >> 1], lam[e] = F(2), F(3), F(5), F(7), F(11)
    _, new = ptolemy_flip(g, lam, e)
    assert new[e] == F(31, 11)


@given(st.integers(0, 10**6))
def test_ptolemy_involution(seed):
    # [TRIVIAL] e = (ac + bd) / f
    rng = random.Random(seed)
    g, lam = random_instance(rng, monogons=False)
    e = rng.choice([e for e in range(g.n_edges) if flip_kind(g, e) == "ptolemy"] or [None])
    if e is None:
        return
    g1, lam1 = ptolemy_flip(g, lam, e)
    g2, lam2 = ptolemy_flip(g1, lam1, e)
    assert tuple(lam2) == tuple(lam)
    assert isomorphic(g2, g)


@given(st.integers(0, 10**6))
def test_monogon_flip_involution(seed):
    # [DERIVED] both flips keep the horocycle lengths, so two flips restore lambda
    rng = random.Random(seed)
    g = random_quasi_triangulation(rng, 2, 2)
    lam = random_lambda(rng, g)
    es = [e for e in range(g.n_edges) if flip_kind(g, e) == "monogon"]
    if not es:
        return
    e = rng.choice(es)
    g1, lam1 = monogon_flip(g, lam, e)
    g2, lam2 = monogon_flip(g1, lam1, e)
    assert tuple(lam2) == tuple(lam)
    assert isomorphic(g2, g)


@given(st.integers(0, 10**6))
def test_flips_preserve_horocycles(seed):
    # [DERIVED] cusp lengths are flip invariants
    rng = random.Random(seed)
    g, lam = random_instance(rng)
    ref = horocycles(g, lam)
    for _ in range(5):
        es = [e for e in range(g.n_edges) if flip_kind(g, e)]
        if not es:
            break
        g, lam = flip(g, lam, rng.choice(es))
        assert horocycles(g, lam) == ref


def test_unflippable_loop():
    g = Fatgraph.from_cycles([(0, 1, 2), (3,)], punctured=[1])
    assert flip_kind(g, 0) is None
    with pytest.raises(PreconditionError):
        flip(g, [F(1), F(1)], 0)


# telescoping


def test_telescoping_theta_two_edge_cycle():
    # [DERIVED]
    assert telescoping_sum(planar_theta(), [F(1)] * 3, [0, 3]) == (4, 4)


def test_telescoping_loop():
    # [TRIVIAL] a one-edge cycle around a loop
    rng = random.Random(5)
    for _ in range(50):
        g, lam = random_instance(rng)
        loops = [e for e in range(g.n_edges) if g.is_loop(e)]
        for e in loops:
            for h in (2 * e, 2 * e + 1):
                if is_quasi_efficient(g, [h]):
                    a, b = telescoping_sum(g, lam, [h])
                    assert a == b


@given(st.integers(0, 10**6))
def test_telescoping_random(seed):
    # [DERIVED]
    rng = random.Random(seed)
    g, lam = random_instance(rng)
    cyc = random_closed_walk(rng, g)
    a, b = telescoping_sum(g, lam, cyc)
    assert a == b


def test_telescoping_rejects_backtrack():
    with pytest.raises(PreconditionError):
        telescoping_sum(planar_theta(), [F(1)] * 3, [0, 1])


# bounds


def test_product_bound_theta():
    # [TRIVIAL]
    assert product_bound_check(planar_theta(), [F(1)] * 3)


@given(st.integers(0, 10**6))
def test_product_bound_random(seed):
    # [DERIVED]
    rng = random.Random(seed)
    g, lam = random_instance(rng)
    assert product_bound_check(g, lam)


def test_product_bound_needs_validity():
    # [TRIVIAL] invalid lengths can exceed the bound
    lam = [F(1), F(1), F(10)]
    assert not is_valid_lambda(planar_theta(), lam)
    assert not product_bound_check(planar_theta(), lam)


@pytest.mark.parametrize("K", [F(1, 4), F(1, 9), F(1, 100)])
def test_lower_bound(K):
    # [DERIVED] exhaustive small grid
    rng = random.Random(int(1 / K))
    hits = 0
    for _ in range(3000):
        a, b, e = (F(rng.randint(4, 400), rng.randint(1, 4)) for _ in range(3))
        r = lower_bound_check(a, b, e, K)
        if r is not None:
            hits += 1
            assert r
    assert hits > 0


def test_lower_bound_hypotheses():
    assert lower_bound_check(F(1), F(1), F(1), F(1, 4)) is None


# convex hull


def test_flip_to_qcd_identity():
    # [TRIVIAL]
    g = planar_theta()
    res = flip_to_qcd(g, [F(1)] * 3)
    assert res.flips == 0 and res.graph == g and res.coords == (2, 2, 2)


@given(st.integers(0, 10**6))
def test_one_inverse_flip_is_undone(seed):
    # [DERIVED] flip a positive instance once and recover it
    rng = random.Random(seed)
    g = random_quasi_triangulation(rng, rng.choice([2, 4]), 0)
    lam = [F(1)] * g.n_edges
    ref = flip_to_qcd(g, lam)
    es = [e for e in range(g.n_edges) if flip_kind(g, e) == "ptolemy"]
    if not es:
        return
    h, lam2 = flip(g, lam, rng.choice(es))
    X = simplicial_coordinates(h, lam2)
    res = flip_to_qcd(h, lam2)
    assert (res.flips >= 1) == any(x < 0 for x in X)
    assert qcd_key(res) == qcd_key(ref)


@given(st.integers(0, 10**6))
def test_flip_to_qcd_confluence(seed):
    # [DERIVED]
    rng = random.Random(seed)
    g, lam = random_instance(rng)
    a = flip_to_qcd(g, lam, rng=random.Random(seed + 1))
    b = flip_to_qcd(g, lam, rng=random.Random(seed + 2))
    assert all(x > 0 for x in a.coords)
    assert qcd_key(a) == qcd_key(b)
    assert not maximal_quasi_recurrent(a.graph, [])


def test_flip_cap():
    rng = random.Random(7)
    for _ in range(200):
        g, lam = random_instance(rng)
        if any(x < 0 for x in simplicial_coordinates(g, lam)):
            with pytest.raises(CapExceeded):
                flip_to_qcd(g, lam, cap=0)
            return
    pytest.fail("no instance with a negative coordinate")


def test_flip_to_qcd_marks_follow_punctures():
    rng = random.Random(11)
    for _ in range(30):
        g, lam = random_instance(rng)
        marks = {i: ("b", f[0]) for i, f in enumerate(g.boundary_cycles)}
        res = flip_to_qcd(g, lam, marks=marks)
        assert len(set(res.marks.values())) == len(marks)
        faces = {res.graph.face_of[h] for h in res.marks.values()}
        assert len(faces) == len(res.graph.boundary_cycles)


# completion


@given(st.integers(0, 10**6))
def test_completion_collapses_back(seed):
    # [DERIVED]
    rng = random.Random(seed)
    g = random_qcd(rng, rng.choice([2, 4]), rng.choice([0, 2]), collapse=0.5)
    full = complete_to_quasi_triangulation(g, rng)
    assert is_quasi_triangulation(full)
    back, _ = collapse_edges(full, range(g.n_edges, full.n_edges))
    assert isomorphic(back, g)


def test_completion_rejects_non_qcd():
    with pytest.raises(PreconditionError):
        complete_to_quasi_triangulation(Fatgraph.from_cycles([(0, 1)]))


# io


def test_assignment_round_trips():
    vals = (F(1, 3), F(2), F(7, 5))
    assert assignment_from_csv(assignment_to_csv(vals)) == vals
    assert assignment_from_json(assignment_to_json(vals)) == vals


def test_assignment_csv_rejects_gaps():
    with pytest.raises(ValidationError):
        assignment_from_csv("edge,numerator,denominator\n0,1,1\n2,1,1\n")


def test_lambda_validation():
    with pytest.raises(ValidationError):
        simplicial_coordinates(planar_theta(), [F(1), F(1)])
    with pytest.raises(ValidationError):
        simplicial_coordinates(planar_theta(), [F(1), F(-1), F(1)])
