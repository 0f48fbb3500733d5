import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from pgraph.errors import PreconditionError, ValidationError
from pgraph.fatgraph import Fatgraph, genus_one_theta, planar_theta, surface_type
from pgraph.fixtures import edge_range, nested_blobs, random_qcd
from pgraph.limits import random_filtered_screen, random_point
from pgraph.screens import (
    FilteredScreen,
    Screen,
    ScreenPoint,
    boundary,
    classify_relative,
    coalesce_levels,
    face_remove_arc,
    face_split_level,
    filtered_to_screen,
    is_quasi_recurrent,
    is_valid_filtered,
    maximal_quasi_recurrent,
    relative_boundary,
    screen_boundary,
    screen_to_filtered,
    validate_point,
    validate_screen,
)

PENDANT = Fatgraph.from_cycles([(0, 2, 4), (1, 5, 3, 6), (7,)])
PENDANT_PUNCTURED = Fatgraph.from_cycles([(0, 2, 4), (1, 5, 3, 6), (7,)], punctured=[2])


def blobs():
    g, N = nested_blobs()
    r = lambda a, b: edge_range(N, a, b)
    return g, N, r, frozenset(range(g.n_edges))


def example_screens():
    g, N, r, E = blobs()
    A = Screen(g, (E, r("a", "k"), r("a", "g"), r("i", "k"), r("f", "g"), r("b", "e")))
    A2 = Screen(g, (E, r("a", "k"), r("a", "g") | r("i", "k"), r("f", "g") | r("b", "e")))
    expected = (E - r("a", "k"), {N["h"]}, {N["a"]} | r("i", "k"), r("b", "e") | r("f", "g"))
    return g, A, A2, tuple(frozenset(x) for x in expected)


# quasi recurrence


def test_quasi_recurrent_basics():
    # [TRIVIAL]
    assert not is_quasi_recurrent(PENDANT, [3])
    assert is_quasi_recurrent(Fatgraph.from_cycles([(0, 1, 2, 3)]), [0])
    # [PAPER] in G(A) the trivalent end becomes univalent and unpunctured
    assert not is_quasi_recurrent(PENDANT_PUNCTURED, [3])
    # [DERIVED] the pendant bounces at the puncture and returns round the loop
    assert is_quasi_recurrent(PENDANT_PUNCTURED, [3, 0, 1])
    assert is_quasi_recurrent(Fatgraph.from_cycles([(0,), (1,)], punctured=[0, 1]), [0])


def test_maximal_quasi_recurrent():
    # [TRIVIAL] trees prune away
    tree = Fatgraph.from_cycles([(0,), (1, 2), (3,)], punctured=[])
    assert maximal_quasi_recurrent(tree, [0, 1]) == frozenset()
    assert maximal_quasi_recurrent(planar_theta(), [0, 1, 2]) == {0, 1, 2}
    # [DERIVED] the pendant edge prunes away and the theta remains
    assert maximal_quasi_recurrent(PENDANT, range(4)) == {0, 1, 2}


@given(st.integers(0, 10**6))
def test_maximal_quasi_recurrent_is_idempotent(seed):
    rng = random.Random(seed)
    g = random_qcd(rng, rng.choice([2, 4, 6]), rng.choice([0, 2]))
    A = [e for e in range(g.n_edges) if rng.random() < 0.5]
    M = maximal_quasi_recurrent(g, A)
    assert is_quasi_recurrent(g, M)
    assert maximal_quasi_recurrent(g, M) == M
    # maximality: every quasi recurrent subset of A lies inside M
    for e in set(A) - M:
        assert not is_quasi_recurrent(g, M | {e})


# screens and filtered screens


def test_trivial_screen():
    # [TRIVIAL]
    g = planar_theta()
    fs = screen_to_filtered(Screen(g, (frozenset({0, 1, 2}),)))
    assert fs.levels == (frozenset({0, 1, 2}),) and fs.total_level == 0


def test_example_screens_share_filtered_screen():
    # [PAPER] both towers give the same filtered screen
    g, A, A2, expected = example_screens()
    assert screen_to_filtered(A).levels == expected
    assert screen_to_filtered(A2).levels == expected


def test_example_filtered_to_tower():
    # [PAPER] the four-member tower
    g, A, A2, expected = example_screens()
    s = filtered_to_screen(FilteredScreen(g, expected))
    assert set(s.members) == set(A2.members)


def test_nested_chain():
    # [TRIVIAL]
    g, N, r, E = blobs()
    A, B = r("a", "k"), r("i", "k")
    fs = screen_to_filtered(Screen(g, (E, A, B)))
    assert fs.levels == (E - A, A - B, B)


@given(st.integers(0, 10**6))
def test_screen_round_trip(seed):
    # [DERIVED]
    rng = random.Random(seed)
    g = random_qcd(rng, rng.choice([2, 4, 6]), rng.choice([0, 2]))
    fs = random_filtered_screen(g, rng, 4)
    assert screen_to_filtered(filtered_to_screen(fs)) == fs


def test_screen_validation():
    g, N, r, E = blobs()
    with pytest.raises(ValidationError):
        validate_screen(Screen(g, (r("a", "k"),)))
    with pytest.raises(ValidationError):
        validate_screen(Screen(g, (E, r("a", "g"), r("f", "k"))))
    with pytest.raises(ValidationError):
        # a member equal to the union of its proper members
        validate_screen(Screen(g, (E, r("b", "e") | r("f", "g"), r("b", "e"), r("f", "g"))))
    with pytest.raises(ValidationError):
        validate_screen(Screen(PENDANT, (frozenset(range(4)), frozenset({3}))))


def test_filtered_validation():
    g = planar_theta()
    assert not is_valid_filtered(FilteredScreen(g, ({0, 1, 2}, set())))
    assert not is_valid_filtered(FilteredScreen(g, ({0, 1}, {1, 2})))
    assert not is_valid_filtered(FilteredScreen(g, ({0, 1},)))
    assert not is_valid_filtered(FilteredScreen(PENDANT, ({0, 1, 2}, {3})))


def test_point_normalization():
    g, N, r, E = blobs()
    fs = FilteredScreen(g, example_screens()[3])
    pt = ScreenPoint.normalized(fs, [F(i + 1) for i in range(16)])
    validate_point(pt)
    assert sum(pt.weights[e] for e in fs.levels[1]) == 1
    with pytest.raises(ValidationError):
        validate_point(ScreenPoint(fs, [F(1)] * 16))


# boundaries


def test_horocycle_level_is_puncture_parallel():
    # [TRIVIAL] the triangle bounds a face of the whole graph
    g, N, r, E = blobs()
    fs = FilteredScreen(g, (E - r("i", "k"), r("i", "k")))
    kinds = [c.kind for c in classify_relative(fs, 0)]
    assert kinds == ["puncture-parallel"]
    assert relative_boundary(fs, 0) == []


def test_nonseparating_simple_cycle_is_one_curve():
    # [PAPER] a simple cycle that is no component one level up counts once
    g = genus_one_theta()
    fs = FilteredScreen(g, ({2}, {0, 1}))
    curves = relative_boundary(fs, 0)
    assert len(curves) == 1 and curves[0].edges == {0, 1}


def test_genus_one_subgraph_in_two_punctured_torus():
    # [DERIVED] the theta has one face, which is not a face of the whole graph
    g = Fatgraph.from_cycles([(0, 2, 4, 6), (1, 3, 5), (7,)], punctured=[2])
    F12 = surface_type(g)
    assert (F12.genus, F12.punctures) == (1, 2)
    fs = FilteredScreen(g, ({3}, {0, 1, 2}))
    curves = relative_boundary(fs, 0)
    assert len(curves) == 1 and curves[0].kind == "essential"
    assert curves[0].edges == {0, 1, 2}


def test_screen_boundary_agrees_with_filtered():
    g, A, A2, expected = example_screens()
    fs = FilteredScreen(g, expected)
    assert {c.key for c in boundary(fs)} == {c.key for c in screen_boundary(A2)}


# face operations


def test_remove_arc_total_level_zero():
    # [TRIVIAL]
    g = Fatgraph.from_cycles([(0, 2, 4, 6), (1, 5, 3, 7)])
    out = face_remove_arc(FilteredScreen(g, ({0, 1, 2, 3},)), 0)
    assert out.total_level == 0 and out.graph.n_edges == 3


def test_remove_arc_precondition():
    # [TRIVIAL] both ends of h touch deeper levels
    g, N, r, E = blobs()
    fs = FilteredScreen(g, example_screens()[3])
    with pytest.raises(PreconditionError):
        face_remove_arc(fs, N["a"])


def test_remove_arc_example():
    # [DERIVED] l joins the hub (all level 0) to a square vertex
    g, N, r, E = blobs()
    fs = FilteredScreen(g, example_screens()[3])
    out = face_remove_arc(fs, N["l"])
    assert [len(L) for L in out.levels] == [4, 1, 4, 6]
    assert out.graph.n_edges == 15


def test_split_level():
    # [TRIVIAL]
    g = Fatgraph.from_cycles([(0, 1, 2, 3)])
    out = face_split_level(FilteredScreen(g, ({0, 1},)), 0, {1})
    assert out.levels == ({0}, {1})
    with pytest.raises(PreconditionError):
        face_split_level(FilteredScreen(g, ({0, 1},)), 0, {0, 1})


def test_split_example_level():
    # [DERIVED] i-k with the deepest level is a union of cycles
    g, N, r, E = blobs()
    fs = FilteredScreen(g, example_screens()[3])
    out = face_split_level(fs, 2, r("i", "k"))
    assert out.total_level == 4
    assert out.levels[2] == {N["a"]} and out.levels[3] == r("i", "k")
    assert coalesce_levels(out, 2) == fs


@given(st.integers(0, 10**6))
def test_face_operations_stay_valid(seed):
    rng = random.Random(seed)
    g = random_qcd(rng, rng.choice([2, 4, 6]), rng.choice([0, 2]))
    fs = random_filtered_screen(g, rng, 3)
    for k in range(fs.total_level):
        assert is_valid_filtered(coalesce_levels(fs, k))
    for e in range(g.n_edges):
        try:
            out = face_remove_arc(fs, e)
        except PreconditionError:
            continue
        assert is_valid_filtered(out)
        assert surface_type(out.graph) == surface_type(g)


@given(st.integers(0, 10**6))
def test_random_points_are_valid(seed):
    rng = random.Random(seed)
    g = random_qcd(rng, rng.choice([2, 4]), 0)
    validate_point(random_point(random_filtered_screen(g, rng, 3), rng))


def test_filtered_json_round_trip():
    g, A, A2, expected = example_screens()
    fs = FilteredScreen(g, expected)
    assert FilteredScreen.from_dict(fs.to_dict()) == fs
