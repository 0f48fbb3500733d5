import random
from fractions import Fraction as F

from hypothesis import given, strategies as st

from pgraph.fatgraph import Fatgraph, loop_at_punctured, planar_theta, surface_type
from pgraph.fixtures import NAMES, edge_range, nested_blobs, random_qcd
from pgraph.limits import random_filtered_screen, random_point
from pgraph.pairing import (
    Component,
    PairedFatgraph,
    boundary_arrows,
    pg_membership,
    pi_equivalent,
    project_pi,
    single,
    supported_by,
    validate_pairing,
)
from pgraph.screens import FilteredScreen, ScreenPoint


def comp(g):
    return Component(g, tuple(range(g.n_half_edges)), (F(1),) * g.n_edges)


def pair(*slots):
    return frozenset(slots)


def two_components(pairs):
    return PairedFatgraph((comp(planar_theta()), comp(loop_at_punctured())), frozenset(pairs))


def chain(n, cyclic=False):
    """Punctured loops where the boundary of component i meets the puncture of i + 1."""
    comps = tuple(comp(loop_at_punctured()) for _ in range(n))
    pairs = [pair((i, "b", 0), (i + 1, "v", 0)) for i in range(n - 1)]
    if cyclic:
        pairs.append(pair((n - 1, "b", 0), (0, "v", 0)))
    return PairedFatgraph(comps, frozenset(pairs))


def example_points():
    g, N = nested_blobs()
    r = lambda a, b: edge_range(N, a, b)
    E = frozenset(range(16))
    ag, ik = r("a", "g"), r("i", "k")
    raw = [F(i + 1) for i in range(16)]
    p = ScreenPoint.normalized(FilteredScreen(g, (E - ag - ik, ag, ik)), raw)
    q = ScreenPoint.normalized(FilteredScreen(g, (E - ag - ik, ik, ag)), raw)
    return g, N, p, q


# validation


def test_vertex_boundary_pair_valid():
    # [PAPER] a puncture paired with a boundary cycle
    pg = two_components([pair((0, "b", 0), (1, "v", 0))])
    assert validate_pairing(pg) == (True, [])
    F04 = pg.nodal_type()
    assert (F04.genus, F04.punctures, F04.euler) == (0, 4, -2)


def test_boundary_boundary_invalid():
    # [TRIVIAL]
    ok, why = validate_pairing(two_components([pair((0, "b", 0), (1, "b", 0))]))
    assert not ok and why


def test_slot_used_twice_invalid():
    # [TRIVIAL]
    ok, _ = validate_pairing(two_components([pair((0, "b", 0), (1, "v", 0)), pair((0, "b", 1), (1, "v", 0))]))
    assert not ok


def test_unknown_slot_invalid():
    ok, _ = validate_pairing(two_components([pair((0, "b", 3), (1, "v", 7))]))
    assert not ok


# support


def test_single_component_support():
    # [TRIVIAL]
    pg = single(planar_theta())
    assert supported_by(pg, surface_type(planar_theta()))
    assert not supported_by(pg, surface_type(Fatgraph.from_cycles([(0, 2, 4), (1, 3, 5)])))


def test_disconnected_not_supported():
    # [TRIVIAL]
    pg = two_components([])
    assert not supported_by(pg, pg.nodal_type())


def test_zero_euler_component_not_supported():
    # [TRIVIAL]
    pg = single(Fatgraph.from_cycles([(0, 1)]))
    assert not supported_by(pg, pg.nodal_type())


# membership


def test_single_is_member():
    # [TRIVIAL]
    assert pg_membership(single(planar_theta()))


def test_two_cycle_not_member():
    # [TRIVIAL]
    assert boundary_arrows(chain(2, cyclic=True)) == {(0, 1), (1, 0)}
    assert not pg_membership(chain(2, cyclic=True))


def test_chain_is_member():
    # [TRIVIAL]
    assert pg_membership(chain(3))


# the projection


def test_total_level_zero_projection():
    # [TRIVIAL]
    g = planar_theta()
    pt = ScreenPoint.normalized(FilteredScreen(g, ({0, 1, 2},)), [1, 2, 3])
    pg = project_pi(pt)
    assert len(pg.components) == 1 and not pg.pairings
    assert pg.components[0].projective_weights() == (F(1, 6), F(1, 3), F(1, 2))


def test_example_common_image():
    # [PAPER] both orders give the same punctured fatgraph with pairing
    g, N, p, q = example_points()
    a, b = project_pi(p), project_pi(q)
    assert a.key() == b.key()
    assert pi_equivalent(p, q)
    assert len(a.components) == 2 and len(a.pairings) == 1
    # the horocycle i-k collapses to a puncture and leaves no edges behind
    toks = {NAMES[t >> 1] for c in a.components for t in c.tokens}
    assert not toks & set("ijk")
    (x, y), = [tuple(pp) for pp in a.pairings]
    assert {x[1], y[1]} == {"v", "b"}


def test_example_summed_weights():
    # [PAPER] a chain of vanishing edges becomes one edge carrying their sum
    g, N, p, q = example_points()
    pg = project_pi(p)
    small = next(c for c in pg.components if c.graph.n_edges == 3)
    # raw coordinates are i + 1, so a - g sum to 28
    assert sorted(small.projective_weights()) == sorted([F(1, 28), F(2 + 3 + 4 + 5, 28), F(6 + 7, 28)])
    big = next(c for c in pg.components if c.graph.n_edges == 6)
    assert sorted(big.projective_weights()) == sorted(F(x, 78) for x in (8, 12, 13, 14, 15, 16))


def test_perturbed_weight_differs():
    # [TRIVIAL]
    g, N, p, q = example_points()
    raw = [F(i + 1) for i in range(16)]
    raw[N["l"]] += 1
    r = ScreenPoint.normalized(p.screen, raw)
    assert pi_equivalent(p, p)
    assert not pi_equivalent(p, r)


@given(st.integers(0, 10**6))
def test_projection_is_supported_member(seed):
    # [DERIVED]
    rng = random.Random(seed)
    t = rng.randint(1, 6)
    m = rng.randint(0, 4)
    if (3 * t + m) % 2:
        m += 1
    if m > t + 2:
        return
    g = random_qcd(rng, t, m)
    Fg = surface_type(g)
    if Fg.euler >= 0:
        return
    pt = random_point(random_filtered_screen(g, rng, 4), rng)
    pg = project_pi(pt)
    assert validate_pairing(pg)[0]
    assert supported_by(pg, Fg)
    assert pg_membership(pg)
    assert pg.nodal_type() == Fg


def test_json_round_trip():
    g, N, p, q = example_points()
    pg = project_pi(p)
    assert PairedFatgraph.from_dict(pg.to_dict()) == pg
