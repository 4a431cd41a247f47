import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from sweepout.pyramid import (
    LAMBDA_MAX, HPolytope, PolytopeError, ball_polytope, ball_volume,
    bisect_equal_volume, box, build_pyramid, chebyshev, direction_sequence, growth_rate,
    holder_exact, mean_projection, n_functional, n_functional_ball, polytope_volume,
    rect_approx, sequence_thickness, star_report, thickness, window_violations,
)


def random_body(rng, m=12, n=3):
    """Random polytope, clipped to ``[-2, 2]^n`` so it is always bounded."""
    A = np.vstack([rng.standard_normal((m, n)), np.eye(n), -np.eye(n)])
    b = np.concatenate([rng.uniform(0.3, 1.0, m), 2 * np.ones(2 * n)])
    return HPolytope(A, b)


def random_simplex(rng, n):
    S = rng.standard_normal((n + 1, n))
    h = ConvexHull(S)
    return HPolytope(h.equations[:, :n], -h.equations[:, n])


def mc_fraction(p, v, t, samples=200_000, seed=7):
    """Fraction of uniform points of ``p`` with ``v.x <= t`` (independent rejection sampler)."""
    rng = np.random.default_rng(seed)
    V = p.vertices
    X = rng.uniform(V.min(axis=0), V.max(axis=0), (samples, p.n))
    X = X[np.all(X @ p.A.T <= p.b, axis=1)]
    return float(np.mean(X @ v <= t)), len(X)


# ---------------------------------------------------------------------------
# inscribed balls and volumes
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_cube_inscribed_radius(n):
    c, r = chebyshev(box(-np.ones(n), np.ones(n)))
    assert r == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(c, 0, atol=1e-12)


def test_triangle_incircle():
    p = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    r = 1 / (2 + math.sqrt(2))
    c, rad = chebyshev(p)
    assert rad == pytest.approx(r, abs=1e-12)
    assert np.allclose(c, [r, r], atol=1e-12)


def test_radius_shrinks_with_more_halfspaces(rng):
    for _ in range(100):
        p = random_body(rng)
        a = rng.standard_normal(3)
        a /= np.linalg.norm(a)
        beta = a @ p.chebyshev[0] + rng.uniform(0.05, 1.0)
        assert p.with_halfspace(a, beta).rad <= p.rad + 1e-12


def test_infeasible_and_unbounded_raise():
    with pytest.raises(PolytopeError):
        chebyshev(HPolytope([[1.0], [-1.0]], [-1.0, -1.0]))
    with pytest.raises(PolytopeError):
        chebyshev(HPolytope([[1.0, 0.0]], [1.0]))
    with pytest.raises(PolytopeError):
        HPolytope([[0.0, 0.0]], [1.0])


@pytest.mark.parametrize("n", [2, 3])
def test_unit_cube_and_corner_simplex_volumes(n):
    assert polytope_volume(box(np.zeros(n), np.ones(n)))[0] == pytest.approx(1.0, abs=1e-12)
    corner = HPolytope(np.vstack([-np.eye(n), np.ones(n)]), np.append(np.zeros(n), 1.0))
    assert polytope_volume(corner)[0] == pytest.approx(1 / math.factorial(n), abs=1e-12)


def test_corner_simplex_volume_in_four_dimensions():
    corner = HPolytope(np.vstack([-np.eye(4), np.ones(4)]), np.append(np.zeros(4), 1.0))
    v, se = polytope_volume(corner, samples=400_000)
    assert abs(v - 1 / 24) <= 3 * se


def test_exact_and_monte_carlo_volumes_agree(rng):
    hits = 0
    for j in range(50):
        p = random_body(rng)
        exact = polytope_volume(p)[0]
        mc, se = polytope_volume(p, "mc", samples=20_000, seed=j)
        hits += abs(mc - exact) <= 3 * se
    # 3-sigma intervals miss about 0.3% of the time
    assert hits >= 48


def test_unknown_volume_method():
    with pytest.raises(ValueError):
        polytope_volume(box([0, 0], [1, 1]), "simpson")


# ---------------------------------------------------------------------------
# equal-volume bisection
# ---------------------------------------------------------------------------

def test_cube_bisects_at_center():
    cube = box(-np.ones(3), np.ones(3))
    left, right, t = bisect_equal_volume(cube, [1.0, 0.0, 0.0])
    assert t == pytest.approx(0.0, abs=1e-9)
    assert left.volume == pytest.approx(4.0, rel=1e-9)
    assert right.volume == pytest.approx(4.0, rel=1e-9)


def test_ball_polytope_bisects_at_center(rng):
    p = ball_polytope(3)
    for _ in range(20):
        v = rng.standard_normal(3)
        _, _, t = bisect_equal_volume(p, v / np.linalg.norm(v))
        assert abs(t) <= 1e-3


def test_bisection_halves_match_independent_sampler(rng):
    for j in range(5):
        p = random_body(rng)
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        left, right, t = bisect_equal_volume(p, v)
        assert abs(left.volume - right.volume) <= 1e-3 * p.volume
        frac, m = mc_fraction(p, v, t, seed=j)
        assert abs(frac - 0.5) <= 3 * 0.5 / math.sqrt(m)
        # left holds v.x <= t, right the side v points to
        assert np.all(left.vertices @ v <= t + 1e-9)
        assert np.all(right.vertices @ v >= t - 1e-9)


def test_bisection_in_four_dimensions(rng):
    p = box(-np.ones(4), np.array([1.0, 1.0, 1.0, 3.0]))
    v = np.array([0.0, 0.0, 0.0, 1.0])
    _, _, t = bisect_equal_volume(p, v, samples=100_000)
    assert t == pytest.approx(1.0, abs=0.02)


def test_bisection_needs_unit_direction():
    with pytest.raises(ValueError, match="unit"):
        bisect_equal_volume(box([0, 0], [1, 1]), [2.0, 0.0])


# ---------------------------------------------------------------------------
# direction sequences
# ---------------------------------------------------------------------------

def test_alternating_sequence_is_valid():
    seq = direction_sequence(3, 1, 10, "alternating")
    assert seq.violations() == []
    assert np.allclose(seq.vectors[::2], [1, 0, 0])
    assert np.allclose(seq.vectors[1::2], [0, 1, 0])


@pytest.mark.parametrize("n,i", [(3, 1), (4, 1), (4, 2)])
def test_random_sequences_satisfy_windows(n, i):
    for seed in range(5):
        seq = direction_sequence(n, i, 12, "random", seed)
        assert window_violations(seq.all_vectors(), n, i) == []


def test_window_violation_reports_index():
    V = np.vstack([np.eye(3), [[1.0, 0, 0], [0, 0, 1.0], [0, 0, 1.0]]])
    assert window_violations(V, 3, 1, offset=3) == [3]


def test_adversarial_never_thicker_than_random():
    for seed in range(20):
        adv = direction_sequence(3, 1, 3, "adversarial", seed, phi_samples=4)
        rnd = direction_sequence(3, 1, 3, "random", seed)
        assert adv.violations() == []
        assert sequence_thickness(adv) <= sequence_thickness(rnd) + 1e-12


def test_sequence_parameter_errors():
    with pytest.raises(ValueError):
        direction_sequence(3, 1, 0)
    with pytest.raises(ValueError):
        direction_sequence(3, 1, 4, "spiral")
    with pytest.raises(ValueError):
        direction_sequence(4, 1, 4, "alternating")


# ---------------------------------------------------------------------------
# pyramid trees
# ---------------------------------------------------------------------------

def test_depth_zero_and_one_thickness():
    assert build_pyramid(3, 1, 1, 0).T == pytest.approx(0.5, abs=1e-12)
    tree = build_pyramid(3, 1, 1, 1)
    assert tree.T == pytest.approx(0.5, abs=1e-9)
    for ch in tree.root.children:
        assert ch.rad == pytest.approx(0.5, abs=1e-9)
    assert thickness(tree).level_T == pytest.approx([0.5, 0.5], abs=1e-9)


def test_half_ball_radius_by_sampling():
    # largest ball in a half ball touches the cut: sampled centers on the axis agree
    tree = build_pyramid(3, 1, 1, 1)
    half = tree.root.children[0]
    v = tree.root.cut_dir
    s = np.linspace(0.0, 1.0, 2001)
    pts = tree.root.offset * v + np.outer(s, v)
    slack = np.min(half.poly.b[None, :] - pts @ half.poly.A.T, axis=1)
    assert slack.max() == pytest.approx(half.rad, abs=1e-3)


@pytest.fixture(scope="module")
def tree4():
    return build_pyramid(3, 1, 1, 4, 16)


def test_node_volumes_halve(tree4):
    vol = tree4.root.volume
    for nd in tree4.nodes():
        assert nd.volume == pytest.approx(vol * 2.0 ** -nd.depth, rel=nd.depth * 1e-3 + 1e-12)


def test_node_volumes_by_sampling(tree4):
    root = tree4.root.poly
    rng = np.random.default_rng(3)
    V = root.vertices
    X = rng.uniform(V.min(axis=0), V.max(axis=0), (400_000, 3))
    X = X[root.contains(X)]
    for nd in tree4.level(2):
        frac = float(np.mean(nd.poly.contains(X, tol=0)))
        assert abs(frac - 0.25) <= 4 * math.sqrt(0.25 * 0.75 / len(X))


def test_children_add_one_halfspace_with_opposite_signs(tree4):
    for nd in tree4.nodes():
        if not nd.children:
            continue
        plus, minus = nd.children
        for ch in nd.children:
            assert ch.poly.m == nd.poly.m + 1
            assert np.array_equal(ch.poly.A[:-1], nd.poly.A)
        assert np.allclose(plus.poly.A[-1], -nd.cut_dir)
        assert np.allclose(minus.poly.A[-1], nd.cut_dir)
        assert plus.poly.b[-1] == pytest.approx(-minus.poly.b[-1])
        assert plus.path == nd.path + "1" and minus.path == nd.path + "2"


def test_sibling_interiors_disjoint(tree4):
    for nd in tree4.nodes():
        if nd.children:
            plus, minus = nd.children
            assert plus.center @ nd.cut_dir > nd.offset
            assert minus.center @ nd.cut_dir < nd.offset


def test_thickness_recursion(tree4):
    for nd in tree4.nodes():
        if nd.children:
            assert nd.T == pytest.approx(sum(ch.T for ch in nd.children), rel=1e-12)
        else:
            assert nd.T == pytest.approx(0.5 * nd.rad)


@pytest.mark.parametrize("search", ["greedy", "random", "exhaustive"])
def test_every_path_window_is_orthonormal(search):
    tree = build_pyramid(3, 1, 1, 3, 8, seed=1, search=search)
    assert all(v == [] for v in tree.window_violations())


def test_four_dimensional_windows():
    tree = build_pyramid(4, 1, 1, 2, 8, search="random")
    assert all(v == [] for v in tree.window_violations())


@pytest.mark.parametrize("seed", range(10))
def test_exhaustive_thickness_refines_downward(seed):
    Ts = [build_pyramid(3, 1, 1, 2, ph, seed=seed, search="exhaustive").T for ph in (4, 8, 16)]
    assert Ts[0] >= Ts[1] - 1e-12 >= Ts[2] - 2e-12


def test_sequence_search_follows_the_sequence():
    seq = direction_sequence(3, 1, 3, "random", 4)
    tree = build_pyramid(3, 1, 1, 3, search="sequence", sequence=seq)
    for nd in tree.nodes():
        if nd.children:
            assert np.allclose(nd.cut_dir, seq.vectors[nd.depth])


@pytest.mark.parametrize("kw", [dict(n=5), dict(k=0), dict(k=2), dict(i=2), dict(P=13), dict(search="best")])
def test_pyramid_parameter_errors(kw):
    args = dict(n=3, i=1, k=1, P=1)
    args.update(kw)
    with pytest.raises(ValueError):
        build_pyramid(**args)


def test_sequence_search_needs_sequence():
    with pytest.raises(ValueError):
        build_pyramid(3, 1, 1, 2, search="sequence")


def test_tree_json(tree4):
    data = json.loads(json.dumps(tree4.to_json()))
    assert len(data["nodes"]) == 2 ** 5 - 1
    assert set(data["nodes"][0]) == {"path", "cut_dir", "offset", "volume", "rad", "T"}
    assert data["nodes"][0]["T"] == pytest.approx(tree4.T)


def test_growth_rate_of_geometric_sequence():
    assert growth_rate(3.0 * 1.5 ** np.arange(6)) == pytest.approx(1.5)


# ---------------------------------------------------------------------------
# rectangles
# ---------------------------------------------------------------------------

def check_containment(p, R, tol=1e-9):
    assert np.all(p.contains(R.corners(), tol=tol))
    Y = (p.vertices - R.center) @ R.axes.T
    assert np.all(2 * np.abs(Y) <= R.lam * R.sides + tol)
    assert np.allclose(R.axes @ R.axes.T, np.eye(p.n), atol=1e-9)
    assert np.all(np.diff(R.sides) >= 0)


@pytest.mark.parametrize("lo,hi", [([-1, -1, -1], [1, 1, 1]), ([0, 0], [3, 1]), ([0, 0, 0], [4, 2, 1])])
def test_box_input(lo, hi):
    p = box(lo, hi)
    R = rect_approx(p)
    check_containment(p, R)
    # the sweep starts along a diagonal, so the box comes back only up to a factor
    assert R.lam <= 12
    assert np.prod(R.sides) >= p.volume / R.lam ** len(lo) - 1e-12


@pytest.mark.parametrize("aspect", [1, 10, 100, 1000])
def test_box_factor_does_not_grow_with_aspect(aspect):
    assert rect_approx(box([0, 0], [aspect, 1])).lam <= 5 + 1e-9
    assert rect_approx(box([0, 0, 0], [aspect, math.sqrt(aspect), 1])).lam <= 12


def test_random_simplices_contained(rng):
    for _ in range(50):
        n = int(rng.integers(2, 4))
        p = random_simplex(rng, n)
        R = rect_approx(p)
        check_containment(p, R)
        assert R.lam <= LAMBDA_MAX


def test_random_bodies_contained(rng):
    for _ in range(20):
        p = random_body(rng)
        R = rect_approx(p)
        check_containment(p, R)
        assert R.lam <= LAMBDA_MAX


@pytest.mark.parametrize("eps", [0.05, 0.01])
def test_thin_slab_short_side(eps):
    R = rect_approx(box([0, 0, 0], [1, 1, eps]))
    assert eps / 4 <= R.sides[0] <= 4 * eps


def test_flat_input_raises():
    # vertices of a flat body cannot be enumerated
    with pytest.raises(PolytopeError):
        rect_approx(box([0, 0, 0], [1, 1, 0]))


# ---------------------------------------------------------------------------
# projections and N functionals
# ---------------------------------------------------------------------------

def test_projection_extremes():
    p = random_body(np.random.default_rng(0))
    assert mean_projection(p, 0) == (1.0, 0.0)
    assert mean_projection(p, 3) == polytope_volume(p)
    with pytest.raises(ValueError):
        mean_projection(p, 4)


@pytest.mark.parametrize("q", [1, 2])
def test_ball_polytope_projections_bracket_the_ball(q):
    # B <= P <= R B with R the largest vertex norm, so projections are bracketed too
    p = ball_polytope(3, 200)
    R = np.linalg.norm(p.vertices, axis=1).max()
    m, se = mean_projection(p, q, 2000, 0)
    assert ball_volume(q) - 3 * se <= m <= ball_volume(q) * R ** q + 3 * se


def test_widths_of_cube_average():
    # mean width of the cube [-1,1]^3 is 3
    m, se = mean_projection(box(-np.ones(3), np.ones(3)), 1, 4000, 1)
    assert abs(m - 3.0) <= 3 * se


def test_n_functional_matches_ball_formula():
    p = ball_polytope(3, 200)
    R = np.linalg.norm(p.vertices, axis=1).max()
    rep = n_functional(p, 8.0, 1000, 0)
    exact = n_functional_ball(3, 8.0)
    for a, v in rep.values.items():
        q = 3 - a
        lo = R ** (-3.0 / a) * (1 - 0.01)
        hi = R ** (q / a) * (1 + 0.01)
        assert lo <= v / exact[a] <= hi
    assert rep.N == max(rep.values.values())
    assert rep.values[rep.argmax] == rep.N


def test_n_functional_increases_with_beta():
    p = random_body(np.random.default_rng(5))
    Ns = [n_functional(p, b, 200, 0).N for b in (2, 4, 8, 16)]
    assert all(x < y for x, y in zip(Ns, Ns[1:]))


def test_n_functional_needs_large_beta():
    with pytest.raises(ValueError):
        n_functional(ball_polytope(3), 1.5)


def test_n_times_rad_band():
    rng = np.random.default_rng(11)
    vals = []
    for _ in range(50):
        p = random_body(rng)
        vals.append(n_functional(p, 8.0, 300, 0).N * p.rad)
    # fitted band at beta = 8, n = 3 (observed about 140..235)
    assert 100 <= min(vals) and max(vals) <= 320
    assert max(vals) / min(vals) <= 2.5


def test_n_functional_json():
    rep = n_functional(ball_polytope(3), 8.0, 100, 0)
    data = json.loads(json.dumps(rep.to_json()))
    assert set(data["values"]) == {"1", "2", "3"}


# ---------------------------------------------------------------------------
# level audits
# ---------------------------------------------------------------------------

@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=16), st.integers(1, 3))
@settings(max_examples=100, deadline=None)
def test_holder_holds_for_any_radii(rads, k):
    assert holder_exact(rads, k)


def test_holder_equality_for_equal_radii():
    assert holder_exact([0.25] * 8, 2)


def test_star_report(tree4):
    rep = star_report(tree4, 8.0, 100, 0)
    assert rep.holder_ok
    assert [r["p"] for r in rep.rows] == list(range(5))
    assert rep.rows[0]["sum_rad_inv"] == pytest.approx(1.0)
    for a in rep.additivity:
        # the cut section makes projections exactly additive plane by plane
        assert a["max_abs_diff"] <= 1e-9
    assert len(rep.h_counts) == 2 ** 4 - 1
    for h in rep.h_counts:
        assert 1 <= h["a"] <= 3
        assert h["min_h"] <= h["a"]
    for t in rep.trigger:
        assert t["a"] < 3
    json.dumps(rep.to_json())


def test_star_report_level_sums(tree4):
    rep = star_report(tree4, 8.0, 20, 0)
    rads = [nd.rad for nd in tree4.level(3)]
    assert rep.rows[3]["sum_rad_inv"] == pytest.approx(sum(1 / r for r in rads))
    assert rep.rows[3]["T_level"] == pytest.approx(thickness(tree4).level_T[3])
