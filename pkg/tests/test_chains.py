import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sweepout.chains import (
    CapacityError, ChainStructureError, CubicalGrid, GridChain, NotARelativeCycle, SegmentCycle,
    add_mod2, all_relative_cycles, area_distance_codim1, boundary, chain_volume, cone_fill,
    disk_area_distance, filling_cells_codim1, flat_norm_bruteforce,
)


def random_chain(rng, grid, k, relative=True, p=0.3):
    faces = [(pos, axes) for axes in grid.axis_subsets(k)
             for pos in itertools.product(*[range(grid.N if a in axes else grid.N + 1)
                                            for a in range(grid.n)])]
    pick = rng.random(len(faces)) < p
    return GridChain.from_cells(grid, k, [f for f, keep in zip(faces, pick) if keep], relative)


def random_relative_cycle(rng, grid):
    labels = rng.random((grid.N,) * grid.n) < 0.5
    return boundary(GridChain.from_labels(grid, labels))


def brute_filling_table(grid):
    """Smallest number of n-cells bounding each relative cycle (exhaustive over all cell sets)."""
    full = GridChain.full(grid)
    table = {}
    for mask in range(1 << len(full)):
        chosen = full.codes[[i for i in range(len(full)) if (mask >> i) & 1]]
        key = boundary(GridChain(grid, grid.n, chosen)).codes.tobytes()
        table[key] = min(table.get(key, len(chosen)), len(chosen))
    return table


# boundary ----------------------------------------------------------------------

def test_single_interior_square_has_four_edges():
    g = CubicalGrid(2, 4)
    sq = GridChain.from_cells(g, 2, [((1, 1), (0, 1))])
    b = boundary(sq)
    assert len(b) == 4
    assert sorted(b.cells()) == sorted([((1, 1), (0,)), ((1, 2), (0,)), ((1, 1), (1,)), ((2, 1), (1,))])


def test_full_relative_chain_has_empty_boundary():
    for n, N in [(2, 5), (3, 3), (4, 2)]:
        assert len(boundary(GridChain.full(CubicalGrid(n, N)))) == 0


def test_full_absolute_chain_boundary_is_cube_surface():
    g = CubicalGrid(2, 3)
    assert len(boundary(GridChain.full(g, relative=False))) == 4 * 3


def test_boundary_of_boundary_vanishes_random(rng):
    for trial in range(200):
        n = int(rng.integers(2, 5))
        N = int(rng.integers(1, 17 if n == 2 else (6 if n == 3 else 3)))
        g = CubicalGrid(n, N)
        k = int(rng.integers(2, n + 1))
        c = random_chain(rng, g, k, relative=bool(trial % 2))
        assert len(boundary(boundary(c))) == 0


def test_boundary_of_boundary_vanishes_exhaustive_small():
    g = CubicalGrid(2, 2)
    full = GridChain.full(g, relative=False)
    for mask in range(1 << len(full)):
        chosen = full.codes[[i for i in range(len(full)) if (mask >> i) & 1]]
        c = GridChain(g, 2, chosen, relative=False)
        assert len(boundary(boundary(c))) == 0


def test_boundary_rejects_zero_chains():
    with pytest.raises(ChainStructureError):
        boundary(GridChain.empty(CubicalGrid(2, 2), 0))


def test_invalid_cells_raise():
    g = CubicalGrid(2, 3)
    with pytest.raises(ChainStructureError):
        GridChain.from_cells(g, 1, [((3, 0), (0,))])
    with pytest.raises(ChainStructureError):
        GridChain.from_cells(g, 1, [((0, 0), (0, 1))])
    with pytest.raises(ChainStructureError):
        CubicalGrid(5, 2)
    with pytest.raises(ChainStructureError):
        CubicalGrid(2, 0)


# volumes ---------------------------------------------------------------------

def test_chain_volume_examples():
    g = CubicalGrid(2, 8)
    assert chain_volume(GridChain.empty(g, 1)) == 0
    assert chain_volume(GridChain.from_cells(g, 1, [((3, 3), (0,))])) == 0.25
    seg = SegmentCycle(np.array([[0.0, 0.0], [0.0, 0.5]]), np.array([[1.0, 0.0], [0.0, -0.5]]))
    assert chain_volume(seg) == 2.0


def test_json_round_trip(rng):
    g = CubicalGrid(3, 3)
    c = random_chain(rng, g, 2)
    assert GridChain.from_json(c.to_json()) == c


# add_mod2 ----------------------------------------------------------------------

def test_add_mod2_identities(rng):
    g = CubicalGrid(2, 6)
    for _ in range(50):
        a, b = random_chain(rng, g, 1), random_chain(rng, g, 1)
        assert len(add_mod2(a, a)) == 0
        assert add_mod2(a, GridChain.empty(g, 1)) == a
        assert add_mod2(a, b) == add_mod2(b, a)
        assert add_mod2(a, b).volume() <= a.volume() + b.volume()


def test_add_mod2_mismatch():
    with pytest.raises(ChainStructureError):
        add_mod2(GridChain.empty(CubicalGrid(2, 2), 1), GridChain.empty(CubicalGrid(2, 3), 1))


# area distance -------------------------------------------------------------------

def test_area_distance_self_is_zero(rng):
    g = CubicalGrid(2, 6)
    z = random_relative_cycle(rng, g)
    assert area_distance_codim1(z, z) == 0


def test_area_distance_strip():
    g = CubicalGrid(2, 8)
    col = lambda i: GridChain.from_cells(g, 1, [((i, j), (1,)) for j in range(8)])
    assert area_distance_codim1(col(2), col(5)) == 1.5


def test_area_distance_matches_exhaustive_filler(rng):
    for n, N in [(2, 3), (3, 2)]:
        g = CubicalGrid(n, N)
        table = brute_filling_table(g)
        for _ in range(20):
            z = random_relative_cycle(rng, g)
            assert filling_cells_codim1(z, GridChain.empty(g, n - 1)) == table[z.codes.tobytes()]


def test_area_distance_is_a_pseudometric(rng):
    g = CubicalGrid(2, 7)
    for _ in range(100):
        a, b, c = (random_relative_cycle(rng, g) for _ in range(3))
        dab = filling_cells_codim1(a, b)
        assert dab == filling_cells_codim1(b, a)
        assert filling_cells_codim1(a, c) <= dab + filling_cells_codim1(b, c)


def test_area_distance_rejects_non_cycles():
    g = CubicalGrid(2, 4)
    edge = GridChain.from_cells(g, 1, [((1, 1), (0,))])
    with pytest.raises(NotARelativeCycle):
        area_distance_codim1(edge, GridChain.empty(g, 1))


# flat norm ---------------------------------------------------------------------

def test_flat_norm_empty():
    assert flat_norm_bruteforce(GridChain.empty(CubicalGrid(2, 3), 1)) == 0


def test_flat_norm_interior_path():
    g = CubicalGrid(2, 3)
    c = GridChain.from_cells(g, 1, [((1, j), (1,)) for j in range(3)])
    assert flat_norm_bruteforce(c) == area_distance_codim1(c, GridChain.empty(g, 1)) == 4 / 3


def test_flat_norm_equals_area_distance_on_all_cycles():
    g = CubicalGrid(2, 3)
    empty = GridChain.empty(g, 1)
    cycles = all_relative_cycles(g)
    assert len(cycles) == 2 ** 8
    for z in cycles:
        assert flat_norm_bruteforce(z) == area_distance_codim1(z, empty)


def test_flat_norm_bounded_by_any_filling(rng):
    g = CubicalGrid(2, 4)
    for _ in range(30):
        D = GridChain.from_labels(g, rng.random((4, 4)) < 0.4)
        assert flat_norm_bruteforce(boundary(D)) <= D.volume()


def test_flat_norm_capacity():
    with pytest.raises(CapacityError, match="25"):
        flat_norm_bruteforce(GridChain.empty(CubicalGrid(2, 6), 1))


def test_filling_constant_is_stable_across_grids(rng):
    """Minimal filling area over squared cycle length stays below one constant."""
    ratios = {}
    for N in (2, 3):
        g = CubicalGrid(2, N)
        empty = GridChain.empty(g, 1)
        ratios[N] = max(area_distance_codim1(z, empty) / z.volume() ** 2
                        for z in all_relative_cycles(g) if len(z))
    for N in (4, 8, 16):
        g = CubicalGrid(2, N)
        empty = GridChain.empty(g, 1)
        half = GridChain.from_cells(g, 1, [((N // 2, j), (1,)) for j in range(N)])
        zs = [half] + [random_relative_cycle(rng, g) for _ in range(30)]
        ratios[N] = max(area_distance_codim1(z, empty) / z.volume() ** 2 for z in zs if len(z))
    vals = np.array(list(ratios.values()))
    assert np.all(np.isfinite(vals))
    assert vals.max() == 0.5
    assert vals.max() / vals.min() <= 1.5


# cone fill -----------------------------------------------------------------------

def test_cone_fill_examples():
    assert cone_fill(SegmentCycle.empty(2)) == 0
    h = 0.6
    L = 2 * math.sqrt(1 - h * h)
    chord = SegmentCycle(np.array([[h, -L / 2]]), np.array([[h, L / 2]]))
    assert cone_fill(chord) == pytest.approx(L * h / 2, rel=1e-12)
    assert cone_fill(chord) <= chord.volume() / 2


def random_polygon(rng, m):
    ang = np.sort(rng.uniform(0, 2 * math.pi, m))
    r = rng.uniform(0.1, 0.95, m)
    ctr = rng.uniform(-0.2, 0.2, 2)
    P = np.column_stack([r * np.cos(ang), r * np.sin(ang)]) * 0.8 + ctr
    return SegmentCycle(P, np.roll(P, -1, axis=0))


def test_cone_fill_dominates_raster_filling(rng):
    N = 128
    for _ in range(50):
        c = random_polygon(rng, int(rng.integers(3, 12)))
        tol = 2 * c.volume() * (2 / N)
        assert cone_fill(c) >= disk_area_distance(c, SegmentCycle.empty(2), N) - tol


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7)), min_size=1, max_size=6))
def test_cone_fill_at_most_half_length_in_unit_ball(pts):
    P = np.array(pts)
    c = SegmentCycle(P, np.roll(P, -1, axis=0) * 0.9)
    assert cone_fill(c) <= c.volume() / 2 + 1e-12
