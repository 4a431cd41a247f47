import importlib
import itertools
import json
import runpy
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from sweepout import kernels
from sweepout.pyramid import HPolytope, box

both = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")

seeds = st.integers(0, 2 ** 32 - 1)


def on_both(name, *args, **kw):
    """Run a kernel under each backend and return both results."""
    out = []
    for b in ("compiled", "python"):
        with kernels.backend_scope(b):
            out.append(getattr(kernels, name)(*args, **kw))
    return out


def assert_same(a, b, tol=1e-12):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            assert_same(x, y, tol)
    else:
        np.testing.assert_allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=tol, atol=tol)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def test_kernel_names_exported():
    assert all(callable(getattr(kernels, n)) for n in kernels.KERNEL_NAMES)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_scope_restores_backend():
    before = kernels.backend()
    with kernels.backend_scope("python"):
        assert kernels.backend() == "python"
    assert kernels.backend() == before


def test_scope_restores_after_error():
    before = kernels.backend()
    with pytest.raises(RuntimeError):
        with kernels.backend_scope("python"):
            raise RuntimeError
    assert kernels.backend() == before


def test_fallback_without_extension(monkeypatch):
    import sweepout
    monkeypatch.setitem(sys.modules, "sweepout._ckernels", None)
    monkeypatch.delattr(sweepout, "_ckernels", raising=False)
    try:
        importlib.reload(kernels)
        assert kernels.available_backends() == ("python",)
        assert kernels.backend() == "python"
        assert kernels.sturm_counts(np.array([[-1.0, 0.0, 1.0]]), np.array([-2.0]), np.array([2.0]))[0] == 2
    finally:
        monkeypatch.undo()
        importlib.reload(kernels)


# ---------------------------------------------------------------------------
# backend equivalence
# ---------------------------------------------------------------------------

@both
@given(seeds, st.sampled_from([(2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]))
@settings(max_examples=40, deadline=None)
def test_squeeze_points_agree(seed, nl):
    n, l = nl
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (200, n))
    args = (X, l, 0.25, 0.1, rng.uniform(0, 0.25, n))
    assert_same(*on_both("squeeze_points", *args))


@both
@given(seeds, st.sampled_from([(2, 1), (3, 1), (3, 2)]))
@settings(max_examples=40, deadline=None)
def test_push_segments_agree(seed, nl):
    n, l = nl
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (20, n))
    B = rng.uniform(-1, 1, (20, n))
    a, b = on_both("push_segments", A, B, l, 0.3, 0.1, rng.uniform(0, 0.3, n))
    assert_same(a, b)


@both
@given(seeds, st.integers(1, 12))
@settings(max_examples=40, deadline=None)
def test_flat_norm_search_agrees_with_direct_enumeration(seed, m):
    rng = np.random.default_rng(seed)
    faces = 20
    masks = [int(v) for v in rng.integers(1, 1 << faces, m)]
    c = int(rng.integers(0, 1 << faces))
    w_cell, w_face = (int(v) for v in rng.integers(1, 8, 2))
    a, b = on_both("flat_norm_search", masks, c, w_cell, w_face)
    assert a == b
    best = min(
        w_cell * sum(pick) + w_face * bin(c ^ _xor(masks, pick)).count("1")
        for pick in itertools.product((0, 1), repeat=m)
    )
    assert a[0] == best
    assert w_cell * bin(a[1]).count("1") + w_face * bin(c ^ _xor(masks, _bits(a[1], m))).count("1") \
        == best


def _xor(masks, pick):
    out = 0
    for mk, on in zip(masks, pick):
        if on:
            out ^= mk
    return out


def _bits(d, m):
    return [(d >> j) & 1 for j in range(m)]


def test_wide_masks_use_python_integers():
    masks = [1 << 70, (1 << 70) | 1]
    assert kernels.flat_norm_search(masks, 1, 1, 1) == (1, 0)


def test_flat_norm_weights_must_be_integers():
    for b in kernels.available_backends():
        with kernels.backend_scope(b):
            with pytest.raises(ValueError):
                kernels.flat_norm_search([1], 1, 0.5, 1)


@both
@given(seeds, st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_sturm_counts_agree_with_separated_roots(seed, deg):
    rng = np.random.default_rng(seed)
    C, lo, hi, want = [], [], [], []
    for _ in range(20):
        roots = np.sort(rng.uniform(-1, 1, deg))
        if deg > 1 and np.min(np.diff(roots)) < 0.05:
            continue
        C.append(np.polynomial.polynomial.polyfromroots(roots) * rng.uniform(0.5, 2))
        a, b = sorted(rng.uniform(-1.2, 1.2, 2))
        # keep the ends away from the roots
        if np.min(np.abs(roots[:, None] - [a, b])) < 1e-3:
            a, b = -1.5, 1.5
        lo.append(a)
        hi.append(b)
        want.append(int(np.sum((roots > a) & (roots <= b))))
    if not C:
        return
    C = np.array(C)
    a, b = on_both("sturm_counts", C, np.array(lo), np.array(hi))
    assert list(a) == list(b) == want


def _body(rng):
    A = np.vstack([rng.standard_normal((10, 3)), np.eye(3), -np.eye(3)])
    return HPolytope(A, np.concatenate([rng.uniform(0.3, 1.0, 10), 2 * np.ones(6)]))


@both
@given(seeds)
@settings(max_examples=30, deadline=None)
def test_clip_volume_agrees_with_hull_volume(seed):
    rng = np.random.default_rng(seed)
    p = _body(rng)
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    proj = p.vertices @ v
    t = float(rng.uniform(proj.min() + 0.05 * np.ptp(proj), proj.max() - 0.05 * np.ptp(proj)))
    a, b = on_both("clip_volume", p.boundary, v, t)
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(p.with_halfspace(v, t).volume, rel=1e-9)


def test_clip_volume_in_the_plane():
    sq = box([0, 0], [2, 1])
    for b in kernels.available_backends():
        with kernels.backend_scope(b):
            assert kernels.clip_volume(sq.boundary, np.array([1.0, 0.0]), 0.5) == pytest.approx(0.5)


@both
@given(seeds, st.integers(2, 4), st.integers(3, 12))
@settings(max_examples=60, deadline=None)
def test_simplex_max_agrees_with_linprog(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.uniform(-0.5, 1.0, m)
    c = rng.standard_normal(n)
    a, bb = on_both("simplex_max", c, A, b)
    assert a[0] == bb[0]
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    want = {0: 0, 2: 1, 3: 2}[ref.status]
    assert a[0] == want
    if want == 0:
        assert a[2] == pytest.approx(-ref.fun, abs=1e-7)
        assert bb[2] == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(A @ a[1] <= b + 1e-8)


@both
@given(seeds, st.sampled_from([2, 3]))
@settings(max_examples=30, deadline=None)
def test_greedy_pack_agrees(seed, n):
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 60))
    radii = np.full(p, 0.25 * p ** (-1 / n))
    cands = rng.uniform(-0.5, 0.5, (4000, n))
    cands = cands[(cands ** 2).sum(axis=1) < 0.25]
    (ca, ka), (cb, kb) = on_both("greedy_pack", cands, radii, 2 * radii[0])
    assert ka == kb
    assert_same(ca, cb, 0)
    if ka > 0:
        # placed centers respect the exclusion radius
        D = np.linalg.norm(ca[:, None] - ca[None], axis=2)
        np.fill_diagonal(D, np.inf)
        assert np.all(D > 2 * radii[0])


def test_greedy_pack_reports_exhaustion():
    cands = np.zeros((3, 2))
    for b in kernels.available_backends():
        with kernels.backend_scope(b):
            _, consumed = kernels.greedy_pack(cands, np.array([0.1, 0.1]), 0.2)
            assert consumed == -1


@both
@given(seeds)
@settings(max_examples=30, deadline=None)
def test_segment_line_counts_agree(seed):
    rng = np.random.default_rng(seed)
    P0 = rng.uniform(-1, 1, (50, 2))
    P1 = rng.uniform(-1, 1, (50, 2))
    th = rng.uniform(0, np.pi, 300)
    off = rng.uniform(-1, 1, 300)
    a, b = on_both("segment_line_counts", P0, P1, th, off)
    assert list(a) == list(b)
    f0 = P0[:, 0] * np.cos(th[0]) + P0[:, 1] * np.sin(th[0]) - off[0]
    f1 = P1[:, 0] * np.cos(th[0]) + P1[:, 1] * np.sin(th[0]) - off[0]
    assert a[0] == int(np.sum(np.sign(f0) != np.sign(f1)))


def test_benchmark_script_runs(tmp_path, capsys):
    bench = runpy.run_path(str(Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"))
    out = tmp_path / "bench.json"
    assert bench["main"](["--repeat", "1", "--kernel", "clip_volume", "--kernel", "sturm_counts",
                          "--json", str(out)]) == 0
    rows = json.loads(out.read_text())["rows"]
    assert [r["kernel"] for r in rows] == ["clip_volume", "sturm_counts"]
    assert all(r.get("same", True) for r in rows)
