"""Convex bodies cut by volume-bisecting hyperplanes.

An :class:`HPolytope` is an intersection of halfspaces.  A pyramid starts
from a polytope circumscribing the unit ball and repeatedly cuts every piece
into two halves of equal volume, with cut directions constrained so that any
``n - i`` consecutive cuts along a root-to-leaf path are orthonormal.  The
module measures inscribed radii, the thickness ``T = (1/2) sum Rad^k`` over
each level, rectangle approximations, mean projection volumes and the
``N_{a, beta}`` functionals built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from . import kernels

BISECT_TOL = 1e-3
MAX_DEPTH = 12
ANGLE_FRACTION = 0.5
LAMBDA_MAX = 64.0
WINDOW_TOL = 1e-9
PARALLEL_TOL = 1e-8


class PolytopeError(ValueError):
    """Empty, unbounded or degenerate polytope."""


class ConvergenceError(RuntimeError):
    """A bisection could not reach its tolerance."""


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HPolytope:
    """``{x : A x <= b}`` with unit row normals."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise PolytopeError("one offset per halfspace is required")
        nrm = np.linalg.norm(A, axis=1)
        if np.any(nrm == 0):
            raise PolytopeError("halfspace normals must be nonzero")
        A, b = A / nrm[:, None], b / nrm
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def with_halfspace(self, a, beta):
        """This polytope intersected with ``{a.x <= beta}``."""
        return HPolytope(np.vstack([self.A, a]), np.append(self.b, beta))

    def contains(self, X, tol=1e-9):
        X = np.atleast_2d(X)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    @cached_property
    def chebyshev(self):
        return chebyshev(self)

    @cached_property
    def vertices(self) -> np.ndarray:
        c, r = self.chebyshev
        if r <= 1e-12:
            raise PolytopeError("polytope has empty interior")
        hs = np.hstack([self.A, -self.b[:, None]])
        last = None
        for attempt in range(3):
            try:
                pt = c if attempt == 0 else c + 0.1 * r * np.random.default_rng(attempt).uniform(-1, 1, self.n)
                V = HalfspaceIntersection(hs, pt).intersections
                return np.unique(np.round(V, 12), axis=0)
            except QhullError as err:  # degenerate configuration, retry from a perturbed point
                last = err
        raise PolytopeError(f"vertex enumeration failed: {last}")

    @cached_property
    def hull(self) -> ConvexHull:
        return ConvexHull(self.vertices)

    @cached_property
    def boundary(self) -> np.ndarray:
        """Outward-oriented boundary simplices, shape ``(m, n, n)``."""
        h = self.hull
        F = h.points[h.simplices].copy()
        if self.n == 2:
            d = F[:, 1] - F[:, 0]
            out = np.column_stack([d[:, 1], -d[:, 0]])
        elif self.n == 3:
            out = np.cross(F[:, 1] - F[:, 0], F[:, 2] - F[:, 0])
        else:
            raise PolytopeError("boundary triangulation is used for n <= 3 only")
        flip = np.einsum("ij,ij->i", out, h.equations[:, :self.n]) < 0
        F[flip, 0], F[flip, 1] = F[flip, 1].copy(), F[flip, 0].copy()
        return F

    @cached_property
    def volume(self) -> float:
        return polytope_volume(self)[0]

    @property
    def rad(self) -> float:
        return self.chebyshev[1]


def chebyshev(p: HPolytope):
    """Center and radius of the largest inscribed ball (linear program)."""
    n = p.n
    A = np.hstack([p.A, np.ones((p.m, 1))])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    status, x, val = kernels.simplex_max(c, A, p.b)
    if status == 1:
        raise PolytopeError("polytope is empty")
    if status != 0:
        raise PolytopeError("inscribed-ball LP is unbounded or did not converge")
    if val < 0:
        raise PolytopeError("polytope is empty")
    return x[:n], float(val)


def box(lo, hi) -> HPolytope:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    n = lo.shape[0]
    I = np.eye(n)
    return HPolytope(np.vstack([I, -I]), np.concatenate([hi, -lo]))


def sphere_directions(n: int, m: int) -> np.ndarray:
    """``m`` well-spread unit vectors (circle grid, Fibonacci sphere, or seeded normals)."""
    if n == 2:
        th = 2 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(th), np.sin(th)])
    if n == 3:
        k = np.arange(m) + 0.5
        z = 1 - 2 * k / m
        phi = math.pi * (1 + math.sqrt(5)) * k
        r = np.sqrt(1 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    g = np.random.default_rng(12345).standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ball_polytope(n: int, resolution: int = 0) -> HPolytope:
    """Polytope circumscribing the unit ball.

    The default uses the ``2n`` coordinate and ``2^n`` diagonal supporting
    halfspaces; ``resolution > 0`` adds that many further tangent halfspaces
    for a closer fit.
    """
    dirs = [np.eye(n), -np.eye(n)]
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    dirs.append(signs / math.sqrt(n))
    if resolution:
        dirs.append(sphere_directions(n, resolution))
    A = np.vstack(dirs)
    return HPolytope(A, np.ones(A.shape[0]))


def _mc_points(p: HPolytope, samples, rng):
    V = p.vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    X = rng.uniform(lo, hi, (samples, p.n))
    return X, float(np.prod(hi - lo))


def polytope_volume(p: HPolytope, method: str = "exact", samples: int = 200_000, seed: int = 0):
    """Volume as ``(value, stderr)``; exact (qhull) for ``n <= 3``, Monte Carlo otherwise."""
    if method == "exact" and p.n <= 3:
        return float(p.hull.volume), 0.0
    if method not in ("exact", "mc"):
        raise ValueError(f"unknown volume method {method!r}")
    rng = np.random.default_rng(seed)
    X, boxvol = _mc_points(p, samples, rng)
    hit = p.contains(X).astype(float)
    return boxvol * float(hit.mean()), boxvol * float(hit.std(ddof=1)) / math.sqrt(samples)


def cut_volume(p: HPolytope, v, t) -> float:
    """Volume of ``p ∩ {v.x <= t}`` (exact, ``n <= 3``)."""
    return float(kernels.clip_volume(p.boundary, np.asarray(v, dtype=float), float(t)))


def bisect_equal_volume(p: HPolytope, direction, tol: float = BISECT_TOL, samples: int = 100_000,
                        seed: int = 0):
    """Split ``p`` by a hyperplane normal to ``direction`` into two halves of equal volume.

    Returns ``(left, right, offset)`` with ``left = p ∩ {v.x <= offset}`` and
    ``right = p ∩ {v.x >= offset}`` (the side the direction points to).
    """
    v = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError("cut direction must be a unit vector")
    proj = p.vertices @ v
    lo, hi = float(proj.min()), float(proj.max())
    if p.n <= 3:
        half = 0.5 * p.volume
        t = brentq(lambda s: cut_volume(p, v, s) - half, lo, hi, xtol=1e-13, rtol=1e-13, maxiter=200)
        err = abs(2 * cut_volume(p, v, t) - p.volume) / p.volume
    else:
        rng = np.random.default_rng(seed)
        X, _ = _mc_points(p, 4 * samples, rng)
        X = X[p.contains(X)][:samples]
        t = float(np.median(X @ v))
        below = float(np.mean(X @ v <= t))
        err = abs(2 * below - 1)
    if err > tol:
        raise ConvergenceError(f"bisection missed equal volumes by {err:.3g} (tol {tol})")
    return p.with_halfspace(v, t), p.with_halfspace(-v, -t), t


# ---------------------------------------------------------------------------
# direction sequences
# ---------------------------------------------------------------------------

def window_length(n: int, i: int) -> int:
    return n - i


def fiber_basis(history, n, i) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of the last ``n - i - 1`` directions."""
    w = window_length(n, i) - 1
    prev = np.array(history[-w:]) if w > 0 else np.zeros((0, n))
    if len(prev) == 0:
        return np.eye(n)
    B = null_space(prev)
    return B


def fiber_grid(basis: np.ndarray, m: int, turn: float = 0.0) -> np.ndarray:
    """``m`` directions on the unit sphere of ``span(basis)``; a circle grid rotated by ``turn``."""
    d = basis.shape[1]
    if d == 2:
        th = 2 * math.pi * (np.arange(m) / m + turn)
        return np.outer(np.cos(th), basis[:, 0]) + np.outer(np.sin(th), basis[:, 1])
    if d == 1:
        return np.vstack([basis[:, 0], -basis[:, 0]])
    return sphere_directions(d, m) @ basis.T


@dataclass(frozen=True)
class DirectionSequence:
    n: int
    i: int
    prefix: np.ndarray
    vectors: np.ndarray

    def all_vectors(self) -> np.ndarray:
        return np.vstack([self.prefix, self.vectors]) if len(self.vectors) else self.prefix

    def violations(self, tol=WINDOW_TOL):
        """Indices ``a`` of vectors that fail orthonormality against their window."""
        return window_violations(self.all_vectors(), self.n, self.i, tol, offset=len(self.prefix))


def window_violations(V, n, i, tol=WINDOW_TOL, offset=0):
    w = window_length(n, i)
    bad = []
    for a in range(len(V)):
        win = V[max(0, a - w + 1): a + 1]
        G = win @ win.T
        if np.abs(G - np.eye(len(win))).max() > tol:
            bad.append(a - offset + 1)
    return bad


def _rotation_taking(u, w):
    """Rotation of R^n taking unit ``u`` to unit ``w`` and fixing ``span(u, w)^perp``."""
    n = u.shape[0]
    x = w - (u @ w) * u
    x -= (x @ u) * u  # second Gram-Schmidt pass keeps x orthogonal to u to rounding
    sn = np.linalg.norm(x)
    if sn < PARALLEL_TOL:
        if u @ w > 0:
            return np.eye(n)
        # antipodal: rotate by pi in a plane through u and any orthogonal direction
        x = null_space(u[None, :])[:, 0]
    else:
        x /= sn
    th = math.atan2(x @ w, u @ w)
    c, s = math.cos(th), math.sin(th)
    return np.eye(n) + (c - 1) * (np.outer(u, u) + np.outer(x, x)) + s * (np.outer(x, u) - np.outer(u, x))


# ---------------------------------------------------------------------------
# pyramid trees
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PyramidNode:
    path: str
    poly: HPolytope
    volume: float
    rad: float
    center: np.ndarray
    cut_dir: np.ndarray = None
    offset: float = None
    T: float = None
    children: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.path)

    def to_json(self):
        return {"path": self.path, "cut_dir": None if self.cut_dir is None else self.cut_dir.tolist(),
                "offset": self.offset, "volume": self.volume, "rad": self.rad, "T": self.T}


@dataclass(eq=False)
class PyramidTree:
    n: int
    i: int
    k: int
    P: int
    phi_samples: int
    seed: int
    search: str
    root: PyramidNode
    prefix: np.ndarray = field(repr=False, default=None)

    @property
    def T(self) -> float:
        return self.root.T

    def nodes(self):
        out, stack = [], [self.root]
        while stack:
            nd = stack.pop()
            out.append(nd)
            stack.extend(reversed(nd.children))
        return sorted(out, key=lambda nd: (nd.depth, nd.path))

    def level(self, p):
        return [nd for nd in self.nodes() if nd.depth == p]

    def paths(self):
        """Cut-direction sequences (with the fixed prefix) along every root-to-leaf path."""
        out = []

        def walk(nd, dirs):
            if not nd.children:
                out.append(np.vstack([self.prefix] + dirs) if dirs else self.prefix)
                return
            for sgn, ch in zip((1.0, -1.0), nd.children):
                walk(ch, dirs + [sgn * nd.cut_dir[None, :]])

        walk(self.root, [])
        return out

    def window_violations(self, tol=WINDOW_TOL):
        return [window_violations(V, self.n, self.i, tol, len(self.prefix)) for V in self.paths()]

    def to_json(self):
        return {"n": self.n, "i": self.i, "k": self.k, "P": self.P, "phi_samples": self.phi_samples,
                "seed": self.seed, "search": self.search, "nodes": [nd.to_json() for nd in self.nodes()]}


def _make_node(path, poly):
    c, r = poly.chebyshev
    return PyramidNode(path, poly, poly.volume, r, c)


def _split(node: PyramidNode, v):
    """Children ``(plus, minus)`` of a node for the cut direction ``v``."""
    left, right, t = bisect_equal_volume(node.poly, v)
    return right, left, t


def _score(node, v, k):
    plus, minus, _ = _split(node, v)
    return plus.rad ** k + minus.rad ** k


def _check_params(n, i, k, P):
    if not 2 <= n <= 4:
        raise ValueError("pyramids are supported for 2 <= n <= 4")
    if not 1 <= k <= n - 1:
        raise ValueError("need 1 <= k <= n - 1")
    if not 1 <= i <= n - k - 1:
        raise ValueError("need 1 <= i <= n - k - 1")
    if not 0 <= P <= MAX_DEPTH:
        raise ValueError(f"need 0 <= P <= {MAX_DEPTH}")


def _grid_turn(seed):
    return 0.0 if seed == 0 else float(np.random.default_rng(seed).random())


def _candidates(history, n, i, phi_samples, turn):
    basis = fiber_basis(history, n, i)
    grid = fiber_grid(basis, phi_samples, turn)
    if basis.shape[1] == 2 and phi_samples % 2 == 0:
        grid = grid[: phi_samples // 2]  # phi and -phi give the same cut
    return basis, grid


def _refine_circle(node, basis, v0, k, width):
    """Golden-section polish of the cut angle around ``v0`` inside the fiber circle."""
    th0 = math.atan2(v0 @ basis[:, 1], v0 @ basis[:, 0])

    def f(th):
        return _score(node, math.cos(th) * basis[:, 0] + math.sin(th) * basis[:, 1], k)

    res = minimize_scalar(f, bounds=(th0 - width, th0 + width), method="bounded",
                          options={"xatol": 1e-4, "maxiter": 40})
    th = float(res.x)
    return math.cos(th) * basis[:, 0] + math.sin(th) * basis[:, 1], float(res.fun)


def build_pyramid(n: int = 3, i: int = 1, k: int = 1, P: int = 4, phi_samples: int = 64,
                  seed: int = 0, search: str = "greedy", root: HPolytope | None = None,
                  sequence: DirectionSequence | None = None, refine: bool = True) -> PyramidTree:
    """Recursive volume-bisection tree of depth ``P``.

    ``search`` chooses the cut at each node among the fiber grid:

    * ``"greedy"``: smallest ``Rad^k`` sum of the two children, then a local
      angle polish (for circle fibers);
    * ``"exhaustive"``: exact minimum of the sampled recursion over the whole
      subtree (cost grows like ``phi_samples^P``);
    * ``"random"``: a uniformly random fiber direction per node;
    * ``"sequence"``: the cut ``v_(p+1)`` of a :class:`DirectionSequence` at
      every node of depth ``p``.  Sign flips along a path keep every window
      orthonormal, so one sequence serves all nodes of a level.
    """
    _check_params(n, i, k, P)
    if search == "sequence" and (sequence is None or len(sequence.vectors) < P
                                 or (sequence.n, sequence.i) != (n, i)):
        raise ValueError("sequence search needs a direction sequence of length >= P for the same (n, i)")
    root_poly = ball_polytope(n) if root is None else root
    prefix = np.eye(n)
    turn = _grid_turn(seed)
    rng = np.random.default_rng(seed)

    def leaf_T(nd):
        nd.T = 0.5 * nd.rad ** k
        return nd.T

    def grow(nd, history, depth_left):
        if depth_left == 0:
            return leaf_T(nd)
        if search == "sequence":
            v = sequence.vectors[nd.depth]
        elif search == "random":
            basis = fiber_basis(history, n, i)
            g = rng.standard_normal(basis.shape[1])
            v = basis @ (g / np.linalg.norm(g))
        elif search == "greedy":
            basis, cands = _candidates(history, n, i, phi_samples, turn)
            scores = [_score(nd, v, k) for v in cands]
            j = int(np.argmin(scores))
            v = cands[j]
            if refine and basis.shape[1] == 2:
                v2, s2 = _refine_circle(nd, basis, v, k, 2 * math.pi / phi_samples)
                if s2 < scores[j]:
                    v = v2
        elif search == "exhaustive":
            basis, cands = _candidates(history, n, i, phi_samples, turn)
            best = None
            for v in cands:
                plus, minus, t = _split(nd, v)
                a = _make_node(nd.path + "1", plus)
                b = _make_node(nd.path + "2", minus)
                Ta = grow(a, history + [v], depth_left - 1)
                Tb = grow(b, history + [-v], depth_left - 1)
                if best is None or Ta + Tb < best[0]:
                    best = (Ta + Tb, v, t, a, b)
            nd.T, nd.cut_dir, nd.offset = best[0], best[1], best[2]
            nd.children = (best[3], best[4])
            return nd.T
        else:
            raise ValueError(f"unknown search mode {search!r}")
        plus, minus, t = _split(nd, v)
        a = _make_node(nd.path + "1", plus)
        b = _make_node(nd.path + "2", minus)
        nd.cut_dir, nd.offset, nd.children = np.asarray(v, dtype=float), t, (a, b)
        nd.T = grow(a, history + [v], depth_left - 1) + grow(b, history + [-v], depth_left - 1)
        return nd.T

    root_node = _make_node("", root_poly)
    grow(root_node, list(prefix), P)
    return PyramidTree(n, i, k, P, phi_samples, seed, search, root_node, prefix)


def direction_sequence(n: int, i: int, L: int, mode: str = "random", seed: int = 0,
                       phi_samples: int = 32, k: int = 1, root: HPolytope | None = None) -> DirectionSequence:
    """A valid sequence ``v_1..v_L`` after the fixed prefix ``e_1..e_n``.

    ``random`` draws each vector uniformly from its fiber sphere.
    ``adversarial`` starts from the random sequence of the same seed and runs
    one sweep of coordinate descent on the thickness of the level-uniform
    pyramid; moving ``v_p`` rotates the tail rigidly so every window stays
    orthonormal, and the current vector is always a candidate, so the result
    is never thicker than the random start.
    ``alternating`` (``n = 3, i = 1``) repeats ``e_1, e_2``.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    prefix = np.eye(n)
    if mode == "alternating":
        if window_length(n, i) != 2:
            raise ValueError("alternating sequences need windows of length 2")
        V = np.array([np.eye(n)[a % 2] for a in range(L)])
        seq = DirectionSequence(n, i, prefix, V)
    else:
        rng = np.random.default_rng(seed)
        hist = list(prefix)
        V = []
        for _ in range(L):
            basis = fiber_basis(hist, n, i)
            g = rng.standard_normal(basis.shape[1])
            v = basis @ (g / np.linalg.norm(g))
            V.append(v)
            hist.append(v)
        seq = DirectionSequence(n, i, prefix, np.array(V))
        if mode == "adversarial":
            seq = _descend(seq, k, phi_samples, root)
        elif mode != "random":
            raise ValueError(f"unknown mode {mode!r}")
    bad = seq.violations()
    if bad:
        raise ValueError(f"direction sequence violates orthonormality at index {bad[0]}")
    return seq


def sequence_thickness(seq: DirectionSequence, k: int = 1, root: HPolytope | None = None) -> float:
    tree = build_pyramid(seq.n, seq.i, k, len(seq.vectors), search="sequence", sequence=seq, root=root)
    return tree.T


def _descend(seq, k, phi_samples, root):
    V = seq.vectors.copy()
    best = sequence_thickness(seq, k, root)
    hist = list(seq.prefix)
    for p in range(len(V)):
        basis = fiber_basis(hist, seq.n, seq.i)
        for w in fiber_grid(basis, phi_samples):
            M = _rotation_taking(V[p], w)
            trial = V.copy()
            trial[p:] = V[p:] @ M.T
            cand = DirectionSequence(seq.n, seq.i, seq.prefix, trial)
            T = sequence_thickness(cand, k, root)
            if T < best:
                best, V = T, trial
        hist.append(V[p])
    return DirectionSequence(seq.n, seq.i, seq.prefix, V)


# ---------------------------------------------------------------------------
# thickness and level statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThicknessReport:
    T: float
    level_T: list
    level_min_rad: list
    level_mean_rad: list
    leaf_rads: list

    def to_json(self):
        return {"T": self.T, "level_T": self.level_T, "level_min_rad": self.level_min_rad,
                "level_mean_rad": self.level_mean_rad, "leaf_rads": self.leaf_rads}


def thickness(tree: PyramidTree) -> ThicknessReport:
    """Bottom-up thickness and per-level summaries.

    The infimum over cut directions is taken over finitely many samples, so
    ``T`` over-estimates the true infimum of the recursion.  ``level_T[p]`` is
    ``(1/2) sum Rad^k`` over the nodes at depth ``p``; for greedy trees it is
    the thickness of the depth-``p`` pyramid.
    """
    levels = [tree.level(p) for p in range(tree.P + 1)]
    level_T = [0.5 * math.fsum(nd.rad ** tree.k for nd in lv) for lv in levels]
    return ThicknessReport(
        tree.T, level_T,
        [min(nd.rad for nd in lv) for lv in levels],
        [float(np.mean([nd.rad for nd in lv])) for lv in levels],
        [nd.rad for nd in levels[-1]],
    )


def growth_rate(values) -> float:
    """Per-step geometric growth from a least-squares fit of ``log values`` on the index."""
    y = np.log(np.asarray(values, dtype=float))
    x = np.arange(len(y))
    return float(math.exp(np.polyfit(x, y, 1)[0]))


# ---------------------------------------------------------------------------
# rectangles, projections and N functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxApprox:
    """Rectangle ``R`` with ``R ⊂ A ⊂ lam * R`` (scaling about the center)."""

    center: np.ndarray
    axes: np.ndarray
    sides: np.ndarray
    lam: float
    heights: np.ndarray

    def corners(self, scale=1.0):
        n = len(self.sides)
        E = np.array(np.meshgrid(*[[-0.5, 0.5]] * n, indexing="ij")).reshape(n, -1).T
        return self.center + (E * self.sides * scale) @ self.axes


def rect_approx(p: HPolytope) -> BoxApprox:
    """Rectangle approximation by the farthest-point sweep.

    Starting from a vertex ``a_0``, each ``a_j`` is the vertex farthest from
    the affine span of the previous ones, giving an orthonormal frame and
    heights ``h_j``.  A box with sides ``lam' h_j`` in that frame is fitted
    inside the simplex ``conv(a_0..a_n)`` by a linear program, and the
    containment factor is the smallest ``lam`` with every vertex of ``p``
    inside the box scaled by ``lam``.
    """
    V = p.vertices
    n = p.n
    a0 = V[0]
    pts = [a0]
    Q = np.zeros((0, n))
    h = []
    for _ in range(n):
        D = V - a0
        resid = D - (D @ Q.T) @ Q
        dist = np.linalg.norm(resid, axis=1)
        j = int(np.argmax(dist))
        if dist[j] < 1e-12:
            raise PolytopeError("polytope is lower dimensional")
        Q = np.vstack([Q, resid[j] / dist[j]])
        h.append(dist[j])
        pts.append(V[j])
    h = np.array(h)
    S = (np.array(pts) - a0) @ Q.T  # simplex vertices in frame coordinates
    # simplex as {y : G y <= g}
    hullS = ConvexHull(S)
    G, g = hullS.equations[:, :n], -hullS.equations[:, n]
    E = np.array(np.meshgrid(*[[0.0, 1.0]] * n, indexing="ij")).reshape(n, -1).T
    rows, rhs = [], []
    for e in E:
        # G (r + lam * h * e) <= g
        rows.append(np.hstack([G, (G @ (h * e))[:, None]]))
        rhs.append(g)
    Acon = np.vstack(rows)
    bcon = np.concatenate(rhs)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    status, x, val = kernels.simplex_max(c, Acon, bcon)
    if status != 0 or val <= 0:
        raise PolytopeError("no box fits inside the sweep simplex")
    r, lam_in = x[:n], val
    sides = lam_in * h
    center_y = r + 0.5 * sides
    Y = (V - a0) @ Q.T
    lam = float(np.max(2 * np.abs(Y - center_y) / sides))
    order = np.argsort(sides)
    center = a0 + center_y @ Q
    return BoxApprox(center, Q[order], sides[order], max(lam, 1.0), h)


def random_frames(n, q, samples, rng):
    G = rng.standard_normal((samples, n, q))
    Qs = np.linalg.qr(G)[0]
    return Qs


def _shadow(V, frames):
    """Volumes of the projections of the point set ``V`` onto each frame."""
    q = frames.shape[2]
    Y = np.einsum("ij,sjq->siq", V, frames)
    if q == 1:
        return Y[:, :, 0].max(axis=1) - Y[:, :, 0].min(axis=1)
    out = np.empty(frames.shape[0])
    for s in range(frames.shape[0]):
        try:
            out[s] = ConvexHull(Y[s]).volume
        except QhullError:
            out[s] = 0.0
    return out


def projection_samples(V, n, q, samples, seed):
    """Per-plane shadow volumes of the point set ``V`` on common random ``q``-planes."""
    rng = np.random.default_rng(seed)
    return _shadow(np.asarray(V, dtype=float), random_frames(n, q, samples, rng))


def mean_projection(p: HPolytope, q: int, samples: int = 2000, seed: int = 0):
    """Average ``q``-volume of orthogonal projections, ``(value, stderr)``.

    ``q = 0`` gives 1 and ``q = n`` the volume; other ``q`` average over
    uniformly random ``q``-planes (shared across bodies for equal seeds).
    """
    if not 0 <= q <= p.n:
        raise ValueError("need 0 <= q <= n")
    if q == 0:
        return 1.0, 0.0
    if q == p.n:
        return polytope_volume(p)
    s = projection_samples(p.vertices, p.n, q, samples, seed)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(samples))


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class NFunctionalReport:
    beta: float
    values: dict
    N: float
    argmax: int
    projections: dict

    def to_json(self):
        return {"beta": self.beta, "values": {str(a): v for a, v in self.values.items()},
                "N": self.N, "argmax": self.argmax,
                "projections": {str(q): list(v) for q, v in self.projections.items()}}


def n_functional(p: HPolytope, beta: float = 8.0, samples: int = 1000, seed: int = 0) -> NFunctionalReport:
    """``N_{a,beta} = beta^a Vol^(-1/a) pi_(n-a)^(1/a)`` for ``a = 1..n`` and their maximum."""
    if beta < 2:
        raise ValueError("beta must be at least 2")
    n = p.n
    vol = p.volume
    proj, vals = {}, {}
    for a in range(1, n + 1):
        q = n - a
        proj[q] = mean_projection(p, q, samples, seed)
        vals[a] = beta ** a * vol ** (-1.0 / a) * proj[q][0] ** (1.0 / a)
    a_star = max(vals, key=lambda a: (vals[a], -a))
    return NFunctionalReport(beta, vals, vals[a_star], a_star, proj)


def n_functional_ball(n: int, beta: float) -> dict:
    """Closed form of ``N_{a,beta}`` for the round unit ball."""
    return {a: beta ** a * ball_volume(n) ** (-1.0 / a) * ball_volume(n - a) ** (1.0 / a)
            for a in range(1, n + 1)}


# ---------------------------------------------------------------------------
# per-level audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StarReport:
    rows: list
    holder_ok: bool
    T_growth: float
    rad_inv_growth: float
    additivity: list
    trigger: list
    h_counts: list

    def to_json(self):
        return {"rows": self.rows, "holder_ok": self.holder_ok, "T_growth": self.T_growth,
                "rad_inv_growth": self.rad_inv_growth, "additivity": self.additivity,
                "trigger": self.trigger, "h_counts": self.h_counts}


def holder_exact(rads, k) -> bool:
    """``2^(P(k+1)) <= (sum Rad^k) (sum Rad^-1)^k`` in exact rational arithmetic, ``P = log2(len)``."""
    R = [Fraction(r) for r in rads]
    A = sum((r ** k for r in R), Fraction(0))
    B = sum((1 / r for r in R), Fraction(0))
    N = Fraction(len(R))
    return N ** (k + 1) <= A * B ** k


def section_vertices(child: HPolytope, v, t, tol=1e-9):
    """Vertices of the cut face ``child ∩ {v.x = t}``."""
    V = child.vertices
    return V[np.abs(V @ v - t) <= tol]


def angle_to_subspace(v, basis_rows) -> float:
    """Angle between a unit vector and the span of orthonormal rows."""
    proj = np.linalg.norm(basis_rows @ v)
    return math.acos(min(1.0, proj))


def star_report(tree: PyramidTree, beta: float = 8.0, samples: int = 200, seed: int = 0,
                audit_depth: int | None = None) -> StarReport:
    """Per-level sums of ``Rad^-1`` and ``Rad^k``, the Hölder chain and local audits.

    ``audit_depth`` limits the nodes on which projection-based audits run
    (default: all internal nodes down to depth 3).
    """
    k = tree.k
    rows = []
    all_ok = True
    for p in range(tree.P + 1):
        rads = [nd.rad for nd in tree.level(p)]
        ok = holder_exact(rads, k)
        all_ok &= ok
        rows.append({"p": p, "sum_rad_inv": math.fsum(1 / r for r in rads),
                     "sum_rad_k": math.fsum(r ** k for r in rads),
                     "T_level": 0.5 * math.fsum(r ** k for r in rads), "holder_ok": ok})
    levels = range(1, tree.P + 1) if tree.P >= 2 else range(tree.P + 1)
    T_growth = growth_rate([rows[p]["T_level"] for p in levels]) if tree.P >= 1 else 1.0
    inv_growth = growth_rate([rows[p]["sum_rad_inv"] for p in levels]) if tree.P >= 1 else 1.0

    depth = min(3, tree.P - 1) if audit_depth is None else audit_depth
    n = tree.n
    additivity, trigger, h_counts = [], [], []
    c_angle = ANGLE_FRACTION * math.atan(1 / math.sqrt(n))
    w = window_length(n, tree.i)
    for nd in tree.nodes():
        if nd.depth > depth or not nd.children:
            continue
        plus, minus = nd.children
        if n <= 3:
            rng_seed = seed + len(additivity)
            S = section_vertices(minus.poly, nd.cut_dir, nd.offset)
            q = n - 1
            frames = random_frames(n, q, samples, np.random.default_rng(rng_seed))
            sC = _shadow(nd.poly.vertices, frames)
            sS = _shadow(S, frames) if len(S) > q else np.zeros(samples)
            sA = _shadow(plus.poly.vertices, frames)
            sB = _shadow(minus.poly.vertices, frames)
            diff = sC + sS - sA - sB
            err = float(diff.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
            additivity.append({"path": nd.path, "q": q, "mean_diff": float(diff.mean()), "stderr": err,
                               "max_abs_diff": float(np.abs(diff).max())})
        rep = n_functional(nd.poly, beta, samples, seed)
        a = rep.argmax
        rect = rect_approx(nd.poly)
        if a < n:
            ratio = rect.sides[a] / (beta ** 2 * rect.sides[a - 1])
            trigger.append({"path": nd.path, "a": a, "ratio": float(ratio)})
        # h(L) counter: cuts within the angle threshold of the span of the a shortest sides
        Pspan = rect.axes[:a]
        counts = []
        stack = [(nd, 0, a)]
        while stack:
            x, gen, h = stack.pop()
            if gen == w or not x.children:
                counts.append(h)
                continue
            h_next = h - 1 if angle_to_subspace(x.cut_dir, Pspan) <= c_angle else h
            for ch in x.children:
                stack.append((ch, gen + 1, h_next))
        h_counts.append({"path": nd.path, "a": a, "min_h": int(min(counts))})
    return StarReport(rows, bool(all_ok), T_growth, inv_growth, additivity, trigger, h_counts)
