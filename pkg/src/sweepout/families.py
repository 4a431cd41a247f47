"""Families of mod-2 cycles in the unit ball.

A :class:`Family` maps points of a parameter domain to cycles.  This module
provides the built-in constructions (vertical chords, tuples of parallel
chords, root sets, zero sets of bivariate polynomials), the combinators that
suspend, translate and rotate families, and a sampler for the largest volume
met by a family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm, qmc

from .algebraic import Poly1, Poly2, marching_squares, sturm_roots_mod2
from .chains import ChainStructureError, PointCycle, SegmentCycle, disk_area_distance

GOLDEN = (1 + math.sqrt(5)) / 2
GENERIC_ANGLE = math.atan(1 / GOLDEN ** 2)
"""Irrational slope: a line at this angle never contains an edge of an axis-parallel lattice."""

SOBOL_MAX_DIM = 21201  # scipy's direction-number table; wider domains use pseudo-random points only

DOMAIN_KINDS = ("interval", "box", "simplex", "sphere", "projective", "product")


@dataclass(frozen=True)
class ParamDomain:
    """Parameter domain descriptor.

    ``dim`` is the topological dimension.  Points of a sphere or projective
    domain of dimension ``m`` are unit vectors in ``R^(m+1)``; interval, box and
    simplex points have ``dim`` coordinates in ``[lo, hi]`` (simplex points are
    sorted).  A product concatenates the coordinates of its factors.
    """

    kind: str
    dim: int
    lo: float = -1.0
    hi: float = 1.0
    factors: tuple = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.dim < 0:
            raise ValueError("domain dimension must be nonnegative")

    @classmethod
    def product(cls, *factors):
        return cls("product", sum(f.dim for f in factors), factors=tuple(factors))

    @property
    def n_coords(self) -> int:
        if self.kind == "product":
            return sum(f.n_coords for f in self.factors)
        if self.kind in ("sphere", "projective"):
            return self.dim + 1
        return self.dim

    def from_unit(self, U) -> np.ndarray:
        """Map points of the unit cube ``[0, 1]^n_coords`` into the domain."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self.kind == "product":
            out, s = [], 0
            for f in self.factors:
                out.append(f.from_unit(U[:, s:s + f.n_coords]))
                s += f.n_coords
            return np.hstack(out)
        if self.kind in ("sphere", "projective"):
            g = norm.ppf(np.clip(U, 1e-12, 1 - 1e-12))
            return g / np.linalg.norm(g, axis=1, keepdims=True)
        X = self.lo + U * (self.hi - self.lo)
        return np.sort(X, axis=1) if self.kind == "simplex" else X

    def contains(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.n_coords:
            return False
        if self.kind == "product":
            s = 0
            for f in self.factors:
                if not f.contains(x[s:s + f.n_coords], tol):
                    return False
                s += f.n_coords
            return True
        if self.kind in ("sphere", "projective"):
            return abs(np.linalg.norm(x) - 1.0) <= tol
        inside = bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        if self.kind == "simplex":
            inside &= bool(np.all(np.diff(x) >= -tol))
        return inside

    def to_json(self):
        out = {"kind": self.kind, "dims": self.dim}
        if self.kind == "product":
            out["factors"] = [f.to_json() for f in self.factors]
        return out


@dataclass(frozen=True)
class Family:
    """A map from a parameter domain to mod-2 cycles of dimension ``k`` in ``B^n``.

    ``anchors`` are parameters known to be good candidates for the maximum
    volume; the sampler evaluates them before the low-discrepancy points.
    ``cover`` optionally maps a point array to candidate parameters whose
    cycles should pass through (or near) all of the points.
    """

    label: str
    k: int
    n: int
    domain: ParamDomain
    evaluate: Callable = field(repr=False, compare=False)
    anchors: tuple = ()
    cover: Callable = field(default=None, repr=False, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.domain.n_coords:
            raise ValueError(f"{self.label}: expected {self.domain.n_coords} parameters, got {x.shape[0]}")
        return self.evaluate(x)

    def to_json(self, stats=None):
        out = {"label": self.label, "k": self.k, "n": self.n, "domain": self.domain.to_json()}
        if stats is not None:
            out["stats"] = stats.to_json()
        return out


@dataclass(frozen=True)
class FamilyStats:
    max_volume: float
    argmax: np.ndarray
    samples: int
    seed: int

    def to_json(self):
        return {"max_volume": self.max_volume, "argmax": [float(v) for v in self.argmax],
                "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class FlatDisks:
    """Mod-2 2-cycle made of flat round disks (one per suspended point)."""

    centers: np.ndarray
    radii: np.ndarray
    k: int = 2

    def __len__(self):
        return int(len(self.radii))

    def volume(self) -> float:
        return float(math.fsum(math.pi * self.radii ** 2))


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

def chord_cycle(xs) -> SegmentCycle:
    """Vertical chords ``{x = t} ∩ B^2`` for each ``t`` in ``xs`` (no cancellation)."""
    xs = np.asarray(xs, dtype=float).ravel()
    xs = xs[np.abs(xs) < 1.0]
    h = np.sqrt(1.0 - xs ** 2)
    return SegmentCycle(np.column_stack([xs, -h]), np.column_stack([xs, h]))


def _odd_values(t):
    vals, counts = np.unique(np.asarray(t, dtype=float), return_counts=True)
    return vals[counts % 2 == 1]


def vertical_lines() -> Family:
    """Chords ``x = t`` of the unit disk for ``t`` in ``[-1, 1]``."""
    return Family("vertical_lines", 1, 2, ParamDomain("interval", 1),
                  lambda x: chord_cycle(x), anchors=(np.array([0.0]),),
                  cover=lambda pts: [np.array([x]) for x in np.asarray(pts)[:, 0]])


def chords_through(xs, p: int) -> np.ndarray:
    """Sorted ``p``-tuple whose cycle is the chords at the distinct values ``xs``.

    Spare slots hold ``-1``, where the chord is empty.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    if len(xs) > p:
        raise ValueError("more chords requested than the family carries")
    return np.sort(np.concatenate([xs, np.full(p - len(xs), -1.0)]))


def parallel_tuples(p: int) -> Family:
    """Unions of ``p`` vertical chords ``x = t_1 <= ... <= t_p``; coincident chords cancel in pairs."""
    if p < 1:
        raise ValueError("p must be at least 1")
    spread = 1e-6 * (np.arange(p) - (p - 1) / 2)
    return Family(f"parallel_tuples({p})", 1, 2, ParamDomain("simplex", p),
                  lambda x: chord_cycle(_odd_values(x)), anchors=(spread,),
                  cover=lambda pts: _tuple_cover(pts, p))


def _tuple_cover(pts, p):
    xs = np.unique(np.asarray(pts, dtype=float)[:, 0])
    return [chords_through(xs, p)] if len(xs) <= p else []


def roots_family(p: int) -> Family:
    """Sign-change roots in ``(-1, 1)`` of the polynomial with coefficient vector on ``S^p``."""
    if p < 1:
        raise ValueError("p must be at least 1")

    def ev(c):
        return PointCycle(sturm_roots_mod2(Poly1(c), (-1.0, 1.0)).reshape(-1, 1))

    return Family(f"roots({p})", 0, 1, ParamDomain("projective", p), ev)


def _poly2_from_vector(d, v):
    c = np.zeros((d + 1, d + 1))
    i, j = np.indices(c.shape)
    c[i + j <= d] = v
    return Poly2(c)


def algebraic_family(d: int, resolution: int = 128) -> Family:
    """Zero sets in the unit disk of degree-``d`` bivariate polynomials (coefficient sphere)."""
    m = (d + 1) * (d + 2) // 2

    def ev(v):
        return marching_squares(_poly2_from_vector(d, v), resolution)

    def cover(pts):
        pts = np.asarray(pts, dtype=float)
        if d < 1 or len(pts) == 0 or len(pts) > 2:
            return []
        return [_line_vector(d, pts[0], pts[-1])]

    return Family(f"algebraic({d})", 1, 2, ParamDomain("projective", m - 1), ev, cover=cover)


def _line_vector(d, a, b):
    """Unit coefficient vector of the line through ``a`` and ``b`` (horizontal if they coincide)."""
    dx, dy = b - a
    if math.hypot(dx, dy) < 1e-12:
        dx, dy = 1.0, 0.0
    c = np.zeros((d + 1, d + 1))
    c[0, 0] = dx * a[1] - dy * a[0]
    c[1, 0] = dy
    c[0, 1] = -dx
    i, j = np.indices(c.shape)
    v = c[i + j <= d]
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# combinators
# ---------------------------------------------------------------------------

def suspend_cycle(c: PointCycle, k_extra: int):
    """Replace each point by the axis-parallel ``k_extra``-plane through it, clipped to the ball."""
    if k_extra not in (1, 2):
        raise ValueError("suspension is supported for k_extra in {1, 2} only")
    pts = c.points
    r2 = 1.0 - (pts ** 2).sum(axis=1)
    keep = r2 > 0
    pts, h = pts[keep], np.sqrt(r2[keep])
    n0 = c.points.shape[1]
    if k_extra == 1:
        lo = np.column_stack([pts, -h])
        hi = np.column_stack([pts, h])
        if len(pts) == 0:
            return SegmentCycle.empty(n0 + 1)
        return SegmentCycle(lo, hi)
    centers = np.column_stack([pts, np.zeros((len(pts), 2))]) if len(pts) else np.zeros((0, n0 + 2))
    return FlatDisks(centers, h)


def suspend(f: Family, k_extra: int) -> Family:
    """Product of each 0-cycle of ``f`` with ``R^k_extra``, restricted to the unit ball."""
    if f.k != 0:
        raise ValueError("only families of 0-cycles can be suspended")
    if k_extra not in (1, 2):
        raise ValueError("suspension is supported for k_extra in {1, 2} only")
    return Family(f"suspend({f.label},{k_extra})", k_extra, f.n + k_extra, f.domain,
                  lambda x: suspend_cycle(f(x), k_extra), f.anchors)


def lift_to_height(c: SegmentCycle, t: float) -> SegmentCycle:
    """Planar cycle placed in the plane ``x_3 = t`` and clipped to the unit 3-ball."""
    if abs(t) >= 1.0 or len(c) == 0:
        return SegmentCycle.empty(3)
    up = lambda a: np.column_stack([a, np.full(len(a), t)])
    return SegmentCycle(up(c.starts), up(c.ends), c.carriers).clip_to_ball(1.0)


def translate(f: Family) -> Family:
    """Family over ``domain x [-1, 1]`` of the cycles ``f(p) x {t}`` in the unit 3-ball."""
    if f.k != 1 or f.n != 2:
        raise ValueError("translate expects a family of 1-cycles in the plane")
    m = f.domain.n_coords

    def ev(x):
        return lift_to_height(f(x[:m]), float(x[m]))

    def cover(pts):
        pts = np.asarray(pts, dtype=float)
        if f.cover is None or len(pts) == 0 or np.ptp(pts[:, 2]) > 1e-12:
            return []
        t = float(pts[:, 2].mean())
        return [np.append(x, t) for x in f.cover(pts[:, :2])]

    anchors = tuple(np.append(a, 0.0) for a in f.anchors)
    return Family(f"translate({f.label})", 1, 3,
                  ParamDomain.product(f.domain, ParamDomain("interval", 1)), ev, anchors, cover)


def rotation_matrix(n: int, angle: float) -> np.ndarray:
    """Rotation by ``angle`` in the plane of the first two coordinates."""
    M = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    M[:2, :2] = [[c, -s], [s, c]]
    return M


def rotate_cycle(c, M):
    if isinstance(c, SegmentCycle):
        return c.transformed(M)
    if isinstance(c, PointCycle):
        return PointCycle(c.points @ M.T)
    if isinstance(c, FlatDisks):
        return FlatDisks(c.centers @ M.T, c.radii)
    raise TypeError(f"cannot rotate {type(c).__name__}")


def rotate(f: Family, rotation=GENERIC_ANGLE) -> Family:
    """Post-compose the evaluator with a rotation (an angle in the first coordinate plane or an orthogonal matrix)."""
    if np.isscalar(rotation):
        if f.n < 2:
            raise ValueError("an angle rotation needs ambient dimension >= 2")
        M = rotation_matrix(f.n, float(rotation))
    else:
        M = np.asarray(rotation, dtype=float)
        if M.shape != (f.n, f.n) or not np.allclose(M.T @ M, np.eye(f.n), atol=1e-9):
            raise ChainStructureError("rotation must be an orthogonal n x n matrix")
    cover = None if f.cover is None else (lambda pts: f.cover(np.asarray(pts, dtype=float) @ M))
    return Family(f"rotate({f.label})", f.k, f.n, f.domain, lambda x: rotate_cycle(f(x), M), f.anchors, cover)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_params(domain: ParamDomain, budget: int, seed: int) -> np.ndarray:
    """Half scrambled-Sobol, half pseudo-random parameter points."""
    d = domain.n_coords
    if d == 0:
        return np.zeros((budget, 0))
    n_qmc = budget // 2 if d <= SOBOL_MAX_DIM else 0
    rng = np.random.default_rng(seed)
    parts = []
    if n_qmc:
        sob = qmc.Sobol(d, scramble=True, seed=rng)
        m = int(math.ceil(math.log2(n_qmc)))
        parts.append(sob.random_base2(m)[:n_qmc])
    parts.append(rng.random((budget - n_qmc, d)))
    return domain.from_unit(np.vstack(parts))


def family_max_volume(f: Family, budget: int = 1024, seed: int = 0) -> FamilyStats:
    """Largest cycle volume over the anchors and ``budget`` sampled parameters.

    Ties are broken toward the lexicographically smallest parameter, so the
    result does not depend on evaluation order.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    params = list(f.anchors) + list(sample_params(f.domain, budget, seed))
    best_v, best_x = -math.inf, None
    for x in params:
        v = f(x).volume()
        if v > best_v or (v == best_v and tuple(x) < tuple(best_x)):
            best_v, best_x = v, np.asarray(x, dtype=float)
    return FamilyStats(float(best_v), best_x, len(params), seed)


# ---------------------------------------------------------------------------
# distances used by continuity checks
# ---------------------------------------------------------------------------

def point_cycle_distance(c1: PointCycle, c2: PointCycle) -> float:
    """Least length of a relative 1-chain in ``[-1, 1]`` with boundary ``c1 + c2``."""
    pts = np.concatenate([c1.points[:, 0], c2.points[:, 0]])
    pts = _odd_values(pts)
    pts = pts[np.abs(pts) < 1.0]
    marks = np.concatenate([[-1.0], pts, [1.0]])
    gaps = np.diff(marks)
    L = float(gaps[1::2].sum())
    return min(L, 2.0 - L)


def cycle_distance(c1, c2, N: int = 128) -> float:
    """Area distance between two cycles of the same family (exact on the line, raster in the disk)."""
    if isinstance(c1, PointCycle):
        return point_cycle_distance(c1, c2)
    if isinstance(c1, SegmentCycle) and c1.n == 2:
        return disk_area_distance(c1, c2, N)
    raise TypeError("area distance is available for 0-cycles of B^1 and 1-cycles of B^2")
