"""Skeleton squeezing of cycles onto lattice skeleta.

A :class:`SqueezeMap` pushes space into the ``l``-skeleton of a cubical
lattice of side ``s``: inside each cell a small cube around the center (the
core) is stretched linearly onto the whole cell, and everything else is
projected radially (in the sup norm) onto the cell boundary, face by face,
until an ``l``-dimensional face is reached.  Segments are pushed exactly:
the map is a projective map on each piece cut out by lattice planes, core
boundaries and the diagonals ``u_i = +-u_j``, so images of straight pieces
are straight.

On top of the map this module provides mod-2 cancellation of pieces lying on
lattice edges, the bent family of parallel chords and the multiscale
composition of squeezes in the 3-ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._pykernels import FACE_BIAS, FACE_BITS
from .chains import FREE, SegmentCycle
from .families import (
    GENERIC_ANGLE,
    Family,
    FamilyStats,
    ParamDomain,
    _odd_values,
    chord_cycle,
    family_max_volume,
    parallel_tuples,
    rotation_matrix,
    sample_params,
)

DEFAULT_EPS = 0.1
R_MARGIN = 1e-6
SNAP_TOL = 1e-9
MIN_PIECE = 1e-12


class SqueezeError(ValueError):
    """Invalid squeeze parameters or unsupported pipeline."""


def generic_offset(n: int, s: float, seed) -> np.ndarray:
    """Lattice translation drawn uniformly from ``[0, s)^n``."""
    return np.random.default_rng(seed).uniform(0.0, s, n)


@dataclass(frozen=True, eq=False)
class SqueezeMap:
    """The squeeze onto the ``l``-skeleton of the lattice ``offset + s Z^n``.

    ``eps`` is the core half-width as a fraction of the half side.
    """

    n: int
    l: int
    s: float
    eps: float = DEFAULT_EPS
    offset: np.ndarray = None

    def __post_init__(self):
        if not 0 <= self.l < self.n:
            raise SqueezeError("need 0 <= l < n")
        if not self.s > 0:
            raise SqueezeError("lattice side must be positive")
        if not 0 < self.eps < 1:
            raise SqueezeError("core fraction eps must lie in (0, 1)")
        off = np.zeros(self.n) if self.offset is None else np.asarray(self.offset, dtype=float)
        if off.shape != (self.n,):
            raise SqueezeError("offset must have one entry per axis")
        off = off.copy()
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)

    @classmethod
    def generic(cls, n, l, s, eps=DEFAULT_EPS, seed=0):
        return cls(n, l, s, eps, generic_offset(n, s, seed))

    @property
    def displacement_bound(self) -> float:
        return self.s * math.sqrt(self.n)

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return kernels.squeeze_points(X, self.l, self.s, self.eps, self.offset)

    def push(self, cycle: SegmentCycle) -> SegmentCycle:
        """Exact image of a segment cycle; pieces on ``l``-faces carry the face code."""
        if cycle.n != self.n:
            raise SqueezeError("cycle and map live in different dimensions")
        if len(cycle) == 0:
            return SegmentCycle.empty(self.n)
        P0, P1, codes, _levels, _src = kernels.push_segments(
            cycle.starts, cycle.ends, self.l, self.s, self.eps, self.offset)
        return SegmentCycle(P0, P1, codes)

    def to_json(self):
        return {"n": self.n, "l": self.l, "s": self.s, "eps": self.eps, "offset": self.offset.tolist()}


def squeeze_point(m: SqueezeMap, x) -> np.ndarray:
    """Image of a single point."""
    return m(np.asarray(x, dtype=float)[None, :])[0]


def push_polyline(m: SqueezeMap, polyline, tol: float = SNAP_TOL) -> SegmentCycle:
    """Push a polyline (vertex array) or a segment cycle through ``m``.

    The pushforward is exact, so ``tol`` only controls snapping of
    edge-carried endpoints onto the lattice.
    """
    if isinstance(polyline, SegmentCycle):
        cyc = polyline
    else:
        V = np.asarray(polyline, dtype=float)
        cyc = SegmentCycle(V[:-1], V[1:])
    return snap_to_carriers(m.push(cyc), m.s, m.offset)


# ---------------------------------------------------------------------------
# face codes
# ---------------------------------------------------------------------------

def decode_faces(codes, n) -> np.ndarray:
    """Half-step indices ``h`` of face codes; the face center is ``offset + h s / 2``."""
    codes = np.asarray(codes, dtype=np.int64)
    mask = (1 << FACE_BITS) - 1
    return np.stack([((codes >> (FACE_BITS * j)) & mask) - FACE_BIAS for j in range(n)], axis=1)


def encode_faces(H) -> np.ndarray:
    H = np.asarray(H, dtype=np.int64)
    out = np.zeros(H.shape[0], dtype=np.int64)
    for j in range(H.shape[1]):
        out |= (H[:, j] + FACE_BIAS) << (FACE_BITS * j)
    return out


def snap_to_carriers(cyc: SegmentCycle, s, offset) -> SegmentCycle:
    """Set the fixed coordinates of face-carried pieces exactly to their lattice planes."""
    on = cyc.carriers != FREE
    if not on.any():
        return cyc
    H = decode_faces(cyc.carriers[on], cyc.n)
    fixed = H % 2 == 0
    plane = offset + H * (0.5 * s)
    a, b = cyc.starts.copy(), cyc.ends.copy()
    a[on] = np.where(fixed, plane, a[on])
    b[on] = np.where(fixed, plane, b[on])
    return SegmentCycle(a, b, cyc.carriers)


def tag_skeleton(cyc: SegmentCycle, s, offset, tol: float = SNAP_TOL) -> SegmentCycle:
    """Tag free segments lying on lattice edges (within ``tol``) with edge codes.

    Tagged segments are split at lattice vertices so that each piece has a
    single carrier edge.
    """
    offset = np.asarray(offset, dtype=float)
    starts, ends, cars = [], [], []
    for a, b, c in zip(cyc.starts, cyc.ends, cyc.carriers):
        d = b - a
        big = np.abs(d) > tol
        mid = 0.5 * (a + b)
        r = (mid - offset) / s
        on_planes = np.abs(r - np.round(r)) * s <= tol
        if c != FREE or big.sum() != 1 or not np.all(on_planes | big):
            starts.append(a)
            ends.append(b)
            cars.append(c)
            continue
        ax = int(np.argmax(big))
        lo, hi = sorted((a[ax], b[ax]))
        k0, k1 = (lo - offset[ax]) / s, (hi - offset[ax]) / s
        cuts = [lo] + [offset[ax] + k * s for k in range(math.floor(k0) + 1, math.ceil(k1))] + [hi]
        base = offset + np.round(r) * s
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            if x1 - x0 <= MIN_PIECE:
                continue
            p, q = base.copy(), base.copy()
            p[ax], q[ax] = x0, x1
            h = np.round((base - offset) / (0.5 * s)).astype(np.int64)
            h[ax] = 2 * math.floor((0.5 * (x0 + x1) - offset[ax]) / s) + 1
            starts.append(p)
            ends.append(q)
            cars.append(int(encode_faces(h[None, :])[0]))
    if not starts:
        return SegmentCycle.empty(cyc.n)
    return SegmentCycle(np.array(starts), np.array(ends), np.array(cars, dtype=np.int64))


# ---------------------------------------------------------------------------
# cancellation
# ---------------------------------------------------------------------------

def cancel_on_skeleton(cyc: SegmentCycle, s, offset, snap: float = SNAP_TOL,
                       min_len: float = MIN_PIECE) -> SegmentCycle:
    """Keep the odd-coverage part of every lattice edge; other pieces pass through.

    Output is ordered by edge code, then interval start, followed by the
    pieces that are not carried by an edge.
    """
    offset = np.asarray(offset, dtype=float)
    n = cyc.n
    car = cyc.carriers
    on = car != FREE
    if on.any():
        H = decode_faces(car[on], n)
        is_edge = (H % 2 != 0).sum(axis=1) == 1
        idx = np.flatnonzero(on)[is_edge]
    else:
        idx = np.zeros(0, dtype=np.int64)
    rest = np.ones(len(cyc), dtype=bool)
    rest[idx] = False
    if len(idx) == 0:
        return cyc
    codes = car[idx]
    H = decode_faces(codes, n)
    axis = np.argmax(H % 2 != 0, axis=1)
    x0 = cyc.starts[idx, axis]
    x1 = cyc.ends[idx, axis]
    keys = np.concatenate([codes, codes])
    vals = np.concatenate([np.minimum(x0, x1), np.maximum(x0, x1)])
    ax2 = np.concatenate([axis, axis])
    order = np.lexsort((vals, keys))
    keys, vals, ax2 = keys[order], vals[order], ax2[order]
    # snap to lattice vertices
    r = (vals - offset[ax2]) / s
    near = np.abs(r - np.round(r)) * s <= snap
    vals = np.where(near, offset[ax2] + np.round(r) * s, vals)
    k = keys[0::2]
    lo, hi = vals[0::2], vals[1::2]
    ax = ax2[0::2]
    # merge touching intervals on the same edge
    if len(k) > 1:
        touch = (k[1:] == k[:-1]) & (lo[1:] - hi[:-1] <= snap)
        if touch.any():
            start_new = np.concatenate([[True], ~touch])
            first = np.flatnonzero(start_new)
            last = np.concatenate([first[1:], [len(k)]]) - 1
            k, lo, ax = k[first], lo[first], ax[first]
            hi = hi[last]
    keep = hi - lo > min_len
    k, lo, hi, ax = k[keep], lo[keep], hi[keep], ax[keep]
    Hk = decode_faces(k, n) if len(k) else np.zeros((0, n), dtype=np.int64)
    base = offset + Hk * (0.5 * s)
    a, b = base.copy(), base.copy()
    rr = np.arange(len(k))
    a[rr, ax] = lo
    b[rr, ax] = hi
    out = SegmentCycle(a, b, k)
    if rest.any():
        out = out.concat(SegmentCycle(cyc.starts[rest], cyc.ends[rest], cyc.carriers[rest]))
    return out


def skeleton_mass_in_disk(s, offset, radius: float = 1.0) -> float:
    """Total length of the planar lattice 1-skeleton inside the disk of given radius."""
    total = 0.0
    for j in range(2):
        k = np.arange(math.floor((-radius - offset[j]) / s), math.ceil((radius - offset[j]) / s) + 1)
        x = offset[j] + k * s
        x = x[np.abs(x) < radius]
        total += math.fsum(2 * np.sqrt(radius * radius - x * x))
    return total


# ---------------------------------------------------------------------------
# bend and cancel (plane)
# ---------------------------------------------------------------------------

def resolve_eps(eps, s) -> float:
    """``"auto"`` shrinks the core with the lattice: ``0.1 * s`` (capped at the default)."""
    if eps == "auto":
        return min(DEFAULT_EPS, 0.1 * s)
    return float(eps)


def bend_radius(s: float, n: int = 2) -> float:
    return 1.0 + s * math.sqrt(n) + R_MARGIN


def bend_cycle(t, m: SqueezeMap, R: float, angle: float = GENERIC_ANGLE) -> SegmentCycle:
    """Chords ``x = t_i`` of ``B(R)``, rotated, squeezed, cancelled and clipped to the unit disk."""
    chords = chord_cycle(_odd_values(t)).scaled(R).transformed(rotation_matrix(2, angle))
    pushed = m.push(chords)
    return cancel_on_skeleton(pushed, m.s, m.offset).clip_to_ball(1.0)


def bend_setup(p: int, s: float, eps=DEFAULT_EPS, seed: int = 0, R: float | None = None):
    """The squeeze map and ball radius used by the bent family."""
    if p < 1 or not 0 < s <= 1:
        raise SqueezeError("need p >= 1 and 0 < s <= 1")
    m = SqueezeMap.generic(2, 1, s, resolve_eps(eps, s), seed)
    return m, (bend_radius(s) if R is None else R)


def bent_family(p: int, s: float, eps=DEFAULT_EPS, seed: int = 0, R: float | None = None) -> Family:
    """Parallel chords pushed into the 1-skeleton of a side-``s`` lattice and cancelled mod 2."""
    m, R = bend_setup(p, s, eps, seed, R)
    base = parallel_tuples(p)
    M = rotation_matrix(2, GENERIC_ANGLE)

    def cover(pts):
        # inside a cell core the squeeze is the expansion y -> c + (y - c) / eps,
        # so the chord through c + eps (q - c) is carried through q
        pts = np.asarray(pts, dtype=float)
        c = m.offset + (np.floor((pts - m.offset) / m.s) + 0.5) * m.s
        y = c + m.eps * (pts - c)
        xs = (y @ M)[:, 0] / R
        return base.cover(np.column_stack([xs, np.zeros(len(xs))]))

    return Family(f"bent({p},{s:.6g})", 1, 2, base.domain, lambda x: bend_cycle(x, m, R), base.anchors, cover)


@dataclass(frozen=True)
class BendResult:
    p: int
    s: float
    eps: float
    R: float
    offset: np.ndarray
    stats: FamilyStats
    skeleton_mass: float
    free_length: float
    skeleton_length: float

    @property
    def max_length(self) -> float:
        return self.stats.max_volume

    def row(self):
        return {"p": self.p, "s": self.s, "max_length": self.max_length,
                "skeleton_mass": self.skeleton_mass, "free_length": self.free_length,
                "seed": self.stats.seed}


def bend_and_cancel(p: int, s: float | None = None, eps=DEFAULT_EPS, seed: int = 0,
                    budget: int = 32, R: float | None = None) -> BendResult:
    """Largest length over sampled members of the bent family of ``p`` chords.

    ``s`` defaults to ``p ** -0.5``.
    """
    s = p ** -0.5 if s is None else float(s)
    m, R = bend_setup(p, s, eps, seed, R)
    fam = bent_family(p, s, eps, seed, R)
    stats = family_max_volume(fam, budget, seed)
    best = fam(stats.argmax)
    return BendResult(p, s, m.eps, R, m.offset, stats,
                      skeleton_mass_in_disk(s, m.offset), best.free_length(), best.skeleton_length())


# ---------------------------------------------------------------------------
# multiscale squeezing in the 3-ball
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SqueezeSchedule:
    """Composition of squeezes onto the ``n-1, n-2, ..., k`` skeleta at shrinking scales.

    ``s_i = prod_{j <= i} 2^(-Q_j / (n - j))``; stage ``i`` squeezes onto the
    ``(n - 1 - i)``-skeleton of a lattice of side ``s_i``.
    """

    n: int
    k: int
    Q: tuple
    eps: object = DEFAULT_EPS
    seed: int = 0
    scales: tuple = field(init=False)
    stages: tuple = field(init=False)

    def __post_init__(self):
        if len(self.Q) != self.n - self.k:
            raise SqueezeError("need one exponent per stage (n - k of them)")
        if any(q < 0 for q in self.Q):
            raise SqueezeError("exponents must be nonnegative")
        scales, acc = [], 1.0
        for j, q in enumerate(self.Q):
            acc *= 2.0 ** (-q / (self.n - j))
            scales.append(acc)
        rng = np.random.default_rng(self.seed)
        stages = tuple(SqueezeMap(self.n, self.n - 1 - i, s, resolve_eps(self.eps, s),
                                  rng.uniform(0.0, s, self.n))
                       for i, s in enumerate(scales))
        object.__setattr__(self, "Q", tuple(int(q) for q in self.Q))
        object.__setattr__(self, "scales", tuple(scales))
        object.__setattr__(self, "stages", stages)

    @property
    def displacement_bound(self) -> float:
        return sum(m.displacement_bound for m in self.stages)

    def to_json(self):
        return {"n": self.n, "k": self.k, "Q": list(self.Q), "s": list(self.scales),
                "offsets": [m.offset.tolist() for m in self.stages]}


def multiscale_radius(n: int = 3) -> float:
    """Ball radius large enough for any schedule with scales <= 1 and two stages."""
    return 1.0 + 2 * math.sqrt(n) + R_MARGIN


def vertical_lines_3d(points) -> SegmentCycle:
    """Lines ``{(a, b)} x R`` through planar points, clipped to the unit 3-ball."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts):
        uniq, cnt = np.unique(pts, axis=0, return_counts=True)
        pts = uniq[cnt % 2 == 1]
    r2 = 1.0 - (pts ** 2).sum(axis=1)
    pts, h = pts[r2 > 0], np.sqrt(r2[r2 > 0])
    if len(pts) == 0:
        return SegmentCycle.empty(3)
    return SegmentCycle(np.column_stack([pts, -h]), np.column_stack([pts, h]))


MULTISCALE_PLANES = 32
MULTISCALE_ROOTS = 8


def multiscale_family(Q0: int, Q1: int, planes: int = MULTISCALE_PLANES,
                      roots: int = MULTISCALE_ROOTS) -> Family:
    """Sums of translates of a root-set family suspended along ``x_3``.

    A parameter holds ``planes * 2^Q0`` abscissas ``t_j`` and, for each,
    ``roots * 2^Q1`` roots ``b_jm`` in ``[-1, 1]``.  The cycle is the set of
    vertical lines through the points ``(t_j, b_jm sqrt(1 - t_j^2))`` of the
    unit disk (mod 2), so the lines of one translate fill the plane ``x_1 = t_j``.
    The factors ``planes`` and ``roots`` are constant multipliers of the family
    size; they do not change how the size grows with ``Q0`` and ``Q1``.  The
    defaults make every lattice slab and column see many lines, so the mod-2
    cancellation saturates already at small ``Q``.
    """
    A, B = planes * 2 ** Q0, roots * 2 ** Q1
    dim = A * (1 + B)

    def ev(x):
        t = x[:A]
        b = x[A:].reshape(A, B)
        y = b * np.sqrt(np.maximum(1.0 - t * t, 0.0))[:, None]
        return vertical_lines_3d(np.column_stack([np.repeat(t, B), y.ravel()]))

    return Family(f"multiscale({Q0},{Q1})", 1, 3, ParamDomain("box", dim), ev)


@dataclass(frozen=True)
class StageReport:
    l: int
    s: float
    pieces: int
    carriers: int
    free_pieces: int
    max_diameter: float


@dataclass(frozen=True)
class MultiscaleResult:
    schedule: SqueezeSchedule
    stats: FamilyStats
    stages: tuple
    R: float

    @property
    def max_volume(self) -> float:
        return self.stats.max_volume


def _carrier_extents(cyc: SegmentCycle):
    """Per-carrier bounding boxes ``(codes, lo, hi)`` of the carried pieces."""
    on = cyc.carriers != FREE
    car = cyc.carriers[on]
    if len(car) == 0:
        return car, np.zeros((0, cyc.n)), np.zeros((0, cyc.n))
    return _reduce_extents(np.concatenate([car, car]),
                           np.vstack([cyc.starts[on], cyc.ends[on]]),
                           np.vstack([cyc.starts[on], cyc.ends[on]]))


def _reduce_extents(keys, lo, hi):
    order = np.argsort(keys, kind="stable")
    keys, lo, hi = keys[order], lo[order], hi[order]
    first = np.flatnonzero(np.concatenate([[True], keys[1:] != keys[:-1]]))
    return keys[first], np.minimum.reduceat(lo, first, axis=0), np.maximum.reduceat(hi, first, axis=0)


class _StageTally:
    """Piece counts and diameters of one stage, accumulated over chunks."""

    def __init__(self, m: SqueezeMap):
        self.m, self.n_free, self.diam = m, 0, 0.0
        self.ext = []

    def add(self, cyc: SegmentCycle):
        free = cyc.carriers == FREE
        self.n_free += int(free.sum())
        if free.any():
            self.diam = max(self.diam, float(cyc.lengths()[free].max()))
        self.ext.append(_carrier_extents(cyc))

    def report(self) -> StageReport:
        keys = np.concatenate([e[0] for e in self.ext]) if self.ext else np.zeros(0, dtype=np.int64)
        n_car, diam = 0, self.diam
        if len(keys):
            k, lo, hi = _reduce_extents(keys, np.vstack([e[1] for e in self.ext]),
                                        np.vstack([e[2] for e in self.ext]))
            n_car = len(k)
            diam = max(diam, float(np.linalg.norm(hi - lo, axis=1).max()))
        return StageReport(self.m.l, self.m.s, n_car + self.n_free, n_car, self.n_free, diam)


CHUNK_PIECES = 400_000


def _chunks(cyc: SegmentCycle, s_min: float):
    """Split a cycle into runs of segments whose pushed images stay moderately sized."""
    est = np.cumsum(cyc.lengths() * (3.0 / s_min) + 1.0)
    cuts = np.searchsorted(est, np.arange(CHUNK_PIECES, est[-1] if len(est) else 0, CHUNK_PIECES))
    bounds = np.unique(np.concatenate([[0], cuts, [len(cyc)]]))
    for a, b in zip(bounds[:-1], bounds[1:]):
        sl = np.arange(a, b)
        yield SegmentCycle(cyc.starts[sl], cyc.ends[sl], cyc.carriers[sl])


def multiscale_cycle(cyc: SegmentCycle, schedule: SqueezeSchedule, R: float, report=False):
    """Scale to ``B(R)``, apply every stage, cancel on the last skeleton and clip to the unit ball.

    Segments are processed in chunks: pushing is pointwise and mod-2
    cancellation of a union equals cancellation of the already cancelled
    parts, so only the cancelled pieces of each chunk are kept.
    """
    cur = cyc.scaled(R)
    reach = [sum(m.displacement_bound for m in schedule.stages[i:]) for i in range(len(schedule.stages))]
    last = schedule.stages[-1]
    tallies = [_StageTally(m) for m in schedule.stages]
    # pieces farther than 1 + (remaining displacement) cannot reach the unit ball
    cur = cur.clip_to_ball(1.0 + reach[0] + R_MARGIN)
    parts = []
    if len(cur):
        for chunk in _chunks(cur, min(schedule.scales)):
            for j, (m, d) in enumerate(zip(schedule.stages, reach)):
                if j:
                    chunk = chunk.clip_to_ball(1.0 + d + R_MARGIN)
                chunk = m.push(chunk)
                if report:
                    tallies[j].add(chunk)
            parts.append(cancel_on_skeleton(chunk, last.s, last.offset))
    merged = parts[0] if parts else SegmentCycle.empty(cyc.n)
    for part in parts[1:]:
        merged = merged.concat(part)
    out = cancel_on_skeleton(merged, last.s, last.offset).clip_to_ball(1.0) if len(merged) else merged
    return (out, [t.report() for t in tallies]) if report else out


def multiscale_push(schedule: SqueezeSchedule, family: Family | None = None, seed: int = 0,
                    budget: int = 4) -> MultiscaleResult:
    """Largest volume of the squeezed family and per-stage piece counts and diameters.

    The default family is :func:`multiscale_family` for the schedule's exponents.
    """
    if schedule.n != 3 or schedule.k != 1:
        raise SqueezeError("multiscale squeezing is implemented for 1-cycles in the 3-ball")
    if family is None:
        family = multiscale_family(*schedule.Q)
    if family.k != 1 or family.n != 3:
        raise SqueezeError("multiscale squeezing needs a family of 1-cycles in the 3-ball")
    R = multiscale_radius(3)
    params = sample_params(family.domain, budget, seed)
    best_v, best_x = -math.inf, None
    for x in params:
        v = multiscale_cycle(family(x), schedule, R).volume()
        if v > best_v or (v == best_v and tuple(x) < tuple(best_x)):
            best_v, best_x = v, x
    _, reports = multiscale_cycle(family(best_x), schedule, R, report=True)
    return MultiscaleResult(schedule, FamilyStats(float(best_v), best_x, len(params), seed), tuple(reports), R)


@dataclass(frozen=True)
class MultiscaleFit:
    rows: list
    growth: tuple
    intercept: float

    def to_json(self):
        return {"rows": [list(r) for r in self.rows], "growth": list(self.growth),
                "intercept": self.intercept}


def multiscale_scaling(Q_max: int = 6, seed: int = 0, budget: int = 1, eps="auto",
                       planes: int = MULTISCALE_PLANES, roots: int = MULTISCALE_ROOTS) -> MultiscaleFit:
    """Largest volumes over the grid ``(Q0, Q1) in {0..Q_max}^2`` and the fitted per-unit growths.

    The fit is least squares of ``log2 volume`` on ``(1, Q0, Q1)``.
    """
    rows = []
    for Q0 in range(Q_max + 1):
        for Q1 in range(Q_max + 1):
            sched = SqueezeSchedule(3, 1, (Q0, Q1), eps=eps, seed=seed)
            res = multiscale_push(sched, multiscale_family(Q0, Q1, planes, roots), seed=seed, budget=budget)
            rows.append((Q0, Q1, res.max_volume))
    if min(v for *_, v in rows) <= 0:
        raise SqueezeError("a grid cell has zero volume; the growth fit is undefined")
    A = np.array([[1.0, a, b] for a, b, _ in rows])
    y = np.log2([v for *_, v in rows])
    c = np.linalg.lstsq(A, y, rcond=None)[0]
    return MultiscaleFit(rows, (float(2 ** c[1]), float(2 ** c[2])), float(c[0]))
