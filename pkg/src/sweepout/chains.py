"""Mod-2 cubical chains on ``[-1, 1]^n`` and segment cycles in the unit ball.

A k-face of the grid is identified by its lowest vertex ``pos`` (integer
coordinates in ``[0, N]^n``) and the tuple of its ``k`` free axes.  Chains are
sets of faces; addition is symmetric difference.  Relative chains quotient out
faces lying in the boundary of the cube.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels

FLAT_NORM_CELL_CAP = 25


class ChainStructureError(ValueError):
    """Malformed cell identifiers or mismatched grids."""


class NotARelativeCycle(ValueError):
    """A chain expected to be a relative cycle has nonzero boundary."""


class CapacityError(ValueError):
    """An exhaustive computation exceeds its size cap."""


@dataclass(frozen=True)
class CubicalGrid:
    """Regular grid with ``N`` cells per axis over the cube ``[-1, 1]^n``."""

    n: int
    N: int

    def __post_init__(self):
        if not 1 <= self.n <= 4:
            raise ChainStructureError(f"grid dimension must be in 1..4, got {self.n}")
        if self.N < 1:
            raise ChainStructureError(f"grid needs N >= 1 cells per axis, got {self.N}")

    @property
    def side(self) -> float:
        return 2.0 / self.N

    def cell_volume(self, k: int) -> Fraction:
        """Exact k-volume of one k-face, ``(2/N)^k``."""
        return Fraction(2, self.N) ** k

    def axis_subsets(self, k: int) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.n), k))

    @property
    def _vstride(self) -> int:
        return (self.N + 1) ** self.n


def _encode(grid, k, pos, sub_idx):
    shape = (grid.N + 1,) * grid.n
    lin = np.ravel_multi_index(tuple(pos.T), shape)
    return sub_idx.astype(np.int64) * grid._vstride + lin.astype(np.int64)


def _decode(grid, k, codes):
    shape = (grid.N + 1,) * grid.n
    sub_idx = codes // grid._vstride
    lin = codes % grid._vstride
    pos = np.stack(np.unravel_index(lin, shape), axis=1) if len(codes) else np.zeros((0, grid.n), dtype=np.int64)
    return pos.astype(np.int64), sub_idx


def _free_mask(grid, k):
    subs = grid.axis_subsets(k)
    mask = np.zeros((len(subs), grid.n), dtype=bool)
    for i, s in enumerate(subs):
        mask[i, list(s)] = True
    return mask


def _on_cube_boundary(grid, k, pos, sub_idx):
    fixed = ~_free_mask(grid, k)[sub_idx]
    at_edge = (pos == 0) | (pos == grid.N)
    return np.any(fixed & at_edge, axis=1)


@dataclass(frozen=True, eq=False)
class GridChain:
    """A mod-2 k-chain on a cubical grid, stored as sorted unique face codes."""

    grid: CubicalGrid
    k: int
    codes: np.ndarray = field(repr=False)
    relative: bool = True

    def __post_init__(self):
        if not 0 <= self.k <= self.grid.n:
            raise ChainStructureError(f"chain dimension {self.k} outside 0..{self.grid.n}")
        codes = np.asarray(self.codes, dtype=np.int64)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    # construction -----------------------------------------------------------
    @classmethod
    def empty(cls, grid, k, relative=True):
        return cls(grid, k, np.zeros(0, dtype=np.int64), relative)

    @classmethod
    def from_faces(cls, grid, k, pos, sub_idx, relative=True):
        """Build from arrays of lowest vertices and axis-subset indices.

        Repeated faces cancel in pairs.  Faces in the cube boundary are dropped
        from relative chains.
        """
        pos = np.asarray(pos, dtype=np.int64).reshape(-1, grid.n)
        sub_idx = np.asarray(sub_idx, dtype=np.int64).reshape(-1)
        nsub = math.comb(grid.n, k)
        if len(sub_idx) and (sub_idx.min() < 0 or sub_idx.max() >= nsub):
            raise ChainStructureError("axis-subset index out of range")
        free = _free_mask(grid, k)[sub_idx]
        upper = np.where(free, grid.N - 1, grid.N)
        if np.any(pos < 0) or np.any(pos > upper):
            bad = int(np.argmax(np.any((pos < 0) | (pos > upper), axis=1)))
            raise ChainStructureError(f"cell {pos[bad].tolist()} with axes "
                                      f"{grid.axis_subsets(k)[sub_idx[bad]]} is not a valid {k}-face")
        if relative and len(pos):
            keep = ~_on_cube_boundary(grid, k, pos, sub_idx)
            pos, sub_idx = pos[keep], sub_idx[keep]
        codes = _encode(grid, k, pos, sub_idx)
        uniq, counts = np.unique(codes, return_counts=True)
        return cls(grid, k, uniq[counts % 2 == 1], relative)

    @classmethod
    def from_cells(cls, grid, k, cells, relative=True):
        """Build from an iterable of ``(pos, axes)`` pairs."""
        subs = {s: i for i, s in enumerate(grid.axis_subsets(k))}
        pos, sub_idx = [], []
        for p, axes in cells:
            axes = tuple(sorted(axes))
            if axes not in subs or len(p) != grid.n:
                raise ChainStructureError(f"invalid {k}-cell identifier {p!r}, {axes!r}")
            pos.append(list(p))
            sub_idx.append(subs[axes])
        return cls.from_faces(grid, k, np.array(pos, dtype=np.int64).reshape(-1, grid.n), sub_idx, relative)

    @classmethod
    def full(cls, grid, relative=True):
        """The chain of all n-cells."""
        pos = np.stack(np.unravel_index(np.arange(grid.N ** grid.n), (grid.N,) * grid.n), axis=1)
        return cls.from_faces(grid, grid.n, pos, np.zeros(len(pos), dtype=np.int64), relative)

    @classmethod
    def from_labels(cls, grid, labels, relative=True):
        """The n-chain of cells where the boolean array ``labels`` is true."""
        labels = np.asarray(labels, dtype=bool)
        if labels.shape != (grid.N,) * grid.n:
            raise ChainStructureError(f"labels must have shape {(grid.N,) * grid.n}")
        pos = np.argwhere(labels)
        return cls.from_faces(grid, grid.n, pos, np.zeros(len(pos), dtype=np.int64), relative)

    # inspection --------------------------------------------------------------
    def __len__(self):
        return int(self.codes.shape[0])

    def __eq__(self, other):
        return (isinstance(other, GridChain) and self.grid == other.grid and self.k == other.k
                and self.relative == other.relative and np.array_equal(self.codes, other.codes))

    def __hash__(self):
        return hash((self.grid, self.k, self.relative, self.codes.tobytes()))

    def faces(self):
        """Arrays ``(pos, sub_idx)`` of the stored faces."""
        return _decode(self.grid, self.k, self.codes)

    def cells(self):
        pos, sub = self.faces()
        subs = self.grid.axis_subsets(self.k)
        return [(tuple(int(v) for v in p), subs[s]) for p, s in zip(pos, sub)]

    def volume_exact(self) -> Fraction:
        return len(self) * self.grid.cell_volume(self.k)

    def volume(self) -> float:
        return float(self.volume_exact())

    def to_json(self):
        return {
            "n": self.grid.n,
            "N": self.grid.N,
            "k": self.k,
            "relative": self.relative,
            "cells": [list(p) + [list(a)] for p, a in self.cells()],
        }

    @classmethod
    def from_json(cls, obj):
        grid = CubicalGrid(int(obj["n"]), int(obj["N"]))
        cells = [(tuple(c[:-1]), tuple(c[-1])) for c in obj["cells"]]
        return cls.from_cells(grid, int(obj["k"]), cells, bool(obj["relative"]))


def _check_same(c1, c2):
    if c1.grid != c2.grid or c1.k != c2.k or c1.relative != c2.relative:
        raise ChainStructureError("chains live on different grids, dimensions or quotient modes")


def add_mod2(c1: GridChain, c2: GridChain) -> GridChain:
    """Mod-2 sum (symmetric difference of cell sets)."""
    _check_same(c1, c2)
    return GridChain(c1.grid, c1.k, np.setxor1d(c1.codes, c2.codes, assume_unique=True), c1.relative)


def boundary(c: GridChain) -> GridChain:
    """Mod-2 boundary; faces in the cube boundary vanish for relative chains."""
    if c.k < 1:
        raise ChainStructureError("boundary needs a chain of dimension >= 1")
    grid = c.grid
    pos, sub_idx = c.faces()
    subs = grid.axis_subsets(c.k)
    lower = {s: i for i, s in enumerate(grid.axis_subsets(c.k - 1))}
    out_pos, out_sub = [], []
    for si, s in enumerate(subs):
        sel = pos[sub_idx == si]
        if not len(sel):
            continue
        for a in s:
            rest = lower[tuple(b for b in s if b != a)]
            shifted = sel.copy()
            shifted[:, a] += 1
            out_pos += [sel, shifted]
            out_sub += [np.full(len(sel), rest), np.full(len(sel), rest)]
    if not out_pos:
        return GridChain.empty(grid, c.k - 1, c.relative)
    return GridChain.from_faces(grid, c.k - 1, np.concatenate(out_pos), np.concatenate(out_sub), c.relative)


# ---------------------------------------------------------------------------
# area distance in codimension one
# ---------------------------------------------------------------------------

def _crossing_arrays(z: GridChain):
    """Per normal axis ``a``, the indicator of cycle faces between adjacent n-cells."""
    grid = z.grid
    n, N = grid.n, grid.N
    pos, sub_idx = z.faces()
    subs = grid.axis_subsets(n - 1)
    X = []
    for a in range(n):
        shape = tuple(N - 1 if b == a else N for b in range(n))
        arr = np.zeros(shape, dtype=np.int8)
        si = subs.index(tuple(b for b in range(n) if b != a))
        sel = pos[sub_idx == si].copy()
        if len(sel):
            sel[:, a] -= 1
            arr[tuple(sel.T)] = 1
        X.append(arr)
    return X


def parity_labels(z: GridChain) -> np.ndarray:
    """Two-colouring of the n-cells whose colour changes exactly across ``z``.

    The cell with all indices 0 gets colour 0.  Raises
    :class:`NotARelativeCycle` if no consistent colouring exists.
    """
    grid = z.grid
    n, N = grid.n, grid.N
    if z.k != n - 1 or not z.relative:
        raise ChainStructureError("parity labelling needs a relative chain of dimension n-1")
    X = _crossing_arrays(z)
    L = np.zeros((N,) * n, dtype=np.int64)
    for a in range(n):
        # coordinates after a are pinned at 0; extend labels along axis a
        idx = tuple(slice(None) if b <= a else 0 for b in range(n))
        base_idx = tuple(slice(None) if b < a else 0 for b in range(n))
        xa = X[a][idx].astype(np.int64)
        cum = np.cumsum(xa, axis=a)
        zshape = list(cum.shape)
        zshape[a] = 1
        cum = np.concatenate([np.zeros(zshape, dtype=np.int64), cum], axis=a)
        base = np.expand_dims(L[base_idx], axis=a)
        L[idx] = (base + cum) % 2
    for a in range(n):
        if not np.array_equal(np.abs(np.diff(L, axis=a)), X[a]):
            raise NotARelativeCycle("chain is not a relative cycle: no consistent parity labelling")
    return L.astype(bool)


def filling_cells_codim1(c1: GridChain, c2: GridChain) -> int:
    """Exact number of n-cells in a minimal relative filling of ``c1 - c2``."""
    _check_same(c1, c2)
    grid = c1.grid
    if c1.k != grid.n - 1:
        raise ChainStructureError("codimension-one distance needs (n-1)-chains")
    z = add_mod2(c1, c2)
    L = parity_labels(z)
    count = int(L.sum())
    return min(count, grid.N ** grid.n - count)


def area_distance_codim1(c1: GridChain, c2: GridChain) -> float:
    """Minimal volume of a relative n-chain bounding ``c1 - c2``."""
    cells = filling_cells_codim1(c1, c2)
    return float(cells * c1.grid.cell_volume(c1.grid.n))


# ---------------------------------------------------------------------------
# exhaustive flat norm
# ---------------------------------------------------------------------------

def flat_norm_units(c: GridChain):
    """Exact flat norm of ``c`` in integer units.

    Returns ``(value, w_cell, w_face, filler)`` where
    ``value = w_cell*|D| + w_face*|bd D - c|`` counted in cells and faces for
    the optimal ``D``.  One unit equals ``(2/N)^(k+1) / 2``.
    """
    grid = c.grid
    k = c.k
    if k >= grid.n:
        raise ChainStructureError("flat norm needs k < n")
    top = GridChain.full(grid, c.relative) if k + 1 == grid.n else _all_faces(grid, k + 1, c.relative)
    m = len(top)
    if m > FLAT_NORM_CELL_CAP:
        raise CapacityError(f"exhaustive flat norm is capped at {FLAT_NORM_CELL_CAP} "
                            f"({k + 1})-cells; this grid has {m}")
    w_cell, w_face = 2, grid.N
    if len(c) == 0:
        return 0, w_cell, w_face, GridChain.empty(grid, k + 1, c.relative)
    bnds = []
    index = {}
    for code in c.codes:
        index.setdefault(int(code), len(index))
    for code in top.codes:
        single = GridChain(grid, k + 1, np.array([code]), c.relative)
        b = boundary(single)
        mask = 0
        for fc in b.codes:
            mask |= 1 << index.setdefault(int(fc), len(index))
        bnds.append(mask)
    c_mask = sum(1 << index[int(code)] for code in c.codes)
    best, best_d = kernels.flat_norm_search(bnds, c_mask, w_cell, w_face)
    chosen = [top.codes[i] for i in range(m) if (best_d >> i) & 1]
    filler = GridChain(grid, k + 1, np.array(sorted(chosen), dtype=np.int64), c.relative)
    return int(best), w_cell, w_face, filler


def _all_faces(grid, k, relative):
    pos_list, sub_list = [], []
    for si, s in enumerate(grid.axis_subsets(k)):
        shape = tuple(grid.N if a in s else grid.N + 1 for a in range(grid.n))
        pos = np.stack(np.unravel_index(np.arange(int(np.prod(shape))), shape), axis=1)
        pos_list.append(pos)
        sub_list.append(np.full(len(pos), si))
    return GridChain.from_faces(grid, k, np.concatenate(pos_list), np.concatenate(sub_list), relative)


def flat_norm_bruteforce(c: GridChain) -> float:
    """Exact flat norm ``min_D |D| + |bd D - c|`` by exhaustive GF(2) search."""
    value, _, _, _ = flat_norm_units(c)
    return float(Fraction(value, 2) * c.grid.cell_volume(c.k + 1))


def all_relative_cycles(grid: CubicalGrid) -> list[GridChain]:
    """Every relative (n-1)-cycle of the grid, each listed once.

    Each is the boundary of a set of n-cells; complementary sets give the
    same cycle, so there are ``2^(N^n - 1)`` of them.
    """
    total = grid.N ** grid.n
    if total > 20:
        raise CapacityError(f"cycle enumeration is capped at 20 cells; grid has {total}")
    full = GridChain.full(grid)
    seen = {}
    for mask in range(1 << (total - 1)):
        chosen = full.codes[[i for i in range(total) if (mask >> i) & 1]]
        z = boundary(GridChain(grid, grid.n, chosen))
        seen.setdefault(z.codes.tobytes(), z)
    return list(seen.values())


# ---------------------------------------------------------------------------
# segment cycles
# ---------------------------------------------------------------------------

FREE = -1


@dataclass(frozen=True, eq=False)
class SegmentCycle:
    """Mod-2 1-cycle given as segments with carrier tags.

    ``carriers[i]`` is a lattice-face code for skeleton pieces and ``-1`` for
    free pieces.  Zero-length segments are removed on construction.
    """

    starts: np.ndarray
    ends: np.ndarray
    carriers: np.ndarray = None

    def __post_init__(self):
        a = np.asarray(self.starts, dtype=float)
        b = np.asarray(self.ends, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise ChainStructureError("segment endpoints must be matching (m, n) arrays")
        car = (np.full(a.shape[0], FREE, dtype=np.int64) if self.carriers is None
               else np.asarray(self.carriers, dtype=np.int64))
        if car.shape != (a.shape[0],):
            raise ChainStructureError("one carrier tag per segment is required")
        keep = np.linalg.norm(b - a, axis=1) > 0
        a, b, car = a[keep], b[keep], car[keep]
        for arr in (a, b, car):
            arr.setflags(write=False)
        object.__setattr__(self, "starts", a)
        object.__setattr__(self, "ends", b)
        object.__setattr__(self, "carriers", car)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((0, n)), np.zeros((0, n)))

    @property
    def n(self):
        return self.starts.shape[1]

    def __len__(self):
        return int(self.starts.shape[0])

    def lengths(self):
        return np.linalg.norm(self.ends - self.starts, axis=1)

    def volume(self) -> float:
        return float(math.fsum(self.lengths()))

    def free_length(self) -> float:
        return float(math.fsum(self.lengths()[self.carriers == FREE]))

    def skeleton_length(self) -> float:
        return float(math.fsum(self.lengths()[self.carriers != FREE]))

    def transformed(self, M):
        """Image under the linear map ``x -> M x``."""
        M = np.asarray(M, dtype=float)
        return SegmentCycle(self.starts @ M.T, self.ends @ M.T, self.carriers)

    def scaled(self, r):
        return SegmentCycle(self.starts * r, self.ends * r, self.carriers)

    def concat(self, other):
        return SegmentCycle(np.vstack([self.starts, other.starts]), np.vstack([self.ends, other.ends]),
                            np.concatenate([self.carriers, other.carriers]))

    def clip_to_ball(self, radius=1.0, center=None):
        """Parts of the segments inside the closed ball."""
        a, b = self.starts, self.ends
        if center is not None:
            a = a - center
            b = b - center
        d = b - a
        A = np.einsum("ij,ij->i", d, d)
        B = 2 * np.einsum("ij,ij->i", a, d)
        C = np.einsum("ij,ij->i", a, a) - radius * radius
        disc = B * B - 4 * A * C
        ok = (disc > 0) & (A > 0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = np.clip((-B - sq) / (2 * A), 0.0, 1.0)
            t1 = np.clip((-B + sq) / (2 * A), 0.0, 1.0)
        ok &= t1 > t0
        s = self.starts[ok] + t0[ok, None] * (self.ends[ok] - self.starts[ok])
        e = self.starts[ok] + t1[ok, None] * (self.ends[ok] - self.starts[ok])
        return SegmentCycle(s, e, self.carriers[ok])

    def distance_to(self, pts):
        """Euclidean distance from each point to the nearest segment (inf if empty)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if len(self) == 0:
            return np.full(pts.shape[0], np.inf)
        a, d = self.starts, self.ends - self.starts
        dd = np.einsum("ij,ij->i", d, d)
        out = np.empty(pts.shape[0])
        for i, x in enumerate(pts):
            t = np.clip(((x - a) * d).sum(axis=1) / dd, 0.0, 1.0)
            out[i] = np.sqrt((((a + t[:, None] * d) - x) ** 2).sum(axis=1).min())
        return out

    def to_json(self):
        return {"n": self.n, "starts": self.starts.tolist(), "ends": self.ends.tolist(),
                "carriers": self.carriers.tolist()}


@dataclass(frozen=True, eq=False)
class PointCycle:
    """Mod-2 0-cycle: points with multiplicity one (pairs of equal points cancel)."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if len(p):
            uniq, counts = np.unique(p, axis=0, return_counts=True)
            p = uniq[counts % 2 == 1]
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((0, n)))

    def __len__(self):
        return int(self.points.shape[0])

    def volume(self) -> float:
        return float(len(self))


def chain_volume(c) -> float:
    """Mass of a chain: cell count times ``(2/N)^k`` or total segment length."""
    return c.volume()


def cone_fill(c: SegmentCycle) -> float:
    """Area of the cone over ``c`` with apex at the origin."""
    if len(c) == 0:
        return 0.0
    a, b = c.starts, c.ends
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    return float(math.fsum(0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))))


# ---------------------------------------------------------------------------
# rasterisation of planar cycles
# ---------------------------------------------------------------------------

def cell_centers(N):
    """Centers of the ``N x N`` grid cells on ``[-1, 1]^2`` (index order ``[i, j]`` = (x, y))."""
    c = -1 + (np.arange(N) + 0.5) * (2.0 / N)
    return np.meshgrid(c, c, indexing="ij")


def ray_parity_labels(c: SegmentCycle, N: int) -> np.ndarray:
    """Colour each grid cell by the parity of crossings of its upward vertical ray with ``c``.

    For a relative cycle of the unit disk this colouring jumps exactly across
    the cycle inside the disk, so it is one of the two fillings of ``c``.
    """
    X, Y = cell_centers(N)
    xs, ys = X.ravel(), Y.ravel()
    lab = np.zeros(xs.shape[0], dtype=np.int64)
    if len(c):
        a, b = c.starts[:, :2], c.ends[:, :2]
        x0, x1 = a[:, 0], b[:, 0]
        lo, hi = np.minimum(x0, x1), np.maximum(x0, x1)
        span = x1 - x0
        chunk = max(1, 4_000_000 // max(1, len(c)))
        for s in range(0, xs.shape[0], chunk):
            px = xs[s:s + chunk, None]
            py = ys[s:s + chunk, None]
            inside = (px >= lo) & (px < hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(span != 0, (px - x0) / np.where(span != 0, span, 1.0), 0.0)
            yc = a[:, 1] + t * (b[:, 1] - a[:, 1])
            lab[s:s + chunk] = (inside & (yc > py)).sum(axis=1)
    return (lab % 2 == 1).reshape(N, N)


def disk_area_distance(c1: SegmentCycle, c2: SegmentCycle, N: int = 128) -> float:
    """Raster estimate of the area distance between relative cycles of the unit disk."""
    X, Y = cell_centers(N)
    disk = X ** 2 + Y ** 2 < 1.0
    diff = ray_parity_labels(c1, N) ^ ray_parity_labels(c2, N)
    cnt = int((diff & disk).sum())
    return min(cnt, int(disk.sum()) - cnt) * (2.0 / N) ** 2
