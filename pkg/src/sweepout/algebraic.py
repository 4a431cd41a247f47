"""Real algebraic 0-cycles and planar curves.

Root parity by Sturm sequences, restriction of bivariate polynomials to
lines, Crofton length estimates, marching squares, sublevel-set volumes and
the flat-continuity experiment for algebraic families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import kernels
from ._pykernels import sturm_sequence
from .chains import (
    CubicalGrid,
    GridChain,
    SegmentCycle,
    area_distance_codim1,
    boundary,
    cell_centers,
)

CROFTON_CONSTANT = math.pi
"""Lines are drawn with angle uniform on [0, pi) and offset uniform on [-1, 1].
The expected crossing count of a diameter is 2/pi, so multiplying the mean
count by pi makes a diameter measure exactly 2."""

SUBLEVEL_CONSTANT = 10.0
ZERO_TOL = 1e-14
ROOT_WIDTH = 1e-12
NEAR_REAL = 1e-3  # relative imaginary part below which an eigenvalue marks a possible real root
MARK_MERGE = 1e-9  # breakpoints closer than this are one test location
EPS = np.finfo(float).eps


class ZeroPolynomialError(ValueError):
    """Root operations on the zero polynomial."""


@dataclass(frozen=True, eq=False)
class Poly1:
    """Univariate polynomial with ascending coefficients ``c_0 .. c_d``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if len(nz) else 0

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def trimmed(self):
        return Poly1(self.coeffs[: self.degree + 1])

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        return cls(lead * npoly.polyfromroots(roots))

    @property
    def max_coeff(self) -> float:
        return float(np.abs(self.coeffs).max())

    @property
    def n_vars(self) -> int:
        return 1


@dataclass(frozen=True, eq=False)
class Poly2:
    """Bivariate polynomial ``sum c[i, j] x^i y^j`` with ``i + j <= d``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("Poly2 coefficients must be a square (d+1, d+1) array")
        d = c.shape[0] - 1
        i, j = np.indices(c.shape)
        if np.any(c[i + j > d] != 0):
            raise ValueError("coefficients with i + j > d must vanish")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def norm(self) -> float:
        return float(np.sqrt((self.coeffs ** 2).sum()))

    @property
    def max_coeff(self) -> float:
        return float(np.abs(self.coeffs).max())

    @property
    def n_vars(self) -> int:
        return 2

    def __call__(self, x, y):
        return npoly.polyval2d(x, y, self.coeffs)

    def normalized(self):
        nrm = self.norm
        if nrm == 0:
            raise ZeroPolynomialError("cannot normalise the zero polynomial")
        return Poly2(self.coeffs / nrm)

    def __add__(self, other):
        d = max(self.d, other.d)
        out = np.zeros((d + 1, d + 1))
        out[: self.d + 1, : self.d + 1] += self.coeffs
        out[: other.d + 1, : other.d + 1] += other.coeffs
        return Poly2(out)

    def __mul__(self, scalar):
        return Poly2(self.coeffs * float(scalar))

    __rmul__ = __mul__

    @classmethod
    def from_terms(cls, d, terms):
        """Build from a mapping ``{(i, j): c}``."""
        c = np.zeros((d + 1, d + 1))
        for (i, j), v in terms.items():
            c[i, j] = v
        return cls(c)

    @classmethod
    def circle(cls, r):
        return cls.from_terms(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -r * r})

    @classmethod
    def random(cls, d, rng, normalize=True):
        """Gaussian coefficients on every monomial of degree <= d, unit norm by default."""
        c = rng.standard_normal((d + 1, d + 1))
        i, j = np.indices(c.shape)
        c[i + j > d] = 0.0
        p = cls(c)
        return p.normalized() if normalize else p


# ---------------------------------------------------------------------------
# roots
# ---------------------------------------------------------------------------

def _sign_var(seq, x):
    prev = 0.0
    count = 0
    for p in seq:
        v = npoly.polyval(x, p)
        if v != 0.0:
            if prev != 0.0 and (v > 0) != (prev > 0):
                count += 1
            prev = v
    return count


def _count_open(seq, P, a, b):
    """Distinct roots in the open interval (a, b)."""
    return _sign_var(seq, a) - _sign_var(seq, b) - (1 if P(b) == 0.0 else 0)


def _sign_at(P, x):
    """Sign of ``P(x)``, or ``None`` when the value is within Horner rounding error of zero."""
    v = P(x)
    # standard running-error bound for Horner's rule: 2 d u sum |c_i| |x|^i
    noise = 2 * P.degree * EPS * float(np.polynomial.polynomial.polyval(abs(x), np.abs(P.coeffs)))
    return None if abs(v) <= noise else bool(v > 0)


def _end_sign(P, x, toward):
    """Sign of ``P`` just inside an interval end, nudging inward past rounding noise."""
    step = ROOT_WIDTH
    while step < abs(toward - x):
        sg = _sign_at(P, x)
        if sg is not None:
            return x, sg
        x = x + math.copysign(step, toward - x)
        step *= 2
    return x, None


def _bisect_sign_change(P, a, b, fa):
    while b - a > ROOT_WIDTH:
        m = 0.5 * (a + b)
        fm = P(m)
        if fm == 0.0:
            return m
        if m in (a, b):
            break
        if (fm > 0) == fa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def sturm_roots_mod2(P: Poly1, interval=(-1.0, 1.0)) -> np.ndarray:
    """Sign-change (odd multiplicity) roots of ``P`` in the open interval.

    Distinct roots are isolated by Sturm-count bisection.  Because a Sturm
    chain degrades near multiple roots, the real parts of nearly real
    companion-matrix eigenvalues are added as further breakpoints.  ``P`` is
    then sign-tested between consecutive breakpoints and every sign change is
    refined to width ``1e-12``.  A cluster of roots therefore contributes one
    point exactly when its total multiplicity is odd.
    """
    if P.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no isolated roots")
    P = P.trimmed()
    if P.degree == 0:
        return np.zeros(0)
    seq = sturm_sequence(P.coeffs, ZERO_TOL)
    lo, hi = map(float, interval)
    marks = []
    stack = [(lo, hi, _count_open(seq, P, lo, hi))]
    while stack:
        a, b, k = stack.pop()
        if k <= 0:
            continue
        if k == 1 or b - a < ROOT_WIDTH:
            marks.append(0.5 * (a + b))
            continue
        m = 0.5 * (a + b)
        if P(m) == 0.0:
            m = a + (b - a) * 0.5 * (1 + 1 / (1 + math.sqrt(5)))
        stack.append((m, b, _count_open(seq, P, m, b)))
        stack.append((a, m, _count_open(seq, P, a, m)))
    eig = np.roots(P.coeffs[::-1])
    near_real = np.abs(eig.imag) <= NEAR_REAL * np.maximum(1.0, np.abs(eig))
    marks.extend(float(x) for x in eig.real[near_real] if lo < x < hi)
    marks = np.unique(np.round(np.asarray(marks, dtype=float), 12))
    inner = [0.5 * (a + b) for a, b in zip(marks[:-1], marks[1:]) if b - a > MARK_MERGE]
    a0, s0 = _end_sign(P, lo, hi)
    b0, s1 = _end_sign(P, hi, lo)
    probes = [(a0, s0)] + [(t, _sign_at(P, t)) for t in inner] + [(b0, s1)]
    probes = [(t, sg) for t, sg in probes if sg is not None]
    roots = []
    for (a, sa), (b, sb) in zip(probes, probes[1:]):
        if sa != sb:
            roots.append(_bisect_sign_change(P, a, b, sa))
    return np.array(roots)


def sturm_count(P: Poly1, a: float, b: float) -> int:
    """Number of distinct real roots of ``P`` in ``(a, b]``."""
    if P.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no isolated roots")
    return int(kernels.sturm_counts(P.coeffs[None, :], np.array([a]), np.array([b]))[0])


# ---------------------------------------------------------------------------
# lines
# ---------------------------------------------------------------------------

def _restrict_batch(P: Poly2, x0, y0, dx, dy):
    """Coefficients of ``t -> P(x0 + t dx, y0 + t dy)`` for many lines at once."""
    d = P.d
    L = x0.shape[0]
    xp = np.zeros((d + 1, L, d + 1))
    yp = np.zeros((d + 1, L, d + 1))
    xp[0, :, 0] = 1.0
    yp[0, :, 0] = 1.0
    for i in range(1, d + 1):
        xp[i, :, :] = xp[i - 1] * x0[:, None]
        xp[i, :, 1:] += xp[i - 1, :, :-1] * dx[:, None]
        yp[i, :, :] = yp[i - 1] * y0[:, None]
        yp[i, :, 1:] += yp[i - 1, :, :-1] * dy[:, None]
    out = np.zeros((L, d + 1))
    for i in range(d + 1):
        for j in range(d + 1 - i):
            c = P.coeffs[i, j]
            if c == 0.0:
                continue
            prod = np.zeros((L, d + 1))
            for a in range(i + 1):
                prod[:, a: a + j + 1] += xp[i, :, a: a + 1] * yp[j, :, : j + 1]
            out += c * prod
    return out


def restrict_to_line(P: Poly2, point, direction) -> Poly1:
    """The univariate polynomial ``t -> P(point + t*direction)``."""
    direction = np.asarray(direction, dtype=float)
    if not np.any(direction):
        raise ValueError("line direction must be nonzero")
    point = np.asarray(point, dtype=float)
    c = _restrict_batch(P, point[:1], point[1:2], direction[:1], direction[1:2])[0]
    return Poly1(c)


def random_lines(n_lines, seed):
    """Kinematic-measure lines meeting the unit disk: ``(theta, offset)`` arrays."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, math.pi, n_lines)
    off = rng.uniform(-1.0, 1.0, n_lines)
    return theta, off


def crossing_counts(obj, theta, off):
    """Intersections of each line with a curve ``{P = 0}`` in the disk or with a segment cycle."""
    if isinstance(obj, SegmentCycle):
        if obj.n != 2:
            raise ValueError("Crofton counting needs a planar segment cycle")
        return kernels.segment_line_counts(obj.starts, obj.ends, theta, off)
    cs, sn = np.cos(theta), np.sin(theta)
    coeffs = _restrict_batch(obj, off * cs, off * sn, -sn, cs)
    h = np.sqrt(np.maximum(1.0 - off ** 2, 0.0))
    counts = kernels.sturm_counts(coeffs, -h, h)
    if counts.max(initial=0) > obj.d:
        raise AssertionError("a line met a degree-d curve more than d times")
    return counts


def crofton_length(obj, n_lines: int = 100_000, seed: int = 0):
    """Crofton estimate of the length inside the unit disk; returns ``(estimate, stderr)``."""
    if n_lines < 1:
        raise ValueError("need at least one line")
    theta, off = random_lines(n_lines, seed)
    counts = crossing_counts(obj, theta, off).astype(float)
    est = CROFTON_CONSTANT * counts.mean()
    err = CROFTON_CONSTANT * counts.std(ddof=1) / math.sqrt(n_lines) if n_lines > 1 else math.inf
    return float(est), float(err)


# ---------------------------------------------------------------------------
# marching squares
# ---------------------------------------------------------------------------

def marching_squares(P: Poly2, N: int = 256) -> SegmentCycle:
    """Piecewise-linear approximation of ``{P = 0}`` inside the unit disk.

    Vertex signs on an ``N x N`` grid over ``[-1, 1]^2`` with linear
    interpolation on sign-changing edges; saddle cells are split according to
    the sign at the cell center.
    """
    if N < 4:
        raise ValueError("marching squares needs N >= 4")
    g = np.linspace(-1.0, 1.0, N + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    V = P(X, Y)
    V = np.where(V == 0.0, np.finfo(float).tiny, V)
    pos = V > 0
    # crossing points on edges along x (between [i, j] and [i+1, j]) and along y
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = V[:-1, :] / (V[:-1, :] - V[1:, :])
        ty = V[:, :-1] / (V[:, :-1] - V[:, 1:])
    ex = np.stack([X[:-1, :] + tx * (X[1:, :] - X[:-1, :]), Y[:-1, :]], axis=-1)
    ey = np.stack([X[:, :-1], Y[:, :-1] + ty * (Y[:, 1:] - Y[:, :-1])], axis=-1)
    bottom = ex[:, :-1]   # edge (i, j)-(i+1, j)
    top = ex[:, 1:]       # edge (i, j+1)-(i+1, j+1)
    left = ey[:-1, :]     # edge (i, j)-(i, j+1)
    right = ey[1:, :]     # edge (i+1, j)-(i+1, j+1)
    s00, s10 = pos[:-1, :-1], pos[1:, :-1]
    s01, s11 = pos[:-1, 1:], pos[1:, 1:]
    case = s00.astype(int) | (s10.astype(int) << 1) | (s11.astype(int) << 2) | (s01.astype(int) << 3)
    cx = 0.5 * (g[:-1, None] + g[1:, None]) + 0 * g[None, :-1]
    cy = 0 * g[:-1, None] + 0.5 * (g[None, :-1] + g[None, 1:])
    center_pos = P(cx, cy) > 0
    edges = {"b": bottom, "r": right, "t": top, "l": left}
    table = {
        1: [("b", "l")], 2: [("b", "r")], 3: [("l", "r")], 4: [("r", "t")],
        6: [("b", "t")], 7: [("l", "t")], 8: [("l", "t")], 9: [("b", "t")],
        11: [("r", "t")], 12: [("l", "r")], 13: [("b", "r")], 14: [("b", "l")],
    }
    starts, ends = [], []
    for cs, pairs in table.items():
        sel = case == cs
        if not sel.any():
            continue
        for e0, e1 in pairs:
            starts.append(edges[e0][sel])
            ends.append(edges[e1][sel])
    # saddles: 5 = corners 00 and 11 positive, 10 = corners 10 and 01 positive
    for cs in (5, 10):
        sel = case == cs
        if not sel.any():
            continue
        diag_pos = cs == 5
        joined = center_pos[sel] == diag_pos  # center has the sign of corners 00/11
        # if 00 and 11 are joined through the center, cut off corners 10 and 01
        cut_off_10_01 = joined
        b, r, t, l = (edges[k][sel] for k in "brtl")
        for mask, pairs in ((cut_off_10_01, (("b", "r"), ("l", "t"))),
                            (~cut_off_10_01, (("b", "l"), ("r", "t")))):
            if mask.any():
                loc = {"b": b[mask], "r": r[mask], "t": t[mask], "l": l[mask]}
                for e0, e1 in pairs:
                    starts.append(loc[e0])
                    ends.append(loc[e1])
    if not starts:
        return SegmentCycle.empty(2)
    cyc = SegmentCycle(np.concatenate(starts), np.concatenate(ends))
    return cyc.clip_to_ball(1.0)


# ---------------------------------------------------------------------------
# sublevel volumes
# ---------------------------------------------------------------------------

def _ball_samples(n, m, rng):
    if n == 1:
        return rng.uniform(-1.0, 1.0, (m, 1))
    g = rng.standard_normal((m, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.uniform(0.0, 1.0, m) ** (1.0 / n)
    return g * r[:, None]


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sublevel_volume_mc(P, delta: float, samples: int = 200_000, seed: int = 0):
    """Monte Carlo volume of ``{x in B(1) : |P(x)| <= delta}``; returns ``(estimate, stderr)``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not np.any(P.coeffs):
        raise ZeroPolynomialError("sublevel sets of the zero polynomial are the whole ball")
    n = P.n_vars
    rng = np.random.default_rng(seed)
    x = _ball_samples(n, samples, rng)
    vals = P(x[:, 0]) if n == 1 else P(x[:, 0], x[:, 1])
    hit = (np.abs(vals) <= delta).astype(float)
    vol = ball_volume(n)
    return float(vol * hit.mean()), float(vol * hit.std(ddof=1) / math.sqrt(samples))


def sublevel_bound(P, delta: float, constant: float = SUBLEVEL_CONSTANT) -> float:
    """``constant * (delta / M)^(1/(d n))`` with ``M`` the largest coefficient magnitude."""
    d = max(P.degree if isinstance(P, Poly1) else P.d, 1)
    n = P.n_vars
    return constant * (delta / P.max_coeff) ** (1.0 / (d * n))


# ---------------------------------------------------------------------------
# flat continuity of algebraic families
# ---------------------------------------------------------------------------

def raster_cycle(P: Poly2, N: int) -> GridChain:
    """Relative 1-cycle on the ``N x N`` grid separating cells where ``P > 0``."""
    X, Y = cell_centers(N)
    grid = CubicalGrid(2, N)
    return boundary(GridChain.from_labels(grid, P(X, Y) > 0))


def raster_distance(P: Poly2, Q: Poly2, N: int) -> float:
    """Exact grid area distance between the rasterised zero sets of ``P`` and ``Q``."""
    return area_distance_codim1(raster_cycle(P, N), raster_cycle(Q, N))


@dataclass(frozen=True)
class ContinuityResult:
    rows: list
    epsilon_hat: float
    intercept: float
    resampled: int
    d: int
    rasterN: int
    seed: int


def continuity_experiment(d: int, eta_list, trials: int = 50, rasterN: int = 128,
                          seed: int = 0) -> ContinuityResult:
    """Area distance between ``V_P`` and ``V_Q`` with ``Q = normalize(P + eta E)``.

    Each trial draws a unit-norm ``P`` and perturbation ``E`` once and reuses
    them across the ladder.  Rows are ``(eta, mean_distance, stderr, trials)``
    and ``epsilon_hat`` is the least-squares slope of log distance on log eta.
    """
    etas = [float(e) for e in eta_list]
    if any(e <= 0 for e in etas) or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta_list must be positive and strictly decreasing")
    rng = np.random.default_rng(seed)
    grid_cycles = []
    resampled = 0
    while len(grid_cycles) < trials:
        P = Poly2.random(d, rng)
        zP = raster_cycle(P, rasterN)
        if len(zP) == 0:
            resampled += 1  # the curve misses the square entirely
            continue
        E = Poly2.random(d, rng)
        grid_cycles.append((P, E, zP))
    rows = []
    for eta in etas:
        dists = []
        for P, E, zP in grid_cycles:
            Q = (P + eta * E).normalized()
            dists.append(area_distance_codim1(zP, raster_cycle(Q, rasterN)))
        dists = np.array(dists)
        rows.append((eta, float(dists.mean()), float(dists.std(ddof=1) / math.sqrt(len(dists))), len(dists)))
    xs = np.log([r[0] for r in rows if r[1] > 0])
    ys = np.log([r[1] for r in rows if r[1] > 0])
    if len(xs) >= 2:
        slope, icpt = np.polyfit(xs, ys, 1)
    else:
        slope, icpt = math.nan, math.nan
    return ContinuityResult(rows, float(slope), float(icpt), resampled, d, rasterN, seed)
