"""Lower-bound machinery, coverage proxies and power-law fits.

Ball packings feed the closed-form lower bound for families that must pass
through many prescribed points.  Coverage searches check that property
directly on concrete families, within a stated tolerance ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from . import kernels
from .families import Family, sample_params

BUDGET_SLACK = 1e-12
COVER_TOL = 1e-12


class PackingError(ValueError):
    """The radii exceed the packing budget."""


# ---------------------------------------------------------------------------
# configuration and closed forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundConfig:
    """Dimensions, the base constant standing in for the single-point bound, and a slack.

    ``c_base`` defaults to the classical sharp value 2 for curves in the
    disk and to 1 (an unknown constant) elsewhere.
    """

    n: int
    k: int
    c_base: float | None = None
    eps: float = 0.0

    def __post_init__(self):
        if not 0 <= self.k < self.n:
            raise ValueError("need 0 <= k < n")
        if self.c_base is None:
            object.__setattr__(self, "c_base", 2.0 if (self.n, self.k) == (2, 1) else 1.0)
        if not self.c_base > 0:
            raise ValueError("c_base must be positive")
        if not 0 <= self.eps < 1:
            raise ValueError("eps must lie in [0, 1)")

    @property
    def constant_known(self) -> bool:
        return (self.n, self.k) == (2, 1) and self.c_base == 2.0


def cup_lower_bound(p: int, cfg: BoundConfig) -> float:
    """``(1/2) p c_base r^k`` with ``r = (1/4) p^(-1/n)``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    r = 0.25 * p ** (-1.0 / cfg.n)
    return 0.5 * p * cfg.c_base * r ** cfg.k


def sphere_area(n: int) -> float:
    """Area of the unit sphere bounding the ``n``-ball."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def hypersurface_bound(n: int) -> float:
    """``[(1/2)^((n-1)/n) - 1/2] |S^(n-1)|``, a lower bound for hypersurfaces halving the ball."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return (0.5 ** ((n - 1) / n) - 0.5) * sphere_area(n)


def optimal_radii(V, n: int, k: int):
    """Radii maximizing ``sum V_i r_i^k`` subject to ``sum r_i^n = 4^-n``.

    Returns ``(radii, achieved)`` with ``achieved = 4^-k [sum V^(n/(n-k))]^((n-k)/n)``.
    """
    V = np.asarray(V, dtype=float).ravel()
    if len(V) == 0 or np.any(V <= 0):
        raise ValueError("all V_i must be positive")
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    S = math.fsum(V ** (n / (n - k)))
    radii = 0.25 * V ** (1.0 / (n - k)) * S ** (-1.0 / n)
    return radii, 0.25 ** k * S ** ((n - k) / n)


def radii_value(V, radii, k) -> float:
    return math.fsum(np.asarray(V, dtype=float) * np.asarray(radii, dtype=float) ** k)


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Packing:
    n: int
    centers: np.ndarray
    radii: np.ndarray
    consumed: int

    def to_json(self):
        return {"n": self.n, "centers": self.centers.tolist(), "radii": self.radii.tolist()}


def _candidates(n, count, seed):
    """Scrambled Halton points of ``[-1/2, 1/2]^n`` that fall in ``B(0, 1/2)``."""
    pts = qmc.Halton(n, scramble=True, seed=seed).random(count) - 0.5
    return pts[(pts ** 2).sum(axis=1) < 0.25]


def verify_packing(pk: Packing, tol: float = 1e-12) -> None:
    """Raise ``AssertionError`` unless the balls are disjoint and inside the unit ball."""
    c, r = pk.centers, pk.radii
    if len(r) == 0:
        return
    if np.any(np.linalg.norm(c, axis=1) + r > 1 + tol):
        raise AssertionError("a ball leaves the unit ball")
    pairs = cKDTree(c).query_pairs(2 * float(r.max()), output_type="ndarray")
    if len(pairs):
        d = np.linalg.norm(c[pairs[:, 0]] - c[pairs[:, 1]], axis=1)
        if np.any(d <= r[pairs[:, 0]] + r[pairs[:, 1]] - tol):
            raise AssertionError("two balls overlap")


def pack_balls(radii, n: int, seed: int = 0) -> Packing:
    """Greedy disjoint placement of balls with the given radii inside the unit ball.

    Radii are placed in decreasing order; each center is the first candidate
    in ``B(0, 1/2)`` outside every ``B(p_i, 2 r_i)`` of the balls already
    placed.  This always succeeds when ``sum r_i^n <= 4^-n``.  The returned
    packing follows the decreasing order of the radii.
    """
    r = np.sort(np.asarray(radii, dtype=float).ravel())[::-1]
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    budget = 4.0 ** (-n)
    total = math.fsum(r ** n)
    if total > budget * (1 + BUDGET_SLACK):
        raise PackingError(f"sum r_i^n = {total:.6g} exceeds the packing budget 4^-n = {budget:.6g}")
    if len(r) == 0:
        return Packing(n, np.zeros((0, n)), r, 0)
    count = max(1024, 8 * len(r))
    while True:
        cands = _candidates(n, count, seed)
        centers, consumed = kernels.greedy_pack(cands, r, 2 * float(r[0]))
        if consumed >= 0:
            break
        if count > 1 << 26:
            raise RuntimeError("candidate stream exhausted under a valid budget")
        count *= 4
    pk = Packing(n, np.asarray(centers), r, int(consumed))
    verify_packing(pk)
    return pk


# ---------------------------------------------------------------------------
# coverage proxies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageResult:
    """Outcome of a coverage search; ``parameter`` is ``None`` on failure."""

    success: bool
    parameter: np.ndarray | None
    miss: float
    delta: float
    evaluated: int
    constructive: bool
    theta: float | None = None

    def to_json(self):
        return {"success": self.success, "miss": self.miss, "delta": self.delta,
                "evaluated": self.evaluated, "constructive": self.constructive, "theta": self.theta,
                "parameter": None if self.parameter is None else [float(v) for v in self.parameter]}


def _miss(cycle, pts) -> float:
    if len(cycle) == 0:
        return math.inf
    return float(np.max(cycle.distance_to(pts)))


def point_coverage(f: Family, points, delta: float, budget: int = 256, seed: int = 0) -> CoverageResult:
    """Search for a member of ``f`` passing within ``delta`` of every point.

    Candidates from the family's ``cover`` hook are tried first, then
    ``budget`` sampled parameters; the first success wins.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != f.n or np.any(np.linalg.norm(pts, axis=1) > 1):
        raise ValueError("points must lie in the unit ball of the family's dimension")
    tol = max(delta, COVER_TOL)
    best = (math.inf, None)
    built = list(f.cover(pts)) if f.cover is not None else []
    for j, x in enumerate(built + list(sample_params(f.domain, budget, seed) if budget else [])):
        miss = _miss(f(x), pts)
        if miss <= tol:
            return CoverageResult(True, np.asarray(x), miss, delta, j + 1, j < len(built))
        if miss < best[0]:
            best = (miss, x)
    return CoverageResult(False, None, best[0], delta, len(built) + budget, False)


def random_loop(seed: int, samples: int = 256, harmonics: int = 3, radius: float = 0.9) -> np.ndarray:
    """A random smooth closed curve in the 3-ball sampled at ``2 pi j / samples``."""
    if samples % 2:
        raise ValueError("samples must be even so angles pair antipodally")
    rng = np.random.default_rng(seed)
    th = 2 * math.pi * np.arange(samples) / samples
    X = np.tile(rng.uniform(-0.3, 0.3, 3), (samples, 1))
    for h in range(1, harmonics + 1):
        a, b = rng.standard_normal((2, 3)) / h
        X += np.outer(np.cos(h * th), a) + np.outer(np.sin(h * th), b)
    return X * (radius / max(radius, float(np.linalg.norm(X, axis=1).max())))


def antipodal_coverage(f: Family, loop, delta: float, seed: int = 0, budget: int = 64) -> CoverageResult:
    """Find ``theta`` and a member of a translate family near both ``f(theta)`` and ``f(theta + pi)``.

    The height difference ``g(theta) = z(theta) - z(theta + pi)`` is odd under
    the antipodal map, so it changes sign on every half circle; at a sign
    change the two points share a height and a planar member through both
    is built by the family's ``cover`` hook.  If that fails, sampled
    parameters are tried at every sign change.
    """
    if not f.label.startswith("translate(") or f.n != 3:
        raise ValueError("antipodal coverage expects a translate family in the 3-ball")
    L = np.asarray(loop, dtype=float)
    M = L.shape[0]
    if M % 2 or L.shape[1] != 3:
        raise ValueError("loop must be an even number of 3-d samples")
    half = M // 2
    th = 2 * math.pi * np.arange(M + 1) / M
    g = L[:, 2] - np.roll(L, -half, axis=0)[:, 2]
    g = np.append(g, g[0])
    tol = max(delta, COVER_TOL)
    evaluated, best = 0, math.inf
    roots = []
    for j in range(half):
        if g[j] == 0:
            roots.append((th[j], L[j], L[(j + half) % M]))
        elif g[j] * g[j + 1] < 0:
            w = g[j] / (g[j] - g[j + 1])
            a = (1 - w) * L[j] + w * L[(j + 1) % M]
            b = (1 - w) * L[(j + half) % M] + w * L[(j + half + 1) % M]
            z = 0.5 * (a[2] + b[2])
            a[2] = b[2] = z
            roots.append((th[j] + w * (th[1] - th[0]), a, b))
    for theta, a, b in roots:
        pts = np.vstack([a, b])
        built = list(f.cover(pts)) if f.cover is not None else []
        for j, x in enumerate(built + list(sample_params(f.domain, budget, seed))):
            evaluated += 1
            miss = _miss(f(x), pts)
            best = min(best, miss)
            if miss <= tol:
                return CoverageResult(True, np.asarray(x), miss, delta, evaluated, j < len(built), float(theta))
    return CoverageResult(False, None, best, delta, evaluated, False)


# ---------------------------------------------------------------------------
# fits and bound reports
# ---------------------------------------------------------------------------

def scaling_fit(rows):
    """Least-squares line through ``(log p, log value)``: ``(slope, intercept, R^2)``."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ValueError("need at least 3 rows of (p, value)")
    if np.any(arr <= 0):
        raise ValueError("scaling fits need positive p and values")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return float(slope), float(intercept), r2


@dataclass(frozen=True)
class BoundReport:
    n: int
    k: int
    p: int
    c_base: float
    lower: float
    upper_measured: float
    seed: int

    @property
    def ratio(self) -> float:
        return self.upper_measured / self.lower

    def to_json(self):
        return {"n": self.n, "k": self.k, "p": self.p, "c_base": self.c_base, "lower": self.lower,
                "upper_measured": self.upper_measured, "ratio": self.ratio, "seed": self.seed}


def sandwich(ps, seed: int = 0, budget: int = 32, eps="auto"):
    """Closed-form lower bounds beside measured bent-family maxima for curves in the disk."""
    from .squeeze import bend_and_cancel

    cfg = BoundConfig(2, 1)
    out = []
    for p in ps:
        upper = bend_and_cancel(p, eps=eps, seed=seed, budget=budget).max_length
        out.append(BoundReport(2, 1, p, cfg.c_base, cup_lower_bound(p, cfg), upper, seed))
    return out
