"""Pure-Python reference implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same results (up to floating point round-off).  The
compiled versions are preferred at import time; see :mod:`sweepout.kernels`.
"""

import math

import numpy as np

FACE_BITS = 20
FACE_BIAS = 1 << (FACE_BITS - 1)
FREE = -1


def face_code(center, offset, half):
    """Integer id of the lattice face whose center is ``center``.

    Each coordinate is stored as its half-step index ``h = (c - offset) / half``;
    free axes have odd ``h`` and fixed axes even ``h``.
    """
    code = 0
    for j in range(len(center)):
        h = int(round((center[j] - offset[j]) / half))
        code |= (h + FACE_BIAS) << (FACE_BITS * j)
    return code


# ---------------------------------------------------------------------------
# skeleton squeezing
# ---------------------------------------------------------------------------

def _squeeze_one(x, l, s, eps, offset):
    n = x.shape[0]
    half = 0.5 * s
    cell = np.floor((x - offset) / s)
    c = offset + s * (cell + 0.5)
    y = x.copy()
    free = list(range(n))
    while len(free) > l:
        u = (y[free] - c[free]) / half
        au = np.abs(u)
        m = au.max()
        if m <= eps:
            y[free] = c[free] + half * u / eps
            return y
        i = free[int(np.argmax(au))]
        sig = 1.0 if y[i] >= c[i] else -1.0
        y[free] = c[free] + half * u / m
        y[i] = c[i] + sig * half
        c = c.copy()
        c[i] = c[i] + sig * half
        free.remove(i)
    return y


def squeeze_points(X, l, s, eps, offset):
    """Apply the skeleton-squeezing map to every row of ``X``."""
    X = np.asarray(X, dtype=float)
    offset = np.asarray(offset, dtype=float)
    out = np.empty_like(X)
    for r in range(X.shape[0]):
        out[r] = _squeeze_one(X[r], l, s, eps, offset)
    return out


def _cell_breaks(a, b, s, offset):
    d = b - a
    taus = [0.0, 1.0]
    for j in range(a.shape[0]):
        if d[j] == 0.0:
            continue
        lo = (min(a[j], b[j]) - offset[j]) / s
        hi = (max(a[j], b[j]) - offset[j]) / s
        for k in range(int(math.ceil(lo)), int(math.floor(hi)) + 1):
            t = (offset[j] + k * s - a[j]) / d[j]
            if 0.0 < t < 1.0:
                taus.append(t)
    return sorted(taus)


def _push_face(p, q, c, free, l, s, eps, offset, src, out):
    half = 0.5 * s
    if len(free) == l:
        out.append((p, q, face_code(c, offset, half), len(free), src))
        return
    up = (p - c) / half
    uq = (q - c) / half
    du = uq - up
    taus = [0.0, 1.0]
    for j in free:
        if du[j] != 0.0:
            for target in (eps, -eps):
                t = (target - up[j]) / du[j]
                if 0.0 < t < 1.0:
                    taus.append(t)
    for ii, i in enumerate(free):
        for j in free[ii + 1:]:
            for sg in (1.0, -1.0):
                g0 = up[i] - sg * up[j]
                g1 = du[i] - sg * du[j]
                if g1 != 0.0:
                    t = -g0 / g1
                    if 0.0 < t < 1.0:
                        taus.append(t)
    taus.sort()
    for t0, t1 in zip(taus[:-1], taus[1:]):
        if t1 - t0 <= 1e-15:
            continue
        um = up + 0.5 * (t0 + t1) * du
        u0 = up + t0 * du
        u1 = up + t1 * du
        fm = np.abs(um[free])
        m = fm.max()
        if m <= eps:
            y0 = c.copy()
            y1 = c.copy()
            y0[free] = c[free] + half * u0[free] / eps
            y1[free] = c[free] + half * u1[free] / eps
            if np.abs(y1 - y0).max() > 1e-14:
                out.append((y0, y1, FREE, len(free), src))
            continue
        i = free[int(np.argmax(fm))]
        sig = 1.0 if um[i] > 0 else -1.0
        y0 = c.copy()
        y1 = c.copy()
        y0[free] = c[free] + half * u0[free] / (sig * u0[i])
        y1[free] = c[free] + half * u1[free] / (sig * u1[i])
        if np.abs(y1 - y0).max() <= 1e-14:
            continue
        c2 = c.copy()
        c2[i] = c[i] + sig * half
        y0[i] = c2[i]
        y1[i] = c2[i]
        _push_face(y0, y1, c2, [j for j in free if j != i], l, s, eps, offset, src, out)


def push_segments(A, B, l, s, eps, offset):
    """Exact image of segments under the squeezing map.

    Returns ``(P0, P1, codes, levels, src)``: output segment endpoints, the
    carrier face code (``-1`` for free pieces produced inside a core), the
    dimension of the face the piece ended on, and the index of the source
    segment.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    offset = np.asarray(offset, dtype=float)
    n = A.shape[1]
    out = []
    for r in range(A.shape[0]):
        a, b = A[r], B[r]
        taus = _cell_breaks(a, b, s, offset)
        for t0, t1 in zip(taus[:-1], taus[1:]):
            if t1 - t0 <= 1e-15:
                continue
            p = a + t0 * (b - a)
            q = a + t1 * (b - a)
            mid = a + 0.5 * (t0 + t1) * (b - a)
            c = offset + s * (np.floor((mid - offset) / s) + 0.5)
            _push_face(p, q, c, list(range(n)), l, s, eps, offset, r, out)
    m = len(out)
    P0 = np.empty((m, n))
    P1 = np.empty((m, n))
    codes = np.empty(m, dtype=np.int64)
    levels = np.empty(m, dtype=np.int64)
    src = np.empty(m, dtype=np.int64)
    for k, (p, q, code, lev, sr) in enumerate(out):
        P0[k] = p
        P1[k] = q
        codes[k] = code
        levels[k] = lev
        src[k] = sr
    return P0, P1, codes, levels, src


# ---------------------------------------------------------------------------
# GF(2) brute force for the flat norm
# ---------------------------------------------------------------------------

def flat_norm_search(bnd_masks, c_mask, w_cell, w_face):
    """Minimise ``w_cell*|D| + w_face*|bd(D) xor c|`` over all subsets D.

    ``bnd_masks[i]`` is the bitmask (Python int) of the boundary faces of cell
    ``i``.  Enumeration follows the reflected Gray code so each step flips one
    cell.  Returns ``(best_value, best_subset_mask)``; the first minimiser in
    Gray order wins.
    """
    m = len(bnd_masks)
    cur = int(c_mask)
    best = w_face * bin(cur).count("1")
    best_d = 0
    d = 0
    size = 0
    for g in range(1, 1 << m):
        bit = (g & -g).bit_length() - 1
        d ^= 1 << bit
        size += 1 if (d >> bit) & 1 else -1
        cur ^= int(bnd_masks[bit])
        val = w_cell * size + w_face * bin(cur).count("1")
        if val < best:
            best = val
            best_d = d
    return best, best_d


# ---------------------------------------------------------------------------
# Sturm root counting
# ---------------------------------------------------------------------------

def _trim(p, tol):
    scale = max(np.abs(p).max(), 1e-300)
    k = len(p)
    while k > 1 and abs(p[k - 1]) <= tol * scale:
        k -= 1
    return p[:k]


REMAINDER_TOL = 1e-12


def sturm_sequence(coeffs, tol=1e-14, rem_tol=REMAINDER_TOL):
    """Sturm chain of a polynomial given by ascending coefficients.

    ``tol`` trims negligible leading coefficients; a remainder below
    ``rem_tol`` times the current scale ends the chain (it is the rounding
    residue of an exact zero, so the previous entry is the gcd).
    """
    p0 = _trim(np.asarray(coeffs, dtype=float), tol)
    if len(p0) <= 1:
        return [p0]
    p1 = np.array([k * p0[k] for k in range(1, len(p0))])
    seq = [p0, p1]
    scale0 = np.abs(p0).max()
    while len(seq[-1]) > 1:
        a, b = seq[-2], seq[-1]
        r = a.copy()
        db = len(b) - 1
        for k in range(len(a) - 1, db - 1, -1):
            f = r[k] / b[db]
            r[k - db:k + 1] -= f * b
        r = -r[:db]
        if len(r) == 0 or np.abs(r).max() <= rem_tol * max(scale0, np.abs(a).max()):
            break
        r = _trim(r, tol)
        seq.append(r)
    return seq


def _sign_changes(seq, x):
    prev = 0.0
    count = 0
    for p in seq:
        v = 0.0
        for c in p[::-1]:
            v = v * x + c
        if v != 0.0:
            if prev != 0.0 and (v > 0) != (prev > 0):
                count += 1
            prev = v
    return count


def sturm_counts(C, lo, hi):
    """Number of distinct real roots in ``(lo_i, hi_i]`` for each row of ``C``."""
    C = np.asarray(C, dtype=float)
    out = np.zeros(C.shape[0], dtype=np.int64)
    for r in range(C.shape[0]):
        if not np.any(C[r]):
            out[r] = 0
            continue
        seq = sturm_sequence(C[r])
        out[r] = _sign_changes(seq, lo[r]) - _sign_changes(seq, hi[r])
    return out


# ---------------------------------------------------------------------------
# volume of a polytope below a cutting plane
# ---------------------------------------------------------------------------

def _clip_poly(pts, v, t):
    res = []
    k = len(pts)
    for a in range(k):
        p = pts[a]
        q = pts[(a + 1) % k]
        fp = p @ v - t
        fq = q @ v - t
        if fp <= 0:
            res.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            res.append(p + (fp / (fp - fq)) * (q - p))
    return res


def clip_volume(F, v, t):
    """Volume of ``{x in K : v.x <= t}`` from the outward-oriented boundary of K.

    ``F`` has shape (m, n, n): boundary edges (n=2) or triangles (n=3) with
    outward orientation.  Cones are taken from the point ``t*v`` on the cutting
    plane, so the cut face itself contributes nothing.
    """
    F = np.asarray(F, dtype=float)
    v = np.asarray(v, dtype=float)
    n = F.shape[1]
    o = t * v
    total = 0.0
    if n == 2:
        for e in F:
            p, q = e[0], e[1]
            fp = p @ v - t
            fq = q @ v - t
            if fp > 0 and fq > 0:
                continue
            if fp > 0:
                p = p + (fp / (fp - fq)) * (q - p)
            elif fq > 0:
                q = p + (fp / (fp - fq)) * (q - p)
            a = p - o
            b = q - o
            total += 0.5 * (a[0] * b[1] - a[1] * b[0])
        return total
    for tri in F:
        poly = _clip_poly([tri[0], tri[1], tri[2]], v, t)
        if len(poly) < 3:
            continue
        a = poly[0] - o
        for j in range(1, len(poly) - 1):
            b = poly[j] - o
            c = poly[j + 1] - o
            total += np.dot(a, np.cross(b, c)) / 6.0
    return total


# ---------------------------------------------------------------------------
# dense simplex with Bland's rule
# ---------------------------------------------------------------------------

def _pivot(T, basis, r, c):
    T[r] /= T[r, c]
    for i in range(T.shape[0]):
        if i != r and T[i, c] != 0.0:
            T[i] -= T[i, c] * T[r]
    basis[r] = c


def _run_simplex(T, basis, ncols, tol, max_iter):
    """Maximise the objective stored (negated) in the last row of ``T``."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        obj = T[m, :ncols]
        enter = -1
        for j in range(ncols):
            if obj[j] < -tol:
                enter = j
                break
        if enter < 0:
            return 0
        leave = -1
        best = math.inf
        for i in range(m):
            a = T[i, enter]
            if a > tol:
                ratio = T[i, -1] / a
                if ratio < best - tol or (abs(ratio - best) <= tol and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return 2
        _pivot(T, basis, leave, enter)
    return 3


def simplex_max(c, A, b, tol=1e-10, max_iter=5000):
    """Maximise ``c.x`` subject to ``A x <= b`` with ``x`` free.

    Two-phase tableau simplex with Bland's anti-cycling rule.  Returns
    ``(status, x, value)`` with status 0 optimal, 1 infeasible, 2 unbounded,
    3 iteration cap.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    # variables: x+ (n), x- (n), slacks (m), artificials (m)
    nv = 2 * n + m
    T = np.zeros((m + 1, nv + m + 1))
    basis = np.zeros(m, dtype=np.int64)
    for i in range(m):
        sg = 1.0 if b[i] >= 0 else -1.0
        T[i, :n] = sg * A[i]
        T[i, n:2 * n] = -sg * A[i]
        T[i, 2 * n + i] = sg
        T[i, nv + i] = 1.0
        T[i, -1] = sg * b[i]
        basis[i] = nv + i
    # phase 1: maximise -sum(artificials)
    T[m, :] = -T[:m, :].sum(axis=0)
    T[m, nv:nv + m] = 0.0
    status = _run_simplex(T, basis, nv + m, tol, max_iter)
    if status == 3:
        return 3, np.zeros(n), math.nan
    if T[m, -1] < -1e-9 * max(1.0, np.abs(b).max()):
        return 1, np.zeros(n), math.nan
    # drive artificials out of the basis
    for i in range(m):
        if basis[i] >= nv:
            for j in range(nv):
                if abs(T[i, j]) > tol:
                    _pivot(T, basis, i, j)
                    break
    T[:, nv:nv + m] = 0.0
    # phase 2
    T[m, :] = 0.0
    T[m, :n] = -c
    T[m, n:2 * n] = c
    for i in range(m):
        j = basis[i]
        if j < nv and T[m, j] != 0.0:
            T[m] -= T[m, j] * T[i]
    status = _run_simplex(T, basis, nv, tol, max_iter)
    z = np.zeros(nv + m)
    for i in range(m):
        z[basis[i]] = T[i, -1]
    x = z[:n] - z[n:2 * n]
    if status != 0:
        return status, x, math.nan
    return 0, x, float(c @ x)


# ---------------------------------------------------------------------------
# greedy ball packing scan
# ---------------------------------------------------------------------------

def greedy_pack(cands, radii, cell):
    """Place balls greedily from a candidate stream.

    Ball ``j`` takes the first remaining candidate outside every earlier
    exclusion ball ``B(p_i, 2 r_i)``.  Because radii are non-increasing the
    excluded set only grows, so one forward pass over the stream suffices.
    Returns ``(centers, consumed)``; ``consumed = -1`` if the stream ran out.
    """
    cands = np.asarray(cands, dtype=float)
    radii = np.asarray(radii, dtype=float)
    p = radii.shape[0]
    n = cands.shape[1]
    centers = np.zeros((p, n))
    grid = {}
    ptr = 0
    M = cands.shape[0]
    for j in range(p):
        placed = False
        while ptr < M:
            x = cands[ptr]
            ptr += 1
            key = tuple(int(math.floor(x[a] / cell)) for a in range(n))
            ok = True
            for dk in np.ndindex(*([3] * n)):
                nb = tuple(key[a] + dk[a] - 1 for a in range(n))
                for i in grid.get(nb, ()):
                    dx = x - centers[i]
                    if dx @ dx <= (2.0 * radii[i]) ** 2:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                centers[j] = x
                grid.setdefault(key, []).append(j)
                placed = True
                break
        if not placed:
            return centers, -1
    return centers, ptr


# ---------------------------------------------------------------------------
# segment / line crossing counts
# ---------------------------------------------------------------------------

def segment_line_counts(P0, P1, theta, offs):
    """For each line ``x cos(theta) + y sin(theta) = off`` count crossed segments."""
    P0 = np.asarray(P0, dtype=float)
    P1 = np.asarray(P1, dtype=float)
    theta = np.asarray(theta, dtype=float)
    offs = np.asarray(offs, dtype=float)
    out = np.zeros(theta.shape[0], dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, P0.shape[0]))
    for s0 in range(0, theta.shape[0], chunk):
        th = theta[s0:s0 + chunk, None]
        of = offs[s0:s0 + chunk, None]
        cs, sn = np.cos(th), np.sin(th)
        f0 = P0[None, :, 0] * cs + P0[None, :, 1] * sn - of
        f1 = P1[None, :, 0] * cs + P1[None, :, 1] * sn - of
        out[s0:s0 + chunk] = ((f0 > 0) != (f1 > 0)).sum(axis=1)
    return out
