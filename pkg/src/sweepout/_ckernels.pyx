# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; results match ``_pykernels`` up to round-off."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs, round as cround, INFINITY, cos, sin
from libc.stdint cimport int64_t, uint64_t
from libcpp.vector cimport vector

cnp.import_array()

DEF MAXN = 4
DEF FACE_BITS = 20
DEF FACE_BIAS = 524288  # 1 << (FACE_BITS - 1)


cdef extern from "<algorithm>" namespace "std" nogil:
    void std_sort "std::sort"[Iter](Iter first, Iter last)


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline void _sort_vec(vector[double]& v) noexcept nogil:
    std_sort(v.begin(), v.end())


cdef inline int _popcount(uint64_t x) noexcept nogil:
    return __builtin_popcountll(x)


cdef inline int64_t _face_code(double* c, double* offset, double half, int n) noexcept nogil:
    cdef int64_t code = 0
    cdef int64_t h
    cdef int j
    for j in range(n):
        h = <int64_t>cround((c[j] - offset[j]) / half)
        code |= (h + FACE_BIAS) << (FACE_BITS * j)
    return code


# ---------------------------------------------------------------------------
# skeleton squeezing
# ---------------------------------------------------------------------------

def squeeze_points(X, int l, double s, double eps, offset):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] off = np.ascontiguousarray(offset, dtype=np.float64)
    cdef int m = x.shape[0]
    cdef int n = x.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double half = 0.5 * s
    cdef double c[MAXN]
    cdef double y[MAXN]
    cdef double u[MAXN]
    cdef int free[MAXN]
    cdef int nf, r, j, k, i, ai
    cdef double mx, sig
    for r in range(m):
        for j in range(n):
            c[j] = off[j] + s * (floor((x[r, j] - off[j]) / s) + 0.5)
            y[j] = x[r, j]
            free[j] = j
        nf = n
        while nf > l:
            mx = -1.0
            ai = 0
            for k in range(nf):
                j = free[k]
                u[k] = (y[j] - c[j]) / half
                if fabs(u[k]) > mx:
                    mx = fabs(u[k])
                    ai = k
            if mx <= eps:
                for k in range(nf):
                    j = free[k]
                    y[j] = c[j] + half * u[k] / eps
                break
            i = free[ai]
            sig = 1.0 if y[i] >= c[i] else -1.0
            for k in range(nf):
                j = free[k]
                y[j] = c[j] + half * u[k] / mx
            y[i] = c[i] + sig * half
            c[i] = c[i] + sig * half
            for k in range(ai, nf - 1):
                free[k] = free[k + 1]
            nf -= 1
        for j in range(n):
            out[r, j] = y[j]
    return out_arr


cdef struct PushOut:
    vector[double]* pts
    vector[int64_t]* codes
    vector[int64_t]* levels
    vector[int64_t]* src


cdef void _sort_small(double* a, int k) noexcept nogil:
    cdef int i, j
    cdef double t
    for i in range(1, k):
        t = a[i]
        j = i - 1
        while j >= 0 and a[j] > t:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = t


cdef void _push_face(double* p, double* q, double* c, int* free, int nf, int n, int l,
                     double s, double eps, double* offset, int64_t srci, PushOut* out) noexcept nogil:
    cdef double half = 0.5 * s
    cdef int j, k, kk, i, ai, a, b, isg
    cdef double up[MAXN]
    cdef double du[MAXN]
    cdef double u0[MAXN]
    cdef double u1[MAXN]
    cdef double um[MAXN]
    cdef double y0[MAXN]
    cdef double y1[MAXN]
    cdef double c2[MAXN]
    cdef int free2[MAXN]
    cdef double taus[64]
    cdef int nt = 0
    cdef double t, t0, t1, g0, g1, sg, mx, sig, dmax
    if nf == l:
        for j in range(n):
            out.pts.push_back(p[j])
        for j in range(n):
            out.pts.push_back(q[j])
        out.codes.push_back(_face_code(c, offset, half, n))
        out.levels.push_back(nf)
        out.src.push_back(srci)
        return
    for j in range(n):
        up[j] = (p[j] - c[j]) / half
        du[j] = (q[j] - c[j]) / half - up[j]
    taus[nt] = 0.0
    nt += 1
    taus[nt] = 1.0
    nt += 1
    for k in range(nf):
        j = free[k]
        if du[j] != 0.0:
            t = (eps - up[j]) / du[j]
            if 0.0 < t < 1.0:
                taus[nt] = t
                nt += 1
            t = (-eps - up[j]) / du[j]
            if 0.0 < t < 1.0:
                taus[nt] = t
                nt += 1
    for k in range(nf):
        for kk in range(k + 1, nf):
            a = free[k]
            b = free[kk]
            for isg in range(2):
                sg = 1.0 - 2.0 * isg
                g0 = up[a] - sg * up[b]
                g1 = du[a] - sg * du[b]
                if g1 != 0.0:
                    t = -g0 / g1
                    if 0.0 < t < 1.0:
                        taus[nt] = t
                        nt += 1
    _sort_small(taus, nt)
    for kk in range(nt - 1):
        t0 = taus[kk]
        t1 = taus[kk + 1]
        if t1 - t0 <= 1e-15:
            continue
        mx = -1.0
        ai = 0
        for k in range(nf):
            j = free[k]
            um[j] = up[j] + 0.5 * (t0 + t1) * du[j]
            u0[j] = up[j] + t0 * du[j]
            u1[j] = up[j] + t1 * du[j]
            if fabs(um[j]) > mx:
                mx = fabs(um[j])
                ai = k
        for j in range(n):
            y0[j] = c[j]
            y1[j] = c[j]
        if mx <= eps:
            dmax = 0.0
            for k in range(nf):
                j = free[k]
                y0[j] = c[j] + half * u0[j] / eps
                y1[j] = c[j] + half * u1[j] / eps
                if fabs(y1[j] - y0[j]) > dmax:
                    dmax = fabs(y1[j] - y0[j])
            if dmax > 1e-14:
                for j in range(n):
                    out.pts.push_back(y0[j])
                for j in range(n):
                    out.pts.push_back(y1[j])
                out.codes.push_back(-1)
                out.levels.push_back(nf)
                out.src.push_back(srci)
            continue
        i = free[ai]
        sig = 1.0 if um[i] > 0 else -1.0
        dmax = 0.0
        for k in range(nf):
            j = free[k]
            y0[j] = c[j] + half * u0[j] / (sig * u0[i])
            y1[j] = c[j] + half * u1[j] / (sig * u1[i])
            if fabs(y1[j] - y0[j]) > dmax:
                dmax = fabs(y1[j] - y0[j])
        if dmax <= 1e-14:
            continue
        for j in range(n):
            c2[j] = c[j]
        c2[i] = c[i] + sig * half
        y0[i] = c2[i]
        y1[i] = c2[i]
        a = 0
        for k in range(nf):
            if free[k] != i:
                free2[a] = free[k]
                a += 1
        _push_face(y0, y1, c2, free2, nf - 1, n, l, s, eps, offset, srci, out)


def push_segments(A, B, int l, double s, double eps, offset):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] off = np.ascontiguousarray(offset, dtype=np.float64)
    cdef int m = a.shape[0]
    cdef int n = a.shape[1]
    cdef vector[double] pts
    cdef vector[int64_t] codes
    cdef vector[int64_t] levels
    cdef vector[int64_t] src
    cdef PushOut out
    out.pts = &pts
    out.codes = &codes
    out.levels = &levels
    out.src = &src
    cdef double offv[MAXN]
    cdef double d[MAXN]
    cdef double p[MAXN]
    cdef double q[MAXN]
    cdef double c[MAXN]
    cdef int free[MAXN]
    cdef vector[double] taus
    cdef int r, j, kk
    cdef long k, klo, khi
    cdef double t, t0, t1, lo, hi, mid
    for j in range(n):
        offv[j] = off[j]
    with nogil:
        for r in range(m):
            taus.clear()
            taus.push_back(0.0)
            taus.push_back(1.0)
            for j in range(n):
                d[j] = b[r, j] - a[r, j]
                if d[j] == 0.0:
                    continue
                lo = (min(a[r, j], b[r, j]) - offv[j]) / s
                hi = (max(a[r, j], b[r, j]) - offv[j]) / s
                klo = <long>ceil(lo)
                khi = <long>floor(hi)
                for k in range(klo, khi + 1):
                    t = (offv[j] + k * s - a[r, j]) / d[j]
                    if 0.0 < t < 1.0:
                        taus.push_back(t)
            _sort_vec(taus)
            for kk in range(<int>taus.size() - 1):
                t0 = taus[kk]
                t1 = taus[kk + 1]
                if t1 - t0 <= 1e-15:
                    continue
                for j in range(n):
                    p[j] = a[r, j] + t0 * d[j]
                    q[j] = a[r, j] + t1 * d[j]
                    mid = a[r, j] + 0.5 * (t0 + t1) * d[j]
                    c[j] = offv[j] + s * (floor((mid - offv[j]) / s) + 0.5)
                    free[j] = j
                _push_face(p, q, c, free, n, n, l, s, eps, offv, r, &out)
    cdef Py_ssize_t mo = codes.size()
    P0 = np.empty((mo, n), dtype=np.float64)
    P1 = np.empty((mo, n), dtype=np.float64)
    C = np.empty(mo, dtype=np.int64)
    L = np.empty(mo, dtype=np.int64)
    S = np.empty(mo, dtype=np.int64)
    cdef double[:, ::1] p0 = P0
    cdef double[:, ::1] p1 = P1
    cdef int64_t[::1] cc = C
    cdef int64_t[::1] ll = L
    cdef int64_t[::1] ss = S
    cdef Py_ssize_t e
    for e in range(mo):
        for j in range(n):
            p0[e, j] = pts[e * 2 * n + j]
            p1[e, j] = pts[e * 2 * n + n + j]
        cc[e] = codes[e]
        ll[e] = levels[e]
        ss[e] = src[e]
    return P0, P1, C, L, S


# ---------------------------------------------------------------------------
# GF(2) brute force for the flat norm
# ---------------------------------------------------------------------------

def flat_norm_search(bnd_masks, c_mask, long w_cell, long w_face):
    cdef int m = len(bnd_masks)
    if m > 40:
        raise ValueError("too many cells for exhaustive search")
    for v in bnd_masks:
        if int(v) >= (1 << 64) or int(v) < 0:
            raise OverflowError("face masks exceed 64 bits")
    if int(c_mask) >= (1 << 64):
        raise OverflowError("face masks exceed 64 bits")
    cdef vector[uint64_t] masks
    for v in bnd_masks:
        masks.push_back(<uint64_t>int(v))
    cdef uint64_t cur = <uint64_t>int(c_mask)
    cdef uint64_t d = 0
    cdef uint64_t best_d = 0
    cdef long size = 0
    cdef long best = w_face * _popcount(cur)
    cdef long val
    cdef uint64_t g
    cdef uint64_t top = (<uint64_t>1) << m
    cdef int bit
    with nogil:
        g = 1
        while g < top:
            bit = __builtin_ctzll(g)
            d ^= (<uint64_t>1) << bit
            if (d >> bit) & 1:
                size += 1
            else:
                size -= 1
            cur ^= masks[bit]
            val = w_cell * size + w_face * _popcount(cur)
            if val < best:
                best = val
                best_d = d
            g += 1
    return int(best), int(best_d)


# ---------------------------------------------------------------------------
# Sturm root counting
# ---------------------------------------------------------------------------

DEF MAXD = 32


cdef int _trim_len(double* p, int k, double tol) noexcept nogil:
    cdef double scale = 1e-300
    cdef int i
    for i in range(k):
        if fabs(p[i]) > scale:
            scale = fabs(p[i])
    while k > 1 and fabs(p[k - 1]) <= tol * scale:
        k -= 1
    return k


cdef int _sign_changes(double* seq, int* lens, int ns, double x) noexcept nogil:
    cdef double prev = 0.0
    cdef double v
    cdef int count = 0
    cdef int a, i
    for a in range(ns):
        v = 0.0
        for i in range(lens[a] - 1, -1, -1):
            v = v * x + seq[a * (MAXD + 1) + i]
        if v != 0.0:
            if prev != 0.0 and ((v > 0) != (prev > 0)):
                count += 1
            prev = v
    return count


def sturm_counts(C, lo, hi):
    cdef double[:, ::1] cf = np.ascontiguousarray(C, dtype=np.float64)
    cdef double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef int L = cf.shape[0]
    cdef int D1 = cf.shape[1]
    if D1 > MAXD + 1:
        raise ValueError("degree too large for the compiled Sturm kernel")
    out_arr = np.zeros(L, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef double seq[(MAXD + 2) * (MAXD + 1)]
    cdef int lens[MAXD + 2]
    cdef double r[MAXD + 1]
    cdef int row, i, k, ns, la, lb, db, nz
    cdef double tol = 1e-14
    cdef double rem_tol = 1e-12
    cdef double scale0, sa, f, rmax
    with nogil:
        for row in range(L):
            nz = 0
            for i in range(D1):
                seq[i] = cf[row, i]
                if cf[row, i] != 0.0:
                    nz = 1
            if nz == 0:
                out[row] = 0
                continue
            lens[0] = _trim_len(seq, D1, tol)
            ns = 1
            if lens[0] > 1:
                for i in range(1, lens[0]):
                    seq[(MAXD + 1) + i - 1] = i * seq[i]
                lens[1] = lens[0] - 1
                ns = 2
                scale0 = 0.0
                for i in range(lens[0]):
                    if fabs(seq[i]) > scale0:
                        scale0 = fabs(seq[i])
                while lens[ns - 1] > 1:
                    la = lens[ns - 2]
                    lb = lens[ns - 1]
                    db = lb - 1
                    sa = 0.0
                    for i in range(la):
                        r[i] = seq[(ns - 2) * (MAXD + 1) + i]
                        if fabs(r[i]) > sa:
                            sa = fabs(r[i])
                    for k in range(la - 1, db - 1, -1):
                        f = r[k] / seq[(ns - 1) * (MAXD + 1) + db]
                        for i in range(lb):
                            r[k - db + i] -= f * seq[(ns - 1) * (MAXD + 1) + i]
                    rmax = 0.0
                    for i in range(db):
                        r[i] = -r[i]
                        if fabs(r[i]) > rmax:
                            rmax = fabs(r[i])
                    if db == 0 or rmax <= rem_tol * max(scale0, sa):
                        break
                    for i in range(db):
                        seq[ns * (MAXD + 1) + i] = r[i]
                    lens[ns] = _trim_len(&seq[ns * (MAXD + 1)], db, tol)
                    ns += 1
            out[row] = _sign_changes(seq, lens, ns, lov[row]) - _sign_changes(seq, lens, ns, hiv[row])
    return out_arr


# ---------------------------------------------------------------------------
# volume of a polytope below a cutting plane
# ---------------------------------------------------------------------------

def clip_volume(F, v, double t):
    cdef double[:, :, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef int m = f.shape[0]
    cdef int n = f.shape[1]
    cdef double total = 0.0
    cdef double o[3]
    cdef double poly[4][3]
    cdef double fv[3]
    cdef double pa[3]
    cdef double pb[3]
    cdef double pc[3]
    cdef int e, a, j, np_, nxt
    cdef double fp, fq, lam
    for j in range(n):
        o[j] = t * vv[j]
    if n == 2:
        for e in range(m):
            fp = f[e, 0, 0] * vv[0] + f[e, 0, 1] * vv[1] - t
            fq = f[e, 1, 0] * vv[0] + f[e, 1, 1] * vv[1] - t
            if fp > 0 and fq > 0:
                continue
            for j in range(2):
                pa[j] = f[e, 0, j]
                pb[j] = f[e, 1, j]
            if fp > 0:
                lam = fp / (fp - fq)
                for j in range(2):
                    pa[j] = f[e, 0, j] + lam * (f[e, 1, j] - f[e, 0, j])
            elif fq > 0:
                lam = fp / (fp - fq)
                for j in range(2):
                    pb[j] = f[e, 0, j] + lam * (f[e, 1, j] - f[e, 0, j])
            total += 0.5 * ((pa[0] - o[0]) * (pb[1] - o[1]) - (pa[1] - o[1]) * (pb[0] - o[0]))
        return total
    for e in range(m):
        for a in range(3):
            fv[a] = f[e, a, 0] * vv[0] + f[e, a, 1] * vv[1] + f[e, a, 2] * vv[2] - t
        if fv[0] > 0 and fv[1] > 0 and fv[2] > 0:
            continue
        np_ = 0
        for a in range(3):
            nxt = (a + 1) % 3
            if fv[a] <= 0:
                for j in range(3):
                    poly[np_][j] = f[e, a, j]
                np_ += 1
            if (fv[a] < 0 < fv[nxt]) or (fv[nxt] < 0 < fv[a]):
                lam = fv[a] / (fv[a] - fv[nxt])
                for j in range(3):
                    poly[np_][j] = f[e, a, j] + lam * (f[e, nxt, j] - f[e, a, j])
                np_ += 1
        if np_ < 3:
            continue
        for j in range(3):
            pa[j] = poly[0][j] - o[j]
        for a in range(1, np_ - 1):
            for j in range(3):
                pb[j] = poly[a][j] - o[j]
                pc[j] = poly[a + 1][j] - o[j]
            total += (pa[0] * (pb[1] * pc[2] - pb[2] * pc[1])
                      - pa[1] * (pb[0] * pc[2] - pb[2] * pc[0])
                      + pa[2] * (pb[0] * pc[1] - pb[1] * pc[0])) / 6.0
    return total


# ---------------------------------------------------------------------------
# dense simplex with Bland's rule
# ---------------------------------------------------------------------------

cdef void _pivot(double[:, ::1] T, int64_t[::1] basis, int r, int c) noexcept nogil:
    cdef int rows = T.shape[0]
    cdef int cols = T.shape[1]
    cdef int i, j
    cdef double piv = T[r, c]
    cdef double f
    for j in range(cols):
        T[r, j] /= piv
    for i in range(rows):
        if i != r:
            f = T[i, c]
            if f != 0.0:
                for j in range(cols):
                    T[i, j] -= f * T[r, j]
    basis[r] = c


cdef int _run_simplex(double[:, ::1] T, int64_t[::1] basis, int ncols, double tol,
                      int max_iter) noexcept nogil:
    cdef int m = T.shape[0] - 1
    cdef int last = T.shape[1] - 1
    cdef int it, j, i, enter, leave
    cdef double best, ratio, a
    for it in range(max_iter):
        enter = -1
        for j in range(ncols):
            if T[m, j] < -tol:
                enter = j
                break
        if enter < 0:
            return 0
        leave = -1
        best = INFINITY
        for i in range(m):
            a = T[i, enter]
            if a > tol:
                ratio = T[i, last] / a
                if ratio < best - tol or (leave >= 0 and fabs(ratio - best) <= tol
                                          and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return 2
        _pivot(T, basis, leave, enter)
    return 3


def simplex_max(c, A, b, double tol=1e-10, int max_iter=5000):
    cv = np.asarray(c, dtype=np.float64)
    Av = np.asarray(A, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    cdef int m = Av.shape[0]
    cdef int n = Av.shape[1]
    cdef int nv = 2 * n + m
    T_arr = np.zeros((m + 1, nv + m + 1))
    basis_arr = np.zeros(m, dtype=np.int64)
    cdef double[:, ::1] T = T_arr
    cdef int64_t[::1] basis = basis_arr
    cdef int i, j, jj
    cdef double sg
    for i in range(m):
        sg = 1.0 if bv[i] >= 0 else -1.0
        for j in range(n):
            T[i, j] = sg * Av[i, j]
            T[i, n + j] = -sg * Av[i, j]
        T[i, 2 * n + i] = sg
        T[i, nv + i] = 1.0
        T[i, nv + m] = sg * bv[i]
        basis[i] = nv + i
    for j in range(nv + m + 1):
        sg = 0.0
        for i in range(m):
            sg += T[i, j]
        T[m, j] = -sg
    for j in range(nv, nv + m):
        T[m, j] = 0.0
    cdef int status
    with nogil:
        status = _run_simplex(T, basis, nv + m, tol, max_iter)
    if status == 3:
        return 3, np.zeros(n), float("nan")
    if T[m, nv + m] < -1e-9 * max(1.0, float(np.abs(bv).max()) if m else 1.0):
        return 1, np.zeros(n), float("nan")
    for i in range(m):
        if basis[i] >= nv:
            for j in range(nv):
                if fabs(T[i, j]) > tol:
                    _pivot(T, basis, i, j)
                    break
    for i in range(m + 1):
        for j in range(nv, nv + m):
            T[i, j] = 0.0
    for j in range(nv + m + 1):
        T[m, j] = 0.0
    for j in range(n):
        T[m, j] = -cv[j]
        T[m, n + j] = cv[j]
    cdef double f
    for i in range(m):
        j = basis[i]
        if j < nv:
            f = T[m, j]
            if f != 0.0:
                for jj in range(nv + m + 1):
                    T[m, jj] -= f * T[i, jj]
    with nogil:
        status = _run_simplex(T, basis, nv, tol, max_iter)
    z = np.zeros(nv + m)
    for i in range(m):
        z[basis[i]] = T[i, nv + m]
    x = z[:n] - z[n:2 * n]
    if status != 0:
        return status, x, float("nan")
    return 0, x, float(cv @ x)


# ---------------------------------------------------------------------------
# greedy ball packing scan
# ---------------------------------------------------------------------------

def greedy_pack(cands, radii, double cell):
    cdef double[:, ::1] X = np.ascontiguousarray(cands, dtype=np.float64)
    cdef double[::1] R = np.ascontiguousarray(radii, dtype=np.float64)
    cdef int M = X.shape[0]
    cdef int n = X.shape[1]
    cdef int p = R.shape[0]
    centers_arr = np.zeros((p, n))
    cdef double[:, ::1] Cn = centers_arr
    # dense bucket grid over [-1/2, 1/2]^n
    cdef long G = <long>ceil(1.0 / cell) + 3
    cdef long ncell = 1
    cdef int a
    for a in range(n):
        ncell *= G
    head_arr = np.full(ncell, -1, dtype=np.int64)
    nxt_arr = np.full(p, -1, dtype=np.int64)
    cdef int64_t[::1] head = head_arr
    cdef int64_t[::1] nxt = nxt_arr
    cdef long key[MAXN]
    cdef long nb, idx, stride, combo, rem
    cdef long ptr = 0
    cdef int j, ok, placed, nc
    cdef int64_t i
    cdef double dd, dx
    nc = 1
    for a in range(n):
        nc *= 3
    with nogil:
        for j in range(p):
            placed = 0
            while ptr < M:
                for a in range(n):
                    key[a] = <long>floor((X[ptr, a] + 0.5) / cell) + 1
                ok = 1
                for combo in range(nc):
                    rem = combo
                    idx = 0
                    stride = 1
                    for a in range(n):
                        nb = key[a] + (rem % 3) - 1
                        rem = rem // 3
                        if nb < 0:
                            nb = 0
                        if nb >= G:
                            nb = G - 1
                        idx += nb * stride
                        stride *= G
                    i = head[idx]
                    while i >= 0:
                        dd = 0.0
                        for a in range(n):
                            dx = X[ptr, a] - Cn[i, a]
                            dd += dx * dx
                        if dd <= 4.0 * R[i] * R[i]:
                            ok = 0
                            break
                        i = nxt[i]
                    if not ok:
                        break
                if ok:
                    for a in range(n):
                        Cn[j, a] = X[ptr, a]
                    idx = 0
                    stride = 1
                    for a in range(n):
                        nb = key[a]
                        if nb < 0:
                            nb = 0
                        if nb >= G:
                            nb = G - 1
                        idx += nb * stride
                        stride *= G
                    nxt[j] = head[idx]
                    head[idx] = j
                    placed = 1
                    ptr += 1
                    break
                ptr += 1
            if not placed:
                ptr = -1
                break
    return centers_arr, int(ptr)


# ---------------------------------------------------------------------------
# segment / line crossing counts
# ---------------------------------------------------------------------------

def segment_line_counts(P0, P1, theta, offs):
    cdef double[:, ::1] a = np.ascontiguousarray(P0, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(P1, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef double[::1] of = np.ascontiguousarray(offs, dtype=np.float64)
    cdef int m = a.shape[0]
    cdef int L = th.shape[0]
    out_arr = np.zeros(L, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef int r, e
    cdef double cs, sn, f0, f1
    cdef int64_t cnt
    with nogil:
        for r in range(L):
            cs = cos(th[r])
            sn = sin(th[r])
            cnt = 0
            for e in range(m):
                f0 = a[e, 0] * cs + a[e, 1] * sn - of[r]
                f1 = b[e, 0] * cs + b[e, 1] * sn - of[r]
                if (f0 > 0) != (f1 > 0):
                    cnt += 1
            out[r] = cnt
    return out_arr
