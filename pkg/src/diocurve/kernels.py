"""Compiled kernels over rows of integer coefficients.

For a row (a1..an) let P(x) = sum a_i f_i(x) + w * lambda(x).  The form with
constant term a0 vanishes where P(x) = -a0, so every question about forms
sharing (a1..an) reduces to level sets of P.  The kernels split the domain
into pieces on which both P and P' are monotone, then solve P = level exactly
on each piece.
"""
from __future__ import annotations

import math

import numba
import numpy as np

POW, SIN, EXP = 0, 1, 2
MAX_BREAKS = 16
NDERIV = 6
HALF_PI = 0.5 * math.pi


@numba.njit(cache=True)
def fill_dc(poly, a, lam_w, dc):
    """Dense coefficients of P and its derivatives (rows of ``dc``) for one row ``a``.

    ``poly[k, i]`` is the x^k coefficient of component i (column n is the shift).
    """
    D = poly.shape[0]
    n = a.shape[0]
    for k in range(D):
        c = poly[k, n] * lam_w
        for i in range(n):
            c += poly[k, i] * a[i]
        dc[0, k] = c
    for d in range(1, dc.shape[0]):
        for k in range(D):
            dc[d, k] = dc[d - 1, k + 1] * (k + 1) if k + 1 < D else 0.0


@numba.njit(cache=True, inline="always")
def peval2(dc, tk, tc, t1, t2, tf, a, lam_w, x, d):
    """(P^(d)(x), P^(d+1)(x)) in one Horner pass plus any sin/exp terms."""
    D = dc.shape[1]
    s = 0.0
    s1 = 0.0
    for k in range(D - 1 - d, -1, -1):
        s1 = s1 * x + s
        s = s * x + dc[d, k]
    n = a.shape[0]
    for j in range(tk.shape[0]):
        f = tf[j]
        w = a[f] if f < n else lam_w
        if w != 0.0:
            c = tc[j] * w
            for i in range(d):
                c *= t1[j]
            if tk[j] == SIN:
                arg = t1[j] * x + t2[j]
                s += c * math.sin(arg + (d & 3) * HALF_PI)
                s1 += c * t1[j] * math.sin(arg + ((d + 1) & 3) * HALF_PI)
            else:
                e = math.exp(t1[j] * x)
                s += c * e
                s1 += c * t1[j] * e
    return s, s1


@numba.njit(cache=True, inline="always")
def peval(dc, tk, tc, t1, t2, tf, a, lam_w, x, d):
    """P^(d)(x)."""
    v, _ = peval2(dc, tk, tc, t1, t2, tf, a, lam_w, x, d)
    return v


@numba.njit(cache=True)
def solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, d, c, lo, hi, flo, guess):
    """x in [lo, hi] with P^(d)(x) = c, given a sign change of P^(d) - c.

    ``flo`` is P^(d)(lo) - c.  Newton steps safeguarded by the bracket.
    """
    if flo == 0.0:
        return lo
    slo = flo > 0.0
    x = guess
    if not (lo < x < hi):
        # start at the end where Newton converges monotonically (Fourier's condition)
        if flo * peval(dc, tk, tc, t1, t2, tf, a, lam_w, lo, d + 2) > 0.0:
            x = lo
        else:
            x = hi
    # rounding noise of P^(d); stepping further only chases noise
    noise = abs(c) + abs(lam_w)
    for i in range(a.shape[0]):
        noise += abs(a[i])
    noise *= 4e-16
    for _ in range(200):
        g, dg = peval2(dc, tk, tc, t1, t2, tf, a, lam_w, x, d)
        g -= c
        if abs(g) <= noise:
            return x
        if (g > 0.0) == slo:
            lo = x
        else:
            hi = x
        xn = x - g / dg if dg != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * max(1.0, abs(x)) or hi - lo <= 4e-16 * max(1.0, abs(lo)):
            return xn
        x = xn
    return x


@numba.njit(cache=True)
def _sgn(v):
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


@numba.njit(cache=True)
def breakpoints(poly, tk, tc, t1, t2, tf, coeffs, lam_w, lo, hi, K, skip_inflection):
    """Per row, sorted interior points splitting [lo, hi] into pieces where P and P' are monotone.

    ``skip_inflection[r]`` certifies that P'' has constant sign on the row.
    Returns (points (m, MAX_BREAKS), counts (m,), overflow flag).
    """
    m = coeffs.shape[0]
    out = np.empty((m, MAX_BREAKS))
    cnt = np.zeros(m, dtype=np.int64)
    overflow = False
    b2 = np.empty(K + 2)
    dc = np.zeros((NDERIV, poly.shape[0]))
    for r in range(m):
        a = coeffs[r]
        fill_dc(poly, a, lam_w, dc)
        nb2 = 0
        b2[0] = lo
        nb2 = 1
        if not skip_inflection[r]:
            # sign changes of P'' between nonzero samples; zero samples are skipped
            step = (hi - lo) / K
            xp = lo
            vp = peval(dc, tk, tc, t1, t2, tf, a, lam_w, xp, 2)
            for i in range(1, K + 1):
                xi = lo + i * step if i < K else hi
                vi = peval(dc, tk, tc, t1, t2, tf, a, lam_w, xi, 2)
                if vi == 0.0:
                    continue
                if vp != 0.0 and _sgn(vp) * _sgn(vi) < 0:
                    b2[nb2] = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 2, 0.0, xp, xi, vp, 0.5 * (xp + xi))
                    nb2 += 1
                xp = xi
                vp = vi
        b2[nb2] = hi
        nb2 += 1
        k = 0
        for i in range(nb2 - 1):
            u = b2[i]
            w = b2[i + 1]
            if i > 0:
                if k >= MAX_BREAKS:
                    overflow = True
                    break
                out[r, k] = u
                k += 1
            pu = peval(dc, tk, tc, t1, t2, tf, a, lam_w, u, 1)
            pw = peval(dc, tk, tc, t1, t2, tf, a, lam_w, w, 1)
            if _sgn(pu) * _sgn(pw) < 0:
                if k >= MAX_BREAKS:
                    overflow = True
                    break
                out[r, k] = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 1, 0.0, u, w, pu, 0.5 * (u + w))
                k += 1
        cnt[r] = k
    return out, cnt, overflow


@numba.njit(cache=True)
def pieces_from_breaks(bp, cnt, lo, hi):
    """Flatten per-row breakpoints into (row, left, right) pieces."""
    m = bp.shape[0]
    total = 0
    for r in range(m):
        total += cnt[r] + 1
    rows = np.empty(total, dtype=np.int64)
    left = np.empty(total)
    right = np.empty(total)
    j = 0
    for r in range(m):
        prev = lo
        for i in range(cnt[r]):
            x = bp[r, i]
            if x > prev:
                rows[j] = r
                left[j] = prev
                right[j] = x
                j += 1
                prev = x
        if hi > prev:
            rows[j] = r
            left[j] = prev
            right[j] = hi
            j += 1
    return rows[:j], left[:j], right[:j]


@numba.njit(cache=True)
def eval_at(poly, tk, tc, t1, t2, tf, coeffs, lam_w, rows, xs, d):
    out = np.empty(xs.shape[0])
    dc = np.zeros((NDERIV, poly.shape[0]))
    last = -1
    for j in range(xs.shape[0]):
        if rows[j] != last:
            last = rows[j]
            fill_dc(poly, coeffs[last], lam_w, dc)
        out[j] = peval(dc, tk, tc, t1, t2, tf, coeffs[rows[j]], lam_w, xs[j], d)
    return out


@numba.njit(cache=True)
def derivative_window(poly, tk, tc, t1, t2, tf, coeffs, lam_w, rows, left, right, dlo, dhi):
    """Restrict each piece to {dlo < |P'| <= dhi}; |P'| is monotone on a piece.

    ``dlo``/``dhi`` are per-piece; use -1 / inf for no bound.  Empty results
    come back with left > right.
    """
    k = rows.shape[0]
    nl = np.empty(k)
    nr = np.empty(k)
    dc = np.zeros((NDERIV, poly.shape[0]))
    last = -1
    for j in range(k):
        a = coeffs[rows[j]]
        if rows[j] != last:
            last = rows[j]
            fill_dc(poly, a, lam_w, dc)
        u = left[j]
        w = right[j]
        du = peval(dc, tk, tc, t1, t2, tf, a, lam_w, u, 1)
        dw = peval(dc, tk, tc, t1, t2, tf, a, lam_w, w, 1)
        s = 1.0 if du + dw >= 0.0 else -1.0
        au = s * du
        aw = s * dw
        lo_b = dlo[j]
        hi_b = dhi[j]
        # |P'| = s P' on the piece; find the sub-interval where lo_b < s P' <= hi_b
        if au <= aw:
            # increasing |P'|
            if aw <= lo_b or au > hi_b:
                nl[j] = 1.0
                nr[j] = 0.0
                continue
            x0 = u
            if au <= lo_b:
                x0 = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 1, s * lo_b, u, w, du - s * lo_b, 0.5 * (u + w))
            x1 = w
            if aw > hi_b:
                x1 = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 1, s * hi_b, u, w, du - s * hi_b, 0.5 * (u + w))
        else:
            if au <= lo_b or aw > hi_b:
                nl[j] = 1.0
                nr[j] = 0.0
                continue
            x0 = u
            if au > hi_b:
                x0 = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 1, s * hi_b, u, w, du - s * hi_b, 0.5 * (u + w))
            x1 = w
            if aw <= lo_b:
                x1 = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 1, s * lo_b, u, w, du - s * lo_b, 0.5 * (u + w))
        nl[j] = x0
        nr[j] = x1
    return nl, nr


@numba.njit(cache=True)
def level_roots(poly, tk, tc, t1, t2, tf, coeffs, lam_w, rows, left, right, pl, pr,
                kfirst, kcount, offsets):
    """Solve P = k for each piece and each of its ``kcount`` consecutive levels."""
    total = offsets[-1]
    xs = np.empty(total)
    ks = np.empty(total, dtype=np.int64)
    rs = np.empty(total, dtype=np.int64)
    dc = np.zeros((NDERIV, poly.shape[0]))
    last = -1
    for j in range(rows.shape[0]):
        nk = kcount[j]
        if nk <= 0:
            continue
        a = coeffs[rows[j]]
        if rows[j] != last:
            last = rows[j]
            fill_dc(poly, a, lam_w, dc)
        u = left[j]
        w = right[j]
        inc = pr[j] >= pl[j]
        base = offsets[j]
        guess = u
        for i in range(nk):
            kk = kfirst[j] + i if inc else kfirst[j] + nk - 1 - i
            c = float(kk)
            x = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 0, c, u, w, pl[j] - c, guess)
            d = peval(dc, tk, tc, t1, t2, tf, a, lam_w, x, 1)
            # the next level is crossed about 1/|P'| further right
            if d != 0.0:
                guess = x + 1.0 / abs(d)
            xs[base + i] = x
            ks[base + i] = kk
            rs[base + i] = rows[j]
    return rs, ks, xs


@numba.njit(cache=True)
def level_bands(poly, tk, tc, t1, t2, tf, coeffs, lam_w, rows, left, right, pl, pr, h,
                kfirst, kcount, offsets):
    """For each piece and level k, the sub-interval where |P - k| < h (per-piece h)."""
    total = offsets[-1]
    xl = np.empty(total)
    xr = np.empty(total)
    ks = np.empty(total, dtype=np.int64)
    rs = np.empty(total, dtype=np.int64)
    dc = np.zeros((NDERIV, poly.shape[0]))
    last = -1
    for j in range(rows.shape[0]):
        nk = kcount[j]
        if nk <= 0:
            continue
        a = coeffs[rows[j]]
        if rows[j] != last:
            last = rows[j]
            fill_dc(poly, a, lam_w, dc)
        u = left[j]
        w = right[j]
        p_u = pl[j]
        p_w = pr[j]
        lo_v = min(p_u, p_w)
        hi_v = max(p_u, p_w)
        inc = p_w >= p_u
        hh = h[j]
        base = offsets[j]
        gx = 0.5 * (u + w)
        for i in range(nk):
            kk = kfirst[j] + i
            c_lo = kk - hh
            c_hi = kk + hh
            # x where P = c_lo and P = c_hi, clipped to the piece; warm started
            if c_lo <= lo_v:
                x_lo = u if inc else w
            else:
                x_lo = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 0, c_lo, u, w, p_u - c_lo, gx)
                gx = x_lo
            if c_hi >= hi_v:
                x_hi = w if inc else u
            else:
                x_hi = solve_level(dc, tk, tc, t1, t2, tf, a, lam_w, 0, c_hi, u, w, p_u - c_hi, gx)
                gx = x_hi
            dg = peval(dc, tk, tc, t1, t2, tf, a, lam_w, gx, 1)
            if dg != 0.0:
                # step to the next level along the monotone piece
                gx = gx + (1.0 - 2.0 * hh) / dg
            xl[base + i] = min(x_lo, x_hi)
            xr[base + i] = max(x_lo, x_hi)
            ks[base + i] = kk
            rs[base + i] = rows[j]
    return rs, ks, xl, xr


@numba.njit(cache=True)
def union_length_sorted(lo, hi, clip_lo, clip_hi):
    """Measure of the union of [lo_i, hi_i] (sorted by lo) clipped to [clip_lo, clip_hi]."""
    total = 0.0
    cur_l = 0.0
    cur_r = -1.0
    started = False
    for i in range(lo.shape[0]):
        a = max(lo[i], clip_lo)
        b = min(hi[i], clip_hi)
        if b <= a:
            continue
        if not started:
            cur_l = a
            cur_r = b
            started = True
        elif a <= cur_r:
            if b > cur_r:
                cur_r = b
        else:
            total += cur_r - cur_l
            cur_l = a
            cur_r = b
    if started:
        total += cur_r - cur_l
    return total


@numba.njit(cache=True)
def ball_union_length(points, r, clip_lo, clip_hi, prev):
    """Measure of the union of [p - r, p + r] over sorted points, clipped.

    ``prev`` is the last point of an earlier batch of smaller points (or -inf),
    so batches can be streamed in order without double counting.
    """
    total = 0.0
    last_end = prev + r
    for i in range(points.shape[0]):
        a = max(points[i] - r, last_end, clip_lo)
        b = min(points[i] + r, clip_hi)
        if b > a:
            total += b - a
        if points[i] + r > last_end:
            last_end = points[i] + r
    return total


@numba.njit(cache=True)
def triangle_min_cross(points):
    """Smallest nonzero |(q - p) x (s - p)|^2 over all triples, its triple, and the noncollinear count."""
    m = points.shape[0]
    best = np.inf
    bi = bj = bk = -1
    n_noncol = 0
    for i in range(m):
        for j in range(i + 1, m):
            ux = points[j, 0] - points[i, 0]
            uy = points[j, 1] - points[i, 1]
            uz = points[j, 2] - points[i, 2]
            for k in range(j + 1, m):
                wx = points[k, 0] - points[i, 0]
                wy = points[k, 1] - points[i, 1]
                wz = points[k, 2] - points[i, 2]
                cx = uy * wz - uz * wy
                cy = uz * wx - ux * wz
                cz = ux * wy - uy * wx
                q = cx * cx + cy * cy + cz * cz
                if q > 0:
                    n_noncol += 1
                    if q < best:
                        best = q
                        bi = i
                        bj = j
                        bk = k
    return best, bi, bj, bk, n_noncol


@numba.njit(cache=True)
def count_range_union(rows, kf, kl):
    """Number of distinct (row, k) pairs covered by ranges [kf, kl]; input sorted by (row, kf)."""
    total = 0
    m = rows.shape[0]
    i = 0
    while i < m:
        r = rows[i]
        a = kf[i]
        b = kl[i]
        i += 1
        while i < m and rows[i] == r:
            if kf[i] <= b + 1:
                if kl[i] > b:
                    b = kl[i]
            else:
                if b >= a:
                    total += b - a + 1
                a = kf[i]
                b = kl[i]
            i += 1
        if b >= a:
            total += b - a + 1
    return total


@numba.njit(cache=True)
def merge_sorted_bands(rs, ks, xl, xr):
    """Merge touching intervals of the same (row, level); input sorted by (row, level, left)."""
    m = rs.shape[0]
    keep = np.zeros(m, dtype=np.bool_)
    out_r = xr.copy()
    if m == 0:
        return keep, out_r
    cur = 0
    keep[0] = True
    for i in range(1, m):
        if rs[i] == rs[cur] and ks[i] == ks[cur] and xl[i] <= out_r[cur]:
            if xr[i] > out_r[cur]:
                out_r[cur] = xr[i]
        else:
            cur = i
            keep[i] = True
    return keep, out_r
