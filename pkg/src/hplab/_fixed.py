"""Scaled-integer fixed-point kernels for the two hot loops.

Dense elimination on moment matrices and simultaneous root iteration
dominate the runtime of an n-sweep.  Pure mpmath arithmetic costs about
14 microseconds per multiply-add at 3840 bits; gmpy2 integers do the
same work in under 2.  These kernels therefore run on Python ints
(gmpy2 mpz under the hood) holding values scaled by 2^S, with S equal
to the working precision in bits.  mpmath owns every API boundary:
callers convert in, kernels stay private, results convert back out.

Error model: one fixed-point multiply-shift introduces an absolute
error below 2^-S relative to the row scale.  Rows are equilibrated by
powers of two on entry (exact, nullspace-preserving), so the absolute
model matches the usual floating elimination analysis.  Correctness is
never argued from this model alone; callers re-verify solutions with
independent residual certificates in mpmath.
"""

from __future__ import annotations

import math

from mpmath import mp
from mpmath.libmp import from_man_exp, to_fixed

_GOLDEN_ANGLE = 2.399963229728653  # radians, breaks root symmetry in EA


# ---------------------------------------------------------------------------
# conversions

def mpf_to_fx(x, S):
    return to_fixed(x._mpf_, S)


def fx_to_mpf(v, S):
    return mp.make_mpf(from_man_exp(int(v), -S))


def fx_to_mpc(vr, vi, S):
    return mp.make_mpc((from_man_exp(int(vr), -S), from_man_exp(int(vi), -S)))


def magnitude_exponent(values):
    """Largest mp.mag over the values, or None if all are zero."""
    best = None
    for x in values:
        if x:
            m = mp.mag(x)
            if best is None or m > best:
                best = m
    return best


def _equilibrate_real(rows_mp, S):
    """Convert mpf rows to scaled ints, shifting each row to unit scale.

    Row scaling by powers of two is exact and leaves the nullspace and
    the solution of an augmented system unchanged.
    """
    out = []
    for row in rows_mp:
        e = magnitude_exponent(row)
        shift = 0 if e is None else e
        out.append([to_fixed(x._mpf_, S - shift) for x in row])
    return out


def _equilibrate_complex(rows_mp, S):
    out_r, out_i = [], []
    for row in rows_mp:
        mags = []
        for x in row:
            re, im = x.real, x.imag
            if re:
                mags.append(mp.mag(re))
            if im:
                mags.append(mp.mag(im))
        shift = max(mags) if mags else 0
        out_r.append([to_fixed(x.real._mpf_, S - shift) for x in row])
        out_i.append([to_fixed(x.imag._mpf_, S - shift) for x in row])
    return out_r, out_i


# ---------------------------------------------------------------------------
# real elimination

def _eliminate_real(rows, ncols, S, tol_bits):
    """Full-pivot forward elimination, in place.

    Returns (rank, col_perm) where col_perm[k] is the original index of
    the column currently sitting at position k.  After return, rows[i]
    for i < rank is the i-th pivot row with pivot at position i and
    zeros at positions < i; rows below rank are numerically zero.
    """
    nrows = len(rows)
    tol = 1 << (S - tol_bits) if S > tol_bits else 1
    col_perm = list(range(ncols))
    rank = 0
    for step in range(min(nrows, ncols)):
        best = tol
        bi = bj = -1
        for i in range(step, nrows):
            ri = rows[i]
            for j in range(step, ncols):
                a = abs(ri[j])
                if a > best:
                    best, bi, bj = a, i, j
        if bi < 0:
            break
        if bi != step:
            rows[step], rows[bi] = rows[bi], rows[step]
        if bj != step:
            for r in rows:
                r[step], r[bj] = r[bj], r[step]
            col_perm[step], col_perm[bj] = col_perm[bj], col_perm[step]
        prow = rows[step]
        pval = prow[step]
        tail = prow[step + 1:]
        for i in range(step + 1, nrows):
            ri = rows[i]
            a = ri[step]
            if not a:
                continue
            f = (a << S) // pval
            ri[step] = 0
            if not f:
                continue
            ri[step + 1:] = [x - ((f * y) >> S)
                             for x, y in zip(ri[step + 1:], tail)]
        rank = step + 1
    return rank, col_perm


def nullspace_real(rows_mp, S, tol_bits):
    """One deterministic nullspace vector of a real mpf matrix.

    rows_mp: list of equal-length mpf rows.  Returns (vector of mpf,
    nullspace_dim, rank).  The vector sets the free column of smallest
    original index to 1 and every other free column to 0.  Raises
    ValueError when the matrix has full column rank.
    """
    ncols = len(rows_mp[0])
    rows = _equilibrate_real(rows_mp, S)
    rank, col_perm = _eliminate_real(rows, ncols, S, tol_bits)
    ndim = ncols - rank
    if ndim <= 0:
        raise ValueError("matrix has full column rank, no nullspace")
    free_positions = range(rank, ncols)
    pf = min(free_positions, key=lambda p: col_perm[p])
    x = [0] * ncols
    x[pf] = 1 << S
    for i in range(rank - 1, -1, -1):
        ri = rows[i]
        acc = ri[pf] * x[pf]
        for j in range(i + 1, rank):
            if x[j]:
                acc += ri[j] * x[j]
        acc >>= S
        x[i] = -((acc << S) // ri[i])
    out = [mp.zero] * ncols
    for pos in range(ncols):
        out[col_perm[pos]] = fx_to_mpf(x[pos], S)
    return out, ndim, rank


def solve_real(rows_mp, rhs_mp, S, tol_bits):
    """Solve a square real system by full-pivot elimination.

    Raises ValueError on rank deficiency at the working tolerance.
    """
    n = len(rows_mp)
    aug = [list(row) + [b] for row, b in zip(rows_mp, rhs_mp)]
    rows = _equilibrate_real(aug, S)
    rank, col_perm = _eliminate_real(rows, n, S, tol_bits)
    if rank < n:
        raise ValueError(f"system rank {rank} < {n} at working tolerance")
    x = [0] * n
    for i in range(n - 1, -1, -1):
        ri = rows[i]
        acc = ri[n] << S
        for j in range(i + 1, n):
            acc -= ri[j] * x[j]
        x[i] = (acc // ri[i])
    out = [mp.zero] * n
    for pos in range(n):
        out[col_perm[pos]] = fx_to_mpf(x[pos], S)
    return out


# ---------------------------------------------------------------------------
# complex elimination

def _cdiv(ar, ai, br, bi, S):
    den = (br * br + bi * bi) >> S
    if not den:
        den = 1
    nr = (ar * br + ai * bi) >> S
    ni = (ai * br - ar * bi) >> S
    return (nr << S) // den, (ni << S) // den


def nullspace_complex(rows_mp, S, tol_bits):
    """Complex analogue of nullspace_real; rows are mpc sequences."""
    ncols = len(rows_mp[0])
    nrows = len(rows_mp)
    R, I = _equilibrate_complex(rows_mp, S)
    tol = 1 << (S - tol_bits) if S > tol_bits else 1
    col_perm = list(range(ncols))
    rank = 0
    for step in range(min(nrows, ncols)):
        best = tol
        bi = bj = -1
        for i in range(step, nrows):
            ri, ii = R[i], I[i]
            for j in range(step, ncols):
                a = abs(ri[j]) + abs(ii[j])
                if a > best:
                    best, bi, bj = a, i, j
        if bi < 0:
            break
        if bi != step:
            R[step], R[bi] = R[bi], R[step]
            I[step], I[bi] = I[bi], I[step]
        if bj != step:
            for r in R:
                r[step], r[bj] = r[bj], r[step]
            for r in I:
                r[step], r[bj] = r[bj], r[step]
            col_perm[step], col_perm[bj] = col_perm[bj], col_perm[step]
        pr, pi = R[step], I[step]
        pvr, pvi = pr[step], pi[step]
        tr = pr[step + 1:]
        ti = pi[step + 1:]
        for i in range(step + 1, nrows):
            ri, ii = R[i], I[i]
            ar, ai_ = ri[step], ii[step]
            if not ar and not ai_:
                continue
            fr, fi = _cdiv(ar, ai_, pvr, pvi, S)
            ri[step] = 0
            ii[step] = 0
            if not fr and not fi:
                continue
            ri[step + 1:] = [x - ((fr * yr - fi * yi) >> S)
                             for x, yr, yi in zip(ri[step + 1:], tr, ti)]
            ii[step + 1:] = [x - ((fr * yi + fi * yr) >> S)
                             for x, yi, yr in zip(ii[step + 1:], ti, tr)]
        rank = step + 1
    ndim = ncols - rank
    if ndim <= 0:
        raise ValueError("matrix has full column rank, no nullspace")
    pf = min(range(rank, ncols), key=lambda p: col_perm[p])
    xr = [0] * ncols
    xi = [0] * ncols
    xr[pf] = 1 << S
    for i in range(rank - 1, -1, -1):
        ri, ii = R[i], I[i]
        accr = ri[pf] * xr[pf] - ii[pf] * xi[pf]
        acci = ri[pf] * xi[pf] + ii[pf] * xr[pf]
        for j in range(i + 1, rank):
            if xr[j] or xi[j]:
                accr += ri[j] * xr[j] - ii[j] * xi[j]
                acci += ri[j] * xi[j] + ii[j] * xr[j]
        accr >>= S
        acci >>= S
        qr, qi = _cdiv(accr, acci, ri[i], ii[i], S)
        xr[i], xi[i] = -qr, -qi
    out = [mp.zero] * ncols
    for pos in range(ncols):
        out[col_perm[pos]] = fx_to_mpc(xr[pos], xi[pos], S)
    return out, ndim, rank


# ---------------------------------------------------------------------------
# Ehrlich-Aberth simultaneous root iteration

def _fujiwara_log2(coeffs_bits, d):
    """log2 of the Fujiwara root bound from coefficient bit lengths."""
    lead = coeffs_bits[d]
    best = -(1 << 20)
    for j in range(d):
        if coeffs_bits[j] is None:
            continue
        t = (coeffs_bits[j] - lead) / (d - j)
        if t > best:
            best = t
    return best + 1.0


def ea_roots(cr, ci, S, stop_bits, max_sweeps):
    """All roots of a degree-d polynomial, coefficients scaled by 2^S.

    cr, ci: ascending real/imag coefficient integers; the leading
    coefficient must be numerically nonzero.  Jacobi-style Ehrlich-
    Aberth sweeps from three concentric circles at radii (0.5, 1, 2)
    times the Fujiwara bound with golden-angle spacing.  Stops when the
    largest update drops below 2^(S - stop_bits) or when updates
    stagnate near the fixed-point noise floor.

    Returns (roots as (re, im) int pairs, converged flag, sweeps used).
    """
    d = len(cr) - 1
    real_coeffs = not any(ci)
    if d == 1:
        qr, qi = _cdiv(-cr[0], -ci[0], cr[1], ci[1], S)
        return [(qr, qi)], True, 0

    bits = [None if (not cr[j] and not ci[j])
            else max(cr[j].bit_length(), ci[j].bit_length())
            for j in range(d + 1)]
    blog = _fujiwara_log2(bits, d)
    radius = 2.0 ** min(max(blog, -8.0), 64.0)

    zr, zi = [], []
    for i in range(d):
        r = radius * (0.5, 1.0, 2.0)[i % 3]
        th = _GOLDEN_ANGLE * i + 0.37
        zr.append(int(r * math.cos(th) * (1 << 16)) << (S - 16))
        zi.append(int(r * math.sin(th) * (1 << 16)) << (S - 16))

    dr = [cr[k] * k for k in range(1, d + 1)]
    di = [ci[k] * k for k in range(1, d + 1)]
    stop = 1 << (S - stop_bits) if S > stop_bits else 1
    floor_gate = 1 << (S - max((3 * stop_bits) // 4, 8))
    history = []
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        # pairwise inverse sums for the deflation term
        sr = [0] * d
        si = [0] * d
        for i in range(d):
            zri, zii = zr[i], zi[i]
            for j in range(i + 1, d):
                ur, ui = zri - zr[j], zii - zi[j]
                if not ur and not ui:
                    continue
                ivr, ivi = _cdiv(1 << S, 0, ur, ui, S)
                sr[i] += ivr
                si[i] += ivi
                sr[j] -= ivr
                si[j] -= ivi
        maxupd = 0
        nzr, nzi = [], []
        one = 1 << S
        for i in range(d):
            x, y = zr[i], zi[i]
            if real_coeffs:
                pr = cr[d]
                pi_ = 0
                for k in range(d - 1, -1, -1):
                    pr, pi_ = ((x * pr - y * pi_) >> S) + cr[k], (x * pi_ + y * pr) >> S
                qr_ = dr[d - 1]
                qi_ = 0
                for k in range(d - 2, -1, -1):
                    qr_, qi_ = ((x * qr_ - y * qi_) >> S) + dr[k], (x * qi_ + y * qr_) >> S
            else:
                pr, pi_ = cr[d], ci[d]
                for k in range(d - 1, -1, -1):
                    pr, pi_ = ((x * pr - y * pi_) >> S) + cr[k], ((x * pi_ + y * pr) >> S) + ci[k]
                qr_, qi_ = dr[d - 1], di[d - 1]
                for k in range(d - 2, -1, -1):
                    qr_, qi_ = ((x * qr_ - y * qi_) >> S) + dr[k], ((x * qi_ + y * qr_) >> S) + di[k]
            if not pr and not pi_:
                nzr.append(x)
                nzi.append(y)
                continue
            if not qr_ and not qi_:
                qr_ = 1
            nwr, nwi = _cdiv(pr, pi_, qr_, qi_, S)         # Newton step p/p'
            tr_ = one - ((nwr * sr[i] - nwi * si[i]) >> S)  # 1 - N*S
            ti_ = -((nwr * si[i] + nwi * sr[i]) >> S)
            if not tr_ and not ti_:
                tr_ = 1
            wr, wi = _cdiv(nwr, nwi, tr_, ti_, S)
            upd = abs(wr) + abs(wi)
            if upd > maxupd:
                maxupd = upd
            nzr.append(x - wr)
            nzi.append(y - wi)
        zr, zi = nzr, nzi
        if maxupd < stop:
            converged = True
            break
        history.append(maxupd)
        if len(history) >= 16 and maxupd < floor_gate:
            recent = min(history[-8:])
            earlier = min(history[:-8])
            if 2 * recent >= earlier:
                # stagnating at the noise floor; certification decides
                converged = True
                break
    return list(zip(zr, zi)), converged, sweep
