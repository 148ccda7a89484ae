"""Numba backend: per-point scalar loops, parallel over points. Must agree
with numpy_impl up to floating-point association order."""

import math

import numpy as np
from numba import njit, prange

_EXP_CAP = 700.0
_MIN_ESCAPE_ITERS = 8
_DERIV_FLOOR = 1e-250
_NEG_INF = float("-inf")


@njit(cache=True, inline="always")
def _pval(coeffs, lam):
    out = coeffs[len(coeffs) - 1] + 0j
    for j in range(len(coeffs) - 2, -1, -1):
        out = out * lam + coeffs[j]
    return out


@njit(cache=True, inline="always")
def _rows_at(mat, lam, out):
    for k in range(mat.shape[0]):
        out[k] = _pval(mat[k], lam)


@njit(cache=True, inline="always")
def _homeval(c, a, b, deg):
    r = c[deg] + 0j
    bp = 1.0 + 0j
    for k in range(deg - 1, -1, -1):
        bp = bp * b
        r = r * a + c[k] * bp
    return r


@njit(cache=True, inline="always")
def _safe_log(x):
    if x > 0.0:
        return math.log(x)
    return _NEG_INF


@njit(cache=True, parallel=True)
def _potential_kernel(lams, d, pnum, pden, anum, aden, iter_budget, tol,
                      vals, conv, iters):
    tail_factor = d / (d - 1.0)
    for i in prange(lams.size):
        lam = lams[i]
        P = np.empty(d + 1, np.complex128)
        Q = np.empty(d + 1, np.complex128)
        _rows_at(pnum, lam, P)
        _rows_at(pden, lam, Q)
        cmax = 0.0
        for k in range(d + 1):
            ap = abs(P[k])
            aq = abs(Q[k])
            if ap > cmax:
                cmax = ap
            if aq > cmax:
                cmax = aq
        if cmax == 0.0:
            vals[i] = np.nan
            continue
        for k in range(d + 1):
            P[k] /= cmax
            Q[k] /= cmax
        a = _pval(anum, lam)
        b = _pval(aden, lam)
        s0 = max(abs(a), abs(b))
        if s0 == 0.0:
            vals[i] = np.nan
            continue
        g = math.log(s0)
        a /= s0
        b /= s0
        supinc = 0.0
        w = 1.0
        ok = False
        it = 0
        bad = False
        while it < iter_budget:
            it += 1
            w /= d
            f0 = _homeval(P, a, b, d)
            f1 = _homeval(Q, a, b, d)
            s = max(abs(f0), abs(f1))
            if s < 1e-300:
                bad = True
                break
            ls = math.log(s)
            a = f0 / s
            b = f1 / s
            g += w * ls
            als = abs(ls)
            if als > supinc:
                supinc = als
            if it >= _MIN_ESCAPE_ITERS and supinc * w * tail_factor < tol:
                ok = True
                break
        if bad:
            vals[i] = np.nan
            conv[i] = False
            iters[i] = it
            continue
        v = g + math.log(cmax) / (d - 1.0)
        vals[i] = v if v > 0.0 else 0.0
        conv[i] = ok
        iters[i] = it


def potential_points(lams, d, pnum, pden, anum, aden, iter_budget, tol):
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    vals = np.empty(lams.size, np.float64)
    conv = np.zeros(lams.size, np.bool_)
    iters = np.zeros(lams.size, np.int32)
    _potential_kernel(lams, d, pnum, pden, anum, aden, iter_budget, float(tol),
                      vals, conv, iters)
    return vals, conv, iters


@njit(cache=True, inline="always")
def _wronskian(P, Q, d, wr):
    for m in range(2 * d - 1):
        wr[m] = 0.0
    for i in range(d):
        dpi = (i + 1) * P[i + 1]
        dqi = (i + 1) * Q[i + 1]
        for j in range(d + 1):
            if i + j <= 2 * d - 2:
                wr[i + j] += d * (dpi * Q[j] - P[j] * dqi)


@njit(cache=True, inline="always")
def _crit_dist_one(a, b, crit):
    best = np.inf
    zn = math.hypot(abs(a), abs(b))
    for j in range(crit.shape[0]):
        c0 = crit[j, 0]
        c1 = crit[j, 1]
        cn = math.hypot(abs(c0), abs(c1))
        dist = abs(a * c1 - b * c0) / (zn * cn)
        if dist < best:
            best = dist
    return best


@njit(cache=True, inline="always")
def _forward_step(P, Q, Pd, Qd, d, a, b, da, db, dlog, ap, bp):
    """Returns (f0, f1, s, a2, b2, da2, db2, dlog2)."""
    ap[0] = 1.0 + 0j
    bp[0] = 1.0 + 0j
    for i in range(1, d + 1):
        ap[i] = ap[i - 1] * a
        bp[i] = bp[i - 1] * b
    f0 = 0.0 + 0j
    f1 = 0.0 + 0j
    lin0 = 0.0 + 0j
    lin1 = 0.0 + 0j
    inh0 = 0.0 + 0j
    inh1 = 0.0 + 0j
    for k in range(d + 1):
        mono = ap[k] * bp[d - k]
        f0 += P[k] * mono
        f1 += Q[k] * mono
        inh0 += Pd[k] * mono
        inh1 += Qd[k] * mono
        dmono = 0.0 + 0j
        if k >= 1:
            dmono += k * ap[k - 1] * bp[d - k] * da
        if d - k >= 1:
            dmono += (d - k) * ap[k] * bp[d - k - 1] * db
        lin0 += P[k] * dmono
        lin1 += Q[k] * dmono
    if dlog == _NEG_INF:
        piv = 0.0
        g0 = inh0
        g1 = inh1
    else:
        piv = dlog if dlog > 0.0 else 0.0
        e_lin = math.exp(min(dlog - piv, 0.0))
        e_inh = math.exp(-piv) if piv < _EXP_CAP else 0.0
        g0 = e_lin * lin0 + e_inh * inh0
        g1 = e_lin * lin1 + e_inh * inh1
    s = max(abs(f0), abs(f1))
    if s == 0.0:
        return f0, f1, 0.0, np.nan + 0j, np.nan + 0j, 0j, 0j, _NEG_INF
    a2 = f0 / s
    b2 = f1 / s
    # drop the radial gauge component (cross-term invariant, see numpy_impl)
    nm = abs(a2) ** 2 + abs(b2) ** 2
    ip = (g0 * a2.conjugate() + g1 * b2.conjugate()) / nm
    g0 = g0 - ip * a2
    g1 = g1 - ip * b2
    sd = max(abs(g0), abs(g1))
    if sd < _DERIV_FLOOR:
        return f0, f1, s, a2, b2, 0j, 0j, _NEG_INF
    return f0, f1, s, a2, b2, g0 / sd, g1 / sd, piv + math.log(sd) - math.log(s)


@njit(cache=True, parallel=True)
def _orbit_kernel(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
                  n_max, checks, crit, dyn, par, min_cd, hit):
    for i in prange(lams.size):
        lam = lams[i]
        P = np.empty(d + 1, np.complex128)
        Q = np.empty(d + 1, np.complex128)
        Pd = np.empty(d + 1, np.complex128)
        Qd = np.empty(d + 1, np.complex128)
        _rows_at(pnum, lam, P)
        _rows_at(pden, lam, Q)
        _rows_at(pdnum, lam, Pd)
        _rows_at(pdden, lam, Qd)
        wr = np.empty(2 * d - 1, np.complex128)
        _wronskian(P, Q, d, wr)
        ap = np.empty(d + 1, np.complex128)
        bp = np.empty(d + 1, np.complex128)

        a = _pval(anum, lam)
        b = _pval(aden, lam)
        s0 = max(abs(a), abs(b))
        if s0 == 0.0:
            min_cd[i] = np.nan
            continue
        a /= s0
        b /= s0
        da = _pval(danum, lam) / s0
        db = _pval(daden, lam) / s0
        sd = max(abs(da), abs(db))
        if sd == 0.0:
            da = 0j
            db = 0j
            dlog = _NEG_INF
        else:
            da /= sd
            db /= sd
            dlog = math.log(sd)

        best = _crit_dist_one(a, b, crit[i])
        hh = 0 if best < 1e-12 else -1
        logsph = 0.0
        ci = 0
        for m in range(1, n_max + 1):
            wtop = abs(_homeval(wr, a, b, 2 * d - 2))
            zsq = abs(a) ** 2 + abs(b) ** 2
            f0, f1, s, a, b, da, db, dlog = _forward_step(
                P, Q, Pd, Qd, d, a, b, da, db, dlog, ap, bp)
            if s == 0.0:
                break
            fsq = abs(f0) ** 2 + abs(f1) ** 2
            logsph += math.log(zsq) + _safe_log(wtop) - math.log(d) \
                - math.log(fsq)
            cd = _crit_dist_one(a, b, crit[i])
            if cd < best:
                best = cd
            if cd < 1e-12 and hh < 0:
                hh = m
            if ci < len(checks) and m == checks[ci]:
                dyn[i, ci] = logsph / m
                cross = abs(da * b - a * db)
                zsq2 = abs(a) ** 2 + abs(b) ** 2
                if dlog == _NEG_INF or cross == 0.0:
                    par[i, ci] = _NEG_INF
                else:
                    par[i, ci] = (dlog + math.log(cross) - math.log(zsq2)) / m
                ci += 1
        min_cd[i] = best
        hit[i] = hh


def orbit_batch(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
                n_max, checks, crit):
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    checks = np.ascontiguousarray(checks, dtype=np.int64)
    crit = np.ascontiguousarray(crit, dtype=np.complex128)
    n = lams.size
    dyn = np.full((n, checks.size), np.nan)
    par = np.full((n, checks.size), np.nan)
    min_cd = np.full(n, np.inf)
    hit = np.full(n, -1, np.int32)
    _orbit_kernel(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
                  n_max, checks, crit, dyn, par, min_cd, hit)
    return dyn, par, min_cd, hit


@njit(cache=True, parallel=True)
def _hn_kernel(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
               n, A, B, dA, dB, dlogs):
    for i in prange(lams.size):
        lam = lams[i]
        P = np.empty(d + 1, np.complex128)
        Q = np.empty(d + 1, np.complex128)
        Pd = np.empty(d + 1, np.complex128)
        Qd = np.empty(d + 1, np.complex128)
        _rows_at(pnum, lam, P)
        _rows_at(pden, lam, Q)
        _rows_at(pdnum, lam, Pd)
        _rows_at(pdden, lam, Qd)
        ap = np.empty(d + 1, np.complex128)
        bp = np.empty(d + 1, np.complex128)
        a = _pval(anum, lam)
        b = _pval(aden, lam)
        s0 = max(abs(a), abs(b))
        if s0 == 0.0:
            A[i] = np.nan
            continue
        a /= s0
        b /= s0
        da = _pval(danum, lam) / s0
        db = _pval(daden, lam) / s0
        sd = max(abs(da), abs(db))
        if sd == 0.0:
            da = 0j
            db = 0j
            dlog = _NEG_INF
        else:
            da /= sd
            db /= sd
            dlog = math.log(sd)
        for _ in range(n):
            _, _, s, a, b, da, db, dlog = _forward_step(
                P, Q, Pd, Qd, d, a, b, da, db, dlog, ap, bp)
            if s == 0.0:
                break
        A[i] = a
        B[i] = b
        dA[i] = da
        dB[i] = db
        dlogs[i] = dlog


def hn_forward(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden, n):
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    m = lams.size
    A = np.empty(m, np.complex128)
    B = np.empty(m, np.complex128)
    dA = np.empty(m, np.complex128)
    dB = np.empty(m, np.complex128)
    dlogs = np.empty(m, np.float64)
    _hn_kernel(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
               int(n), A, B, dA, dB, dlogs)
    return A, B, dA, dB, dlogs
