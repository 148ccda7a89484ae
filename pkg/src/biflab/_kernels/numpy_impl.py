"""Pure-numpy kernel backend. Vectorized over points/samples; semantics are
the contract for the compiled twin in numba_impl."""

import numpy as np

_EXP_CAP = 700.0
_MIN_ESCAPE_ITERS = 8
_DERIV_FLOOR = 1e-250


def _rows_at(mat, lam):
    """Horner evaluation of each coefficient row at every lam: (rows, N)."""
    out = np.zeros((mat.shape[0], lam.size), dtype=np.complex128)
    for j in range(mat.shape[1] - 1, -1, -1):
        out *= lam
        out += mat[:, j][:, None]
    return out


def _pval(coeffs, lam):
    out = np.zeros_like(lam, dtype=np.complex128)
    for c in coeffs[::-1]:
        out = out * lam + c
    return out


def _homeval_rows(C, a, b, deg):
    """sum_k C[k] a^k b^(deg-k) for stacked per-point coefficients C: (deg+1, N)."""
    r = C[deg].copy()
    bp = np.ones_like(b)
    for k in range(deg - 1, -1, -1):
        bp = bp * b
        r = r * a + C[k] * bp
    return r


def potential_points(lams, d, pnum, pden, anum, aden, iter_budget, tol):
    """Escape-rate potential of the marked lift at each parameter.

    Returns (values, converged, iterations). Values are clamped at 0; cells
    whose lift collapses to the common root are NaN.
    """
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    n = lams.size
    P = _rows_at(pnum, lams)
    Q = _rows_at(pden, lams)
    cmax = np.maximum(np.abs(P).max(axis=0), np.abs(Q).max(axis=0))
    bad = cmax == 0.0
    safe = np.where(bad, 1.0, cmax)
    P /= safe
    Q /= safe

    A = _pval(anum, lams)
    B = _pval(aden, lams)
    s0 = np.maximum(np.abs(A), np.abs(B))
    bad |= s0 == 0.0
    s0s = np.where(s0 == 0.0, 1.0, s0)
    with np.errstate(divide="ignore"):
        g = np.log(s0s)
    A /= s0s
    B /= s0s

    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=np.int32)
    supinc = np.zeros(n, dtype=np.float64)
    active = ~bad
    w = 1.0
    tail_factor = d / (d - 1.0)
    for it in range(1, iter_budget + 1):
        if not active.any():
            break
        w /= d
        idx = np.nonzero(active)[0]
        a, b = A[idx], B[idx]
        f0 = _homeval_rows(P[:, idx], a, b, d)
        f1 = _homeval_rows(Q[:, idx], a, b, d)
        s = np.maximum(np.abs(f0), np.abs(f1))
        dead = s < 1e-300
        if dead.any():
            bad[idx[dead]] = True
            active[idx[dead]] = False
            keep = ~dead
            idx, f0, f1, s = idx[keep], f0[keep], f1[keep], s[keep]
            if idx.size == 0:
                continue
        ls = np.log(s)
        A[idx] = f0 / s
        B[idx] = f1 / s
        g[idx] += w * ls
        supinc[idx] = np.maximum(supinc[idx], np.abs(ls))
        iters[idx] = it
        if it >= _MIN_ESCAPE_ITERS:
            done = supinc[idx] * w * tail_factor < tol
            if done.any():
                conv[idx[done]] = True
                active[idx[done]] = False

    with np.errstate(divide="ignore"):
        corr = np.where(bad, 0.0, np.log(safe) / (d - 1.0))
    vals = np.maximum(g + corr, 0.0)
    vals[bad] = np.nan
    conv[bad] = False
    return vals, conv, iters


def _wronskian_rows(P, Q, d):
    """Affine Wronskian d*(P'Q - PQ') per point: (2d-1, N)."""
    n = P.shape[1]
    wr = np.zeros((2 * d - 1, n), dtype=np.complex128)
    for i in range(d):
        dpi = (i + 1) * P[i + 1]
        dqi = (i + 1) * Q[i + 1]
        for j in range(d + 1):
            if i + j <= 2 * d - 2:
                wr[i + j] += d * (dpi * Q[j] - P[j] * dqi)
    return wr


def _derivative_step(P, Q, Pd, Qd, d, a, b, da, db, dlog):
    """One forward-mode step: returns unnormalized (f0, f1, g0, g1, pivot)."""
    lin0 = np.zeros_like(a)
    lin1 = np.zeros_like(a)
    inh0 = np.zeros_like(a)
    inh1 = np.zeros_like(a)
    ap = np.ones_like(a)
    apow = [ap]
    bpow = [np.ones_like(b)]
    for _ in range(d):
        apow.append(apow[-1] * a)
        bpow.append(bpow[-1] * b)
    f0 = np.zeros_like(a)
    f1 = np.zeros_like(a)
    for k in range(d + 1):
        mono = apow[k] * bpow[d - k]
        f0 += P[k] * mono
        f1 += Q[k] * mono
        inh0 += Pd[k] * mono
        inh1 += Qd[k] * mono
        dmono = np.zeros_like(a)
        if k >= 1:
            dmono += k * apow[k - 1] * bpow[d - k] * da
        if d - k >= 1:
            dmono += (d - k) * apow[k] * bpow[d - k - 1] * db
        lin0 += P[k] * dmono
        lin1 += Q[k] * dmono
    piv = np.maximum(dlog, 0.0)
    zeroed = dlog == -np.inf
    piv = np.where(zeroed, 0.0, piv)
    with np.errstate(over="ignore"):
        e_lin = np.where(zeroed, 0.0, np.exp(np.minimum(dlog - piv, 0.0)))
        e_inh = np.where(piv < _EXP_CAP, np.exp(-piv), 0.0)
    g0 = e_lin * lin0 + e_inh * inh0
    g1 = e_lin * lin1 + e_inh * inh1
    return f0, f1, g0, g1, piv


def _init_state(lams, pnum, pden, pdnum, pdden, anum, aden, danum, daden):
    P = _rows_at(pnum, lams)
    Q = _rows_at(pden, lams)
    Pd = _rows_at(pdnum, lams)
    Qd = _rows_at(pdden, lams)
    A = _pval(anum, lams)
    B = _pval(aden, lams)
    s = np.maximum(np.abs(A), np.abs(B))
    s = np.where(s == 0.0, np.nan, s)
    A /= s
    B /= s
    da = _pval(danum, lams) / s
    db = _pval(daden, lams) / s
    sd = np.maximum(np.abs(da), np.abs(db))
    zero = sd == 0.0
    sds = np.where(zero, 1.0, sd)
    dA = da / sds
    dB = db / sds
    with np.errstate(divide="ignore"):
        dlog = np.where(zero, -np.inf, np.log(sds))
    return P, Q, Pd, Qd, A, B, dA, dB, dlog


def _advance(P, Q, Pd, Qd, d, A, B, dA, dB, dlog):
    f0, f1, g0, g1, piv = _derivative_step(P, Q, Pd, Qd, d, A, B, dA, dB, dlog)
    s = np.maximum(np.abs(f0), np.abs(f1))
    s = np.where(s == 0.0, np.nan, s)
    A2, B2 = f0 / s, f1 / s
    # remove the radial (gauge) component: by Euler's relation it propagates
    # radially, so the cross term dA*B - A*dB is invariant, while leaving it
    # in would swamp the projective signal at rate degree^n
    nm = np.abs(A2) ** 2 + np.abs(B2) ** 2
    ip = (g0 * np.conj(A2) + g1 * np.conj(B2)) / nm
    g0 = g0 - ip * A2
    g1 = g1 - ip * B2
    sd = np.maximum(np.abs(g0), np.abs(g1))
    zero = sd < _DERIV_FLOOR
    sds = np.where(zero, 1.0, sd)
    dA2, dB2 = g0 / sds, g1 / sds
    dA2 = np.where(zero, 0.0, dA2)
    dB2 = np.where(zero, 0.0, dB2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog2 = np.where(zero, -np.inf, piv + np.log(sds) - np.log(s))
    return f0, f1, s, A2, B2, dA2, dB2, dlog2


def orbit_batch(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
                n_max, checks, crit):
    """Dynamical/parametric exponent checkpoints for a batch of parameters.

    crit: (N, M, 2) homogeneous critical points per sample (M may be 0).
    Returns (dyn, par, min_crit_dist, hit_step) with dyn/par sampled at the
    iterate counts in checks.
    """
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    n = lams.size
    k = len(checks)
    dyn = np.full((n, k), np.nan)
    par = np.full((n, k), np.nan)
    P, Q, Pd, Qd, A, B, dA, dB, dlog = _init_state(
        lams, pnum, pden, pdnum, pdden, anum, aden, danum, daden)
    wr = _wronskian_rows(P, Q, d)

    hit = np.full(n, -1, dtype=np.int32)
    min_cd = _crit_dist(A, B, crit)
    _flag_hits(min_cd, hit, 0)
    logsph = np.zeros(n)
    ci = 0
    for m in range(1, n_max + 1):
        wtop = _homeval_rows(wr, A, B, 2 * d - 2)
        zsq = np.abs(A) ** 2 + np.abs(B) ** 2
        f0, f1, s, A, B, dA, dB, dlog = _advance(P, Q, Pd, Qd, d,
                                                 A, B, dA, dB, dlog)
        fsq = np.abs(f0) ** 2 + np.abs(f1) ** 2
        with np.errstate(divide="ignore"):
            step = np.log(zsq) + np.log(np.abs(wtop)) - np.log(d) - np.log(fsq)
        logsph += step
        cd = _crit_dist(A, B, crit)
        newmin = cd < min_cd
        min_cd = np.where(newmin, cd, min_cd)
        fresh = (cd < 1e-12) & (hit < 0)
        hit[fresh] = m
        if ci < k and m == checks[ci]:
            dyn[:, ci] = logsph / m
            cross = np.abs(dA * B - A * dB)
            zsq2 = np.abs(A) ** 2 + np.abs(B) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                par[:, ci] = (dlog + np.log(cross) - np.log(zsq2)) / m
            ci += 1
    return dyn, par, min_cd, hit


def _crit_dist(A, B, crit):
    if crit.shape[1] == 0:
        return np.full(A.shape, np.inf)
    c0 = crit[:, :, 0]
    c1 = crit[:, :, 1]
    num = np.abs(A[:, None] * c1 - B[:, None] * c0)
    den = np.hypot(np.abs(A), np.abs(B))[:, None] * \
        np.hypot(np.abs(c0), np.abs(c1))
    return (num / den).min(axis=1)


def _flag_hits(cd, hit, step):
    fresh = (cd < 1e-12) & (hit < 0)
    hit[fresh] = step


def hn_forward(lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden, n):
    """n-step marked-orbit lift with forward-mode derivative at each parameter.

    Returns (A, B, dA, dB, dlog): h_n = A/B and the derivative lift
    exp(dlog)*(dA, dB). The Wronskian cross term dA*B - A*dB tracks the
    holomorphic derivative up to a positive factor, so its winding counts
    ramification points.
    """
    lams = np.ascontiguousarray(lams, dtype=np.complex128).ravel()
    P, Q, Pd, Qd, A, B, dA, dB, dlog = _init_state(
        lams, pnum, pden, pdnum, pdden, anum, aden, danum, daden)
    for _ in range(n):
        _, _, _, A, B, dA, dB, dlog = _advance(P, Q, Pd, Qd, d,
                                               A, B, dA, dB, dlog)
    return A, B, dA, dB, dlog
