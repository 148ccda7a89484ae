"""One-parameter families of rational maps with a marked point.

A family stores, for every z-power, the coefficient as a polynomial in the
parameter lambda (ascending coefficient rows), plus a marked point given as a
pair of lambda-polynomials (numerator, denominator). Orbits of the marked
point are iterated in sup-normalized homogeneous coordinates; the derivative
with respect to lambda rides along in forward mode with its own magnitude
scale, so exponents up to a few thousand iterates never overflow.
"""

import numpy as np

from .core import (ProjectivePoint, RationalMap, chordal_distance,
                   homogeneous_eval, sylvester_resultant, RESULTANT_RTOL)
from .errors import CriticalHit, DegenerateParameter

#: chordal distance below which an orbit point counts as a critical hit
CRIT_HIT_TOL = 1e-12

#: exp() argument guard for mixed-scale additions
_EXP_CAP = 700.0

#: derivative-pair scale below which the transverse derivative is recorded as
#: zero (cancellation noise / denormal territory)
_DERIV_FLOOR = 1e-250


def _pad_rows(rows):
    width = max(len(r) for r in rows)
    out = np.zeros((len(rows), width), dtype=np.complex128)
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


def _polyder_rows(mat):
    if mat.shape[1] <= 1:
        return np.zeros((mat.shape[0], 1), dtype=np.complex128)
    k = np.arange(1, mat.shape[1])
    return mat[:, 1:] * k


def _polyval_rows(mat, lam):
    """Evaluate each coefficient row at lam (scalar or array)."""
    lam = np.asarray(lam)
    out = np.zeros(mat.shape[:1] + lam.shape, dtype=np.complex128)
    for j in range(mat.shape[1] - 1, -1, -1):
        out = out * lam + mat[:, j][(...,) + (None,) * lam.ndim]
    return out


class Family:
    """Algebraic family f_lambda of fixed degree with marked point a(lambda)."""

    def __init__(self, degree, num_rows, den_rows, a_num, a_den, name="custom"):
        if degree < 2:
            raise ValueError("family degree must be >= 2")
        if len(num_rows) != degree + 1 or len(den_rows) != degree + 1:
            raise ValueError("need degree+1 coefficient polynomials per side")
        self.degree = int(degree)
        self.name = name
        both = _pad_rows(list(num_rows) + list(den_rows))
        self.num = both[: degree + 1].copy()
        self.den = both[degree + 1 :].copy()
        self.dnum = _polyder_rows(self.num)
        self.dden = _polyder_rows(self.den)
        a_num = np.atleast_1d(np.asarray(a_num, dtype=np.complex128))
        a_den = np.atleast_1d(np.asarray(a_den, dtype=np.complex128))
        width = max(a_num.size, a_den.size)
        self.a_num = np.zeros(width, dtype=np.complex128)
        self.a_den = np.zeros(width, dtype=np.complex128)
        self.a_num[: a_num.size] = a_num
        self.a_den[: a_den.size] = a_den
        if not np.any(self.a_den) and not np.any(self.a_num):
            raise ValueError("marked point is identically 0/0")
        self.da_num = np.polynomial.polynomial.polyder(self.a_num) \
            if width > 1 else np.zeros(1, dtype=np.complex128)
        self.da_den = np.polynomial.polynomial.polyder(self.a_den) \
            if width > 1 else np.zeros(1, dtype=np.complex128)
        self.da_num = np.atleast_1d(self.da_num).astype(np.complex128)
        self.da_den = np.atleast_1d(self.da_den).astype(np.complex128)
        #: topological degree of the marked point as a map to the sphere
        self.marked_degree = max(_true_degree(self.a_num), _true_degree(self.a_den))
        self._res_poly = self._fit_resultant_poly()

    # -- construction helpers -------------------------------------------------

    def _fit_resultant_poly(self):
        """Resultant of the two coefficient sides as a polynomial in lambda,
        fitted exactly from pointwise Sylvester determinants."""
        m = max(self.num.shape[1], self.den.shape[1]) - 1
        deg = 2 * self.degree * m
        if deg == 0:
            det, _ = sylvester_resultant(self.num[:, 0], self.den[:, 0],
                                         self.degree)
            return np.array([det], dtype=np.complex128)
        k = np.arange(deg + 1)
        pts = 1.37 * np.exp(2j * np.pi * (k + 0.31) / (deg + 1))
        vals = np.empty(deg + 1, dtype=np.complex128)
        for i, lam in enumerate(pts):
            p = _polyval_rows(self.num, lam)
            q = _polyval_rows(self.den, lam)
            vals[i], _ = sylvester_resultant(p, q, self.degree)
        vander = np.vander(pts, deg + 1, increasing=True)
        return np.linalg.solve(vander, vals)

    # -- pointwise API ---------------------------------------------------------

    def coeffs_at(self, lam):
        return _polyval_rows(self.num, lam), _polyval_rows(self.den, lam)

    def a_at(self, lam):
        """Holomorphic lift of the marked point (not normalized)."""
        lam = np.asarray(lam)
        return (np.polynomial.polynomial.polyval(lam, self.a_num),
                np.polynomial.polynomial.polyval(lam, self.a_den))

    def resultant_at(self, lam):
        return np.polynomial.polynomial.polyval(np.asarray(lam), self._res_poly)

    def resultant_scale_at(self, lam):
        p, q = self.coeffs_at(lam)
        return (np.max(np.abs(p), axis=0) * np.max(np.abs(q), axis=0)) ** self.degree

    def degenerate_mask(self, lam):
        """True where specialization would fail the common-root gate."""
        return np.abs(self.resultant_at(lam)) <= \
            RESULTANT_RTOL * self.resultant_scale_at(lam)

    def specialize(self, lam):
        """RationalMap at the given parameter; DegenerateParameter outside the
        locus where numerator and denominator stay coprime."""
        lam = complex(lam)
        p, q = self.coeffs_at(lam)
        try:
            rmap = RationalMap(p, q)
        except ValueError as exc:
            raise DegenerateParameter(f"lambda={lam}: {exc}") from exc
        if rmap.degree != self.degree:
            raise DegenerateParameter(
                f"lambda={lam}: degree dropped to {rmap.degree}"
            )
        return rmap

    def pack(self):
        """Contiguous arrays consumed by the numeric kernels."""
        return (self.degree,
                np.ascontiguousarray(self.num), np.ascontiguousarray(self.den),
                np.ascontiguousarray(self.dnum), np.ascontiguousarray(self.dden),
                np.ascontiguousarray(self.a_num), np.ascontiguousarray(self.a_den),
                np.ascontiguousarray(self.da_num), np.ascontiguousarray(self.da_den))

    def __repr__(self):
        return f"Family({self.name!r}, degree={self.degree})"


def _true_degree(coeffs):
    nz = np.nonzero(coeffs)[0]
    return int(nz[-1]) if nz.size else 0


# -- built-in families ---------------------------------------------------------

def unicritical(degree=2):
    """f_lambda(z) = z^degree + lambda with marked critical value a = lambda."""
    rows_num = [np.zeros(1, complex) for _ in range(degree + 1)]
    rows_num[0] = np.array([0.0, 1.0], dtype=complex)   # constant term: lambda
    rows_num[degree] = np.array([1.0], dtype=complex)
    rows_den = [np.zeros(1, complex) for _ in range(degree + 1)]
    rows_den[0] = np.array([1.0], dtype=complex)
    return Family(degree, rows_num, rows_den,
                  a_num=[0.0, 1.0], a_den=[1.0],
                  name=f"unicritical-d{degree}")


def lattes4():
    """Constant family of the degree-4 map (z^2+1)^2 / (4z(z^2-1)) with the
    moving marked point a(lambda) = lambda. The map is covered by doubling on
    a torus, so its maximal measure is smooth with exponent log(2)."""
    num = [np.array([c], dtype=complex) for c in (1.0, 0.0, 2.0, 0.0, 1.0)]
    den = [np.array([c], dtype=complex) for c in (0.0, -4.0, 0.0, 4.0, 0.0)]
    return Family(4, num, den, a_num=[0.0, 1.0], a_den=[1.0], name="lattes4")


BUILTIN_FAMILIES = {"unicritical": unicritical, "lattes4": lattes4}


# -- marked orbits with forward-mode parameter derivative -----------------------

class OrbitRecord:
    """Trace of the marked orbit at one parameter.

    A, B: sup-normalized lift of a_k(lambda), k = 0..n.
    dA, dB, dlog: the lambda-derivative of the lift, stored as a sup-normalized
        pair times exp(dlog); dlog[k] = -inf when the derivative vanishes.
    log_sph[k]: log (f^k)#(a), accumulated by the chain rule (log_sph[0] = 0).
    hit_step: first k whose point is within CRIT_HIT_TOL of a critical point,
        -1 when the orbit stays clear. Data past the hit is computed, not
        fabricated; consumers must honor the flag.
    """

    def __init__(self, lam, A, B, dA, dB, dlog, log_sph, min_crit_dist,
                 hit_step, degree):
        self.lam = lam
        self.A = A
        self.B = B
        self.dA = dA
        self.dB = dB
        self.dlog = dlog
        self.log_sph = log_sph
        self.min_crit_dist = min_crit_dist
        self.hit_step = hit_step
        self.degree = degree

    @property
    def n(self):
        return len(self.A) - 1

    @property
    def critical_hit(self):
        return self.hit_step >= 0

    def point(self, k):
        return ProjectivePoint(self.A[k], self.B[k])

    def affine(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.B != 0, self.A / np.where(self.B == 0, 1, self.B),
                            np.inf)

    def chart(self, k):
        return 0 if abs(self.A[k]) <= abs(self.B[k]) else 1

    def param_deriv_affine_log(self, k):
        """(log magnitude, unit phase) of d a_k / d lambda in the finite chart."""
        cross = self.dA[k] * self.B[k] - self.A[k] * self.dB[k]
        if cross == 0 or self.dlog[k] == -np.inf:
            return -np.inf, 1.0 + 0.0j
        logmag = self.dlog[k] + np.log(abs(cross)) - 2.0 * np.log(abs(self.B[k]))
        return logmag, cross / abs(cross) * (abs(self.B[k]) / self.B[k]) ** 2

    def param_deriv_spherical_log(self, k):
        """log of the spherical norm of d a_k / d lambda (chart independent)."""
        cross = abs(self.dA[k] * self.B[k] - self.A[k] * self.dB[k])
        if cross == 0 or self.dlog[k] == -np.inf:
            return -np.inf
        return self.dlog[k] + np.log(cross) - \
            np.log(abs(self.A[k]) ** 2 + abs(self.B[k]) ** 2)

    def param_deriv(self, k):
        """d a_k / d lambda in the chart of the point: (value, chart) pair.
        Overflows to complex inf for very long orbits; the log form above is
        the lossless representation."""
        chart = self.chart(k)
        if chart == 0:
            logmag, phase = self.param_deriv_affine_log(k)
        else:
            cross = self.dB[k] * self.A[k] - self.B[k] * self.dA[k]
            if cross == 0 or self.dlog[k] == -np.inf:
                return 0.0j, chart
            logmag = self.dlog[k] + np.log(abs(cross)) - 2.0 * np.log(abs(self.A[k]))
            phase = cross / abs(cross) * (abs(self.A[k]) / self.A[k]) ** 2
        if logmag == -np.inf:
            return 0.0j, chart
        mag = np.exp(logmag) if logmag < _EXP_CAP else np.inf
        return mag * phase, chart


def marked_orbit(fam, lam, n, crit=None):
    """OrbitRecord of length n at the given parameter (reference path;
    batch work goes through the compiled kernels)."""
    lam = complex(lam)
    rmap = fam.specialize(lam)
    d = fam.degree
    if crit is None:
        crit = rmap.critical_points()
    cz0 = np.array([c.z0 for c in crit])
    cz1 = np.array([c.z1 for c in crit])

    P, Q = fam.coeffs_at(lam)
    Pd = _polyval_rows(fam.dnum, lam)
    Qd = _polyval_rows(fam.dden, lam)

    A = np.empty(n + 1, dtype=np.complex128)
    B = np.empty(n + 1, dtype=np.complex128)
    dA = np.empty(n + 1, dtype=np.complex128)
    dB = np.empty(n + 1, dtype=np.complex128)
    dlog = np.empty(n + 1, dtype=np.float64)
    log_sph = np.zeros(n + 1, dtype=np.float64)

    a0, b0 = fam.a_at(lam)
    s = max(abs(a0), abs(b0))
    if s == 0.0:
        raise DegenerateParameter(f"marked point undefined at lambda={lam}")
    A[0], B[0] = a0 / s, b0 / s
    da = np.polynomial.polynomial.polyval(lam, fam.da_num) / s
    db = np.polynomial.polynomial.polyval(lam, fam.da_den) / s
    sd = max(abs(da), abs(db))
    if sd == 0.0:
        dA[0], dB[0], dlog[0] = 0.0, 0.0, -np.inf
    else:
        dA[0], dB[0], dlog[0] = da / sd, db / sd, np.log(sd)

    min_cd = np.inf
    hit = -1

    def crit_dist(a, b):
        num = np.abs(a * cz1 - b * cz0)
        den = np.hypot(abs(a), abs(b)) * np.hypot(np.abs(cz0), np.abs(cz1))
        return float(np.min(num / den)) if num.size else np.inf

    cd = crit_dist(A[0], B[0])
    min_cd = min(min_cd, cd)
    if cd < CRIT_HIT_TOL:
        hit = 0

    for k in range(n):
        a, b = A[k], B[k]
        f0 = homogeneous_eval(P, a, b, d)
        f1 = homogeneous_eval(Q, a, b, d)
        # chain-rule increment of log (f^k)# before stepping
        w = homogeneous_eval(rmap.wron, a, b, 2 * d - 2)
        zsq = abs(a) ** 2 + abs(b) ** 2
        fsq = abs(f0) ** 2 + abs(f1) ** 2
        if abs(w) == 0.0:
            step_log = -np.inf
        else:
            step_log = np.log(zsq) + np.log(abs(w)) - np.log(d) - np.log(fsq)
        log_sph[k + 1] = log_sph[k] + step_log

        # forward-mode derivative: dF = e^dlog * linear(dA,dB) + coeff-dot part
        lin0, lin1, inh0, inh1 = _derivative_terms(P, Q, Pd, Qd, d, a, b,
                                                   dA[k], dB[k])
        piv = max(dlog[k], 0.0)
        if dlog[k] == -np.inf:
            g0, g1 = inh0, inh1
            piv = 0.0
        else:
            e_lin = np.exp(min(dlog[k] - piv, 0.0))
            e_inh = np.exp(-piv) if piv < _EXP_CAP else 0.0
            g0 = e_lin * lin0 + e_inh * inh0
            g1 = e_lin * lin1 + e_inh * inh1
        s = max(abs(f0), abs(f1))
        if s == 0.0:
            raise DegenerateParameter(
                f"lift collapsed at step {k+1}, lambda={lam}"
            )
        A[k + 1], B[k + 1] = f0 / s, f1 / s
        # project out the radial gauge direction; the cross term dA*B - A*dB
        # is exactly invariant (radial inputs propagate radially) and the
        # projective part stays O(1) instead of drowning at rate degree^n
        nm = abs(A[k + 1]) ** 2 + abs(B[k + 1]) ** 2
        ip = (g0 * np.conj(A[k + 1]) + g1 * np.conj(B[k + 1])) / nm
        g0 -= ip * A[k + 1]
        g1 -= ip * B[k + 1]
        sd = max(abs(g0), abs(g1))
        if sd < _DERIV_FLOOR:
            dA[k + 1], dB[k + 1], dlog[k + 1] = 0.0, 0.0, -np.inf
        else:
            dA[k + 1], dB[k + 1] = g0 / sd, g1 / sd
            dlog[k + 1] = piv + np.log(sd) - np.log(s)

        cd = crit_dist(A[k + 1], B[k + 1])
        min_cd = min(min_cd, cd)
        if cd < CRIT_HIT_TOL and hit < 0:
            hit = k + 1

    return OrbitRecord(lam, A, B, dA, dB, dlog, log_sph, min_cd, hit, d)


def _derivative_terms(P, Q, Pd, Qd, d, a, b, da, db):
    """Linear-in-(da,db) and coefficient-dot parts of the differentiated step."""
    lin0 = lin1 = inh0 = inh1 = 0.0j
    ap = np.empty(d + 1, dtype=np.complex128)
    bp = np.empty(d + 1, dtype=np.complex128)
    ap[0] = 1.0
    bp[0] = 1.0
    for i in range(1, d + 1):
        ap[i] = ap[i - 1] * a
        bp[i] = bp[i - 1] * b
    for k in range(d + 1):
        mono = ap[k] * bp[d - k]
        inh0 += Pd[k] * mono
        inh1 += Qd[k] * mono
        dmono = 0.0j
        if k >= 1:
            dmono += k * ap[k - 1] * bp[d - k] * da
        if d - k >= 1:
            dmono += (d - k) * ap[k] * bp[d - k - 1] * db
        lin0 += P[k] * dmono
        lin1 += Q[k] * dmono
    return lin0, lin1, inh0, inh1


# -- closed-form transfer derivative --------------------------------------------

class TransferDerivative:
    """d a_n / d lambda via the orbit-sum product formula, kept as
    log-magnitude plus unit phase so long products stay representable."""

    __slots__ = ("log_abs", "phase")

    def __init__(self, log_abs, phase):
        self.log_abs = float(log_abs)
        self.phase = complex(phase)

    @property
    def value(self):
        if self.log_abs == -np.inf:
            return 0.0j
        mag = np.exp(self.log_abs) if self.log_abs < _EXP_CAP else np.inf
        return mag * self.phase

    def __repr__(self):
        return f"TransferDerivative(log_abs={self.log_abs}, phase={self.phase})"


def param_derivative_transfer(fam, lam, n, crit=None):
    """d a_n / d lambda as (f^n)'(a) * (a' + sum_k fdot(a_k) / (f^(k+1))'(a)).

    Requires the orbit to stay at chordal distance >= CRIT_HIT_TOL from the
    critical set through step n; otherwise CriticalHit is raised.
    """
    lam = complex(lam)
    orbit = marked_orbit(fam, lam, n, crit=crit)
    if orbit.critical_hit and orbit.hit_step <= n:
        raise CriticalHit(
            f"orbit meets the critical set at step {orbit.hit_step}"
        )
    d = fam.degree
    rmap = fam.specialize(lam)
    P, Q = fam.coeffs_at(lam)
    Pd = _polyval_rows(fam.dnum, lam)
    Qd = _polyval_rows(fam.dden, lam)

    # log-magnitude + phase of f'(a_k) for every step, via homogeneous pieces:
    # f'(a) = W(A,B) B^2 / (d F1(A,B)^2)
    logs = np.empty(n, dtype=np.float64)
    phases = np.empty(n, dtype=np.complex128)
    fdot_logs = np.empty(n, dtype=np.float64)
    fdot_phases = np.empty(n, dtype=np.complex128)
    for k in range(n):
        a, b = orbit.A[k], orbit.B[k]
        w = homogeneous_eval(rmap.wron, a, b, 2 * d - 2) / d
        f1 = homogeneous_eval(Q, a, b, d)
        logs[k] = np.log(abs(w)) + 2.0 * np.log(abs(b)) - 2.0 * np.log(abs(f1))
        phases[k] = _unit(w) * _unit(b) ** 2 * _unit(f1) ** -2
        f0 = homogeneous_eval(P, a, b, d)
        nd = homogeneous_eval(Pd, a, b, d)
        dd = homogeneous_eval(Qd, a, b, d)
        top = nd * f1 - f0 * dd
        if top == 0:
            fdot_logs[k], fdot_phases[k] = -np.inf, 1.0
        else:
            fdot_logs[k] = np.log(abs(top)) - 2.0 * np.log(abs(f1))
            fdot_phases[k] = _unit(top) * _unit(f1) ** -2

    prefix_logs = np.concatenate([[0.0], np.cumsum(logs)])
    prefix_phases = np.concatenate([[1.0 + 0j], np.cumprod(phases)])

    # terms of the bracket: a'(lambda) plus fdot(a_k) / (f^(k+1))'(a)
    a0, b0 = fam.a_at(lam)
    danum = np.polynomial.polynomial.polyval(lam, fam.da_num)
    daden = np.polynomial.polynomial.polyval(lam, fam.da_den)
    adot = (danum * b0 - a0 * daden) / b0**2
    term_logs = [np.log(abs(adot)) if adot != 0 else -np.inf]
    term_phases = [_unit(adot) if adot != 0 else 1.0 + 0j]
    for k in range(n):
        term_logs.append(fdot_logs[k] - prefix_logs[k + 1])
        term_phases.append(fdot_phases[k] / prefix_phases[k + 1])
    term_logs = np.asarray(term_logs)
    term_phases = np.asarray(term_phases)

    finite = term_logs > -np.inf
    if not np.any(finite):
        return TransferDerivative(-np.inf, 1.0)
    m = term_logs[finite].max()
    bracket = np.sum(np.exp(term_logs[finite] - m) * term_phases[finite])
    if bracket == 0:
        return TransferDerivative(-np.inf, 1.0)
    log_abs = prefix_logs[n] + m + np.log(abs(bracket))
    phase = prefix_phases[n] * _unit(bracket)
    return TransferDerivative(log_abs, phase)


def _unit(z):
    return z / abs(z)
