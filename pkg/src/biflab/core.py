"""Degree-d rational maps on the Riemann sphere in homogeneous coordinates.

Points are pairs [z0 : z1] kept sup-norm normalized, so iteration never
overflows and chart selection is a comparison of moduli. A map is stored by the
ascending coefficient vectors of its numerator and denominator; the associated
homogeneous forms are F0(z0,z1) = sum p_k z0^k z1^(d-k) and likewise F1.
"""

import numpy as np

from ._roots import aberth_roots
from .errors import RootFindingFailure

#: coordinate ratio beyond which a point is treated as 0/infinity for charts
CHART_SNAP_RATIO = 1e8

#: relative tolerance of the common-root (resultant) rejection test
RESULTANT_RTOL = 1e-12

#: residual gate for validated critical points, relative to the Wronskian size
CRIT_RESIDUAL_RTOL = 1e-9


class ProjectivePoint:
    """Point of the Riemann sphere, sup-norm normalized homogeneous pair."""

    __slots__ = ("z0", "z1")

    def __init__(self, z0, z1):
        z0 = complex(z0)
        z1 = complex(z1)
        s = max(abs(z0), abs(z1))
        if s == 0.0 or not np.isfinite(s):
            raise ValueError("projective point needs a finite nonzero pair")
        self.z0 = z0 / s
        self.z1 = z1 / s

    @classmethod
    def from_affine(cls, z):
        return cls(z, 1.0)

    @classmethod
    def infinity(cls):
        return cls(1.0, 0.0)

    @property
    def is_infinity(self):
        return abs(self.z1) * CHART_SNAP_RATIO < abs(self.z0)

    def affine(self):
        """Affine coordinate z0/z1 (inf when the point sits at infinity)."""
        if self.z1 == 0:
            return complex(np.inf, 0.0)
        return self.z0 / self.z1

    def chart(self):
        """0 for the finite chart (|z| <= 1), 1 for the reciprocal chart."""
        return 0 if abs(self.z0) <= abs(self.z1) else 1

    def chordal_distance(self, other):
        return chordal_distance(self.z0, self.z1, other.z0, other.z1)

    def __repr__(self):
        return f"ProjectivePoint({self.z0!r}, {self.z1!r})"


def chordal_distance(a0, a1, b0, b1):
    """Chordal metric |a0 b1 - a1 b0| / (||a|| ||b||), diameter 1."""
    num = abs(a0 * b1 - a1 * b0)
    na = np.hypot(abs(a0), abs(a1))
    nb = np.hypot(abs(b0), abs(b1))
    return num / (na * nb)


def homogeneous_eval(coeffs, z0, z1, degree):
    """sum_k coeffs[k] z0^k z1^(degree-k), coefficients ascending in z0."""
    r = coeffs[degree] + 0.0 * z0
    bp = 1.0 + 0.0 * z1
    for k in range(degree - 1, -1, -1):
        bp = bp * z1
        r = r * z0 + coeffs[k] * bp
    return r


def _poly_degree(coeffs, rtol):
    """Numerical degree: index of the last coefficient above rtol * max."""
    mags = np.abs(coeffs)
    top = mags.max()
    if top == 0.0:
        return -1
    idx = np.nonzero(mags > rtol * top)[0]
    return int(idx[-1])


def sylvester_resultant(p, q, degree):
    """Resultant of two binary forms of the given degree (ascending coeffs,
    padded to degree+1), together with the Hadamard bound of the Sylvester
    matrix used as the natural scale of the determinant."""
    d = degree
    m = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    pd = p[::-1]
    qd = q[::-1]
    for i in range(d):
        m[i, i : i + d + 1] = pd
        m[d + i, i : i + d + 1] = qd
    det = np.linalg.det(m)
    scale = float(np.prod(np.linalg.norm(m, axis=1)))
    return det, scale


class RationalMap:
    """Rational map of exact degree >= 2 with validated coprime coefficients."""

    def __init__(self, num, den):
        num = np.atleast_1d(np.asarray(num, dtype=np.complex128))
        den = np.atleast_1d(np.asarray(den, dtype=np.complex128))
        size = max(num.size, den.size)
        self.num = np.zeros(size, dtype=np.complex128)
        self.den = np.zeros(size, dtype=np.complex128)
        self.num[: num.size] = num
        self.den[: den.size] = den
        cmax = max(np.abs(self.num).max(), np.abs(self.den).max())
        if cmax == 0.0:
            raise ValueError("zero map")
        deg = max(_poly_degree(self.num, RESULTANT_RTOL),
                  _poly_degree(self.den, RESULTANT_RTOL))
        if deg < 2:
            raise ValueError(f"degree {deg} < 2 is out of scope")
        if deg != size - 1:
            self.num = self.num[: deg + 1].copy()
            self.den = self.den[: deg + 1].copy()
        self.degree = deg
        det, scale = sylvester_resultant(self.num, self.den, deg)
        if abs(det) <= RESULTANT_RTOL * scale:
            raise ValueError(
                "numerator and denominator share a root (resultant ~ 0)"
            )
        # z-derivatives and the affine Wronskian d*(P'Q - PQ'), degree <= 2d-2
        k = np.arange(1, deg + 1)
        self._dnum = self.num[1:] * k
        self._dden = self.den[1:] * k
        conv = np.convolve(self._dnum, self.den) - np.convolve(self.num, self._dden)
        self.wron = np.zeros(2 * deg - 1, dtype=np.complex128)
        m = min(conv.size, 2 * deg - 1)  # entries past degree 2d-2 vanish
        self.wron[:m] = deg * conv[:m]

    # -- evaluation ---------------------------------------------------------

    def eval(self, p):
        """Image of a projective point (total: projective evaluation)."""
        w0 = homogeneous_eval(self.num, p.z0, p.z1, self.degree)
        w1 = homogeneous_eval(self.den, p.z0, p.z1, self.degree)
        return ProjectivePoint(w0, w1)

    def eval_affine(self, z):
        return self.eval(ProjectivePoint.from_affine(z)).affine()

    def derivative_affine(self, z):
        """f'(z) in the finite chart; blows up near poles by design."""
        z = complex(z)
        num = np.polyval(self.num[::-1], z)
        den = np.polyval(self.den[::-1], z)
        dnum = np.polyval(self._dnum[::-1], z)
        dden = np.polyval(self._dden[::-1], z)
        return (dnum * den - num * dden) / den**2

    # -- spherical derivative -----------------------------------------------

    def log_spherical_derivative(self, p):
        """log f#(p) via the chart-free homogeneous formula
        f# = ||z||^2 |W(z)| / (d ||F(z)||^2); -inf at critical points."""
        w = homogeneous_eval(self.wron, p.z0, p.z1, 2 * self.degree - 2)
        f0 = homogeneous_eval(self.num, p.z0, p.z1, self.degree)
        f1 = homogeneous_eval(self.den, p.z0, p.z1, self.degree)
        aw = abs(w)
        if aw == 0.0:
            return -np.inf

        zsq = abs(p.z0) ** 2 + abs(p.z1) ** 2
        fsq = abs(f0) ** 2 + abs(f1) ** 2
        return np.log(zsq) + np.log(aw) - np.log(self.degree) - np.log(fsq)

    def spherical_derivative(self, p):
        if isinstance(p, (int, float, complex)):
            p = ProjectivePoint.from_affine(p)
        return float(np.exp(self.log_spherical_derivative(p)))

    # -- critical points ----------------------------------------------------

    def critical_points(self):
        """The 2d-2 zeros (with multiplicity) of the Wronskian, residuals
        validated against the Wronskian magnitude."""
        two_d2 = 2 * self.degree - 2
        wmax = np.abs(self.wron).max()
        deg_w = _poly_degree(self.wron, 1e-14)
        if deg_w < 0:
            raise RootFindingFailure("identically zero Wronskian")
        finite = aberth_roots(self.wron[: deg_w + 1]) if deg_w >= 1 else \
            np.zeros(0, dtype=np.complex128)
        pts = [ProjectivePoint.from_affine(z) for z in finite]
        pts += [ProjectivePoint.infinity()] * (two_d2 - deg_w)
        for pt in pts:
            res = abs(homogeneous_eval(self.wron, pt.z0, pt.z1, two_d2))
            if res > CRIT_RESIDUAL_RTOL * wmax:
                raise RootFindingFailure(
                    f"critical point residual {res:.3e} above gate"
                )
        return pts

    # -- chart gymnastics (used by the chart-independence checks) ------------

    def conjugate_reciprocal(self):
        """The map g(w) = 1/f(1/w): swap and reverse both coefficient vectors."""
        return RationalMap(self.den[::-1], self.num[::-1])

    def __repr__(self):
        return f"RationalMap(degree={self.degree})"


def eval_map(rmap, p):
    """Functional alias for RationalMap.eval."""
    return rmap.eval(p)


def spherical_derivative(rmap, p):
    return rmap.spherical_derivative(p)


def critical_points(rmap):
    return rmap.critical_points()
