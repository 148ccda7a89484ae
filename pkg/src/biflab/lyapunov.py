"""Dynamical and parametric Lyapunov exponent estimates along marked orbits,
and the expansion verdict against the degree bound log(d)/D*."""

import logging

import numpy as np

from . import _kernels
from .families import marked_orbit

log = logging.getLogger(__name__)

#: additive part of the finite-horizon slack in verdicts
VERDICT_SLACK_FLOOR = 0.02

#: orbits closer to the critical set than this are excluded from the
#: growth-comparison finding scan
FINDING_CRIT_DIST = 1e-6


class ExponentSeries:
    """Checkpointed exponent estimates at one parameter.

    dyn[k] = log (f^n)#(a) / n and par[k] = log ||d a_n / d lambda|| / n at
    n = n_values[k] (spherical norms). A critical hit truncates the series at
    the last checkpoint before the hit; `flags` carries the markers.
    """

    def __init__(self, lam, n_values, dyn, par, min_crit_dist, hit_step,
                 flags=()):
        self.lam = complex(lam)
        self.n_values = np.asarray(n_values, dtype=np.int64)
        self.dyn = np.asarray(dyn, dtype=np.float64)
        self.par = np.asarray(par, dtype=np.float64)
        self.min_crit_dist = float(min_crit_dist)
        self.hit_step = int(hit_step)
        self.flags = list(flags)

    def __len__(self):
        return len(self.n_values)

    @property
    def dyn_final(self):
        return self.dyn[-1] if len(self.dyn) else np.nan

    @property
    def par_final(self):
        return self.par[-1] if len(self.par) else np.nan


def checkpoints(n_max, count=10):
    """Deciles of the iterate horizon: n_max/count, 2 n_max/count, .., n_max."""
    pts = np.unique(np.round(np.arange(1, count + 1) * n_max / count)
                    .astype(np.int64))
    return pts[pts >= 1]


def _truncate(series_n, dyn, par, hit):
    if hit < 0:
        return series_n, dyn, par
    keep = series_n < hit
    return series_n[keep], dyn[keep], par[keep]


def exponent_series(fam, lam, n_max, crit=None):
    """Dynamical and parametric exponent checkpoints from one marked orbit."""
    orbit = marked_orbit(fam, complex(lam), int(n_max), crit=crit)
    n_values = checkpoints(n_max)
    dyn = orbit.log_sph[n_values] / n_values
    par = np.array([orbit.param_deriv_spherical_log(int(n)) / n
                    for n in n_values])
    flags = []
    if orbit.critical_hit:
        flags.append(f"critical_hit@{orbit.hit_step}")
        n_values, dyn, par = _truncate(n_values, dyn, par, orbit.hit_step)
    return ExponentSeries(lam, n_values, dyn, par, orbit.min_crit_dist,
                          orbit.hit_step, flags)


def dynamical_exponent(fam, lam, n_max, crit=None):
    """Checkpointed (1/n) log (f^n)#(a(lambda)) series."""
    return exponent_series(fam, lam, n_max, crit=crit)


def parametric_exponent(fam, lam, n_max, crit=None):
    """Checkpointed (1/n) log ||d a_n/d lambda|| series (forward mode)."""
    return exponent_series(fam, lam, n_max, crit=crit)


class CEVerdict:
    __slots__ = ("holds_half", "holds_refined", "margin", "slack", "dyn_final")

    def __init__(self, holds_half, holds_refined, margin, slack, dyn_final):
        self.holds_half = bool(holds_half)
        self.holds_refined = bool(holds_refined)
        self.margin = float(margin)
        self.slack = float(slack)
        self.dyn_final = float(dyn_final)

    def __repr__(self):
        return (f"CEVerdict(half={self.holds_half}, refined={self.holds_refined}, "
                f"margin={self.margin:.4f})")


def ce_verdict(series, d, dstar):
    """Expansion verdict: does the final dynamical estimate clear log(d)/2 and
    log(d)/dstar, up to a dispersion-based slack?"""
    if len(series) == 0:
        raise ValueError("empty exponent series has no verdict")
    dyn_final = series.dyn_final
    tail = series.dyn[-3:]
    slack = 3.0 * float(np.std(tail)) + VERDICT_SLACK_FLOOR
    half = np.log(d) / 2.0
    refined = np.log(d) / dstar
    return CEVerdict(dyn_final >= half - slack, dyn_final >= refined - slack,
                     dyn_final - half, slack, dyn_final)


def batch_exponents(fam, lams, n_max, crit_points=None):
    """Exponent checkpoints for many parameters through the compiled kernels.

    crit_points: list of homogeneous critical points, constant across the
    batch (computed from a specialized map when omitted; exact for families
    whose critical set does not move). Returns (n_values, dyn, par, min_cd,
    hit) arrays; rows past a critical hit are NaN-masked.
    """
    lams = np.asarray(lams, dtype=np.complex128).ravel()
    d, pnum, pden, pdnum, pdden, anum, aden, danum, daden = fam.pack()
    if crit_points is None:
        probe = fam.specialize(_probe_parameter(fam, lams))
        crit_points = probe.critical_points()
    crit = np.array([[(c.z0, c.z1) for c in crit_points]],
                    dtype=np.complex128).repeat(lams.size, axis=0)
    n_values = checkpoints(n_max)
    dyn, par, min_cd, hit = _kernels.orbit_batch(
        lams, d, pnum, pden, pdnum, pdden, anum, aden, danum, daden,
        int(n_max), n_values, crit)
    hit_mask = (hit[:, None] >= 0) & (n_values[None, :] >= np.where(
        hit[:, None] < 0, np.iinfo(np.int64).max, hit[:, None]))
    dyn = np.where(hit_mask, np.nan, dyn)
    par = np.where(hit_mask, np.nan, par)
    return n_values, dyn, par, min_cd, hit


def _probe_parameter(fam, lams):
    """A non-degenerate parameter at which to read off the critical set."""
    for lam in list(lams[:8]) + [0.0, 0.3 + 0.1j]:
        if not bool(fam.degenerate_mask(np.array([lam]))[0]):
            return complex(lam)
    return complex(lams[0])


def growth_comparison_findings(dyn_final, par_final, min_cd, alpha=0.05,
                               slack=0.1):
    """Indices where parametric growth is positive but dynamical growth trails
    it by more than the slack (asymptotically the dynamical rate dominates;
    finite-horizon violations are reported, not failed)."""
    dyn_final = np.asarray(dyn_final)
    par_final = np.asarray(par_final)
    min_cd = np.asarray(min_cd)
    valid = (np.isfinite(dyn_final) & np.isfinite(par_final)
             & (min_cd > FINDING_CRIT_DIST))
    bad = valid & (par_final >= alpha) & (dyn_final < par_final - slack)
    idx = np.nonzero(bad)[0]
    if idx.size:
        log.warning("growth comparison: %d/%d samples have dyn < par - %.2f",
                    idx.size, int(valid.sum()), slack)
    return idx
