"""Pointwise dimension of the measure from dyadic ball masses, and the
upper packing dimension proxy (95th percentile of pointwise upper estimates,
capped at the ambient dimension 2)."""

import numpy as np

from .errors import InsufficientSamples, ResolutionExceeded, ZeroBallMass
from .measure import ball_mass

AMBIENT_DIM = 2.0
PERCENTILE = 95.0
MIN_VALID = 50

HIST_EDGES = np.round(np.arange(0.0, 3.01, 0.1), 10)


class DimensionEstimate:
    """Dyadic ball-mass scaling at one point.

    slope: least-squares slope of log mass against log r.
    limsup_proxy: max of 3-point secant slopes, the upper-envelope reading of
    the pointwise dimension at resolvable scales.
    """

    def __init__(self, lam, radii, log_masses, slope, limsup_proxy, flags=()):
        self.lam = complex(lam)
        self.radii = np.asarray(radii)
        self.log_masses = np.asarray(log_masses)
        self.slope = float(slope)
        self.limsup_proxy = float(limsup_proxy)
        self.flags = list(flags)


def dyadic_radii(r_max, levels):
    return r_max * 2.0 ** (-np.arange(levels + 1))


def local_dimension(mg, lam, r_max, levels):
    """DimensionEstimate at lam from balls r_max * 2^-j, j = 0..levels.

    Requires the point to sit at least r_max inside the region and the
    smallest ball to stay above the 2h resolution floor; raises ZeroBallMass
    off the support.
    """
    lam = complex(lam)
    radii = dyadic_radii(r_max, levels)
    if radii[-1] < 2.0 * mg.h:
        raise ResolutionExceeded(
            f"r_min={radii[-1]:.3g} under the 2h floor {2*mg.h:.3g}")
    if (lam.real - r_max < mg.re_min or lam.real + r_max > mg.re_max
            or lam.imag - r_max < mg.im_min or lam.imag + r_max > mg.im_max):
        raise ResolutionExceeded("point closer than r_max to the region edge")
    masses = np.array([ball_mass(mg, lam, r) for r in radii])
    if np.any(masses <= 0.0):
        raise ZeroBallMass(f"empty ball at lambda={lam}")
    logs = np.log(masses)
    logr = np.log(radii)
    slope = float(np.polyfit(logr, logs, 1)[0])
    if len(radii) >= 3:
        secants = (logs[2:] - logs[:-2]) / (logr[2:] - logr[:-2])
        limsup = float(np.max(secants))
    else:
        limsup = slope
    return DimensionEstimate(lam, radii, logs, slope, limsup)


def upper_packing(mg, samples, r_max, levels):
    """Aggregate of pointwise upper estimates over mass-typical samples.

    Returns a dict with the capped 95th-percentile proxy, percentile table,
    a fixed-bin histogram and the per-sample estimates (invalid samples are
    skipped and counted)."""
    estimates = []
    skipped = 0
    for lam in samples:
        try:
            estimates.append(local_dimension(mg, lam, r_max, levels))
        except (ZeroBallMass, ResolutionExceeded):
            skipped += 1
    if len(estimates) < MIN_VALID:
        raise InsufficientSamples(
            f"only {len(estimates)} valid estimates (< {MIN_VALID}); "
            f"{skipped} skipped")
    proxies = np.array([e.limsup_proxy for e in estimates])
    dstar = min(AMBIENT_DIM, float(np.percentile(proxies, PERCENTILE)))
    counts, _ = np.histogram(proxies, bins=HIST_EDGES)
    return {
        "Dstar": dstar,
        "percentiles": {
            "p50": float(np.percentile(proxies, 50)),
            "p90": float(np.percentile(proxies, 90)),
            "p95": float(np.percentile(proxies, 95)),
            "p99": float(np.percentile(proxies, 99)),
        },
        "histogram": {"edges": [float(e) for e in HIST_EDGES],
                      "counts": [int(c) for c in counts]},
        "n_valid": len(estimates),
        "n_skipped": skipped,
        "estimates": estimates,
    }
