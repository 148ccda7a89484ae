"""Argument-principle helpers: winding numbers of sampled closed paths."""

import numpy as np

from .errors import BoundaryZero


def winding_from_values(values):
    """Total argument change / 2pi along a closed polyline of nonzero values.

    values[k] are samples in path order; the closing segment back to values[0]
    is implied.
    """
    v = np.asarray(values, dtype=np.complex128)
    ratios = np.roll(v, -1) / v
    return float(np.angle(ratios).sum() / (2.0 * np.pi))


def rectangle_path(re0, im0, re1, im1, n):
    """n points tracing the rectangle boundary counterclockwise."""
    per_side = max(n // 4, 2)
    t = np.arange(per_side) / per_side
    bottom = (re0 + t * (re1 - re0)) + 1j * im0
    right = re1 + 1j * (im0 + t * (im1 - im0))
    top = (re1 + t * (re0 - re1)) + 1j * im1
    left = re0 + 1j * (im1 + t * (im0 - im1))
    return np.concatenate([bottom, right, top, left])


def stable_winding(evalfn, pathfn, n0=4096, max_refinements=3, tol=0.25):
    """Integer winding of evalfn along pathfn(n), doubling n until two
    consecutive estimates agree with the same integer within tol.

    evalfn maps a complex array to a complex array; pathfn(n) yields n path
    samples. Raises BoundaryZero when the estimates never stabilize.
    """
    prev = None
    n = n0
    for _ in range(max_refinements + 1):
        vals = evalfn(pathfn(n))
        if np.any(vals == 0) or not np.all(np.isfinite(vals)):
            raise BoundaryZero("path runs through a zero or invalid value")
        w = winding_from_values(vals)
        k = int(np.round(w))
        if abs(w - k) <= tol and prev is not None and prev == k:
            return k
        prev = k if abs(w - k) <= tol else None
        n *= 2
    raise BoundaryZero(
        f"winding failed to stabilize after {max_refinements} refinements"
    )


def adaptive_loop_winding(evalfn, vertices, max_passes=12, angle_cap=np.pi / 2):
    """Winding along an explicit closed polyline with midpoint insertion
    wherever a single segment turns the argument by more than angle_cap."""
    pts = np.asarray(vertices, dtype=np.complex128)
    vals = evalfn(pts)
    for _ in range(max_passes):
        if np.any(vals == 0):
            raise BoundaryZero("loop vertex hits a zero of the integrand")
        dphi = np.angle(np.roll(vals, -1) / vals)
        bad = np.nonzero(np.abs(dphi) > angle_cap)[0]
        if bad.size == 0:
            return float(dphi.sum() / (2.0 * np.pi))
        mids = 0.5 * (pts[bad] + np.roll(pts, -1)[bad])
        mvals = evalfn(mids)
        order = np.argsort(bad)
        pts = np.insert(pts, bad[order] + 1, mids[order])
        vals = np.insert(vals, bad[order] + 1, mvals[order])
    raise BoundaryZero("loop winding did not resolve below the angle cap")
