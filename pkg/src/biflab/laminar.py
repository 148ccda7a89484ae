"""Census of preimage components of h_n(lambda) = f_lambda^n(a(lambda)):
ramification counts by the argument principle and island classification over
a square subdivision of an image chart.

Ramification points are counted as zeros of the homogeneous Wronskian
dA*B - A*dB of the orbit lift: this matches zeros of h_n' away from poles and
correctly counts ramification over infinity, where a plain h_n' winding would
cancel zeros against poles.
"""

import numpy as np
from scipy import ndimage

from . import _kernels
from .contour import adaptive_loop_winding, rectangle_path, stable_winding
from .errors import BoundaryZero, ResolutionExceeded

#: subdivision of the image chart when no explicit beta is given
DEFAULT_SUBDIV = 16

#: flood-fill grid resolutions tried in order
GRID_LADDER = (256, 512, 1024)

#: minimum component diameter, in grid cells, to trust its census
MIN_CELLS = 8

MAX_ITERATE = 8


class ImageChart:
    """Axis-aligned square chart in the image sphere's finite coordinate."""

    def __init__(self, center=0.0 + 0.0j, side=1.0):
        self.center = complex(center)
        self.side = float(side)

    @property
    def corner(self):
        return self.center - 0.5 * self.side * (1 + 1j)


class Component:
    def __init__(self, seed, degree, ramifications, is_island, cells, area,
                 touches_edge, resolved):
        self.seed = complex(seed)
        self.degree = int(degree)
        self.ramifications = int(ramifications)
        self.is_island = bool(is_island)
        self.cells = int(cells)
        self.area = float(area)
        self.touches_edge = bool(touches_edge)
        self.resolved = bool(resolved)


class SquareReport:
    def __init__(self, index, corners, components, resolution_exceeded=False):
        self.index = index
        self.corners = corners          # (lower-left complex, side)
        self.components = components
        self.resolution_exceeded = resolution_exceeded


class IslandReport:
    """Per-square component census plus global ramification accounting."""

    def __init__(self, n, beta, subdiv, chart, region, squares, r_n,
                 d_n_expected):
        self.n = int(n)
        self.beta = beta
        self.subdiv = int(subdiv)
        self.chart = chart
        self.region = region
        self.squares = squares
        self.r_n = int(r_n)
        self.d_n_expected = int(d_n_expected)

    def island_degree_fraction(self):
        tot = sum(c.degree for s in self.squares for c in s.components)
        isl = sum(c.degree for s in self.squares for c in s.components
                  if c.is_island)
        return isl / tot if tot else np.nan

    def to_json_dict(self):
        return {
            "n": self.n,
            "beta": self.beta if self.beta is not None else "auto",
            "subdiv": self.subdiv,
            "chart": {"center_re": self.chart.center.real,
                      "center_im": self.chart.center.imag,
                      "side": self.chart.side},
            "region": list(self.region),
            "R_n": self.r_n,
            "d_n_expected": self.d_n_expected,
            "island_degree_fraction": self.island_degree_fraction(),
            "squares": [
                {
                    "id": list(s.index),
                    "corner_re": s.corners[0].real,
                    "corner_im": s.corners[0].imag,
                    "side": s.corners[1],
                    "resolution_exceeded": s.resolution_exceeded,
                    "components": [
                        {
                            "seed_re": c.seed.real,
                            "seed_im": c.seed.imag,
                            "degree": c.degree,
                            "ramifications": c.ramifications,
                            "is_island": c.is_island,
                            "cells": c.cells,
                            "area": c.area,
                            "touches_edge": c.touches_edge,
                            "resolved": c.resolved,
                        }
                        for c in s.components
                    ],
                }
                for s in self.squares
            ],
        }


class _OrbitMap:
    """Cached evaluator of h_n and its Wronskian cross term on demand."""

    def __init__(self, fam, n):
        self.pack = fam.pack()
        self.n = int(n)

    def lift(self, lams):
        d, pnum, pden, pdnum, pdden, anum, aden, danum, daden = self.pack
        return _kernels.hn_forward(np.asarray(lams, dtype=np.complex128),
                                   d, pnum, pden, pdnum, pdden,
                                   anum, aden, danum, daden, self.n)

    def h_values(self, lams):
        A, B, *_ = self.lift(lams)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(B != 0, A / np.where(B == 0, 1, B), np.inf)

    def cross_values(self, lams):
        A, B, dA, dB, _ = self.lift(lams)
        return dA * B - A * dB


def ramification_count(fam, n, region, base_points=4096, max_refinements=3,
                       max_perturb=3):
    """Zeros of the orbit Wronskian inside the rectangle, by winding number.

    The boundary is nudged outward when the integrand spikes (a zero too close
    to it); BoundaryZero if the winding never stabilizes."""
    omap = _OrbitMap(fam, n)
    re0, im0, re1, im1 = region
    eps = 0.0
    step = min(re1 - re0, im1 - im0) / 2048.0
    for _ in range(max_perturb):
        def path(k, _e=eps):
            return rectangle_path(re0 - _e, im0 - _e, re1 + _e, im1 + _e, k)

        vals = omap.cross_values(path(base_points))
        mags = np.abs(vals)
        if np.all(mags > 0) and np.median(mags) > 0 and \
                mags.min() > 1e-9 * np.median(mags):
            try:
                return stable_winding(omap.cross_values, path, n0=base_points,
                                      max_refinements=max_refinements)
            except BoundaryZero:
                pass
        eps += step
    raise BoundaryZero(
        f"winding unstable after {max_perturb} boundary perturbations")


def rh_check(fam, n, region):
    """Ramification count with its degree-normalized constant R_n / d^n."""
    r_n = ramification_count(fam, n, region)
    return {"R_n": r_n,
            "bound_constant": r_n / float(fam.degree ** n * max(
                fam.marked_degree, 1))}


def _boundary_loops(mask):
    """Closed corner-index loops around True regions, interior on the left."""
    edges = {}
    ii, jj = np.nonzero(mask)
    ny, nx = mask.shape

    def outside(i, j):
        return i < 0 or j < 0 or i >= ny or j >= nx or not mask[i, j]

    for i, j in zip(ii.tolist(), jj.tolist()):
        if outside(i - 1, j):
            edges.setdefault((j, i), []).append((j + 1, i))
        if outside(i, j + 1):
            edges.setdefault((j + 1, i), []).append((j + 1, i + 1))
        if outside(i + 1, j):
            edges.setdefault((j + 1, i + 1), []).append((j, i + 1))
        if outside(i, j - 1):
            edges.setdefault((j, i + 1), []).append((j, i))
    loops = []
    while edges:
        start = next(iter(edges))
        loop = [start]
        cur = start
        prev_dir = None
        while True:
            outs = edges.get(cur)
            if not outs:
                break
            if len(outs) == 1 or prev_dir is None:
                nxt = outs.pop(0)
            else:
                # pinch point: take the sharpest left turn to stay on one loop
                def turn(cand):
                    dx, dy = cand[0] - cur[0], cand[1] - cur[1]
                    return -(prev_dir[0] * dy - prev_dir[1] * dx)
                outs.sort(key=turn)
                nxt = outs.pop(0)
            if not edges[cur]:
                del edges[cur]
            prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
            cur = nxt
            if cur == start:
                break
            loop.append(cur)
        loops.append(loop)
    return loops


def _auto_subdiv(n, beta, chart):
    if beta is None:
        return DEFAULT_SUBDIV
    size = np.exp(-beta * n)
    return max(1, int(round(chart.side / size)))


def classify_islands(fam, n, region, chart=None, beta=None,
                     grid_ladder=GRID_LADDER):
    """IslandReport over the subdivision of the image chart.

    For every chart square: flood-fill the preimage on a region grid, then
    count the covering degree of each connected component (winding of h_n - c
    around the component boundary) and the ramification points inside
    (winding of the Wronskian cross term). A component is an island when it
    covers once, carries no ramification, and is fully inside the region.
    """
    if n > MAX_ITERATE:
        raise ValueError(f"iterate n={n} beyond desk scale {MAX_ITERATE}")
    chart = chart or ImageChart()
    subdiv = _auto_subdiv(n, beta, chart)
    omap = _OrbitMap(fam, n)
    re0, im0, re1, im1 = region
    side = chart.side / subdiv
    corner = chart.corner

    grids = {}

    def grid_values(res):
        if res not in grids:
            cw = (re1 - re0) / res
            ch = (im1 - im0) / res
            re = re0 + (np.arange(res) + 0.5) * cw
            im = im0 + (np.arange(res) + 0.5) * ch
            lam = (re[None, :] + 1j * im[:, None]).ravel()
            hv = omap.h_values(lam).reshape(res, res)
            grids[res] = (cw, ch, hv)
        return grids[res]

    squares = []
    r_n = ramification_count(fam, n, region)
    for si in range(subdiv):
        for sj in range(subdiv):
            c0 = corner + complex(sj * side, si * side)
            center = c0 + 0.5 * side * (1 + 1j)
            report = _classify_square(omap, (si, sj), c0, side, center,
                                      region, grid_values, grid_ladder)
            squares.append(report)
    d_n = fam.degree ** n * max(fam.marked_degree, 1)
    return IslandReport(n, beta, subdiv, chart, region, squares, r_n, d_n)


def _classify_square(omap, index, c0, side, center, region, grid_values,
                     ladder):
    re0, im0, re1, im1 = region
    for res in ladder:
        cw, ch, hv = grid_values(res)
        with np.errstate(invalid="ignore"):
            mask = ((hv.real >= c0.real) & (hv.real < c0.real + side)
                    & (hv.imag >= c0.imag) & (hv.imag < c0.imag + side))
        if not mask.any():
            return SquareReport(index, (c0, side), [])
        labels, ncomp = ndimage.label(mask)
        resolved = True
        comps = []
        for lab in range(1, ncomp + 1):
            cells = labels == lab
            ii, jj = np.nonzero(cells)
            diam = max(ii.max() - ii.min(), jj.max() - jj.min()) + 1
            if diam < MIN_CELLS and res != ladder[-1]:
                resolved = False
                break
            comps.append((cells, ii, jj, diam))
        if not resolved:
            continue
        out = []
        for cells, ii, jj, diam in comps:
            touches = bool(ii.min() == 0 or jj.min() == 0
                           or ii.max() == res - 1 or jj.max() == res - 1)
            seed_i = int(ii[len(ii) // 2])
            seed_j = int(jj[len(jj) // 2])
            seed = complex(re0 + (seed_j + 0.5) * cw, im0 + (seed_i + 0.5) * ch)
            area = float(cells.sum()) * cw * ch

            def to_lambda(loop):
                arr = np.asarray(loop, dtype=np.float64)
                return (re0 + arr[:, 0] * cw) + 1j * (im0 + arr[:, 1] * ch)

            loops = _boundary_loops(cells)
            degree = 0.0
            rams = 0.0
            ok = True
            for loop in loops:
                pts = to_lambda(loop)
                try:
                    degree += adaptive_loop_winding(
                        lambda z: omap.h_values(z) - center, pts)
                    rams += adaptive_loop_winding(omap.cross_values, pts)
                except BoundaryZero:
                    ok = False
                    break
            if not ok:
                out.append(Component(seed, -1, -1, False, int(cells.sum()),
                                     area, touches, False))
                continue
            deg_i = int(np.round(degree))
            ram_i = int(np.round(rams))
            island = (deg_i == 1 and ram_i == 0 and not touches)
            out.append(Component(seed, deg_i, ram_i, island,
                                 int(cells.sum()), area, touches, True))
        return SquareReport(index, (c0, side), out,
                            resolution_exceeded=any(not c.resolved
                                                    for c in out))
    raise ResolutionExceeded("component census failed at the finest grid")


def write_pgm(path, array, levels=255):
    """Plain-text PGM of an integer label array (visualization aid)."""
    arr = np.asarray(array)
    top = max(int(arr.max()), 1)
    scaled = (arr.astype(np.float64) / top * levels).astype(int)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"P2\n{arr.shape[1]} {arr.shape[0]}\n{levels}\n")
        for row in scaled:
            fh.write(" ".join(str(v) for v in row) + "\n")
