"""Escape-rate potential L(lambda) = G_lambda(a(lambda)) on parameter grids.

G is the renormalized-iteration limit of d^-n log ||F^n|| applied to the
holomorphic lift of the marked point, so L is the local potential whose
(1/2pi) Laplacian is the activity measure. Values are nonnegative and vanish
exactly where the marked orbit never escapes in the lift.
"""

import numpy as np

from . import _kernels
from .artifacts import grid_from_bytes, grid_to_bytes, fmt_float, write_csv
from .core import ProjectivePoint
from .errors import ConfigError

DEFAULT_ITER_BUDGET = 2000
DEFAULT_TOL = 1e-10
MIN_GRID = 16


class PotentialGrid:
    """Square-cell grid of potential values over a parameter rectangle.

    values[i, j] is L at re_min + j*h + 1i*(im_min + i*h). Masked
    (degenerate-parameter) cells hold NaN; `converged` marks cells whose
    geometric tail bound dropped below tol inside the iteration budget.
    """

    def __init__(self, region, nx, ny, h, values, iter_budget, tol,
                 converged=None, iters=None, meta=None):
        self.re_min, self.im_min, self.re_max, self.im_max = region
        self.nx = int(nx)
        self.ny = int(ny)
        self.h = float(h)
        self.values = values
        self.iter_budget = int(iter_budget)
        self.tol = float(tol)
        self.converged = converged if converged is not None else \
            np.ones_like(values, dtype=bool)
        self.iters = iters
        self.meta = dict(meta or {})

    @property
    def region(self):
        return (self.re_min, self.im_min, self.re_max, self.im_max)

    @property
    def mask(self):
        return np.isnan(self.values)

    def lambdas(self):
        re = self.re_min + self.h * np.arange(self.nx)
        im = self.im_min + self.h * np.arange(self.ny)
        return re[None, :] + 1j * im[:, None]

    def cell_center(self, i, j):
        return complex(self.re_min + j * self.h, self.im_min + i * self.h)

    # -- serialization ------------------------------------------------------

    def to_bytes(self):
        return grid_to_bytes(self.region, self.nx, self.ny, self.tol,
                             self.iter_budget, self.values,
                             dict(self.meta, kind="potential"))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data):
        region, nx, ny, tol, budget, values, meta = grid_from_bytes(data)
        h = (region[2] - region[0]) / (nx - 1)
        return cls(region, nx, ny, h, values, budget, tol, meta=meta)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def to_csv(self, path):
        lam = self.lambdas()
        rows = ((fmt_float(l.real), fmt_float(l.imag), fmt_float(v))
                for l, v in zip(lam.ravel(), self.values.ravel()))
        write_csv(path, {"kind": "potential", **{k: str(v) for k, v in
                                                 self.meta.items()}},
                  ["lambda_re", "lambda_im", "L"], rows)


def green_value_full(fam, lam, z=None, iter_budget=DEFAULT_ITER_BUDGET,
                     tol=DEFAULT_TOL):
    """(value, converged, iterations) of the escape-rate potential at one
    point. With z omitted the marked lift a(lambda) is used; an affine complex
    z means the section (z, 1); a ProjectivePoint is taken as stored."""
    lam = complex(lam)
    d, pnum, pden, _pdn, _pdd, anum, aden, *_ = fam.pack()
    if z is None:
        vals, conv, iters = _kernels.potential_points(
            np.array([lam]), d, pnum, pden, anum, aden, iter_budget, tol)
        return float(vals[0]), bool(conv[0]), int(iters[0])
    if isinstance(z, ProjectivePoint):
        z0, z1 = z.z0, z.z1
    else:
        z0, z1 = complex(z), 1.0
    point_num = np.array([z0], dtype=complex)
    point_den = np.array([z1], dtype=complex)
    vals, conv, iters = _kernels.potential_points(
        np.array([lam]), d, pnum, pden, point_num, point_den, iter_budget, tol)
    return float(vals[0]), bool(conv[0]), int(iters[0])


def green_value(fam, lam, z=None, iter_budget=DEFAULT_ITER_BUDGET,
                tol=DEFAULT_TOL):
    return green_value_full(fam, lam, z, iter_budget, tol)[0]


def square_grid_shape(region, nx, ny=None):
    """Square-cell resolution: h from the real span, ny rounded to match and
    the imaginary top edge adjusted accordingly."""
    re0, im0, re1, im1 = region
    if re1 <= re0 or im1 <= im0:
        raise ConfigError("region must have positive extent", field="region")
    if nx < MIN_GRID:
        raise ConfigError(f"nx must be >= {MIN_GRID}", field="nx")
    h = (re1 - re0) / (nx - 1)
    ny_round = max(MIN_GRID, int(round((im1 - im0) / h)) + 1)
    if ny is not None and abs(int(ny) - ny_round) > 1:
        raise ConfigError(
            f"ny={ny} breaks square cells (want ~{ny_round})", field="ny")
    ny = ny_round if ny is None else max(int(ny), MIN_GRID)
    im1 = im0 + (ny - 1) * h
    return (re0, im0, re1, im1), int(nx), int(ny), h


def potential_grid(fam, region, nx, ny=None, iter_budget=DEFAULT_ITER_BUDGET,
                   tol=DEFAULT_TOL, meta=None):
    """Potential of the marked point over the region, square cells enforced.

    Degenerate parameters (common-root locus) come back as NaN-masked cells.
    Evaluation is cell-parallel and deterministic for a fixed backend.
    """
    region, nx, ny, h = square_grid_shape(region, nx, ny)
    d, pnum, pden, _pdn, _pdd, anum, aden, *_ = fam.pack()
    re = region[0] + h * np.arange(nx)
    im = region[1] + h * np.arange(ny)
    lams = (re[None, :] + 1j * im[:, None]).ravel()
    vals, conv, iters = _kernels.potential_points(
        lams, d, pnum, pden, anum, aden, iter_budget, tol)
    degenerate = fam.degenerate_mask(lams)
    vals = np.where(degenerate, np.nan, vals).reshape(ny, nx)
    conv = (conv & ~degenerate).reshape(ny, nx)
    return PotentialGrid(region, nx, ny, h, vals, iter_budget, tol,
                         converged=conv, iters=iters.reshape(ny, nx),
                         meta=meta)


def holder_exponent(pg, max_level=6):
    """Fitted scaling exponent of potential increments along grid rows.

    Uses the 99th percentile of |L(x + s) - L(x)| at dyadic separations; the
    regularity of the potential shows up as a strictly positive slope."""
    deltas = []
    seps = []
    v = pg.values
    for k in range(max_level):
        s = 2 ** k
        if s >= pg.nx:
            break
        diff = np.abs(v[:, s:] - v[:, :-s])
        diff = diff[np.isfinite(diff)]
        if diff.size == 0:
            break
        q = np.percentile(diff, 99)
        if q <= 0:
            continue
        deltas.append(np.log(q))
        seps.append(np.log(s * pg.h))
    if len(deltas) < 2:
        return np.nan
    slope, _ = np.polyfit(seps, deltas, 1)
    return float(slope)
