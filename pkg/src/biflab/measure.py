"""Activity measure: cell masses from the 5-point Laplacian of the potential,
plus sampling and ball-mass queries."""

import numpy as np

from .artifacts import grid_from_bytes, grid_to_bytes, sha256_bytes
from .errors import EmptyMeasure, ResolutionExceeded, UnusableGrid

TWO_PI = 2.0 * np.pi

#: quality gate: clipped/(total+clipped) must stay below this
CLIP_GATE = 0.05

#: 4x4 midpoint subsampling offsets for boundary-cell area fractions
_SUB = (np.arange(4) + 0.5) / 4.0 - 0.5


class MeasureGrid:
    """Nonnegative cell masses on the interior cells of a potential grid.

    masses[i, j] sits at the potential node (i+1, j+1); the region fields keep
    the parent rectangle so positions line up across files.
    """

    def __init__(self, region, nx, ny, h, masses, total_mass, clipped_mass,
                 source_hash, meta=None):
        self.re_min, self.im_min, self.re_max, self.im_max = region
        self.nx = int(nx)          # mass-array columns (= parent nx - 2)
        self.ny = int(ny)
        self.h = float(h)
        self.masses = masses
        self.total_mass = float(total_mass)
        self.clipped_mass = float(clipped_mass)
        self.source_hash = source_hash
        self.meta = dict(meta or {})

    @property
    def region(self):
        return (self.re_min, self.im_min, self.re_max, self.im_max)

    @property
    def clipped_fraction(self):
        denom = self.total_mass + self.clipped_mass
        return self.clipped_mass / denom if denom > 0 else 0.0

    def cell_center(self, i, j):
        return complex(self.re_min + (j + 1) * self.h,
                       self.im_min + (i + 1) * self.h)

    def centers(self):
        re = self.re_min + self.h * (1 + np.arange(self.nx))
        im = self.im_min + self.h * (1 + np.arange(self.ny))
        return re[None, :] + 1j * im[:, None]

    # -- serialization ------------------------------------------------------

    def to_bytes(self):
        meta = dict(self.meta, kind="measure",
                    total_mass=self.total_mass,
                    clipped_mass=self.clipped_mass,
                    source_hash=self.source_hash)
        return grid_to_bytes(self.region, self.nx, self.ny, 0.0, 0,
                             np.nan_to_num(self.masses, nan=-1.0), meta)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data):
        region, nx, ny, _tol, _budget, values, meta = grid_from_bytes(data)
        values = np.where(values < 0, np.nan, values)
        h = (region[2] - region[0]) / (nx + 1)
        return cls(region, nx, ny, h, values,
                   float(meta.get("total_mass", np.nansum(values))),
                   float(meta.get("clipped_mass", 0.0)),
                   meta.get("source_hash"), meta=meta)

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def laplacian_measure(pg, clip_gate=CLIP_GATE):
    """MeasureGrid from the potential: mass = (1/2pi) * 5-point stencil on the
    interior nodes, negatives clipped and tallied. Raises UnusableGrid when
    the clipped fraction reaches the gate. Cells whose stencil touches a
    masked node are masked (NaN)."""
    v = pg.values
    stencil = (v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:]
               - 4.0 * v[1:-1, 1:-1]) / TWO_PI
    masses = np.where(stencil > 0.0, stencil, 0.0)
    clipped = max(0.0, float(-np.sum(
        stencil[np.isfinite(stencil) & (stencil < 0.0)])))
    masked = np.isnan(stencil)
    masses[masked] = np.nan
    total = float(np.nansum(masses))
    source = sha256_bytes(pg.to_bytes())
    mg = MeasureGrid(pg.region, pg.nx - 2, pg.ny - 2, pg.h, masses, total,
                     clipped, source, meta=dict(pg.meta))
    if mg.clipped_fraction >= clip_gate:
        raise UnusableGrid(
            f"clipped mass fraction {mg.clipped_fraction:.4f} >= {clip_gate}",
            grid=mg)
    return mg


def boundary_flux_mass(pg):
    """(1/2pi) * outward normal derivative of the potential integrated along
    the grid boundary, by one-sided differences: the measure enclosed by the
    boundary ring, computed without touching interior stencils."""
    v = pg.values
    flux = (np.sum(v[-1, 1:-1] - v[-2, 1:-1]) + np.sum(v[0, 1:-1] - v[1, 1:-1])
            + np.sum(v[1:-1, -1] - v[1:-1, -2]) + np.sum(v[1:-1, 0] - v[1:-1, 1]))
    return float(flux / TWO_PI)


def sample(mg, count, seed):
    """count parameters drawn cell-by-mass then uniformly inside the cell;
    deterministic for a fixed seed."""
    if not np.isfinite(mg.total_mass) or mg.total_mass <= 0.0:
        raise EmptyMeasure("total mass is zero; nothing to sample")
    flat = np.nan_to_num(mg.masses, nan=0.0).ravel()
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    rng = np.random.default_rng(np.uint64(seed))
    u = rng.random(count)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), flat.size - 1)
    ii, jj = np.unravel_index(idx, mg.masses.shape)
    offs = rng.random((count, 2)) - 0.5
    re = mg.re_min + (jj + 1 + offs[:, 0]) * mg.h
    im = mg.im_min + (ii + 1 + offs[:, 1]) * mg.h
    return re + 1j * im


def ball_mass(mg, center, r):
    """Mass of the disk B(center, r): full cells plus 4x4-subsampled area
    fractions for cells straddling the circle. Refuses r below 2h."""
    if r < 2.0 * mg.h:
        raise ResolutionExceeded(f"r={r} below resolution floor {2*mg.h}")
    center = complex(center)
    # candidate window
    j0 = max(int(np.floor((center.real - r - mg.re_min) / mg.h)) - 2, 0)
    j1 = min(int(np.ceil((center.real + r - mg.re_min) / mg.h)) + 1, mg.nx)
    i0 = max(int(np.floor((center.imag - r - mg.im_min) / mg.h)) - 2, 0)
    i1 = min(int(np.ceil((center.imag + r - mg.im_min) / mg.h)) + 1, mg.ny)
    if i0 >= i1 or j0 >= j1:
        return 0.0
    sub = np.nan_to_num(mg.masses[i0:i1, j0:j1], nan=0.0)
    re = mg.re_min + (np.arange(j0, j1) + 1) * mg.h
    im = mg.im_min + (np.arange(i0, i1) + 1) * mg.h
    dx = re[None, :] - center.real
    dy = im[:, None] - center.imag
    dist = np.hypot(dx, dy)
    margin = mg.h * 0.7072  # > h*sqrt(2)/2: covers the cell corners
    total = float(np.sum(sub[dist <= r - margin]))
    edge = np.argwhere((dist > r - margin) & (dist < r + margin))
    if edge.size:
        exx = dx[0, edge[:, 1]][:, None] + mg.h * _SUB[None, :]
        eyy = dy[edge[:, 0], 0][:, None] + mg.h * _SUB[None, :]
        inside = (exx[:, :, None] ** 2 + eyy[:, None, :] ** 2) <= r * r
        frac = inside.reshape(len(edge), -1).mean(axis=1)
        total += float(np.sum(sub[edge[:, 0], edge[:, 1]] * frac))
    return total
