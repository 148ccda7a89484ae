"""Experiment configuration: INI-style sections of key = value pairs.

Complex values are written "re,im"; lambda-polynomial coefficient lists are
space-separated complex values, ascending. Unknown sections or keys are
rejected so typos cannot silently change an experiment.
"""

import configparser
import hashlib
import io

import numpy as np

from .errors import ConfigError
from .families import BUILTIN_FAMILIES, Family

_SCHEMA = {
    "family": {"name", "degree"},      # plus custom coefficient keys
    "grid": {"lambda_min", "lambda_max", "nx", "ny", "iter_budget", "tol"},
    "sampling": {"count", "seed"},
    "lyapunov": {"n_max"},
    "dimension": {"r_max", "levels"},
    "laminar": {"n", "beta", "chart_center", "chart_side"},
}

_REQUIRED_SECTIONS = ("family", "grid", "sampling", "lyapunov", "dimension")


def parse_complex(text, field):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{field}: expected 're,im', got {text!r}",
                          field=field)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"{field}: {exc}", field=field) from exc


def parse_poly(text, field):
    vals = [parse_complex(tok, field) for tok in text.split()]
    if not vals:
        raise ConfigError(f"{field}: empty coefficient list", field=field)
    return np.array(vals, dtype=complex)


def _get_int(sec, key, field, lo=None, hi=None):
    raw = sec.get(key)
    try:
        val = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{field}: expected integer, got {raw!r}",
                          field=field)
    if lo is not None and val < lo:
        raise ConfigError(f"{field}: {val} below minimum {lo}", field=field)
    if hi is not None and val > hi:
        raise ConfigError(f"{field}: {val} above maximum {hi}", field=field)
    return val


def _get_float(sec, key, field, lo=None, positive=False):
    raw = sec.get(key)
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{field}: expected number, got {raw!r}",
                          field=field)
    if positive and not val > 0:
        raise ConfigError(f"{field}: must be positive", field=field)
    if lo is not None and val < lo:
        raise ConfigError(f"{field}: {val} below minimum {lo}", field=field)
    return val


class ExperimentConfig:
    """Validated experiment description; `digest` keys all artifacts."""

    def __init__(self, family_section, region, nx, ny, iter_budget, tol,
                 sample_count, seed, n_max, r_max, levels, laminar):
        self.family_section = family_section   # ordered (key, value) pairs
        self.region = region
        self.nx = nx
        self.ny = ny
        self.iter_budget = iter_budget
        self.tol = tol
        self.sample_count = sample_count
        self.seed = seed
        self.n_max = n_max
        self.r_max = r_max
        self.levels = levels
        self.laminar = laminar                 # None or dict

    def build_family(self):
        fam_keys = dict(self.family_section)
        name = fam_keys.get("name")
        if name == "unicritical":
            degree = int(fam_keys.get("degree", 2))
            return BUILTIN_FAMILIES["unicritical"](degree)
        if name == "lattes4":
            return BUILTIN_FAMILIES["lattes4"]()
        # custom family from explicit coefficient polynomials
        degree = int(fam_keys["degree"])
        num = [np.zeros(1, complex) for _ in range(degree + 1)]
        den = [np.zeros(1, complex) for _ in range(degree + 1)]
        for key, val in self.family_section:
            if key.startswith("num_"):
                num[int(key[4:])] = parse_poly(val, f"family.{key}")
            elif key.startswith("den_"):
                den[int(key[4:])] = parse_poly(val, f"family.{key}")
        a_num = parse_poly(fam_keys["a_num"], "family.a_num")
        a_den = parse_poly(fam_keys["a_den"], "family.a_den")
        return Family(degree, num, den, a_num, a_den, name="custom")

    def canonical_text(self):
        lines = []
        for key, val in sorted(self.family_section):
            lines.append(f"family.{key}={val}")
        re0, im0, re1, im1 = self.region
        lines += [
            f"grid.lambda_min={re0!r},{im0!r}",
            f"grid.lambda_max={re1!r},{im1!r}",
            f"grid.nx={self.nx}",
            f"grid.ny={'auto' if self.ny is None else self.ny}",
            f"grid.iter_budget={self.iter_budget}",
            f"grid.tol={self.tol!r}",
            f"sampling.count={self.sample_count}",
            f"sampling.seed={self.seed}",
            f"lyapunov.n_max={self.n_max}",
            f"dimension.r_max={self.r_max!r}",
            f"dimension.levels={self.levels}",
        ]
        if self.laminar is not None:
            lam = self.laminar
            lines += [
                f"laminar.n={lam['n']}",
                f"laminar.beta={lam['beta']!r}",
                f"laminar.chart_center={lam['chart_center']!r}",
                f"laminar.chart_side={lam['chart_side']!r}",
            ]
        return "\n".join(lines) + "\n"

    @property
    def digest(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _validate_family_section(pairs):
    keys = dict(pairs)
    name = keys.get("name")
    if name in ("unicritical",):
        extra = set(keys) - {"name", "degree"}
        if extra:
            raise ConfigError(f"family: unknown keys {sorted(extra)}",
                              field=f"family.{sorted(extra)[0]}")
        degree = int(keys.get("degree", 2))
        if not 2 <= degree <= 12:
            raise ConfigError("family.degree: out of range [2, 12]",
                              field="family.degree")
    elif name == "lattes4":
        extra = set(keys) - {"name"}
        if extra:
            raise ConfigError(f"family: unknown keys {sorted(extra)}",
                              field=f"family.{sorted(extra)[0]}")
    elif name == "custom":
        needed = {"degree", "a_num", "a_den"}
        missing = needed - set(keys)
        if missing:
            raise ConfigError(f"family: missing {sorted(missing)}",
                              field=f"family.{sorted(missing)[0]}")
        degree = int(keys["degree"])
        if not 2 <= degree <= 12:
            raise ConfigError("family.degree: out of range [2, 12]",
                              field="family.degree")
        allowed = {"name", "degree", "a_num", "a_den"}
        for key in keys:
            if key in allowed:
                continue
            if key.startswith(("num_", "den_")):
                try:
                    k = int(key[4:])
                except ValueError:
                    raise ConfigError(f"family.{key}: bad coefficient index",
                                      field=f"family.{key}")
                if not 0 <= k <= degree:
                    raise ConfigError(
                        f"family.{key}: index outside 0..{degree}",
                        field=f"family.{key}")
            else:
                raise ConfigError(f"family.{key}: unknown key",
                                  field=f"family.{key}")
    else:
        raise ConfigError(f"family.name: unknown family {name!r}",
                          field="family.name")


def load_config(path=None, text=None, seed_override=None):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                   interpolation=None)
    cp.optionxform = str
    if text is None:
        with open(path) as fh:
            text = fh.read()
    cp.read_file(io.StringIO(text))

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", field=section)
        if section == "family":
            continue
        extra = set(cp[section]) - _SCHEMA[section]
        if extra:
            raise ConfigError(
                f"[{section}]: unknown keys {sorted(extra)}",
                field=f"{section}.{sorted(extra)[0]}")
    for section in _REQUIRED_SECTIONS:
        if section not in cp:
            raise ConfigError(f"missing section [{section}]", field=section)

    fam_pairs = list(cp["family"].items())
    _validate_family_section(fam_pairs)

    grid = cp["grid"]
    lam_min = parse_complex(grid.get("lambda_min", ""), "grid.lambda_min")
    lam_max = parse_complex(grid.get("lambda_max", ""), "grid.lambda_max")
    if not (lam_max.real > lam_min.real and lam_max.imag > lam_min.imag):
        raise ConfigError("grid: lambda_max must exceed lambda_min "
                          "in both coordinates", field="grid.lambda_max")
    nx = _get_int(grid, "nx", "grid.nx", lo=16, hi=1 << 14)
    ny = _get_int(grid, "ny", "grid.ny", lo=16, hi=1 << 14) \
        if grid.get("ny") else None
    iter_budget = _get_int(grid, "iter_budget", "grid.iter_budget",
                           lo=1, hi=10**7)
    tol = _get_float(grid, "tol", "grid.tol", positive=True)

    samp = cp["sampling"]
    count = _get_int(samp, "count", "sampling.count", lo=1, hi=10**7)
    seed = _get_int(samp, "seed", "sampling.seed", lo=0)
    if seed_override is not None:
        seed = int(seed_override)

    n_max = _get_int(cp["lyapunov"], "n_max", "lyapunov.n_max", lo=10,
                     hi=10**6)
    dim = cp["dimension"]
    r_max = _get_float(dim, "r_max", "dimension.r_max", positive=True)
    levels = _get_int(dim, "levels", "dimension.levels", lo=1, hi=30)

    laminar = None
    if "laminar" in cp:
        lam_sec = cp["laminar"]
        laminar = {
            "n": _get_int(lam_sec, "n", "laminar.n", lo=0, hi=8),
            "beta": (_get_float(lam_sec, "beta", "laminar.beta", positive=True)
                     if lam_sec.get("beta") else None),
            "chart_center": parse_complex(
                lam_sec.get("chart_center", "0,0"), "laminar.chart_center"),
            "chart_side": _get_float(lam_sec, "chart_side",
                                     "laminar.chart_side", positive=True)
            if lam_sec.get("chart_side") else 1.0,
        }

    region = (lam_min.real, lam_min.imag, lam_max.real, lam_max.imag)
    return ExperimentConfig(fam_pairs, region, nx, ny, iter_budget, tol,
                            count, seed, n_max, r_max, levels, laminar)
