"""Experiment driver: stage subcommands over a shared artifact directory plus
a full pipeline runner. Artifacts embed the config digest and upstream file
digests; stages refuse inputs whose recorded provenance does not match."""

import argparse
import os
import sys

import numpy as np

from . import __version__, _kernels
from .artifacts import (check_digest, fmt_float, read_csv, read_json,
                        sha256_file, write_csv, write_json)
from .config import load_config
from .dimension import upper_packing
from .errors import BiflabError, StaleInput, USAGE_ERRORS
from .laminar import ImageChart, classify_islands, write_pgm
from .lyapunov import (batch_exponents, ce_verdict, ExponentSeries,
                       growth_comparison_findings)
from .measure import MeasureGrid, laplacian_measure, sample
from .potential import PotentialGrid, potential_grid

POTENTIAL_BIN = "potential.bin"
MEASURE_BIN = "measure.bin"
SAMPLES_CSV = "samples.csv"
EXPONENTS_CSV = "exponents.csv"
DIMENSION_CSV = "dimension.csv"
DIMENSION_JSON = "dimension.json"
ISLANDS_JSON = "islands.json"
VERDICT_JSON = "verdict.json"
ERROR_JSON = "error.json"


def _provenance(cfg):
    return {"version": __version__, "config_digest": cfg.digest}


def _path(out, name):
    return os.path.join(out, name)


def _require(out, name):
    path = _path(out, name)
    if not os.path.exists(path):
        raise StaleInput(f"missing input artifact {name}; run the producing "
                         f"stage first")
    return path


def _load_potential(cfg, out):
    path = _require(out, POTENTIAL_BIN)
    pg = PotentialGrid.load(path)
    check_digest("config", pg.meta.get("config_digest"), cfg.digest, path)
    return pg, sha256_file(path)


def _load_measure(cfg, out):
    path = _require(out, MEASURE_BIN)
    mg = MeasureGrid.load(path)
    check_digest("config", mg.meta.get("config_digest"), cfg.digest, path)
    return mg, sha256_file(path)


def _load_samples(cfg, out, measure_digest=None):
    path = _require(out, SAMPLES_CSV)
    meta, _cols, rows = read_csv(path)
    check_digest("config", meta.get("config_digest"), cfg.digest, path)
    if measure_digest is not None:
        check_digest("measure", meta.get("source_digest"), measure_digest,
                     path)
    lams = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    return lams, meta


# -- stages -------------------------------------------------------------------

def stage_potential(cfg, out, csv=False):
    fam = cfg.build_family()
    pg = potential_grid(fam, cfg.region, cfg.nx, cfg.ny,
                        iter_budget=cfg.iter_budget, tol=cfg.tol,
                        meta=_provenance(cfg))
    pg.save(_path(out, POTENTIAL_BIN))
    if csv:
        pg.to_csv(_path(out, POTENTIAL_BIN.replace(".bin", ".csv")))
    return pg


def stage_measure(cfg, out):
    pg, _digest = _load_potential(cfg, out)
    mg = laplacian_measure(pg)
    mg.meta.update(_provenance(cfg))
    mg.save(_path(out, MEASURE_BIN))
    return mg


def stage_sample(cfg, out):
    mg, digest = _load_measure(cfg, out)
    lams = sample(mg, cfg.sample_count, cfg.seed)
    rows = ((str(i), fmt_float(l.real), fmt_float(l.imag))
            for i, l in enumerate(lams))
    meta = dict(_provenance(cfg), source_digest=digest, seed=cfg.seed)
    write_csv(_path(out, SAMPLES_CSV), meta,
              ["index", "lambda_re", "lambda_im"], rows)
    return lams


def stage_dimension(cfg, out):
    mg, digest = _load_measure(cfg, out)
    lams, _meta = _load_samples(cfg, out, measure_digest=digest)
    result = upper_packing(mg, lams, cfg.r_max, cfg.levels)
    ests = {complex(e.lam): e for e in result["estimates"]}
    rows = []
    for lam in lams:
        e = ests.get(complex(lam))
        if e is None:
            rows.append((fmt_float(lam.real), fmt_float(lam.imag),
                         "nan", "nan"))
        else:
            rows.append((fmt_float(lam.real), fmt_float(lam.imag),
                         fmt_float(e.slope), fmt_float(e.limsup_proxy)))
    meta = dict(_provenance(cfg), source_digest=digest)
    write_csv(_path(out, DIMENSION_CSV), meta,
              ["lambda_re", "lambda_im", "slope", "limsup_proxy"], rows)
    payload = {
        "Dstar": result["Dstar"],
        "percentiles": result["percentiles"],
        "counts": result["histogram"],
        "n_valid": result["n_valid"],
        "n_skipped": result["n_skipped"],
        **_provenance(cfg),
    }
    write_json(_path(out, DIMENSION_JSON), payload)
    return result


def _dstar_for_verdicts(cfg, out):
    path = _path(out, DIMENSION_JSON)
    if os.path.exists(path):
        data = read_json(path)
        check_digest("config", data.get("config_digest"), cfg.digest, path)
        return float(data["Dstar"])
    return 2.0


def stage_lyapunov(cfg, out):
    _mg, measure_digest = _load_measure(cfg, out)
    lams, _meta = _load_samples(cfg, out, measure_digest=measure_digest)
    dstar = _dstar_for_verdicts(cfg, out)
    fam = cfg.build_family()
    n_values, dyn, par, min_cd, hit = batch_exponents(fam, lams, cfg.n_max)
    rows = []
    for i, lam in enumerate(lams):
        series = ExponentSeries(lam, n_values, dyn[i], par[i], min_cd[i],
                                hit[i])
        keep = np.isfinite(series.dyn)
        flags = "ok" if hit[i] < 0 else f"critical_hit@{hit[i]}"
        if keep.any():
            trimmed = ExponentSeries(lam, series.n_values[keep],
                                     series.dyn[keep], series.par[keep],
                                     min_cd[i], hit[i])
            v = ce_verdict(trimmed, fam.degree, dstar)
            rows.append((fmt_float(lam.real), fmt_float(lam.imag),
                         str(int(trimmed.n_values[-1])),
                         fmt_float(trimmed.dyn_final),
                         fmt_float(trimmed.par_final),
                         "true" if v.holds_half else "false",
                         "true" if v.holds_refined else "false", flags))
        else:
            rows.append((fmt_float(lam.real), fmt_float(lam.imag), "0",
                         "nan", "nan", "false", "false", flags))
    meta = dict(_provenance(cfg), dstar=fmt_float(dstar),
                n_max=cfg.n_max)
    write_csv(_path(out, EXPONENTS_CSV), meta,
              ["lambda_re", "lambda_im", "n_max", "dyn", "par",
               "holds_half", "holds_refined", "flags"], rows)
    findings = growth_comparison_findings(
        np.where(np.isfinite(dyn[:, -1]), dyn[:, -1], np.nan),
        np.where(np.isfinite(par[:, -1]), par[:, -1], np.nan), min_cd)
    return rows, findings


def stage_verdict(cfg, out):
    mg, _digest = _load_measure(cfg, out)
    path = _require(out, EXPONENTS_CSV)
    meta, cols, rows = read_csv(path)
    check_digest("config", meta.get("config_digest"), cfg.digest, path)
    holds_half = np.array([r[cols.index("holds_half")] == "true"
                           for r in rows])
    holds_ref = np.array([r[cols.index("holds_refined")] == "true"
                          for r in rows])
    dyn = np.array([float(r[cols.index("dyn")]) for r in rows])
    finite = np.isfinite(dyn)
    dstar = _dstar_for_verdicts(cfg, out)
    payload = {
        "fraction_holds_half": float(holds_half.mean()) if rows else 0.0,
        "fraction_holds_refined": float(holds_ref.mean()) if rows else 0.0,
        "Dstar": dstar,
        "clipped_fraction": mg.clipped_fraction,
        "total_mass": mg.total_mass,
        "n_samples": len(rows),
        "median_dyn": float(np.median(dyn[finite])) if finite.any() else None,
        "mean_dyn": float(np.mean(dyn[finite])) if finite.any() else None,
        **_provenance(cfg),
    }
    write_json(_path(out, VERDICT_JSON), payload)
    return payload


def stage_laminar(cfg, out, masks=False):
    if cfg.laminar is None:
        raise StaleInput("config has no [laminar] section")
    fam = cfg.build_family()
    chart = ImageChart(cfg.laminar["chart_center"], cfg.laminar["chart_side"])
    report = classify_islands(fam, cfg.laminar["n"], cfg.region, chart=chart,
                              beta=cfg.laminar["beta"])
    payload = dict(report.to_json_dict(), **_provenance(cfg))
    write_json(_path(out, ISLANDS_JSON), payload)
    if masks:
        _write_mask_rasters(report, cfg, fam, out)
    return report


def _write_mask_rasters(report, cfg, fam, out, res=256):
    from .laminar import _OrbitMap
    omap = _OrbitMap(fam, report.n)
    re0, im0, re1, im1 = cfg.region
    re = re0 + (np.arange(res) + 0.5) * (re1 - re0) / res
    im = im0 + (np.arange(res) + 0.5) * (im1 - im0) / res
    hv = omap.h_values((re[None, :] + 1j * im[:, None]).ravel()).reshape(res,
                                                                         res)
    for square in report.squares:
        if not square.components:
            continue
        c0, side = square.corners
        with np.errstate(invalid="ignore"):
            mask = ((hv.real >= c0.real) & (hv.real < c0.real + side)
                    & (hv.imag >= c0.imag) & (hv.imag < c0.imag + side))
        si, sj = square.index
        write_pgm(_path(out, f"island_mask_{si:02d}_{sj:02d}.pgm"),
                  mask.astype(int))


def run_pipeline(cfg, out, csv=False):
    """potential -> measure -> sample -> dimension -> exponents -> verdict
    (dimension runs before exponents so the refined verdicts use the measured
    upper dimension), plus the island census when configured."""
    stage_potential(cfg, out, csv=csv)
    stage_measure(cfg, out)
    stage_sample(cfg, out)
    stage_dimension(cfg, out)
    stage_lyapunov(cfg, out)
    verdict = stage_verdict(cfg, out)
    if cfg.laminar is not None:
        stage_laminar(cfg, out)
    return verdict


# -- entry point ---------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="biflab",
        description="activity-measure laboratory for families of rational "
                    "maps")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config")
    common.add_argument("--out", default=None,
                        help="artifact directory (default: $BIFLAB_OUT or .)")
    common.add_argument("--threads", type=int, default=None,
                        help="cap worker threads")
    common.add_argument("--seed", type=int, default=None,
                        help="override sampling seed")
    for name in ("run", "potential", "measure", "sample", "lyapunov",
                 "dimension", "laminar", "verify-ce"):
        p = sub.add_parser(name, parents=[common])
        if name in ("run", "potential"):
            p.add_argument("--csv", action="store_true",
                           help="also export the potential grid as CSV")
        if name == "laminar":
            p.add_argument("--masks", action="store_true",
                           help="write per-square PGM rasters")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get("BIFLAB_OUT") or "."
    try:
        os.makedirs(out, exist_ok=True)
        if args.threads is not None:
            if args.threads < 1:
                raise BiflabError("--threads must be >= 1")
            _kernels.set_threads(args.threads)
        cfg = load_config(args.config, seed_override=args.seed)
        if args.command == "run":
            verdict = run_pipeline(cfg, out, csv=args.csv)
            print(f"fraction_holds_half={fmt_float(verdict['fraction_holds_half'])} "
                  f"Dstar={fmt_float(verdict['Dstar'])}")
        elif args.command == "potential":
            stage_potential(cfg, out, csv=args.csv)
        elif args.command == "measure":
            stage_measure(cfg, out)
        elif args.command == "sample":
            stage_sample(cfg, out)
        elif args.command == "dimension":
            stage_dimension(cfg, out)
        elif args.command == "lyapunov":
            stage_lyapunov(cfg, out)
        elif args.command == "verify-ce":
            stage_verdict(cfg, out)
        elif args.command == "laminar":
            stage_laminar(cfg, out, masks=args.masks)
    except BiflabError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        field = getattr(exc, "field", None)
        if field:
            payload["field"] = field
        try:
            write_json(os.path.join(out, ERROR_JSON), payload)
        except OSError:
            pass
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, USAGE_ERRORS) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
