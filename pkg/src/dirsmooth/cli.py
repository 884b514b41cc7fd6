"""Command-line entry point ``dirsmooth``.

Every subcommand accepts ``--config FILE`` with a JSON object whose keys are
that subcommand's option names; explicit flags override the file.  Exit codes:
0 success, 2 configuration error, 3 data error, 4 fit failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import bingham2, fileio, local_glm, sim_bench, sphere_axial, vmf_core
from .errors import DataError, DirsmoothError, DomainError, FitError

logger = logging.getLogger("dirsmooth")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_FIT = 4

DATASET_HEADER = ("x1", "x2", "y1", "y2")
AXIAL_HEADER = ("x1", "x2", "x3", "v1", "v2", "v3")
SMOOTH_HEADER = ("x1", "x2", "z1", "z2", "mu1", "mu2", "converged")
SPHERE_HEADER = ("x1", "x2", "x3", "f1", "f2", "f3", "kappa", "gammaprime")
TABLE_HEADER = ("order", "N", "bias", "sd", "rmse")
BIAS_HEADER = ("x1", "x2", "b1", "b2")


class ConfigError(DirsmoothError, ValueError):
    """Invalid command configuration."""


# --------------------------------------------------------------------------
# option parsing helpers


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise ValueError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise ValueError(f"expected a non-negative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not np.isfinite(v):
        raise ValueError(f"expected a positive number, got {text}")
    return v


def _order(text):
    v = int(text)
    if v not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {text}")
    return v


def _int_list(text):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_positive_int(str(s).strip()) for s in items)


def _order_list(text):
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    return tuple(_order(str(s).strip()) for s in items)


def parse_grid(text):
    """``"AxB"`` on [-1, 1]^2 or ``"AxB:lo1,hi1,lo2,hi2"``; returns an (A*B, 2) array."""
    text = str(text).replace("×", "x")
    shape, _, box = text.partition(":")
    parts = shape.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"bad grid spec {text!r}")
    m1, m2 = (int(p) for p in parts)
    if m1 < 1 or m2 < 1:
        raise ValueError(f"bad grid spec {text!r}")
    lo1, hi1, lo2, hi2 = (-1.0, 1.0, -1.0, 1.0)
    if box:
        lo1, hi1, lo2, hi2 = (float(v) for v in box.split(","))
    g1, g2 = np.meshgrid(np.linspace(lo1, hi1, m1), np.linspace(lo2, hi2, m2), indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def parse_points(text):
    """Inline query points ``"x1,x2;x1,x2;..."``."""
    rows = [r for r in str(text).split(";") if r.strip()]
    pts = np.array([[float(v) for v in r.split(",")] for r in rows], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be pairs x1,x2 separated by ';'")
    return pts


# option tables: name -> (converter, default, help)
_COMMON = {
    "seed": (int, 2025, "random seed"),
}

OPTIONS = {
    "simulate": {
        "out": (str, "dataset.csv", "dataset CSV path"),
        "manifest": (str, None, "manifest JSON path (default: <out>.manifest.json)"),
        "n": (_positive_int, 4000, "number of observations"),
        "sim_index": (_nonneg_int, 0, "simulation index"),
        **_COMMON,
    },
    "smooth": {
        "data": (str, None, "dataset CSV with columns x1,x2,y1,y2"),
        "out": (str, "smooth.csv", "output CSV path"),
        "segments": (str, None, "vector-field CSV path (default: <out>.segments.csv)"),
        "segment_scale": (_positive_float, 0.18, "display scale of the vector field"),
        "order": (_order, 1, "local polynomial order"),
        "nn": (_positive_float, 200.0, "effective sample size N"),
        "grid": (str, "21x21", "query grid, AxB or AxB:lo1,hi1,lo2,hi2"),
        "points": (str, None, "inline query points x1,x2;x1,x2 (overrides --grid)"),
        "eps": (_positive_float, 1e-8, "relative gradient tolerance of Newton's method"),
    },
    "sphere-smooth": {
        "data": (str, None, "axial CSV with columns x1,x2,x3,v1,v2,v3"),
        "out": (str, "sphere_fits.csv", "output CSV path"),
        "segments": (str, None, "segment CSV path (default: <out>.segments.csv)"),
        "segment_scale": (_positive_float, 0.1, "display scale of the axis segments"),
        "order": (_order, 1, "local polynomial order"),
        "nn": (_positive_float, 200.0, "effective sample size N"),
        "fit_points": (_positive_int, 200, "number of evenly spread fit points"),
        "eps": (_positive_float, 1e-8, "relative gradient tolerance of Newton's method"),
    },
    "diagnose": {
        "data": (str, None, "axial CSV used for the fits"),
        "fits": (str, None, "fit CSV written by sphere-smooth"),
        "out": (str, "diagnostics.json", "output JSON path"),
    },
    "table1": {
        "out": (str, "table1.csv", "error table CSV path"),
        "text": (str, None, "aligned text table path (default: <out>.txt)"),
        "bias_dir": (str, None, "directory for per-cell bias field CSVs"),
        "bias_scale": (_positive_float, 0.7, "display scale recorded for bias plots"),
        "n": (_positive_int, 4000, "observations per simulation"),
        "sims": (_positive_int, 20, "number of simulations"),
        "nn": (_int_list, (200, 400), "comma-separated effective sample sizes"),
        "order": (_order_list, (0, 1, 2), "comma-separated orders"),
        "grid": (_positive_int, 21, "grid points per axis"),
        "full_scale": (bool, False, "100 simulations and N = 100, 200, ..., 800"),
        **_COMMON,
    },
    "bingham-plot": {
        "kappa": (_positive_float, 1.0, "concentration"),
        "beta": (float, 0.0, "axis angle in radians"),
        "resolution": (_positive_int, 720, "number of angles"),
        "density_out": (str, "bingham_density.csv", "CSV of theta,density"),
        "curve_out": (str, "bingham_curve.csv", "CSV of the axial histogram curve"),
    },
}

REQUIRED = {"smooth": ("data",), "sphere-smooth": ("data",), "diagnose": ("data", "fits")}


def build_parser():
    parser = argparse.ArgumentParser(prog="dirsmooth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        p = sub.add_parser(cmd, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with option values")
        for name, (conv, default, text) in opts.items():
            flag = "--" + name.replace("_", "-")
            if conv is bool:
                p.add_argument(flag, dest=name, action="store_true", help=text)
            else:
                p.add_argument(flag, dest=name, type=conv, help=f"{text} (default: {default})")
    return parser


def resolve_options(command, namespace):
    """Defaults, then the JSON config file, then explicit flags."""
    opts = OPTIONS[command]
    merged = {name: default for name, (_, default, _) in opts.items()}
    flags = {k: v for k, v in vars(namespace).items() if k in opts}
    path = getattr(namespace, "config", None)
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        for key, value in raw.items():
            name = key.replace("-", "_")
            if name not in opts:
                raise ConfigError(f"unknown config key {key!r} for {command}")
            conv = opts[name][0]
            try:
                if conv is bool:
                    if not isinstance(value, bool):
                        raise ValueError("expected true or false")
                    merged[name] = value
                elif conv in (_int_list, _order_list):
                    merged[name] = conv(value)
                else:
                    merged[name] = conv(str(value))
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None
    merged.update(flags)
    for name in REQUIRED.get(command, ()):
        if merged[name] is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required")
    return merged


# --------------------------------------------------------------------------
# commands


def _sidecar(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


def cmd_simulate(o):
    cfg = sim_bench.StudyConfig(n=max(o["n"], 2), seed=o["seed"], n_eff_list=(1,))
    data = sim_bench.gen_dataset(cfg, o["sim_index"], n=o["n"])
    fileio.write_csv(o["out"], DATASET_HEADER, np.hstack([data.x, data.y]))
    manifest = o["manifest"] or _sidecar(o["out"], ".manifest.json")
    fileio.write_json(
        manifest,
        {
            "seed": o["seed"],
            "n": o["n"],
            "sim_index": o["sim_index"],
            "generator_version": sim_bench.GENERATOR_VERSION,
        },
    )
    return EXIT_OK


def _load_dataset(path):
    arr = fileio.read_csv(path, DATASET_HEADER)
    try:
        return local_glm.Dataset(arr[:, :2], arr[:, 2:])
    except (ValueError, DomainError) as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_smooth(o):
    data = _load_dataset(o["data"])
    try:
        points = parse_points(o["points"]) if o["points"] is not None else parse_grid(o["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not o["nn"] < data.n:
        raise ConfigError(f"--nn must be smaller than the sample size {data.n}")
    rows = []
    segments = []
    failed = 0
    for x_o in points:
        try:
            wp = local_glm.solve_weight_scale(data, x_o, o["nn"])
            z, model = local_glm.smooth_at(data, x_o, o["order"], o["nn"], wp=wp, rtol=o["eps"])
            mu = vmf_core.vmf_moments(z).mu
            ok = bool(model.converged)
        except (FitError, DomainError) as exc:
            logger.warning("fit at %s failed: %s", x_o.tolist(), exc)
            z = mu = np.full(2, np.nan)
            ok = False
            failed += 1
        if not ok:
            logger.warning("fit at %s did not converge", x_o.tolist())
        rows.append([x_o[0], x_o[1], z[0], z[1], mu[0], mu[1], ok])
        end = x_o + o["segment_scale"] * mu
        segments.append([x_o[0], x_o[1], end[0], end[1]])
    fileio.write_csv(o["out"], SMOOTH_HEADER, rows)
    fileio.write_csv(
        o["segments"] or _sidecar(o["out"], ".segments.csv"),
        ("x1", "x2", "x1_end", "x2_end"),
        segments,
    )
    return EXIT_FIT if failed else EXIT_OK


def _load_axial(path):
    arr = fileio.read_csv(path, AXIAL_HEADER)
    return sphere_axial.AxialData.from_arrays(arr[:, :3], arr[:, 3:])


def cmd_sphere_smooth(o):
    data = _load_axial(o["data"])
    idx = sphere_axial.farthest_point_subsample(data.points, o["fit_points"])
    rows = []
    segments = []
    dropped = 0
    unconverged = 0
    for i in idx:
        x_o = data.points[i]
        fit = sphere_axial.fit_axial(x_o, data, o["order"], o["nn"], rtol=o["eps"])
        dropped += fit.dropped
        unconverged += not fit.converged
        f = fit.f_hat
        rows.append([*fit.x_o, *f, fit.kappa, fit.gamma_prime])
        a, b = fit.segment(o["segment_scale"])
        segments.append([*a, *b])
    if dropped:
        logger.warning("%d antipodal observation(s) dropped across all fits", dropped)
    if unconverged:
        logger.warning("%d fit(s) did not converge", unconverged)
    fileio.write_csv(o["out"], SPHERE_HEADER, rows)
    fileio.write_csv(
        o["segments"] or _sidecar(o["out"], ".segments.csv"),
        ("a1", "a2", "a3", "b1", "b2", "b3"),
        segments,
    )
    return EXIT_FIT if unconverged else EXIT_OK


def cmd_diagnose(o):
    data = _load_axial(o["data"])
    arr = fileio.read_csv(o["fits"], SPHERE_HEADER)
    fits = []
    axes = []
    for line_no, row in enumerate(arr, start=2):
        x_o, f = row[:3], row[3:6]
        dist = np.sum((data.points - x_o) ** 2, axis=1)
        j = int(np.argmin(dist))
        if dist[j] > 1e-20:
            raise DataError(f"{o['fits']}: line {line_no}: location is not an observation")
        fits.append(
            sphere_axial.BinghamFieldFit(x_o=x_o, f_hat=f, order=-1, n_eff=float("nan"))
        )
        axes.append(data.axes[j])
    report = sphere_axial.diagnostics(fits, np.array(axes))
    fileio.write_json(
        o["out"],
        {
            "r2_model": report.r2_model,
            "r2_residual": report.r2_residual,
            "ratio": report.ratio,
            "points_used": report.points_used,
        },
    )
    print(json.dumps({"r2_model": report.r2_model, "r2_residual": report.r2_residual,
                      "ratio": report.ratio}))
    return EXIT_OK


def cmd_table1(o):
    sims, nn = o["sims"], o["nn"]
    if o["full_scale"]:
        sims, nn = 100, sim_bench.TABLE1_N
    try:
        cfg = sim_bench.StudyConfig(
            n=o["n"], sims=sims, n_eff_list=tuple(nn), orders=tuple(o["order"]),
            seed=o["seed"], grid_size=o["grid"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def progress(done, total):
        logger.info("table1: simulation %d of %d", done, total)

    result = sim_bench.run_study(cfg, progress=progress)
    rows = result.table()
    fileio.write_csv(
        o["out"], TABLE_HEADER, [[r.order, r.n_eff, r.bias, r.sd, r.rmse] for r in rows]
    )
    text = sim_bench.format_table(rows) + "\n"
    fileio.atomic_write_text(o["text"] or _sidecar(o["out"], ".txt"), text)
    if o["bias_dir"] is not None:
        os.makedirs(o["bias_dir"], exist_ok=True)
        for order, n_eff in result.cells():
            b = result.bias_field(order, n_eff)
            path = os.path.join(o["bias_dir"], f"bias_order{order}_N{n_eff}.csv")
            fileio.write_csv(path, BIAS_HEADER, np.hstack([result.grid, b]))
        fileio.write_json(
            os.path.join(o["bias_dir"], "plot.json"),
            {"display_scale": o["bias_scale"], "seed": cfg.seed, "sims": cfg.sims},
        )
    sys.stdout.write(text)
    return EXIT_OK


def cmd_bingham_plot(o):
    w = bingham2.BinghamAxisParam.from_polar(o["kappa"], o["beta"])
    theta = np.linspace(0.0, 2.0 * np.pi, o["resolution"], endpoint=False)
    dens = bingham2.bh_angular_density(w, theta)
    fileio.write_csv(o["density_out"], ("theta", "density"), np.column_stack([theta, dens]))
    curve = bingham2.axial_histogram_curve(w, o["resolution"])
    fileio.write_csv(o["curve_out"], ("c1", "c2"), curve)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "smooth": cmd_smooth,
    "sphere-smooth": cmd_sphere_smooth,
    "diagnose": cmd_diagnose,
    "table1": cmd_table1,
    "bingham-plot": cmd_bingham_plot,
}


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        options = resolve_options(ns.command, ns)
        return COMMANDS[ns.command](options)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, DomainError) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
