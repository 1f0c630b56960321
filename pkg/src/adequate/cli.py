"""Command-line front end (installed as ``adequate``).

One dataset, one run: every subcommand reads a dataset (file path or
built-in name), performs one analysis and writes a JSON summary whose
``config`` block replays the run exactly.  All randomness derives from
the single ``--seed`` flag.

Exit codes: 0 success, 1 analysis failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import gauss_region as gr
from . import io
from . import m_functional as mf
from . import poisson_adequacy as pa
from . import stepwise as sw
from .errors import AdequateError
from .gauss_region import DEFAULT_SEED, GridConfig, SimConfig


def _sim_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="master seed for every simulated table (default %(default)s)")
    parser.add_argument("--table-replications", type=int,
                        default=gr.DEFAULT_TABLE_REPLICATIONS,
                        help="replications behind the feature null tables")
    parser.add_argument("--calibration-replications", type=int,
                        default=gr.DEFAULT_CALIBRATION_REPLICATIONS,
                        help="replications behind the joint-coverage calibration")


def _out_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-json", help="write the JSON summary here")
    parser.add_argument("--out-csv", help="write the point grid here")


def _sim_config(args) -> SimConfig:
    return SimConfig(seed=args.seed,
                     table_replications=args.table_replications,
                     calibration_replications=args.calibration_replications)


def _grid_config(args) -> GridConfig:
    return GridConfig(mu_points=args.grid_points, sigma_points=args.grid_points)


def _config_echo(args, command: str) -> dict:
    skip = {"handler", "out_json", "out_csv"}
    echo = {k: v for k, v in vars(args).items() if k not in skip}
    echo["command"] = command
    return echo


def _apply_edits(values: np.ndarray, args) -> np.ndarray:
    out = values.copy()
    for spec in args.replace or ():
        idx, _, val = spec.partition("=")
        out[int(idx)] = float(val)
    for idx in sorted(args.drop or (), reverse=True):
        out = np.delete(out, idx)
    return out


def _interval(pair) -> list | None:
    return None if pair is None else [float(pair[0]), float(pair[1])]


# ------------------------------------------------------------------ #
# Subcommand handlers
# ------------------------------------------------------------------ #


def _cmd_gauss(args) -> dict:
    data = _apply_edits(io.load_values(args.data), args)
    config = _sim_config(args)
    grid = _grid_config(args)
    if args.alpha_tilde is None:
        calibration = gr.calibrate(data.size, args.alpha, config)
        alpha_tilde = calibration.alpha_tilde
    else:
        calibration = None
        alpha_tilde = args.alpha_tilde
    region = gr.region_scan(data, args.alpha, config, grid=grid,
                            alpha_tilde=alpha_tilde)
    t_int = gr.t_confidence_interval(data, args.alpha)
    payload = {
        "config": _config_echo(args, "gauss"),
        "n": int(data.size),
        "alpha_tilde": alpha_tilde,
        "calibration": None if calibration is None else {
            "alpha": calibration.alpha,
            "alpha_tilde": calibration.alpha_tilde,
            "alpha_effective": calibration.alpha_effective,
        },
        "mu_projection": _interval(gr.mu_projection(region)),
        "sigma_projection": _interval(gr.sigma_projection(region)),
        "point_count": region.point_count,
        "t_interval": [t_int.lo, t_int.hi],
        "t_interval_degenerate": t_int.degenerate,
    }
    if args.diagnostics:
        diag = gr.min_alpha_nonempty(data, config, grid=grid)
        rp = gr.region_p_value(data, config, grid=grid)
        payload["diagnostics"] = {
            "p_star": diag.p_star,
            "region_p": rp.region_p,
            "p_of_p": rp.p_of_p,
        }
    if args.m50:
        payload["m50"] = gr.subsample_fit_size(
            data, args.alpha,
            SimConfig(seed=args.seed, table_replications=20_000,
                      calibration_replications=5_000))
    if args.out_csv:
        io.write_region_csv(args.out_csv, region)
    print(f"n={data.size}  alpha={args.alpha}  alpha_tilde={alpha_tilde:.4f}  "
          f"points={region.point_count}")
    print(f"mu projection: {payload['mu_projection']}")
    print(f"t interval:    {payload['t_interval']}")
    return payload


def _cmd_gauss_test(args) -> dict:
    data = _apply_edits(io.load_values(args.data), args)
    config = _sim_config(args)
    result = gr.test_mu_bound(data, args.mu0, args.direction, config)
    if args.direction == "ge":
        t_p = gr.t_test_pvalue(data, args.mu0)
    else:
        t_p = 1.0 - gr.t_test_pvalue(data, args.mu0)
    payload = {
        "config": _config_echo(args, "gauss-test"),
        "n": int(data.size),
        "p_star": result.p_star,
        "sigma_at": result.sigma_at,
        "t_pvalue": t_p,
        "sd": float(np.std(data, ddof=1)),
    }
    print(f"H0: mu {'>=' if args.direction == 'ge' else '<='} {args.mu0}")
    print(f"region p* = {result.p_star:.6g}  (sigma at {result.sigma_at:.4f})")
    print(f"t-test p  = {t_p:.6g}")
    return payload


def _cmd_m_region(args) -> dict:
    data = _apply_edits(io.load_values(args.data), args)
    cfg = mf.MConfig(c=args.c)
    region = mf.m_region(data, args.alpha, cfg, config=_sim_config(args),
                         grid=_grid_config(args))
    est = region.estimate
    payload = {
        "config": _config_echo(args, "m-region"),
        "n": int(data.size),
        "estimate": {"t_l": est.t_l, "t_s": est.t_s},
        "alpha_tilde": region.alpha_tilde,
        "qdk": region.qdk,
        "tl_projection": _interval(mf.tl_projection(region)),
        "ts_projection": _interval(mf.ts_projection(region)),
        "point_count": region.point_count,
    }
    if args.out_csv:
        io.write_m_region_csv(args.out_csv, region)
    print(f"functional: ({est.t_l:.4f}, {est.t_s:.4f})  points={region.point_count}")
    print(f"t_l projection: {payload['tl_projection']}")
    return payload


def _cmd_m_test(args) -> dict:
    data = _apply_edits(io.load_values(args.data), args)
    result = mf.test_tl_bound(data, args.bound, mf.MConfig(c=args.c))
    payload = {
        "config": _config_echo(args, "m-test"),
        "n": int(data.size),
        "p_star": result.p_star,
        "scale_at": result.scale_at,
    }
    print(f"H0: t_l >= {args.bound}: p* = {result.p_star:.6g}")
    return payload


def _cmd_poisson(args) -> dict:
    counts = io.load_counts(args.data)
    sample = pa.CountSample.from_counts(counts, k=args.k)
    mean = float(counts.mean())
    lo = args.lambda_min if args.lambda_min is not None else max(mean / 4.0, 1e-3)
    hi = args.lambda_max if args.lambda_max is not None else mean * 3.0
    grid = np.linspace(lo, hi, args.lambda_points)
    result = pa.lambda_adequacy_set(sample, args.alpha, grid,
                                    replications=args.replications, seed=args.seed)
    kept = result.values
    payload = {
        "config": _config_echo(args, "poisson"),
        "n": sample.n,
        "k": sample.k,
        "family_statistic": pa.chisq_family_stat(sample),
        "adequate_lambda": None if result.empty else [float(kept.min()),
                                                      float(kept.max())],
        "adequate_count": int(kept.size),
    }
    if args.out_csv:
        io.write_points_csv(args.out_csv, ["lambda", "statistic", "critical"],
                            [result.grid, result.statistics, result.critical_values])
    print(f"n={sample.n}  cells=0..{sample.k}+overflow")
    print(f"adequate rates: {payload['adequate_lambda']} "
          f"({payload['adequate_count']} grid points)")
    return payload


def _cmd_stepwise(args) -> dict:
    data = io.load_regression(args.data, args.response)
    result = sw.run_selection(data, args.alpha, center=not args.no_center)
    payload = {
        "config": _config_echo(args, "stepwise"),
        "n": data.n,
        "p": data.p,
        "selected": result.selected,
        "selected_labels": result.labels,
        "skipped_collinear": result.skipped,
        "steps": [{"index": s.index, "label": s.label, "ss": s.ss_after,
                   "p_value": s.p_value, "stopped": s.stopped} for s in result.steps],
    }
    for s in result.steps:
        mark = "stop" if s.stopped else "take"
        print(f"{mark}  {s.label:>12}  ss={s.ss_after:.6g}  p={s.p_value:.3e}")
    print(f"selected: {result.labels}")
    return payload


def _cmd_calibrate(args) -> dict:
    calibration = gr.calibrate(args.n, args.alpha, _sim_config(args))
    payload = {
        "config": _config_echo(args, "calibrate"),
        "alpha": calibration.alpha,
        "alpha_start": calibration.alpha_start,
        "alpha_star": calibration.alpha_star,
        "alpha_tilde": calibration.alpha_tilde,
        "alpha_effective": calibration.alpha_effective,
    }
    print(f"n={args.n} alpha={args.alpha}: alpha_tilde={calibration.alpha_tilde:.4f} "
          f"(start {calibration.alpha_start:.4f}, coverage "
          f"{calibration.alpha_effective:.4f})")
    return payload


def _cmd_sweep(args) -> dict:
    data = io.load_values(args.data)
    index = args.index if args.index is not None else int(np.argmax(data))
    rows = gr.outlier_sweep(data, index, args.step, args.count,
                            _sim_config(args), alpha=args.alpha, mode=args.mode,
                            include_p_of_p=args.p_of_p)
    payload = {
        "config": _config_echo(args, "sweep"),
        "index": index,
        "rows": [{"value": r.value, "region_p": r.region_p, "p_star": r.p_star,
                  "point_count": r.point_count, "p_of_p": r.p_of_p} for r in rows],
    }
    if args.out_csv:
        io.write_sweep_csv(args.out_csv, rows)
    for r in rows:
        print(f"value={r.value:.4f}  region_p={r.region_p:.3f}  "
              f"p*={r.p_star:.4f}  points={r.point_count}")
    return payload


def _cmd_validate(args) -> dict:
    payload = {"config": _config_echo(args, "validate")}
    if args.which in ("beta-law", "all"):
        report = sw.validate_beta_law(args.n, args.p0, replications=args.replications,
                                      seed=args.seed)
        payload["beta_law"] = {
            "ks_distance": report.ks_distance,
            "ks_threshold": report.ks_threshold,
            "mean_stat": report.mean_stat,
            "expected_mean": report.expected_mean,
            "passed": report.passed,
        }
        print(f"beta law  n={args.n} p0={args.p0}: KS {report.ks_distance:.4f} "
              f"(limit {report.ks_threshold:.4f}) -> "
              f"{'ok' if report.passed else 'FAIL'}")
    if args.which in ("m-clt", "all"):
        loc, scale = mf.normal_population_functional()
        at = mf.m_alpha_tilde(args.alpha)
        q_psi, _ = mf.m_exact_quantiles(
            lambda g, size: g.standard_normal(size), loc, scale, at, args.n,
            replications=args.replications, seed=args.seed)
        closed = mf.normal_approx_psi_quantile(at, scale)
        payload["m_clt"] = {"simulated": q_psi, "normal_approx": closed,
                            "relative_gap": abs(q_psi - closed) / closed}
        print(f"moment-sum quantile n={args.n}: simulated {q_psi:.4f} vs "
              f"normal approximation {closed:.4f}")
    return payload


# ------------------------------------------------------------------ #
# Parser
# ------------------------------------------------------------------ #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adequate",
        description="Adequacy regions, robust functionals and noise-gated selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("gauss", _cmd_gauss, "normal-family adequacy region for a sample")
    p.add_argument("--data", required=True, help="input path or built-in name")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--alpha-tilde", type=float, default=None,
                   help="fix the per-feature level instead of calibrating")
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--replace", action="append", metavar="IDX=VALUE",
                   help="overwrite one observation before the analysis")
    p.add_argument("--drop", action="append", type=int, metavar="IDX",
                   help="remove one observation before the analysis")
    p.add_argument("--diagnostics", action="store_true",
                   help="add p*, region p-value and its null position")
    p.add_argument("--m50", action="store_true",
                   help="add the subsample-size diagnostic (slow)")
    _sim_options(p)
    _out_options(p)

    p = add("gauss-test", _cmd_gauss_test, "region-based test of a location bound")
    p.add_argument("--data", required=True)
    p.add_argument("--mu0", type=float, required=True)
    p.add_argument("--direction", choices=("ge", "le"), default="ge")
    p.add_argument("--replace", action="append", metavar="IDX=VALUE")
    p.add_argument("--drop", action="append", type=int, metavar="IDX")
    _sim_options(p)
    _out_options(p)

    p = add("m-region", _cmd_m_region, "adequacy region of the M-functional")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--c", type=float, default=5.0, help="psi tuning constant")
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--replace", action="append", metavar="IDX=VALUE")
    p.add_argument("--drop", action="append", type=int, metavar="IDX")
    _sim_options(p)
    _out_options(p)

    p = add("m-test", _cmd_m_test, "test a lower bound on the location functional")
    p.add_argument("--data", required=True)
    p.add_argument("--bound", type=float, required=True)
    p.add_argument("--c", type=float, default=5.0)
    p.add_argument("--replace", action="append", metavar="IDX=VALUE")
    p.add_argument("--drop", action="append", type=int, metavar="IDX")
    _sim_options(p)
    _out_options(p)

    p = add("poisson", _cmd_poisson, "adequate Poisson rates for count data")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--k", type=int, default=None, help="cell truncation index")
    p.add_argument("--lambda-min", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--lambda-points", type=int, default=61)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _out_options(p)

    p = add("stepwise", _cmd_stepwise, "noise-gated forward selection")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--no-center", action="store_true",
                   help="skip centering the response and covariates")
    _out_options(p)

    p = add("calibrate", _cmd_calibrate, "per-feature level for a target content")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.9)
    _sim_options(p)
    _out_options(p)

    p = add("sweep", _cmd_sweep, "region quality versus one shifted observation")
    p.add_argument("--data", required=True)
    p.add_argument("--index", type=int, default=None,
                   help="observation to shift (default: the largest)")
    p.add_argument("--step", type=float, default=0.06875)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--mode", choices=("replace", "drop"), default="replace")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--p-of-p", action="store_true",
                   help="add the null position of each region p-value (slow)")
    _sim_options(p)
    _out_options(p)

    p = add("validate", _cmd_validate, "internal Monte Carlo validators")
    p.add_argument("--which", choices=("beta-law", "m-clt", "all"), default="all")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--p0", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--replications", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _out_options(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = args.handler(args)
    except AdequateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "out_json", None):
        io.write_json(args.out_json, payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
