"""Command-line entry point: ``noncausal <command> [flags]``.

Every run writes ``run_manifest.txt`` into its output directory.  The
manifest lists the resolved settings as ``key=value`` lines followed by the
SHA-256 of every output file; passing it back through ``--config`` reproduces
the run.  Exit codes: 0 ok, 2 bad input, 3 estimation did not converge,
4 degenerate importance weights, 5 undefined evaluation.
"""

import argparse
import hashlib
import logging
import os
import sys

from . import credibility as cred
from . import estimation as est
from .density import (gj_probability, lls_probability, marx_sir_forecast,
                      probability_in_bounds, sir_forecast, write_density,
                      write_forecasts, write_paths)
from .density.paths import ProbabilityForecast
from .errors import (ConvergenceError, DegenerateWeightsError, EvaluationError,
                     InputError, NoncausalError)
from .mar_process import (MarxModel, load_model, residuals, save_model,
                          simulate)
from .timeseries import (BoundsSeries, demean, format_date, load_bounds, load_panel, load_series,
                         parse_date, pct_change_yoy, save_series,
                         yoy_log_inflation)

log = logging.getLogger("noncausal")

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_DEGENERATE, EXIT_EVALUATION = 0, 2, 3, 4, 5

DESK_SCALE = {"N": 100_000, "K": 10_000, "S_resample": 1_000}
FULL_SCALE = {"N": 1_000_000, "K": 100_000, "S_resample": 10_000}

REQUIRED = {
    "transform": ("input",),
    "fit": ("series",),
    "forecast": ("model", "series", "bounds"),
    "backtest": ("series", "bounds", "origin_first", "origin_last"),
    "credibility": ("index",),
    "simulate": ("model", "n"),
}

MANIFEST_SKIP = {"config", "func"}


# -- argument parsing ------------------------------------------------------------

def _add_common(p):
    p.add_argument("--output-dir", default=".")
    p.add_argument("--config", default=None, help="key=value file; explicit flags win")
    p.add_argument("--log-level", default="WARNING")


def _add_data(p, bounds=True):
    p.add_argument("--series", help="date,value CSV")
    p.add_argument("--column", default=None, help="value column when the CSV has several")
    if bounds:
        p.add_argument("--bounds", help="date,lower,upper CSV")
    p.add_argument("--demean", action="store_true",
                   help="subtract the sample mean before fitting/forecasting")


def _add_model_settings(p):
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--p-max", type=int, default=15)
    p.add_argument("--n-starts", type=int, default=est.DEFAULT_N_STARTS)


def _add_forecast_settings(p):
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--M", type=int, default=50)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--S-resample", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--paper-scale", action="store_true",
                   help="N=1e6, K=1e5, S=1e4 instead of the desk-scale 1e5 / 1e4 / 1e3")


def build_parser():
    parser = argparse.ArgumentParser(prog="noncausal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="year-on-year transform of a level series")
    _add_common(p)
    p.add_argument("--input")
    p.add_argument("--column", default=None)
    p.add_argument("--kind", choices=("log", "pct"), default="log",
                   help="log: 100*(ln P_t - ln P_t-12); pct: percent change over 12 months")
    p.add_argument("--output-name", default="transformed.csv")

    p = sub.add_parser("fit", help="identify and estimate a MAR (optionally SMAR / MARX)")
    _add_common(p)
    _add_data(p, bounds=False)
    _add_model_settings(p)
    p.add_argument("--smar", default=None, help="D1 or D1,D2 seasonal displacements")
    p.add_argument("--exog", default=None, help="regressor panel CSV for the MARX step")
    p.add_argument("--max-lag-y", type=int, default=12)
    p.add_argument("--max-lag-x", type=int, default=4)
    p.add_argument("--diag-lags", type=int, default=24)

    p = sub.add_parser("forecast", help="probability-in-bounds forecast from a fitted model")
    _add_common(p)
    _add_data(p)
    _add_forecast_settings(p)
    p.add_argument("--model")
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--method", choices=("LLS", "GJ", "SIR"), default="LLS")
    p.add_argument("--exog", default=None)
    p.add_argument("--exog-future", default=None)
    p.add_argument("--vintage", default=None, help="panel CSV overwriting recent regressor rows")
    p.add_argument("--write-density", action="store_true", help="GJ only: density.csv")
    p.add_argument("--write-paths", action="store_true", help="SIR only: paths.csv")

    p = sub.add_parser("backtest", help="expanding-window refits and forecasts")
    _add_common(p)
    _add_data(p)
    _add_model_settings(p)
    _add_forecast_settings(p)
    p.add_argument("--origin-first")
    p.add_argument("--origin-last")
    p.add_argument("--horizons", default="1", help="comma list, e.g. 1,3,6")
    p.add_argument("--methods", default="LLS", help="comma list of LLS,GJ,SIR")

    p = sub.add_parser("credibility", help="ROC comparison of credibility indices")
    _add_common(p)
    p.add_argument("--index", action="append", help="date,value CSV (repeatable)")
    p.add_argument("--outcomes", default=None, help="date,outcome CSV with in/out")
    p.add_argument("--series", default=None, help="realized series (alternative to --outcomes)")
    p.add_argument("--column", default=None)
    p.add_argument("--bounds", default=None)
    p.add_argument("--thresholds", default=None, help="comma list; default all distinct values")

    p = sub.add_parser("simulate", help="simulate a series from a model file")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--burn", type=int, default=None)
    p.add_argument("--start", default="2000-01")
    p.add_argument("--exog", default=None, help="regressor rows for MARX models (burn-in included)")
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise InputError(f"unknown command {command}")


def _truthy(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise InputError(f"not a boolean: {text!r}")


def _read_config(path, sub):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    actions = {a.dest: a for a in sub._actions}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key.startswith("output.") or key in ("command",) or key in MANIFEST_SKIP:
            continue
        if key not in actions:
            raise InputError(f"{path}:{lineno}: unknown setting {key!r}")
        a = actions[key]
        if val == "None":
            out[key] = None
        elif isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            out[key] = _truthy(val)
        elif isinstance(a, argparse._AppendAction):
            out[key] = [v for v in val.split(";") if v]
        else:
            try:
                out[key] = a.type(val) if a.type else val
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad value for {key}: {val}") from exc
    return out


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = _subparser(parser, args.command)
        sub.set_defaults(**_read_config(args.config, sub))
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED[args.command] if getattr(args, k, None) in (None, [])]
    if missing:
        raise InputError("missing required setting(s): " +
                         ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


# -- shared helpers ------------------------------------------------------------

def _resolve_scale(args):
    profile = FULL_SCALE if getattr(args, "paper_scale", False) else DESK_SCALE
    for key, val in profile.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)


def _need_seed(args):
    if args.seed is None:
        raise InputError("--seed is required for stochastic commands")


def _outpath(args, name):
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


def write_manifest(args, outputs):
    lines = [f"command={args.command}"]
    for key in sorted(vars(args)):
        if key in MANIFEST_SKIP or key == "command":
            continue
        val = getattr(args, key)
        if isinstance(val, list):
            val = ";".join(str(v) for v in val)
        lines.append(f"{key}={val}")
    for path in outputs:
        with open(path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        lines.append(f"output.{os.path.basename(path)}.sha256={digest}")
    with open(_outpath(args, "run_manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_series(args):
    series = load_series(args.series, args.column)
    mean = 0.0
    if getattr(args, "demean", False):
        mean = float(series.values.mean())
        series = demean(series)
    return series, mean


def _shift_bounds(bounds, mean):
    if mean == 0.0:
        return bounds
    return BoundsSeries(bounds.start, bounds.lower - mean, bounds.upper - mean)


def _shift_forecast(fc, mean):
    if mean == 0.0:
        return fc
    return ProbabilityForecast(fc.origin, fc.horizon, fc.p_in_bounds, fc.p_below, fc.p_above,
                               fc.method, fc.settings, fc.point_mean + mean,
                               fc.point_median + mean, fc.ess)


# -- commands ------------------------------------------------------------------

def cmd_transform(args):
    levels = load_series(args.input, args.column)
    out = yoy_log_inflation(levels) if args.kind == "log" else pct_change_yoy(levels)
    path = _outpath(args, args.output_name)
    save_series(out, path)
    return [path]


def _fit_mar(series, args):
    if (args.r is None) != (args.s is None):
        raise InputError("give both --r and --s, or neither")
    if args.r is not None:
        return None, est.fit_mar_amle(series, args.r, args.s, args.n_starts)
    p, ar = est.fit_pseudo_causal(series, args.p_max)
    log.info("pseudo-causal order p=%d", p)
    return ar, est.select_mar(series, p, args.n_starts)


def cmd_fit(args):
    series, mean = _load_series(args)
    ar, fit = _fit_mar(series, args)
    outputs = []
    path = _outpath(args, "model.txt")
    save_model(fit.model, path)
    outputs.append(path)

    report = [f"series_mean_removed={float(mean)!r}"]
    if ar is not None:
        report.append(f"pseudo_causal_p={ar.p}")
        report += [f"pseudo_causal_bic.{p}={float(b)!r}" for p, b in sorted(ar.bic_table.items())]
    report.append(est.fit_report(fit).rstrip("\n"))

    resid = residuals(series, fit.model)
    diag = est.diagnostics(resid, args.diag_lags)
    report.append(f"jarque_bera={float(diag.jarque_bera[0])!r}")
    report.append(f"jarque_bera_pvalue={float(diag.jarque_bera[1])!r}")
    report.append("acf_flagged=" + ",".join(str(k) for k in diag.significant_displacements))
    path = _outpath(args, "diagnostics.csv")
    est.write_diagnostics_csv(diag, path)
    outputs.append(path)

    fits = [fit]
    if args.smar:
        try:
            ds = [int(x) for x in args.smar.split(",")]
        except ValueError:
            raise InputError(f"--smar expects D1 or D1,D2, got {args.smar!r}") from None
        if len(ds) not in (1, 2):
            raise InputError("--smar expects one or two displacements")
        smar = est.fit_smar(series, fit, ds[0], ds[1] if len(ds) == 2 else None, args.n_starts)
        fits.append(smar)
        report.append("[smar]")
        report.append(est.fit_report(smar).rstrip("\n"))
        path = _outpath(args, "smar_model.txt")
        save_model(smar.model, path)
        outputs.append(path)
    if args.exog:
        X = load_panel(args.exog)
        ardl = est.fit_ardl(series, X, args.max_lag_y, args.max_lag_x)
        report.append("[ardl]")
        report.append(f"ardl_p={ardl.p}")
        report.append("ardl_x_lags=" + ",".join(str(k) for k in ardl.x_lags))
        report.append(f"ardl_bic={float(ardl.bic)!r}")
        report += [f"ardl_coef.{n}={float(c)!r}" for n, c in zip(ardl.coef_names, ardl.coef)]
        r, s = fit.order
        marx = est.select_marx_offsets(series, X, r, s, args.n_starts)
        fits.append(marx)
        report.append("[marx]")
        report.append(est.fit_report(marx).rstrip("\n"))
        path = _outpath(args, "marx_model.txt")
        save_model(marx.model, path)
        outputs.append(path)

    path = _outpath(args, "fit_report.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(report) + "\n")
    outputs.append(path)
    bad = [f for f in fits if not f.converged]
    if bad:
        write_manifest(args, outputs)
        params = "; ".join(f"{n}={v:.6g}" for n, v in zip(bad[0].param_names, bad[0].params))
        raise ConvergenceError(f"optimizer did not reach a stationary point "
                               f"(gradient norm {bad[0].grad_norm:.3g}); best found: {params}")
    return outputs


def _forecast_one(method, fit, series, bounds, h, args, X=None, X_future=None, vintage=None):
    """One ProbabilityForecast plus the by-products (density or paths)."""
    if method == "LLS":
        if X is not None:
            raise InputError("LLS forecasting is not available for MARX models")
        return lls_probability(fit, series, bounds, h, args.N, args.M, args.seed), None
    if method == "GJ":
        if h != 1:
            raise InputError("the sample-based density is used for h=1 only; use SIR")
        if X is not None:
            raise InputError("GJ forecasting is not available for MARX models")
        return gj_probability(fit, series, bounds)
    if X is not None:
        paths = marx_sir_forecast(fit, series, X, X_future, h, args.K, args.S_resample,
                                  args.seed, vintage)
    else:
        paths = sir_forecast(fit, series, h, args.K, args.S_resample, args.seed)
    settings = {"K": args.K, "S": args.S_resample, "seed": args.seed}
    return probability_in_bounds(paths, bounds, "SIR", settings), paths


def cmd_forecast(args):
    _resolve_scale(args)
    if args.method != "GJ":
        _need_seed(args)
    model = load_model(args.model)
    series, mean = _load_series(args)
    bounds = _shift_bounds(load_bounds(args.bounds), mean)
    X = X_future = vintage = None
    if isinstance(model, MarxModel):
        if not (args.exog and args.exog_future):
            raise InputError("MARX forecasts need --exog and --exog-future")
        X, X_future = load_panel(args.exog), load_panel(args.exog_future)
        vintage = load_panel(args.vintage) if args.vintage else None
    fc, extra = _forecast_one(args.method, model, series, bounds, args.h, args, X, X_future,
                              vintage)
    fc = _shift_forecast(fc, mean)
    outputs = [_outpath(args, "forecast.csv")]
    write_forecasts([fc], outputs[0])
    if args.write_density and args.method == "GJ":
        dens = extra.__class__(extra.grid + mean, extra.density, extra.raw_integral,
                               extra.coarse_grid)
        outputs.append(_outpath(args, "density.csv"))
        write_density(dens, outputs[-1])
        if dens.coarse_grid:
            log.warning("density grid looks too coarse (raw integral %.3g)", dens.raw_integral)
    if args.write_paths and args.method == "SIR":
        outputs.append(_outpath(args, "paths.csv"))
        shifted = extra.__class__(extra.origin, extra.paths + mean, None, extra.ess)
        write_paths(shifted, outputs[-1])
    return outputs


def _int_list(text, what):
    try:
        vals = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what} must be a comma list of integers") from None
    if not vals or any(v < 1 for v in vals):
        raise InputError(f"{what} must be positive integers")
    return vals


def cmd_backtest(args):
    _resolve_scale(args)
    horizons = _int_list(args.horizons, "--horizons")
    methods = [m.strip().upper() for m in args.methods.split(",") if m.strip()]
    if any(m not in ("LLS", "GJ", "SIR") for m in methods):
        raise InputError("--methods accepts LLS, GJ, SIR")
    if any(m != "GJ" for m in methods):
        _need_seed(args)
    series, mean = _load_series(args)
    bounds = _shift_bounds(load_bounds(args.bounds), mean)
    first, last = parse_date(args.origin_first), parse_date(args.origin_last)
    if last < first or first < series.start or last > series.end:
        raise InputError("origins must lie inside the series")
    rows, failures = [], []
    for origin in range(first, last + 1):
        sub = series.upto(origin)
        try:
            _, fit = _fit_mar(sub, args)
        except NoncausalError as exc:
            log.warning("origin %s: fit failed: %s", format_date(origin), exc)
            failures.append(f"{format_date(origin)},fit,,{exc}")
            continue
        for h in horizons:
            for m in methods:
                if m == "GJ" and h != 1:
                    continue
                try:
                    fc, _ = _forecast_one(m, fit, sub, bounds, h, args)
                    rows.append(_shift_forecast(fc, mean))
                except NoncausalError as exc:
                    log.warning("origin %s h=%d %s failed: %s", format_date(origin), h, m, exc)
                    failures.append(f"{format_date(origin)},{m},{h},{exc}")
    outputs = [_outpath(args, "backtest.csv")]
    write_forecasts(rows, outputs[0])
    outputs.append(_outpath(args, "failures.csv"))
    with open(outputs[-1], "w", encoding="utf-8") as fh:
        fh.write("origin_date,stage,horizon,message\n")
        for line in failures:
            fh.write(line.replace("\n", " ") + "\n")
    return outputs


def cmd_credibility(args):
    indices = []
    for path in args.index:
        indices.append(cred.load_index(path))
    if args.outcomes:
        outcomes = cred.load_outcomes(args.outcomes)
    elif args.series and args.bounds:
        outcomes = cred.realized_outcomes(load_series(args.series, args.column),
                                          load_bounds(args.bounds))
    else:
        raise InputError("give --outcomes, or --series with --bounds")
    thresholds = None
    if args.thresholds:
        try:
            thresholds = [float(x) for x in args.thresholds.split(",")]
        except ValueError:
            raise InputError("--thresholds must be a comma list of numbers") from None
    report = cred.compare_indices(indices, outcomes, thresholds)
    path = _outpath(args, "roc.csv")
    cred.write_roc_csv(report, path)
    return [path]


def cmd_simulate(args):
    _need_seed(args)
    if args.n < 1:
        raise InputError("--n must be >= 1")
    model = load_model(args.model)
    X = load_panel(args.exog) if args.exog else None
    series, eps = simulate(model, args.n, args.seed, X=X, burn=args.burn,
                           start=parse_date(args.start))
    outputs = [_outpath(args, "simulated.csv"), _outpath(args, "innovations.csv")]
    save_series(series, outputs[0])
    save_series(eps, outputs[1])
    return outputs


COMMANDS = {
    "transform": cmd_transform, "fit": cmd_fit, "forecast": cmd_forecast,
    "backtest": cmd_backtest, "credibility": cmd_credibility, "simulate": cmd_simulate,
}


def exit_code(exc):
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, DegenerateWeightsError):
        return EXIT_DEGENERATE
    if isinstance(exc, EvaluationError):
        return EXIT_EVALUATION
    return EXIT_INPUT


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except NoncausalError as exc:
        print(f"noncausal: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outputs = COMMANDS[args.command](args)
        write_manifest(args, outputs)
    except NoncausalError as exc:
        print(f"noncausal: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
