"""Command-line interface: ``gnarspec <command> [options]``.

Exit codes: 0 on success, 1 when an estimator fails (singular design,
non-invertible spectrum, no connected threshold graph), 2 on invalid or
missing input.

File formats
------------
edge list     one edge per line, ``i j [weight]``, 1-based; optional
              ``d=<n>`` header; ``#`` starts a comment.  ``net5`` and
              ``net10`` name the shipped benchmark networks.
panel CSV     header of node names, one row per time step, no index.
params JSON   {"p", "s", "alpha", "beta", "sigma2" or "V"}.
field JSON    {"kind", "d", "grid", "matrices"}; complex entries are
              [re, im] pairs, coherence fields are plain reals.
pair CSV      long format (omega, i, j, value), 1-based nodes.
OHLC CSV      columns date, node, open, high, low, close.
bench spec    JSON with the keys of ExperimentSpec (models, networks, T,
              R, methods, mode, seed, p_max, s_max, var_p_max, bandwidth).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import io as gio
from .bench import ExperimentSpec, builtin_models, run_experiment, run_hierarchy_experiment
from .gfevd import ohlc_pipeline
from .gnar import EstimationError, GnarOrder, fit_ols, gnar_bic, select_order_bic, simulate
from .graph import Network, NetworkContext
from .hierarchy import hierarchy
from .io import InputError
from .periodogram import PENALTIES, SmoothingSpec, np_spectrum_penalized, parametric_var_penalized
from .spectra import coherence, fourier_grid, gnar_spectrum, partial_coherence, precision

DEFAULT_SEED = 20240601
BUILTIN_SPECS = ("table2-trend",)
TARGET_FUNCS = {
    "spectrum": lambda f: f,
    "precision": precision,
    "coherence": coherence,
    "partial_coherence": partial_coherence,
}

log = logging.getLogger("gnarspec")


def _network(arg):
    if arg in ("net5", "net10") and not Path(arg).exists():
        return gio.builtin_network(arg)
    return gio.read_edge_list(arg)


def _context(args):
    return NetworkContext.from_network(_network(args.network), weights=args.weights)


def _params(args):
    if args.params is not None:
        return gio.read_params_json(args.params)
    if args.model is not None:
        return builtin_models()[args.model]
    raise InputError("give --params FILE or --model M1..M5")


def _order(args):
    if args.p is None:
        return None
    s = [int(v) for v in args.s.split(",")] if args.s else [1] * args.p
    if len(s) != args.p:
        raise InputError(f"--s needs {args.p} comma-separated stages")
    return GnarOrder(args.p, s)


def _check_output(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise InputError(f"output directory does not exist: {parent}")
    return Path(path)


def _smoothing(args, T):
    if args.bandwidth is None:
        return SmoothingSpec.default(T)
    return SmoothingSpec.daniell(args.bandwidth)


def _write_field(field, out, csv_path, part):
    gio.write_field_json(out, field)
    if csv_path:
        gio.write_pair_csv(csv_path, field, part)


def cmd_simulate(args):
    out = _check_output(args.output)
    ctx = _context(args)
    params = _params(args)
    params.order.check_against(ctx)
    X = simulate(params, ctx, args.T, burn_in=args.burn_in, seed=args.seed)
    gio.write_panel_csv(out, X)
    meta = {"seed": args.seed, "T": args.T, "burn_in": args.burn_in, "order": str(params.order)}
    gio.write_params_json(out.with_suffix(".meta.json"), params, **meta)
    log.info("wrote %s (%d x %d)", out, *X.shape)


def cmd_fit(args):
    out = _check_output(args.output)
    ctx = _context(args)
    _, X = gio.read_panel_csv(args.data)
    order = _order(args)
    if order is None:
        order = select_order_bic(X, ctx, args.p_max, min(args.s_max, ctx.r_max))
        log.info("BIC selected %s", order)
    order.check_against(ctx)
    params, _ = fit_ols(X, order, ctx)
    gio.write_params_json(out, params, order=str(order), bic=gnar_bic(X, order, ctx))


def cmd_spectrum(args):
    out = _check_output(args.output)
    ctx = _context(args)
    params = _params(args)
    params.order.check_against(ctx)
    field = TARGET_FUNCS[args.target](gnar_spectrum(params, ctx, fourier_grid(args.T)))
    _write_field(field, out, args.csv, args.part)


def cmd_np_spectrum(args):
    out = _check_output(args.output)
    _, X = gio.read_panel_csv(args.data)
    ctx = _context(args) if args.network else None
    if args.penalty != "none" and ctx is None:
        raise InputError(f"--penalty {args.penalty} needs --network")
    if args.var:
        field = parametric_var_penalized(X, args.var_p, args.penalty, ctx, args.rstar, p_max=args.p_max)
    else:
        field = np_spectrum_penalized(X, ctx, args.penalty, args.rstar, _smoothing(args, X.shape[0]))
    _write_field(TARGET_FUNCS[args.target](field), out, args.csv, args.part)


def cmd_hierarchy(args):
    outdir = Path(args.output_dir)
    if outdir.exists() and not outdir.is_dir():
        raise InputError(f"not a directory: {outdir}")
    _check_output(outdir)
    ctx = _context(args)
    if args.data:
        _, X = gio.read_panel_csv(args.data)
        order = _order(args) or select_order_bic(X, ctx, args.p_max, min(args.s_max, ctx.r_max))
        params, _ = fit_ols(X, order, ctx)
        grid = fourier_grid(X.shape[0])
    else:
        params = _params(args)
        grid = fourier_grid(args.T)
    params.order.check_against(ctx)
    r_star = args.rstar or max(1, max(params.order.s, default=1))
    S_hat = precision(gnar_spectrum(params, ctx, grid))
    ladder, _, spectra = hierarchy(S_hat, ctx.stages, r_star, args.ridge_fallback)
    outdir.mkdir(exist_ok=True)
    for r, f in spectra.items():
        gio.write_field_json(outdir / f"spectrum_r{r}.json", f)
    (outdir / "ladder.json").write_text(json.dumps({"order": str(params.order), "xi": list(ladder.xi)}, indent=2))


def cmd_gfevd(args):
    out = _check_output(args.output)
    _, nodes, O, H, L, C = gio.read_ohlc_csv(args.ohlc)
    try:
        result = ohlc_pipeline(O, H, L, C, H=args.horizon, p_max=args.p_max, start=args.start, folds=args.folds)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.write_text(json.dumps(gio.gfevd_to_dict(result, nodes), indent=2))
    if args.edges:
        net = Network(result.psi.shape[0], result.edges)
        gio.write_edge_list(_check_output(args.edges), net, result.weights)


def _bench_spec(args):
    if args.spec in BUILTIN_SPECS and not Path(args.spec).exists():
        text = resources.files("gnarspec").joinpath("data", f"{args.spec}.json").read_text()
    else:
        text = gio._open_text(args.spec)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: invalid JSON ({exc})") from None
    if args.R is not None:
        obj["R"] = args.R
    if args.seed_given:
        obj["seed"] = args.seed
    obj.setdefault("seed", DEFAULT_SEED)
    obj["workers"] = args.threads
    try:
        return ExperimentSpec.from_dict(obj)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.spec}: {exc}") from None


def cmd_bench(args):
    out = _check_output(args.output)
    spec = _bench_spec(args)
    report = run_hierarchy_experiment(spec, args.rstar) if args.hierarchy else run_experiment(spec)
    cols, rows = report.to_rows()
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        w.writerows(rows)
    if args.json:
        Path(args.json).write_text(json.dumps({"runtime": report.runtime, "records": report.records}, indent=2))
    log.info("bench finished in %.1f s", report.runtime)


def _add_network(p, required=True):
    p.add_argument("--network", required=required, help="edge-list file, or net5 / net10")
    p.add_argument("--weights", choices=("equal", "edge"), default="equal", help="stage weights (default equal)")


def _add_model(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--params", help="params JSON")
    g.add_argument("--model", choices=sorted(builtin_models()), help="builtin simulation model")


def _add_order(p):
    p.add_argument("--p", type=int, help="lag order (omit to select by BIC)")
    p.add_argument("--s", help="comma-separated stage depths, one per lag")
    p.add_argument("--p-max", type=int, default=3)
    p.add_argument("--s-max", type=int, default=3)


def _add_field_out(p):
    p.add_argument("--target", choices=tuple(TARGET_FUNCS), default="spectrum")
    p.add_argument("-o", "--output", required=True, help="field JSON")
    p.add_argument("--csv", help="also write per-pair curves as CSV")
    p.add_argument("--part", choices=("abs", "re", "im", "arg"), default="abs", help="reduction of complex entries in --csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnarspec",
        description="Spectral analysis of network autoregressive time series.",
        epilog="file formats:" + __doc__.split("File formats\n------------", 1)[1].rstrip(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="log progress to stderr")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=f"master seed (default {DEFAULT_SEED})")
    for action in common._actions:
        parser._add_action(action)
    sub = parser.add_subparsers(dest="command", required=True)
    _parser = sub.add_parser

    def add_parser(name, **kw):
        return _parser(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("simulate", help="simulate a GNAR panel")
    _add_network(p)
    _add_model(p)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("-o", "--output", required=True, help="panel CSV; metadata goes to <output>.meta.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="least-squares GNAR fit")
    _add_network(p)
    p.add_argument("--data", required=True, help="panel CSV")
    _add_order(p)
    p.add_argument("-o", "--output", required=True, help="params JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("spectrum", help="parametric GNAR spectrum, coherence or partial coherence")
    _add_network(p)
    _add_model(p)
    p.add_argument("--T", type=int, default=200, help="evaluate on the Fourier grid of this length")
    _add_field_out(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("np-spectrum", help="smoothed periodogram or VAR spectrum, optionally network-penalized")
    _add_network(p, required=False)
    p.add_argument("--data", required=True, help="panel CSV")
    p.add_argument("--penalty", choices=PENALTIES, default="none")
    p.add_argument("--rstar", type=int, default=1, help="stage depth for the induced mask")
    p.add_argument("--bandwidth", type=int, help="Daniell half-width m (default floor(sqrt(T)))")
    p.add_argument("--kernel", choices=("daniell",), default="daniell")
    p.add_argument("--var", action="store_true", help="use the VAR plug-in spectrum instead of the periodogram")
    p.add_argument("--var-p", type=int, help="VAR lag (default: BIC up to --p-max)")
    p.add_argument("--p-max", type=int, default=5)
    _add_field_out(p)
    p.set_defaults(func=cmd_np_spectrum)

    p = sub.add_parser("hierarchy", help="r-dependent spectra by thresholding the precision field")
    _add_network(p)
    _add_model(p)
    p.add_argument("--data", help="panel CSV to fit (otherwise --params/--model is used)")
    _add_order(p)
    p.add_argument("--T", type=int, default=200, help="grid length when no data is given")
    p.add_argument("--rstar", type=int, help="largest stage (default max s of the order)")
    p.add_argument("--ridge-fallback", action="store_true", help="regularize singular thresholded precisions")
    p.add_argument("--output-dir", required=True, help="created if missing; receives spectrum_r<k>.json and ladder.json")
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("gfevd", help="volatility connectedness network from OHLC prices")
    p.add_argument("--ohlc", required=True, help="OHLC CSV (log prices)")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--p-max", type=int, default=5)
    p.add_argument("--start", type=int, choices=(0, 1), default=1, help="first MA lag in the horizon sum")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("-o", "--output", required=True, help="result JSON")
    p.add_argument("--edges", help="also write the network as an edge list")
    p.set_defaults(func=cmd_gfevd)

    p = sub.add_parser("bench", help="Monte-Carlo RMSE comparison of EM1-EM7")
    p.add_argument("--spec", required=True, help=f"spec JSON or builtin name ({', '.join(BUILTIN_SPECS)})")
    p.add_argument("--R", type=int, help="override the replicate count")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--hierarchy", action="store_true", help="run the r-dependent experiment instead")
    p.add_argument("--rstar", type=int)
    p.add_argument("-o", "--output", required=True, help="report CSV")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = hasattr(args, "seed")
    args.seed = getattr(args, "seed", DEFAULT_SEED)
    verbose = getattr(args, "verbose", 0)
    warnings.formatwarning = lambda msg, cat, *a, **k: f"gnarspec: warning: {msg}\n"
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="gnarspec: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"gnarspec: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"gnarspec: invalid input: {exc}", file=sys.stderr)
        return 2
    except (EstimationError, np.linalg.LinAlgError) as exc:
        print(f"gnarspec: estimation failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
