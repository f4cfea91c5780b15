"""Command-line front end.

Subcommands: check, bound, curves, vario, fit, mcmc, dic, simulate.
Exit codes: 0 success, 1 condition-check "not satisfied" (so shell scripts
can branch on validity), 2 usage or domain errors.

Options may come from a ``key = value`` config file (``--config``); explicit
flags win.  Every run echoes its fully resolved configuration as ``#``
comment lines at the top of its output.  All floating output uses 9
significant digits so outputs are byte-stable for fixed seeds.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ._util import FLOAT_FMT, worker_count
from .bounds import FIG1_SETS, FIG2_SETS, EquicorrStructure, example_curve, rho_max
from .geostat import (
    PipelineParams,
    SpatialDataset,
    empirical_variogram,
    fit_mcmc,
    nearest_valid,
    normal_scores,
    pipeline_loglik,
    ParamTransform,
    simulate_field,
    wls_fit_exponential,
    EmpiricalVariogram,
)
from .kernels import MaternSpec, SiteSet
from .matrices import NotPositiveSemidefiniteError, SymMatrix
from .mcmc import McmcChain, dic as compute_dic
from .validity import REGISTRY_ORDER, format_report, run_check

_CONFIG_SENTINEL = object()


def _parse_grid(text):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise ValueError(f"grid must be lo:hi:n, got {text!r}") from None


def _grid_values(spec_text, scale):
    lo, hi, n = _parse_grid(spec_text)
    if n < 1 or hi <= lo or lo <= 0 and scale == "log":
        raise ValueError(f"bad grid {spec_text!r} for scale {scale}")
    if scale == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _echo_config(stream, name, args, keys):
    stream.write(f"# mvmatern {name}\n")
    for key in keys:
        value = getattr(args, key.replace("-", "_"))
        if value is None:
            continue
        stream.write(f"# {key} = {value}\n")


def _open_out(args):
    if args.out and args.out != "-":
        return open(args.out, "w", encoding="utf-8"), True
    return sys.stdout, False


def _load_config(parser, argv):
    """Apply config-file values as defaults; explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, argv = pre.parse_known_args(argv)  # strips --config wherever it sits
    if not known.config:
        return argv
    options = {}
    with open(known.config, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{known.config}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            options[key.strip()] = value.strip()
    extra = []
    for key, value in options.items():
        flag = f"--{key}"
        if flag in argv:
            continue  # explicit flag wins
        extra.extend([flag, value])
    # Config-derived flags go after argv (hence after the subcommand token);
    # keys already given explicitly were skipped above, and unknown keys
    # fail argument parsing (exit 2).
    return argv + extra


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvmatern",
        description="Multivariate Matern validity checks, correlation bounds, "
        "and variogram/MCMC fitting.",
    )
    parser.add_argument("--config", help="key = value option file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run one validity condition set")
    c.add_argument("--set", required=True, choices=REGISTRY_ORDER,
                   help="condition-set identifier")
    c.add_argument("--alpha", required=True, help="scale matrix CSV (1/length)")
    c.add_argument("--nu", required=True, help="smoothness matrix CSV (unitless)")
    c.add_argument("--sigma", required=True, help="collocated covariance CSV")
    c.add_argument("--d", required=True, type=int, help="spatial dimension")
    c.add_argument("--tol", type=float, default=1e-10,
                   help="eigenvalue tolerance (default 1e-10)")
    c.add_argument("--psi", help="CSV for the route-B hyperparameter matrix")
    c.add_argument("--beta", type=float, help="scalar hyperparameter (thm3B)")
    c.add_argument("--delta", type=float, help="smoothness offset (apanasovich)")
    c.add_argument("--a-matrix", help="CSV correlation matrix (apanasovich)")
    c.add_argument("--omega-grid", default="1e-3:1e3:400",
                   help="lo:hi:n log frequency grid for the spectral oracle")
    c.add_argument("--out", help="output path (default stdout)")

    b = sub.add_parser("bound", help="collocated-correlation upper bound")
    b.add_argument("--example", required=True, choices=("fig1", "fig2"),
                   help="comparison structure")
    b.add_argument("--beta", type=float, help="scale parameter (fig1, 1/length^2)")
    b.add_argument("--a", type=float,
                   help="offset parameter, 1/length^2 units")
    b.add_argument("--p", type=int, default=2, help="component count (default 2)")
    b.add_argument("--d", type=int, default=2, help="spatial dimension (default 2)")
    b.add_argument("--set", help="comma-separated condition sets "
                   "(default: the example's standard comparison)")
    b.add_argument("--tol", type=float, default=1e-4,
                   help="bisection tolerance on rho (default 1e-4)")
    b.add_argument("--grid", help="lo:hi:n sweep of the example's abscissa "
                   "(beta for fig1, a for fig2); emits the curve CSV")
    b.add_argument("--grid-scale", choices=("lin", "log"),
                   help="grid spacing (default: lin for fig1, log for fig2)")
    b.add_argument("--out", help="output path (default stdout)")

    v = sub.add_parser("curves", help="bound curves over a parameter grid")
    v.add_argument("--example", required=True, choices=("fig1", "fig2"))
    v.add_argument("--a", type=float,
                   help="offset parameter, 1/length^2 units (fig1 only)")
    v.add_argument("--grid", required=True, help="lo:hi:n abscissa grid")
    v.add_argument("--grid-scale", choices=("lin", "log"))
    v.add_argument("--p", type=int, default=2)
    v.add_argument("--d", type=int, default=2)
    v.add_argument("--set", help="comma-separated condition sets")
    v.add_argument("--tol", type=float, default=1e-4)
    v.add_argument("--out", help="output path (default stdout)")

    s = sub.add_parser("simulate", help="draw a field from a Matern model")
    s.add_argument("--sites", required=True, type=int, help="site count")
    s.add_argument("--extent", type=float, default=10.0,
                   help="square domain edge, length units (default 10)")
    s.add_argument("--d", type=int, default=2, help="spatial dimension")
    s.add_argument("--seed", required=True, type=int, help="64-bit RNG seed")
    s.add_argument("--alpha", required=True, help="scale matrix CSV")
    s.add_argument("--sigma", required=True, help="collocated covariance CSV")
    s.add_argument("--nu", help="smoothness matrix CSV (default constant 0.5)")
    s.add_argument("--nugget", help="nugget covariance CSV (default zero)")
    s.add_argument("--names", help="comma-separated variable names")
    s.add_argument("--out", help="output path (default stdout)")

    g = sub.add_parser("vario", help="binned direct and cross variograms")
    g.add_argument("--data", required=True, help="dataset CSV (or - for stdin)")
    g.add_argument("--nbins", type=int, default=15)
    g.add_argument("--max-lag", type=float,
                   help="largest pair distance binned, length units "
                   "(default: half the maximum pairwise distance)")
    g.add_argument("--normal-scores", action="store_true",
                   help="apply the normal-scores transform first")
    g.add_argument("--out", help="output path (default stdout)")

    f = sub.add_parser("fit", help="WLS exponential variogram fit")
    f.add_argument("--data", help="dataset CSV (or - for stdin)")
    f.add_argument("--vario", help="variogram CSV from the vario subcommand")
    f.add_argument("--nbins", type=int, default=15)
    f.add_argument("--max-lag", type=float, help="length units")
    f.add_argument("--normal-scores", action="store_true")
    f.add_argument("--out-prefix", help="write <prefix>.{alpha,sigma,nugget}.csv")
    f.add_argument("--out", help="summary output path (default stdout)")

    m = sub.add_parser("mcmc", help="constraint-rejecting adaptive MCMC fit")
    m.add_argument("--data", required=True, help="dataset CSV (or - for stdin)")
    m.add_argument("--set", required=True, choices=REGISTRY_ORDER)
    m.add_argument("--iters", type=int, default=60000)
    m.add_argument("--burn", type=int, default=30000)
    m.add_argument("--seed", required=True, type=int)
    m.add_argument("--fix-alpha", help="hold the scale matrix at this CSV "
                   "(or 'fit' to fix at the projected WLS estimate)")
    m.add_argument("--init-prefix", help="read <prefix>.{alpha,sigma,nugget}.csv "
                   "as the starting point (default: WLS fit)")
    m.add_argument("--nbins", type=int, default=15)
    m.add_argument("--max-lag", type=float, help="length units")
    m.add_argument("--normal-scores", action="store_true")
    m.add_argument("--thin", type=int, default=1, help="store every k-th sample")
    m.add_argument("--float32", action="store_true",
                   help="single-precision likelihood factorizations")
    m.add_argument("--out", help="chain CSV path (default stdout)")

    dd = sub.add_parser("dic", help="deviance information criterion of a chain")
    dd.add_argument("--chain", required=True, help="chain CSV from mcmc")
    dd.add_argument("--data", required=True, help="dataset CSV used for the fit")
    dd.add_argument("--fix-alpha", help="scale matrix CSV when the chain "
                    "holds alpha fixed")
    dd.add_argument("--normal-scores", action="store_true")
    dd.add_argument("--float32", action="store_true")
    dd.add_argument("--out", help="output path (default stdout)")
    return parser


def _load_dataset(path, apply_normal_scores=False):
    if path == "-":
        data = SpatialDataset.from_csv(sys.stdin)
    else:
        data = SpatialDataset.from_csv(path)
    if apply_normal_scores:
        data = SpatialDataset(
            sites=data.sites, values=normal_scores(data.values), names=data.names
        )
    return data


def _cmd_check(args):
    alpha = SymMatrix.from_csv(args.alpha).values
    nu = SymMatrix.from_csv(args.nu).values
    sigma = SymMatrix.from_csv(args.sigma).values
    spec = MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=args.d)
    kwargs = {"tol": args.tol}
    if args.psi:
        kwargs["psi"] = SymMatrix.from_csv(args.psi).values
    if args.beta is not None:
        kwargs["beta"] = args.beta
    if args.delta is not None:
        kwargs["delta"] = args.delta
    if args.a_matrix:
        kwargs["a"] = SymMatrix.from_csv(args.a_matrix).values
    if args.set == "spectral_oracle":
        lo, hi, n = _parse_grid(args.omega_grid)
        kwargs["omega_grid"] = np.geomspace(lo, hi, n)
    report = run_check(args.set, spec, **kwargs)
    out, close = _open_out(args)
    try:
        _echo_config(out, "check", args,
                     ["set", "alpha", "nu", "sigma", "d", "tol", "psi", "beta",
                      "delta", "a-matrix"])
        out.write(format_report(report))
    finally:
        if close:
            out.close()
    return 0 if report.satisfied else 1


def _structures_and_sets(args):
    sets = None
    if args.set:
        sets = [s.strip() for s in args.set.split(",")]
        for s in sets:
            if s not in REGISTRY_ORDER:
                raise ValueError(f"unknown condition set {s!r}")
    return sets


def _cmd_bound(args):
    sets = _structures_and_sets(args)
    if args.grid:
        return _emit_curve(args, sets)
    if args.example == "fig1":
        if args.beta is None:
            raise ValueError("fig1 needs --beta (or use --grid to sweep it)")
        structure = EquicorrStructure.fig1(args.beta, args.a or 0.0,
                                           p=args.p, d=args.d)
        sets = sets or list(FIG1_SETS)
    else:
        if args.a is None:
            raise ValueError("fig2 needs --a (or use --grid to sweep it)")
        structure = EquicorrStructure.fig2(args.a, p=args.p, d=args.d)
        sets = sets or list(FIG2_SETS)
    out, close = _open_out(args)
    try:
        _echo_config(out, "bound", args,
                     ["example", "beta", "a", "p", "d", "tol"])
        out.write("condition_set,rho_max,feasible\n")
        for set_id in sets:
            result = rho_max(structure, set_id, tol=args.tol)
            out.write(
                f"{set_id},{FLOAT_FMT % result.value},"
                f"{str(result.feasible).lower()}\n"
            )
    finally:
        if close:
            out.close()
    return 0


def _emit_curve(args, sets):
    scale = args.grid_scale or ("lin" if args.example == "fig1" else "log")
    grid = _grid_values(args.grid, scale)
    if args.example == "fig1" and args.a is None:
        raise ValueError("fig1 needs --a")
    table = example_curve(
        args.example, grid, p=args.p, d=args.d, a=args.a, tol=args.tol,
        workers=worker_count(), condition_sets=sets,
    )
    out, close = _open_out(args)
    try:
        _echo_config(out, args.command, args,
                     ["example", "a", "grid", "grid-scale", "p", "d", "tol"])
        table.to_csv(out)
    finally:
        if close:
            out.close()
    return 0


def _cmd_curves(args):
    sets = _structures_and_sets(args)
    return _emit_curve(args, sets)


def _cmd_simulate(args):
    alpha = SymMatrix.from_csv(args.alpha).values
    sigma = SymMatrix.from_csv(args.sigma).values
    p = alpha.shape[0]
    nu = SymMatrix.from_csv(args.nu).values if args.nu else np.full((p, p), 0.5)
    nugget = SymMatrix.from_csv(args.nugget).values if args.nugget else np.zeros((p, p))
    names = tuple(args.names.split(",")) if args.names else None
    spec = MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=args.d)
    sites = SiteSet.uniform_random(args.sites, args.d, extent=args.extent,
                                   seed=args.seed)
    data = simulate_field(sites, spec, nugget, seed=args.seed + 1, names=names)
    out, close = _open_out(args)
    try:
        _echo_config(out, "simulate", args,
                     ["sites", "extent", "d", "seed", "alpha", "sigma", "nu",
                      "nugget"])
        d = sites.d
        header = ["x", "y", "z"][:d] + list(data.names)
        out.write(",".join(header) + "\n")
        for coords, row in zip(sites.coords, data.values):
            cells = [FLOAT_FMT % cvalue for cvalue in coords]
            cells += [FLOAT_FMT % v for v in row]
            out.write(",".join(cells) + "\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_vario(args):
    data = _load_dataset(args.data, args.normal_scores)
    ev = empirical_variogram(data, nbins=args.nbins, max_lag=args.max_lag)
    out, close = _open_out(args)
    try:
        _echo_config(out, "vario", args,
                     ["data", "nbins", "max-lag", "normal-scores"])
        ev.to_csv(out)
    finally:
        if close:
            out.close()
    return 0


def _fit_from_args(args):
    if args.vario:
        with open(args.vario, "r", encoding="utf-8") as fh:
            ev = EmpiricalVariogram.from_csv(fh.read().splitlines())
    elif args.data:
        data = _load_dataset(args.data, args.normal_scores)
        ev = empirical_variogram(data, nbins=args.nbins, max_lag=args.max_lag)
    else:
        raise ValueError("fit needs --data or --vario")
    return wls_fit_exponential(ev)


def _write_matrix_csv(stream, matrix):
    for row in matrix:
        stream.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def _cmd_fit(args):
    fit = _fit_from_args(args)
    if args.out_prefix:
        for tag, m in (("alpha", fit.alpha), ("sigma", fit.sigma),
                       ("nugget", fit.nugget)):
            with open(f"{args.out_prefix}.{tag}.csv", "w", encoding="utf-8") as fh:
                _write_matrix_csv(fh, m)
    out, close = _open_out(args)
    try:
        _echo_config(out, "fit", args,
                     ["data", "vario", "nbins", "max-lag", "normal-scores",
                      "out-prefix"])
        for tag, m in (("alpha", fit.alpha), ("sigma", fit.sigma),
                       ("nugget", fit.nugget), ("objective", fit.objective)):
            out.write(f"{tag}:\n")
            _write_matrix_csv(out, m)
        out.write(f"degenerate = {int(fit.degenerate.any())}\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_mcmc(args):
    data = _load_dataset(args.data, args.normal_scores)
    if args.init_prefix:
        init = PipelineParams(
            alpha=SymMatrix.from_csv(f"{args.init_prefix}.alpha.csv").values,
            sigma=SymMatrix.from_csv(f"{args.init_prefix}.sigma.csv").values,
            nugget=SymMatrix.from_csv(f"{args.init_prefix}.nugget.csv").values,
        )
    else:
        ev = empirical_variogram(data, nbins=args.nbins, max_lag=args.max_lag)
        fit = wls_fit_exponential(ev)
        init = PipelineParams(alpha=fit.alpha, sigma=fit.sigma, nugget=fit.nugget)
    fix_alpha = None
    if args.fix_alpha and args.fix_alpha != "fit":
        fix_alpha = SymMatrix.from_csv(args.fix_alpha).values
        init = PipelineParams(alpha=fix_alpha, sigma=init.sigma, nugget=init.nugget)
        init = nearest_valid(init, args.set, data.sites.d, seed=args.seed,
                             fix_alpha=True)
    else:
        init = nearest_valid(init, args.set, data.sites.d, seed=args.seed)
        if args.fix_alpha == "fit":
            fix_alpha = init.alpha
    dtype = np.float32 if args.float32 else np.float64
    chain, _ = fit_mcmc(data, args.set, init, args.iters, args.burn,
                        args.seed, fix_alpha=fix_alpha, dtype=dtype)
    out, close = _open_out(args)
    try:
        chain.to_csv(out, thin=args.thin)
    finally:
        if close:
            out.close()
    return 0


def _cmd_dic(args):
    data = _load_dataset(args.data, args.normal_scores)
    chain = McmcChain.from_csv(args.chain)
    fix_alpha = None
    if args.fix_alpha:
        fix_alpha = SymMatrix.from_csv(args.fix_alpha).values
    has_alpha = any(name.startswith("log_alpha") for name in chain.names)
    if not has_alpha and fix_alpha is None:
        raise ValueError("chain holds alpha fixed: --fix-alpha CSV required")
    transform = ParamTransform(data.p, fix_alpha=fix_alpha if not has_alpha else None)
    if tuple(transform.names) != tuple(chain.names):
        raise ValueError("chain columns do not match the dataset's layout")
    dtype = np.float32 if args.float32 else np.float64
    loglik = pipeline_loglik(data, transform, dtype=dtype)
    result = compute_dic(chain, loglik)
    out, close = _open_out(args)
    try:
        _echo_config(out, "dic", args, ["chain", "data", "fix-alpha"])
        out.write("mean_deviance,p_d,dic\n")
        out.write(result.to_csv_row() + "\n")
    finally:
        if close:
            out.close()
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "bound": _cmd_bound,
    "curves": _cmd_curves,
    "simulate": _cmd_simulate,
    "vario": _cmd_vario,
    "fit": _cmd_fit,
    "mcmc": _cmd_mcmc,
    "dic": _cmd_dic,
}


def dispatch(argv):
    """Parse and run; returns the process exit code."""
    parser = build_parser()
    try:
        argv = _load_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"mvmatern: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError, NotPositiveSemidefiniteError) as exc:
        print(f"mvmatern {args.command}: {exc}", file=sys.stderr)
        return 2


def main(argv=None):
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
