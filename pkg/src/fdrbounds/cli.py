"""Command-line entry point: ``fdrbounds <subcommand> ...``.

Exit status is 0 on success, 2 for bad flags or configuration, 1 for
runtime failures and 3 when ``verify`` finds a failing check.
"""

import argparse
import csv
import io
import json
import math
import sys

from . import bounds as bnd
from .exceptions import FdrBoundsError, ParameterError
from .frontier import GridSpec, run_frontier, to_csv, to_json
from .model import Family, ModelSpec, layout_for, sample_batch
from .procedures import BHRule, estimate_fdr_fnr
from .proxies import ProxyConfig, proxy_set
from .verify import CHECKS, format_table, run_checks

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3

CONFIG_KEYS = {"models", "epsilon", "grid_b", "replicates", "trials", "seed"}


class UsageError(Exception):
    """Bad flags or configuration."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config(path):
    """Read a run configuration document; unknown top-level keys are rejected."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(doc) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    models = doc.get("models")
    if not isinstance(models, list) or not models:
        raise UsageError("config key 'models' must be a non-empty list of model specs")
    try:
        doc["models"] = [ModelSpec.from_dict(d) for d in models]
    except (ParameterError, TypeError) as exc:
        raise UsageError(f"config key 'models': {exc}") from None
    return doc


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="JSON run configuration; its first model is used")
    g.add_argument("--family", choices=[f.value for f in Family], default="iid_location")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--mu", type=float, help="signal shift (location families)")
    g.add_argument("--r", type=float, help="set mu = sqrt(2 r log n) instead of --mu")
    g.add_argument("--sigma", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--rho0", type=float)
    g.add_argument("--rho1", type=float)
    g.add_argument("--rhoc", type=float)
    g.add_argument("--cross-sign", type=int, choices=(-1, 1))
    g.add_argument("--group-size", type=int)


def _model_from_flags(args):
    if args.config:
        config = load_config(args.config)
        return config["models"][0], config
    if args.n is None or args.m is None:
        raise UsageError("model flags --n and --m are required without --config")
    if args.mu is not None and args.r is not None:
        raise UsageError("give at most one of --mu and --r")
    params = {"family": args.family, "n": args.n, "m": args.m}
    for key in ("mu", "sigma", "gamma", "rho0", "rho1", "rhoc", "cross_sign", "group_size"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.r is not None:
        if args.r < 0 or args.n < 2:
            raise UsageError(f"--r must be >= 0, got {args.r}")
        params["mu"] = math.sqrt(2.0 * args.r * math.log(args.n))
    try:
        return ModelSpec(**params), {}
    except ParameterError as exc:
        raise UsageError(f"model: {exc}") from None


def _resolve(flag, config, key, default=None, required=False):
    value = flag if flag is not None else config.get(key, default)
    if required and value is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return value


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _dump(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_sample(args):
    spec, config = _model_from_flags(args)
    seed = _resolve(args.seed, config, "seed", required=True)
    batch = sample_batch(spec, layout_for(spec), seed, args.replicate)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "is_signal", "w", "x"])
    mask = batch.layout.signal_mask
    for i in range(spec.n):
        writer.writerow([i, int(mask[i]), repr(float(batch.w[i])), repr(float(batch.x[i]))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_proxies(args):
    spec, config = _model_from_flags(args)
    seed = _resolve(args.seed, config, "seed", required=True)
    epsilon = _resolve(args.epsilon, config, "epsilon", 0.25)
    replicates = _resolve(args.replicates, config, "replicates", 1000)
    try:
        cfg = ProxyConfig(args.alpha, args.beta, epsilon, replicates, seed)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    ps = proxy_set(spec, layout_for(spec), cfg, args.jobs)
    doc = ps.to_dict()
    doc.update(alpha=cfg.alpha, beta=cfg.beta, epsilon=cfg.epsilon, replicates=cfg.replicates,
               seed=cfg.master_seed, model=spec.to_dict())
    _emit(_dump(doc), args.out)
    return EXIT_OK


def cmd_bh(args):
    spec, config = _model_from_flags(args)
    seed = _resolve(args.seed, config, "seed", required=True)
    trials = _resolve(args.trials, config, "trials", 400)
    if not 0.0 < args.q < 1.0:
        raise UsageError(f"--q must lie in (0, 1), got {args.q}")
    rates = estimate_fdr_fnr(spec, layout_for(spec), BHRule(args.q), trials, seed, args.jobs)
    doc = {
        "fdr": rates.fdr, "fnr": rates.fnr, "fdr_se": rates.fdr_se, "fnr_se": rates.fnr_se,
        "mean_k": rates.mean_k, "q": args.q, "trials": trials, "seed": seed,
        "model": spec.to_dict(),
    }
    _emit(_dump(doc), args.out)
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"corollary {args.corollary} needs {flags}")
    return [getattr(args, n) for n in names]


def cmd_bounds(args):
    c = args.corollary
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command", "out")}
    doc = {"corollary": c, "params": params}
    if c in (1, 3, 4):
        s, r = _need(args, "s", "r")
        e = bnd.RateExponents(s, r, args.kappa_alpha, args.kappa_beta)
        if c == 1:
            res = bnd.iid_location_feasible(e)
            doc["kappa_star"] = bnd.kappa_star(s, r)
        elif c == 3:
            res = bnd.spiked_feasible(e, *_need(args, "rho0", "rho1"))
        else:
            res = bnd.grouped_feasible(e, *_need(args, "t"))
        doc.update(feasible=res.feasible, slack=res.slack)
    elif c == 2:
        s_n, m = _need(args, "s_n", "m")
        lower = bnd.scale_sigma_lower(s_n, args.alpha, args.beta, m, args.epsilon,
                                      eta=args.eta, strict=not args.no_strict)
        doc["sigma_lower"] = lower
        if args.sigma is not None:
            doc.update(feasible=args.sigma >= lower, slack=args.sigma - lower)
    else:
        m, n = _need(args, "m", "n")
        res = bnd.lehmann_gamma_lower(args.alpha, args.beta, args.epsilon, m, n)
        doc.update(t=res.t, inv_gamma_lb=res.inv_gamma_lb)
        if args.gamma is not None:
            slack = 1.0 / args.gamma - res.inv_gamma_lb
            doc.update(feasible=slack >= 0, slack=slack)
    _emit(_dump(doc), args.out)
    return EXIT_OK


def cmd_frontier(args):
    if args.config:
        config = load_config(args.config)
        specs = config["models"]
    else:
        spec, config = _model_from_flags(args)
        specs = [spec]
    seed = _resolve(args.seed, config, "seed", required=True)
    try:
        grid = GridSpec(
            B=_resolve(args.grid_b, config, "grid_b", 25),
            epsilon=_resolve(args.epsilon, config, "epsilon", 0.25),
        )
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    result = run_frontier(
        specs, grid,
        replicates=_resolve(args.replicates, config, "replicates", 1000),
        trials=_resolve(args.trials, config, "trials", 400),
        seed=seed, n_jobs=args.jobs,
    )
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    _emit(to_json(result) if fmt == "json" else to_csv(result), args.out)
    return EXIT_OK


def cmd_verify(args):
    names = args.checks.split(",") if args.checks else None
    if names and any(n not in CHECKS for n in names):
        raise UsageError(f"--checks must name checks from {sorted(CHECKS)}")
    results = run_checks(names, seed=args.seed, n_jobs=args.jobs)
    _emit(format_table(results) + "\n", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser():
    parser = _Parser(prog="fdrbounds", description="FDR/FNR lower bounds for top-K procedures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True, jobs=True):
        if seed:
            p.add_argument("--seed", type=int, help="master seed (required)")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("sample", help="draw one replicate as CSV")
    _add_model_flags(p)
    p.add_argument("--replicate", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("proxies", help="estimate the four proxies as JSON")
    _add_model_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--replicates", type=int)
    common(p)
    p.set_defaults(func=cmd_proxies)

    p = sub.add_parser("bh", help="Monte-Carlo FDR/FNR of BH as JSON")
    _add_model_flags(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--trials", type=int)
    common(p)
    p.set_defaults(func=cmd_bh)

    p = sub.add_parser("bounds", help="closed-form feasibility and signal-strength bounds")
    p.add_argument("--corollary", type=int, choices=range(1, 6), required=True,
                   help="1 iid location, 2 scale, 3 spiked, 4 grouped, 5 Lehmann")
    for name in ("s", "r", "rho0", "rho1", "t", "s-n", "sigma", "gamma"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--kappa-alpha", type=float, default=0.0)
    p.add_argument("--kappa-beta", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--no-strict", action="store_true",
                   help="corollary 2: skip the max(alpha, beta) precondition")
    common(p, seed=False, jobs=False)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("frontier", help="lower-bound and BH FNR curves over an FDR grid")
    _add_model_flags(p)
    p.add_argument("--grid-b", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--replicates", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    common(p)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("verify", help="run the order-statistic self-checks")
    p.add_argument("--checks", help=f"comma-separated subset of {','.join(CHECKS)}")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None):
    """Parse ``argv`` and run one subcommand; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "command", None) == "verify" and args.seed is None:
            raise UsageError("--seed is required")
        return args.func(args)
    except UsageError as exc:
        print(f"fdrbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"fdrbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FdrBoundsError, OSError, ArithmeticError) as exc:
        print(f"fdrbounds: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(run())
