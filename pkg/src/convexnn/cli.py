"""Command-line entry point ``convexnn``.

Every subcommand reads optional defaults from ``--config`` (a JSON object
whose keys are the long option names with dashes turned to underscores),
takes its randomness from ``--seed`` and writes CSV or JSON to ``--out`` or
stdout.  Exit codes: 0 ok, 2 invalid input, 3 budget exceeded, 4 not
converged.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import BudgetExceeded, ConvexNNError, InvalidArgument, NonConverged

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_NONCONVERGED = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _seed(text):
    s = int(text, 0)
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _floats(text):
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _qnorm(text):
    return math.inf if str(text).lower() in ("inf", "infinity") else float(text)


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=1) + "\n"


def _dataset(args):
    from .io import read_dataset
    return read_dataset(args.data, args.R, args.q)


# ------------------------------------------------------------------ commands

def cmd_synth(args):
    from .experiments import ExperimentConfig, synth_dataset
    from .io import dataset_to_csv

    cfg = ExperimentConfig(target=args.target, d=args.d, n_grid=(args.n,), noise=args.noise,
                           sparsity=args.sparsity, k=args.k, s=args.s, R=args.R, q=args.q)
    _emit(dataset_to_csv(synth_dataset(cfg, args.seed)), args.out)


def cmd_train(args):
    from .frank_wolfe import FWConfig, fw_train
    from .io import model_to_json
    from .losses import Loss

    ds = _dataset(args)
    loss = Loss(args.loss, args.eps)
    cfg = FWConfig(args.delta, args.steps, args.rule, args.oracle, args.alpha, args.p,
                   args.smoothing, args.seed, args.restarts, args.gap_tol)
    try:
        model, trace = fw_train(ds, loss, cfg)
    except ConvexNNError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and args.out not in (None, "-"):
            _emit(model_to_json(partial[0]), args.out)
        raise
    _emit(model_to_json(model), args.out)
    if args.trace:
        lines = ["t,risk,gap"] + [f"{t},{float(r)!r},{float(g)!r}"
                                  for t, (r, g) in enumerate(zip(trace.risk, trace.gap))]
        _emit("\n".join(lines) + "\n", args.trace)


def cmd_f2(args):
    from .kernels import KernelSpec, f2_kernel_ridge, f2_random_features, random_features

    ds = _dataset(args)
    if args.kind == "kernel":
        pred = f2_kernel_ridge(ds.xs, ds.ys, KernelSpec(args.alpha, ds.d, ds.R), args.lam)
    else:
        fmap = random_features(args.alpha, args.m, args.seed, d=ds.d, R=ds.R)
        pred = f2_random_features(ds.xs, ds.ys, fmap, args.lam)
    out = {"kind": args.kind, "alpha": args.alpha, "lambda": args.lam,
           "train_risk": float(np.mean((pred(ds.xs) - ds.ys) ** 2) / 2)}
    if args.kind == "rf":
        out["m"] = args.m
    if args.predict:
        from .io import read_dataset
        probe = read_dataset(args.predict, args.R, args.q)
        out["predictions"] = [float(v) for v in pred(probe.xs)]
    _emit(_json(out), args.out)


def cmd_oracle(args):
    from .io import read_vector
    from .oracles import kappa_wrap, make_oracle

    ds = _dataset(args)
    g = read_vector(args.g) if args.g else ds.ys
    if g.size != ds.n:
        raise InvalidArgument(f"{g.size} residuals for {ds.n} points")
    oracle = make_oracle(args.method, restarts=args.restarts, seed=args.seed)
    if args.kappa is not None:
        oracle = kappa_wrap(oracle, args.kappa)
    res = oracle(ds.zs, g, args.alpha, p=args.p, R=ds.R)
    _emit(_json({"v": [float(c) for c in res.unit.v], "value": res.value, "sign": res.sign,
                 "status": res.status}), args.out)


def cmd_hausdorff(args):
    from .geometry import (Zonotope, ellipsoid_hausdorff, ellipsoid_hausdorff_sampled,
                           fw_step_as_hausdorff, zonotope_hausdorff)
    from .io import load_body

    if args.data:
        ds = _dataset(args)
        _emit(_json({"distance": fw_step_as_hausdorff(ds.zs, ds.ys, ds.R)}), args.out)
        return
    if not (args.a and args.b):
        raise InvalidArgument("give --a and --b bodies, or --data for a Frank-Wolfe step")
    A, B = load_body(args.a), load_body(args.b)
    if type(A) is not type(B):
        raise InvalidArgument("both bodies must be of the same kind")
    if isinstance(A, Zonotope):
        dist = zonotope_hausdorff(A, B, args.norm)
    elif args.sampled:
        dist = ellipsoid_hausdorff_sampled(A, B, args.samples)
    else:
        dist = ellipsoid_hausdorff(A, B)
    _emit(_json({"distance": dist, "body": "zonotope" if isinstance(A, Zonotope) else "ellipsoid"}),
          args.out)


def cmd_kernel(args):
    from .harmonics import kernel_series
    from .kernels import KernelSpec, kernel, kernel_mc

    spec = KernelSpec(args.alpha, args.d, args.R)
    x, xp = np.array(args.x), np.array(args.xp)
    if x.size != args.d or xp.size != args.d:
        raise InvalidArgument(f"points must have {args.d} coordinates")
    out = {"closed_form": kernel(spec, x, xp)}
    if args.mc:
        out["mc"], out["mc_se"] = kernel_mc(spec, x, xp, args.mc, args.seed)
    if args.series:
        za = np.append(x / args.R, 1.0)
        zb = np.append(xp / args.R, 1.0)
        na, nb = np.linalg.norm(za), np.linalg.norm(zb)
        u = float(np.clip(za @ zb / (na * nb), -1, 1))
        out["series"] = float(kernel_series(args.d, args.alpha, args.series, u)) \
            * (na * nb) ** args.alpha
    _emit(_json(out), args.out)


def cmd_spectrum(args):
    from .harmonics import spectrum

    sp = spectrum(args.d, args.alpha, args.kmax, args.method)
    lines = ["k,lambda,provenance"]
    lines += [f"{k},{v!r},{p}" for k, (v, p) in enumerate(zip(sp.lambdas, sp.provenance))]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_gamma2(args):
    from .harmonics import gamma2_ridge, load_profile, profile_from_spec

    if args.profile:
        prof = load_profile(args.profile, args.d)
    else:
        spec = {"type": args.type, "alpha": args.profile_alpha, "j": args.j, "d": args.d}
        prof = profile_from_spec(spec, args.d)
    res = gamma2_ridge(prof, args.d, args.alpha, args.K)
    _emit(_json({"value": res.value, "verdict": res.verdict,
                 "partial_sums": list(res.partial_sums),
                 "infeasible_degrees": list(res.infeasible_degrees),
                 "tail_slope": res.tail_slope}), args.out)


def cmd_relax(args):
    from .io import read_vector
    from .relaxations import RelaxationProblem, solve_relaxation

    ds = _dataset(args)
    g = read_vector(args.g) if args.g else ds.ys
    best = None
    for s in ((1.0, -1.0) if args.both_signs else (1.0,)):
        try:
            res = solve_relaxation(RelaxationProblem(ds.zs, s * g, args.kind, ds.R),
                                   max_iter=args.max_iter, tol=args.tol)
        except NonConverged as exc:
            if exc.result is not None:
                _emit(_json(_relax_json(args.kind, exc.result, s)), args.out)
            raise
        if best is None or res.value > best[0].value:
            best = (res, s)
    _emit(_json(_relax_json(args.kind, *best)), args.out)


def _relax_json(kind, res, s):
    diag = res.diagnostics
    return {"kind": kind, "value": res.value, "sign": s, "converged": res.converged,
            "status": diag.get("status"), "residuals": diag.get("residuals"),
            "warnings": diag.get("warnings", [])}


def cmd_relax_scaling(args):
    from .relaxations import random_direction_scaling

    tab = random_direction_scaling(args.kind, args.n_grid, args.d, args.trials, args.seed,
                                   tol=args.tol)
    _emit(tab.to_csv() + f"# slope,{tab.slope!r}\n", args.out)


def cmd_radbound(args):
    from .bounds import BoundSpec, complexity_constant, rademacher_bound, unit_class_bound

    spec = BoundSpec(args.G, args.delta, args.n, args.p, args.d, args.alpha, args.C0)
    _emit(_json({"bound": rademacher_bound(spec),
                 "constant": complexity_constant(args.p, args.d, args.alpha, args.C0),
                 "unit_class_bound": unit_class_bound(args.n, args.d, args.alpha, args.p,
                                                      args.C0)}), args.out)


def cmd_radmc(args):
    from .bounds import rademacher_mc, unit_class_bound
    from .kernels import uniform_ball
    from .model import Dataset

    if args.data:
        ds = _dataset(args)
    else:
        rng = np.random.default_rng(args.seed)
        q = math.inf if args.p == 1 else 2.0
        X = uniform_ball(rng, args.n, args.d, args.R, q)
        ds = Dataset(X, np.zeros(args.n), args.R, q)
    est = rademacher_mc(ds, args.alpha, args.p, args.trials, seed=args.seed)
    _emit(_json({"n": ds.n, "d": ds.d, "alpha": args.alpha, "p": args.p, "mean": est.mean,
                 "se": est.se, "trials": est.trials,
                 "bound": unit_class_bound(ds.n, ds.d, args.alpha, args.p, args.C0)}), args.out)


def cmd_experiment(args):
    from .experiments import ExperimentConfig, run_adaptivity

    raw = dict(args.experiment or {})
    if args.seed_given:
        raw["seed"] = args.seed
    if args.workers:
        raw["workers"] = args.workers
    cfg = ExperimentConfig.from_dict(raw)
    if args.out not in (None, "-"):
        run_adaptivity(cfg, out=args.out, timestamp=not args.no_timestamp)
    else:
        res = run_adaptivity(cfg)
        _emit(res.to_csv(timestamp=not args.no_timestamp), None)


# ------------------------------------------------------------------ parser

def _data_opts(p, required=True):
    p.add_argument("--data", required=required, help="CSV with header x1..xd,y")
    p.add_argument("--R", type=float, default=1.0, help="input radius")
    p.add_argument("--q", type=_qnorm, default=2.0, help="input norm exponent (2 or inf)")


def build_parser():
    top = _Parser(prog="convexnn", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"convexnn {__version__}")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "draw a synthetic regression dataset")
    p.add_argument("--target", default="single-index")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--sparsity", type=int, default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--q", type=_qnorm, default=2.0)

    p = add("train", cmd_train, "Frank-Wolfe training over the variation-norm ball")
    _data_opts(p)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--rule", default="line-search")
    p.add_argument("--loss", default="squared")
    p.add_argument("--eps", type=float, default=0.0, help="smoothed-hinge band")
    p.add_argument("--oracle", default="auto")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--gap-tol", type=float, default=0.0)
    p.add_argument("--trace", help="CSV path for the risk and gap trace")

    p = add("f2", cmd_f2, "kernel ridge or random-feature baseline")
    _data_opts(p)
    p.add_argument("--kind", choices=("kernel", "rf"), default="kernel")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--lam", type=float, default=1e-3)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--predict", help="CSV of points to predict at")

    p = add("oracle", cmd_oracle, "one incremental step: best unit for a residual vector")
    _data_opts(p)
    p.add_argument("--g", help="residual file; defaults to the y column")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--method", default="exact")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--kappa", type=float, default=None)

    p = add("hausdorff", cmd_hausdorff, "Hausdorff distance between zonotopes or ellipsoids")
    _data_opts(p, required=False)
    p.add_argument("--a", help="first body (JSON)")
    p.add_argument("--b", help="second body (JSON)")
    p.add_argument("--norm", type=_qnorm, default=2.0)
    p.add_argument("--sampled", action="store_true", help="ellipsoids: sample support gaps")
    p.add_argument("--samples", type=int, default=200_000)

    p = add("kernel", cmd_kernel, "evaluate the infinite-width kernel")
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--x", type=_floats, required=True)
    p.add_argument("--xp", type=_floats, required=True)
    p.add_argument("--mc", type=int, default=0, help="Monte-Carlo sample count")
    p.add_argument("--series", type=int, default=0, help="harmonic truncation degree")

    p = add("spectrum", cmd_spectrum, "Funk-Hecke coefficients of the activation")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--method", default="quad")

    p = add("gamma2", cmd_gamma2, "RKHS norm of a ridge function")
    p.add_argument("--profile", help="profile JSON file")
    p.add_argument("--type", default="relu-power")
    p.add_argument("--profile-alpha", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--K", type=int, default=100)

    p = add("relax", cmd_relax, "semidefinite relaxation of the alpha = 1 step")
    _data_opts(p)
    p.add_argument("--g", help="residual file; defaults to the y column")
    p.add_argument("--kind", default="dim-d")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--both-signs", action="store_true")

    p = add("relax-scaling", cmd_relax_scaling, "relaxation value against n for random y")
    p.add_argument("--kind", default="dim-d")
    p.add_argument("--n-grid", type=_ints, default=[8, 16, 32])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("radbound", cmd_radbound, "closed-form uniform-deviation bound")
    p.add_argument("--G", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--C0", type=float, default=1.0)

    p = add("radmc", cmd_radmc, "Monte-Carlo Rademacher complexity of the unit class")
    _data_opts(p, required=False)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--C0", type=float, default=1.0)

    p = add("experiment", cmd_experiment, "adaptivity study over an n grid")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true")
    return top, sub


def _config_path(argv):
    for k, a in enumerate(argv):
        if a == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _parse(argv):
    top, sub = build_parser()
    path = _config_path(argv)
    command = next((a for a in argv if a in sub.choices), None)
    experiment = None
    if path and command:
        from .io import load_json
        cfg = load_json(path)
        if not isinstance(cfg, dict):
            raise InvalidArgument(f"{path}: config must be a JSON object")
        if command == "experiment":
            experiment = cfg
        else:
            sp = sub.choices[command]
            actions = {a.dest: a for a in sp._actions}
            unknown = sorted(set(cfg) - set(actions) - {"help", "config", "func"})
            if unknown:
                raise InvalidArgument(f"{path}: unknown keys {unknown}")
            for key in cfg:
                if key in actions:
                    actions[key].required = False
            # command-line flags still win over the file
            sp.set_defaults(**{k: v for k, v in cfg.items() if k not in ("config", "func")})
    args = top.parse_args(argv)
    # an experiment config may carry its own seed; only an explicit flag overrides it
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    args.experiment = experiment
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except BudgetExceeded as exc:
        print(f"convexnn: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NonConverged as exc:
        print(f"convexnn: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (InvalidArgument, ValueError, OSError) as exc:
        print(f"convexnn: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
