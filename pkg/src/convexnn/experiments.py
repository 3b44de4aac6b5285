"""Synthetic targets and the adaptivity study (F1 by Frank-Wolfe against F2 baselines)."""

from __future__ import annotations

import datetime as _dt
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidArgument
from .kernels import KernelSpec, f2_kernel_ridge, f2_random_features, random_features, uniform_ball
from .losses import Loss
from .model import Dataset, predict_many

TARGETS = ("affine", "single-index", "projection-pursuit", "multi-index")
FAMILIES = ("F1-FW", "F1-FW-l1", "F1-FW-l2", "F2-kernel", "F2-RF")
LAMBDAS = (1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


@dataclass(frozen=True)
class ExperimentConfig:
    target: str = "single-index"
    d: int = 10
    n_grid: tuple = (500,)
    replicates: int = 20
    families: tuple = ("F1-FW", "F2-RF")
    alpha: int = 1
    p: float = 2.0
    delta: float = 2.0
    steps: int = 50
    k: int = 2                    # ridge terms of a projection-pursuit target
    s: int = 2                    # subspace dimension of a multi-index target
    sparsity: int | None = None   # nonzero coordinates of the target directions
    noise: float | None = None    # None: 0.1 std(f*) on the training inputs
    R: float = 1.0
    q: float = 2.0                # input ball: 2 or inf
    test_size: int = 10_000
    val_fraction: float = 0.2
    lambdas: tuple = LAMBDAS
    restarts: int = 8
    oracle_iters: int = 150
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise InvalidArgument(f"unknown target {self.target!r}")
        bad = [f for f in self.families if f not in FAMILIES]
        if bad:
            raise InvalidArgument(f"unknown families {bad}")
        if self.d < 1 or self.replicates < 1 or not self.n_grid:
            raise InvalidArgument("need d >= 1, replicates >= 1 and a nonempty n grid")
        if any(int(n) < 4 for n in self.n_grid):
            raise InvalidArgument("every n must be at least 4")
        if self.sparsity is not None and not 1 <= self.sparsity <= self.d:
            raise InvalidArgument("sparsity must lie in [1, d]")
        if self.target == "multi-index" and not 1 <= self.s <= self.d:
            raise InvalidArgument("s must lie in [1, d]")
        if not 0 < self.val_fraction < 1:
            raise InvalidArgument("val_fraction must lie in (0, 1)")
        if self.q not in (2.0, math.inf):
            raise InvalidArgument("inputs are sampled from the l2 ball or the l-inf box")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))

    @classmethod
    def from_dict(cls, raw: dict):
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise InvalidArgument(f"unknown config keys {sorted(extra)}")
        raw = dict(raw)
        if raw.get("q") in ("inf", "Infinity"):
            raw["q"] = math.inf
        for key in ("n_grid", "families", "lambdas"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


@dataclass(frozen=True)
class Target:
    """A seeded regression function f*."""

    kind: str
    W: np.ndarray            # (d, k) directions
    coef: np.ndarray         # per-term weights (affine: w; pursuit: c_j)
    offset: np.ndarray       # per-term shifts

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        P = X @ self.W
        if self.kind == "affine":
            return P[:, 0] + self.offset[0]
        if self.kind == "single-index":
            return np.maximum(P[:, 0], 0.0)
        if self.kind == "projection-pursuit":
            return np.maximum(P - self.offset, 0.0) @ self.coef
        return np.linalg.norm(P, axis=1)


def _directions(rng, d, k, sparsity):
    if sparsity is None:
        W = rng.standard_normal((d, k))
    else:
        W = np.zeros((d, k))
        for j in range(k):
            idx = rng.choice(d, size=sparsity, replace=False)
            W[idx, j] = rng.choice([-1.0, 1.0], size=sparsity)
    return W / np.linalg.norm(W, axis=0, keepdims=True)


def make_target(config: ExperimentConfig, rng) -> Target:
    d = config.d
    if config.target == "affine":
        W = _directions(rng, d, 1, config.sparsity)
        return Target("affine", W, np.ones(1), rng.uniform(-0.5, 0.5, size=1))
    if config.target == "single-index":
        W = _directions(rng, d, 1, config.sparsity)
        return Target("single-index", W, np.ones(1), np.zeros(1))
    if config.target == "projection-pursuit":
        W = _directions(rng, d, config.k, config.sparsity)
        signs = np.where(np.arange(config.k) % 2 == 0, 1.0, -1.0)
        return Target("projection-pursuit", W, signs / config.k,
                      rng.uniform(-0.3, 0.3, size=config.k))
    if config.sparsity is None:
        W, _ = np.linalg.qr(rng.standard_normal((d, config.s)))
    else:
        W = _directions(rng, d, config.s, config.sparsity)
    return Target("multi-index", W, np.ones(config.s), np.zeros(config.s))


def _replicate_rngs(config, n, rep):
    ss = np.random.SeedSequence([int(config.seed) & (2**64 - 1), int(n), int(rep)])
    return [np.random.default_rng(c) for c in ss.spawn(4)]   # target, train, test, models


def synth_dataset(config: ExperimentConfig, seed: int, n: int | None = None,
                  return_target=False):
    """Draw n inputs from the configured ball and label them y = f*(x) + noise.

    The target directions come from the same seed, so (config, seed) fixes
    everything.
    """
    n = config.n_grid[0] if n is None else int(n)
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1))
    t_rng, x_rng = (np.random.default_rng(c) for c in ss.spawn(2))
    target = make_target(config, t_rng)
    ds = _draw(config, target, n, x_rng)
    return (ds, target) if return_target else ds


def _draw(config, target, n, rng, noise_scale=None):
    X = uniform_ball(rng, n, config.d, config.R, config.q)
    f = target(X)
    sigma = noise_scale
    if sigma is None:
        sigma = 0.1 * float(np.std(f)) if config.noise is None else float(config.noise)
    y = f + sigma * rng.standard_normal(n) if sigma > 0 else f
    return Dataset(X, y, config.R, config.q)


# ------------------------------------------------------------------ families

def _split(n, frac, rng):
    perm = rng.permutation(n)
    n_val = max(1, int(round(frac * n)))
    return perm[n_val:], perm[:n_val]


def _tune_lambda(fit, X, y, lambdas, rng, frac):
    tr, va = _split(X.shape[0], frac, rng)
    best, best_err = None, np.inf
    for lam in lambdas:
        pred = fit(X[tr], y[tr], lam)
        err = float(np.mean((pred(X[va]) - y[va]) ** 2))
        if err < best_err:
            best, best_err = lam, err
    return best, fit(X, y, best)


def _fit_f1(config, ds, p, seed):
    from .frank_wolfe import FWConfig, fw_train
    from .oracles import oracle_restarts

    def oracle(zs, g, alpha, p=2.0, R=1.0, **kw):
        return oracle_restarts(zs, g, alpha, p, restarts=config.restarts, seed=seed, R=R,
                               iters=config.oracle_iters)

    cfg = FWConfig(config.delta, config.steps, "line-search", "restarts", config.alpha, p,
                   seed=seed, restarts=config.restarts)
    model, trace = fw_train(ds, Loss("squared"), cfg, oracle=oracle)
    return (lambda X: predict_many(model, X)), {"units": model.k, "gap": trace.gap[-1]}


def fit_family(family, config, ds, rng):
    """Train one family on ds; returns (predictor, info)."""
    seed = int(rng.integers(2**63))
    X, y = ds.xs, ds.ys
    if family == "F1-FW":
        return _fit_f1(config, ds, config.p, seed)
    if family == "F1-FW-l1":
        return _fit_f1(config, ds, 1.0, seed)
    if family == "F1-FW-l2":
        return _fit_f1(config, ds, 2.0, seed)
    if family == "F2-kernel":
        spec = KernelSpec(config.alpha, config.d, config.R)
        lam, pred = _tune_lambda(lambda a, b, l: f2_kernel_ridge(a, b, spec, l),
                                 X, y, config.lambdas, rng, config.val_fraction)
        return pred, {"lambda": lam}
    # same unit budget as the Frank-Wolfe run
    fmap = random_features(config.alpha, config.steps, seed, d=config.d, R=config.R)
    lam, pred = _tune_lambda(lambda a, b, l: f2_random_features(a, b, fmap, l),
                             X, y, config.lambdas, rng, config.val_fraction)
    return pred, {"lambda": lam}


def run_replicate(config: ExperimentConfig, n: int, rep: int) -> dict:
    """Held-out risk (noise-free f*) of every family on one replicate."""
    t_rng, tr_rng, te_rng, m_rng = _replicate_rngs(config, n, rep)
    target = make_target(config, t_rng)
    train = _draw(config, target, n, tr_rng)
    Xte = uniform_ball(te_rng, config.test_size, config.d, config.R, config.q)
    fte = target(Xte)
    seeds = m_rng.integers(2**63, size=len(config.families))
    out = {}
    for fam, s in zip(config.families, seeds):
        pred, _ = fit_family(fam, config, train, np.random.default_rng(int(s)))
        out[fam] = float(np.mean((pred(Xte) - fte) ** 2))
    return out


def _run_star(args):
    return run_replicate(*args)


@dataclass
class AdaptivityResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)      # (family, n, mean, se, replicates)
    risks: dict = field(default_factory=dict)     # (family, n) -> per-replicate risks

    def to_csv(self, timestamp=False):
        buf = io.StringIO()
        if timestamp:
            buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
        buf.write(CSV_HEADER)
        for row in self.rows:
            buf.write(_row_line(row))
        return buf.getvalue()

    def win_fraction(self, a, b, n):
        ra, rb = np.array(self.risks[(a, n)]), np.array(self.risks[(b, n)])
        return float(np.mean(ra < rb))


CSV_HEADER = "family,n,mean_test_risk,se,replicates\n"


def _row_line(row):
    fam, n, mean, se, reps = row
    return f"{fam},{n},{mean!r},{se!r},{reps}\n"


def run_adaptivity(config: ExperimentConfig, out=None, timestamp=False) -> AdaptivityResult:
    """Train every family at every n over the replicates and tabulate test risk.

    Rows are appended to ``out`` (a path) as soon as an n is finished, so an
    interrupted run keeps what it completed.
    """
    out = out or config.out
    result = AdaptivityResult(config)
    fh = None
    if out:
        fh = open(out, "w")
        if timestamp:
            fh.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
        fh.write(CSV_HEADER)
        fh.flush()
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for n in config.n_grid:
            jobs = [(config, n, rep) for rep in range(config.replicates)]
            reps = list(pool.map(_run_star, jobs)) if pool else [_run_star(j) for j in jobs]
            for fam in config.families:
                vals = np.array([r[fam] for r in reps])
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
                row = (fam, n, float(vals.mean()), se, int(vals.size))
                result.rows.append(row)
                result.risks[(fam, n)] = vals.tolist()
                if fh:
                    fh.write(_row_line(row))
                    fh.flush()
    finally:
        if pool:
            pool.shutdown()
        if fh:
            fh.close()
    return result


def config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    if math.isinf(d["q"]):
        d["q"] = "inf"
    return d
