"""Conditional gradient over the ball {gamma_1(f) <= delta}.

The iterate is kept as a finite signed measure.  Each step asks an oracle
for the unit whose response best correlates with g = -l'(y, f(x)) and moves
towards delta * sign * phi_v.  Sign convention: the oracle maximises
|(1/n) sum_i g_i phi_v(x_i)| and reports which side won, so the extreme point
used is delta * sign * phi_v.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvexNNError, InvalidArgument
from .losses import Loss, loss_eval, loss_grad, smoothing_schedule
from .model import (Dataset, SignedMeasureModel, Unit, activation, caratheodory_reduce,
                    predict_many)
from .oracles import make_oracle

RULES = ("harmonic", "line-search", "fully-corrective")
RULE_ALIASES = {"linesearch": "line-search", "ls": "line-search",
                "fc": "fully-corrective", "fully_corrective": "fully-corrective"}


@dataclass(frozen=True)
class FWConfig:
    delta: float
    steps: int
    step_rule: str = "line-search"
    oracle_method: str = "exact"
    alpha: int = 1
    p: float = 2.0
    smoothing: float | None = None      # c in eps_t = c / sqrt(t + 1)
    seed: int = 0
    restarts: int = 20
    gap_tol: float = 0.0

    def __post_init__(self):
        rule = RULE_ALIASES.get(self.step_rule, self.step_rule)
        if rule not in RULES:
            raise InvalidArgument(f"unknown step rule {self.step_rule!r}")
        if not self.delta > 0:
            raise InvalidArgument("delta must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidArgument("steps must be a positive integer")
        if self.smoothing is not None and not self.smoothing > 0:
            raise InvalidArgument("smoothing constant must be positive")
        object.__setattr__(self, "step_rule", rule)
        object.__setattr__(self, "steps", int(self.steps))


def _ro(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrainTrace:
    """Per-iteration record.

    ``risk[t]`` and ``gap[t]`` describe the iterate before step t; the last
    entry of each describes the returned model, so they are one longer than
    ``steps``/``units``.
    """

    risk: np.ndarray
    gap: np.ndarray
    steps: np.ndarray
    units: np.ndarray          # chosen directions, one row per step
    signs: np.ndarray
    oracle_values: np.ndarray
    variation: np.ndarray      # gamma_1 after each step
    stopped_early: bool = False
    info: dict = field(default_factory=dict, compare=False)

    @property
    def iterations(self):
        return self.steps.size

    def running_min_gap(self):
        return np.minimum.accumulate(self.gap)


class _Recorder:
    def __init__(self, D):
        self.risk, self.gap, self.steps, self.units = [], [], [], []
        self.signs, self.vals, self.var = [], [], []
        self.D = D

    def freeze(self, stopped=False, **info):
        units = np.array(self.units).reshape(-1, self.D)
        return TrainTrace(_ro(self.risk), _ro(self.gap), _ro(self.steps), _ro(units),
                          _ro(self.signs, int), _ro(self.vals), _ro(self.var), stopped, info)


# ------------------------------------------------------------ weight solves

def project_l1_ball(w, radius):
    """Euclidean projection onto {|w|_1 <= radius} by the sort-based method."""
    w = np.asarray(w, dtype=float)
    if np.sum(np.abs(w)) <= radius:
        return w.copy()
    u = np.sort(np.abs(w))[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.nonzero(u * j > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(w) * np.maximum(np.abs(w) - theta, 0.0)


def _risk(loss, y, u):
    return float(np.mean(loss_eval(loss, y, u)))


def fully_corrective(units, dataset: Dataset, loss: Loss, delta: float, alpha: int = 1,
                     weights0=None, tol=1e-9, max_iter=50_000, return_info=False):
    """Weights minimising the empirical risk of fixed units over |eta|_1 <= delta.

    Accelerated projected gradient with adaptive restart; stops when the
    Frank-Wolfe gap over this finite dictionary falls below tol (relative).
    """
    if not delta > 0:
        raise InvalidArgument("delta must be positive")
    if not loss.smooth:
        raise InvalidArgument("fully-corrective weights need a smooth loss")
    V = np.atleast_2d(np.vstack([u.v if isinstance(u, Unit) else np.asarray(u, float)
                                 for u in units]))
    if V.shape[0] == 0:
        raise InvalidArgument("at least one unit is required")
    Z = dataset.zs
    Phi = activation(Z @ V.T / dataset.R, alpha)
    y = dataset.ys
    n, k = Phi.shape
    ymax = max(1.0, float(np.max(np.abs(y)))) if n else 1.0
    Lf = loss.smoothness(ymax) * np.linalg.norm(Phi, 2) ** 2 / n
    if Lf == 0:
        w = np.zeros(k) if weights0 is None else project_l1_ball(weights0, delta)
        return (w, {"iterations": 0, "gap": 0.0}) if return_info else w
    step = 1.0 / Lf
    w = np.zeros(k) if weights0 is None else project_l1_ball(np.asarray(weights0, float), delta)

    def grad(w):
        return Phi.T @ loss_grad(loss, y, Phi @ w) / n

    x, yk, tk = w.copy(), w.copy(), 1.0
    fx = _risk(loss, y, Phi @ x)
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = grad(yk)
        xn = project_l1_ball(yk - step * g, delta)
        fn = _risk(loss, y, Phi @ xn)
        if fn > fx:
            # restart momentum from the last good point
            yk, tk = x.copy(), 1.0
            g = grad(x)
            xn = project_l1_ball(x - step * g, delta)
            fn = _risk(loss, y, Phi @ xn)
        tn = 0.5 * (1 + np.sqrt(1 + 4 * tk * tk))
        yk = xn + ((tk - 1) / tn) * (xn - x)
        x, fx, tk = xn, fn, tn
        if it % 10 == 0 or it == 1:
            gx = grad(x)
            gap = float(gx @ x + delta * np.max(np.abs(gx)))
            if gap <= tol * max(1.0, abs(fx)):
                break
            if loss.kind == "squared" and it % 200 == 0:
                # first-order methods crawl near a degenerate optimum; once the
                # support has settled, the face problem is a linear system
                polished = _face_solve(Phi, y, x, delta)
                if polished is not None:
                    gp = grad(polished)
                    gap_p = float(gp @ polished + delta * np.max(np.abs(gp)))
                    if gap_p < gap:
                        x, yk, tk = polished, polished.copy(), 1.0
                        fx, gap = _risk(loss, y, Phi @ x), gap_p
                        if gap <= tol * max(1.0, abs(fx)):
                            break
    info = {"iterations": it, "gap": gap, "risk": fx}
    return (x, info) if return_info else x


def _face_solve(Phi, y, w, delta):
    """Least squares restricted to the support and signs of w.

    On the sphere |w|_1 = delta the sign row enters as an equality
    constraint.  Returns None unless the answer keeps the signs and stays in
    the ball.
    """
    S = np.abs(w) > 1e-12 * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if not np.any(S):
        return None
    A, sg = Phi[:, S], np.sign(w[S])
    if abs(np.sum(np.abs(w)) - delta) <= 1e-6 * delta:
        K = np.block([[A.T @ A, sg[:, None]], [sg[None, :], np.zeros((1, 1))]])
        sol = np.linalg.lstsq(K, np.concatenate([A.T @ y, [delta]]), rcond=None)[0][:-1]
    else:
        sol = np.linalg.lstsq(A, y, rcond=None)[0]
    if np.any(sol * sg <= 0) or np.sum(np.abs(sol)) > delta * (1 + 1e-12):
        return None
    out = np.zeros_like(w)
    out[S] = sol
    return out


def _line_search(loss, y, f, s, tol=1e-12):
    """argmin over rho in [0, 1] of the risk along f + rho (s - f), by bisection on the slope."""
    d = s - f
    if not np.any(d):
        return 0.0

    def slope(r):
        return float(np.mean(loss_grad(loss, y, f + r * d) * d))

    if slope(0.0) >= 0:
        return 0.0
    if slope(1.0) <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
    # the bracket ends can differ in risk for kinked losses; keep the better
    return lo if _risk(loss, y, f + lo * d) <= _risk(loss, y, f + hi * d) else hi


# ------------------------------------------------------------- certificates

def _gap_parts(oracle, Z, g, alpha, p, R, delta, preds):
    res = oracle(Z, g, alpha, p=p, R=R)
    n = Z.shape[0]
    gap = delta * res.value - float(g @ preds) / n
    return res, gap


def duality_gap(model: SignedMeasureModel, dataset: Dataset, loss: Loss, delta: float,
                oracle=None) -> float:
    """delta * max_v |(1/n) sum g_i phi_v(x_i)| - (1/n) sum g_i f(x_i), g = -l'(y, f(x)).

    Upper bounds the excess risk over the delta-ball whenever gamma_1(f) <= delta.
    """
    oracle = oracle or make_oracle("exact")
    preds = predict_many(model, dataset.xs)
    g = -loss_grad(loss, dataset.ys, preds)
    _, gap = _gap_parts(oracle, dataset.zs, g, model.alpha, model.p, dataset.R, delta, preds)
    return float(gap)


# --------------------------------------------------------------- the trainer

def _merge(etas, V, w, v):
    """Add weight w on direction v, merging with an identical stored direction."""
    if V.shape[0]:
        hit = np.nonzero(np.all(V == v, axis=1))[0]
        if hit.size:
            etas = etas.copy()
            etas[hit[0]] += w
            return etas, V
    return np.append(etas, w), np.vstack([V, v[None, :]]) if V.size else v[None, :].copy()


def _prune(etas, V, dataset, alpha, p):
    """Caratheodory reduction to at most n+1 units; predictions and l1 norm are kept."""
    m = SignedMeasureModel(alpha, p, dataset.R, etas, V)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        red, info = caratheodory_reduce(m, dataset.xs, return_info=True)
    if info["status"] != "ok":
        return etas, V
    return red.etas.copy(), red.V.copy()


def _resolve_oracle(config, oracle):
    if oracle is not None:
        return oracle
    return make_oracle(config.oracle_method, restarts=config.restarts, seed=config.seed)


def fw_train(dataset: Dataset, loss: Loss, config: FWConfig, oracle=None):
    """Frank-Wolfe from f_0 = 0.  Returns (model, trace).

    If the oracle raises, the error is re-raised with ``partial`` set to the
    (model, trace) reached so far.
    """
    if not loss.smooth and config.smoothing is None and config.step_rule != "harmonic":
        raise InvalidArgument("a non-smooth loss needs a smoothing schedule")
    if config.step_rule == "fully-corrective" and not loss.smooth and config.smoothing is None:
        raise InvalidArgument("fully-corrective weights need a smooth loss")
    oracle = _resolve_oracle(config, oracle)
    Z, y, R = dataset.zs, dataset.ys, dataset.R
    n, D = Z.shape
    alpha, p, delta = config.alpha, config.p, float(config.delta)
    etas = np.zeros(0)
    V = np.zeros((0, D))
    preds = np.zeros(n)
    rec = _Recorder(D)

    def model_now():
        keep = etas != 0
        return SignedMeasureModel(alpha, p, R, etas[keep], V[keep] if V.size else np.zeros((0, D)))

    stopped = False
    for t in range(config.steps + 1):
        step_loss = loss if config.smoothing is None else smoothing_schedule(loss, t, config.smoothing)
        g = -loss_grad(step_loss, y, preds)
        try:
            res, gap = _gap_parts(oracle, Z, g, alpha, p, R, delta, preds)
        except ConvexNNError as exc:
            exc.partial = (model_now(), rec.freeze(True, failed_at=t))
            raise
        rec.risk.append(_risk(loss, y, preds))
        rec.gap.append(gap)
        if t == config.steps:
            break
        if gap <= config.gap_tol:
            stopped = True
            break
        v = res.unit.v
        s = delta * res.sign * activation(Z @ v / R, alpha)
        if config.step_rule == "harmonic":
            rho = 2.0 / (t + 2.0)           # 2 / (t + 1) with t counted from 1
        else:
            rho = _line_search(step_loss, y, preds, s)
        if config.step_rule == "fully-corrective":
            # warm start from the plain line-search iterate
            w0, V = _merge((1 - rho) * etas, V, rho * delta * res.sign, v)
            # solve the inner problem only a little past the current outer gap
            inner_tol = min(1e-3, max(1e-9, 0.1 * gap / max(1.0, rec.risk[-1])))
            etas = fully_corrective(list(V), dataset, step_loss, delta, alpha, weights0=w0,
                                    tol=inner_tol)
            keep = etas != 0
            etas, V = etas[keep], V[keep]
            if etas.size > n + 1:
                etas, V = _prune(etas, V, dataset, alpha, p)
            preds = activation(Z @ V.T / R, alpha) @ etas if etas.size else np.zeros(n)
        elif rho > 0:
            etas, V = _merge((1 - rho) * etas, V, rho * delta * res.sign, v)
            preds = (1 - rho) * preds + rho * s
        rec.steps.append(rho)
        rec.units.append(v)
        rec.signs.append(res.sign)
        rec.vals.append(res.value)
        rec.var.append(float(np.sum(np.abs(etas))))
    return model_now(), rec.freeze(stopped)


def fw_train_approx(dataset: Dataset, loss: Loss, config: FWConfig, kappa_oracle):
    """Frank-Wolfe driven by a multiplicative-approximate oracle.

    The step minimises the risk on the segment towards the returned extreme
    point, which is all the approximate analysis needs.
    """
    if config.step_rule != "line-search":
        config = FWConfig(**{**config.__dict__, "step_rule": "line-search"})
    return fw_train(dataset, loss, config, oracle=kappa_oracle)


def dictionary_optimum(dataset: Dataset, loss: Loss, radius: float, alpha: int, directions,
                       tol=1e-10):
    """Best risk over the radius-ball spanned by a finite set of directions."""
    w, info = fully_corrective(list(np.atleast_2d(directions)), dataset, loss, radius, alpha,
                               tol=tol, max_iter=200_000, return_info=True)
    return info["risk"], w
