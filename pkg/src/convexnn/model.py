"""Datasets, units and finite signed-measure predictors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ReductionFailed

UNIT_TOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def lp_norm(v, p):
    v = np.asarray(v, dtype=float)
    if np.isinf(p):
        return float(np.max(np.abs(v))) if v.size else 0.0
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def activation(u, alpha):
    """(u)_+^alpha with the strict convention 1[u > 0] at alpha = 0."""
    u = np.asarray(u, dtype=float)
    if alpha == 0:
        return (u > 0).astype(float)
    if alpha == 1:
        return np.maximum(u, 0.0)
    return np.maximum(u, 0.0) ** alpha


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    R: float = 1.0
    q: float = 2.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs[:, None]
        ys = np.asarray(self.ys, dtype=float).ravel()
        if xs.shape[0] != ys.shape[0]:
            raise InvalidArgument(f"{xs.shape[0]} inputs but {ys.shape[0]} targets")
        if not self.R > 0:
            raise InvalidArgument("R must be positive")
        if not (2.0 <= self.q <= np.inf):
            raise InvalidArgument("q must lie in [2, inf]")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise InvalidArgument("non-finite values in dataset")
        norms = np.array([lp_norm(x, self.q) for x in xs])
        if norms.size and norms.max() > self.R * (1 + 1e-12):
            i = int(norms.argmax())
            raise InvalidArgument(
                f"row {i} has l{self.q:g} norm {norms[i]:.6g} > R={self.R:g}")
        object.__setattr__(self, "xs", _frozen(xs))
        object.__setattr__(self, "ys", _frozen(ys))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "q", float(self.q))

    @property
    def n(self):
        return self.xs.shape[0]

    @property
    def d(self):
        return self.xs.shape[1]

    @property
    def zs(self):
        return augment_many(self.xs, self.R)


def augment(x, R):
    """Lift x to z = (x, R)."""
    if not R > 0:
        raise InvalidArgument("R must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.append(x, float(R))


def augment_many(X, R):
    if not R > 0:
        raise InvalidArgument("R must be positive")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.hstack([X, np.full((X.shape[0], 1), float(R))])


@dataclass(frozen=True)
class Unit:
    v: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).ravel()
        if not 1.0 <= self.p <= 2.0:
            raise InvalidArgument("p must lie in [1, 2]")
        nrm = lp_norm(v, self.p)
        if abs(nrm - 1.0) > UNIT_TOL:
            raise InvalidArgument(f"unit has l{self.p:g} norm {nrm!r}, expected 1")
        object.__setattr__(self, "v", _frozen(v))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def from_direction(cls, w, p=2.0):
        w = np.asarray(w, dtype=float).ravel()
        nrm = lp_norm(w, p)
        if nrm == 0 or not np.isfinite(nrm):
            raise InvalidArgument("cannot normalize a zero direction")
        v = w / nrm
        # one more pass absorbs the rounding of the first division
        v = v / lp_norm(v, p) + 0.0      # + 0.0 drops negative zeros
        return cls(v, p)


@dataclass(frozen=True)
class SignedMeasureModel:
    """Finite signed measure sum_j eta_j delta_{v_j}.

    Predictions are ``sum_j eta_j (v_j^T z / R)_+^alpha`` with ``z = (x, R)``.
    Weights and directions are held as arrays; ``units`` gives the list view.
    """

    alpha: int
    p: float
    R: float
    etas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    V: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise InvalidArgument("alpha must be a nonnegative integer")
        if not 1.0 <= self.p <= 2.0:
            raise InvalidArgument("p must lie in [1, 2]")
        if not self.R > 0:
            raise InvalidArgument("R must be positive")
        etas = np.asarray(self.etas, dtype=float).ravel()
        V = np.asarray(self.V, dtype=float)
        if etas.size == 0:
            V = V.reshape(0, V.shape[1] if V.ndim == 2 else 0)
        V = np.atleast_2d(V)
        if V.shape[0] != etas.size:
            raise InvalidArgument("one direction per weight is required")
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(etas))):
            raise InvalidArgument("non-finite weight or direction")
        for row in V:
            if abs(lp_norm(row, self.p) - 1.0) > UNIT_TOL:
                raise InvalidArgument("every direction must have unit norm")
        object.__setattr__(self, "alpha", int(self.alpha))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "etas", _frozen(etas))
        object.__setattr__(self, "V", _frozen(V))

    @classmethod
    def from_units(cls, alpha, p, R, units):
        units = list(units)
        if not units:
            return cls(alpha, p, R)
        etas = [float(e) for e, _ in units]
        V = np.vstack([u.v if isinstance(u, Unit) else np.asarray(u, float) for _, u in units])
        return cls(alpha, p, R, etas, V)

    @property
    def units(self):
        return [(float(e), Unit(v, self.p)) for e, v in zip(self.etas, self.V)]

    @property
    def k(self):
        return self.etas.size

    @property
    def input_dim(self):
        return self.V.shape[1] - 1 if self.k else None

    def scaled(self, c):
        return SignedMeasureModel(self.alpha, self.p, self.R, c * self.etas, self.V)

    def drop_zeros(self):
        keep = self.etas != 0
        return SignedMeasureModel(self.alpha, self.p, self.R, self.etas[keep], self.V[keep])


def unit_responses(V, Z, alpha, R):
    """Matrix of (v_j^T z_i / R)_+^alpha, shape (n, k)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return activation(Z @ V.T / R, alpha)


def predict_many(model: SignedMeasureModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if model.k == 0 or model.V.shape[1] == 2 else X[None, :]
    if model.k == 0:
        return np.zeros(X.shape[0])
    if X.shape[1] + 1 != model.V.shape[1]:
        raise InvalidArgument(
            f"input dimension {X.shape[1]} does not match model dimension {model.V.shape[1] - 1}")
    Z = augment_many(X, model.R)
    return unit_responses(model.V, Z, model.alpha, model.R) @ model.etas


def predict(model: SignedMeasureModel, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if model.k == 0:
        return 0.0
    if x.ndim != 1:
        raise InvalidArgument("predict takes a single input vector")
    return float(predict_many(model, x[None, :])[0])


def variation_norm(model: SignedMeasureModel) -> float:
    return float(np.sum(np.abs(model.etas)))


def concatenate(f: SignedMeasureModel, g: SignedMeasureModel, rho: float):
    """(1 - rho) f + rho g with concatenated supports."""
    if (f.alpha, f.p, f.R) != (g.alpha, g.p, g.R):
        raise InvalidArgument("models differ in alpha, p or R")
    parts = [m for m in (f, g) if m.k]
    if not parts:
        return SignedMeasureModel(f.alpha, f.p, f.R)
    etas = np.concatenate([(1 - rho) * f.etas, rho * g.etas])
    V = np.vstack([m.V for m in parts])
    return SignedMeasureModel(f.alpha, f.p, f.R, etas, V)


def caratheodory_reduce(model: SignedMeasureModel, xs, tol=1e-8, return_info=False):
    """Shrink the support to at most n+1 units without moving predictions at xs.

    Each pass takes a null vector of the stacked matrix [responses; sign(eta)]
    and slides the weights along it until one of them vanishes.  The sign row
    keeps the l1 norm fixed as long as no weight changes sign, which the step
    length guarantees.
    """
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    info = {"status": "ok", "iterations": 0, "max_residual": 0.0}
    m = model.drop_zeros()
    if m.k <= n + 1:
        return (m, info) if return_info else m
    Phi = unit_responses(m.V, augment_many(X, m.R), m.alpha, m.R)
    etas = m.etas.copy()
    idx = np.arange(m.k)
    scale = max(1.0, np.abs(Phi).max())
    while idx.size > n + 1:
        M = np.vstack([Phi[:, idx], np.sign(etas[idx])])
        _, _, Vt = np.linalg.svd(M)
        c = Vt[-1]
        res = float(np.linalg.norm(M @ c))
        info["max_residual"] = max(info["max_residual"], res)
        if res > tol * scale:
            info["status"] = "reduction-failed"
            msg = f"null-space residual {res:.3g} above tolerance"
            warnings.warn(msg, RuntimeWarning)
            if return_info:
                return model, info
            raise ReductionFailed(msg, result=model)
        e = etas[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -e / c
        # the step that first drives a weight to zero from either side
        pos = np.where((c != 0) & (t > 0), t, np.inf)
        neg = np.where((c != 0) & (t < 0), -t, np.inf)
        if np.min(pos) <= np.min(neg):
            j = int(np.argmin(pos))
            step = pos[j]
        else:
            j = int(np.argmin(neg))
            step = -neg[j]
        new = e + step * c
        new[j] = 0.0
        etas[idx] = new
        keep = new != 0
        idx = idx[keep]
        info["iterations"] += 1
    out = SignedMeasureModel(m.alpha, m.p, m.R, etas[idx], m.V[idx])
    return (out, info) if return_info else out
