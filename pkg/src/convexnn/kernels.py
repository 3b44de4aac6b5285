"""Arc-cosine type kernels of the units (v^T z)_+^alpha and random features.

For inputs in R^d the kernel averages over v uniform on the unit sphere of
R^{d+1} acting on z' = (x / R, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericalFailure, UnsupportedAlpha
from .model import activation

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    alpha: int
    d: int
    R: float = 1.0

    def __post_init__(self):
        if self.alpha not in (0, 1, 2):
            raise UnsupportedAlpha(f"no closed-form kernel for alpha={self.alpha}")
        if self.d < 1 or not self.R > 0:
            raise InvalidArgument("need d >= 1 and R > 0")


def _lift(X, R):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X / R, np.ones((X.shape[0], 1))])


def _angle_parts(X, Y, R):
    zx, zy = _lift(X, R), _lift(Y, R)
    nx = np.linalg.norm(zx, axis=1)
    ny = np.linalg.norm(zy, axis=1)
    c = (zx @ zy.T) / np.outer(nx, ny)
    if np.any(np.abs(c) > 1 + CLAMP_TOL * 1e3):
        raise NumericalFailure("cosine far outside [-1, 1]")
    c = np.clip(c, -1.0, 1.0)
    return nx, ny, c, np.arccos(c)


def gram(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Closed-form kernel matrix k_alpha(x_i, y_j)."""
    Y = X if Y is None else Y
    nx, ny, c, phi = _angle_parts(X, Y, spec.R)
    s = np.sqrt(np.maximum(1.0 - c * c, 0.0))
    d1 = spec.d + 1
    if spec.alpha == 0:
        return (np.pi - phi) / (2 * np.pi)
    if spec.alpha == 1:
        return np.outer(nx, ny) / (2 * d1 * np.pi) * ((np.pi - phi) * c + s)
    return (np.outer(nx, ny) ** 2 / (2 * np.pi * d1 * (d1 + 2))
            * (3 * s * c + (np.pi - phi) * (1 + 2 * c * c)))


def kernel(spec: KernelSpec, x, xp) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    if x.size != spec.d or xp.size != spec.d:
        raise InvalidArgument("input dimension does not match spec.d")
    return float(gram(spec, x[None, :], xp[None, :])[0, 0])


def sphere_sample(rng, m, dim):
    g = rng.standard_normal((m, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def kernel_mc(spec: KernelSpec, x, xp, m: int, seed: int, chunk=1_000_000):
    """Monte-Carlo mean of (v^T z')_+^a (v^T z'')_+^a with its standard error."""
    if m < 1:
        raise InvalidArgument("m must be positive")
    rng = np.random.default_rng(seed)
    za = _lift(np.atleast_1d(x)[None, :], spec.R)[0]
    zb = _lift(np.atleast_1d(xp)[None, :], spec.R)[0]
    # only v^T z' and v^T z'' matter: write v = g / |g| with g Gaussian, keep the
    # two coordinates of g in span(z', z'') and draw the rest of |g|^2 as chi-square
    D = spec.d + 1
    basis = np.linalg.svd(np.stack([za, zb]), full_matrices=False)[2]
    ca, cb = basis @ za, basis @ zb
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < m:
        b = min(chunk, m - done)
        g = rng.standard_normal((b, 2))
        sq = np.einsum("ij,ij->i", g, g)
        if D > 2:
            sq += rng.chisquare(D - 2, b)
        g /= np.sqrt(sq)[:, None]
        prod = activation(g @ ca, spec.alpha) * activation(g @ cb, spec.alpha)
        total += prod.sum()
        total_sq += (prod * prod).sum()
        done += b
    mean = total / m
    if m == 1:
        return float(mean), float("nan")
    var = max(total_sq / m - mean * mean, 0.0) * m / (m - 1)
    return float(mean), float(np.sqrt(var / m))


@dataclass(frozen=True)
class RandomFeatureMap:
    alpha: int
    R: float
    V: np.ndarray          # (m, d+1) unit directions

    @property
    def m(self):
        return self.V.shape[0]


def random_features(spec_or_alpha, m: int, seed: int, d=None, R=1.0, p=2.0) -> RandomFeatureMap:
    """m directions drawn uniformly from the unit l2 sphere of R^{d+1}."""
    if isinstance(spec_or_alpha, KernelSpec):
        alpha, d, R = spec_or_alpha.alpha, spec_or_alpha.d, spec_or_alpha.R
    else:
        alpha = int(spec_or_alpha)
        if d is None:
            raise InvalidArgument("d is required without a KernelSpec")
    if m < 1:
        raise InvalidArgument("m must be positive")
    rng = np.random.default_rng(seed)
    V = sphere_sample(rng, m, d + 1)
    if p != 2.0:
        V = V / (np.sum(np.abs(V) ** p, axis=1, keepdims=True) ** (1.0 / p))
    V.setflags(write=False)
    return RandomFeatureMap(alpha, float(R), V)


def featurize(fmap: RandomFeatureMap, X) -> np.ndarray:
    """Rows (1/sqrt m) (v_j^T (x/R, 1))_+^alpha; dot products estimate the kernel."""
    Z = _lift(X, fmap.R)
    return activation(Z @ fmap.V.T, fmap.alpha) / np.sqrt(fmap.m)


def rf_sup_error(spec: KernelSpec, fmap: RandomFeatureMap, probes) -> float:
    F = featurize(fmap, probes)
    return float(np.max(np.abs(F @ F.T - gram(spec, probes))))


def probe_grid(d, R=1.0, per_axis=None, seed=0, count=64):
    """Fixed probe set: a regular grid in d <= 2, seeded ball samples above."""
    if d == 1:
        return np.linspace(-R, R, per_axis or count)[:, None]
    if d == 2:
        k = per_axis or 8
        g = np.linspace(-R, R, k)
        P = np.array([(a, b) for a in g for b in g])
        return P[np.linalg.norm(P, axis=1) <= R]
    rng = np.random.default_rng(seed)
    return uniform_ball(rng, count, d, R)


def uniform_ball(rng, n, d, R=1.0, q=2.0):
    """n points uniform in the l_q ball of radius R (q = 2 or inf)."""
    if np.isinf(q):
        return rng.uniform(-R, R, size=(n, d))
    if q != 2.0:
        raise InvalidArgument("uniform sampling implemented for q = 2 and q = inf")
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.uniform(size=(n, 1)) ** (1.0 / d)
    return R * r * g


# ------------------------------------------------------------------ F2 estimators

@dataclass(frozen=True)
class KernelPredictor:
    spec: KernelSpec
    X: np.ndarray
    coef: np.ndarray

    def __call__(self, Xnew):
        return gram(self.spec, Xnew, self.X) @ self.coef


@dataclass(frozen=True)
class FeaturePredictor:
    fmap: RandomFeatureMap
    w: np.ndarray

    def __call__(self, Xnew):
        return featurize(self.fmap, Xnew) @ self.w


def f2_kernel_ridge(X, y, spec: KernelSpec, lam: float, jitter=1e-10):
    """argmin (1/n)||y - K c||^2 + lam c^T K c, i.e. c = (K + n lam I)^{-1} y."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n > 2000:
        raise InvalidArgument("exact kernel path is limited to n <= 2000")
    K = gram(spec, X)
    A = K + n * lam * np.eye(n) + jitter * np.trace(K) * np.eye(n)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("kernel system is not positive definite") from exc
    coef = np.linalg.solve(L.T, np.linalg.solve(L, y))
    return KernelPredictor(spec, X, coef)


def f2_random_features(X, y, fmap: RandomFeatureMap, lam: float):
    """Ridge on the random features: w = (F^T F + n lam I)^{-1} F^T y."""
    F = featurize(fmap, X)
    n, m = F.shape
    A = F.T @ F + n * lam * np.eye(m)
    try:
        w = np.linalg.solve(A, F.T @ y)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("random-feature system is singular") from exc
    return FeaturePredictor(fmap, w)
