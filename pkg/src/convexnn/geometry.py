"""Zonotopes, ellipsoids and Hausdorff distances between them.

A zonotope here is the Minkowski sum of segments [0, t_i]; its support
function is sum_i max(0, t_i^T w).  For convex bodies the Hausdorff distance
equals sup over unit w of |h_1(w) - h_2(w)|, which gives a second,
independent route used for checking (``support_gap_sampled``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear, minimize, minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from .errors import BudgetExceeded, InvalidArgument, NonConverged, RankDeficient

MAX_VERTEX_GENERATORS = 22
SAMPLED_MAX_DIM = 3


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Zonotope:
    """{sum_i b_i t_i : b in [0, 1]^r} with generators as rows."""

    generators: np.ndarray
    dim: int | None = None

    def __post_init__(self):
        T = np.asarray(self.generators, dtype=float)
        if T.size == 0:
            if self.dim is None:
                raise InvalidArgument("an empty zonotope needs an explicit dim")
            T = np.zeros((0, int(self.dim)))
        T = np.atleast_2d(T)
        if self.dim is not None and T.shape[1] != self.dim:
            raise InvalidArgument("generator length does not match dim")
        if not np.all(np.isfinite(T)):
            raise InvalidArgument("non-finite generator")
        object.__setattr__(self, "generators", _frozen(T))
        object.__setattr__(self, "dim", T.shape[1])

    @property
    def r(self):
        return self.generators.shape[0]


def support(Z: Zonotope, w) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != Z.dim:
        raise InvalidArgument("direction length does not match the zonotope")
    return float(np.sum(np.maximum(Z.generators @ w, 0.0)))


def _support_many(Z, W):
    if Z.r == 0:
        return np.zeros(W.shape[0])
    return np.maximum(W @ Z.generators.T, 0.0).sum(axis=1)


def zonotope_vertices(Z: Zonotope) -> np.ndarray:
    """Extreme points, from the 2^r subset sums pruned by a convex hull."""
    if Z.r > MAX_VERTEX_GENERATORS:
        raise BudgetExceeded(f"{Z.r} generators exceed the vertex budget")
    if Z.r == 0:
        return np.zeros((1, Z.dim))
    B = np.array(list(itertools.product((0.0, 1.0), repeat=Z.r)))
    pts = B @ Z.generators
    if Z.dim == 1:
        return np.array([[pts.min()], [pts.max()]])
    try:
        hull = ConvexHull(pts)
        return pts[hull.vertices]
    except (QhullError, ValueError):
        # flat body: every subset sum is kept, which is still exact
        return pts


def _dist_to_zonotope(x, Z):
    if Z.r == 0:
        return float(np.linalg.norm(x))
    res = lsq_linear(Z.generators.T, x, bounds=(0.0, 1.0), method="bvls", tol=1e-14)
    return float(np.linalg.norm(Z.generators.T @ res.x - x))


def _one_sided(Za, Zb):
    return max(_dist_to_zonotope(p, Zb) for p in zonotope_vertices(Za))


def _dual_exponent(q):
    if np.isinf(q):
        return 1.0
    if q == 1:
        return np.inf
    return q / (q - 1.0)


def _unit_dirs(D, p, count, seed=0):
    if D == 1:
        W = np.array([[1.0], [-1.0]])
    elif D == 2:
        th = np.linspace(0, 2 * np.pi, count, endpoint=False)
        W = np.c_[np.cos(th), np.sin(th)]
    else:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * i / count)
        th = np.pi * (1 + 5 ** 0.5) * i
        W = np.c_[np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)]
        if D > 3:
            rng = np.random.default_rng(seed)
            W = rng.standard_normal((count, D))
    return _normalize_rows(W, p)


def _normalize_rows(W, p):
    if np.isinf(p):
        return W / np.max(np.abs(W), axis=1, keepdims=True)
    return W / (np.sum(np.abs(W) ** p, axis=1, keepdims=True) ** (1.0 / p))


def support_gap_sampled(h1, h2, dim, q=2.0, count=100_000, refine=8, seed=0) -> float:
    """sup over ||w||_{q*} = 1 of |h1(w) - h2(w)| by dense sampling plus local refinement.

    ``h1``/``h2`` map an (m, dim) array of directions to m support values.
    """
    if dim > SAMPLED_MAX_DIM:
        raise BudgetExceeded("directional sampling is limited to dimension 3")
    p = _dual_exponent(q)
    W = _unit_dirs(dim, p, count, seed)
    gap = np.abs(h1(W) - h2(W))
    best = float(gap.max())
    if dim == 1:
        return best

    def neg(x):
        w = _normalize_rows(x[None, :], p)
        return -abs(float(h1(w)[0] - h2(w)[0]))

    for i in np.argsort(gap)[-refine:]:
        res = minimize(neg, W[i], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


def zonotope_hausdorff(Zp: Zonotope, Zm: Zonotope, q=2.0) -> float:
    """Hausdorff distance in the l_q norm.

    q = 2 with at most 22 generators in total: exact, via the vertices of
    each body and a bounded least-squares projection onto the other.
    Otherwise the support-function route in dimension <= 3.
    """
    if Zp.dim != Zm.dim:
        raise InvalidArgument("zonotopes live in different dimensions")
    if Zp.r == Zm.r and np.array_equal(np.unique(Zp.generators, axis=0),
                                       np.unique(Zm.generators, axis=0)):
        return 0.0
    if q == 2 and Zp.r + Zm.r <= MAX_VERTEX_GENERATORS:
        return max(_one_sided(Zp, Zm), _one_sided(Zm, Zp))
    if Zp.dim <= SAMPLED_MAX_DIM:
        return support_gap_sampled(lambda W: _support_many(Zp, W),
                                   lambda W: _support_many(Zm, W), Zp.dim, q)
    raise BudgetExceeded("too many generators for vertex enumeration in dimension > 3")


def _split(zs, y, power=1.0, R=1.0):
    Z = np.atleast_2d(np.asarray(zs, dtype=float)) / R
    y = np.asarray(y, dtype=float).ravel()
    if Z.shape[0] != y.size:
        raise InvalidArgument("one target per point is required")
    T = (np.abs(y) ** power)[:, None] * Z
    pos = y > 0
    neg = y < 0
    return (Zonotope(T[pos], dim=Z.shape[1]), Zonotope(T[neg], dim=Z.shape[1]))


def fw_step_as_hausdorff(zs, y, R=1.0) -> float:
    """Hausdorff distance between the zonotopes of |y_i| z_i / R split by sign of y."""
    Zp, Zm = _split(zs, y, 1.0, R)
    return zonotope_hausdorff(Zp, Zm)


# ---------------------------------------------------------------- alpha >= 2

@dataclass(frozen=True)
class SaddleResult:
    value: float
    b_pos: np.ndarray
    converged: bool
    diagnostics: dict = field(default_factory=dict, compare=False)


def alpha2_saddle(zs, y, beta=None, alpha=2, starts=24, seed=0, R=1.0,
                  return_result=False):
    """max_{b+ >= 0} min_{b- >= 0} ||T+^T b+ - T-^T b-|| - |b+|_beta^beta / beta + |b-|_beta^beta / beta.

    Generators are t_i = |y_i|^{1/alpha} z_i.  The inner problem is convex and
    solved by bounded L-BFGS; the outer one is not concave and gets a
    multi-start bounded L-BFGS driven by the envelope gradient.
    """
    if alpha < 2:
        raise InvalidArgument("the saddle form needs alpha >= 2")
    if beta is None:
        beta = alpha / (alpha - 1.0)
    if abs(beta - alpha / (alpha - 1.0)) > 1e-12:
        raise InvalidArgument("beta must equal alpha / (alpha - 1)")
    Zp, Zm = _split(zs, y, 1.0 / alpha, R)
    if Zp.r + Zm.r > 12:
        raise BudgetExceeded("saddle evaluation is limited to n <= 12")
    Tp, Tm = Zp.generators, Zm.generators
    if Zp.r == 0:
        res = SaddleResult(0.0, np.zeros(0), True)
        return res if return_result else 0.0

    def inner(c, warm):
        if Zm.r == 0:
            return float(np.linalg.norm(c)), np.zeros(0), c
        def f(b):
            r = c - Tm.T @ b
            nr = np.linalg.norm(r)
            g = b ** (beta - 1)
            if nr > 1e-300:
                g = g - Tm @ (r / nr)
            return nr + np.sum(b ** beta) / beta, g
        out = minimize(f, warm, jac=True, method="L-BFGS-B",
                       bounds=[(0, None)] * Zm.r,
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 2000})
        b = out.x
        return float(out.fun), b, c - Tm.T @ b

    state = {"warm": np.zeros(Zm.r), "bad": 0}

    def outer(bp):
        val, bm, r = inner(Tp.T @ bp, state["warm"])
        state["warm"] = bm
        nr = np.linalg.norm(r)
        rhat = r / nr if nr > 1e-300 else np.zeros_like(r)
        obj = val - np.sum(bp ** beta) / beta
        grad = Tp @ rhat - bp ** (beta - 1)
        return -obj, -grad

    rng = np.random.default_rng(seed)
    D = Tp.shape[1]
    best_val, best_b, all_ok = 0.0, np.zeros(Zp.r), True
    inits = [np.zeros(Zp.r)]
    for _ in range(starts):
        v = rng.standard_normal(D)
        v /= np.linalg.norm(v)
        inits.append(np.maximum(Tp @ v, 0.0) ** (alpha - 1))
    for b0 in inits:
        state["warm"] = np.zeros(Zm.r)
        out = minimize(outer, b0 + 1e-9, jac=True, method="L-BFGS-B",
                       bounds=[(0, None)] * Zp.r,
                       options={"ftol": 1e-15, "gtol": 1e-11, "maxiter": 3000})
        all_ok &= bool(out.success)
        state["warm"] = np.zeros(Zm.r)
        val = -outer(out.x)[0]
        if val > best_val:
            best_val, best_b = val, out.x
    res = SaddleResult(float(best_val), best_b, all_ok, {"starts": len(inits)})
    return res if return_result else res.value


# ------------------------------------------------------------------ ellipsoids

@dataclass(frozen=True)
class Ellipsoid:
    """{x : (x - a)^T A^{-1} (x - a) <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.center, dtype=float))
        A = np.atleast_2d(np.asarray(self.shape, dtype=float))
        if A.shape != (a.size, a.size):
            raise InvalidArgument("shape matrix does not match the center")
        if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise InvalidArgument("shape matrix must be symmetric")
        A = 0.5 * (A + A.T)
        object.__setattr__(self, "center", _frozen(a))
        object.__setattr__(self, "shape", _frozen(A))

    @property
    def dim(self):
        return self.center.size

    def sqrt_shape(self):
        w, U = np.linalg.eigh(self.shape)
        return (U * np.sqrt(np.maximum(w, 0.0))) @ U.T

    def support(self, W):
        W = np.atleast_2d(W)
        C = self.sqrt_shape()
        return W @ self.center + np.linalg.norm(W @ C, axis=1)

    def contains(self, X, tol=1e-9):
        X = np.atleast_2d(X) - self.center
        Ainv = np.linalg.inv(self.shape)
        return np.einsum("ij,jk,ik->i", X, Ainv, X) <= 1 + tol


def mvee(points, tol=1e-7, max_iter=100_000) -> Ellipsoid:
    """Minimum-volume enclosing ellipsoid by Khachiyan's method with away steps.

    Stops once max_i M_i <= (1 + tol)(d + 1), which bounds the volume ratio
    to the optimum; the result is then inflated just enough to contain every
    point.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m, d = P.shape
    if m < d + 1:
        raise RankDeficient("need at least d + 1 points")
    Q = np.vstack([P.T, np.ones(m)])
    s = np.linalg.svd(Q, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise RankDeficient("points do not affinely span the space")
    u = np.full(m, 1.0 / m)
    k = d + 1
    for it in range(max_iter):
        X = (Q * u) @ Q.T
        M = np.einsum("ij,ji->i", Q.T, np.linalg.solve(X, Q))
        jp = int(np.argmax(M))
        act = np.nonzero(u > 0)[0]
        jm = int(act[np.argmin(M[act])])
        up = M[jp] / k - 1.0
        dn = 1.0 - M[jm] / k
        if up <= tol:
            break
        if up >= dn:
            step = (M[jp] - k) / (k * (M[jp] - 1.0))
            u *= 1.0 - step
            u[jp] += step
        else:
            step = min((k - M[jm]) / (k * (M[jm] - 1.0)), u[jm] / (1.0 - u[jm]))
            u *= 1.0 + step
            u[jm] -= step
            u[jm] = max(u[jm], 0.0)
    else:
        raise NonConverged(f"MVEE did not reach tolerance in {max_iter} iterations")
    c = P.T @ u
    S = (P.T * u) @ P - np.outer(c, c)
    A = d * S
    dev = P - c
    worst = float(np.max(np.einsum("ij,jk,ik->i", dev, np.linalg.inv(A), dev)))
    if worst > 1.0:
        A = A * worst
    return Ellipsoid(c, A)


def _psd_parts(E: Ellipsoid, name):
    w, U = np.linalg.eigh(E.shape)
    if w[0] <= 1e-12 * max(1.0, w[-1]):
        raise InvalidArgument(f"shape of {name} must be positive definite")
    return w, U


def _tr_max(Qw, QU, q):
    """max_{|u| <= 1} q^T u + u^T Q u / 2 for PSD Q given its eigendecomposition.

    Batched over the leading axis.  The maximiser of a convex quadratic sits
    on the sphere with (mu I - Q) u = q for some mu >= lambda_max(Q).
    """
    qt = np.einsum("fji,fj->fi", QU, q)
    lmax = Qw[:, -1]
    qn = np.linalg.norm(q, axis=1)
    lo = lmax.copy()
    hi = lmax + qn + 1e-300
    gap = lmax[:, None] - Qw

    def norm2(mu):
        den = mu[:, None] - Qw
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(den > 0, qt / den, np.where(qt == 0, 0.0, np.inf))
        return np.sum(t * t, axis=1)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        big = norm2(mid) > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, hi)):
            break
    mu = hi
    den = mu[:, None] - Qw
    with np.errstate(divide="ignore", invalid="ignore"):
        ut = np.where(den > 0, qt / den, 0.0)
    # hard case: the top eigen-direction carries no linear term and the
    # rest of u is short, so the missing length goes along that direction
    short = np.sum(ut * ut, axis=1)
    top = np.isclose(gap, 0.0, atol=1e-14 * np.maximum(1.0, np.abs(lmax))[:, None])
    fill = np.sqrt(np.maximum(1.0 - short, 0.0))
    add = np.where(top & (np.abs(qt) <= 1e-300), 1.0, 0.0)
    nadd = np.maximum(np.sqrt(add.sum(axis=1)), 1.0)
    ut = ut + add * (fill / nadd)[:, None]
    return np.sum(qt * ut, axis=1) + 0.5 * np.sum(Qw * ut * ut, axis=1)


def _one_sided_ellipsoid(E1, E2, grid=10_000, refine=True):
    a, b = E1.center, E2.center
    Aw, AU = _psd_parts(E1, "E1")
    Bw, BU = _psd_parts(E2, "E2")
    C = (AU * np.sqrt(Aw)) @ AU.T
    e = a - b
    eB = BU.T @ e
    CB = BU.T @ C                  # C in the eigenbasis of B

    def phi(lams):
        lams = np.atleast_1d(lams)
        inv = 1.0 / (Bw[None, :] + lams[:, None])          # (L, D)
        base = 0.5 * lams * np.sum(eB * eB * inv, axis=1) - 0.5 * lams
        q = lams[:, None] * np.einsum("ji,lj->li", CB, inv * eB)
        Q = lams[:, None, None] * np.einsum("ji,lj,jk->lik", CB, inv, CB)
        Qw, QU = np.linalg.eigh(Q)
        Qw = np.maximum(Qw, 0.0)
        return base + _tr_max(Qw, QU, q)

    # upper end: the printed bracket, widened by a bound that is valid for
    # every instance (the maximiser never exceeds the distance scale times
    # the largest semi-axis of E2 minus its smallest squared semi-axis)
    printed = -Bw[0] + (np.linalg.norm(e) + np.sqrt(Aw[-1])) ** 2
    derived = np.sqrt(Bw[-1]) * (np.linalg.norm(e) + np.sqrt(Aw[-1])) - Bw[0]
    top = max(printed, derived, 1e-12)
    lams = np.concatenate([[0.0], np.geomspace(top * 1e-10, top, grid - 1)])
    vals = np.concatenate([phi(lams[i:i + 2000]) for i in range(0, lams.size, 2000)])
    best = float(vals.max())
    if refine:
        for i in np.argsort(vals)[-3:]:
            lo = lams[max(i - 1, 0)]
            hi = lams[min(i + 1, lams.size - 1)]
            if hi <= lo:
                continue
            out = minimize_scalar(lambda t: -float(phi(t)[0]), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-14 * max(1.0, hi)})
            best = max(best, -float(out.fun))
    return float(np.sqrt(max(2.0 * best, 0.0)))


def ellipsoid_hausdorff(E1: Ellipsoid, E2: Ellipsoid, grid=10_000) -> float:
    """Hausdorff distance from the dual of the squared-distance problem.

    For each side, sup_{x in E1} dist(x, E2)^2 / 2 equals the maximum over
    lam >= 0 of a one-dimensional function whose evaluation is a trust-region
    problem, solved by bisection on its multiplier.
    """
    if E1.dim != E2.dim:
        raise InvalidArgument("ellipsoids live in different dimensions")
    return max(_one_sided_ellipsoid(E1, E2, grid), _one_sided_ellipsoid(E2, E1, grid))


def ellipsoid_hausdorff_sampled(E1: Ellipsoid, E2: Ellipsoid, count=200_000) -> float:
    """Support-function route: sup over unit w of |h1(w) - h2(w)|."""
    if E1.dim != E2.dim:
        raise InvalidArgument("ellipsoids live in different dimensions")
    return support_gap_sampled(E1.support, E2.support, E1.dim, 2.0, count)
