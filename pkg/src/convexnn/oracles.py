"""The incremental-unit step: maximise |(1/n) sum_i g_i (v^T z_i / R)_+^alpha| over unit v.

Exact search (alpha in {0, 1}) walks the central hyperplane arrangement
{v : v^T z_i = 0}.  Every face of it is reached from one of its extreme
rays: next to a ray v0 the signs of the rows not vanishing at v0 are frozen
and the remaining rows form a smaller arrangement, handled the same way.
Each face comes with a relative-interior witness v0 + eps * delta.

* alpha = 0: the objective only depends on the sign pattern, so the best
  face is the answer and its witness is the unit.
* alpha = 1, p = 2: on a face the objective is linear, w_S^T v, so its
  maximiser on the sphere restricted to the face's span is the normalised
  projection of w_S; evaluating the true objective at all such candidates
  gives the exact maximum.
* alpha = 1, p = 1: objective and l1 norm are both linear on every cone of
  the arrangement refined by the coordinate hyperplanes, so the maximum sits
  on one of its extreme rays.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import BudgetExceeded, InvalidArgument
from .model import Unit, activation, lp_norm

RANK_TOL = 1e-10
ZERO_TOL = 1e-10
TIE_TOL = 1e-12
MAX_N, MAX_DIM = 20, 6
MAX_FACES = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    unit: Unit
    value: float
    sign: int
    status: str                  # exact | heuristic | surrogate
    kappa: float | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def v(self):
        return self.unit.v


def _prep(zs, g):
    Z = np.atleast_2d(np.asarray(zs, dtype=float))
    g = np.asarray(g, dtype=float).ravel()
    if Z.shape[0] != g.size:
        raise InvalidArgument(f"{Z.shape[0]} points but {g.size} residuals")
    if not np.all(np.isfinite(Z)) or not np.all(np.isfinite(g)):
        raise InvalidArgument("non-finite input to the oracle")
    return Z, g


def objective(zs, g, alpha, v, R=1.0):
    """Signed objective (1/n) sum g_i (v^T z_i / R)_+^alpha, vectorised over rows of v."""
    Z, g = _prep(zs, g)
    V = np.atleast_2d(v)
    out = activation(V @ Z.T / R, alpha) @ g / Z.shape[0]
    return out if np.ndim(v) == 2 else float(out[0])


def _lex_best(vals, V):
    """Index of the largest value, ties broken towards lexicographically largest row."""
    top = np.max(vals)
    cand = np.nonzero(vals >= top - TIE_TOL * max(1.0, abs(top)))[0]
    if cand.size == 1:
        return int(cand[0])
    keys = [V[cand, j] for j in range(V.shape[1] - 1, -1, -1)]
    return int(cand[np.lexsort(keys)[-1]])


# --------------------------------------------------------------- arrangements

def _row_basis(P):
    if P.size == 0:
        return np.zeros((0, P.shape[1]))
    _, s, Vt = np.linalg.svd(P, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, P.shape[1]))
    r = int(np.sum(s > RANK_TOL * s[0]))
    return Vt[:r]


def _sign_rows(vals, norms):
    sig = np.sign(vals).astype(np.int8)
    sig[np.abs(vals) <= ZERO_TOL * np.maximum(norms, 1e-300)] = 0
    return sig


def _rays(P):
    """Unit extreme rays of the arrangement of the rows of P (within their span).

    Returns (rays, sign rows) with one entry per distinct ray.
    """
    k, D = P.shape
    B = _row_basis(P)
    r = B.shape[0]
    norms = np.linalg.norm(P, axis=1)
    if r == 0:
        return np.zeros((0, D)), np.zeros((0, k), np.int8)
    if r == 1:
        rays = np.vstack([B[0], -B[0]])
    else:
        C = P @ B.T
        combos = np.array(list(itertools.combinations(range(k), r - 1)))
        sub = C[combos]
        _, s, vt = np.linalg.svd(sub)
        ok = s[:, -1] > RANK_TOL * np.maximum(s[:, 0], 1e-300)
        coords = vt[ok, -1, :]
        rays = coords @ B
        rays = np.vstack([rays, -rays])
    sig = _sign_rows(rays @ P.T, norms)
    _, first = np.unique(sig, axis=0, return_index=True)
    first = np.sort(first)
    rays = rays[first] / np.linalg.norm(rays[first], axis=1, keepdims=True)
    return rays, sig[first]


def _all_signs(m):
    if m == 0:
        return np.zeros((1, 0), np.int8)
    return np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.int8).reshape(-1, m)


def _step_to_witness(base_vals, delta_vals):
    """eps so that v0 + eps*delta keeps the signs of rows not vanishing at v0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(base_vals) / np.abs(delta_vals)
    ratio[~np.isfinite(ratio)] = np.inf
    eps = 0.5 * np.min(ratio, axis=-1) if ratio.shape[-1] else np.full(ratio.shape[:-1], np.inf)
    return np.minimum(eps, 1.0)


def _face_blocks(P, budget=None, want_basis=False):
    """Yield (patterns, witnesses, bases) covering every face of the arrangement of rows of P.

    ``patterns[f, i]`` is the sign of witness_f^T P_i.  Faces may repeat.
    With ``want_basis`` the faces next to generic rays also carry an
    orthonormal basis of the span of their vanishing rows (zero padded,
    shape (F, D, r-1)); elsewhere ``bases`` is None.
    """
    k, D = P.shape
    norms = np.linalg.norm(P, axis=1)
    live = np.nonzero(norms > 0)[0]
    yield np.zeros((1, k), np.int8), np.zeros((1, D)), None
    if live.size == 0:
        return
    Q = P[live]
    kq = Q.shape[0]
    qn = norms[live]

    def embed(pat):
        full = np.zeros((pat.shape[0], k), np.int8)
        full[:, live] = pat
        return full

    B = _row_basis(Q)
    r = B.shape[0]
    if r == kq:
        S = _all_signs(kq)
        W = S @ np.linalg.pinv(Q).T
        yield embed(S), W, None
        return

    rays, sig = _rays(Q)
    zeros = sig == 0
    nzero = zeros.sum(axis=1)
    generic = nzero == r - 1
    if budget is not None:
        est = generic.sum() * 3 ** (r - 1) + (~generic).sum() * 3 ** (r + 1)
        if est > budget:
            raise BudgetExceeded(f"about {est} faces exceed the enumeration budget")

    # generic rays, vectorised
    gi = np.nonzero(generic)[0]
    if gi.size:
        sub = _all_signs(r - 1)
        T = sub.shape[0]
        keys = (sub == 0).astype(int) @ (1 << np.arange(r - 1))
        per = max(1, 600_000 // (T * max(kq, 1)))
        for s0 in range(0, gi.size, per):
            idx = gi[s0:s0 + per]
            v0 = rays[idx]
            base = sig[idx]
            zidx = np.argsort(~zeros[idx], axis=1, kind="stable")[:, : r - 1]
            Zrows = Q[zidx]                                    # (m, r-1, D)
            pinv = np.linalg.pinv(Zrows)                       # (m, D, r-1)
            delta = np.einsum("mdj,tj->mtd", pinv, sub.astype(float))
            dv = np.einsum("mtd,kd->mtk", delta, Q)
            bv = (v0 @ Q.T)[:, None, :]
            mask = ~zeros[idx][:, None, :]
            eps = _step_to_witness(np.where(mask, bv, 0.0), np.where(mask, dv, 0.0))
            W = v0[:, None, :] + eps[..., None] * delta
            pats = np.repeat(base[:, None, :], T, axis=1)
            rows = np.arange(idx.size)[:, None, None]
            cols = zidx[:, None, :]
            pats[rows, np.arange(T)[None, :, None], cols] = sub[None, :, :]
            bases = None
            if want_basis:
                Bs = np.zeros((idx.size, 2 ** (r - 1), D, r - 1))
                for b in range(1, 2 ** (r - 1)):
                    cols = [j for j in range(r - 1) if b >> j & 1]
                    qm, _ = np.linalg.qr(Zrows[:, cols, :].transpose(0, 2, 1))
                    Bs[:, b, :, : len(cols)] = qm
                bases = Bs[:, keys].reshape(-1, D, r - 1)
            yield embed(pats.reshape(-1, kq)), W.reshape(-1, D), bases

    # degenerate rays: recurse into the rows vanishing there
    for j in np.nonzero(~generic)[0]:
        v0 = rays[j]
        zi = np.nonzero(zeros[j])[0]
        blocks = list(_face_blocks(Q[zi]))
        spat = np.vstack([b[0] for b in blocks])
        sdel = np.vstack([b[1] for b in blocks])
        out = np.nonzero(~zeros[j])[0]
        bv = v0 @ Q[out].T
        dv = sdel @ Q[out].T
        eps = _step_to_witness(np.broadcast_to(bv, dv.shape), dv)
        W = v0[None, :] + eps[:, None] * sdel
        pats = np.repeat(sig[j][None, :], spat.shape[0], axis=0)
        pats[:, zi] = spat
        yield embed(pats), W, None


def _check_budget(n, D, p):
    if n <= MAX_N and D <= MAX_DIM:
        return None
    rows = n + (D if p == 1 else 0)
    import math
    est = 2 * math.comb(rows, max(D - 1, 0)) * 3 ** max(D - 1, 0)
    if est > MAX_FACES:
        raise BudgetExceeded(
            f"exact search over n={n}, d+1={D} is beyond the enumeration budget")
    return MAX_FACES


# ------------------------------------------------------------------ exact oracle

def _candidates_alpha0(Z, g, R, budget, robust=True):
    n = Z.shape[0]
    zn = np.linalg.norm(Z, axis=1)
    for pats, W, _ in _face_blocks(Z, budget):
        nrm = np.linalg.norm(W, axis=1)
        ok = nrm > 0
        C = W[ok] / nrm[ok, None]
        if robust:
            # a witness sitting on some hyperplane flips sides under rounding;
            # open cells reach the same active sets whenever z has a positive
            # last coordinate, so only witnesses with a clear margin are kept
            margin = np.abs(C @ Z.T) > 1e3 * ZERO_TOL * np.maximum(zn, 1e-300)
            C = C[np.all(margin | (zn == 0), axis=1)]
        if C.shape[0] == 0:
            continue
        yield activation(C @ Z.T / R, 0) @ g / n, C


def _candidates_alpha1(Z, g, R, budget):
    n, D = Z.shape
    gz = g[:, None] * Z
    eye = np.eye(D)
    for pats, W, bases in _face_blocks(Z, budget, want_basis=True):
        w = (pats == 1).astype(float) @ gz
        if bases is not None:
            c = w - np.einsum("fdj,fj->fd", bases, np.einsum("fdj,fd->fj", bases, w))
        else:
            G = np.einsum("fi,ij,ik->fjk", (pats == 0).astype(float), Z, Z)
            proj = eye[None] - G @ np.linalg.pinv(G, hermitian=True)
            c = np.einsum("fjk,fk->fj", proj, w)
        C = np.vstack([c, -c])
        nrm = np.linalg.norm(C, axis=1)
        ok = nrm > 1e-14
        C = C[ok] / nrm[ok, None]
        if C.shape[0] == 0:
            continue
        yield activation(C @ Z.T / R, 1) @ g / n, C


def _candidates_alpha1_l1(Z, g, R, budget):
    n, D = Z.shape
    P = np.vstack([Z, np.eye(D)])
    rays, _ = _rays(P)
    C = rays / np.sum(np.abs(rays), axis=1, keepdims=True)
    yield activation(C @ Z.T / R, 1) @ g / n, C


def _exact_candidates(Z, g, alpha, p, R, robust=True):
    n, D = Z.shape
    budget = _check_budget(n, D, p)
    if alpha == 0:
        gen = _candidates_alpha0(Z, g, R, budget, robust)
        if p == 1:
            gen = ((vals, C / np.sum(np.abs(C), axis=1, keepdims=True)) for vals, C in gen)
        return gen
    if p == 1:
        return _candidates_alpha1_l1(Z, g, R, budget)
    return _candidates_alpha1(Z, g, R, budget)


def oracle_exact(zs, g, alpha, p=2.0, R=1.0, collect=False) -> OracleResult:
    """Exact maximiser for alpha in {0, 1} by arrangement enumeration.

    p = 2 is the main case; p = 1 is also exact (see module notes).  With
    ``collect`` every visited candidate value and direction are kept in
    ``diagnostics['candidates']`` (used by :func:`kappa_wrap`).
    """
    if alpha not in (0, 1):
        raise InvalidArgument("exact search covers alpha in {0, 1}")
    if p not in (1, 1.0, 2, 2.0):
        raise InvalidArgument("exact search covers p in {1, 2}")
    Z, g = _prep(zs, g)
    n, D = Z.shape
    if not np.any(g):
        # every unit scores 0; return the lexicographically largest one
        unit = Unit(np.eye(D)[0], p)
        diag = {"visited": 0, "enumerated_value": 0.0}
        if collect:
            diag["candidates"] = (np.zeros(1), unit.v[None, :].copy())
        return OracleResult(unit, 0.0, 1, "exact", None, diag)
    best_val, best_v = -np.inf, None
    kept_vals, kept_V = [], []
    visited = 0
    stream = _exact_candidates(Z, g, alpha, p, R)
    if alpha == 0:
        first = list(stream)
        if not first:
            first = list(_exact_candidates(Z, g, alpha, p, R, robust=False))
        stream = first
    for vals, C in stream:
        ok = np.all(np.isfinite(C), axis=1) & np.any(C != 0, axis=1)
        if not ok.all():
            vals, C = vals[ok], C[ok]
            if not vals.size:
                continue
        a = np.abs(vals)
        visited += a.size
        i = _lex_best(a, C)
        if best_v is None or a[i] > best_val + TIE_TOL * max(1.0, abs(best_val)) or (
                abs(a[i] - best_val) <= TIE_TOL * max(1.0, abs(best_val))
                and tuple(C[i]) > tuple(best_v)):
            best_val, best_v = float(a[i]), C[i].copy()
        if collect:
            kept_vals.append(vals)
            kept_V.append(C)
    unit = Unit.from_direction(best_v, p)
    signed = objective(Z, g, alpha, unit.v, R)
    diag = {"visited": visited, "enumerated_value": best_val}
    if collect:
        diag["candidates"] = (np.concatenate(kept_vals), np.vstack(kept_V))
    return OracleResult(unit, abs(signed), 1 if signed >= 0 else -1, "exact", None, diag)


# --------------------------------------------------------------- heuristics

def _lp_normalize(V, p):
    if p == 2:
        return V / np.linalg.norm(V, axis=1, keepdims=True)
    return V / (np.sum(np.abs(V) ** p, axis=1, keepdims=True) ** (1.0 / p))


def _ascent(Z, g, alpha, p, R, V, sgn, iters, rng):
    """Batched projected gradient ascent on s * objective over the l_p sphere."""
    n = Z.shape[0]
    sg = sgn * g / n

    def F(V):
        return activation(V @ Z.T / R, alpha) @ sg

    def grad(V, tau=None):
        U = V @ Z.T / R
        if alpha == 0:
            sig = 1.0 / (1.0 + np.exp(-np.clip(U / tau, -50, 50)))
            dact = sig * (1 - sig) / tau
        elif alpha == 1:
            dact = (U > 0).astype(float)
        else:
            dact = alpha * np.maximum(U, 0.0) ** (alpha - 1)
        return (dact * sg) @ Z / R

    def smooth_F(V, tau):
        U = V @ Z.T / R
        return (1.0 / (1.0 + np.exp(-np.clip(U / tau, -50, 50)))) @ sg

    m = V.shape[0]
    step = np.full(m, 0.5)
    best_val = F(V)
    best_V = V.copy()
    cur = best_val.copy()
    taus = np.geomspace(0.3, 1e-3, iters) if alpha == 0 else [None] * iters
    for it in range(iters):
        tau = taus[it]
        G = grad(V, tau)
        if p == 2:
            G = G - np.sum(G * V, axis=1, keepdims=True) * V
        obj = (lambda X: smooth_F(X, tau)) if alpha == 0 else F
        base = obj(V)
        gn = np.linalg.norm(G, axis=1)
        moving = gn > 1e-15
        if not moving.any():
            break
        trial_step = step.copy()
        newV = V.copy()
        accepted = np.zeros(m, bool)
        for _ in range(30):
            cand = _lp_normalize(V + (trial_step / np.maximum(gn, 1e-300))[:, None] * G, p)
            good = (obj(cand) >= base) & moving & ~accepted
            newV[good] = cand[good]
            accepted |= good
            trial_step = np.where(accepted, trial_step, trial_step * 0.5)
            if accepted[moving].all():
                break
        step = np.where(accepted, np.minimum(trial_step * 2.0, 2.0), trial_step)
        V = newV
        cur = F(V)
        better = cur > best_val
        best_val = np.where(better, cur, best_val)
        best_V[better] = V[better]
        if alpha != 0 and np.all(step < 1e-14):
            break
    return best_V, best_val


def _vertex_ascent(Z, g, alpha, R, sgn, starts, iters):
    """Ascent on the l1 sphere that only moves towards signed coordinate vertices.

    Starts at the best vertices and keeps iterates sparse, which plain
    gradient steps followed by rescaling do not.
    """
    n, D = Z.shape
    sg = sgn * g / n

    def F(V):
        return activation(V @ Z.T / R, alpha) @ sg

    # value of +-e_j for every j
    vert = np.concatenate([activation(Z.T / R, alpha) @ sg, activation(-Z.T / R, alpha) @ sg])
    order = np.argsort(-vert, kind="stable")[:starts]
    V = np.zeros((order.size, D))
    V[np.arange(order.size), order % D] = np.where(order < D, 1.0, -1.0)
    vals = F(V)
    gammas = 0.5 ** np.arange(0, 16)
    for _ in range(iters):
        U = V @ Z.T / R
        if alpha == 1:
            dact = (U > 0).astype(float)
        else:
            dact = alpha * np.maximum(U, 0.0) ** (alpha - 1)
        G = (dact * sg) @ Z / R
        j = np.argmax(np.abs(G), axis=1)
        S = np.zeros_like(V)
        S[np.arange(V.shape[0]), j] = np.sign(G[np.arange(V.shape[0]), j])
        trial = (1 - gammas[None, :, None]) * V[:, None, :] + gammas[None, :, None] * S[:, None, :]
        trial /= np.maximum(np.sum(np.abs(trial), axis=2, keepdims=True), 1e-300)
        tv = F(trial.reshape(-1, D)).reshape(V.shape[0], gammas.size)
        k = np.argmax(tv, axis=1)
        new = tv[np.arange(V.shape[0]), k]
        better = new > vals + 1e-15
        if not better.any():
            break
        V[better] = trial[better, k[better]]
        vals[better] = new[better]
    return V, vals


def _polish_alpha1(Z, g, R, V, sgn):
    """Snap near-active rows to exact zeros and take the face maximiser."""
    n, D = Z.shape
    norms = np.linalg.norm(Z, axis=1)
    sg = sgn * g
    out_V, out_val = V.copy(), activation(V @ Z.T / R, 1) @ sg / n
    bases = {}
    for _ in range(3):
        for tol in (0.0, 1e-9, 1e-7, 1e-5, 1e-4, 1e-3, 1e-2, 3e-2):
            U = out_V @ Z.T
            act = U > tol * norms
            zer = np.abs(U) <= tol * norms
            W = act.astype(float) @ (sg[:, None] * Z)
            C = W.copy()
            for f in range(C.shape[0]):
                key = zer[f].tobytes()
                if key not in bases:
                    bases[key] = _row_basis(Z[zer[f]]) if zer[f].any() else None
                Q = bases[key]
                if Q is not None and Q.size:
                    C[f] -= Q.T @ (Q @ W[f])
            nrm = np.linalg.norm(C, axis=1)
            ok = nrm > 1e-14
            C[ok] /= nrm[ok, None]
            val = activation(C @ Z.T / R, 1) @ sg / n
            better = ok & (val > out_val)
            out_V[better] = C[better]
            out_val[better] = val[better]
    return out_V, out_val


def oracle_restarts(zs, g, alpha, p=2.0, restarts=20, seed=0, R=1.0, iters=300,
                    polish=True) -> OracleResult:
    """Best of seeded projected-gradient ascents on the l_p sphere, both signs.

    alpha = 0 has no useful gradient, so the ascent runs on a logistic
    smoothing of the step whose temperature is annealed to zero; iterates are
    always scored with the true objective.
    """
    if restarts < 1:
        raise InvalidArgument("restarts must be >= 1")
    if alpha < 0 or int(alpha) != alpha:
        raise InvalidArgument("alpha must be a nonnegative integer")
    if not 1 <= p <= 2:
        raise InvalidArgument("p must lie in [1, 2]")
    Z, g = _prep(zs, g)
    n, D = Z.shape
    rng = np.random.default_rng(seed)
    V0 = _lp_normalize(rng.standard_normal((restarts, D)), p)
    best = None
    for sgn in (1, -1):
        V, vals = _ascent(Z, g, alpha, p, R, V0.copy(), sgn, iters, rng)
        if p == 1 and alpha >= 1:
            Vs, vs = _vertex_ascent(Z, g, alpha, R, sgn, restarts, iters)
            V, vals = np.vstack([V, Vs]), np.concatenate([vals, vs])
        if alpha == 1 and p == 2 and polish:
            V, vals = _polish_alpha1(Z, g, R, V, sgn)
        i = _lex_best(vals, V)
        if best is None or vals[i] > best[0] + TIE_TOL or (
                abs(vals[i] - best[0]) <= TIE_TOL and tuple(V[i]) > tuple(best[1])):
            best = (float(vals[i]), V[i].copy())
    unit = Unit.from_direction(best[1], p)
    signed = objective(Z, g, alpha, unit.v, R)
    return OracleResult(unit, abs(signed), 1 if signed >= 0 else -1, "heuristic",
                        None, {"restarts": restarts, "seed": seed})


def oracle_surrogate_alpha0(zs, g, regularization=1e-6, seed=0, R=1.0, maxiter=2000) -> OracleResult:
    """Weighted logistic separator (weights |g_i|, labels sign g_i), thresholded.

    No intercept: the constant coordinate of z already plays that role.
    """
    Z, g = _prep(zs, g)
    n, D = Z.shape
    X = Z / R
    wts = np.abs(g)
    lab = np.where(g >= 0, 1.0, -1.0)
    diag = {"converged": True}
    if not np.any(wts > 0):
        v = np.zeros(D)
        v[-1] = 1.0
        return OracleResult(Unit(v), 0.0, 1, "surrogate", None, diag)
    scale = wts.sum()

    def f(w):
        m = lab * (X @ w)
        val = np.sum(wts * np.logaddexp(0.0, -m)) / scale + 0.5 * regularization * w @ w
        s = -lab * wts / (1.0 + np.exp(np.clip(m, -700, 700))) / scale
        return val, X.T @ s + regularization * w

    rng = np.random.default_rng(seed)
    w0 = 1e-3 * rng.standard_normal(D)
    res = minimize(f, w0, jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
    diag["converged"] = bool(res.success)
    diag["message"] = str(res.message)
    w = res.x
    if np.linalg.norm(w) == 0:
        w = np.zeros(D)
        w[-1] = 1.0
    cands = np.vstack([w, -w]) / np.linalg.norm(w)
    vals = np.abs(objective(Z, g, 0, cands, R))
    i = _lex_best(vals, cands)
    unit = Unit.from_direction(cands[i], 2.0)
    signed = objective(Z, g, 0, unit.v, R)
    return OracleResult(unit, abs(signed), 1 if signed >= 0 else -1, "surrogate", None, diag)


# ------------------------------------------------------------------- wrappers

def kappa_wrap(inner, kappa: float):
    """Oracle returning a visited candidate worth at least max / kappa.

    Among the candidates the inner exact search visited, the one with the
    smallest value still above the threshold is returned, which is the
    weakest answer the multiplicative guarantee allows.
    """
    if not kappa >= 1:
        raise InvalidArgument("kappa must be >= 1")

    def wrapped(zs, g, alpha, p=2.0, R=1.0, **kw):
        if kappa == 1:
            return inner(zs, g, alpha, p=p, R=R, **kw)
        res = inner(zs, g, alpha, p=p, R=R, collect=True, **kw)
        vals, C = res.diagnostics["candidates"]
        a = np.abs(vals)
        thr = res.value / kappa
        ok = np.nonzero(a >= thr * (1 + 1e-12))[0]
        if ok.size == 0:
            return replace(res, kappa=kappa, diagnostics={})
        j = ok[np.argmin(a[ok])]
        # deterministic among equal values
        same = ok[np.abs(a[ok] - a[j]) <= TIE_TOL]
        j = same[_lex_best(np.zeros(same.size), C[same])]
        unit = Unit.from_direction(C[j], p)
        signed = objective(zs, g, alpha, unit.v, R)
        return OracleResult(unit, abs(signed), 1 if signed >= 0 else -1,
                            res.status, kappa, {"exact_value": res.value})

    wrapped.kappa = kappa
    return wrapped


def make_oracle(method="exact", restarts=20, seed=0, regularization=1e-6):
    """Uniform callable ``oracle(zs, g, alpha, p, R)`` for the trainer."""
    if method == "exact":
        return oracle_exact
    if method == "restarts":
        def run(zs, g, alpha, p=2.0, R=1.0, **kw):
            return oracle_restarts(zs, g, alpha, p, restarts=restarts, seed=seed, R=R)
        return run
    if method == "surrogate":
        def run(zs, g, alpha, p=2.0, R=1.0, **kw):
            if alpha != 0:
                raise InvalidArgument("the surrogate oracle is for alpha = 0")
            return oracle_surrogate_alpha0(zs, g, regularization, seed, R)
        return run
    if method == "auto":
        def run(zs, g, alpha, p=2.0, R=1.0, **kw):
            try:
                if alpha in (0, 1) and p in (1, 2):
                    return oracle_exact(zs, g, alpha, p, R)
            except BudgetExceeded:
                pass
            return oracle_restarts(zs, g, alpha, p, restarts=restarts, seed=seed, R=R)
        return run
    raise InvalidArgument(f"unknown oracle method {method!r}")


class ArrangementPlan:
    """Exact step values for many residual vectors on one fixed point set.

    The arrangement only depends on the points, so its distinct faces (and,
    for alpha = 1, the projector onto each face's span) are computed once;
    ``values`` then evaluates the exact maximum for every column of G with
    batched products.  Used for Monte-Carlo complexity estimates.
    """

    def __init__(self, zs, alpha, p=2.0, R=1.0):
        if alpha not in (0, 1) or p not in (1, 1.0, 2, 2.0):
            raise InvalidArgument("exact plans cover alpha in {0, 1} and p in {1, 2}")
        Z = np.atleast_2d(np.asarray(zs, dtype=float))
        self.Z, self.alpha, self.p, self.R = Z, alpha, float(p), float(R)
        n, D = Z.shape
        self.proj = None
        if alpha == 0 or p == 1:
            g0 = np.zeros(n)
            cands = [C for _, C in _exact_candidates(Z, g0, alpha, p, R)]
            C = np.vstack(cands)
            keys = activation(C @ Z.T, 0) if alpha == 0 else C
            _, first = np.unique(np.round(keys, 14), axis=0, return_index=True)
            self.C = C[np.sort(first)]
            self.Phi = activation(self.C @ Z.T / R, alpha)       # (F, n)
        else:
            budget = _check_budget(n, D, p)
            pats = np.vstack([b[0] for b in _face_blocks(Z, budget)])
            pats = np.unique(pats, axis=0)
            self.S = (pats == 1).astype(float)
            G = np.einsum("fi,ij,ik->fjk", (pats == 0).astype(float), Z, Z)
            self.proj = np.eye(D)[None] - G @ np.linalg.pinv(G, hermitian=True)

    @property
    def faces(self):
        return self.S.shape[0] if self.proj is not None else self.C.shape[0]

    def values(self, G, chunk_elems=20_000_000) -> np.ndarray:
        """max_v |(1/n) sum_i g_i phi_v(x_i)| for each column g of G."""
        G = np.asarray(G, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        n = self.Z.shape[0]
        if self.proj is None:
            return np.max(np.abs(self.Phi @ G), axis=0) / n
        F, D = self.S.shape[0], self.Z.shape[1]
        out = np.empty(G.shape[1])
        step = max(1, chunk_elems // (F * n))
        for a in range(0, G.shape[1], step):
            Gc = G[:, a:a + step]                                    # (n, t)
            t = Gc.shape[1]
            W = (self.S @ (Gc[:, :, None] * self.Z[:, None, :]).reshape(n, t * D)).reshape(F, t, D)
            c = np.matmul(W, self.proj.transpose(0, 2, 1))           # (F, t, D)
            nrm = np.linalg.norm(c, axis=2, keepdims=True)
            c = c / np.where(nrm > 1e-14, nrm, np.inf)
            U = (c.reshape(F * t, D) @ self.Z.T).reshape(F, t, n) / self.R
            Gt = Gc.T[None]
            vp = np.sum(np.maximum(U, 0.0) * Gt, axis=2)
            vm = np.sum(np.maximum(-U, 0.0) * Gt, axis=2)
            out[a:a + step] = np.maximum(np.abs(vp), np.abs(vm)).max(axis=0) / n
        return out
