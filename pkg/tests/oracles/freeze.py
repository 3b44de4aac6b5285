"""Independent reference computations, frozen into tests/data/frozen.json.

Nothing here imports convexnn.  Run from the repository root:

    python tests/oracles/freeze.py

The package is then tested against the stored numbers; rerunning this
script should reproduce them bit for bit (mpmath and seeded numpy only).
"""

import itertools
import json
import math
import pathlib

import mpmath as mp
import numpy as np
from scipy.stats import qmc

mp.mp.dps = 30
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "frozen.json"


# ---------------------------------------------------------------- Funk-Hecke

def gegenbauer_normalised(k, d, t):
    if d == 1:
        return mp.chebyt(k, t)
    a = mp.mpf(d - 1) / 2
    return mp.gegenbauer(k, a, t) / mp.gegenbauer(k, a, 1)


def funk_hecke(phi, d, k):
    """c_d * int_0^pi phi(cos th) P_k(cos th) sin(th)^(d-1) d th, split at pi/2."""
    c = mp.gamma(mp.mpf(d + 1) / 2) / (mp.sqrt(mp.pi) * mp.gamma(mp.mpf(d) / 2))
    f = lambda th: phi(mp.cos(th)) * gegenbauer_normalised(k, d, mp.cos(th)) * mp.sin(th) ** (d - 1)
    return c * mp.quad(f, [0, mp.pi / 2, mp.pi])


def relu_power(alpha):
    if alpha == 0:
        return lambda t: mp.mpf(1) if t > 0 else mp.mpf(0)
    return lambda t: max(t, 0) ** alpha


def lambdas():
    out = {}
    for d in (1, 2, 3, 5):
        for alpha in (0, 1, 2):
            out[f"{d},{alpha}"] = [float(funk_hecke(relu_power(alpha), d, k)) for k in range(11)]
    return out


# ---------------------------------------------------------------- brute-force step values

def sphere_points(D, m, seed):
    """Quasi-random unit vectors: scrambled Sobol normals, normalised."""
    from scipy.stats import norm
    u = qmc.Sobol(D, scramble=True, seed=seed).random(m)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def brute_step(Z, g, alpha, V):
    U = V @ Z.T
    A = (U > 0).astype(float) if alpha == 0 else np.maximum(U, 0.0) ** alpha
    return float(np.max(np.abs(A @ g)) / Z.shape[0])


def oracle_instances():
    rows = []
    rng = np.random.default_rng(20240611)
    for i in range(30):
        n = int(rng.integers(2, 7))
        d = int(rng.integers(1, 3))
        alpha = int(i % 2)
        X = rng.uniform(-1, 1, size=(n, d))
        X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True))
        Z = np.hstack([X, np.ones((n, 1))])
        g = rng.standard_normal(n)
        V = sphere_points(d + 1, 2 ** 18, seed=i)
        rows.append({"xs": X.tolist(), "g": g.tolist(), "alpha": alpha,
                     "brute": brute_step(Z, g, alpha, V)})
    return rows


def four_point_example():
    X = np.array([[-1.0], [-0.5], [0.5], [1.0]])
    Z = np.hstack([X, np.ones((4, 1))])
    g = np.array([-1.0, -1.0, 1.0, 1.0])
    return brute_step(Z, g, 0, sphere_points(2, 2 ** 20, seed=7))


# ---------------------------------------------------------------- l1-constrained least squares

def l1_ls_active_sets(Phi, y, radius):
    """min (1/2n)|y - Phi w|^2 s.t. |w|_1 <= radius, by enumerating sign patterns.

    For every support and sign vector the problem restricted to the face
    s^T w = radius (or the interior) is an equality-constrained least squares;
    the best sign-consistent feasible solution is the optimum.
    """
    n, m = Phi.shape
    best = 0.5 * float(y @ y) / n
    for signs in itertools.product((-1, 0, 1), repeat=m):
        s = np.array(signs, dtype=float)
        S = np.nonzero(s)[0]
        if S.size == 0:
            continue
        A = Phi[:, S]
        # interior solution
        w, *_ = np.linalg.lstsq(A, y, rcond=None)
        cands = [w]
        # face solution via KKT
        K = np.block([[A.T @ A, s[S][:, None]], [s[S][None, :], np.zeros((1, 1))]])
        rhs = np.concatenate([A.T @ y, [radius]])
        try:
            sol = np.linalg.solve(K, rhs)
            cands.append(sol[:-1])
        except np.linalg.LinAlgError:
            pass
        for w in cands:
            if np.sum(np.abs(w)) > radius * (1 + 1e-12):
                continue
            if np.any(w * s[S] < -1e-12):
                continue
            r = y - A @ w
            best = min(best, 0.5 * float(r @ r) / n)
    return best


def fully_corrective_instance():
    rng = np.random.default_rng(5)
    n, m = 20, 5
    X = rng.uniform(-1, 1, size=(n, 2))
    X /= np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True))
    Z = np.hstack([X, np.ones((n, 1))])
    V = rng.standard_normal((m, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    y = rng.standard_normal(n)
    radius = 1.5
    Phi = np.maximum(Z @ V.T, 0.0)
    return {"xs": X.tolist(), "ys": y.tolist(), "V": V.tolist(), "radius": radius,
            "risk": l1_ls_active_sets(Phi, y, radius)}


# ---------------------------------------------------------------- kernel ridge by hand

def k1_circle(a, b):
    """E_v (v^T a)_+ (v^T b)_+ for v uniform on the circle, by quadrature."""
    f = lambda th: max(mp.cos(th) * a[0] + mp.sin(th) * a[1], 0) * \
        max(mp.cos(th) * b[0] + mp.sin(th) * b[1], 0)
    pts = sorted({0, 2 * mp.pi} | {(mp.atan2(v[1], v[0]) + s * mp.pi / 2) % (2 * mp.pi)
                                   for v in (a, b) for s in (-1, 1)})
    return mp.quad(f, pts) / (2 * mp.pi)


def kernel_ridge_2x2():
    x1, x2, y1, y2, lam = 0.3, -0.6, 1.0, -0.5, 0.1
    za, zb = (mp.mpf(x1), mp.mpf(1)), (mp.mpf(x2), mp.mpf(1))
    k11, k12, k22 = k1_circle(za, za), k1_circle(za, zb), k1_circle(zb, zb)
    n = 2
    a11, a12, a22 = k11 + n * lam, k12, k22 + n * lam
    det = a11 * a22 - a12 * a12
    c1 = (a22 * y1 - a12 * y2) / det
    c2 = (a11 * y2 - a12 * y1) / det
    xq = 0.1
    zq = (mp.mpf(xq), mp.mpf(1))
    pred = k1_circle(zq, za) * c1 + k1_circle(zq, zb) * c2
    return {"x": [x1, x2], "y": [y1, y2], "lam": lam, "coef": [float(c1), float(c2)],
            "x_query": xq, "prediction": float(pred),
            "gram": [[float(k11), float(k12)], [float(k12), float(k22)]]}


def main():
    data = {
        "lambdas": lambdas(),
        "four_point_alpha0": four_point_example(),
        "oracle_instances": oracle_instances(),
        "fully_corrective": fully_corrective_instance(),
        "kernel_ridge_2x2": kernel_ridge_2x2(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
