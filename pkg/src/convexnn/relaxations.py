"""Semidefinite relaxations of the alpha = 1, p = 2 incremental step.

All three drop a rank-one constraint from an exact lifted formulation of
max_{|v|_2 = 1} (1/n) sum_i y_i (v^T z_i)_+, so their values bound it from
above (for the positive side; ``relaxation_bound`` also runs -y).

dim-d  lifts V = v v^T, coupled to v through [[1, v^T], [v, V]] >= 0, with
       |V z_i| <= 2 u_i - v^T z_i <= sqrt(z_i^T V z_i).
dim-nd adds U = u u^T and J = u v^T with the pairwise products of
       |v^T z_i| = 2 u_i - v^T z_i.
sign   lifts a sign vector s with s_i v^T z_i = |v^T z_i|; its objective is
       the alpha = 1 one written as (|v^T z| + v^T z) / 2.

Values are reported with the 1/n normalisation of the oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import BudgetExceeded, InvalidArgument, NonConverged

KINDS = ("dim-d", "dim-nd", "sign")
KIND_ALIASES = {"d": "dim-d", "nd": "dim-nd", "n+d": "dim-nd"}
MAX_SIZE = 40


@dataclass(frozen=True)
class RelaxationProblem:
    zs: np.ndarray
    y: np.ndarray
    kind: str = "dim-d"
    R: float = 1.0

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise InvalidArgument(f"unknown relaxation kind {self.kind!r}")
        Z = np.atleast_2d(np.asarray(self.zs, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if Z.shape[0] != y.size:
            raise InvalidArgument("one target per point is required")
        if not self.R > 0:
            raise InvalidArgument("R must be positive")
        Z = Z.copy()
        Z.setflags(write=False)
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "zs", Z)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.zs.shape[0]

    @property
    def dim(self):
        return self.zs.shape[1]


@dataclass(frozen=True)
class RelaxationResult:
    value: float
    variables: dict
    diagnostics: dict = field(default_factory=dict, compare=False)
    converged: bool = True


def _dim_d_constraints(v, V, u, Z):
    cons = []
    for i, z in enumerate(Z):
        lhs = 2 * u[i] - v @ z
        cons.append(cp.norm(V @ z, 2) <= lhs)
        cons.append(lhs <= cp.sqrt(z @ V @ z))
    return cons


def _build(problem):
    Z = problem.zs / problem.R
    n, D = Z.shape
    y = problem.y
    if problem.kind == "sign":
        M = cp.Variable((1 + n + D, 1 + n + D), symmetric=True)
        s, v = M[0, 1:n + 1], M[0, n + 1:]
        S, J, V = M[1:n + 1, 1:n + 1], M[1:n + 1, n + 1:], M[n + 1:, n + 1:]
        cons = [M >> 0, M[0, 0] == 1, cp.diag(S) == 1, cp.trace(V) == 1]
        JZ = J @ Z.T                               # (JZ)[j, i] = delta_j^T J z_i
        for i in range(n):
            others = [j for j in range(n) if j != i]
            if others:
                cons.append(JZ[i, i] >= cp.max(cp.abs(JZ[others, i])))
            else:
                cons.append(JZ[i, i] >= 0)
            # sqrt(z^T V z) <= (J z_i)_i is left out: it bounds a concave
            # function from above, so it is not a convex constraint (the PSD
            # block already forces the reverse inequality)
        obj = (cp.sum(cp.multiply(y, cp.diag(JZ))) + y @ (Z @ v)) / (2 * n)
        return cp.Problem(cp.Maximize(obj), cons), {"M": M}
    if problem.kind == "dim-d":
        M = cp.Variable((1 + D, 1 + D), symmetric=True)
        u = cp.Variable(n)
        v, V = M[0, 1:], M[1:, 1:]
        cons = [M >> 0, M[0, 0] == 1, cp.trace(V) == 1] + _dim_d_constraints(v, V, u, Z)
        return cp.Problem(cp.Maximize(y @ u / n), cons), {"M": M, "u": u}
    M = cp.Variable((1 + n + D, 1 + n + D), symmetric=True)
    u, v = M[0, 1:n + 1], M[0, n + 1:]
    U, J, V = M[1:n + 1, 1:n + 1], M[1:n + 1, n + 1:], M[n + 1:, n + 1:]
    cons = [M >> 0, M[0, 0] == 1, cp.trace(V) == 1] + _dim_d_constraints(v, V, u, Z)
    JZ = J @ Z.T
    ZVZ = Z @ V @ Z.T
    for i in range(n):
        cons.append(U[i, i] == JZ[i, i])
        for j in range(i + 1, n):
            lhs = 4 * U[i, j] + ZVZ[i, j] - 2 * JZ[i, j] - 2 * JZ[j, i]
            cons.append(lhs >= ZVZ[i, j])
            cons.append(lhs >= -ZVZ[i, j])
    return cp.Problem(cp.Maximize(y @ u / n), cons), {"M": M}


def _unpack(problem, handles):
    n, D = problem.n, problem.dim
    M = np.asarray(handles["M"].value)
    M = 0.5 * (M + M.T)
    out = {"M": M}
    if problem.kind == "dim-d":
        out.update(v=M[0, 1:], V=M[1:, 1:], u=np.asarray(handles["u"].value).ravel())
    elif problem.kind == "dim-nd":
        out.update(u=M[0, 1:n + 1], v=M[0, n + 1:], U=M[1:n + 1, 1:n + 1],
                   J=M[1:n + 1, n + 1:], V=M[n + 1:, n + 1:])
    else:
        out.update(s=M[0, 1:n + 1], v=M[0, n + 1:], S=M[1:n + 1, 1:n + 1],
                   J=M[1:n + 1, n + 1:], V=M[n + 1:, n + 1:])
    return out


def residuals(problem: RelaxationProblem, var: dict) -> dict:
    """Violations of the relaxation's constraints, computed directly from the variables."""
    Z = problem.zs / problem.R
    n = problem.n
    M, V, v = var["M"], var["V"], var["v"]
    res = {
        "psd": max(0.0, -float(np.linalg.eigvalsh(M)[0])),
        "corner": abs(M[0, 0] - 1.0),
        "trace": abs(np.trace(V) - 1.0),
    }
    zvz = np.einsum("ij,jk,ik->i", Z, V, Z)
    if problem.kind in ("dim-d", "dim-nd"):
        u = var["u"]
        lhs = 2 * u - Z @ v
        res["soc_lower"] = float(np.max(np.linalg.norm(Z @ V, axis=1) - lhs, initial=0.0))
        res["soc_upper"] = float(np.max(lhs - np.sqrt(np.maximum(zvz, 0.0)), initial=0.0))
    if problem.kind == "dim-nd":
        U, J = var["U"], var["J"]
        JZ = J @ Z.T
        ZVZ = Z @ V @ Z.T
        res["diag_eq"] = float(np.max(np.abs(np.diag(U) - np.diag(JZ)), initial=0.0))
        lhs = 4 * U + ZVZ - 2 * JZ - 2 * JZ.T
        off = ~np.eye(n, dtype=bool)
        res["pairs"] = float(np.max((np.abs(ZVZ) - lhs)[off], initial=0.0))
    if problem.kind == "sign":
        S, J = var["S"], var["J"]
        JZ = J @ Z.T
        res["diag_S"] = float(np.max(np.abs(np.diag(S) - 1.0), initial=0.0))
        d = np.diag(JZ)
        off = np.abs(JZ) - d[None, :]
        np.fill_diagonal(off, -np.inf)
        res["sign"] = float(max(np.max(off, initial=0.0), 0.0))
        res["sign"] = max(res["sign"], float(np.max(-d, initial=0.0)))
    res["max"] = max(res.values())
    return res


def solve_relaxation(problem: RelaxationProblem, max_iter=10_000, tol=1e-6,
                     solver="CLARABEL") -> RelaxationResult:
    """Solve one relaxation; raises NonConverged (with ``result``) if residuals exceed tol."""
    if problem.n + problem.dim - 1 > MAX_SIZE:
        raise BudgetExceeded(f"n + d = {problem.n + problem.dim - 1} exceeds {MAX_SIZE}")
    prob, handles = _build(problem)
    # tight gaps: callers compare the value with the exact step to ~1e-6
    kw = {"max_iter": max_iter, "tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10,
          "tol_feas": 1e-10} if solver == "CLARABEL" else {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            prob.solve(solver=solver, **kw)
        except cp.error.SolverError as exc:
            raise NonConverged(f"solver failed: {exc}") from exc
    if handles["M"].value is None:
        raise NonConverged(f"solver returned status {prob.status}")
    var = _unpack(problem, handles)
    res = residuals(problem, var)
    diag = {"status": prob.status, "residuals": res,
            "warnings": [str(w.message) for w in caught],
            "solve_time": prob.solver_stats.solve_time if prob.solver_stats else None}
    out = RelaxationResult(float(prob.value), var, diag, res["max"] <= tol)
    if not out.converged or prob.status not in ("optimal", "optimal_inaccurate"):
        raise NonConverged(f"residual {res['max']:.3g} above tolerance ({prob.status})",
                           result=out)
    return out


def relaxation_bound(zs, y, kind="dim-d", R=1.0, tol=1e-6) -> float:
    """Upper bound on max_v |(1/n) sum y_i (v^T z_i / R)_+| from both signs of y."""
    y = np.asarray(y, dtype=float)
    return max(solve_relaxation(RelaxationProblem(zs, s * y, kind, R), tol=tol).value
               for s in (1.0, -1.0))


@dataclass(frozen=True)
class ScalingTable:
    kind: str
    rows: tuple                 # (n, mean value, standard error)
    slope: float

    def to_csv(self):
        lines = ["n,mean,se"]
        lines += [f"{n},{m!r},{s!r}" for n, m, s in self.rows]
        return "\n".join(lines) + "\n"


def random_direction_scaling(kind, n_grid, d=2, trials=20, seed=0, R=1.0,
                             tol=1e-6) -> ScalingTable:
    """Mean of the step value for Gaussian y against n, with the fitted log-log slope.

    ``kind`` is a relaxation kind or ``"exact"`` for the enumeration oracle.
    """
    from .kernels import uniform_ball
    from .oracles import oracle_exact

    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS + ("exact",):
        raise InvalidArgument(f"unknown kind {kind!r}")
    ss = np.random.SeedSequence(seed)
    rows = []
    for n, child in zip(n_grid, ss.spawn(len(n_grid))):
        rng = np.random.default_rng(child)
        vals = []
        for _ in range(trials):
            X = uniform_ball(rng, int(n), d, R)
            Z = np.hstack([X, np.full((int(n), 1), R)])
            y = rng.standard_normal(int(n))
            if kind == "exact":
                vals.append(oracle_exact(Z, y, 1, R=R).value)
            else:
                vals.append(relaxation_bound(Z, y, kind, R, tol))
        vals = np.array(vals) / R
        se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
        rows.append((int(n), float(vals.mean()), se))
    ns = np.array([r[0] for r in rows], dtype=float)
    ms = np.array([r[1] for r in rows])
    slope = float(np.polyfit(np.log(ns), np.log(ms), 1)[0]) if len(rows) > 1 else float("nan")
    return ScalingTable(kind, tuple(rows), slope)
