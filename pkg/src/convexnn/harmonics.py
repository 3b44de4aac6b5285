"""Spherical-harmonic spectra of the activations (t)_+^alpha on S^d.

Conventions
-----------
``P_k`` is the Gegenbauer polynomial of dimension d+1 normalised so that
``P_k(1) = 1``; it is orthogonal for the weight ``(1 - t^2)^((d-2)/2)``.
The Funk-Hecke coefficient of a profile phi is

    c_d * int_{-1}^{1} phi(t) P_k(t) (1 - t^2)^((d-2)/2) dt,
    c_d = Gamma((d+1)/2) / (sqrt(pi) Gamma(d/2)),

and ``lambda_k`` is this coefficient for phi = (t)_+^alpha.  Integrals are
taken after the substitution t = cos(theta), which removes the endpoint
singularity of the weight when d = 1, and each half [0, pi/2], [pi/2, pi]
is handled by Gauss-Legendre so kinks at t = 0 sit on a panel boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgument, ParityViolation, ToleranceNotMet

QUAD_TOL = 1e-13


def legendre_P(k: int, d: int, t):
    """P_k(t) in dimension d+1 by the three-term recurrence."""
    if k < 0 or d < 1:
        raise InvalidArgument("need k >= 0 and d >= 1")
    return legendre_all(k, d, t)[k]


def legendre_all(K: int, d: int, t):
    """Rows P_0..P_K evaluated at t."""
    t = np.asarray(t, dtype=float)
    out = np.empty((K + 1,) + t.shape)
    out[0] = 1.0
    if K >= 1:
        out[1] = t
    for k in range(2, K + 1):
        out[k] = ((2 * k + d - 3) * t * out[k - 1] - (k - 1) * out[k - 2]) / (k + d - 2)
    return out


def harmonic_dim(d: int, k: int) -> int:
    """N(d, k): number of independent degree-k harmonics on S^d (exact int)."""
    if d < 1 or k < 0:
        raise InvalidArgument("need d >= 1 and k >= 0")
    if k == 0:
        return 1
    # equals (2k+d-1)/k * C(k+d-2, d-1); written as a difference to stay integral
    return math.comb(k + d, d) - math.comb(k + d - 2, d)


def omega_ratio(d: int) -> float:
    """omega_{d-1} / omega_d = Gamma((d+1)/2) / (sqrt(pi) Gamma(d/2))."""
    return float(np.exp(gammaln((d + 1) / 2) - gammaln(d / 2)) / np.sqrt(np.pi))


def _gl_panel(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _nodes(n, halves):
    th, wt = [], []
    for a, b in halves:
        x, w = _gl_panel(n, a, b)
        th.append(x)
        wt.append(w)
    return np.concatenate(th), np.concatenate(wt)


def _coefficients_at(phi, d, K, n, halves):
    theta, w = _nodes(n, halves)
    t = np.cos(theta)
    base = w * np.sin(theta) ** (d - 1) * phi(t)
    out = np.empty(K + 1)
    p_prev = np.ones_like(t)
    out[0] = base @ p_prev
    if K >= 1:
        p_cur = t.copy()
        out[1] = base @ p_cur
        for k in range(2, K + 1):
            p_prev, p_cur = p_cur, ((2 * k + d - 3) * t * p_cur - (k - 1) * p_prev) / (k + d - 2)
            out[k] = base @ p_cur
    return omega_ratio(d) * out


def profile_coefficients(phi: Callable, d: int, K: int, support="full", tol=QUAD_TOL):
    """Funk-Hecke coefficients a_0..a_K of a profile on [-1, 1].

    Node counts double until two successive rules agree to ``tol``.
    """
    halves = [(0.0, np.pi / 2)] if support == "positive" else [(0.0, np.pi / 2), (np.pi / 2, np.pi)]
    n = K + 48
    prev = _coefficients_at(phi, d, K, n, halves)
    for _ in range(6):
        n *= 2
        cur = _coefficients_at(phi, d, K, n, halves)
        err = np.max(np.abs(cur - prev))
        if err <= tol * max(1.0, np.max(np.abs(cur))):
            return cur
        prev = cur
    raise ToleranceNotMet(f"quadrature did not settle (last change {err:.3g})")


def _activation_profile(alpha):
    if alpha == 0:
        return lambda t: np.ones_like(t)
    return lambda t: t ** alpha


def lambda_spectrum_quadrature(d: int, alpha: int, K: int) -> np.ndarray:
    """lambda_0..lambda_K for (t)_+^alpha by quadrature."""
    if d < 1 or alpha < 0 or K < 0:
        raise InvalidArgument("need d >= 1, alpha >= 0, K >= 0")
    # the activation vanishes for t < 0 so only the first panel contributes
    lam = profile_coefficients(_activation_profile(alpha), d, K, support="positive")
    # parity zeros are exact; quadrature leaves ~1e-17 dust there
    for k in range(alpha + 2, K + 1, 2):
        lam[k] = 0.0
    return lam


def lambda_quadrature(d: int, alpha: int, k: int) -> float:
    return float(lambda_spectrum_quadrature(d, alpha, k)[k])


def is_parity_zero(alpha: int, k: int) -> bool:
    return k > alpha and (k - alpha) % 2 == 0


def fourier_lambda(alpha: int, k: int) -> float:
    """Exact lambda_k at d = 1 from (1/pi) int_0^{pi/2} cos^alpha(th) cos(k th) dth."""
    if alpha < 0 or k < 0:
        raise InvalidArgument("need alpha, k >= 0")

    def half_int(s):
        return np.pi / 2 if s == 0 else math.sin(s * math.pi / 2) / s

    total = 0.0
    for j in range(alpha + 1):
        m = alpha - 2 * j
        total += math.comb(alpha, j) * 0.5 * (half_int(m - k) + half_int(m + k))
    val = total / (2.0 ** alpha) / math.pi
    return 0.0 if is_parity_zero(alpha, k) else val


@dataclass(frozen=True)
class ClosedForm:
    value: float
    provenance: str
    prefactor: str
    reference: float | None = None
    agrees: bool | None = None


PREFACTORS = ("printed", "gamma")


def _prefactor(d, which):
    if which == "printed":
        return (d - 1) / (2 * np.pi)
    if which == "gamma":
        return omega_ratio(d)
    raise InvalidArgument(f"prefactor must be one of {PREFACTORS}")


def lambda_closed(d: int, alpha: int, k: int, prefactor="printed", check=True, rtol=1e-9):
    """Closed-form lambda_k via repeated integration by parts.

    ``prefactor='printed'`` uses (d-1)/(2 pi) in place of omega_{d-1}/omega_d,
    ``'gamma'`` uses the Gamma-function ratio.  With ``check`` the value is
    compared with quadrature and the verdict stored in ``agrees``.
    """
    if d < 1 or alpha < 0 or k < 0:
        raise InvalidArgument("need d >= 1, alpha >= 0, k >= 0")
    c = _prefactor(d, prefactor)
    if is_parity_zero(alpha, k):
        return ClosedForm(0.0, "parity", prefactor, 0.0 if check else None, True if check else None)
    if k == 0:
        val = c * 0.5 * np.exp(gammaln(alpha / 2 + 0.5) + gammaln(d / 2) - gammaln(alpha / 2 + 0.5 + d / 2))
    elif k == 1 and alpha > 0:
        val = c * (alpha / (2 * d)) * np.exp(gammaln(alpha / 2) + gammaln(d / 2 + 1) - gammaln(alpha / 2 + d / 2 + 1))
    elif k >= alpha + 1:
        j = (k - alpha - 1) // 2
        sign = -1.0 if j % 2 else 1.0
        logmag = (gammaln(alpha + 1) - k * np.log(2.0) + gammaln(d / 2) + gammaln(k - alpha)
                  - gammaln(j + 1) - gammaln(k / 2 + d / 2 + alpha / 2 + 0.5))
        val = c * sign * np.exp(logmag)
    else:
        raise InvalidArgument(f"no closed form for 2 <= k={k} <= alpha={alpha}")
    val = float(val)
    if not check:
        return ClosedForm(val, "closed-form", prefactor)
    ref = lambda_quadrature(d, alpha, k)
    ok = abs(val - ref) <= rtol * max(abs(ref), 1e-300)
    return ClosedForm(val, "closed-form", prefactor, ref, bool(ok))


@dataclass(frozen=True)
class HarmonicSpectrum:
    d: int
    alpha: int
    lambdas: tuple
    provenance: tuple

    def energies(self):
        """N(d,k) lambda_k^2, the per-degree share of the sphere kernel."""
        return np.array([harmonic_dim(self.d, k) * l * l for k, l in enumerate(self.lambdas)])


def spectrum(d: int, alpha: int, kmax: int, method="quad") -> HarmonicSpectrum:
    if method in ("quad", "quadrature"):
        lam = lambda_spectrum_quadrature(d, alpha, kmax)
        prov = ["quadrature"] * (kmax + 1)
    elif method == "fourier":
        if d != 1:
            raise InvalidArgument("Fourier coefficients are for d = 1")
        lam = [fourier_lambda(alpha, k) for k in range(kmax + 1)]
        prov = ["fourier"] * (kmax + 1)
    elif method in ("closed", "closed-printed", "closed-gamma"):
        which = "gamma" if method == "closed-gamma" else "printed"
        quad = lambda_spectrum_quadrature(d, alpha, kmax)
        lam, prov = [], []
        for k in range(kmax + 1):
            try:
                cf = lambda_closed(d, alpha, k, prefactor=which, check=False)
                lam.append(cf.value)
                prov.append(cf.provenance)
            except InvalidArgument:
                lam.append(float(quad[k]))
                prov.append("quadrature")
    else:
        raise InvalidArgument(f"unknown spectrum method {method!r}")
    return HarmonicSpectrum(d, alpha, tuple(float(x) for x in lam), tuple(prov))


def decay_slope(d: int, alpha: int, kmin=20, kmax=80, lambdas=None):
    """Least-squares log-log slope of |lambda_k| over the nonzero degrees."""
    if lambdas is None:
        lambdas = lambda_spectrum_quadrature(d, alpha, kmax)
    ks = np.array([k for k in range(kmin, kmax + 1) if not is_parity_zero(alpha, k)])
    vals = np.abs(np.asarray(lambdas)[ks])
    return float(np.polyfit(np.log(ks), np.log(vals), 1)[0])


# ---------------------------------------------------------------- ridge profiles

@dataclass(frozen=True)
class RidgeProfile:
    """phi on [-1, 1]; ``parity`` is 'even', 'odd' or None (mixed)."""

    phi: Callable
    parity: str | None = None
    name: str = "custom"
    spec: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.phi(np.asarray(t, dtype=float))


def profile_from_spec(spec: dict, d: int | None = None) -> RidgeProfile:
    kind = spec.get("type")
    if kind == "linear":
        return RidgeProfile(lambda t: t, "odd", "linear", spec)
    if kind == "abs":
        return RidgeProfile(np.abs, "even", "abs", spec)
    if kind in ("relu-power", "activation"):
        a = int(spec["alpha"])
        if a == 0:
            return RidgeProfile(lambda t: (t > 0).astype(float), None, "step", spec)
        return RidgeProfile(lambda t: np.maximum(t, 0.0) ** a, None, f"relu^{a}", spec)
    if kind == "legendre":
        j = int(spec["j"])
        dd = int(spec.get("d", d))
        return RidgeProfile(lambda t: legendre_P(j, dd, t), "even" if j % 2 == 0 else "odd", f"P_{j}", spec)
    if kind == "poly":
        coeffs = [float(c) for c in spec["coeffs"]]
        return RidgeProfile(lambda t: np.polynomial.polynomial.polyval(t, coeffs), None, "poly", spec)
    raise InvalidArgument(f"unknown profile type {kind!r}")


def load_profile(path, d=None):
    with open(path) as fh:
        return profile_from_spec(json.load(fh), d)


@dataclass(frozen=True)
class Gamma2Result:
    value: float
    verdict: str            # converging | diverging | infeasible
    partial_sums: tuple     # S_k for k = 0..K
    infeasible_degrees: tuple = ()
    tail_slope: float | None = None


def _parity_filter(coeffs, alpha, tol):
    scale = max(np.max(np.abs(coeffs)), 1e-300)
    bad = [k for k in range(len(coeffs)) if is_parity_zero(alpha, k) and abs(coeffs[k]) > tol * scale]
    return bad


def gamma2_ridge(profile: RidgeProfile, d: int, alpha: int, K: int, zero_tol=1e-10) -> Gamma2Result:
    """Partial sums of sum_k N(d,k) a_k^2 / lambda_k^2 for a ridge profile.

    ``a_k`` are the profile's Funk-Hecke coefficients, so ``N a_k^2`` is the
    squared L2(S^d) norm of its degree-k part.
    """
    if K > 200:
        raise InvalidArgument("K is capped at 200")
    a = profile_coefficients(profile.phi, d, K)
    lam = lambda_spectrum_quadrature(d, alpha, K)
    bad = _parity_filter(a, alpha, zero_tol)
    N = np.array([float(harmonic_dim(d, k)) for k in range(K + 1)])
    scale = max(np.max(np.abs(a)), 1e-300)
    live = (lam != 0) & (np.abs(a) > 1e-14 * scale)
    terms = np.zeros(K + 1)
    terms[live] = N[live] * a[live] ** 2 / lam[live] ** 2
    partial = np.cumsum(terms)
    if bad:
        return Gamma2Result(float("inf"), "infeasible", tuple(partial), tuple(bad))
    ks = np.nonzero(live)[0]
    tail = ks[ks >= max(2, K // 2)]
    slope = None
    verdict = "converging"
    if tail.size >= 3:
        slope = float(np.polyfit(np.log(tail), np.log(terms[tail]), 1)[0])
        if slope > -1.2:
            verdict = "diverging"
    return Gamma2Result(float(np.sqrt(partial[-1])), verdict, tuple(partial), (), slope)


@dataclass(frozen=True)
class PoissonApproximant:
    r: float
    coefficients: np.ndarray     # r^k a_k, k = 0..K
    gamma2: float
    sup_error: float
    d: int

    def __call__(self, t):
        P = legendre_all(len(self.coefficients) - 1, self.d, np.asarray(t, dtype=float))
        N = np.array([float(harmonic_dim(self.d, k)) for k in range(len(self.coefficients))])
        return (N * self.coefficients) @ P


def _series_eval(c, N, d, t):
    """sum_k N_k c_k P_k(t) by running the recurrence once."""
    out = N[0] * c[0] * np.ones_like(t)
    if len(c) == 1:
        return out
    p_prev, p_cur = np.ones_like(t), t.copy()
    out += N[1] * c[1] * p_cur
    for k in range(2, len(c)):
        p_prev, p_cur = p_cur, ((2 * k + d - 3) * t * p_cur - (k - 1) * p_prev) / (k + d - 2)
        if c[k] != 0.0:
            out += (N[k] * c[k]) * p_cur
    return out


def poisson_approximant(profile: RidgeProfile, d: int, alpha: int, r: float,
                        K=None, grid=10_000, coefficients=None) -> PoissonApproximant:
    """Damp the degree-k part of the profile by r^k.

    The truncation degree is the first K with r^K below 1e-13 unless given.
    ``coefficients`` lets callers reuse one expensive coefficient table across
    several r.
    """
    if not 0 < r < 1:
        raise InvalidArgument("need 0 < r < 1")
    if K is None:
        K = int(np.ceil(np.log(1e-13) / np.log(r)))
    if coefficients is None:
        a = profile_coefficients(profile.phi, d, K, tol=1e-12)
    else:
        a = np.asarray(coefficients)[: K + 1]
        K = len(a) - 1
    bad = _parity_filter(a, alpha, 1e-9)
    if bad:
        raise ParityViolation(f"profile has mass on degrees {bad[:5]} where lambda_k = 0")
    lam = lambda_spectrum_quadrature(d, alpha, K) if K <= 4000 else _lambda_large(d, alpha, K)
    N = np.array([float(harmonic_dim(d, k)) for k in range(K + 1)])
    damp = r ** np.arange(K + 1)
    c = damp * a
    c[[k for k in range(K + 1) if is_parity_zero(alpha, k)]] = 0.0
    live = lam != 0
    g2 = float(np.sqrt(np.sum(N[live] * c[live] ** 2 / lam[live] ** 2)))
    t = np.linspace(-1.0, 1.0, grid)
    err = float(np.max(np.abs(_series_eval(c, N, d, t) - profile(t))))
    return PoissonApproximant(r, c, g2, err, d)


def _lambda_large(d, alpha, K):
    if d == 1:
        return np.array([fourier_lambda(alpha, k) for k in range(K + 1)])
    return lambda_spectrum_quadrature(d, alpha, K)


def kernel_series(d: int, alpha: int, K: int, u, lambdas=None):
    """sum_{k <= K} N(d,k) lambda_k^2 P_k(u): the activation kernel on S^d."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1 + 1e-12):
        raise InvalidArgument("u must lie in [-1, 1]")
    if lambdas is None:
        lambdas = lambda_spectrum_quadrature(d, alpha, K)
    lam = np.asarray(lambdas)[: K + 1]
    N = np.array([float(harmonic_dim(d, k)) for k in range(K + 1)])
    return _series_eval(lam, N * lam, d, np.clip(u, -1.0, 1.0))
