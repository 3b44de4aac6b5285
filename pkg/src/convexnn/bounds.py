"""Uniform-deviation bounds, their Monte-Carlo counterpart, and the rate table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .model import Dataset


@dataclass(frozen=True)
class BoundSpec:
    G: float
    delta: float
    n: int
    p: float
    d: int
    alpha: int
    C0: float = 1.0          # universal constant of the alpha = 0 case (unknown)

    def __post_init__(self):
        if not (self.G > 0 and self.delta > 0 and self.n >= 1 and self.d >= 1):
            raise InvalidArgument("G, delta, n and d must be positive")
        if not 1 <= self.p <= 2:
            raise InvalidArgument("p must lie in [1, 2]")
        if self.alpha < 0 or int(self.alpha) != self.alpha:
            raise InvalidArgument("alpha must be a nonnegative integer")


def complexity_constant(p, d, alpha, C0=1.0) -> float:
    """C(p, d, alpha) multiplying 4 G delta / sqrt(n)."""
    if alpha == 0:
        return C0 * math.sqrt(d + 1)
    if p == 1:
        return alpha * math.sqrt(2 * math.log(d + 1))
    if not 1 < p <= 2:
        raise InvalidArgument("p must lie in [1, 2]")
    return alpha / math.sqrt(p - 1)


def rademacher_bound(spec: BoundSpec) -> float:
    """4 G delta C(p, d, alpha) / sqrt(n)."""
    return 4 * spec.G * spec.delta * complexity_constant(spec.p, spec.d, spec.alpha, spec.C0) \
        / math.sqrt(spec.n)


def unit_class_bound(n, d, alpha, p, C0=1.0) -> float:
    """Bound on E sup_v |(1/n) sum tau_i (v^T z_i / R)_+^alpha| from the same argument.

    For alpha >= 1 this is alpha E|sum tau_i z_i|_q / (R n) with the norm of z
    bounded by sqrt(2) R, i.e. sqrt(2) C(p, d, alpha) / sqrt(n); for alpha = 0
    it is C0 sqrt(d + 1) / sqrt(n).
    """
    c = complexity_constant(p, d, alpha, C0)
    scale = 1.0 if alpha == 0 else math.sqrt(2)
    return scale * c / math.sqrt(n)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    se: float
    trials: int

    def __iter__(self):
        return iter((self.mean, self.se))


def rademacher_mc(dataset: Dataset, alpha: int, p: float = 2.0, trials: int = 2000,
                  oracle=None, seed: int = 0) -> MCEstimate:
    """Monte-Carlo mean of sup_v |(1/n) sum tau_i (v^T z_i / R)_+^alpha| over Rademacher tau.

    Without an explicit ``oracle`` the exact arrangement plan is built once
    and evaluated for all sign vectors together.
    """
    from .oracles import ArrangementPlan

    if trials < 1:
        raise InvalidArgument("trials must be positive")
    rng = np.random.default_rng(seed)
    Z, R, n = dataset.zs, dataset.R, dataset.n
    taus = rng.choice(np.array([-1.0, 1.0]), size=(n, trials))
    if oracle is None:
        vals = ArrangementPlan(Z, alpha, p, R).values(taus)
    else:
        vals = np.array([oracle(Z, taus[:, j], alpha, p=p, R=R).value for j in range(trials)])
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return MCEstimate(float(vals.mean()), se, trials)


# -------------------------------------------------------------------- rates

SETTINGS = ("affine", "projection-pursuit", "multi-index")
NORMS = ("l2", "l1", "alpha0")
_SETTING_ALIASES = {"pp": "projection-pursuit", "projection_pursuit": "projection-pursuit",
                    "multi-dim": "multi-index", "multi_index": "multi-index"}


@dataclass(frozen=True)
class Rate:
    setting: str
    norm: str
    formula: str
    value: float


def table1_rates(setting: str, norm: str, n: float, d: int, alpha: int = 1, k: int = 1,
                 q: float = 2.0, s: int = 1) -> Rate:
    """Evaluate the summary rate of a setting, without constants.

    norm is "l2" or "l1" (alpha >= 1) or "alpha0".  q is the input-norm
    exponent entering the l1 and alpha = 0 columns; s the subspace dimension
    of the multi-index row.
    """
    setting = _SETTING_ALIASES.get(setting, setting)
    if setting not in SETTINGS or norm not in NORMS:
        raise InvalidArgument(f"unknown setting {setting!r}/{norm!r}")
    if norm != "alpha0" and alpha < 1:
        raise InvalidArgument("the l2 and l1 columns need alpha >= 1")
    ln = math.log(n)
    ld = math.log(d) if d > 1 else 0.0
    if setting == "affine":
        table = {
            "l2": ("d^(1/2) / n^(1/2)", math.sqrt(d / n)),
            "l1": ("q^(1/2) (log d / n)^(1/2)", math.sqrt(q) * math.sqrt(ld / n)),
            "alpha0": ("(d q)^(1/2) / n^(1/2)", math.sqrt(d * q / n)),
        }
    elif setting == "projection-pursuit":
        e = 1.0 / (2 * alpha + 2)
        table = {
            "l2": ("k d^(1/2) n^(-1/(2a+2)) log n", k * math.sqrt(d) * n ** -e * ln),
            "l1": ("k q^(1/2) (log d)^(1/(a+1)) n^(-1/(2a+2)) log n",
                   k * math.sqrt(q) * ld ** (1.0 / (alpha + 1)) * n ** -e * ln),
            "alpha0": ("k (d q)^(1/2) / n^(1/2)", k * math.sqrt(d * q / n)),
        }
    else:
        e = 1.0 / (2 * alpha + s + 1)
        table = {
            "l2": ("k d^(1/2) n^(-1/(2a+s+1)) log n", k * math.sqrt(d) * n ** -e * ln),
            "l1": ("k q^(1/2) (log d)^(1/(a+(s+1)/2)) n^(-1/(2a+s+1)) log n",
                   k * math.sqrt(q) * ld ** (1.0 / (alpha + (s + 1) / 2)) * n ** -e * ln),
            "alpha0": ("(d q)^(1/2) d^(1/(s+1)) n^(-1/(s+1)) log n",
                       math.sqrt(d * q) * d ** (1.0 / (s + 1)) * n ** (-1.0 / (s + 1)) * ln),
        }
    formula, value = table[norm]
    return Rate(setting, norm, formula, float(value))
