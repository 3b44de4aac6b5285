"""Scalar losses l(y, u) in the prediction argument u."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import InvalidArgument

KINDS = ("squared", "logistic", "hinge", "smoothed-hinge")
ALIASES = {"sq": "squared", "square": "squared", "logit": "logistic",
           "smoothed_hinge": "smoothed-hinge", "shinge": "smoothed-hinge"}


@dataclass(frozen=True)
class Loss:
    """A loss kind plus its parameters.

    squared:         (u - y)^2 / 2
    logistic:        log(1 + exp(-y u))
    hinge:           max(0, 1 - y u)           (not smooth)
    smoothed-hinge:  quadratic on the margin band of width eps, L = y^2 / eps
    """

    kind: str
    eps: float = 0.0

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise InvalidArgument(f"unknown loss kind {self.kind!r}")
        if kind == "smoothed-hinge" and not self.eps > 0:
            raise InvalidArgument("smoothed hinge needs eps > 0")
        object.__setattr__(self, "kind", kind)

    @property
    def smooth(self):
        return self.kind != "hinge"

    def lipschitz(self, bound=1.0, ymax=1.0):
        """Lipschitz constant of u -> l(y, u) over |u| <= bound, |y| <= ymax."""
        if self.kind == "squared":
            return bound + ymax
        return float(ymax)

    def smoothness(self, ymax=1.0):
        if self.kind == "squared":
            return 1.0
        if self.kind == "logistic":
            return ymax ** 2 / 4.0
        if self.kind == "smoothed-hinge":
            return ymax ** 2 / self.eps
        return np.inf


def loss_eval(loss: Loss, y, u):
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if loss.kind == "squared":
        return 0.5 * (u - y) ** 2
    m = y * u
    if loss.kind == "logistic":
        return np.logaddexp(0.0, -m)
    if loss.kind == "hinge":
        return np.maximum(0.0, 1.0 - m)
    e = loss.eps
    return np.where(m >= 1.0, 0.0,
                    np.where(m > 1.0 - e, (1.0 - m) ** 2 / (2 * e), 1.0 - m - e / 2))


def loss_grad(loss: Loss, y, u):
    """Derivative in u (a subgradient for the plain hinge)."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if loss.kind == "squared":
        return u - y
    m = y * u
    if loss.kind == "logistic":
        return -y * expit(-m)
    if loss.kind == "hinge":
        return np.where(m < 1.0, -y, 0.0)
    e = loss.eps
    dm = np.where(m >= 1.0, 0.0, np.where(m > 1.0 - e, -(1.0 - m) / e, -1.0))
    return y * dm


def smoothing_schedule(loss: Loss, t: int, c: float = 1.0) -> Loss:
    """Smoothed hinge with eps_t = c / sqrt(t + 1)."""
    if loss.kind not in ("hinge", "smoothed-hinge"):
        raise InvalidArgument("smoothing applies to hinge-type losses")
    return Loss("smoothed-hinge", c / np.sqrt(t + 1.0))
