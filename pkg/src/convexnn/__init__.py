"""Convex single-hidden-layer networks with homogeneous activations."""

from .model import (
    Dataset,
    Unit,
    SignedMeasureModel,
    augment,
    predict,
    predict_many,
    variation_norm,
    caratheodory_reduce,
)
from .losses import Loss, loss_eval, loss_grad

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Unit",
    "SignedMeasureModel",
    "augment",
    "predict",
    "predict_many",
    "variation_norm",
    "caratheodory_reduce",
    "Loss",
    "loss_eval",
    "loss_grad",
]
