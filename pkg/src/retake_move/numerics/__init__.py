"""Tensor math, reverse-mode differentiation, Adam, and special functions."""

from .ops import REGISTRY
from .optim import AdamState, adam_step
from .special import chi_square_sf, normal_cdf, normal_pdf, normal_sf
from .tensor import NumericError, ShapeError, Tensor, backward, no_grad

__all__ = [
    "REGISTRY",
    "AdamState",
    "NumericError",
    "ShapeError",
    "Tensor",
    "adam_step",
    "backward",
    "chi_square_sf",
    "no_grad",
    "normal_cdf",
    "normal_pdf",
    "normal_sf",
]
