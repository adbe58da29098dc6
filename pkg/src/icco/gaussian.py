"""Diagonal-Gaussian utilities shared by the coordination and posterior nets.

All functions are torch-differentiable and shape-polymorphic over leading
batch dimensions; the event dimension is the last axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class DiagGaussian:
    """Mean and elementwise variance of an axis-aligned Gaussian."""

    mean: torch.Tensor
    var: torch.Tensor

    def __post_init__(self):
        if self.mean.shape != self.var.shape:
            raise ValueError(f"mean/var shape mismatch: {self.mean.shape} vs {self.var.shape}")
        if not torch.all(self.var > 0):
            raise ValueError("variance must be strictly positive")

    def log_prob(self, x: torch.Tensor) -> torch.Tensor:
        return gaussian_log_prob(self.mean, self.var, x)

    def entropy(self) -> torch.Tensor:
        return gaussian_entropy(self.var)


def gaussian_log_prob(mean: torch.Tensor, var: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Exact log density, summed over the event (last) dimension."""
    return (-0.5 * (LOG_2PI + torch.log(var) + (x - mean) ** 2 / var)).sum(dim=-1)


def gaussian_entropy(var: torch.Tensor) -> torch.Tensor:
    """Closed form 0.5 * d * (1 + ln 2pi) + 0.5 * sum ln var_i."""
    d = var.shape[-1]
    return 0.5 * d * (1.0 + LOG_2PI) + 0.5 * torch.log(var).sum(dim=-1)


def gaussian_product_params(
    means: torch.Tensor, variances: torch.Tensor, mask: torch.Tensor | None = None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Normalized product of diagonal Gaussians stacked on the first axis.

    Precision-weighted combination: the product density is itself Gaussian
    with precision = sum of precisions and mean = variance-weighted average.
    An optional boolean/float `mask` (broadcastable to the factor axis)
    drops factors, which implements truncated trajectory windows.
    """
    if means.shape != variances.shape:
        raise ValueError("means/variances shape mismatch")
    if means.shape[0] < 1:
        raise ValueError("need at least one factor")
    prec = 1.0 / variances
    weighted = means * prec
    if mask is not None:
        prec = prec * mask
        weighted = weighted * mask
    total_prec = prec.sum(dim=0)
    var = 1.0 / total_prec
    mean = var * weighted.sum(dim=0)
    return mean, var


def gaussian_product(factors: list[DiagGaussian]) -> DiagGaussian:
    if not factors:
        raise ValueError("need at least one factor")
    shape = factors[0].mean.shape
    for f in factors:
        if f.mean.shape != shape:
            raise ValueError("factor dimension mismatch")
    means = torch.stack([f.mean for f in factors])
    variances = torch.stack([f.var for f in factors])
    mean, var = gaussian_product_params(means, variances)
    return DiagGaussian(mean, var)


def reparameterize(mean: torch.Tensor, var: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
    """z = mean + sqrt(var) * noise; gradients flow through mean and var."""
    return mean + torch.sqrt(var) * noise
