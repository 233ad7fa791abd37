"""Gradient reversal: identity forward, -lambda-scaled gradient backward.

The layer turns the domain classifier's minimization into feature-extractor
maximization: the classifier parameters above the layer see the plain
gradient, while everything below receives it multiplied by -lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from dadet.errors import ConfigError


@dataclass(frozen=True)
class GrlConfig:
    """Coupling strength lambda for the reversal layer (0 disables adaptation)."""

    lam: float = 0.1

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")


class _ReverseGradient(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x: torch.Tensor, lam: float) -> torch.Tensor:
        ctx.lam = lam
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        return grad_output * (-ctx.lam), None


def reverse_gradient(x: torch.Tensor, lam: float) -> torch.Tensor:
    """Autograd node: identity forward, gradient scaled by -lam on the way down."""
    return _ReverseGradient.apply(x, lam)


def grl_forward(x: torch.Tensor, cfg: GrlConfig) -> torch.Tensor:
    """Forward pass is exactly the input."""
    return x


def grl_backward(upstream_grad: torch.Tensor, cfg: GrlConfig) -> torch.Tensor:
    """Backward pass scales the upstream gradient by -lambda, elementwise."""
    return upstream_grad * (-cfg.lam)
