"""Custom torch autograd operation backed by the bound loss.

The forward pass evaluates the combined loss on detached CPU copies of the
tensors; the backward pass returns the externally computed voxel gradient
scaled by the incoming cotangent. Gradients flow to the prediction only.
"""

from __future__ import annotations

import torch

from . import LossConfig, bound_loss


class TopologyLossFunction(torch.autograd.Function):
    @staticmethod
    def forward(ctx, pred: torch.Tensor, target: torch.Tensor, config: LossConfig):
        value, gradient = bound_loss(
            target.detach().cpu().numpy(),
            pred.detach().cpu().numpy(),
            config,
        )
        ctx.save_for_backward(
            torch.as_tensor(gradient, dtype=pred.dtype, device=pred.device)
        )
        return pred.new_tensor(value)

    @staticmethod
    def backward(ctx, grad_output):
        (gradient,) = ctx.saved_tensors
        return grad_output * gradient, None, None


def topology_loss(pred: torch.Tensor, target: torch.Tensor, config: LossConfig | None = None):
    """Differentiable (w.r.t. ``pred``) combined loss as a scalar tensor."""
    if config is None:
        config = LossConfig()
    return TopologyLossFunction.apply(pred, target, config)
