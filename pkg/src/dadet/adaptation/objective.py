"""Joint objective bookkeeping.

The loss handed to the optimizer is L_det + L_dc with the reversal layer
already inside the L_dc graph, so one backward pass gives the classifier
+dL_dc/dphi and the backbone dL_det/dtheta - lambda * dL_dc/dtheta.
The *reported* total is L_det + lambda * L_dc, with lambda stored positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from dadet.adaptation.grl import GrlConfig


@dataclass
class JointObjective:
    training_loss: torch.Tensor
    reported_total: float
    l_det: float
    l_dc: float | None


def combine_objective(
    l_det: torch.Tensor, l_dc: torch.Tensor | None, cfg: GrlConfig
) -> JointObjective:
    if l_dc is None:
        return JointObjective(l_det, float(l_det.detach()), float(l_det.detach()), None)
    training = l_det + l_dc
    det_val = float(l_det.detach())
    dc_val = float(l_dc.detach())
    return JointObjective(
        training_loss=training,
        reported_total=det_val + cfg.lam * dc_val,
        l_det=det_val,
        l_dc=dc_val,
    )
