from dadet.adaptation.grl import GrlConfig, grl_backward, grl_forward, reverse_gradient
from dadet.adaptation.dan import (
    DanKind,
    DanVariant,
    DomainProbMap,
    Scale,
    build_dan,
)
from dadet.adaptation.losses import DomainLossResult, domain_classification_loss, make_domain_labels
from dadet.adaptation.objective import JointObjective, combine_objective

__all__ = [
    "GrlConfig",
    "grl_forward",
    "grl_backward",
    "reverse_gradient",
    "DanKind",
    "DanVariant",
    "DomainProbMap",
    "Scale",
    "build_dan",
    "DomainLossResult",
    "domain_classification_loss",
    "make_domain_labels",
    "JointObjective",
    "combine_objective",
]
