"""Core layer - physics, numerics and domain models."""

from drntool.core.models import (
    EnsembleConfig,
    Geometry,
    Lineshape,
    PhysicalParams,
    RamseySequence,
    SequenceSet,
    TimeDistribution,
    WalkConfig,
)
from drntool.core.pipeline import LineshapePipeline

__all__ = [
    "PhysicalParams",
    "Geometry",
    "RamseySequence",
    "Lineshape",
    "TimeDistribution",
    "WalkConfig",
    "EnsembleConfig",
    "SequenceSet",
    "LineshapePipeline",
]
