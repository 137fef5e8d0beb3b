"""Transition probabilities for nonlinear sweeps through an avoided crossing."""

from . import closed_form, ddp, gap_transform, runner, schrodinger, sweep_catalog
from .errors import (
    ContourError,
    CoverageError,
    DomainError,
    IntegrationError,
    MultiplicityError,
    NlsweepError,
    SearchError,
    SingularityError,
    UnknownFamilyError,
    UnsupportedError,
    ValidationError,
    WindowError,
)
from .estimators import TransitionProbabilityEstimator
from .sweep_catalog import custom_profile, families, make_profile

__version__ = "0.1.0"

__all__ = [
    "closed_form", "ddp", "gap_transform", "runner", "schrodinger", "sweep_catalog",
    "make_profile", "custom_profile", "families", "TransitionProbabilityEstimator",
    "NlsweepError", "ValidationError", "UnknownFamilyError", "UnsupportedError",
    "SingularityError", "DomainError", "IntegrationError", "WindowError", "SearchError",
    "ContourError", "MultiplicityError", "CoverageError",
]
