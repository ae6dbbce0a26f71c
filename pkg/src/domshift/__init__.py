"""Executable domain-shift generalization bounds over finite hypothesis classes."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Affine,
    Codebook,
    FiniteDistribution,
    HypothesisClass,
    Identity,
    LossSpec,
    PReLUNet,
    Table,
    compose,
    pushforward,
)
from .measures import discrepancy, quad_discrepancy, risk  # noqa: E402
from .scenarios import ScenarioConfig, generate  # noqa: E402
from .setting import DASetting  # noqa: E402
