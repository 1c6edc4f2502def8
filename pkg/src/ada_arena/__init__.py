"""Simulation framework for adaptive data analysis against balanced adversaries.

The IBE schemes shipped here are simulation-grade toys; never use them to
protect real data.
"""

from .game import (
    BitProjection,
    CiphertextQuery,
    DomainSpec,
    FiniteDistribution,
    GameResult,
    ProtocolViolation,
    TableQuery,
    Transcript,
    outcome_of,
    run_game,
    true_answer,
)
from .mechanisms import EmpiricalMean, GaussianMechanism, TrueMeanOracle, make_mechanism, natural_adapt
from .stats import hoeffding, wilson_interval

__version__ = "0.1.0"

__all__ = [
    "BitProjection",
    "CiphertextQuery",
    "DomainSpec",
    "EmpiricalMean",
    "FiniteDistribution",
    "GameResult",
    "GaussianMechanism",
    "ProtocolViolation",
    "TableQuery",
    "Transcript",
    "TrueMeanOracle",
    "hoeffding",
    "make_mechanism",
    "natural_adapt",
    "outcome_of",
    "run_game",
    "true_answer",
    "wilson_interval",
]
