"""Simulation and exact analytics for a two-slot stream buffer observer."""

from .engine import (
    BufferView,
    Horizon,
    Position,
    SimulationTrace,
    StreamInstance,
    buffer_at,
    offline_dp,
    offline_payoff,
    simulate,
)
from .errors import DomainError, EnumerationGuardError, ValidationError
from .policies import NaivePolicy, ThresholdPolicy, decide, median_threshold, rank_threshold

__all__ = [
    "BufferView",
    "DomainError",
    "EnumerationGuardError",
    "Horizon",
    "NaivePolicy",
    "Position",
    "SimulationTrace",
    "StreamInstance",
    "ThresholdPolicy",
    "ValidationError",
    "buffer_at",
    "decide",
    "median_threshold",
    "offline_dp",
    "offline_payoff",
    "rank_threshold",
    "simulate",
]
