"""Monte Carlo evaluation, separation experiments and lemma verification."""
from .lemmas import LEMMA_IDS, LemmaCheckResult, verify_lemmas
from .montecarlo import (
    ExperimentSpec,
    RewardEstimate,
    SimulationError,
    SimulationResult,
    estimate_reward,
    simulate,
)
from .separations import SEPARATIONS, SeparationReport, run_separation

__all__ = [
    "LEMMA_IDS",
    "LemmaCheckResult",
    "verify_lemmas",
    "ExperimentSpec",
    "RewardEstimate",
    "SimulationError",
    "SimulationResult",
    "estimate_reward",
    "simulate",
    "SEPARATIONS",
    "SeparationReport",
    "run_separation",
]
