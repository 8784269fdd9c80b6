"""KLONE and KGUARD anonymization, weight noising and split & merge."""

from .core import anonymize, kguard, klone
from .degrees import choose_deg
from .noising import noising_candidates, weight_noising, weight_noising_trials
from .params import AnonymizationParams, AnonymizationResult, FreshLabels
from .split import split_and_merge

__all__ = [
    "AnonymizationParams",
    "AnonymizationResult",
    "FreshLabels",
    "anonymize",
    "choose_deg",
    "kguard",
    "klone",
    "noising_candidates",
    "split_and_merge",
    "weight_noising",
    "weight_noising_trials",
]
