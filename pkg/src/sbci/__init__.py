"""Simplified Biased Contribution Index: library and free-riding simulator."""

from .core import (
    PeerLedger,
    ShareMatrix,
    bias_ratio,
    compute_beta,
    epoch_update,
    init_indices,
    threshold_for,
    upload_score,
    weighted_download_score,
)
from .config import ExperimentConfig
from .sim import run_experiment

__version__ = "0.1.0"
