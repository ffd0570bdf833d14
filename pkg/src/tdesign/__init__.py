"""Unitary t-design verification, local random walks and randomized benchmarking."""

__version__ = "0.1.0"

from .channels import Channel, diamond_norm, twirl
from .designs import UnitaryEnsemble, design_distance, frame_potential, haar_moment_operator, moment_operator
from .walk import WalkConfig, WalkHamiltonian, spectral_gap

__all__ = [
    "Channel",
    "UnitaryEnsemble",
    "WalkConfig",
    "WalkHamiltonian",
    "design_distance",
    "diamond_norm",
    "frame_potential",
    "haar_moment_operator",
    "moment_operator",
    "spectral_gap",
    "twirl",
]
