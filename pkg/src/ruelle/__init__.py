"""Transfer operators, zeta functions and spectral bounds on one-sided Markov shifts."""

from .errors import RuelleError
from .potential import (ConstantPotential, CylinderIndicator, GeometricPotential, TabulatedFunction,
                        ThetaProfile, constants_for, project_Em, theta_of)
from .shift import TransitionStructure, enumerate_words, full_shift, golden_mean, parry_measure
from .transfer import SpectralData, TransferMatrix, build_matrix, spectrum

__all__ = [
    "RuelleError", "ConstantPotential", "CylinderIndicator", "GeometricPotential", "TabulatedFunction",
    "ThetaProfile", "constants_for", "project_Em", "theta_of", "TransitionStructure", "enumerate_words",
    "full_shift", "golden_mean", "parry_measure", "SpectralData", "TransferMatrix", "build_matrix", "spectrum",
]
