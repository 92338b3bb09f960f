"""Optical qubit transfer through photon loss: closed forms, a Fock-space oracle and threshold analysis."""

from .analysis import ComparisonRegion, NoCrossing, ThresholdReport
from .channel import LossPoint
from .fock import DensityOperator, FockState, TruncationError
from .qubits import BellOutcome, BlochAngles, Encoding, QubitSpec
from .simulate import Protocol, QuadratureSpec, average_over_bloch

__version__ = "0.1.0"

__all__ = [
    "BellOutcome",
    "BlochAngles",
    "ComparisonRegion",
    "DensityOperator",
    "Encoding",
    "FockState",
    "LossPoint",
    "NoCrossing",
    "Protocol",
    "QuadratureSpec",
    "QubitSpec",
    "ThresholdReport",
    "TruncationError",
    "average_over_bloch",
]
