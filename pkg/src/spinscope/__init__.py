"""Resonant dynamical-decoupling sensing of weakly coupled nuclear spins.

Exact and closed-form sensor coherence under CPMG control, dip-trace analysis
(spin counting, coupling estimates, correlation classes) and three-direction
localization of labelled nuclear spins.
"""

__version__ = "0.1.0"

from .analysis import CorrelationClassifier, CouplingFingerprint, classify_correlation, fingerprint
from .dd_control import DDSequence, filter_function, resonant_tau
from .exact_sim import CoherenceTrace, coherence, pulse_scan, tau_scan
from .mri import FieldDirection, NuclearSpinLocalizer, TargetGeometry, reconstruct
from .systems import CoupledPair, GenericCluster, IndependentSpins, SensorKind, SpinJLadder

__all__ = [
    "CoherenceTrace",
    "CorrelationClassifier",
    "CoupledPair",
    "CouplingFingerprint",
    "DDSequence",
    "FieldDirection",
    "GenericCluster",
    "IndependentSpins",
    "NuclearSpinLocalizer",
    "SensorKind",
    "SpinJLadder",
    "TargetGeometry",
    "classify_correlation",
    "coherence",
    "filter_function",
    "fingerprint",
    "pulse_scan",
    "reconstruct",
    "resonant_tau",
    "tau_scan",
]
