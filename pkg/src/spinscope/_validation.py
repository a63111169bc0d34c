"""Input checks shared by the estimator wrappers."""

import numpy as np
from sklearn.utils.validation import check_array

from .exact_sim import CoherenceTrace


class AnalysisError(RuntimeError):
    """Raised when a trace cannot be explained; ``diagnostics`` carries the details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ClassificationUnavailable(AnalysisError):
    pass


class InversionError(ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def as_pulse_trace(trace_or_n, values=None):
    """Return ``(N, L_real)`` from a trace or from explicit arrays, checking integer spacing."""
    if isinstance(trace_or_n, CoherenceTrace):
        if trace_or_n.axis != "N":
            raise ValueError("expected a trace on the pulse-number axis")
        n, y = trace_or_n.abscissa, trace_or_n.real
    else:
        n = np.asarray(trace_or_n, float).ravel()
        y = np.real(np.asarray(values)).ravel()
    if len(n) < 2 or len(n) != len(y):
        raise ValueError("a pulse-number trace needs at least two samples")
    if not np.allclose(np.diff(n), 1.0):
        raise ValueError("pulse-number trace must be sampled at consecutive integers")
    return n, y


def check_pulse_column(X):
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of pulse numbers, got {X.shape[1]} columns")
    return X[:, 0]
