"""Wavefunction-fingerprint extraction from coherence-versus-pulse-number traces.

Zeros of a resonant dip trace locate the transverse couplings of the
individual target spins; the depth of the dip locates the dimension of a
correlated cluster on the discrete ladder ``(d - 4) / d``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit, linear_sum_assignment
from scipy.signal import savgol_filter
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import AnalysisError, ClassificationUnavailable, as_pulse_trace, check_pulse_column
from .analytic import DipParameters, dip_multi, generic_minimum
from .systems import SensorKind

MATCH_WINDOW_PULSES = 1.0
MATCH_WINDOW_FRACTION = 0.03
UNRESOLVED_RATIO = 0.10
NO_DIP_MARGIN = 0.02
NOISE_FLOOR = 1e-4
SINUSOID_RESIDUAL_FACTOR = 1.5
MAX_DIMENSION = 64


@dataclass(frozen=True)
class ZeroCrossing:
    n_frac: float
    slope: float


@dataclass
class FingerprintReport:
    couplings: list
    std_errors: list
    n_detected: int
    threshold: float
    dip_min: float
    inferred_dimension: object
    first_zeros: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


@dataclass
class CorrelationReport:
    dip_min: float
    dimension: int
    confidence: float
    noise: float
    window: tuple

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def find_zeros(trace, values=None):
    """Sign changes of the real part, placed by linear interpolation between integers."""
    n, y = as_pulse_trace(trace, values)
    out = []
    i = 0
    while i < len(y) - 1:
        if y[i] == 0.0:
            # a sample sitting exactly on zero counts once, if the sign actually changes across it
            j = i + 1
            while j < len(y) and y[j] == 0.0:
                j += 1
            if 0 < i and j < len(y) and np.sign(y[i - 1]) != np.sign(y[j]):
                out.append(ZeroCrossing(float(n[i]), float((y[j] - y[i - 1]) / (n[j] - n[i - 1]))))
            i = j
            continue
        if y[i + 1] != 0.0 and np.sign(y[i]) != np.sign(y[i + 1]):
            slope = y[i + 1] - y[i]
            out.append(ZeroCrossing(float(n[i] - y[i] / slope), float(slope)))
        i += 1
    return out


def estimate_noise(y):
    """Sample noise from the robust spread of second differences."""
    y = np.asarray(y, float)
    if len(y) < 5:
        return 0.0
    d2 = np.diff(y, 2)
    return float(np.median(np.abs(d2 - np.median(d2))) / 0.6745 / np.sqrt(6.0))


def _quadratic_min(x, y):
    c = np.polyfit(x - x.mean(), y, 2)
    if c[0] <= 0:
        return float(np.min(y))
    xv = -c[1] / (2 * c[0])
    xv = np.clip(xv, x.min() - x.mean(), x.max() - x.mean())
    return float(np.polyval(c, xv))


def _sinusoid(x, offset, a, b, k):
    return offset + a * np.cos(k * x) + b * np.sin(k * x)


def _sinusoid_min(n, y, noise):
    """Lowest value of a single sinusoid fitted to the whole trace, or None if it does not describe it.

    A resonant single-transition dip is ``offset + amplitude cos(k N)``, so the
    fit pools every sample instead of the few near the trough. Rejected when the
    trace covers less than half a period or the residual exceeds the noise.
    """
    x = np.asarray(n, float)
    pad = 8 * len(y)
    spec = np.abs(np.fft.rfft(y - y.mean(), pad))
    k0 = 2 * np.pi * np.fft.rfftfreq(pad, d=x[1] - x[0])[1 + np.argmax(spec[1:])]
    basis = np.column_stack([np.ones_like(x), np.cos(k0 * x), np.sin(k0 * x)])
    start = np.linalg.lstsq(basis, y, rcond=None)[0]
    try:
        p, _ = curve_fit(_sinusoid, x, y, p0=[*start, k0])
    except (RuntimeError, ValueError):
        return None
    residual = np.std(y - _sinusoid(x, *p))
    if abs(p[3]) * (x[-1] - x[0]) < np.pi or residual > SINUSOID_RESIDUAL_FACTOR * noise:
        return None
    return float(p[0] - np.hypot(p[1], p[2]))


def dip_minimum(n, y, noise=None):
    """Depth of the deepest dip and the window it was fitted on.

    Clean traces use a five-point quadratic around the sampled minimum. Noisy
    traces are fitted with a single sinusoid over the full window when that
    describes them to within the noise; otherwise the trough is located on a
    smoothed copy and the quadratic fitted over the contiguous stretch lying in
    the bottom tenth of the trace range.
    """
    y = np.asarray(y, float)
    noise = estimate_noise(y) if noise is None else noise
    if noise >= NOISE_FLOOR and len(y) >= 11:
        low = _sinusoid_min(n, y, noise)
        if low is not None:
            return low, (0, len(y)), noise
    if noise < NOISE_FLOOR or len(y) < 11:
        i = int(np.argmin(y))
        lo, hi = max(0, i - 2), min(len(y), i + 3)
    else:
        smooth = savgol_filter(y, 11, 2)
        i = int(np.argmin(smooth))
        band = smooth[i] + 0.1 * (np.max(smooth) - smooth[i])
        lo = i
        while lo > 0 and smooth[lo - 1] <= band:
            lo -= 1
        hi = i + 1
        while hi < len(y) and smooth[hi] <= band:
            hi += 1
        if hi - lo < 5:
            lo, hi = max(0, i - 2), min(len(y), i + 3)
    x = np.asarray(n, float)[lo:hi]
    return _quadratic_min(x, y[lo:hi]), (int(lo), int(hi)), noise


def dimension_from_minimum(dip_min):
    """Nearest ``d >= 2`` with ``(d - 4) / d`` equal to the dip minimum."""
    if dip_min >= 1.0 - NO_DIP_MARGIN:
        raise ClassificationUnavailable(f"no dip: minimum {dip_min:.4f} too close to 1")
    return int(max(2, min(MAX_DIMENSION, round(4.0 / (1.0 - dip_min)))))


def classify_correlation(trace, values=None, noise=None):
    """Read the cluster dimension off the deepest point of a resonant dip trace."""
    n, y = as_pulse_trace(trace, values)
    dip_min, window, noise = dip_minimum(n, y, noise)
    d = dimension_from_minimum(dip_min)
    # boundaries with the neighbouring levels, in units of the fitted minimum's error
    upper = 1 - 4.0 / (d + 0.5)
    lower = 1 - 4.0 / (d - 0.5) if d > 2 else -np.inf
    margin = min(upper - dip_min, dip_min - lower)
    n_fit = max(window[1] - window[0], 1)
    err = noise / np.sqrt(n_fit)
    confidence = float(margin / err) if err > 0 else float("inf")
    return CorrelationReport(float(dip_min), d, confidence, float(noise), window)


def peel_couplings(zeros, omega0, g=1, n_max=None, max_spins=10, noise=0.0):
    """Greedy assignment of zero crossings to individual spins.

    The earliest unexplained crossing opens a new spin with coupling
    ``pi omega0 / (2 g n)``; that spin's later zeros at odd multiples of ``n``
    are then struck from the list.
    """
    g = SensorKind.parse(g).g
    xs = [z.n_frac for z in zeros]
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("zeros must be sorted ascending")
    if n_max is None:
        n_max = xs[-1] if xs else np.inf
    remaining = list(zeros)
    first, couplings, errors, unresolved = [], [], [], []
    while remaining:
        if len(first) >= max_spins:
            raise AnalysisError(
                f"{len(remaining)} crossings left unexplained after {max_spins} spins",
                {"residual": [z.n_frac for z in remaining], "first_zeros": first},
            )
        z = remaining.pop(0)
        x = z.n_frac
        for k, x_prev in enumerate(first):
            if abs(x / x_prev - 1.0) < UNRESOLVED_RATIO:
                unresolved.append([k, len(first)])
        first.append(x)
        a = np.pi * omega0 / (2.0 * g * x)
        couplings.append(a)
        sn = noise / abs(z.slope) if z.slope else 0.0
        errors.append(a * sn / x)
        j = 2
        while (2 * j - 1) * x <= n_max + MATCH_WINDOW_PULSES:
            target = (2 * j - 1) * x
            win = max(MATCH_WINDOW_PULSES, MATCH_WINDOW_FRACTION * target)
            hits = [r for r in remaining if abs(r.n_frac - target) <= win]
            if hits:
                remaining.remove(min(hits, key=lambda r: abs(r.n_frac - target)))
            j += 1
    order = np.argsort(couplings)[::-1]
    threshold = np.pi * omega0 / (2.0 * g * n_max) if np.isfinite(n_max) else 0.0
    remap = {int(o): i for i, o in enumerate(order)}
    return FingerprintReport(
        couplings=[float(couplings[i]) for i in order],
        std_errors=[float(errors[i]) for i in order],
        n_detected=len(couplings),
        threshold=float(threshold),
        dip_min=float("nan"),
        inferred_dimension="unbounded",
        first_zeros=[float(first[i]) for i in order],
        unresolved=[sorted([remap[a], remap[b]]) for a, b in unresolved],
    )


def fingerprint(trace, omega0, g=1, values=None, noise=None, max_spins=10):
    """Zeros, peeled couplings and dip depth of one resonant trace."""
    n, y = as_pulse_trace(trace, values)
    noise = estimate_noise(y) if noise is None else noise
    report = peel_couplings(find_zeros(n, y), omega0, g, n_max=float(n[-1]), max_spins=max_spins, noise=noise)
    report.dip_min = float(np.min(y))
    try:
        report.inferred_dimension = dimension_from_minimum(report.dip_min)
    except ClassificationUnavailable:
        report.inferred_dimension = "unbounded"
    return report


@dataclass
class SplittingReport:
    split: object
    inferred_regime: str
    dip_min_shifted: float
    dip_min_base: float
    confidence: float

    def to_dict(self):
        return asdict(self)


def detect_splitting(trace_shifted, trace_base, tolerance=0.15):
    """Decide whether the resonant transition of a two-spin cluster is split off.

    ``trace_shifted`` is taken with the sequence resonant at ``omega_A + mu``,
    ``trace_base`` at ``omega_A``. A split (correlated, ``d = 4``) transition bottoms
    out at 0; the degenerate, independent-spin picture reaches -1. Anything further
    than ``tolerance`` from both levels is reported as indeterminate.
    """
    n, y = as_pulse_trace(trace_shifted)
    dmin, _, _ = dip_minimum(n, y)
    nb, yb = as_pulse_trace(trace_base)
    bmin, _, _ = dip_minimum(nb, yb)
    levels = {"correlated": generic_minimum(4), "independent": generic_minimum(2)}
    regime, level = min(levels.items(), key=lambda kv: abs(dmin - kv[1]))
    dist = abs(dmin - level)
    confidence = float(max(0.0, 1.0 - dist / tolerance))
    if dist > tolerance:
        return SplittingReport(None, "indeterminate", float(dmin), float(bmin), 0.0)
    return SplittingReport(regime == "correlated", regime, float(dmin), float(bmin), confidence)


def track_couplings(sweep):
    """Follow each spin's coupling across a sweep of field directions.

    ``sweep`` is a list of coupling lists, one per direction, in sweep order.
    Each step predicts every spin's next value by linear extrapolation from the
    last two steps and solves the assignment that minimizes the total mismatch,
    so crossing branches keep their identity. Returns ``(n_directions, n_spins)``.
    """
    if not sweep:
        return np.empty((0, 0))
    n_spins = len(sweep[0])
    if any(len(c) != n_spins for c in sweep):
        raise AnalysisError("spin count changes along the sweep", {"counts": [len(c) for c in sweep]})
    rows = [np.asarray(sweep[0], float)]
    for nxt in sweep[1:]:
        nxt = np.asarray(nxt, float)
        pred = rows[-1] if len(rows) < 2 else 2 * rows[-1] - rows[-2]
        _, cols = linear_sum_assignment(np.abs(pred[:, None] - nxt[None, :]))
        rows.append(nxt[cols])
    return np.vstack(rows)


class CouplingFingerprint(RegressorMixin, BaseEstimator):
    """Estimate individual transverse couplings from a resonant dip trace.

    ``fit(X, y)`` takes pulse numbers as a single column and the measured
    coherence as ``y``. After fitting, ``predict`` returns the product-of-cosines
    dip implied by the recovered couplings.
    """

    def __init__(self, omega0=1.0, sensor="spin_half", max_spins=10, noise=None):
        self.omega0 = omega0
        self.sensor = sensor
        self.max_spins = max_spins
        self.noise = noise

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n = check_pulse_column(X)
        g = SensorKind.parse(self.sensor).g
        self.report_ = fingerprint(n, self.omega0, g, values=y, noise=self.noise, max_spins=self.max_spins)
        self.couplings_ = np.asarray(self.report_.couplings)
        self.n_spins_ = self.report_.n_detected
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "couplings_")
        n = check_pulse_column(X)
        params = DipParameters.for_sensor(self.omega0, tuple(self.couplings_), self.sensor)
        return dip_multi(params, n)


class CorrelationClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Rule-based classifier mapping dip traces to cluster dimensions.

    Each row of ``X`` is one trace sampled at consecutive pulse numbers. There is
    nothing to learn; ``fit`` only records the input width. ``transform`` gives the
    fitted dip minimum of every row, ``predict`` the dimension ``d``.
    """

    def __init__(self, noise=None):
        self.noise = noise

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.arange(2, MAX_DIMENSION + 1)
        return self

    def _reports(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} samples per trace, expected {self.n_features_in_}")
        n = np.arange(X.shape[1], dtype=float)
        return [classify_correlation(n, row, noise=self.noise) for row in X]

    def transform(self, X):
        return np.array([[r.dip_min] for r in self._reports(X)])

    def predict(self, X):
        return np.array([r.dimension for r in self._reports(X)])
