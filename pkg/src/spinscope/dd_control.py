"""CPMG timing, modulation function and filter functionals.

Every frequency here is an angular frequency. The filter function follows

    F(w, t) = w * |int_0^t f(t') exp(i w t') dt'|

with ``f`` the +/-1 modulation that flips at every pulse. For CPMG this
has a closed form which :func:`filter_function` evaluates; the complex
integral itself is available exactly from :func:`modulation_integral`.
"""

from dataclasses import dataclass

import numpy as np

SINGULAR_WINDOW = 1e-3


@dataclass(frozen=True)
class DDSequence:
    """CPMG-N with half pulse spacing ``tau`` (pulses at ``(2p - 1) tau``).

    ``n_pulses = 0`` is allowed and stands for no evolution at all, so that
    pulse-number scans can start from the trivial point ``L = 1``.
    """

    n_pulses: int
    tau: float

    def __post_init__(self):
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 0:
            raise ValueError(f"n_pulses must be a non-negative integer, got {self.n_pulses!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        object.__setattr__(self, "n_pulses", int(self.n_pulses))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def total_time(self):
        return 2.0 * self.n_pulses * self.tau

    def boundaries(self):
        """``[t_0 = 0, t_1, ..., t_N, t_{N+1} = t]``."""
        if self.n_pulses == 0:
            return np.array([0.0])
        return np.concatenate(([0.0], pulse_times(self), [self.total_time]))

    def segment_signs(self):
        return 1.0 - 2.0 * (np.arange(self.n_pulses + 1) % 2)


def pulse_times(seq):
    """Pulse instants ``(2p - 1) tau`` for ``p = 1..N``."""
    if seq.n_pulses < 1:
        raise ValueError("pulse_times needs at least one pulse")
    return (2.0 * np.arange(1, seq.n_pulses + 1) - 1.0) * seq.tau


def modulation_value(seq, t):
    """Value of the modulation function (+1 before the first pulse)."""
    t = float(t)
    if t < 0 or t > seq.total_time:
        raise ValueError(f"t={t} outside [0, {seq.total_time}]")
    if seq.n_pulses == 0:
        return 1
    p = int(np.searchsorted(pulse_times(seq), t, side="right"))
    return -1 if p % 2 else 1


def fourier_coefficient(q):
    """Amplitude of harmonic ``2q - 1`` of the CPMG modulation (base frequency ``pi / 2tau``)."""
    if int(q) != q or q < 1:
        raise ValueError(f"harmonic index q must be a positive integer, got {q!r}")
    q = int(q)
    return 4.0 * (-1) ** (q + 1) / ((2 * q - 1) * np.pi)


def modulation_integral(omega, seq):
    """Exact ``int_0^t f(t') exp(i omega t') dt'`` summed segment by segment."""
    if seq.n_pulses == 0:
        return 0j
    edges = seq.boundaries()
    signs = seq.segment_signs()
    if omega == 0:
        return complex(np.sum(signs * np.diff(edges)))
    e = np.exp(1j * omega * edges)
    return complex(np.sum(signs * np.diff(e)) / (1j * omega))


def _ratio_odd(n, x):
    # cos(n x) / cos(x) for odd n, written as a finite cosine sum (no pole)
    k = (n - 1) // 2
    j = np.arange(k)
    return 2.0 * np.sum((-1.0) ** j * np.cos((n - 1 - 2 * j) * x)) + (-1.0) ** k


def _ratio_even(n, x):
    # sin(n x) / cos(x) for even n
    j = np.arange(n // 2)
    return 2.0 * np.sum((-1.0) ** j * np.sin((n - 1 - 2 * j) * x))


def _closed_form(omega, n, tau):
    x = omega * tau
    pref = 4.0 * np.sin(0.5 * x) ** 2
    c = np.cos(x)
    if abs(c) < SINGULAR_WINDOW:
        ratio = _ratio_odd(n, x) if n % 2 else _ratio_even(n, x)
    elif n % 2:
        ratio = np.cos(n * x) / c
    else:
        ratio = np.sin(n * x) / c
    return pref * abs(ratio)


@dataclass(frozen=True)
class FilterEvaluation:
    f_value: float
    phase: float
    chi2: float


def filter_value(omega, seq):
    """Closed-form CPMG filter function ``F(omega, t = 2 N tau)``.

    With ``t = 2 N tau`` the closed form reads
    ``4 sin^2(w tau / 2) |cos(N w tau) / cos(w tau)|`` for odd N and the same with
    ``sin(N w tau)`` for even N. Near ``cos(w tau) = 0`` the ratio is evaluated as
    a finite trigonometric sum, which is its analytic continuation.
    """
    omega = abs(float(omega))
    if seq.n_pulses == 0 or omega == 0:
        return 0.0
    return float(_closed_form(omega, seq.n_pulses, seq.tau))


def filter_function(omega, seq):
    """Evaluate ``F``, the phase ``xi`` and the second-order functional ``chi2``.

    ``omega`` must be non-negative. ``xi`` is defined through
    ``exp(i xi) F = omega * int f exp(i omega t)``; it is 0 wherever ``F`` vanishes.
    """
    if omega < 0:
        raise ValueError("filter_function expects omega >= 0")
    f = filter_value(omega, seq)
    z = omega * modulation_integral(omega, seq)
    phase = float(np.angle(z)) if abs(z) > 1e-14 else 0.0
    return FilterEvaluation(f_value=f, phase=phase, chi2=chi2(omega, seq) if omega > 0 else 0.0)


def chi2(omega, seq):
    """Second-order Magnus functional

        chi2 = w^2 int_0^t dt1 int_0^t1 dt2 f(t1) f(t2) sin(w (t1 - t2)),

    integrated exactly over the piecewise-constant segments.
    """
    if not omega > 0:
        raise ValueError("chi2 expects omega > 0")
    if seq.n_pulses == 0:
        return 0.0
    edges = seq.boundaries()
    signs = seq.segment_signs()
    widths = np.diff(edges)
    ph = np.exp(1j * omega * edges)
    seg = signs * np.diff(ph) / (1j * omega)
    earlier = np.concatenate(([0j], np.cumsum(seg)[:-1]))
    cross = np.sum(np.imag(seg * np.conj(earlier)))
    # same-segment triangle: int_0^D dt1 int_0^t1 sin(w (t1 - t2)) dt2
    diag = np.sum(widths / omega - np.sin(omega * widths) / omega**2)
    return float(omega**2 * (cross + diag))


def resonant_tau(omega0, q=1):
    """Half pulse spacing that puts harmonic ``2q - 1`` on ``omega0``: ``pi (2q - 1) / (2 omega0)``."""
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    if int(q) != q or q < 1:
        raise ValueError("dip order q must be a positive integer")
    return np.pi * (2 * int(q) - 1) / (2.0 * omega0)
