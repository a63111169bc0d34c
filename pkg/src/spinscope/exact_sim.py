"""Exact sensor coherence from conditional target propagators.

The sensor is flipped by ideal instantaneous pi pulses, so the target
evolves under ``H0 + s(t) (g/2) beta`` with ``s`` the CPMG sign pattern,
starting at ``+`` for the ``|+>`` branch and ``-`` for ``|->``. The coherence
is ``L = Tr[U_-^dagger U_+] / d`` for a maximally mixed target.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .dd_control import DDSequence, resonant_tau
from .spin_algebra import HermitianPropagator, overlap_trace
from .systems import SensorKind

__all__ = [
    "CoherenceTrace",
    "coherence",
    "conditional_hamiltonians",
    "conditional_propagator",
    "pulse_scan",
    "resonant_tau",
    "tau_scan",
]

DEFAULT_TAU_SAMPLES = 400


@dataclass(frozen=True)
class CoherenceTrace:
    """Sensor coherence sampled along pulse number (``axis='N'``) or half spacing (``axis='tau'``)."""

    axis: str
    abscissa: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in ("N", "tau"):
            raise ValueError(f"axis must be 'N' or 'tau', got {self.axis!r}")
        x = np.asarray(self.abscissa, float)
        v = np.asarray(self.values, complex)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("abscissa and values must be 1-D arrays of equal length")
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "values", v)

    @property
    def real(self):
        return self.values.real

    def __len__(self):
        return len(self.abscissa)

    def with_values(self, values, **meta):
        return CoherenceTrace(self.axis, self.abscissa, values, {**self.metadata, **meta})

    def to_csv(self, fh=None):
        """Write ``<axis>,L_real,L_imag`` rows with 12 significant digits."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([self.axis, "L_real", "L_imag"])
        for x, v in zip(self.abscissa, self.values):
            xs = str(int(x)) if self.axis == "N" else f"{x:.12g}"
            w.writerow([xs, f"{v.real:.12g}", f"{v.imag:.12g}"])
        if fh is None:
            return out.getvalue()

    @classmethod
    def from_csv(cls, fh, metadata=None):
        rows = list(csv.reader(fh))
        axis = rows[0][0]
        data = np.array([[float(c) for c in r] for r in rows[1:] if r])
        return cls(axis, data[:, 0], data[:, 1] + 1j * data[:, 2], metadata or {})


def _sensor(sensor):
    return SensorKind.parse(sensor)


def conditional_hamiltonians(system, sensor=SensorKind.SPIN_HALF):
    """Return ``(H0 + (g/2) beta, H0 - (g/2) beta)``."""
    g = _sensor(sensor).g
    h0, beta = system.operators()
    return h0 + 0.5 * g * beta, h0 - 0.5 * g * beta


class _Segments:
    """Segment exponentials for one pair of conditional Hamiltonians at fixed tau."""

    def __init__(self, h_pm, tau, props=None):
        p, m = props if props is not None else (HermitianPropagator(h_pm[0]), HermitianPropagator(h_pm[1]))
        self.half = {1: p(tau), -1: m(tau)}
        self.full = {1: p(2 * tau), -1: m(2 * tau)}


def _propagate(segs, n, first):
    if n == 0:
        return np.eye(segs.half[1].shape[0], dtype=complex)
    u = segs.half[first]
    sign = first
    for _ in range(n - 1):
        sign = -sign
        u = segs.full[sign] @ u
    return segs.half[-sign] @ u


def conditional_propagator(h_pm, seq):
    """Time-ordered propagators ``(U_+, U_-)`` over the whole sequence."""
    segs = _Segments(h_pm, seq.tau)
    return _propagate(segs, seq.n_pulses, 1), _propagate(segs, seq.n_pulses, -1)


def _overlap(u_plus, u_minus, psi):
    if psi is None:
        return overlap_trace(u_minus, u_plus)
    return np.vdot(u_minus @ psi, u_plus @ psi)


def _as_state(psi, dim):
    if psi is None:
        return None
    psi = np.asarray(psi, complex).ravel()
    if psi.shape != (dim,):
        raise ValueError(f"initial state must have dimension {dim}")
    return psi / np.linalg.norm(psi)


def _factors(system):
    # Uncoupled spin-1/2 targets in a maximally mixed state give a product of single-spin traces.
    if getattr(system, "n_spins", 1) > 1 and getattr(system, "factorizable", False):
        return [system.single(k) for k in range(system.n_spins)]
    return None


def coherence(system, sensor, seq, initial_state=None, factorize=True):
    """Complex sensor coherence after the sequence ``seq``.

    ``initial_state`` replaces the maximally mixed target by a pure state.
    """
    psi = _as_state(initial_state, system.dim)
    parts = _factors(system) if (factorize and psi is None) else None
    if parts is not None:
        return complex(np.prod([coherence(p, sensor, seq) for p in parts]))
    u_plus, u_minus = conditional_propagator(conditional_hamiltonians(system, sensor), seq)
    return complex(_overlap(u_plus, u_minus, psi))


def _pulse_values(h_pm, tau, n_values, psi, props=None):
    segs = _Segments(h_pm, tau, props)
    n_values = np.asarray(n_values, int)
    out = np.empty(len(n_values), complex)
    order = np.argsort(n_values)
    dim = segs.half[1].shape[0]
    eye = np.eye(dim, dtype=complex)
    # running products up to the last pulse, before the closing half segment
    b_plus = b_minus = None
    n_done = 0
    for idx in order:
        n = n_values[idx]
        if n == 0:
            out[idx] = _overlap(eye, eye, psi)
            continue
        if b_plus is None:
            b_plus, b_minus, n_done = segs.half[1], segs.half[-1], 1
        while n_done < n:
            s = 1 if n_done % 2 == 0 else -1
            b_plus = segs.full[s] @ b_plus
            b_minus = segs.full[-s] @ b_minus
            n_done += 1
        s = 1 if n % 2 == 0 else -1
        out[idx] = _overlap(segs.half[s] @ b_plus, segs.half[-s] @ b_minus, psi)
    return out


def _scan_factorized(system, sensor, fn):
    parts = _factors(system)
    if parts is None:
        return None
    vals = None
    for p in parts:
        v = fn(p)
        vals = v if vals is None else vals * v
    return vals


def pulse_scan(system, sensor, tau, n_range, initial_state=None, factorize=True):
    """Coherence versus pulse number at fixed ``tau``.

    ``n_range`` is ``(n_min, n_max)`` (inclusive, every integer) or an explicit
    iterable of pulse numbers.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    n_values = _n_values(n_range)
    sensor = _sensor(sensor)
    psi = _as_state(initial_state, system.dim)
    vals = None
    if factorize and psi is None:
        vals = _scan_factorized(system, sensor, lambda p: _pulse_values(conditional_hamiltonians(p, sensor), tau, n_values, None))
    if vals is None:
        vals = _pulse_values(conditional_hamiltonians(system, sensor), tau, n_values, psi)
    meta = {"system": system.describe(), "sensor": sensor.name, "tau": float(tau), "model": "exact"}
    return CoherenceTrace("N", n_values.astype(float), vals, meta)


def _n_values(n_range):
    if isinstance(n_range, tuple) and len(n_range) == 2:
        lo, hi = n_range
        if int(lo) != lo or int(hi) != hi or lo < 0 or hi < lo:
            raise ValueError(f"invalid pulse-number range {n_range!r}")
        return np.arange(int(lo), int(hi) + 1)
    n_values = np.asarray(list(n_range), dtype=float)
    if n_values.size == 0 or np.any(n_values < 0) or np.any(n_values != np.round(n_values)):
        raise ValueError("pulse numbers must be non-negative integers")
    return n_values.astype(int)


def tau_grid(tau_range, samples=DEFAULT_TAU_SAMPLES):
    lo, hi = (float(v) for v in tau_range)
    if not (0 < lo < hi) or int(samples) < 2:
        raise ValueError(f"invalid tau range {tau_range!r} / samples {samples!r}")
    return np.linspace(lo, hi, int(samples))


def tau_scan(system, sensor, n_pulses, tau_range, samples=DEFAULT_TAU_SAMPLES, factorize=True):
    """Coherence versus half pulse spacing at a fixed pulse number."""
    taus = tau_grid(tau_range, samples)
    sensor = _sensor(sensor)

    def scan(sys):
        h_pm = conditional_hamiltonians(sys, sensor)
        props = (HermitianPropagator(h_pm[0]), HermitianPropagator(h_pm[1]))
        return np.array([_pulse_values(h_pm, t, [n_pulses], None, props)[0] for t in taus])

    vals = _scan_factorized(system, sensor, scan) if factorize else None
    if vals is None:
        vals = scan(system)
    meta = {"system": system.describe(), "sensor": sensor.name, "n_pulses": int(n_pulses), "model": "exact"}
    return CoherenceTrace("tau", taus, vals, meta)


def free_propagator(h, t):
    """``exp(-i h t)``; the degenerate no-pulse evolution."""
    return HermitianPropagator(h)(t)


def sequence(n_pulses, tau):
    return DDSequence(n_pulses, tau)
