"""Closed-form coherence formulas and the first-order Magnus approximation.

All formulas take angular frequencies. Pulse numbers may be scalars or
arrays; results broadcast accordingly.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .dd_control import filter_value, modulation_integral
from .spin_algebra import expm_hermitian
from .systems import SensorKind

WEAK_COUPLING_RATIO = 0.1


@dataclass(frozen=True)
class DipParameters:
    """Larmor frequency, transverse couplings ``A_k_perp`` and sensor multiplier ``g``."""

    omega0: float
    couplings: tuple
    g: int = 1

    def __post_init__(self):
        c = tuple(float(a) for a in np.atleast_1d(self.couplings))
        if any(a < 0 for a in c):
            raise ValueError("transverse couplings must be non-negative")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.g not in (1, 2):
            raise ValueError("sensor multiplier g must be 1 or 2")
        object.__setattr__(self, "couplings", c)

    @classmethod
    def for_sensor(cls, omega0, couplings, sensor):
        return cls(omega0, couplings, SensorKind.parse(sensor).g)

    @property
    def weak_coupling(self):
        """False when some coupling exceeds ``omega0 / 10`` and the formulas degrade."""
        return max(self.couplings, default=0.0) <= WEAK_COUPLING_RATIO * self.omega0

    @property
    def _a(self):
        return self.g * np.asarray(self.couplings)


def _cos_product(args):
    return np.prod(np.cos(args), axis=-1)


def rabi_frequency(a_perp, omega0, tau):
    omega_t = np.pi / (2.0 * np.asarray(tau, float))
    return np.sqrt((a_perp / np.pi) ** 2 + (omega0 - omega_t) ** 2)


def single_spin_coherence(a_perp, omega0, n, tau):
    """Rotating-wave single-spin coherence ``1 - 2 A^2 / (pi w_R)^2 sin^2(N tau w_R)``."""
    n = np.asarray(n, float)
    if a_perp == 0:
        return np.ones_like(n * np.asarray(tau, float))
    w_r = rabi_frequency(a_perp, omega0, tau)
    return 1.0 - 2.0 * a_perp**2 / (np.pi**2 * w_r**2) * np.sin(n * tau * w_r) ** 2


def single_spin_envelope(a_perp, omega0, tau):
    """Lowest coherence reachable at half spacing ``tau``: ``1 - 2 A^2 / (pi w_R)^2``."""
    if a_perp == 0:
        return np.ones_like(np.asarray(tau, float))
    w_r = rabi_frequency(a_perp, omega0, tau)
    return 1.0 - 2.0 * a_perp**2 / (np.pi**2 * w_r**2)


def dip_multi(params, n):
    """Resonant coherence dip ``prod_k cos(g A_k N / omega0)``."""
    n = np.asarray(n, float)
    return _cos_product(np.multiply.outer(n, params._a) / params.omega0)


def coherence_general(params, f_value):
    """``prod_k cos(g A_k F / (2 omega0))`` for a filter value ``F`` (scalar or array)."""
    f = np.asarray(f_value, float)
    if np.any(f < 0):
        raise ValueError("filter values are non-negative")
    return _cos_product(np.multiply.outer(f, params._a) / (2.0 * params.omega0))


def semiclassical_coherence(params, f_value):
    """Gaussian-noise coherence ``exp(-sum_k (g A_k)^2 F^2 / (8 omega0^2))``."""
    f = np.asarray(f_value, float)
    s = np.sum(params._a**2)
    return np.exp(-s * f**2 / (8.0 * params.omega0**2))


def semiclassical_dip(params, n):
    return semiclassical_coherence(params, 2.0 * np.asarray(n, float))


def semiclassical_exponent(params, n):
    """``sum_k (g A_k)^2 N^2 / (2 omega0^2)``, the Gaussian decay exponent at resonance."""
    return np.sum(params._a**2) * np.asarray(n, float) ** 2 / (2.0 * params.omega0**2)


def typeII_coherence(lam, omega_a, omega_b, f_a, f_b):
    """Two independent spin-1/2 targets, general filter values."""
    return np.cos(lam * np.asarray(f_a) / (2 * omega_a)) * np.cos(lam * np.asarray(f_b) / (2 * omega_b))


def typeV_coherence(lam, omega_a, omega_b, f_a, f_b):
    """Spin-1 target with transitions at ``omega_a`` and ``omega_b``."""
    arg = lam * np.sqrt(np.asarray(f_a) ** 2 / (2 * omega_a**2) + np.asarray(f_b) ** 2 / (2 * omega_b**2))
    return (1.0 + 2.0 * np.cos(arg)) / 3.0


def typeII_dip(lam, omega_a, n):
    if not omega_a > 0:
        raise ValueError("omega_a must be positive")
    return np.cos(lam * np.asarray(n, float) / omega_a)


def typeV_dip(lam, omega_a, n):
    if not omega_a > 0:
        raise ValueError("omega_a must be positive")
    return (1.0 + 2.0 * np.cos(np.sqrt(2.0) * lam * np.asarray(n, float) / omega_a)) / 3.0


def ladder_coupling(J, m, lam):
    """``lambda_m = lambda sqrt((J - m)(J + m + 1)) / 2`` for the ``|m> <-> |m+1>`` transition."""
    if abs(m) > J or m + 1 > J or abs(2 * (J - m) - round(2 * (J - m))) > 1e-9 or (J - m) != int(J - m):
        raise ValueError(f"no transition |{m}> <-> |{m + 1}> for J={J}")
    return lam * np.sqrt((J - m) * (J + m + 1)) / 2.0


def ladder_dip(J, m, lam, omega_m, n):
    """Spin-J ladder dip ``(2J-1)/(2J+1) + 2/(2J+1) cos(2 lambda_m N / omega_m)``."""
    lam_m = ladder_coupling(J, m, lam)
    n = np.asarray(n, float)
    return (2 * J - 1) / (2 * J + 1) + 2.0 / (2 * J + 1) * np.cos(2 * lam_m * n / omega_m)


def ladder_minimum(J):
    return (2 * J - 3) / (2 * J + 1)


def ladder_minimum_position(J, m, lam, omega_m):
    return np.pi * omega_m / (2 * ladder_coupling(J, m, lam))


def generic_cluster_dip(beta_mn, omega_mn, d, n):
    """Dip from one resolved transition of a ``d``-level cluster."""
    if d < 2 or not omega_mn > 0:
        raise ValueError("need d >= 2 and omega_mn > 0")
    n = np.asarray(n, float)
    return (d - 2 + 2 * np.cos(2 * abs(beta_mn / omega_mn) * n)) / d


def generic_minimum(d):
    """Discrete dip minimum ``(d - 4) / d``."""
    return (d - 4) / d


def magnus_coherence(system, sensor, seq):
    """First-order Magnus coherence ``Tr[exp(2 Omega_1)] / d`` for any target system.

    ``Omega_1 = -i (g/2) int f(t) beta(t) dt`` is assembled in the eigenbasis of
    ``H0`` from the exact modulation integral at every transition frequency.
    """
    g = SensorKind.parse(sensor).g
    h0, beta = system.operators()
    energies, vecs = np.linalg.eigh(h0)
    b = vecs.conj().T @ beta @ vecs
    w = energies[:, None] - energies[None, :]
    # exact degeneracies (w = 0) integrate to zero for a balanced sequence
    integ = np.vectorize(lambda x: modulation_integral(x, seq), otypes=[complex])(np.round(w, 14))
    k = b * integ
    k = 0.5 * (k + k.conj().T)
    return complex(np.trace(expm_hermitian(g * k)) / system.dim)


def filter_values(omega, sequences):
    return np.array([filter_value(omega, s) for s in sequences])


def advisory(params):
    if not params.weak_coupling:
        warnings.warn("coupling exceeds omega0/10; closed-form dips lose accuracy", stacklevel=2)
