"""Target-system descriptions and sensor kinds.

A target system is anything that can hand back its free Hamiltonian ``H0``
and the noise operator ``beta`` it couples to the sensor through
(``H = S_z beta + H0``). Frequencies are angular.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .spin_algebra import MAX_DIM, check_hermitian, embed, spin_operators

MAX_INDEPENDENT_SPINS = 10

_HALF = spin_operators(0.5)
_I = (_HALF.jx, _HALF.jy, _HALF.jz)


class SensorKind(enum.Enum):
    """Sensor two-level system; the value is the coupling multiplier ``g``.

    A spin-1/2 sensor sees ``H(+/-) = H0 +/- beta/2``; the NV ``|+1>, |-1>`` pair
    sees ``H0 +/- beta``.
    """

    SPIN_HALF = 1
    NV_PLUS_MINUS = 2

    @property
    def g(self):
        return self.value

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return cls(value)
        key = str(value).lower().replace("-", "_")
        aliases = {"spin_half": cls.SPIN_HALF, "nv": cls.NV_PLUS_MINUS, "nv_plus_minus": cls.NV_PLUS_MINUS}
        if key not in aliases:
            raise ValueError(f"unknown sensor kind {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class DipolarCoupling:
    """``D [I_i . I_j - 3 (I_i . r)(r . I_j)]`` between spins ``i`` and ``j``."""

    i: int
    j: int
    strength: float
    unit_vector: tuple

    def operator(self, n_spins):
        r = np.asarray(self.unit_vector, float)
        r = r / np.linalg.norm(r)
        dims = [2] * n_spins
        ii = [embed(op, self.i, dims) for op in _I]
        jj = [embed(op, self.j, dims) for op in _I]
        dot = sum(a @ b for a, b in zip(ii, jj))
        ri = sum(c * a for c, a in zip(r, ii))
        rj = sum(c * b for c, b in zip(r, jj))
        return self.strength * (dot - 3.0 * ri @ rj)


@dataclass(frozen=True)
class IndependentSpins:
    """Spin-1/2 targets with hyperfine vectors ``A_k`` precessing about ``field_direction``.

    ``omega0`` is a scalar Larmor frequency or one per spin. Dipolar couplings
    are ignored unless ``use_dipolar`` is set.
    """

    hyperfine: np.ndarray
    omega0: object
    field_direction: tuple = (0.0, 0.0, 1.0)
    dipolar: tuple = ()
    use_dipolar: bool = False

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.hyperfine, float))
        if a.shape[1] != 3:
            raise ValueError("hyperfine vectors must have three components")
        if len(a) > MAX_INDEPENDENT_SPINS:
            raise MemoryError(f"{len(a)} spins exceed the guard of {MAX_INDEPENDENT_SPINS}")
        w = np.broadcast_to(np.asarray(self.omega0, float), (len(a),)).copy()
        m = np.asarray(self.field_direction, float)
        if not np.isclose(np.linalg.norm(m), 1.0, atol=1e-9):
            raise ValueError("field_direction must be a unit vector")
        object.__setattr__(self, "hyperfine", a)
        object.__setattr__(self, "omega0", w)
        object.__setattr__(self, "field_direction", tuple(m))
        object.__setattr__(self, "dipolar", tuple(self.dipolar))

    @property
    def n_spins(self):
        return len(self.hyperfine)

    @property
    def dim(self):
        return 2**self.n_spins

    @property
    def factorizable(self):
        return not (self.use_dipolar and self.dipolar)

    def transverse_couplings(self):
        """Hyperfine components perpendicular to the field direction."""
        m = np.asarray(self.field_direction)
        par = self.hyperfine @ m
        return np.sqrt(np.maximum(np.sum(self.hyperfine**2, axis=1) - par**2, 0.0))

    def single(self, k):
        return IndependentSpins(self.hyperfine[k : k + 1], self.omega0[k], self.field_direction)

    def operators(self):
        dims = [2] * self.n_spins
        m = np.asarray(self.field_direction)
        h0 = np.zeros((self.dim, self.dim), complex)
        beta = np.zeros_like(h0)
        for k in range(self.n_spins):
            ops = [embed(op, k, dims) for op in _I]
            h0 += self.omega0[k] * sum(c * op for c, op in zip(m, ops))
            beta += sum(c * op for c, op in zip(self.hyperfine[k], ops))
        if self.use_dipolar:
            for d in self.dipolar:
                h0 += d.operator(self.n_spins)
        return h0, beta

    def describe(self):
        return {
            "variant": "independent_spins",
            "n_spins": self.n_spins,
            "hyperfine": self.hyperfine.tolist(),
            "omega0": self.omega0.tolist(),
            "field_direction": list(self.field_direction),
            "dipolar": self.use_dipolar and bool(self.dipolar),
        }


@dataclass(frozen=True)
class SpinJLadder:
    """Spin-J target, ``H = lambda S_z J_x + sum_m eps_m |m><m|``.

    ``level_energies`` are listed for ``m = J, J-1, ..., -J`` (the order of
    the ``J_z`` diagonal).
    """

    J: float
    level_energies: tuple
    coupling: float

    def __post_init__(self):
        ops = spin_operators(self.J)
        eps = tuple(float(e) for e in self.level_energies)
        if len(eps) != ops.dim:
            raise ValueError(f"need {ops.dim} level energies for J={self.J}, got {len(eps)}")
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")
        object.__setattr__(self, "level_energies", eps)

    @property
    def dim(self):
        return len(self.level_energies)

    def transition_frequency(self, m):
        """``|eps_{m+1} - eps_m|``."""
        idx = self._index(m)
        return abs(self.level_energies[idx - 1] - self.level_energies[idx])

    def transition_coupling(self, m):
        """``lambda_m = lambda sqrt((J - m)(J + m + 1)) / 2``."""
        self._index(m)
        return self.coupling * np.sqrt((self.J - m) * (self.J + m + 1)) / 2.0

    def _index(self, m):
        idx = self.J - m
        if abs(idx - round(idx)) > 1e-9 or not (1 <= round(idx) <= 2 * self.J):
            raise ValueError(f"no transition |{m}> <-> |{m + 1}> for J={self.J}")
        return int(round(idx))

    def operators(self):
        ops = spin_operators(self.J)
        return np.diag(self.level_energies).astype(complex), self.coupling * ops.jx

    def describe(self):
        return {"variant": "spin_j_ladder", "J": self.J, "level_energies": list(self.level_energies), "coupling": self.coupling}


@dataclass(frozen=True)
class CoupledPair:
    """Two spin-1/2 targets, ``H = lambda S_z (I_A^x + I_B^x) + w_A I_A^z + w_B I_B^z + 2 mu I_A^z I_B^z``."""

    omega_a: float
    omega_b: float
    coupling: float
    mu: float = 0.0

    def __post_init__(self):
        if self.coupling < 0 or self.mu < 0:
            raise ValueError("coupling magnitudes must be non-negative")

    dim = 4

    def operators(self):
        dims = [2, 2]
        xa, za = embed(_I[0], 0, dims), embed(_I[2], 0, dims)
        xb, zb = embed(_I[0], 1, dims), embed(_I[2], 1, dims)
        h0 = self.omega_a * za + self.omega_b * zb + 2.0 * self.mu * za @ zb
        return h0, self.coupling * (xa + xb)

    def describe(self):
        return {"variant": "coupled_pair", "omega_a": self.omega_a, "omega_b": self.omega_b, "coupling": self.coupling, "mu": self.mu}


@dataclass(frozen=True)
class GenericCluster:
    """Cluster with diagonal free energies ``E_n`` and Hermitian noise matrix ``beta``."""

    energies: tuple
    noise: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = tuple(float(x) for x in self.energies)
        beta = check_hermitian(self.noise)
        if beta.shape[0] != len(e):
            raise ValueError("noise matrix dimension must match the number of energies")
        if len(e) > MAX_DIM:
            raise MemoryError("cluster dimension exceeds guard")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "noise", beta)

    @property
    def dim(self):
        return len(self.energies)

    def operators(self):
        return np.diag(self.energies).astype(complex), self.noise

    def describe(self):
        return {"variant": "generic_cluster", "dim": self.dim, "energies": list(self.energies)}
