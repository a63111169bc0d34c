"""Dense complex linear algebra for small spin systems."""

from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_DIM = 2**12
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class SpinOperatorSet:
    """Angular momentum matrices for spin ``j`` in the basis ``|j>, |j-1>, ..., |-j>``."""

    j: float
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def dim(self):
        return self.jz.shape[0]

    @property
    def jp(self):
        return self.jx + 1j * self.jy

    @property
    def jm(self):
        return self.jx - 1j * self.jy

    @property
    def identity(self):
        return np.eye(self.dim, dtype=complex)


def spin_operators(j):
    """Return :class:`SpinOperatorSet` for spin quantum number ``j``.

    Raises
    ------
    ValueError
        If ``2j`` is not a non-negative integer.
    """
    two_j = 2 * float(j)
    if two_j < 0 or abs(two_j - round(two_j)) > 1e-12:
        raise ValueError(f"spin quantum number must be a non-negative half-integer, got {j!r}")
    two_j = int(round(two_j))
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    # <m+1| J+ |m> = sqrt(j(j+1) - m(m+1)), lives on the superdiagonal for descending m
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    jz = np.diag(m).astype(complex)
    return SpinOperatorSet(j, jx, jy, jz)


def kron_chain(ops):
    """Kronecker product of a non-empty sequence of matrices, left to right."""
    ops = list(ops)
    if not ops:
        raise ValueError("kron_chain needs at least one operator")
    dim = int(np.prod([np.shape(op)[0] for op in ops]))
    if dim > MAX_DIM:
        raise MemoryError(f"tensor product dimension {dim} exceeds guard {MAX_DIM}")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def embed(op, index, dims):
    """Place ``op`` at tensor slot ``index`` of a product space with local ``dims``."""
    return kron_chain(op if k == index else np.eye(d) for k, d in enumerate(dims))


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) <= tol


def is_unitary(u, tol=1e-9):
    u = np.asarray(u)
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def check_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if h.shape[0] > MAX_DIM:
        raise MemoryError(f"matrix dimension {h.shape[0]} exceeds guard {MAX_DIM}")
    dev = np.max(np.abs(h - h.conj().T), initial=0.0)
    if dev > tol:
        raise ArithmeticError(f"matrix is not Hermitian (max deviation {dev:.3e} > {tol:.1e})")
    return 0.5 * (h + h.conj().T)


class HermitianPropagator:
    """Cached eigendecomposition of ``h`` for evaluating ``exp(-i h t)`` at many ``t``.

    Using the same eigenbasis for every duration keeps the group property
    ``U(t1) U(t2) = U(t1 + t2)`` to rounding error.
    """

    def __init__(self, h):
        self.h = check_hermitian(h)
        self.energies, self.vectors = np.linalg.eigh(self.h)

    def __call__(self, t):
        phases = np.exp(-1j * self.energies * t)
        return (self.vectors * phases) @ self.vectors.conj().T


def expm_hermitian(h, t=1.0):
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    return HermitianPropagator(h)(t)


def normalized_trace(a):
    a = np.asarray(a)
    return np.trace(a) / a.shape[0]


def overlap_trace(u_minus, u_plus):
    """``Tr[u_minus^dagger u_plus] / d`` without forming the product."""
    return np.vdot(u_minus, u_plus) / u_plus.shape[0]
