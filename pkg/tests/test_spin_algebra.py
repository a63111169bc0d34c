import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from spinscope.spin_algebra import (
    HermitianPropagator,
    check_hermitian,
    embed,
    expm_hermitian,
    is_hermitian,
    is_unitary,
    kron_chain,
    normalized_trace,
    overlap_trace,
    spin_operators,
)

from .conftest import random_hermitian

half_integers = st.integers(min_value=1, max_value=8).map(lambda k: k / 2)


@given(half_integers)
def test_angular_momentum_algebra(j):
    s = spin_operators(j)
    comm = s.jx @ s.jy - s.jy @ s.jx
    assert np.allclose(comm, 1j * s.jz)
    casimir = s.jx @ s.jx + s.jy @ s.jy + s.jz @ s.jz
    assert np.allclose(casimir, j * (j + 1) * s.identity)
    assert np.allclose(s.jp, s.jx + 1j * s.jy)
    # descending-m basis
    assert np.allclose(np.diag(s.jz), np.arange(j, -j - 1, -1))


@pytest.mark.parametrize("bad", [-0.5, 0.3, 1.25])
def test_spin_operators_rejects_non_half_integers(bad):
    with pytest.raises(ValueError):
        spin_operators(bad)


def test_kron_chain_and_embed_agree():
    s = spin_operators(0.5)
    op = embed(s.jx, 1, [2, 2, 2])
    ref = np.kron(np.kron(np.eye(2), s.jx), np.eye(2))
    assert np.allclose(op, ref)
    assert np.allclose(kron_chain([s.jz, s.jz]), np.kron(s.jz, s.jz))
    with pytest.raises(ValueError):
        kron_chain([])


def test_kron_chain_dimension_guard():
    big = np.eye(2**7)
    with pytest.raises(MemoryError):
        kron_chain([big, big])


def test_check_hermitian(rng):
    h = random_hermitian(rng, 4)
    assert is_hermitian(h)
    assert np.allclose(check_hermitian(h), h)
    with pytest.raises(ArithmeticError):
        check_hermitian(h + 1e-3j * np.eye(4))


@given(st.integers(min_value=0, max_value=2**31 - 1), st.integers(min_value=1, max_value=6), st.floats(0.01, 5.0))
def test_propagator_matches_scipy_and_is_unitary(seed, d, t):
    h = random_hermitian(np.random.default_rng(seed), d)
    u = expm_hermitian(h, t)
    assert is_unitary(u)
    assert np.allclose(u, scipy.linalg.expm(-1j * h * t), atol=1e-10)


def test_propagator_group_property(rng):
    h = random_hermitian(rng, 5)
    prop = HermitianPropagator(h)
    assert np.allclose(prop(0.3) @ prop(0.9), prop(1.2))
    assert np.allclose(prop(0.0), np.eye(5))


def test_traces(rng):
    h = random_hermitian(rng, 3)
    assert np.isclose(normalized_trace(np.eye(3)), 1.0)
    u = expm_hermitian(h, 0.7)
    assert np.isclose(overlap_trace(u, u), 1.0)
    assert np.isclose(overlap_trace(np.eye(3), u), np.trace(u) / 3)
