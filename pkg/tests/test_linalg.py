import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcpower.linalg import (
    SX,
    SY,
    SZ,
    DimensionError,
    NotHermitianError,
    commutator,
    hermitian_eig,
    kron,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    pauli_string,
    permute_subsystems,
    random_unitary,
)


def _herm(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    h = _herm(rng, n)
    w, v = hermitian_eig(h)
    wl = np.linalg.eigvalsh(h)
    assert np.allclose(w, wl, atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)


def test_jacobi_degenerate_spectrum():
    u = random_unitary(4, np.random.default_rng(3))
    h = u @ np.diag([1.0, 1.0, 2.0, 2.0]) @ u.conj().T
    w, v = hermitian_eig(h)
    assert np.allclose(w, [1, 1, 2, 2], atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitianError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_partial_trace_of_product(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (_herm(rng, d) for d in (2, 3, 2))
    m = kron(a, b, c)
    assert np.allclose(partial_trace(m, [2, 3, 2], [1]), a.trace() * c.trace() * b, atol=1e-10)
    assert np.allclose(partial_trace(m, [2, 3, 2], [0, 2]), b.trace() * np.kron(a, c), atol=1e-10)


def test_permute_subsystems_swaps_factors():
    rng = np.random.default_rng(1)
    a, b = _herm(rng, 2), _herm(rng, 3)
    assert np.allclose(permute_subsystems(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a))


def test_pauli_algebra():
    assert np.allclose(commutator(SX, SY), 2j * SZ)
    assert np.allclose(pauli_string([1, 3]), np.kron(SX, SZ))
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))


def test_matrix_json_round_trip():
    m = np.arange(6).reshape(2, 3) + 1j * np.ones((2, 3))
    back = matrix_from_json(matrix_to_json(m))
    assert np.array_equal(back, m)


def test_random_unitary_is_unitary():
    u = random_unitary(5, np.random.default_rng(0))
    assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)
