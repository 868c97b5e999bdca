"""Fock-space primitives: defining matrix elements, coherent states, tensors."""

import numpy as np
import pytest

from twophoton import qcore
from twophoton.qcore import (
    OperatorMatrix,
    TruncationError,
    annihilation,
    coherent,
    creation,
    fock,
    identity,
    mode_op,
    number,
    tensor,
)


def test_annihilation_dim2_matrix():
    a = annihilation(2).to_dense()
    assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_on_fock_state():
    a = annihilation(5)
    psi = fock(5, 3)
    out = a.data @ psi.data
    expected = np.sqrt(3) * fock(5, 2).data
    assert np.allclose(out, expected)


def test_annihilation_rejects_small_dim():
    with pytest.raises(ValueError):
        annihilation(1)


@pytest.mark.parametrize("dim", [2, 5, 17])
def test_commutator_truncation_artifact(dim):
    a = annihilation(dim)
    comm = (a @ a.dag() - a.dag() @ a).to_dense()
    expected = np.eye(dim, dtype=complex)
    expected[-1, -1] = 1 - dim
    assert np.allclose(comm, expected)


@pytest.mark.parametrize("dim", [2, 8, 31])
def test_number_operator_diagonal(dim):
    n = (annihilation(dim).dag() @ annihilation(dim)).to_dense()
    assert np.allclose(n, np.diag(np.arange(dim)))


def test_coherent_vacuum():
    psi = coherent(12, 0.0)
    assert np.allclose(psi.data, fock(12, 0).data)


def test_coherent_mean_photon_number():
    psi = coherent(40, 2.0)
    nbar = psi.expect(number(40)).real
    assert abs(nbar - 4.0) < 1e-6


def test_coherent_overlap_oracle():
    # independent oracle: direct inner product of the two truncated states
    dim = 40
    plus = coherent(dim, 2.0)
    minus = coherent(dim, -2.0)
    ov = abs(plus.overlap(minus)) ** 2
    assert abs(ov - np.exp(-16.0)) < 1e-8


def test_coherent_truncation_guard():
    with pytest.raises(TruncationError):
        coherent(10, 2.0)  # |alpha|^2 = 4 > 10/4


def test_coherent_displacement_identity():
    rng = np.random.default_rng(7)
    for _ in range(10):
        alpha = rng.uniform(0.2, 2.0) * np.exp(2j * np.pi * rng.uniform())
        dim = int(np.ceil(4 * abs(alpha) ** 2)) + 12
        psi = coherent(dim, alpha)
        val = psi.expect(annihilation(dim))
        assert abs(val - alpha) < 1e-6


def test_tensor_identities():
    t = tensor([identity(2), identity(3)])
    assert t.dims == (2, 3)
    assert np.allclose(t.to_dense(), np.eye(6))


def test_tensor_action_on_product_state():
    a2 = annihilation(2)
    op = tensor([a2, identity(2)])
    # |1,0> has index 1*2 + 0 = 2 (memory-first ordering)
    psi = np.zeros(4, dtype=complex)
    psi[2] = 1.0
    out = op.data @ psi
    expected = np.zeros(4, dtype=complex)
    expected[0] = 1.0
    assert np.allclose(out, expected)


def test_tensor_side():
    op = tensor([annihilation(20), identity(6)])
    assert op.dims == (20, 6)
    assert op.data.shape == (120, 120)


def test_tensor_associative():
    ops = [annihilation(2), number(3), identity(2)]
    left = tensor([tensor(ops[:2]), ops[2]])
    right = tensor([ops[0], tensor(ops[1:])])
    assert (left.data != right.data).nnz == 0


def test_mode_op_embedding():
    dims = (3, 4)
    a0 = mode_op(annihilation(3), dims, 0)
    direct = tensor([annihilation(3), identity(4)])
    assert (a0.data != direct.data).nnz == 0


def test_hermitian_flag_verified():
    mat = annihilation(4).data
    with pytest.raises(ValueError):
        OperatorMatrix((4,), mat, hermitian=True)


def test_density_matrix_validation():
    rho = fock(4, 1).to_density()
    assert abs(rho.trace() - 1.0) < 1e-12
    assert rho.min_eig() > -1e-12
    bad = np.eye(4, dtype=complex)  # trace 4
    with pytest.raises(ValueError):
        qcore.DensityMatrix((4,), bad)


def test_state_normalization():
    psi = qcore.StateVector((3,), np.array([3.0, 4.0, 0.0]))
    assert abs(psi.norm() - 1.0) < 1e-10
    assert abs(abs(psi.data[1]) - 0.8) < 1e-12
