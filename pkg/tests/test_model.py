import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindbladlab.bathcorr import BathSpec, b_op, bath_hamiltonian
from lindbladlab.fock import FockSpace, destroy, number_op
from lindbladlab.linops import SIGMA_MINUS, SIGMA_Z, herm_error, identity, kron, projector
from lindbladlab.model import (
    SystemSpec,
    build_interaction,
    build_total,
    check_first_order_vanishes,
    composite_from_bath,
    excitation_number,
    from_interaction_picture,
    to_interaction_picture,
)

from conftest import rand_complex, rand_hermitian, rand_mixed


def test_interaction_zero_coupling():
    assert np.array_equal(build_interaction(np.zeros((2, 2)), destroy(1)), np.zeros((4, 4)))


def test_interaction_sigma_z_single_mode():
    h = build_interaction(SIGMA_Z, destroy(1))
    # basis |e0>, |e1>, |g0>, |g1>
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = 1.0
    expected[2, 3] = expected[3, 2] = -1.0
    assert np.array_equal(h, expected)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_interaction_is_hermitian(seed):
    rng = np.random.default_rng(seed)
    h = build_interaction(rand_complex(rng, (3, 3)), rand_complex(rng, (2, 2)), hbar=1.7)
    assert herm_error(h) < 1e-15


def test_build_total_limits(rng):
    h_s, h_b = rand_hermitian(rng, 2), rand_hermitian(rng, 3)
    h_sb = build_interaction(rand_complex(rng, (2, 2)), rand_complex(rng, (3, 3)))
    decoupled = build_total(SystemSpec(h_s, SIGMA_MINUS, alpha=0.0), h_b, h_sb)
    assert np.allclose(decoupled.h_total, kron(h_s, identity(3)) + kron(identity(2), h_b))
    bare = build_total(SystemSpec(np.zeros((2, 2)), SIGMA_MINUS, alpha=0.3),
                       np.zeros((3, 3)), h_sb)
    assert np.allclose(bare.h_total, 0.3 * h_sb)
    with pytest.raises(ValueError):
        build_total(SystemSpec(h_s, SIGMA_MINUS), h_b, np.zeros((4, 4)))


def test_jaynes_cummings_block():
    w0, w1, g = 1.3, 0.7, 0.25
    bath = BathSpec((w1,), (g,), 1)
    model = composite_from_bath(SystemSpec(0.5 * w0 * SIGMA_Z, SIGMA_MINUS), bath)
    # basis |e0>, |e1>, |g0>, |g1>; S x B^dag + h.c. swaps |e0> and |g1>
    expected = np.diag([w0 / 2, w0 / 2 + w1, -w0 / 2, -w0 / 2 + w1]).astype(complex)
    expected[0, 3] = expected[3, 0] = g
    assert np.allclose(model.h_total, expected)
    assert np.allclose(model.h0, np.diag(np.diag(expected)))


def test_interaction_picture_examples(rng):
    o = rand_complex(rng, (2, 2))
    h0 = 0.5 * 1.9 * SIGMA_Z
    assert np.allclose(to_interaction_picture(o, h0, 0.0), o)
    for t in (0.3, 2.0, 7.1):
        assert np.allclose(to_interaction_picture(SIGMA_MINUS, h0, t),
                           np.exp(-1.9j * t) * SIGMA_MINUS)
    s_op = np.diag([0.4, -1.1]).astype(complex)
    assert np.allclose(to_interaction_picture(s_op, np.diag([2.0, 5.0]), 3.3), s_op)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-10, 10), st.floats(0.1, 3.0))
def test_interaction_picture_round_trip(seed, t, hbar):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    o, h0 = rand_mixed(rng, d), rand_hermitian(rng, d)
    x = to_interaction_picture(o, h0, t, hbar)
    assert np.allclose(from_interaction_picture(x, h0, t, hbar), o, atol=1e-12)
    assert np.isclose(np.trace(x), np.trace(o))
    assert np.allclose(np.linalg.eigvalsh(x), np.linalg.eigvalsh(o), atol=1e-12)


def test_first_order_vanishes_examples(rng):
    bath = BathSpec((0.3, -1.0), tuple(rand_complex(rng, 2)), 2)
    assert check_first_order_vanishes(b_op(bath), bath.space.vacuum_dm()) == 0.0
    plus = projector(np.array([1, 1]) / np.sqrt(2))
    assert np.isclose(check_first_order_vanishes(destroy(1), plus), 0.5)
    assert check_first_order_vanishes(np.zeros((2, 2)), plus) == 0.0


def test_system_spec_validation():
    with pytest.raises(ValueError):
        SystemSpec(np.array([[0, 1], [0, 0]]), SIGMA_MINUS)
    with pytest.raises(ValueError):
        SystemSpec(np.eye(2), np.eye(3))
    spec = SystemSpec(SIGMA_Z, SIGMA_MINUS)
    assert spec.commutation_defect() == 2.0
    with pytest.raises(ValueError):
        spec.require_commuting()
    SystemSpec(SIGMA_Z, SIGMA_Z).require_commuting()


def test_excitation_number_is_conserved_by_rotating_coupling():
    bath = BathSpec((0.4, 1.1), (0.3, 0.2 - 0.1j), 1)
    model = composite_from_bath(SystemSpec(0.5 * SIGMA_Z, SIGMA_MINUS), bath)
    n_total = excitation_number(projector([1, 0]), number_op(bath.space))
    assert np.allclose(n_total, kron(projector([1, 0]), identity(4))
                       + kron(identity(2), number_op(bath.space)))
    assert np.allclose(model.h_total @ n_total, n_total @ model.h_total)
    assert np.allclose(bath_hamiltonian(bath), np.diag(np.diag(bath_hamiltonian(bath))))


def test_fock_space_dims():
    assert FockSpace(3, 2).dim == 27
    assert FockSpace(2, 1).single_excitation_index(1) == 2
    assert FockSpace(2, 1).single_excitation_index(2) == 1
