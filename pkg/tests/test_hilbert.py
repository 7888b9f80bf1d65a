"""Tensor-space layout, embeddings, partial traces, and eigenoperators."""

import numpy as np
import pytest

from pseudomodes import (
    InvalidModelError,
    SpaceLayout,
    SystemSpec,
    basis_state,
    destroy,
    eigenoperator,
    embed,
    embed_system,
    expectation,
    mode_ops,
    partial_trace_modes,
    top_fock_populations,
    vacuum_embedding,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def random_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def loop_partial_trace(rho, layout):
    """Index-by-index partial trace, independent of the einsum under test."""
    dims = layout.dims
    d_s = dims[0]
    out = np.zeros((d_s, d_s), dtype=complex)
    full = rho.reshape(dims + dims)
    mode_ranges = [range(n) for n in dims[1:]]
    import itertools
    for a in range(d_s):
        for b in range(d_s):
            for idx in itertools.product(*mode_ranges):
                out[a, b] += full[(a,) + idx + (b,) + idx]
    return out


def test_destroy_matrix_elements():
    b = destroy(3)
    assert b.shape == (4, 4)
    for n in range(1, 4):
        assert b[n - 1, n] == pytest.approx(np.sqrt(n))
    # canonical commutator holds except in the truncated corner
    comm = b @ b.conj().T - b.conj().T @ b
    np.testing.assert_allclose(np.diag(comm)[:-1], np.ones(3), atol=1e-15)
    assert comm[3, 3] == pytest.approx(-3.0)


def test_layout_dimensions():
    layout = SpaceLayout(2, (2, 3))
    assert layout.dims == (2, 3, 4)
    assert layout.dim == 24
    assert layout.n_modes == 2


def test_layout_validation():
    with pytest.raises(InvalidModelError):
        SpaceLayout(1, (2,))
    with pytest.raises(InvalidModelError):
        SpaceLayout(2, (0,))


def test_embed_factors_commute():
    layout = SpaceLayout(2, (2, 2))
    s = embed(layout, 0, SX)
    b1, _ = mode_ops(layout, 0)
    b2, _ = mode_ops(layout, 1)
    assert np.abs(s @ b1 - b1 @ s).max() < 1e-15
    assert np.abs(b1 @ b2 - b2 @ b1).max() < 1e-15


def test_embed_system_matches_kron():
    layout = SpaceLayout(2, (1, 2))
    expected = np.kron(SX, np.eye(2 * 3))
    np.testing.assert_allclose(embed_system(layout, SX), expected, atol=1e-15)


def test_mode_ops_against_kron():
    layout = SpaceLayout(2, (2, 1))
    b, bdag = mode_ops(layout, 1)
    expected = np.kron(np.eye(2 * 3), destroy(1))
    np.testing.assert_allclose(b, expected, atol=1e-15)
    np.testing.assert_allclose(bdag, expected.conj().T, atol=1e-15)


def test_partial_trace_matches_loop_oracle():
    rng = np.random.default_rng(5)
    layout = SpaceLayout(3, (1, 2))
    rho = random_density(rng, layout.dim)
    np.testing.assert_allclose(
        partial_trace_modes(rho, layout), loop_partial_trace(rho, layout), atol=1e-13
    )


def test_partial_trace_of_product_state():
    layout = SpaceLayout(2, (2,))
    rng = np.random.default_rng(6)
    rho_s = random_density(rng, 2)
    rho = np.kron(rho_s, np.diag([0.2, 0.3, 0.5]).astype(complex))
    np.testing.assert_allclose(partial_trace_modes(rho, layout), rho_s, atol=1e-14)


def test_vacuum_embedding_and_basis_state():
    layout = SpaceLayout(2, (2, 2))
    rho_s = np.diag([0.25, 0.75]).astype(complex)
    rho = vacuum_embedding(layout, rho_s)
    assert rho.shape == (18, 18)
    assert np.trace(rho) == pytest.approx(1.0)
    np.testing.assert_allclose(partial_trace_modes(rho, layout), rho_s, atol=1e-15)
    psi = basis_state(layout, 1)
    assert psi[np.flatnonzero(psi)[0]] == 1.0
    np.testing.assert_allclose(
        np.outer(psi, psi.conj()), vacuum_embedding(layout, np.diag([0.0, 1.0])), atol=1e-15
    )


def test_basis_state_fock_indices():
    layout = SpaceLayout(2, (2, 2))
    psi = basis_state(layout, 0, fock=(1, 2))
    rho = np.outer(psi, psi.conj())
    diag = np.real(np.diag(rho)).reshape(layout.dims)
    assert diag[0, 1, 2] == pytest.approx(1.0)


def test_top_fock_populations():
    layout = SpaceLayout(2, (1, 2))
    psi = basis_state(layout, 0, fock=(1, 0))
    rho = np.outer(psi, psi.conj())
    np.testing.assert_allclose(top_fock_populations(rho, layout), [1.0, 0.0], atol=1e-15)


def test_expectation_equals_trace():
    rng = np.random.default_rng(7)
    rho = random_density(rng, 4)
    op = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert expectation(rho, op) == pytest.approx(complex(np.trace(op @ rho)), abs=1e-13)


def test_eigenoperator_two_level():
    system = SystemSpec(
        energies=(0.0, 1.0), observables=(SX,), frequencies=(1.0,), strengths=(1.0,)
    )
    c = eigenoperator(system, 0)
    expected = np.zeros((2, 2), dtype=complex)
    expected[0, 1] = 1.0
    np.testing.assert_allclose(c, expected, atol=1e-15)


def test_eigenoperator_collects_degenerate_gaps():
    # equally spaced ladder: both n -> n+1 transitions share the gap
    obs = np.ones((3, 3), dtype=complex)
    system = SystemSpec(
        energies=(0.0, 1.0, 2.0), observables=(obs,), frequencies=(1.0,), strengths=(1.0,)
    )
    c = eigenoperator(system, 0)
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1] = 1.0
    expected[1, 2] = 1.0
    np.testing.assert_allclose(c, expected, atol=1e-15)


def test_eigenoperator_requires_weight_on_gap():
    system = SystemSpec(
        energies=(0.0, 1.0),
        observables=(np.diag([0.0, 1.0]).astype(complex),),
        frequencies=(1.0,),
        strengths=(1.0,),
    )
    with pytest.raises(InvalidModelError):
        eigenoperator(system, 0)


def test_system_spec_validation():
    with pytest.raises(InvalidModelError):
        # frequency matches no level gap
        SystemSpec(energies=(0.0, 1.0), observables=(SX,), frequencies=(0.5,), strengths=(1.0,))
    with pytest.raises(InvalidModelError):
        # coupling operator must be Hermitian
        bad = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        SystemSpec(energies=(0.0, 1.0), observables=(bad,), frequencies=(1.0,), strengths=(1.0,))
    with pytest.raises(InvalidModelError):
        SystemSpec(energies=(0.0, 1.0), observables=(SX,), frequencies=(1.0,), strengths=(-1.0,))
    with pytest.raises(InvalidModelError):
        SystemSpec(energies=(0.0,), observables=(), frequencies=(), strengths=())


def test_system_spec_bare_hamiltonian():
    system = SystemSpec(
        energies=(0.0, 1.5), observables=(SX,), frequencies=(1.5,), strengths=(1.0,)
    )
    np.testing.assert_allclose(system.bare_hamiltonian, np.diag([0.0, 1.5]), atol=1e-15)
