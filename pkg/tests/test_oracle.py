"""Brute-force reference solvers and closed-form cross checks."""

import numpy as np
import pytest

from pseudomodes import (
    CorrelationSpec,
    DiscretizedBath,
    InvalidModelError,
    LorentzianSum,
    LorentzianTerm,
    auxiliary_correlation_check,
    build_discrete_modes,
    correlation,
    damped_rabi_amplitude,
    discretized_bath_solve,
    lorentzian_to_poles,
    single_excitation_solve,
)

SINGLE = lorentzian_to_poles(LorentzianSum((
    LorentzianTerm(weight=1.0, center=1.0, width=4.0),
)))
BAND_GAP = lorentzian_to_poles(LorentzianSum((
    LorentzianTerm(weight=2.0, center=1.0, width=2.0),
    LorentzianTerm(weight=-1.0, center=1.0, width=1.0),
)))


def eig_propagated_amplitude(strength, damping, t):
    """Independent 2x2 matrix-exponential oracle for the resonant amplitude."""
    m = np.array([[0.0, -1j * strength], [-1j * strength, -damping]])
    vals, vecs = np.linalg.eig(m)
    c0 = np.linalg.solve(vecs, np.array([1.0, 0.0], dtype=complex))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([(vecs @ (np.exp(vals * ti) * c0))[0] for ti in t])


def test_damped_rabi_matches_matrix_exponential():
    t = np.linspace(0.0, 3.0, 31)
    for strength, damping in ((1.0, 4.0), (1.0, 0.5), (2.0, 2.0)):
        expected = eig_propagated_amplitude(strength, damping, t)
        np.testing.assert_allclose(
            damped_rabi_amplitude(strength, damping, t), expected, atol=1e-12
        )


def test_damped_rabi_underdamped_is_cosine_at_zero_damping():
    t = np.linspace(0.0, 3.0, 31)
    np.testing.assert_allclose(
        damped_rabi_amplitude(1.0, 0.0, t), np.cos(t), atol=1e-12
    )


def test_damped_rabi_critical_damping_limit():
    # damping exactly 2*strength: the degenerate branch must stay finite
    t = np.linspace(0.0, 3.0, 31)
    expected = eig_propagated_amplitude(1.0, 2.0 - 1e-9, t)
    np.testing.assert_allclose(damped_rabi_amplitude(1.0, 2.0, t), expected, atol=1e-6)


def test_single_excitation_decoupled_system_stays_excited():
    modes = build_discrete_modes(SINGLE, (0.0,))
    t = np.linspace(0.0, 2.0, 21)
    sol = single_excitation_solve(modes, 0.0, 1.0, t)
    np.testing.assert_allclose(sol.excited, np.ones_like(t), atol=1e-12)


def test_single_excitation_matches_closed_form():
    modes = build_discrete_modes(SINGLE, (1.0,))
    t = np.linspace(0.0, 2.5, 26)
    sol = single_excitation_solve(modes, 1.0, 1.0, t)
    np.testing.assert_allclose(
        sol.excited, damped_rabi_amplitude(1.0, 4.0, t), atol=1e-8
    )


def test_single_excitation_norm_decays_monotonically():
    modes = build_discrete_modes(SINGLE, (1.0,))
    t = np.linspace(0.0, 2.5, 26)
    sol = single_excitation_solve(modes, 1.0, 1.0, t)
    norms = sol.norms()
    assert norms[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(norms) <= 1e-12)


def test_single_excitation_checks_strength_consistency():
    modes = build_discrete_modes(SINGLE, (1.0,))
    with pytest.raises(InvalidModelError):
        single_excitation_solve(modes, 2.0, 1.0, np.linspace(0.0, 1.0, 11))


def test_band_gap_population_traps_at_four_ninths():
    # At the gap the emitter keeps |<dark|e,0,0>|^2 = (2/3)^2 of its
    # population: the coupling matrix is complex symmetric with null vector
    # (1, -i/sqrt(2), 1), so the projection of the initial state is 2/3.
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    t = np.linspace(0.0, 50.0, 251)
    sol = single_excitation_solve(modes, 1.0, 1.0, t)
    plateau = np.abs(sol.excited[-1]) ** 2
    assert plateau == pytest.approx(4.0 / 9.0, abs=1e-10)
    # and it is genuinely flat at the end
    tail = np.abs(sol.excited[-20:]) ** 2
    assert tail.max() - tail.min() < 1e-10


def test_discretized_bath_single_degenerate_mode_rabi():
    bath = DiscretizedBath(
        frequencies=np.array([1.0]),
        couplings=np.array([1.0]),
        strength=1.0,
        window=(0.0, 2.0),
    )
    t = np.linspace(0.0, 3.0, 31)
    sol = discretized_bath_solve(bath, 1.0, 1.0, t)
    np.testing.assert_allclose(sol.excited, np.cos(t), atol=1e-10)


def test_discretized_bath_coupling_weights_match_density():
    bath = DiscretizedBath.from_pole_set(SINGLE, 1.0, 600)
    assert bath.n_oscillators == 600
    total = float(np.sum(bath.couplings**2))
    window_integral = bath.density_integral / (2.0 * np.pi)
    assert abs(total - window_integral) < 0.01


def test_discretized_bath_norm_conserved():
    bath = DiscretizedBath.from_pole_set(SINGLE, 1.0, 300)
    t = np.linspace(0.0, 1.25, 26)
    sol = discretized_bath_solve(bath, 1.0, 1.0, t)
    np.testing.assert_allclose(sol.norms(), np.ones_like(t), atol=1e-10)


def test_discretized_bath_matches_oracle_at_explicit_window():
    bath = DiscretizedBath.from_pole_set(SINGLE, 1.0, 300, window=(1.0 - 80.0, 1.0 + 80.0))
    t = np.linspace(0.0, 1.25, 51)
    ref = single_excitation_solve(build_discrete_modes(SINGLE, (1.0,)), 1.0, 1.0, t)
    sol = discretized_bath_solve(bath, 1.0, 1.0, t)
    assert np.abs(sol.excited - ref.excited).max() < 1e-2


def test_discretized_bath_error_decreases_with_refinement():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    t = np.linspace(0.0, 5.0, 51)
    ref = single_excitation_solve(modes, 1.0, 1.0, t)
    errors = []
    for n in (150, 300, 600):
        bath = DiscretizedBath.from_pole_set(BAND_GAP, 1.0, n)
        sol = discretized_bath_solve(bath, 1.0, 1.0, t)
        errors.append(np.abs(sol.excited - ref.excited).max())
    assert errors[0] > errors[1] > errors[2]


def test_discretized_bath_recurrence_guard():
    bath = DiscretizedBath.from_pole_set(SINGLE, 1.0, 150)
    horizon = 2.0 * np.pi / bath.spacing
    with pytest.raises(InvalidModelError):
        discretized_bath_solve(bath, 1.0, 1.0, np.linspace(0.0, horizon, 11))


def test_discretized_bath_size_cap():
    bath = DiscretizedBath.from_pole_set(SINGLE, 1.0, 4001)
    with pytest.raises(InvalidModelError):
        discretized_bath_solve(bath, 1.0, 1.0, np.linspace(0.0, 1.0, 11))


def test_discretized_bath_rejects_indefinite_density():
    broken = lorentzian_to_poles(LorentzianSum((
        LorentzianTerm(weight=2.0, center=0.0, width=3.0),
        LorentzianTerm(weight=-1.0, center=0.0, width=1.0),
    )))
    with pytest.raises(InvalidModelError):
        DiscretizedBath.from_pole_set(broken, 1.0, 300)


def test_auxiliary_correlation_trivial_cases():
    modes = build_discrete_modes(SINGLE, (1.5,))
    analytic, recon = auxiliary_correlation_check(modes, 2.0, 2.0)
    assert analytic == pytest.approx(1.5 * 1.5, abs=1e-12)
    assert recon == pytest.approx(1.5 * 1.5, abs=1e-12)
    # single Lorentzian at lag 1: strength^2 * exp(-i xi - lambda)
    modes1 = build_discrete_modes(SINGLE, (1.0,))
    analytic, recon = auxiliary_correlation_check(modes1, 3.0, 2.0)
    expected = np.exp(-1j * 1.0 - 4.0)
    assert analytic == pytest.approx(expected, abs=1e-12)
    assert recon == pytest.approx(expected, abs=1e-12)


def test_auxiliary_correlation_rejects_reversed_times():
    modes = build_discrete_modes(SINGLE, (1.0,))
    with pytest.raises(ValueError):
        auxiliary_correlation_check(modes, 1.0, 2.0)


def test_auxiliary_correlation_depends_only_on_lag():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    rng = np.random.default_rng(9)
    for _ in range(10):
        s = rng.uniform(0.0, 4.0)
        tau = rng.uniform(0.0, 4.0)
        shift = rng.uniform(0.0, 3.0)
        a1, r1 = auxiliary_correlation_check(modes, s + tau, s)
        a2, r2 = auxiliary_correlation_check(modes, s + tau + shift, s + shift)
        assert abs(a1 - a2) < 1e-12
        assert abs(r1 - r2) < 1e-12


def test_auxiliary_correlation_matches_pole_sum():
    spec = CorrelationSpec(BAND_GAP, (1.0,))
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    rng = np.random.default_rng(10)
    for _ in range(25):
        s = rng.uniform(0.0, 3.0)
        tau = rng.uniform(0.0, 3.0)
        analytic, recon = auxiliary_correlation_check(modes, s + tau, s)
        ref = correlation(spec, 0, 0, tau)
        assert abs(analytic - ref) <= 1e-12 * abs(ref)
        assert abs(recon - ref) <= 1e-12 * max(abs(ref), 1e-3)
