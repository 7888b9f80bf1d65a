"""Generator construction, invariants, and master-equation integration."""

import numpy as np
import pytest

from pseudomodes import (
    ClassificationError,
    GeneratorSpec,
    InvalidModelError,
    LorentzianSum,
    LorentzianTerm,
    SpaceLayout,
    SystemSpec,
    TruncationGuardError,
    build_discrete_modes,
    build_generator,
    build_lindblad_direct,
    build_lindblad_regularized,
    build_pathological,
    damped_rabi_amplitude,
    equivalence_check,
    evolve,
    free_hamiltonian_diagonal,
    lorentzian_to_poles,
    partial_trace_modes,
    rotate_frame,
    two_mode_regularize,
    vacuum_embedding,
)

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
EE = np.diag([0.0, 1.0]).astype(complex)

SINGLE = lorentzian_to_poles(LorentzianSum((
    LorentzianTerm(weight=1.0, center=1.0, width=4.0),
)))
BAND_GAP = lorentzian_to_poles(LorentzianSum((
    LorentzianTerm(weight=2.0, center=1.0, width=2.0),
    LorentzianTerm(weight=-1.0, center=1.0, width=1.0),
)))

TLS = SystemSpec(energies=(0.0, 1.0), observables=(SX,), frequencies=(1.0,), strengths=(1.0,))


def tls_direct():
    modes = build_discrete_modes(SINGLE, (1.0,))
    layout = SpaceLayout(2, (2,))
    return build_lindblad_direct(TLS, modes, layout), layout


def band_gap_generators():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    reg = two_mode_regularize(modes)
    layout = SpaceLayout(2, (2, 2))
    return (
        build_pathological(TLS, modes, layout),
        build_lindblad_regularized(TLS, reg, layout),
        layout,
    )


def random_hermitian_density(rng, dim):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def all_three_generators():
    gen_d, _ = tls_direct()
    gen_p, gen_r, _ = band_gap_generators()
    return (gen_d, gen_p, gen_r)


def test_trace_conserved_per_application_all_kinds():
    rng = np.random.default_rng(2)
    for gen in all_three_generators():
        for _ in range(5):
            rho = random_hermitian_density(rng, gen.dim)
            assert abs(np.trace(gen.apply(0.0, rho))) < 1e-12


def test_direct_and_general_coupling_agree_for_real_couplings():
    modes = build_discrete_modes(SINGLE, (1.0,))
    layout = SpaceLayout(2, (2,))
    gen_d = build_lindblad_direct(TLS, modes, layout)
    gen_p = build_pathological(TLS, modes, layout)
    np.testing.assert_allclose(gen_d.drift(), gen_p.drift(), atol=1e-12)
    rng = np.random.default_rng(4)
    rho = random_hermitian_density(rng, layout.dim)
    np.testing.assert_allclose(gen_d.apply(0.0, rho), gen_p.apply(0.0, rho), atol=1e-12)


def test_direct_builder_refuses_complex_couplings():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    with pytest.raises(ClassificationError):
        build_lindblad_direct(TLS, modes, SpaceLayout(2, (2, 2)))


def test_tls_population_matches_closed_form():
    gen, layout = tls_direct()
    t = np.linspace(0.0, 2.5, 26)
    res = evolve(gen, vacuum_embedding(layout, EE), t, observables={"ee": EE})
    expected = np.abs(damped_rabi_amplitude(1.0, 4.0, t)) ** 2
    np.testing.assert_allclose(res.observables["ee"].real, expected, atol=1e-8)
    assert res.observables["ee"].imag == pytest.approx(np.zeros_like(t), abs=1e-12)


def test_snapshot_invariants_along_lindblad_evolutions():
    gen_d, _ = tls_direct()
    gen_p, gen_r, layout = band_gap_generators()
    for gen in (gen_d, gen_r):
        lay = gen.layout
        t = np.linspace(0.0, 4.0, 21)
        res = evolve(gen, vacuum_embedding(lay, EE), t)
        for rho in res.states:
            assert abs(np.trace(rho) - 1.0) < 1e-10
            assert np.abs(rho - rho.conj().T).max() < 1e-10
            assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_uncorrected_generator_runs_through_non_hermitian_states():
    gen_p, gen_r, layout = band_gap_generators()
    t = np.linspace(0.0, 5.0, 11)
    res = evolve(gen_p, vacuum_embedding(layout, EE), t)
    non_herm = max(np.abs(r - r.conj().T).max() for r in res.states)
    assert non_herm > 0.5  # the full state is far from Hermitian...
    for i, rho in enumerate(res.states):
        reduced = partial_trace_modes(rho, layout)
        assert np.abs(reduced - reduced.conj().T).max() < 1e-10  # ...the system is not
        np.testing.assert_allclose(reduced, res.system_states[i], atol=1e-12)


def test_uncorrected_and_rotated_generators_share_reduced_dynamics():
    gen_p, gen_r, layout = band_gap_generators()
    t = np.linspace(0.0, 10.0, 41)
    dev = equivalence_check(gen_p, gen_r, EE, t)
    assert dev < 1e-8


def test_frame_equivalence_all_kinds():
    # evolve in the interaction frame, rotate back, compare snapshots
    detuned = lorentzian_to_poles(LorentzianSum((
        LorentzianTerm(weight=2.0, center=0.4, width=2.0),
        LorentzianTerm(weight=-1.0, center=0.4, width=1.0),
    )))
    modes = build_discrete_modes(detuned, (1.0,))
    reg = two_mode_regularize(modes)
    layout = SpaceLayout(2, (2, 2))
    t = np.linspace(0.0, 2.0, 21)
    rho0 = vacuum_embedding(layout, EE)
    cases = [
        ("pathological", modes),
        ("lindblad_regularized", reg),
    ]
    single_modes = build_discrete_modes(SINGLE, (1.0,))
    for kind, mode_set in cases:
        freqs = [m.frequency for m in mode_set.modes]
        gs = build_generator(GeneratorSpec(kind, TLS, mode_set, layout))
        gi = build_generator(GeneratorSpec(kind, TLS, mode_set, layout, frame="interaction"))
        rs = evolve(gs, rho0, t)
        ri = evolve(gi, rho0, t)
        h0 = free_hamiltonian_diagonal(layout, TLS, freqs)
        dev = max(
            np.abs(rotate_frame(ri.states[i], h0, t[i]) - rs.states[i]).max()
            for i in range(len(t))
        )
        assert dev < 1e-9, kind
    lay1 = SpaceLayout(2, (2,))
    gs = build_lindblad_direct(TLS, single_modes, lay1)
    gi = build_lindblad_direct(TLS, single_modes, lay1, frame="interaction")
    rho1 = vacuum_embedding(lay1, EE)
    rs = evolve(gs, rho1, t)
    ri = evolve(gi, rho1, t)
    h0 = free_hamiltonian_diagonal(lay1, TLS, [m.frequency for m in single_modes.modes])
    dev = max(
        np.abs(rotate_frame(ri.states[i], h0, t[i]) - rs.states[i]).max()
        for i in range(len(t))
    )
    assert dev < 1e-9


def test_step_halving_is_converged():
    gen, layout = tls_direct()
    t = np.linspace(0.0, 2.5, 26)
    rho0 = vacuum_embedding(layout, EE)
    full = evolve(gen, rho0, t, observables={"ee": EE}, store_states=False)
    half = evolve(gen, rho0, t, observables={"ee": EE}, store_states=False, step_scale=0.5)
    assert np.abs(full.observables["ee"] - half.observables["ee"]).max() < 1e-8


def test_constant_drive_equals_augmented_hamiltonian():
    modes = build_discrete_modes(SINGLE, (1.0,))
    layout = SpaceLayout(2, (4,))
    eps = 0.3
    driven_sys = SystemSpec(
        energies=(0.0, 1.0), observables=(SX,), frequencies=(1.0,),
        strengths=(1.0,), drive=lambda t: eps * SX,
    )
    gen_driven = build_lindblad_direct(driven_sys, modes, layout)
    assert gen_driven.time_dependent
    gen_plain = build_lindblad_direct(TLS, modes, layout)
    t = np.linspace(0.0, 2.0, 21)
    rho0 = vacuum_embedding(layout, EE)
    res_a = evolve(gen_driven, rho0, t, observables={"ee": EE}, store_states=False)
    # same physics by adding the drive statically to the one-sided operators
    from pseudomodes.dynamics import Generator
    from pseudomodes import embed_system
    gen_b = Generator(
        kind=gen_plain.kind,
        frame=gen_plain.frame,
        layout=layout,
        static_both=gen_plain.static_both + embed_system(layout, eps * SX),
        damping=gen_plain.damping,
        channels=gen_plain.channels,
        system=TLS,
    )
    res_b = evolve(gen_b, rho0, t, observables={"ee": EE}, store_states=False)
    np.testing.assert_allclose(
        res_a.observables["ee"], res_b.observables["ee"], atol=1e-9
    )


def test_drive_refused_in_interaction_frame():
    modes = build_discrete_modes(SINGLE, (1.0,))
    driven_sys = SystemSpec(
        energies=(0.0, 1.0), observables=(SX,), frequencies=(1.0,),
        strengths=(1.0,), drive=lambda t: 0.1 * SX,
    )
    with pytest.raises(InvalidModelError):
        build_lindblad_direct(driven_sys, modes, SpaceLayout(2, (2,)), frame="interaction")


def test_truncation_guard_aborts_with_partial_prefix():
    modes = build_discrete_modes(SINGLE, (1.0,))
    layout = SpaceLayout(2, (1,))  # one excitation already reaches the cap
    gen = build_lindblad_direct(TLS, modes, layout)
    t = np.linspace(0.0, 2.5, 26)
    with pytest.raises(TruncationGuardError) as err:
        evolve(gen, vacuum_embedding(layout, EE), t, observables={"ee": EE})
    exc = err.value
    assert exc.population > 1e-6
    assert exc.partial is not None
    assert len(exc.partial.times) >= 1
    assert exc.partial.times[-1] < exc.time
    assert float(exc.partial.top_fock.max()) <= 1e-6


def test_evolve_validates_inputs():
    gen, layout = tls_direct()
    rho0 = vacuum_embedding(layout, EE)
    with pytest.raises(InvalidModelError):
        evolve(gen, rho0, np.array([0.5, 1.0]))  # grid must start at zero
    with pytest.raises(InvalidModelError):
        evolve(gen, rho0, np.array([0.0, 1.0, 1.0]))  # strictly increasing
    with pytest.raises(InvalidModelError):
        evolve(gen, 0.5 * rho0, np.array([0.0, 1.0]))  # unit trace
    with pytest.raises(InvalidModelError):
        bad = rho0.copy()
        bad[0, 1] = 0.2
        evolve(gen, bad, np.array([0.0, 1.0]))  # hermiticity
    with pytest.raises(InvalidModelError):
        evolve(gen, rho0, np.array([0.0, 1.0]), observables={"x": np.ones((3, 3))})


def test_store_states_flag():
    gen, layout = tls_direct()
    rho0 = vacuum_embedding(layout, EE)
    t = np.linspace(0.0, 1.0, 6)
    res = evolve(gen, rho0, t, store_states=False)
    assert res.states is None
    assert res.system_states.shape == (6, 2, 2)


def test_full_space_observables_accepted():
    gen, layout = tls_direct()
    rho0 = vacuum_embedding(layout, EE)
    t = np.linspace(0.0, 1.0, 6)
    from pseudomodes import mode_ops
    b, bdag = mode_ops(layout, 0)
    res = evolve(gen, rho0, t, observables={"n_mode": bdag @ b}, store_states=False)
    assert res.observables["n_mode"].shape == (6,)
    assert res.observables["n_mode"].real.max() > 1e-3


def test_generator_spec_validation_and_dispatch():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    reg = two_mode_regularize(modes)
    layout = SpaceLayout(2, (2, 2))
    with pytest.raises(InvalidModelError):
        GeneratorSpec("nonsense", TLS, modes, layout)
    with pytest.raises(InvalidModelError):
        GeneratorSpec("lindblad_regularized", TLS, modes, layout)
    with pytest.raises(InvalidModelError):
        GeneratorSpec("pathological", TLS, reg, layout)
    gen = build_generator(GeneratorSpec("lindblad_regularized", TLS, reg, layout))
    assert gen.kind == "lindblad_regularized"


def test_generator_layout_consistency_checked():
    modes = build_discrete_modes(BAND_GAP, (1.0,))
    with pytest.raises(InvalidModelError):
        build_pathological(TLS, modes, SpaceLayout(2, (2,)))  # one mode short
    with pytest.raises(InvalidModelError):
        build_pathological(TLS, modes, SpaceLayout(3, (2, 2)))  # wrong system dim


def test_norm_estimate_bounds_application():
    rng = np.random.default_rng(8)
    for gen in all_three_generators():
        est = gen.norm_estimate()
        assert est > 0.0
        rho = random_hermitian_density(rng, gen.dim)
        applied = np.linalg.norm(gen.apply(0.0, rho))
        assert applied <= est * np.linalg.norm(rho) * (1.0 + 1e-9)
