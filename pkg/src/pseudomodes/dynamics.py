"""Master equation generators for the enlarged system+modes model.

Three generator kinds share one algebraic shape,

    L[rho] = -i (D_l rho - rho D_r) + sum_k J_k rho J_k^dag,
    D_l = A - i K,   D_r = A + i K,

with K = sum_k rate_k b_k^dag b_k Hermitian and J_k = sqrt(2 rate_k) b_k:

* ``lindblad_direct``: A is the Hermitian Hamiltonian of system plus modes
  with real couplings.  Valid completely positive Lindblad form.
* ``pathological``: complex couplings kept as they are, appearing identically
  on both sides of the commutator (A is then non-Hermitian and is NOT
  conjugated on the right; only the mode frequencies pick up the conjugate).
  Trace is conserved but Hermiticity of rho is not; the reduced system state
  is still exact, which is precisely what makes this form a useful oracle.
* ``lindblad_regularized``: the rotated two-mode form with real couplings, a
  real intermode hopping term and non-negative rates.  Valid Lindblad form.

Time dependence enters either through an optional system drive (Schrodinger
picture) or through rotating interaction terms (interaction picture); both
feed A(t), never K or the jump operators.

Integration is fixed-step classical RK4 with the step chosen from a cheap
upper bound on the generator norm, h <= 0.01 / ||L||_est, additionally capped
by the output grid spacing.  A truncation guard aborts the run as soon as the
top Fock level of any mode accumulates population beyond 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._util import as_complex_matrix, is_hermitian, operator_norm_bound
from .errors import (
    ClassificationError,
    InvalidModelError,
    StepUnderflowError,
    TruncationGuardError,
)
from .hilbert import (
    SpaceLayout,
    SystemSpec,
    eigenoperator,
    embed,
    embed_system,
    expectation,
    mode_ops,
    partial_trace_modes,
    top_fock_populations,
    vacuum_embedding,
)
from .mapping import DiscreteModeSet, RegularizedModeSet

KINDS = ("lindblad_direct", "pathological", "lindblad_regularized")
FRAMES = ("schrodinger", "interaction")

#: Dimensionless step control: h * ||L||_est <= this.
STEP_CONTROL = 0.01
#: Snapshot population of any top Fock level beyond this aborts the run.
TRUNCATION_LIMIT = 1e-6
#: Snapshot invariant tolerances.
TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-8
POSITIVITY_TOL = -1e-8
#: Intervals needing more substeps than this indicate a runaway norm estimate.
MAX_SUBSTEPS = 50_000_000


class InvariantViolationError(InvalidModelError):
    """A snapshot broke trace, Hermiticity or positivity beyond tolerance."""


@dataclass(frozen=True)
class RotatingTerm:
    """Contribution forward * e^{+i w t} + backward * e^{-i w t} to A(t)."""

    forward: np.ndarray
    backward: np.ndarray
    frequency: float


class Generator:
    """Concrete generator: matrices for A and K plus scaled jump channels.

    Instances are immutable by convention; every array is kept internally and
    never handed out for mutation.  ``apply`` is deliberately matrix-free in
    the superoperator sense: it performs only d x d matrix products, so the
    memory footprint stays O(d**2) rather than O(d**4).
    """

    def __init__(
        self,
        kind: str,
        frame: str,
        layout: SpaceLayout,
        static_both: np.ndarray,
        damping: np.ndarray,
        channels: tuple[tuple[float, np.ndarray], ...],
        rotating: tuple[RotatingTerm, ...] = (),
        drive: Callable[[float], np.ndarray] | None = None,
        system: SystemSpec | None = None,
    ):
        if kind not in KINDS:
            raise InvalidModelError(f"unknown generator kind {kind!r}")
        if frame not in FRAMES:
            raise InvalidModelError(f"unknown frame {frame!r}")
        d = layout.dim
        self.kind = kind
        self.frame = frame
        self.layout = layout
        self.system = system
        self.static_both = as_complex_matrix(static_both, "static part")
        self.damping = as_complex_matrix(damping, "damping part")
        if self.static_both.shape != (d, d) or self.damping.shape != (d, d):
            raise InvalidModelError("generator matrices must match the layout dimension")
        if not is_hermitian(self.damping, 1e-12):
            raise InvalidModelError("damping part K must be Hermitian")
        self.channels = tuple((float(r), as_complex_matrix(b)) for r, b in channels)
        for rate, _ in self.channels:
            if rate < 0.0:
                raise InvalidModelError(f"negative jump rate {rate}")
        self.rotating = tuple(rotating)
        self.drive = drive
        self._jumps = tuple(
            (np.sqrt(2.0 * rate) * b, np.sqrt(2.0 * rate) * b.conj().T)
            for rate, b in self.channels
            if rate > 0.0
        )
        self._left = self.static_both - 1j * self.damping
        self._right = self.static_both + 1j * self.damping

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def time_dependent(self) -> bool:
        return bool(self.rotating) or self.drive is not None

    def both_sides(self, t: float) -> np.ndarray:
        """The operator A(t) entering from both sides of the commutator."""
        a = self.static_both
        if self.rotating or self.drive is not None:
            a = a.copy()
            for term in self.rotating:
                ph = np.exp(1j * term.frequency * t)
                a += ph * term.forward
                a += np.conj(ph) * term.backward
            if self.drive is not None:
                a += embed_system(self.layout, as_complex_matrix(self.drive(t), "drive"))
        return a

    def drift_pair(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(A(t) - iK, A(t) + iK), the two one-sided drift operators."""
        if not self.time_dependent:
            return self._left, self._right
        a = self.both_sides(t)
        return a - 1j * self.damping, a + 1j * self.damping

    def drift(self, t: float = 0.0) -> np.ndarray:
        """Non-Hermitian drift A(t) - iK governing no-jump evolution."""
        return self.drift_pair(t)[0]

    def apply(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Evaluate L(t)[rho]."""
        left, right = self.drift_pair(t)
        out = -1j * (left @ rho - rho @ right)
        for jop, jdag in self._jumps:
            out += jop @ (rho @ jdag)
        return out

    def norm_estimate(self) -> float:
        """Upper bound on the superoperator norm used for step control."""
        est = operator_norm_bound(self._left) + operator_norm_bound(self._right)
        for term in self.rotating:
            est += 2.0 * (
                operator_norm_bound(term.forward) + operator_norm_bound(term.backward)
            )
        if self.drive is not None:
            est += 2.0 * operator_norm_bound(
                np.asarray(self.drive(0.0), dtype=complex)
            )
        for jop, _ in self._jumps:
            est += operator_norm_bound(jop) ** 2
        return est


def _check_consistency(
    system: SystemSpec, strengths, n_modes: int, layout: SpaceLayout
) -> None:
    if layout.system_dim != system.dim:
        raise InvalidModelError("layout system dimension disagrees with the system")
    if layout.n_modes != n_modes:
        raise InvalidModelError(
            f"layout has {layout.n_modes} modes, model has {n_modes}"
        )
    if len(strengths) != system.n_channels:
        raise InvalidModelError(
            "mode set and system disagree on the number of coupling channels"
        )
    for a, b in zip(strengths, system.strengths):
        if abs(a - b) > 1e-12 * max(1.0, abs(a), abs(b)):
            raise InvalidModelError(
                f"mode set strength {a} disagrees with system strength {b}"
            )


def _mode_number_sum(layout: SpaceLayout, coeffs) -> np.ndarray:
    out = np.zeros((layout.dim, layout.dim), dtype=complex)
    for l, c in enumerate(coeffs):
        if c == 0.0:
            continue
        a, adag = mode_ops(layout, l)
        out += c * (adag @ a)
    return out


def _coupling_terms(
    layout: SpaceLayout,
    system: SystemSpec,
    frequencies,
    couplings,
    conjugate_right: bool,
):
    """Static and rotating pieces of sum_jl g_jl (c_j^dag b_l + b_l^dag c_j).

    With ``conjugate_right`` the right-moving piece uses conj(g) (Hermitian
    combination); without it the same g multiplies both pieces, which is the
    one-sided convention of the pathological form.
    """
    static = np.zeros((layout.dim, layout.dim), dtype=complex)
    rotating = []
    for j in range(system.n_channels):
        c = embed_system(layout, eigenoperator(system, j))
        cdag = c.conj().T
        for l, xi in enumerate(frequencies):
            g = complex(couplings[j][l])
            if g == 0.0:
                continue
            b, bdag = mode_ops(layout, l)
            g_right = np.conj(g) if conjugate_right else g
            forward = g * (cdag @ b)
            backward = g_right * (bdag @ c)
            delta = system.frequencies[j] - xi
            rotating.append(RotatingTerm(forward, backward, delta))
            static += forward + backward
    return static, rotating


def _assemble(
    kind: str,
    frame: str,
    layout: SpaceLayout,
    system: SystemSpec,
    mode_frequencies,
    rates,
    static_coupling: np.ndarray,
    rotating_coupling,
    interaction_static: np.ndarray | None = None,
) -> Generator:
    if frame not in FRAMES:
        raise InvalidModelError(f"unknown frame {frame!r}")
    if frame == "interaction" and system.drive is not None:
        raise InvalidModelError(
            "a system drive is only supported in the schrodinger frame"
        )
    damping = _mode_number_sum(layout, rates).real.astype(complex)
    channels = tuple(
        (float(r), mode_ops(layout, l)[0]) for l, r in enumerate(rates)
    )
    if frame == "schrodinger":
        static = embed_system(layout, system.bare_hamiltonian)
        static += _mode_number_sum(layout, mode_frequencies)
        static += static_coupling
        rotating = ()
        drive = system.drive
    else:
        static = np.zeros((layout.dim, layout.dim), dtype=complex)
        if interaction_static is not None:
            static += interaction_static
        rotating = tuple(rotating_coupling)
        drive = None
    return Generator(
        kind=kind,
        frame=frame,
        layout=layout,
        static_both=static,
        damping=damping,
        channels=channels,
        rotating=rotating,
        drive=drive,
        system=system,
    )


def build_lindblad_direct(
    system: SystemSpec,
    modes: DiscreteModeSet,
    layout: SpaceLayout,
    frame: str = "schrodinger",
) -> Generator:
    """Completely positive generator for an all-real coupling mode family."""
    _check_consistency(system, modes.strengths, len(modes), layout)
    if not modes.is_all_real:
        raise ClassificationError(
            "couplings are complex; a direct Lindblad form would be wrong. "
            "Use build_pathological, or two_mode_regularize followed by "
            "build_lindblad_regularized."
        )
    g = modes.coupling_matrix.real
    freqs = [m.frequency for m in modes.modes]
    static, rotating = _coupling_terms(
        layout, system, freqs, g, conjugate_right=True
    )
    return _assemble(
        "lindblad_direct",
        frame,
        layout,
        system,
        freqs,
        [m.damping for m in modes.modes],
        static,
        rotating,
    )


def build_pathological(
    system: SystemSpec,
    modes: DiscreteModeSet,
    layout: SpaceLayout,
    frame: str = "schrodinger",
) -> Generator:
    """One-sided generator that keeps complex couplings uncorrected.

    Reduces exactly to the direct Lindblad generator when all couplings are
    real.  Not completely positive in general and never unraveled into
    trajectories, but its reduced system dynamics is exact, making it the
    cross-check for the regularized form.
    """
    _check_consistency(system, modes.strengths, len(modes), layout)
    g = modes.coupling_matrix
    freqs = [m.frequency for m in modes.modes]
    static, rotating = _coupling_terms(
        layout, system, freqs, g, conjugate_right=False
    )
    return _assemble(
        "pathological",
        frame,
        layout,
        system,
        freqs,
        [m.damping for m in modes.modes],
        static,
        rotating,
    )


def build_lindblad_regularized(
    system: SystemSpec,
    reg: RegularizedModeSet,
    layout: SpaceLayout,
    frame: str = "schrodinger",
) -> Generator:
    """Completely positive generator for the rotated two-mode family."""
    _check_consistency(system, reg.strengths, 2, layout)
    g = reg.coupling_matrix
    freqs = [m.frequency for m in reg.modes]
    static, rotating = _coupling_terms(
        layout, system, freqs, g, conjugate_right=True
    )
    b1, b1d = mode_ops(layout, 0)
    b2, b2d = mode_ops(layout, 1)
    hop_f = reg.intermode * (b1d @ b2)
    hop_b = reg.intermode * (b2d @ b1)
    hop = hop_f + hop_b
    delta = freqs[0] - freqs[1]
    interaction_static = None
    if abs(delta) <= 1e-14 * max(1.0, abs(freqs[0]), abs(freqs[1])):
        # Degenerate rotated frequencies: the hop does not rotate.
        interaction_static = hop
    else:
        rotating = rotating + [RotatingTerm(hop_f, hop_b, delta)]
    return _assemble(
        "lindblad_regularized",
        frame,
        layout,
        system,
        freqs,
        [m.damping for m in reg.modes],
        static + hop,
        rotating,
        interaction_static=interaction_static,
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative recipe for a generator, routed by ``build_generator``."""

    kind: str
    system: SystemSpec
    modes: DiscreteModeSet | RegularizedModeSet
    layout: SpaceLayout
    frame: str = "schrodinger"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModelError(f"unknown generator kind {self.kind!r}")
        if self.frame not in FRAMES:
            raise InvalidModelError(f"unknown frame {self.frame!r}")
        needs_reg = self.kind == "lindblad_regularized"
        if needs_reg and not isinstance(self.modes, RegularizedModeSet):
            raise InvalidModelError(
                "lindblad_regularized requires a RegularizedModeSet"
            )
        if not needs_reg and not isinstance(self.modes, DiscreteModeSet):
            raise InvalidModelError(f"{self.kind} requires a DiscreteModeSet")


def build_generator(spec: GeneratorSpec) -> Generator:
    """Build the generator named by ``spec.kind``."""
    if spec.kind == "lindblad_direct":
        return build_lindblad_direct(spec.system, spec.modes, spec.layout, spec.frame)
    if spec.kind == "pathological":
        return build_pathological(spec.system, spec.modes, spec.layout, spec.frame)
    return build_lindblad_regularized(spec.system, spec.modes, spec.layout, spec.frame)


def free_hamiltonian_diagonal(
    layout: SpaceLayout, system: SystemSpec, mode_frequencies
) -> np.ndarray:
    """Diagonal of H0 = H_S0 + sum_l xi_l n_l in the product basis."""
    if len(mode_frequencies) != layout.n_modes:
        raise InvalidModelError("one frequency per mode is required")
    diag = np.array(system.energies, dtype=float)
    for xi, n_max in zip(mode_frequencies, layout.fock_levels):
        diag = np.add.outer(diag, xi * np.arange(n_max + 1)).ravel()
    return diag


def rotate_frame(rho: np.ndarray, h0_diag: np.ndarray, t: float) -> np.ndarray:
    """Map an interaction-picture state at time t back to the Schrodinger one."""
    ph = np.exp(-1j * h0_diag * t)
    return ph[:, None] * rho * ph.conj()[None, :]


@dataclass
class EvolutionResult:
    """Densities and derived quantities on the requested time grid."""

    times: np.ndarray
    states: np.ndarray | None
    system_states: np.ndarray
    observables: dict[str, np.ndarray]
    top_fock: np.ndarray
    trace_error: np.ndarray
    kind: str


def _validate_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidModelError("time grid must be a non-empty 1-d array")
    if abs(t[0]) > 1e-12:
        raise InvalidModelError(f"time grid must start at 0, got {t[0]}")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise InvalidModelError("time grid must be strictly increasing")
    return t


def _snapshot_checks(kind: str, rho: np.ndarray, t: float) -> None:
    tr = abs(complex(np.trace(rho)) - 1.0)
    if tr > TRACE_TOL:
        raise InvariantViolationError(
            f"trace deviated by {tr:.3e} at t={t:g}"
        )
    if kind == "pathological":
        return
    scale = max(1.0, float(np.abs(rho).max()))
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > HERMITICITY_TOL * scale:
        raise InvariantViolationError(
            f"Hermiticity violated by {herm:.3e} at t={t:g}"
        )
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if float(evals.min()) < POSITIVITY_TOL:
        raise InvariantViolationError(
            f"negative population {evals.min():.3e} at t={t:g}"
        )


def evolve(
    gen: Generator,
    rho0: np.ndarray,
    t_grid,
    observables: dict[str, np.ndarray] | None = None,
    step_scale: float = 1.0,
    check: bool = True,
    store_states: bool = True,
) -> EvolutionResult:
    """Integrate d rho / dt = L(t)[rho] over the grid with fixed-step RK4.

    ``observables`` maps names to matrices either on the system factor (then
    evaluated on the reduced state) or on the full space.  ``step_scale``
    multiplies the stability-bounded step; pass 0.5 to halve it for
    convergence studies.  Snapshot invariants (trace for every kind;
    Hermiticity and positivity for the completely positive kinds) are
    enforced when ``check`` is true.

    Raises TruncationGuardError as soon as any mode's top Fock population
    exceeds 1e-6 at a snapshot; the exception carries the clean prefix of the
    result.
    """
    t = _validate_grid(t_grid)
    d = gen.dim
    rho = as_complex_matrix(rho0, "initial state")
    if rho.shape != (d, d):
        raise InvalidModelError(
            f"initial state has shape {rho.shape}, generator needs {(d, d)}"
        )
    if abs(complex(np.trace(rho)) - 1.0) > 1e-10:
        raise InvalidModelError("initial state must have unit trace")
    if not is_hermitian(rho, 1e-10):
        raise InvalidModelError("initial state must be Hermitian")
    if not step_scale > 0.0:
        raise InvalidModelError("step_scale must be positive")

    observables = observables or {}
    layout = gen.layout
    obs_full = {}
    for name, op in observables.items():
        mat = as_complex_matrix(op, f"observable {name}")
        if mat.shape == (layout.system_dim, layout.system_dim):
            obs_full[name] = ("system", mat)
        elif mat.shape == (d, d):
            obs_full[name] = ("full", mat)
        else:
            raise InvalidModelError(
                f"observable {name} has shape {mat.shape}; expected system or full"
            )

    est = gen.norm_estimate()
    if t.size > 1:
        spacing = float(np.diff(t).min())
        h_cap = spacing if est == 0.0 else min(STEP_CONTROL / est, spacing)
        h_cap *= step_scale
        if h_cap <= 0.0 or not np.isfinite(h_cap):
            raise StepUnderflowError(f"unusable step size {h_cap!r}")
    else:
        h_cap = None

    n_t = t.size
    states = np.empty((n_t, d, d), dtype=complex) if store_states else None
    system_states = np.empty((n_t, layout.system_dim, layout.system_dim), dtype=complex)
    top_fock = np.empty(n_t)
    trace_error = np.empty(n_t)
    obs_out = {name: np.empty(n_t, dtype=complex) for name in obs_full}

    def finalize(upto: int) -> EvolutionResult:
        return EvolutionResult(
            times=t[:upto].copy(),
            states=states[:upto].copy() if store_states else None,
            system_states=system_states[:upto].copy(),
            observables={k: v[:upto].copy() for k, v in obs_out.items()},
            top_fock=top_fock[:upto].copy(),
            trace_error=trace_error[:upto].copy(),
            kind=gen.kind,
        )

    def record(i: int) -> None:
        tr_err = abs(complex(np.trace(rho)) - 1.0)
        tops = top_fock_populations(rho, layout)
        worst = float(tops.max())
        if worst > TRUNCATION_LIMIT:
            raise TruncationGuardError(
                f"top Fock population {worst:.3e} exceeded {TRUNCATION_LIMIT:g} "
                f"at t={t[i]:g}; raise the cutoffs",
                time=float(t[i]),
                population=worst,
                partial=finalize(i),
            )
        if check:
            _snapshot_checks(gen.kind, rho, float(t[i]))
        if store_states:
            states[i] = rho
        rho_s = partial_trace_modes(rho, layout)
        system_states[i] = rho_s
        top_fock[i] = worst
        trace_error[i] = tr_err
        for name, (kind_, mat) in obs_full.items():
            target = rho_s if kind_ == "system" else rho
            obs_out[name][i] = expectation(target, mat)

    record(0)
    td = gen.time_dependent
    apply = gen.apply
    for i in range(1, n_t):
        t0, t1 = float(t[i - 1]), float(t[i])
        span = t1 - t0
        n_sub = max(1, int(math.ceil(span / h_cap)))
        if n_sub > MAX_SUBSTEPS:
            raise StepUnderflowError(
                f"interval [{t0:g}, {t1:g}] needs {n_sub} substeps; "
                "the norm estimate is too large to integrate"
            )
        h = span / n_sub
        tc = t0
        for _ in range(n_sub):
            if td:
                k1 = apply(tc, rho)
                k2 = apply(tc + 0.5 * h, rho + (0.5 * h) * k1)
                k3 = apply(tc + 0.5 * h, rho + (0.5 * h) * k2)
                k4 = apply(tc + h, rho + h * k3)
            else:
                k1 = apply(0.0, rho)
                k2 = apply(0.0, rho + (0.5 * h) * k1)
                k3 = apply(0.0, rho + (0.5 * h) * k2)
                k4 = apply(0.0, rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            tc += h
        record(i)
    return finalize(n_t)


def equivalence_check(
    gen_a: Generator,
    gen_b: Generator,
    rho_system: np.ndarray,
    t_grid,
    **evolve_kwargs,
) -> float:
    """Max elementwise deviation of the reduced states of two generators.

    Both generators are started from the same system state with every mode in
    vacuum (their mode bases may differ; the vacuum is shared by any basis
    reached through the rotations used here).
    """
    if gen_a.layout.system_dim != gen_b.layout.system_dim:
        raise InvalidModelError("generators act on different system dimensions")
    dev = 0.0
    res = []
    for gen in (gen_a, gen_b):
        rho0 = vacuum_embedding(gen.layout, rho_system)
        res.append(
            evolve(gen, rho0, t_grid, store_states=False, **evolve_kwargs)
        )
    dev = float(np.abs(res[0].system_states - res[1].system_states).max())
    return dev
