"""Built-in demonstration systems and their end-to-end pipelines.

Four ready-made setups exercise the whole library and are exposed through
the command line under the ids 6.1 to 6.4:

* ``6.1`` - a decomposable vector function driven by the filtered logistic
  source, with a tail large enough at the origin to defeat recurrence-with-
  separation for the combined signal.
* ``6.2`` - the sequence analogue built directly on the logistic orbit.
* ``6.3`` - a two-dimensional delay system forced by the 6.1 construction,
  simulated twice (full forcing vs recurrent part) and checked against the
  exponential convergence envelope.
* ``6.4`` - a two-dimensional discrete system forced by the 6.2 sequence,
  checked against the geometric envelope.  Its measurement window sits deep
  in the tail (index 4000 on), where the slowly decaying forcing difference
  is small enough for the tight difference targets to be meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chaos import (DEFAULT_BURN_IN, DEFAULT_SEED, ExponentialFilter, GridFunction,
                    ScalarOrbit, convolve_exponential, logistic_orbit)
from .constructs import (DecompositionTriple, VectorSequence, build_function_triple,
                         build_sequence_triple, function_tail, non_unpredictability_witness,
                         WitnessReport)
from .delay import (DelayAssumptionReport, DelayConvergenceReport, DelaySystemSpec,
                    ProofConstants, StabilityConstants, bounded_solution, check_assumptions_A,
                    constant_history, contraction_margin, convergence_check, integrate_mos,
                    proof_constants, stability_constants)
from .detectors import (DecayReport, UnpredictabilityEvidence, collect_evidence,
                        decay_test, evidence_for_function, verify_evidence)
from .discrete import (DiscreteAssumptionReport, DiscreteConvergenceReport,
                       DiscreteSystemSpec, GronwallEnvelope, bounded_orbit,
                       check_assumptions_B, convergence_check_discrete, gamma_ceiling,
                       gronwall_envelope, spectral_norm)
from .errors import DomainError
from .nonlinearity import Nonlinearity

EXAMPLE_IDS = ("6.1", "6.2", "6.3", "6.4")

DELAY_TAU = 0.2
FUNCTION_PSI_SUP = math.sqrt(5.0) / 2.0
SEQUENCE_PSI_SUP = math.sqrt(17.0) / 4.0


def delay_demo_matrix() -> np.ndarray:
    return np.array([[1.0, -3.0], [5.0, -5.0]])


def delay_demo_nonlinearity() -> Nonlinearity:
    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        out[..., 0] = np.arctan(x[..., 1]) / 6.0
        out[..., 1] = (0.5 * math.pi - np.arctan(x[..., 0])) / 12.0
        return out
    return Nonlinearity(f, bound=math.pi * math.sqrt(2.0) / 12.0, lipschitz=1.0 / 6.0,
                        name="arctan_arccot")


def discrete_demo_matrix() -> np.ndarray:
    return np.array([[0.25, -0.25], [0.5, 0.125]])


def discrete_demo_nonlinearity() -> Nonlinearity:
    def g(w):
        w = np.asarray(w, dtype=float)
        out = np.empty_like(w)
        out[..., 0] = np.sin(w[..., 0]) / 5.0
        out[..., 1] = np.cos(2.0 * w[..., 1]) / 10.0
        return out
    return Nonlinearity(g, bound=1.0 / math.sqrt(20.0), lipschitz=0.2, name="sin_cos")


def tanh_nonlinearity(dim: int, scale: float) -> Nonlinearity:
    def f(x):
        return scale * np.tanh(np.asarray(x, dtype=float))
    return Nonlinearity(f, bound=scale * math.sqrt(dim), lipschitz=scale, name="tanh")


NONLINEARITIES = {
    "arctan_arccot": lambda dim, scale: delay_demo_nonlinearity(),
    "sin_cos": lambda dim, scale: discrete_demo_nonlinearity(),
    "zero": lambda dim, scale: Nonlinearity.zero(dim),
    "tanh": tanh_nonlinearity,
}


def source_orbit(seed: float = DEFAULT_SEED, burn_in: int = DEFAULT_BURN_IN,
                 length: int = 1000, base_index: int = 0) -> ScalarOrbit:
    """Logistic orbit rebased so its window starts at ``base_index``."""
    return logistic_orbit(seed, burn_in, length).rebased(base_index)


def function_source(seed: float, burn_in: int, t_lo: float, t_hi: float) -> ExponentialFilter:
    """Filtered source whose usable window covers [t_lo, t_hi]."""
    base = math.floor(t_lo) - 20
    length = math.ceil(t_hi) - base + 1
    orbit = source_orbit(seed, burn_in, length, base)
    return ExponentialFilter.from_orbit(orbit, decay=2.0)


def recurrent_forcing(filt: ExponentialFilter):
    """Vectorized callable for the recurrent forcing (2h, h)."""
    def psi(t):
        h = filt.eval(t)
        return np.stack([2.0 * h, h], axis=-1)
    return psi


def combined_forcing(filt: ExponentialFilter):
    """Vectorized callable for the full forcing psi + tail."""
    psi = recurrent_forcing(filt)

    def phi(t):
        return psi(t) + function_tail(t)
    return phi


# ---------------------------------------------------------------------------
# 6.1 / 6.2: the construct demos


@dataclass(frozen=True)
class ConstructDemo:
    """Triple plus the standard checks run on it."""

    kind: str
    triple: DecompositionTriple
    witness: WitnessReport
    psi_sup: float
    psi_sup_bound: float
    decay: DecayReport
    evidence: UnpredictabilityEvidence
    evidence_verified: bool
    filt: ExponentialFilter | None = None
    orbit: ScalarOrbit | None = None


def run_function_demo(seed: float = DEFAULT_SEED, burn_in: int = DEFAULT_BURN_IN,
                      t_lo: float = -20.0, t_hi: float = 180.0, step: float = 0.05,
                      horizon: float = 10 ** 4) -> ConstructDemo:
    """Build the 6.1 function triple on [t_lo, t_hi] and run its checks.

    The recurrence scan compares a span past the decaying bump, where the
    combined signal is indistinguishable from its recurrent part.
    """
    filt = function_source(seed, burn_in, t_lo, t_hi)
    full = convolve_exponential(filt.orbit, decay=2.0, step=step)
    h = full.restrict(t_lo, t_hi)
    triple = build_function_triple(h)
    witness = non_unpredictability_witness(triple, FUNCTION_PSI_SUP)
    decay = decay_test(triple.theta, (0.5, 1e-2, 1e-4, 1e-6))
    span_lo = min(max(t_lo, 0.0) + 30.0, t_hi - 10.0)
    span = (span_lo, span_lo + 5.0)
    evidence = evidence_for_function(triple.phi, span, ladder=(0.5, 0.3, 0.2),
                                     epsilon0=0.2, delta=0.2, horizon=horizon,
                                     min_shift=1.0)
    return ConstructDemo(
        kind="function",
        triple=triple,
        witness=witness,
        psi_sup=triple.psi.sup_norm(),
        psi_sup_bound=FUNCTION_PSI_SUP,
        decay=decay,
        evidence=evidence,
        evidence_verified=verify_evidence(triple.phi, evidence),
        filt=filt,
    )


def run_sequence_demo(seed: float = DEFAULT_SEED, burn_in: int = DEFAULT_BURN_IN,
                      length: int | None = None, horizon: int = 10 ** 6,
                      window: int = 20, epsilon0: float = 0.3) -> ConstructDemo:
    """Build the 6.2 sequence triple and run its checks."""
    if length is None:
        length = horizon + window + 2
    orbit = source_orbit(seed, burn_in, length)
    triple = build_sequence_triple(orbit)
    witness = non_unpredictability_witness(triple, SEQUENCE_PSI_SUP)
    decay = decay_test(triple.theta, (0.5, 0.02, 1e-3, 1e-4))
    evidence = collect_evidence(triple.psi, window=window, epsilon0=epsilon0, horizon=horizon)
    return ConstructDemo(
        kind="sequence",
        triple=triple,
        witness=witness,
        psi_sup=triple.psi.sup_norm(),
        psi_sup_bound=SEQUENCE_PSI_SUP,
        decay=decay,
        evidence=evidence,
        evidence_verified=verify_evidence(triple.psi, evidence),
        orbit=orbit,
    )


# ---------------------------------------------------------------------------
# 6.3: the delay demo


@dataclass(frozen=True)
class DelayDemo:
    """Both forced solutions of the delay demo plus every derived quantity."""

    spec_combined: DelaySystemSpec
    spec_recurrent: DelaySystemSpec
    filt: ExponentialFilter
    constants: StabilityConstants
    assumptions: DelayAssumptionReport
    proof: ProofConstants
    m_phi: float
    m_psi: float
    gamma: float
    epsilon: float
    alpha: float
    phi_solution: GridFunction
    psi_solution: GridFunction
    theta_grid: GridFunction
    report: DelayConvergenceReport


def run_delay_demo(step: float = DELAY_TAU / 32.0, window: tuple = (0.0, 200.0),
                   sim_burn_in: float = 30.0, seed: float = DEFAULT_SEED,
                   orbit_burn_in: int = DEFAULT_BURN_IN, epsilon: float = 1e-3,
                   tau: float = DELAY_TAU, envelope_slack: float = 1e-6) -> DelayDemo:
    """Simulate the delay demo under full and recurrent forcing and compare.

    Both runs start from the same zero history ``sim_burn_in`` time units
    before the window, so each trajectory lands on its bounded solution
    before measurements begin.
    """
    w0, w1 = float(window[0]), float(window[1])
    t_sim0 = w0 - max(sim_burn_in, tau)
    filt = function_source(seed, orbit_burn_in, t_sim0 - tau - 1.0, w1 + 1.0)

    a = delay_demo_matrix()
    f = delay_demo_nonlinearity()
    phi_fn = combined_forcing(filt)
    psi_fn = recurrent_forcing(filt)
    spec_phi = DelaySystemSpec(a, tau, f, phi_fn)
    spec_psi = DelaySystemSpec(a, tau, f, psi_fn)

    constants = stability_constants(a)
    assumptions = check_assumptions_A(spec_phi, constants)
    if not assumptions.a3_pass:
        raise DomainError("delay demo parameters must satisfy the contraction margin")

    n_burn = math.ceil((w0 - t_sim0) / step - 1e-9)
    t0 = w0 - n_burn * step
    history = constant_history(np.zeros(2), t0, tau, step)
    phi_solution = integrate_mos(spec_phi, history, w1, step).restrict(w0, w1)
    psi_solution = integrate_mos(spec_psi, history, w1, step).restrict(w0, w1)

    times = phi_solution.times()
    full_times = t0 + step * np.arange(round((w1 - t0) / step) + 1)
    m_phi = float(np.linalg.norm(phi_fn(full_times), axis=1).max())
    m_psi = float(np.linalg.norm(psi_fn(full_times), axis=1).max())
    proof = proof_constants(spec_phi, constants, m_phi, m_psi)
    gamma = 0.5 / (proof.k1 + proof.k2)

    theta_grid = GridFunction(phi_solution.t_start, step, function_tail(times))
    tail_norm = np.maximum.accumulate(theta_grid.norms()[::-1])[::-1]
    quiet = np.nonzero(tail_norm < gamma * epsilon)[0]
    if quiet.size == 0:
        raise DomainError("tail never drops below gamma*epsilon inside the window")
    alpha = float(times[quiet[0]])

    report = convergence_check(phi_solution, psi_solution, constants, proof, tau,
                               alpha, gamma, epsilon, slack=envelope_slack,
                               ladder=(1e-1, 1e-2, 1e-3))
    return DelayDemo(spec_phi, spec_psi, filt, constants, assumptions, proof,
                     m_phi, m_psi, gamma, epsilon, alpha,
                     phi_solution, psi_solution, theta_grid, report)


# ---------------------------------------------------------------------------
# 6.4: the discrete demo


@dataclass(frozen=True)
class DiscreteDemo:
    """Both forced orbits of the discrete demo plus every derived quantity."""

    spec_combined: DiscreteSystemSpec
    spec_recurrent: DiscreteSystemSpec
    triple: DecompositionTriple
    norm_b: float
    assumptions: DiscreteAssumptionReport
    m_phi: float
    m_psi: float
    gamma: float
    epsilon: float
    alpha: int
    phi_orbit: VectorSequence
    psi_orbit: VectorSequence
    envelope: GronwallEnvelope
    report: DiscreteConvergenceReport


def run_discrete_demo(window: tuple = (4000, 4400), tol: float = 1e-9,
                      seed: float = DEFAULT_SEED, orbit_burn_in: int = DEFAULT_BURN_IN,
                      epsilon: float = 1e-5, envelope_slack: float = 1e-9) -> DiscreteDemo:
    """Simulate the discrete demo under full and recurrent forcing and compare."""
    i0, i1 = int(window[0]), int(window[1])
    if i0 < 1:
        raise DomainError("the measurement window must start past index 0")
    orbit = source_orbit(seed, orbit_burn_in, i1 + 2)
    triple = build_sequence_triple(orbit)

    b = discrete_demo_matrix()
    g = discrete_demo_nonlinearity()
    spec_phi = DiscreteSystemSpec(b, g, triple.phi)
    spec_psi = DiscreteSystemSpec(b, g, triple.psi)
    norm_b = spectral_norm(b)
    assumptions = check_assumptions_B(spec_phi)
    if not assumptions.b3_pass:
        raise DomainError("discrete demo parameters must satisfy the contraction margin")

    m_phi = triple.phi.sup_norm()
    m_psi = triple.psi.sup_norm()
    gamma = 0.5 * gamma_ceiling(spec_phi, m_phi, m_psi, norm_b)

    theta_norms = triple.theta.norms()
    k0 = i0 - triple.theta.base_index
    k1 = i1 - triple.theta.base_index
    tail = np.maximum.accumulate(theta_norms[k0:k1 + 1][::-1])[::-1]
    quiet = np.nonzero(tail < gamma * epsilon)[0]
    if quiet.size == 0:
        raise DomainError("tail never drops below gamma*epsilon inside the window")
    alpha = int(i0 + quiet[0])

    phi_orbit = bounded_orbit(spec_phi, (i0, i1), tol)
    psi_orbit = bounded_orbit(spec_psi, (i0, i1), tol)
    envelope = gronwall_envelope(spec_phi, m_phi, m_psi, alpha, gamma, epsilon, (i0, i1))
    report = convergence_check_discrete(phi_orbit, psi_orbit, envelope, alpha,
                                        slack=envelope_slack)
    return DiscreteDemo(spec_phi, spec_psi, triple, norm_b, assumptions,
                        m_phi, m_psi, gamma, epsilon, alpha,
                        phi_orbit, psi_orbit, envelope, report)
