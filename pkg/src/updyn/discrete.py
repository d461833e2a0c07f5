"""Quasilinear discrete systems: w_{i+1} = B w_i + g(w_i) + forcing_i.

Contraction requires |B| + L < 1 in the spectral norm.  The module computes
that norm by power iteration, approximates the unique bounded orbit by
burn-in (with a truncated-sum residual as an independent cross-check), and
evaluates the explicit geometric envelope that dominates the difference of
two forced orbits past the index where the forcing difference is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constructs import VectorSequence
from .errors import (AssumptionError, ConvergenceFailure, DomainError,
                     SingularMatrixError, WindowExhaustedError)
from .nonlinearity import Nonlinearity, SpotCheck, spot_check


@dataclass(frozen=True)
class DiscreteSystemSpec:
    """Matrix, bounded Lipschitz nonlinearity and forcing sequence.

    The backward-in-time theory needs a nonsingular matrix; forward
    iteration does not, so singularity is reported by the assumption check
    rather than rejected here.
    """

    matrix: np.ndarray
    nonlinearity: Nonlinearity
    forcing: VectorSequence

    def __post_init__(self):
        b = np.asarray(self.matrix, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or not np.all(np.isfinite(b)):
            raise DomainError("system matrix must be square with finite entries")
        if self.forcing.dim != b.shape[0]:
            raise DomainError("forcing dimension does not match the matrix")
        object.__setattr__(self, "matrix", b)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def nonsingular(self) -> bool:
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        return bool(sv[-1] > self.dim * np.finfo(float).eps * max(sv[0], 1.0))


def spectral_norm(b, tol: float = 1e-12, max_iter: int = 200_000, seed: int = 7) -> float:
    """Largest singular value by power iteration on B^T B.

    Iteration stops when the eigenvalue residual |Gv - mu*v| falls below
    ``tol * mu``, which bounds the error of the Rayleigh estimate itself.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or not np.all(np.isfinite(b)):
        raise DomainError("expected a finite square matrix")
    gram = b.T @ b
    scale = float(np.abs(gram).max())
    if scale == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(b.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = gram @ v
        mu = float(v @ w)
        resid = float(np.linalg.norm(w - mu * v))
        if resid <= tol * max(mu, scale * np.finfo(float).eps):
            return math.sqrt(max(mu, 0.0))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class DiscreteAssumptionReport:
    """Spot-check outcome plus the contraction margin 1 - |B| - L."""

    spot: SpotCheck
    norm_b: float
    margin: float
    bound_declared: float
    lipschitz_declared: float
    nonsingular: bool = True

    @property
    def b1_pass(self) -> bool:
        return self.spot.bound_ok

    @property
    def b2_pass(self) -> bool:
        return self.spot.lipschitz_ok

    @property
    def b3_pass(self) -> bool:
        return self.margin > 0.0

    @property
    def all_pass(self) -> bool:
        return self.b1_pass and self.b2_pass and self.b3_pass


def check_assumptions_B(spec: DiscreteSystemSpec, pairs: int = 1000,
                        seed: int = 1404) -> DiscreteAssumptionReport:
    norm_b = spectral_norm(spec.matrix)
    return DiscreteAssumptionReport(
        spot=spot_check(spec.nonlinearity, spec.dim, pairs=pairs, seed=seed),
        norm_b=norm_b,
        margin=1.0 - norm_b - spec.nonlinearity.lipschitz,
        bound_declared=spec.nonlinearity.bound,
        lipschitz_declared=spec.nonlinearity.lipschitz,
        nonsingular=spec.nonsingular(),
    )


def iterate(spec: DiscreteSystemSpec, start_state, steps: int,
            start_index: int | None = None) -> VectorSequence:
    """Forward orbit of ``steps`` transitions starting at ``start_index``."""
    if steps < 0:
        raise DomainError("steps must be non-negative")
    i0 = spec.forcing.base_index if start_index is None else int(start_index)
    if i0 < spec.forcing.base_index or i0 + steps > spec.forcing.end_index:
        raise WindowExhaustedError(
            f"forcing window [{spec.forcing.base_index}, {spec.forcing.end_index}) "
            f"does not cover indices [{i0}, {i0 + steps})")
    w = np.atleast_1d(np.asarray(start_state, dtype=float))
    if w.shape != (spec.dim,):
        raise DomainError(f"start state must have shape ({spec.dim},)")
    out = np.empty((steps + 1, spec.dim))
    out[0] = w
    b = spec.matrix
    g = spec.nonlinearity
    phi = spec.forcing.values
    k0 = i0 - spec.forcing.base_index
    for j in range(steps):
        w = b @ w + g(w) + phi[k0 + j]
        out[j + 1] = w
    return VectorSequence(i0, out)


def burn_in_length(spec: DiscreteSystemSpec, tol: float, norm_b: float | None = None) -> int:
    """Iterations needed to push zero-start contamination below ``tol``."""
    if norm_b is None:
        norm_b = spectral_norm(spec.matrix)
    q = norm_b + spec.nonlinearity.lipschitz
    margin = 1.0 - q
    if margin <= 0.0:
        raise AssumptionError("contraction margin 1 - |B| - L is not positive")
    m_phi = spec.forcing.sup_norm()
    scale = (spec.nonlinearity.bound + m_phi) / (1.0 - norm_b)
    if scale <= tol:
        return 1
    return max(1, math.ceil(math.log(tol * margin / scale) / math.log(q)))


def bounded_orbit(spec: DiscreteSystemSpec, window: Sequence[int], tol: float = 1e-9) -> VectorSequence:
    """Approximate the unique bounded orbit on ``window`` (inclusive) by burn-in."""
    i0, i1 = int(window[0]), int(window[1])
    if i1 < i0:
        raise DomainError("empty window")
    burn = burn_in_length(spec, tol)
    start = i0 - burn
    orbit = iterate(spec, np.zeros(spec.dim), i1 - start, start_index=start)
    return orbit.restrict(i0, i1)


def orbit_sum_residual(spec: DiscreteSystemSpec, orbit: VectorSequence,
                       tol: float = 1e-10, sample: int = 16) -> float:
    """Cross-check an orbit against the truncated sum representation.

    The bounded orbit equals sum_j B^(i-j) (g(orbit_{j-1}) + forcing_{j-1});
    the sum is cut once the geometric tail bound falls below ``tol``.  The
    returned value is the largest deviation over sampled indices (truncation
    contributes at most ``tol`` of it).
    """
    norm_b = spectral_norm(spec.matrix)
    if norm_b >= 1.0:
        raise AssumptionError("sum representation needs |B| < 1")
    m_phi = spec.forcing.sup_norm()
    scale = (spec.nonlinearity.bound + m_phi) / (1.0 - norm_b)
    depth = max(1, math.ceil(math.log(tol / max(scale, tol)) / math.log(max(norm_b, 1e-300))))
    lo = max(orbit.base_index, spec.forcing.base_index) + depth + 1
    candidates = [i for i in range(lo, orbit.end_index)]
    if not candidates:
        raise DomainError("orbit window too short for the requested truncation depth")
    step_count = max(1, len(candidates) // sample)
    worst = 0.0
    b = spec.matrix
    g = spec.nonlinearity
    for i in candidates[::step_count]:
        acc = np.zeros(spec.dim)
        for j in range(i - depth, i + 1):
            acc = b @ acc + g(orbit.value_at(j - 1)) + spec.forcing.value_at(j - 1)
        worst = max(worst, float(np.linalg.norm(acc - orbit.value_at(i))))
    return worst


def gamma_ceiling(spec: DiscreteSystemSpec, m_phi: float, m_psi: float,
                  norm_b: float | None = None) -> float:
    """Largest admissible gamma for the geometric envelope."""
    if norm_b is None:
        norm_b = spectral_norm(spec.matrix)
    margin = 1.0 - norm_b - spec.nonlinearity.lipschitz
    if margin <= 0.0:
        raise AssumptionError("contraction margin is not positive")
    big = 2.0 * spec.nonlinearity.bound + m_phi + m_psi
    return 1.0 / (1.0 / margin + big / (1.0 - norm_b))


@dataclass(frozen=True)
class GronwallEnvelope:
    """Geometric envelope dominating |Phi_i - Psi_i| for i > alpha."""

    alpha: int
    start_index: int
    values: np.ndarray
    persistent_level: float
    decay_base: float

    def __len__(self) -> int:
        return self.values.size

    def indices(self) -> np.ndarray:
        return self.start_index + np.arange(len(self))

    def value_at(self, i: int) -> float:
        k = i - self.start_index
        if not 0 <= k < len(self):
            raise WindowExhaustedError(f"index {i} outside the envelope window")
        return float(self.values[k])


def gronwall_envelope(spec: DiscreteSystemSpec, m_phi: float, m_psi: float, alpha: int,
                      gamma: float, epsilon: float, window: Sequence[int]) -> GronwallEnvelope:
    """Evaluate the explicit geometric bound over ``window`` for indices past alpha.

    The bound combines a persistent level gamma*eps/(1 - |B| - L) with a
    transient proportional to (|B| + L)^(i - alpha).
    """
    norm_b = spectral_norm(spec.matrix)
    lip = spec.nonlinearity.lipschitz
    q = norm_b + lip
    margin = 1.0 - q
    if margin <= 0.0:
        raise AssumptionError("contraction margin is not positive")
    ceiling = gamma_ceiling(spec, m_phi, m_psi, norm_b)
    if not gamma < ceiling:
        raise DomainError(f"gamma {gamma!r} must lie strictly below {ceiling!r}")
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    i0, i1 = int(window[0]), int(window[1])
    start = max(i0, int(alpha) + 1)
    if i1 < start:
        raise DomainError("window lies entirely at or before alpha")
    i = np.arange(start, i1 + 1)
    geo = q ** (i - alpha)
    persistent = gamma * epsilon / margin
    transient = (2.0 * spec.nonlinearity.bound + m_phi + m_psi) / (1.0 - norm_b)
    return GronwallEnvelope(
        alpha=int(alpha),
        start_index=start,
        values=persistent * (1.0 - geo) + transient * geo,
        persistent_level=persistent,
        decay_base=q,
    )


@dataclass(frozen=True)
class DiscreteConvergenceReport:
    """Envelope domination check for the difference of the two forced orbits."""

    envelope_ok: bool
    max_excess: float
    worst_index: int
    crossings: tuple
    alpha: int
    checked_from: int
    checked_to: int


def convergence_check_discrete(phi_orbit: VectorSequence, psi_orbit: VectorSequence,
                               envelope: GronwallEnvelope, alpha: int, slack: float = 1e-9,
                               ladder: Sequence[float] = (1e-3, 1e-4, 1e-5, 1e-6)
                               ) -> DiscreteConvergenceReport:
    """Check |phi_orbit - psi_orbit| <= envelope + slack for i > alpha.

    Also reports the first index past which the running tail sup stays below
    each ladder rung (None when a rung is never reached in the window).
    """
    if not phi_orbit.same_window(psi_orbit):
        raise DomainError("orbits must share one index window")
    diff = np.linalg.norm(phi_orbit.values - psi_orbit.values, axis=1)
    idx = phi_orbit.indices()

    lo = max(envelope.start_index, int(alpha) + 1, phi_orbit.base_index)
    hi = min(envelope.start_index + len(envelope) - 1, phi_orbit.end_index - 1)
    if hi < lo:
        raise DomainError("envelope and orbit windows do not overlap past alpha")
    d = diff[lo - phi_orbit.base_index: hi - phi_orbit.base_index + 1]
    e = envelope.values[lo - envelope.start_index: hi - envelope.start_index + 1]
    excess = d - e
    worst = int(np.argmax(excess))

    suffix = np.maximum.accumulate(diff[::-1])[::-1]
    crossings = []
    for rung in ladder:
        hit = np.nonzero(suffix < rung)[0]
        crossings.append((float(rung), int(idx[hit[0]]) if hit.size else None))

    return DiscreteConvergenceReport(
        envelope_ok=bool(excess.max() <= slack),
        max_excess=float(excess.max()),
        worst_index=int(lo + worst),
        crossings=tuple(crossings),
        alpha=int(alpha),
        checked_from=int(lo),
        checked_to=int(hi),
    )
