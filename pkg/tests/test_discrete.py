import math

import numpy as np
import pytest

from updyn import catalog
from updyn.constructs import VectorSequence, build_sequence_triple
from updyn.discrete import (DiscreteSystemSpec, bounded_orbit, burn_in_length,
                            check_assumptions_B, convergence_check_discrete,
                            gamma_ceiling, gronwall_envelope, iterate,
                            orbit_sum_residual, spectral_norm)
from updyn.errors import AssumptionError, DomainError, WindowExhaustedError
from updyn.nonlinearity import Nonlinearity

SQRT5_OVER_4 = math.sqrt(5.0) / 4.0


def zero_forcing(n=500, p=2, base=0):
    return VectorSequence(base, np.zeros((n, p)))


def constant_forcing(c, n=500, base=0):
    c = np.asarray(c, dtype=float)
    return VectorSequence(base, np.tile(c, (n, 1)))


class TestSpectralNorm:
    def test_demo_matrix(self):
        assert spectral_norm(catalog.discrete_demo_matrix()) == pytest.approx(
            SQRT5_OVER_4, abs=1e-12)

    def test_identity(self):
        assert spectral_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        assert spectral_norm(np.diag([0.3, -0.7])) == pytest.approx(0.7, abs=1e-12)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0

    def test_against_svd_oracle(self):
        rng = np.random.default_rng(23)
        for n in range(2, 9):
            for _ in range(8):
                b = rng.standard_normal((n, n))
                expected = np.linalg.svd(b, compute_uv=False)[0]
                assert spectral_norm(b) == pytest.approx(expected, abs=1e-10 * max(1, expected))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            spectral_norm(np.array([[1.0, np.inf], [0.0, 1.0]]))


class TestAssumptions:
    def test_demo_margin(self):
        spec = DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                  catalog.discrete_demo_nonlinearity(), zero_forcing())
        report = check_assumptions_B(spec)
        assert report.all_pass
        assert report.margin == pytest.approx(1.0 - SQRT5_OVER_4 - 0.2, abs=1e-12)

    def test_margin_without_nonlinearity(self):
        spec = DiscreteSystemSpec(0.5 * np.eye(2), Nonlinearity.zero(2), zero_forcing())
        report = check_assumptions_B(spec)
        assert report.margin == pytest.approx(0.5, abs=1e-12)

    def test_large_lipschitz_fails(self):
        strong = Nonlinearity(lambda w: 0.5 * np.sin(w), bound=1.0, lipschitz=0.5)
        spec = DiscreteSystemSpec(catalog.discrete_demo_matrix(), strong, zero_forcing())
        report = check_assumptions_B(spec)
        assert report.margin < 0.0
        assert not report.b3_pass


class TestIterate:
    def test_zero_matrix_reproduces_forcing(self):
        rng = np.random.default_rng(1)
        forcing = VectorSequence(0, rng.uniform(-1, 1, (50, 2)))
        spec = DiscreteSystemSpec(np.zeros((2, 2)), Nonlinearity.zero(2), forcing)
        orbit = iterate(spec, np.array([0.4, -0.1]), 30)
        np.testing.assert_array_equal(orbit.values[1:], forcing.values[:30])

    def test_constant_forcing_converges_to_linear_solve(self):
        b = catalog.discrete_demo_matrix()
        c = np.array([0.7, -0.2])
        spec = DiscreteSystemSpec(b, Nonlinearity.zero(2), constant_forcing(c))
        orbit = iterate(spec, np.array([5.0, 5.0]), 200)
        limit = np.linalg.solve(np.eye(2) - b, c)
        assert np.linalg.norm(orbit.value_at(200) - limit) <= 1e-12

    def test_unforced_decay_bound(self):
        b = catalog.discrete_demo_matrix()
        spec = DiscreteSystemSpec(b, Nonlinearity.zero(2), zero_forcing())
        w0 = np.array([1.0, -2.0])
        orbit = iterate(spec, w0, 60)
        q = spectral_norm(b)
        norms = orbit.norms()
        for i in range(61):
            assert norms[i] <= q ** i * np.linalg.norm(w0) * (1.0 + 1e-12)

    def test_forcing_window_exhaustion(self):
        spec = DiscreteSystemSpec(np.eye(2) * 0.5, Nonlinearity.zero(2),
                                  zero_forcing(n=10))
        with pytest.raises(WindowExhaustedError):
            iterate(spec, np.zeros(2), 11)

    def test_contraction_between_orbits(self):
        spec = DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                  catalog.discrete_demo_nonlinearity(),
                                  constant_forcing([0.3, 0.1], n=150))
        rng = np.random.default_rng(6)
        w0, v0 = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        a = iterate(spec, w0, 100)
        b = iterate(spec, v0, 100)
        q = SQRT5_OVER_4 + 0.2
        d0 = np.linalg.norm(w0 - v0)
        gap = np.linalg.norm(a.values - b.values, axis=1)
        for i in range(101):
            assert gap[i] <= q ** i * d0 * (1.0 + 1e-9) + 1e-15


class TestBoundedOrbit:
    def test_zero_system(self):
        spec = DiscreteSystemSpec(0.5 * np.eye(2), Nonlinearity.zero(2),
                                  zero_forcing(n=300, base=-200))
        orbit = bounded_orbit(spec, (0, 50))
        assert orbit.sup_norm() == 0.0

    def test_sup_bound(self, discrete_demo):
        d = discrete_demo
        bound = (d.spec_combined.nonlinearity.bound + d.m_phi) / (1.0 - d.norm_b)
        assert d.phi_orbit.sup_norm() <= bound + 1e-9

    def test_start_state_independence(self):
        triple = build_sequence_triple(catalog.source_orbit(length=400))
        spec = DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                  catalog.discrete_demo_nonlinearity(), triple.phi)
        tol = 1e-9
        burn = burn_in_length(spec, tol)
        rng = np.random.default_rng(12)
        w0 = rng.uniform(-1, 1, 2)
        w0 /= max(1.0, np.linalg.norm(w0))
        a = iterate(spec, np.zeros(2), burn + 100)
        b = iterate(spec, w0, burn + 100)
        gap = np.linalg.norm(a.values[burn:] - b.values[burn:], axis=1)
        assert gap.max() < tol

    def test_recurrence_residual(self, discrete_demo):
        d = discrete_demo
        w = d.phi_orbit.values
        base_off = d.phi_orbit.base_index - d.spec_combined.forcing.base_index
        phi = d.spec_combined.forcing.values[base_off:base_off + len(w) - 1]
        pred = w[:-1] @ d.spec_combined.matrix.T + d.spec_combined.nonlinearity(w[:-1]) + phi
        assert np.abs(w[1:] - pred).max() <= 4 * np.finfo(float).eps * 10

    def test_margin_required(self):
        strong = Nonlinearity(lambda w: 0.9 * np.tanh(w), bound=2.0, lipschitz=0.9)
        spec = DiscreteSystemSpec(catalog.discrete_demo_matrix(), strong, zero_forcing())
        with pytest.raises(AssumptionError):
            bounded_orbit(spec, (0, 10))

    def test_sum_representation_cross_check(self, discrete_demo):
        gap = orbit_sum_residual(discrete_demo.spec_combined, discrete_demo.phi_orbit,
                                 tol=1e-10)
        assert gap <= 1e-9


class TestGronwallEnvelope:
    def _spec(self):
        triple = build_sequence_triple(catalog.source_orbit(length=200))
        return DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                  catalog.discrete_demo_nonlinearity(), triple.phi)

    def test_asymptotic_level(self):
        spec = self._spec()
        gamma, eps = 0.01, 1e-3
        env = gronwall_envelope(spec, 5.0, 1.0, 10, gamma, eps, (10, 190))
        q = spectral_norm(spec.matrix) + 0.2
        level = gamma * eps / (1.0 - q)
        assert env.values[-1] == pytest.approx(level, rel=1e-6)
        assert env.persistent_level == pytest.approx(level, rel=1e-12)

    def test_first_step_formula(self):
        spec = self._spec()
        gamma, eps, alpha = 0.01, 1e-3, 10
        env = gronwall_envelope(spec, 5.0, 1.0, alpha, gamma, eps, (0, 100))
        norm_b = spectral_norm(spec.matrix)
        q = norm_b + 0.2
        big = (2.0 * spec.nonlinearity.bound + 5.0 + 1.0) / (1.0 - norm_b)
        expected = gamma * eps / (1.0 - q) * (1.0 - q) + big * q
        assert env.value_at(alpha + 1) == pytest.approx(expected, rel=1e-12)

    def test_crossing_time_prediction(self):
        spec = self._spec()
        gamma, eps, alpha = 0.01, 1e-3, 0
        env = gronwall_envelope(spec, 5.0, 1.0, alpha, gamma, eps, (0, 150))
        q = spectral_norm(spec.matrix) + 0.2
        predicted = math.log(1.0 / (gamma * eps)) / math.log(1.0 / q)
        for i in range(int(alpha + predicted) + 1, env.start_index + len(env)):
            assert env.value_at(i) < eps

    def test_gamma_ceiling_enforced(self):
        spec = self._spec()
        ceiling = gamma_ceiling(spec, 5.0, 1.0)
        with pytest.raises(DomainError):
            gronwall_envelope(spec, 5.0, 1.0, 10, ceiling, 1e-3, (10, 50))


class TestConvergenceCheckDiscrete:
    def test_identical_orbits(self, discrete_demo):
        d = discrete_demo
        report = convergence_check_discrete(d.phi_orbit, d.phi_orbit, d.envelope, d.alpha)
        assert report.envelope_ok
        assert all(where == d.phi_orbit.base_index for _, where in report.crossings)

    def test_demo_envelope_dominates(self, discrete_demo):
        assert discrete_demo.report.envelope_ok
        assert discrete_demo.report.max_excess <= 1e-9

    def test_spiked_tail_recovers(self):
        # a forcing difference spike past alpha re-fits alpha and still obeys
        # the envelope once the spike has passed
        orbit = catalog.source_orbit(length=400)
        triple = build_sequence_triple(orbit)
        psi = triple.psi
        spike_at = 150
        theta = np.zeros_like(psi.values)
        theta[spike_at - psi.base_index] = [0.5, 0.0]
        phi = VectorSequence(psi.base_index, psi.values + theta)
        spec_phi = DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                      catalog.discrete_demo_nonlinearity(), phi)
        spec_psi = DiscreteSystemSpec(catalog.discrete_demo_matrix(),
                                      catalog.discrete_demo_nonlinearity(), psi)
        a = bounded_orbit(spec_phi, (100, 398), tol=1e-10)
        b = bounded_orbit(spec_psi, (100, 398), tol=1e-10)
        m_phi, m_psi = phi.sup_norm(), psi.sup_norm()
        gamma = 0.5 * gamma_ceiling(spec_phi, m_phi, m_psi)
        eps = 1e-6
        alpha = spike_at + 1
        env = gronwall_envelope(spec_phi, m_phi, m_psi, alpha, gamma, eps, (100, 398))
        report = convergence_check_discrete(a, b, env, alpha)
        assert report.envelope_ok
