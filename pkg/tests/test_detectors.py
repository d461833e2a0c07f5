import math

import numpy as np
import pytest

from updyn import catalog
from updyn.chaos import GridFunction, logistic_step
from updyn.constructs import VectorSequence, build_sequence_triple
from updyn.detectors import (collect_evidence, decay_test, evidence_for_function,
                             find_near_returns, find_separations, sensitivity_demo,
                             separation_at, verify_evidence)
from updyn.discrete import DiscreteSystemSpec
from updyn.errors import DomainError, ResolutionError
from updyn.nonlinearity import Nonlinearity


def constant_seq(n=200, value=(0.3, -0.4)):
    return VectorSequence(0, np.tile(np.asarray(value, dtype=float), (n, 1)))


class TestNearReturns:
    def test_constant_sequence_returns_immediately(self):
        seq = constant_seq()
        found = find_near_returns(seq, 10, (0.2, 0.1, 0.05))
        assert [r.shift for r in found] == [1, 2, 3]
        assert all(r.achieved == 0.0 for r in found)

    def test_period_two_needs_even_shifts(self):
        vals = np.array([[0.0], [1.0]] * 100)
        seq = VectorSequence(0, vals)
        found = find_near_returns(seq, 10, (0.5, 0.3, 0.1))
        assert all(r.found and r.shift % 2 == 0 for r in found)

    def test_logistic_window_finds_rung(self, sequence_demo):
        # the chaotic source re-approaches its own 21-step window within the
        # scanned horizon at closeness 0.05 for the default seed
        shifts = {r.target: r.shift for r in sequence_demo.evidence.return_times}
        assert shifts[0.05] is not None

    def test_ladder_must_decrease(self):
        with pytest.raises(DomainError):
            find_near_returns(constant_seq(), 5, (0.1, 0.2))

    def test_unreachable_rung_reported_not_found(self):
        rng = np.random.default_rng(0)
        seq = VectorSequence(0, rng.uniform(0, 1, (300, 1)))
        found = find_near_returns(seq, 20, (1e-9,))
        assert found[0].shift is None


class TestSeparations:
    def test_constant_sequence_never_separates(self):
        events = find_separations(constant_seq(), [1, 2, 5], epsilon0=0.1)
        assert events == []

    def test_alternating_signs_separate_at_origin(self):
        vals = np.array([[1.0], [-1.0]] * 50)
        seq = VectorSequence(0, vals)
        events = find_separations(seq, [1, 3], epsilon0=2.0)
        assert [(e.shift, e.offset, e.separation) for e in events] == [
            (1, 0, 2.0), (3, 0, 2.0)]

    def test_logistic_separations_found(self, sequence_demo):
        assert len(sequence_demo.evidence.separation_times) > 0
        for event in sequence_demo.evidence.separation_times:
            assert event.separation >= 0.3

    def test_reevaluation_matches(self, sequence_demo):
        psi = sequence_demo.triple.psi
        for event in sequence_demo.evidence.separation_times:
            assert separation_at(psi, event.shift, event.offset) == event.separation


class TestFunctionEvidence:
    def test_constant_function_returns_everywhere(self):
        grid = GridFunction(0.0, 0.05, np.tile([0.5, 0.5], (400, 1)))
        ev = evidence_for_function(grid, (0.0, 2.0), ladder=(0.2, 0.1),
                                   epsilon0=0.1, delta=0.2)
        assert [r.shift for r in ev.return_times] == [1, 2]
        assert ev.separation_times == ()

    def test_interval_width_arithmetic(self):
        grid = GridFunction(0.0, 0.0125, np.zeros((800, 1)))
        ev = evidence_for_function(grid, (0.0, 1.0), ladder=(0.1,),
                                   epsilon0=0.05, delta=0.05)
        nodes = 2 * round(ev.interval_halfwidth / ev.time_step) + 1
        assert nodes == 9

    def test_resolution_guard(self):
        grid = GridFunction(0.0, 0.05, np.zeros((100, 1)))
        with pytest.raises(ResolutionError):
            evidence_for_function(grid, (0.0, 1.0), delta=0.1)

    def test_demo_evidence_verified(self):
        demo = catalog.run_function_demo(t_hi=120.0)
        assert demo.evidence_verified
        assert verify_evidence(demo.triple.phi, demo.evidence)


class TestDecay:
    def test_sequence_tail_rung(self):
        triple = build_sequence_triple(catalog.source_orbit(length=100))
        report = decay_test(triple.theta, (0.5, 0.02))
        assert report.crossing(0.02) == 10

    def test_function_tail_rung(self):
        from updyn.constructs import function_tail
        times = -5.0 + 0.05 * np.arange(701)
        grid = GridFunction(-5.0, 0.05, function_tail(times))
        report = decay_test(grid, (0.5, 1e-6))
        assert 14.5 <= report.crossing(1e-6) <= 15.5

    def test_zero_tail_crosses_at_start(self):
        seq = VectorSequence(5, np.zeros((40, 2)))
        report = decay_test(seq, (0.1, 0.01))
        assert all(where == 5 for _, where in report.ladder)

    def test_profile_monotone(self):
        triple = build_sequence_triple(catalog.source_orbit(length=500))
        report = decay_test(triple.theta, (0.5, 0.01))
        profile = np.array(report.monotone_tail_sup)
        assert np.all(np.diff(profile) <= 1e-15)

    def test_unreached_rung_is_none(self):
        seq = VectorSequence(0, np.ones((50, 1)))
        report = decay_test(seq, (0.5,))
        assert report.crossing(0.5) is None


class TestSensitivity:
    def test_logistic_map_diverges(self):
        report = sensitivity_demo(lambda x: logistic_step(x, 3.91), 0.41,
                                  perturbation=1e-10, threshold=0.3)
        assert report.diverged
        assert report.index is not None and report.index <= 200
        assert report.slope is not None and report.slope > 0.1

    def test_stable_linear_map_never_diverges(self):
        forcing = VectorSequence(0, np.zeros((500, 2)))
        spec = DiscreteSystemSpec(0.5 * np.eye(2), Nonlinearity.zero(2), forcing)
        report = sensitivity_demo(spec, np.array([0.4, -0.2]),
                                  perturbation=1e-6, threshold=0.1)
        assert not report.diverged
        assert report.index is None

    def test_zero_perturbation_never_diverges(self):
        report = sensitivity_demo(lambda x: logistic_step(x, 3.91), 0.41,
                                  perturbation=0.0, threshold=0.3, horizon=2000)
        assert not report.diverged

    def test_perturbation_below_threshold_required(self):
        with pytest.raises(DomainError):
            sensitivity_demo(lambda x: x, 0.5, perturbation=0.5, threshold=0.3)


class TestEvidenceConsistency:
    def test_sequence_demo_reverification(self, sequence_demo):
        assert sequence_demo.evidence_verified
        assert verify_evidence(sequence_demo.triple.psi, sequence_demo.evidence)

    def test_manual_recheck_of_returns(self, sequence_demo):
        psi = sequence_demo.triple.psi
        for ret in sequence_demo.evidence.return_times:
            if not ret.found:
                continue
            worst = max(float(np.linalg.norm(psi.values[i + ret.shift] - psi.values[i]))
                        for i in range(ret.window + 1))
            assert worst < ret.target
            assert worst == ret.achieved

    def test_tampered_evidence_fails(self, sequence_demo):
        import dataclasses
        ev = sequence_demo.evidence
        if not ev.separation_times:
            pytest.skip("no separations recorded")
        bad_sep = dataclasses.replace(ev.separation_times[0],
                                      separation=ev.separation_times[0].separation + 1.0)
        bad = dataclasses.replace(ev, separation_times=(bad_sep,) + ev.separation_times[1:])
        assert not verify_evidence(sequence_demo.triple.psi, bad)
