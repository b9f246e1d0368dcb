"""Closed-form bound, extremal mixture, and the domination chain."""

import numpy as np
import pytest

from etacert.analytic import (
    Q_PR,
    eta_ns,
    noisy_eberhard_ns_mixture,
    p_ns,
    verify_proposition1,
)
from etacert.behavior import (
    DomainError,
    NoiseParams,
    NsDecomposition,
    apply_detection_noise,
    eberhard_value,
    ns_mixture,
)
from etacert.validation import proposition1_monte_carlo, random_tsirelson_decompositions


class TestClosedForm:
    def test_endpoint_is_exactly_one(self):
        assert eta_ns(Q_PR / 2.0) == 1.0

    def test_threshold_limit(self):
        assert eta_ns(1e-15) == pytest.approx(2.0 / 3.0, abs=1e-14)

    def test_frozen_root_finder_values(self):
        # frozen from solving the quadratic with scipy.optimize.brentq
        assert eta_ns(0.1) == pytest.approx(0.8549257814534956, abs=1e-12)
        assert eta_ns(0.006951) == pytest.approx(0.6830454674653192, abs=1e-12)

    def test_quadratic_residual(self):
        for e in np.linspace(1e-5, Q_PR / 2.0, 500):
            eta = eta_ns(float(e))
            assert abs(1.5 * Q_PR * eta * eta - Q_PR * eta - e) <= 1e-14

    def test_strictly_increasing(self):
        grid = np.linspace(1e-6, Q_PR / 2.0, 400)
        values = [eta_ns(float(e)) for e in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            eta_ns(0.0)
        with pytest.raises(DomainError):
            eta_ns(0.25)


class TestExtremalMixture:
    def test_single_weight(self):
        b = p_ns(1.0 - Q_PR, 0.0, 0.0)
        assert eberhard_value(b) == pytest.approx(Q_PR / 2.0, abs=1e-14)

    def test_split_invariance(self):
        third = (1.0 - Q_PR) / 3.0
        b1 = p_ns(1.0 - Q_PR, 0.0, 0.0)
        b2 = p_ns(third, third, third)
        for eta in (0.7, 0.85, 1.0):
            n = NoiseParams.symmetric(eta)
            assert eberhard_value(apply_detection_noise(b1, n)) == pytest.approx(
                eberhard_value(apply_detection_noise(b2, n)), abs=1e-14
            )

    def test_noisy_curve(self):
        b = p_ns(1.0 - Q_PR, 0.0, 0.0)
        for eta in (0.7, 0.8, 0.95):
            noisy = eberhard_value(apply_detection_noise(b, NoiseParams.symmetric(eta)))
            assert noisy == pytest.approx(Q_PR * (1.5 * eta * eta - eta), abs=1e-14)

    def test_weight_validation(self):
        with pytest.raises(DomainError):
            p_ns(0.5, 0.5, 0.5)
        with pytest.raises(DomainError):
            p_ns(-0.1, 0.4, 1.0 - Q_PR - 0.3)


class TestMixtureCurve:
    def test_pure_pr_threshold(self):
        d = NsDecomposition(p_pr=1.0)
        assert noisy_eberhard_ns_mixture(d, 2.0 / 3.0) == pytest.approx(0.0, abs=1e-15)

    def test_unit_efficiency_gives_half_weight(self):
        rng = np.random.default_rng(41)
        for d in random_tsirelson_decompositions(50, rng):
            assert noisy_eberhard_ns_mixture(d, 1.0) == pytest.approx(
                d.p_pr / 2.0, abs=1e-14
            )

    def test_alpha_strictly_hurts(self):
        lean = NsDecomposition(p_pr=0.3, p4=0.7)
        heavy = NsDecomposition(p_pr=0.3, p1=0.35, p4=0.35)
        for eta in (0.7, 0.8, 0.9):
            assert noisy_eberhard_ns_mixture(heavy, eta) < noisy_eberhard_ns_mixture(
                lean, eta
            )

    def test_matches_channel(self):
        rng = np.random.default_rng(42)
        for d in random_tsirelson_decompositions(100, rng):
            eta = rng.uniform(0.0, 1.0)
            direct = eberhard_value(
                apply_detection_noise(ns_mixture(d), NoiseParams.symmetric(eta))
            )
            assert noisy_eberhard_ns_mixture(d, eta) == pytest.approx(direct, abs=1e-12)


class TestProposition:
    def test_tight_case(self):
        d = NsDecomposition(p_pr=Q_PR, p4=1.0 - Q_PR)
        for eta in (0.7, 0.85, 1.0):
            report = verify_proposition1(d, eta)
            assert report.passed
            assert report.eta_ns_value == pytest.approx(eta, abs=1e-9)

    def test_alpha_gives_strict_slack(self):
        d = NsDecomposition(p_pr=0.35, p1=0.3, p4=0.35)
        eta = 0.95
        report = verify_proposition1(d, eta)
        assert report.passed
        assert report.eta_ns_value < eta - 1e-4

    def test_precondition_violation_reported_not_raised(self):
        # PR weight above the quantum ceiling breaks a link, not the call
        d = NsDecomposition(p_pr=0.6, p4=0.4)
        report = verify_proposition1(d, 0.95)
        failed = {name for name, ok in report.links if not ok}
        assert "PR weight within q_PR" in failed

    def test_monte_carlo(self):
        rng = np.random.default_rng(43)
        counterexamples, worst = proposition1_monte_carlo(20_000, rng)
        assert counterexamples == 0
        assert worst <= 1e-12
