"""Behavior algebra: conversions, inequalities, channel, canonical boxes."""

import math
from itertools import product

import numpy as np
import pytest

from etacert.behavior import (
    Behavior,
    CHSH_SATURATING_LD,
    Correlators,
    DomainError,
    NoiseParams,
    NsDecomposition,
    SignalingError,
    apply_detection_noise,
    behavior_from_correlators,
    check_no_signaling,
    chsh_value,
    correlators_from_behavior,
    eberhard_coefficients,
    eberhard_from_chsh,
    eberhard_value,
    ld_distribution,
    ns_mixture,
    observed_eberhard,
    pr_box,
    uniform_behavior,
)
from etacert.validation import random_noise_params, random_ns_behaviors

Q_PR = math.sqrt(2.0) - 1.0


class TestCorrelators:
    def test_pr_box(self):
        c = correlators_from_behavior(pr_box())
        assert np.allclose(c.A, 0.0) and np.allclose(c.B, 0.0)
        assert np.allclose(c.AB, [[1.0, 1.0], [1.0, -1.0]])

    def test_uniform_box_all_zero(self):
        c = correlators_from_behavior(uniform_behavior())
        assert np.all(c.A == 0.0) and np.all(c.B == 0.0) and np.all(c.AB == 0.0)

    def test_deterministic_all_plus(self):
        c = correlators_from_behavior(ld_distribution((0, 0, 0, 0)))
        assert np.all(c.A == 1.0) and np.all(c.B == 1.0) and np.all(c.AB == 1.0)

    def test_signaling_input_rejected(self):
        p = uniform_behavior().p.copy()
        p[:, :, 0, 0] = [[0.4, 0.2], [0.1, 0.3]]  # P(+|x0) = 0.6 under y0, 0.5 under y1
        with pytest.raises(SignalingError) as err:
            correlators_from_behavior(Behavior(p))
        assert err.value.max_violation == pytest.approx(0.1, abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        for table in random_ns_behaviors(300, rng):
            b = Behavior(table)
            back = behavior_from_correlators(correlators_from_behavior(b))
            assert np.max(np.abs(back.p - b.p)) <= 1e-14

    def test_reconstruction_flags_negative_entries(self):
        c = Correlators(A=[1.0, 0.0], B=[1.0, 0.0], AB=[[-1.0, 0.0], [0.0, 0.0]])
        b = behavior_from_correlators(c)
        assert b.p[0, 0, 0, 0] == pytest.approx(0.5)
        assert not b.valid
        assert b.negativity() > 1e-12


class TestInequalities:
    def test_chsh_pr_and_uniform(self):
        assert chsh_value(pr_box()) == pytest.approx(4.0, abs=1e-15)
        assert chsh_value(uniform_behavior()) == pytest.approx(0.0, abs=1e-15)

    def test_eberhard_pr_and_uniform(self):
        assert eberhard_value(pr_box()) == pytest.approx(0.5, abs=1e-15)
        assert eberhard_value(uniform_behavior()) == pytest.approx(-0.5, abs=1e-15)

    def test_equivalence_map(self):
        assert eberhard_from_chsh(2.0) == pytest.approx(0.0)
        assert eberhard_from_chsh(2.0 * math.sqrt(2.0)) == pytest.approx(
            0.2071067811865476, abs=1e-15
        )
        assert eberhard_from_chsh(4.0) == pytest.approx(0.5)

    def test_all_ld_points(self):
        values = {}
        for assignment in product((0, 1), repeat=4):
            values[assignment] = eberhard_value(ld_distribution(assignment))
        assert max(values.values()) <= 0.0
        saturating = {a for a, v in values.items() if v == 0.0}
        assert saturating == set(CHSH_SATURATING_LD.values())
        for assignment in saturating:
            assert chsh_value(ld_distribution(assignment)) == pytest.approx(2.0)

    def test_no_signaling_report(self):
        assert check_no_signaling(pr_box()).passed
        p = uniform_behavior().p.copy()
        p[:, :, 0, 0] = [[0.4, 0.2], [0.1, 0.3]]
        report = check_no_signaling(Behavior(p))
        assert not report.passed
        assert report.max_violation == pytest.approx(0.1, abs=1e-12)


class TestNoiseChannel:
    def test_identity_noise(self):
        b = pr_box()
        out = apply_detection_noise(b, NoiseParams.symmetric(1.0, 0.0))
        assert np.array_equal(out.p, b.p)

    def test_symmetric_efficiency_polynomial(self):
        rng = np.random.default_rng(5)
        for table in random_ns_behaviors(100, rng):
            b = Behavior(table)
            coeffs = eberhard_coefficients(b)
            eta = rng.uniform(0.0, 1.0)
            noisy = apply_detection_noise(b, NoiseParams.symmetric(eta))
            expected = coeffs.K * eta * eta - coeffs.L * eta
            assert eberhard_value(noisy) == pytest.approx(expected, abs=1e-12)

    def test_symmetric_dark_count_polynomial(self):
        rng = np.random.default_rng(6)
        for table in random_ns_behaviors(100, rng):
            b = Behavior(table)
            coeffs = eberhard_coefficients(b)
            eta, xi = rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.5)
            noisy = apply_detection_noise(b, NoiseParams.symmetric(eta, xi))
            assert eberhard_value(noisy) == pytest.approx(
                coeffs.symmetric_value(eta, xi), abs=1e-12
            )

    def test_channel_preserves_structure(self):
        rng = np.random.default_rng(7)
        for table in random_ns_behaviors(200, rng):
            out = apply_detection_noise(Behavior(table), random_noise_params(rng))
            assert out.valid
            assert check_no_signaling(out, 1e-10).passed

    def test_observed_eberhard_paths(self):
        rng = np.random.default_rng(8)
        for table in random_ns_behaviors(50, rng):
            b = Behavior(table)
            coeffs = eberhard_coefficients(b)
            for kind in ("symmetric", "party", "general"):
                n = random_noise_params(rng, kind)
                direct = eberhard_value(apply_detection_noise(b, n))
                assert observed_eberhard(coeffs, n) == pytest.approx(direct, abs=1e-12)

    def test_unit_efficiency_recovers_violation(self):
        b = pr_box()
        coeffs = eberhard_coefficients(b)
        assert observed_eberhard(coeffs, NoiseParams.symmetric(1.0)) == pytest.approx(
            eberhard_value(b)
        )

    def test_pr_coefficients(self):
        coeffs = eberhard_coefficients(pr_box())
        assert coeffs.K == pytest.approx(1.5)
        assert coeffs.L == pytest.approx(1.0)
        assert coeffs.symmetric_value(2.0 / 3.0) == pytest.approx(0.0, abs=1e-15)

    def test_all_zero_point_has_no_coefficients(self):
        coeffs = eberhard_coefficients(ld_distribution((1, 1, 1, 1)))
        assert coeffs.K == 0.0 and coeffs.L == 0.0

    def test_setting_dependent_requires_source(self):
        coeffs = eberhard_coefficients(pr_box())
        bare = type(coeffs)(coeffs.K, coeffs.Lp, coeffs.Lpp, coeffs.M, coeffs.N, coeffs.O)
        lopsided = NoiseParams(eta_A=(0.9, 0.5), eta_B=(0.8, 0.8))
        with pytest.raises(DomainError):
            observed_eberhard(bare, lopsided)


class TestMixtures:
    def test_pure_pr(self):
        mix = ns_mixture(NsDecomposition(p_pr=1.0))
        assert np.array_equal(mix.p, pr_box().p)

    def test_pure_d4(self):
        mix = ns_mixture(NsDecomposition(p_pr=0.0, p4=1.0))
        assert np.array_equal(mix.p, ld_distribution((1, 1, 1, 1)).p)

    def test_tsirelson_weight(self):
        mix = ns_mixture(NsDecomposition(p_pr=Q_PR, p4=1.0 - Q_PR))
        assert eberhard_value(mix) == pytest.approx(Q_PR / 2.0, abs=1e-15)
        assert chsh_value(mix) == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)

    def test_violation_is_half_pr_weight(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            p_pr = rng.uniform(0.0, 1.0)
            rest = rng.dirichlet(np.ones(8)) * (1.0 - p_pr)
            d = NsDecomposition(p_pr, *rest)
            assert eberhard_value(ns_mixture(d)) == pytest.approx(p_pr / 2.0, abs=1e-13)

    def test_invalid_weights_rejected(self):
        with pytest.raises(DomainError):
            NsDecomposition(p_pr=0.5, p1=0.6)
        with pytest.raises(DomainError):
            NsDecomposition(p_pr=-0.1, p1=1.1)


class TestSerialization:
    def test_json_round_trip(self):
        b = pr_box()
        again = Behavior.from_json(b.to_json())
        assert np.array_equal(again.p, b.p)
        assert again.label == "PR"

    def test_table_layout(self):
        # rows (x0y0, x0y1, x1y0, x1y1); columns (++, +0, 0+, 00)
        table = pr_box().to_table()
        assert table[0].tolist() == [0.5, 0.0, 0.0, 0.5]
        assert table[3].tolist() == [0.0, 0.5, 0.5, 0.0]

    def test_bad_shape_rejected(self):
        with pytest.raises(DomainError):
            Behavior(np.zeros((2, 2, 2)))
        with pytest.raises(DomainError):
            Behavior.from_table(np.zeros((4, 3)))
