"""Tests for loss values, identities, and analytic gradients."""

import math

import numpy as np
import pytest

from imbloss.losses import (
    DIFFERENTIABLE_FAMILIES,
    ClassStats,
    LossSpec,
    PriorStats,
    default_gca_margins,
    eval_balanced_loss,
    eval_baseline,
    eval_csmax,
    eval_gca,
    eval_gla,
    eval_grad,
    eval_loss,
    psi_q,
)
from imbloss.numerics import finite_diff_gradient, gradient_rel_error


def random_spec(rng, family, n):
    """A valid LossSpec with hyperparameters drawn from sane ranges."""
    if family == "LA":
        return LossSpec("LA", tau=float(rng.uniform(0.3, 2.5)))
    if family == "EQUAL":
        return LossSpec("EQUAL", eq_p=float(rng.uniform(0.1, 0.9)),
                        eq_lambda=float(rng.uniform(0.05, 0.6)))
    if family == "CB":
        return LossSpec("CB", gamma=float(rng.uniform(0.1, 0.95)))
    if family == "FOCAL":
        return LossSpec("FOCAL", gamma=float(rng.choice([0.0, 0.5, 2.0, 5.0])))
    if family == "LDAM":
        return LossSpec("LDAM", cap_c=float(rng.uniform(0.2, 2.0)))
    if family in ("GCE", "GLA"):
        return LossSpec(family, q=float(rng.choice([0.0, 0.3, 0.7])))
    if family == "GCA":
        return LossSpec("GCA", q=float(rng.choice([0.0, 0.3, 0.7])),
                        margins=tuple(rng.uniform(0.3, 2.0, n)))
    if family == "CSMAX":
        return LossSpec("CSMAX", rho_margin=float(rng.uniform(0.3, 2.0)),
                        psi_tau=float(rng.choice([0.0, 0.5, 1.0, 2.0])))
    return LossSpec(family)


class TestClassStats:
    def test_derived_fields(self):
        stats = ClassStats([6, 2, 2])
        np.testing.assert_allclose(stats.priors, [0.6, 0.2, 0.2])
        np.testing.assert_allclose(stats.inv_priors, [10 / 6, 5.0, 5.0])
        assert stats.p_min == pytest.approx(0.2)
        assert stats.total == 10

    def test_from_labels(self):
        stats = ClassStats.from_labels([1, 1, 2, 3, 1], n=3)
        np.testing.assert_array_equal(stats.counts, [3, 1, 1])

    def test_rejects_empty_class(self):
        with pytest.raises(ValueError):
            ClassStats([3, 0])
        with pytest.raises(ValueError):
            ClassStats.from_labels([1, 1], n=2)


class TestLossSpecValidation:
    def test_required_hyperparameters(self):
        with pytest.raises(ValueError):
            LossSpec("LA")
        with pytest.raises(ValueError):
            LossSpec("GCA", q=0.1)

    def test_extraneous_hyperparameters_rejected(self):
        with pytest.raises(ValueError):
            LossSpec("CE", tau=1.0)
        with pytest.raises(ValueError):
            LossSpec("GLA", q=0.1, gamma=2.0)

    def test_range_checks(self):
        with pytest.raises(ValueError):
            LossSpec("GLA", q=1.0)
        with pytest.raises(ValueError):
            LossSpec("CB", gamma=1.5)
        with pytest.raises(ValueError):
            LossSpec("GCA", q=0.0, margins=(1.0, -1.0))
        with pytest.raises(ValueError):
            LossSpec("CSMAX", rho_margin=0.0, psi_tau=1.0)


class TestPsiQ:
    def test_log_case_at_one(self):
        assert psi_q(1.0, 0.0) == 0.0

    def test_closed_form(self):
        assert psi_q(0.25, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_mean_absolute_error_case(self):
        assert psi_q(0.3, 1.0) == pytest.approx(0.7, abs=1e-15)

    def test_saturates_at_zero(self):
        assert psi_q(0.0, 0.0) == pytest.approx(-math.log(1e-300))

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            psi_q(-0.1, 0.5)
        with pytest.raises(ValueError):
            psi_q(0.0, 0.5)
        with pytest.raises(ValueError):
            psi_q(0.5, -1.0)


class TestGla:
    def test_uniform_priors_reduces_to_ce(self):
        stats = ClassStats([5, 5])
        assert eval_gla([0.0, 0.0], 1, stats, 0.0) == pytest.approx(math.log(2))

    def test_constant_scores_recover_priors(self):
        stats = ClassStats([8, 2])
        assert eval_gla([0.0, 0.0], 2, stats, 0.0) == pytest.approx(
            -math.log(0.2), abs=1e-12)

    def test_q0_equals_la_tau1_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            stats = ClassStats(rng.integers(1, 40, n))
            scores = rng.normal(0, 3, n)
            label = int(rng.integers(1, n + 1))
            gla = eval_gla(scores, label, stats, 0.0)
            la = eval_baseline(LossSpec("LA", tau=1.0), scores, label, stats)
            assert gla == la  # bit-exact: identical code path

    def test_uniform_priors_equal_gce_all_q(self):
        rng = np.random.default_rng(8)
        for q in (0.0, 0.2, 0.5, 0.9):
            for _ in range(50):
                n = int(rng.integers(2, 6))
                stats = ClassStats(np.full(n, 7))
                scores = rng.normal(0, 3, n)
                label = int(rng.integers(1, n + 1))
                gce = eval_loss(LossSpec("GCE", q=q), scores, label, stats)
                assert eval_gla(scores, label, stats, q) == pytest.approx(
                    gce, abs=1e-12)

    def test_rejects_bad_q(self):
        stats = ClassStats([1, 1])
        with pytest.raises(ValueError):
            eval_gla([0.0, 0.0], 1, stats, 1.0)


class TestGca:
    def test_weighted_ce_value(self):
        stats = ClassStats([5, 5])
        value = eval_gca([0.0, 0.0], 1, stats, 0.0, [1.0, 1.0])
        assert value == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_q0_unit_margins_equals_wce_exactly(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            n = int(rng.integers(2, 6))
            stats = ClassStats(rng.integers(1, 40, n))
            scores = rng.normal(0, 3, n)
            label = int(rng.integers(1, n + 1))
            gca = eval_gca(scores, label, stats, 0.0, np.ones(n))
            wce = eval_baseline(LossSpec("WCE"), scores, label, stats)
            assert gca == wce  # bit-exact: identical code path

    def test_joint_margin_score_scaling(self):
        rng = np.random.default_rng(10)
        stats = ClassStats([3, 9, 4])
        for _ in range(50):
            scores = rng.normal(0, 2, 3)
            margins = rng.uniform(0.2, 3.0, 3)
            label = int(rng.integers(1, 4))
            c = float(rng.uniform(0.5, 4.0))
            a = eval_gca(scores, label, stats, 0.4, margins)
            b = eval_gca(scores / c, label, stats, 0.4, margins / c)
            assert a == pytest.approx(b, rel=1e-12)

    def test_true_class_margin_divides_whole_vector(self):
        # With distinct margins the loss must depend only on rho_label.
        stats = ClassStats([4, 4])
        scores = np.array([1.0, -0.5])
        a = eval_gca(scores, 1, stats, 0.0, [2.0, 7.0])
        b = eval_gca(scores, 1, stats, 0.0, [2.0, 0.1])
        assert a == b
        assert a == pytest.approx(
            2.0 * -math.log(1 / (1 + math.exp(-(1.0 - -0.5) / 2.0))), rel=1e-12)

    def test_rejects_bad_margins(self):
        stats = ClassStats([1, 1])
        with pytest.raises(ValueError):
            eval_gca([0.0, 0.0], 1, stats, 0.0, [1.0, 0.0])


class TestDefaultGcaMargins:
    def test_symmetric(self):
        np.testing.assert_allclose(default_gca_margins(ClassStats([1, 1])),
                                   [0.5, 0.5])

    def test_cube_root_profile(self):
        np.testing.assert_allclose(default_gca_margins(ClassStats([8, 1])),
                                   [2 / 3, 1 / 3], atol=1e-15)
        np.testing.assert_allclose(
            default_gca_margins(ClassStats([1000, 8, 1])),
            np.array([10.0, 2.0, 1.0]) / 13.0, atol=1e-15)


class TestBaselines:
    def test_ce_uniform(self):
        stats = ClassStats([1, 1, 1])
        value = eval_baseline(LossSpec("CE"), [0.0, 0.0, 0.0], 1, stats)
        assert value == pytest.approx(math.log(3), abs=1e-15)

    def test_focal_gamma0_is_ce(self):
        rng = np.random.default_rng(11)
        stats = ClassStats([4, 2, 6])
        for _ in range(100):
            scores = rng.normal(0, 3, 3)
            label = int(rng.integers(1, 4))
            focal = eval_baseline(LossSpec("FOCAL", gamma=0.0), scores, label, stats)
            ce = eval_baseline(LossSpec("CE"), scores, label, stats)
            assert focal == pytest.approx(ce, rel=1e-15)

    def test_ldam_closed_form(self):
        # C=1, m_label=16 gives a margin shift of 1/16^(1/4) = 0.5 on the
        # true-class logit only.
        stats = ClassStats([16, 16])
        value = eval_baseline(LossSpec("LDAM", cap_c=1.0), [0.0, 0.0], 1, stats)
        assert value == pytest.approx(math.log(1 + math.exp(0.5)), abs=1e-12)

    def test_equal_gating_with_fixed_draws(self):
        # Rare class 2 (prior 0.2 < lambda 0.5) is gated out of the
        # denominator when its draw fires and the true class is 1.
        stats = ClassStats([8, 2])
        spec = LossSpec("EQUAL", eq_p=0.5, eq_lambda=0.5)
        scores = [0.0, 0.0]
        gated = eval_loss(spec, scores, 1, stats, equal_draws=[1.0, 1.0])
        assert gated == pytest.approx(0.0, abs=1e-15)
        ungated = eval_loss(spec, scores, 1, stats, equal_draws=[0.0, 0.0])
        assert ungated == pytest.approx(math.log(2), abs=1e-15)
        # true class is never gated
        true_kept = eval_loss(spec, scores, 2, stats, equal_draws=[1.0, 1.0])
        assert true_kept == pytest.approx(math.log(2), abs=1e-15)

    def test_equal_draws_from_seeded_stream(self):
        stats = ClassStats([8, 2])
        spec = LossSpec("EQUAL", eq_p=0.5, eq_lambda=0.5)
        a = eval_loss(spec, [0.3, -0.2], 1, stats, rng=np.random.default_rng(3))
        b = eval_loss(spec, [0.3, -0.2], 1, stats, rng=np.random.default_rng(3))
        assert a == b

    def test_cb_weight(self):
        stats = ClassStats([3, 1])
        gamma = 0.5
        weight = (1 - gamma) / (1 - gamma ** 0.25)
        value = eval_baseline(LossSpec("CB", gamma=gamma), [0.0, 0.0], 2, stats)
        assert value == pytest.approx(weight * math.log(2), rel=1e-12)

    def test_wce_weight_is_total_over_count(self):
        stats = ClassStats([3, 1])
        value = eval_baseline(LossSpec("WCE"), [0.0, 0.0], 2, stats)
        assert value == pytest.approx(4.0 * math.log(2), rel=1e-15)

    def test_non_baseline_rejected(self):
        stats = ClassStats([1, 1])
        with pytest.raises(ValueError):
            eval_baseline(LossSpec("GLA", q=0.0), [0.0, 0.0], 1, stats)


class TestCsmax:
    def test_all_zero_scores_logistic(self):
        value = eval_csmax([0.0, 0.0], 1, cost=1.0, rho_margin=1.0, psi_tau=1.0)
        assert value == pytest.approx(math.log(2), abs=1e-15)

    def test_zero_cost(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            scores = rng.normal(0, 5, 4)
            assert eval_csmax(scores, 2, 0.0, 1.0, 1.0) == 0.0

    def test_huge_lead_floors_at_psi0(self):
        value = eval_csmax([50.0, 0.0, -3.0], 1, cost=2.5, rho_margin=1.0,
                           psi_tau=1.0)
        assert value == pytest.approx(2.5 * math.log(2), rel=1e-12)

    def test_exponential_link(self):
        # psi_tau = 0 gives Psi(x) = e^{-x}; with a gap of 1 at rho 1 the
        # runner-up term e^{1} dominates the label term e^{0}.
        value = eval_csmax([0.0, 1.0], 1, cost=1.0, rho_margin=1.0, psi_tau=0.0)
        assert value == pytest.approx(math.e, rel=1e-12)


class TestBalancedLoss:
    def test_correct_prediction(self):
        assert eval_balanced_loss(2, 2, [0.5, 0.5]) == 0.0

    def test_uniform_priors(self):
        assert eval_balanced_loss(1, 2, [0.5, 0.5]) == pytest.approx(2.0)

    def test_skewed_priors(self):
        assert eval_balanced_loss(1, 2, [0.9, 0.1]) == pytest.approx(10.0)

    def test_rejects_zero_prior(self):
        with pytest.raises(ValueError):
            eval_balanced_loss(1, 2, [1.0, 0.0])


class TestGradients:
    def test_ce_gradient_closed_form(self):
        stats = ClassStats([1, 1])
        grad = eval_grad(LossSpec("CE"), [0.0, 0.0], 1, stats)
        np.testing.assert_allclose(grad, [-0.5, 0.5], atol=1e-15)

    def test_gla_q0_uniform_matches_ce(self):
        rng = np.random.default_rng(13)
        stats = ClassStats([5, 5, 5])
        for _ in range(50):
            scores = rng.normal(0, 2, 3)
            label = int(rng.integers(1, 4))
            a = eval_grad(LossSpec("GLA", q=0.0), scores, label, stats)
            b = eval_grad(LossSpec("CE"), scores, label, stats)
            np.testing.assert_allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("family", DIFFERENTIABLE_FAMILIES)
    def test_matches_finite_differences(self, family):
        rng = np.random.default_rng(DIFFERENTIABLE_FAMILIES.index(family))
        checked = 0
        while checked < 25:
            n = int(rng.integers(2, 6))
            stats = ClassStats(rng.integers(1, 50, n))
            scores = rng.normal(0, 2, n)
            label = int(rng.integers(1, n + 1))
            spec = random_spec(rng, family, n)
            draws = (rng.random(n) < 0.5).astype(float) if family == "EQUAL" else None
            if family == "CSMAX":
                top2 = np.sort(scores)[::-1]
                if top2[0] - top2[1] < 1e-3:
                    continue
            grad = eval_grad(spec, scores, label, stats, equal_draws=draws)
            fd = finite_diff_gradient(
                lambda s: eval_loss(spec, s, label, stats, equal_draws=draws),
                scores)
            assert gradient_rel_error(grad, fd) < 1e-6
            checked += 1

    def test_csmax_tie_subgradient_uses_smallest_index(self):
        spec = LossSpec("CSMAX", rho_margin=1.0, psi_tau=1.0)
        stats = ClassStats([1, 1, 1])
        grad = eval_grad(spec, [2.0, 2.0, 0.0], 3, stats)
        # maximizers are classes 1 and 2 (tied top score); index 1 is used
        assert grad[0] != 0.0 and grad[1] == 0.0


class TestLossProperties:
    families = DIFFERENTIABLE_FAMILIES

    def test_nonnegative(self):
        rng = np.random.default_rng(14)
        for family in self.families:
            for _ in range(50):
                n = int(rng.integers(2, 6))
                stats = ClassStats(rng.integers(1, 50, n))
                scores = rng.normal(0, 4, n)
                label = int(rng.integers(1, n + 1))
                spec = random_spec(rng, family, n)
                draws = (rng.random(n) < 0.5).astype(float) if family == "EQUAL" else None
                assert eval_loss(spec, scores, label, stats,
                                 equal_draws=draws) >= 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(15)
        for family in self.families:
            for _ in range(30):
                n = int(rng.integers(2, 6))
                stats = ClassStats(rng.integers(1, 50, n))
                scores = rng.normal(0, 3, n)
                label = int(rng.integers(1, n + 1))
                spec = random_spec(rng, family, n)
                draws = (rng.random(n) < 0.5).astype(float) if family == "EQUAL" else None
                a = eval_loss(spec, scores, label, stats, equal_draws=draws)
                b = eval_loss(spec, scores + 3.7, label, stats, equal_draws=draws)
                assert a == pytest.approx(b, abs=1e-10, rel=1e-10)

    def test_monotone_in_true_class_score(self):
        rng = np.random.default_rng(16)
        for family in self.families:
            for _ in range(30):
                n = int(rng.integers(2, 6))
                stats = ClassStats(rng.integers(1, 50, n))
                scores = rng.normal(0, 3, n)
                label = int(rng.integers(1, n + 1))
                spec = random_spec(rng, family, n)
                draws = (rng.random(n) < 0.5).astype(float) if family == "EQUAL" else None
                lo = eval_loss(spec, scores, label, stats, equal_draws=draws)
                bumped = scores.copy()
                bumped[label - 1] += float(rng.uniform(0.1, 2.0))
                hi = eval_loss(spec, bumped, label, stats, equal_draws=draws)
                assert hi <= lo + 1e-12


class TestPriorStats:
    def test_matches_class_stats_weights(self):
        stats = ClassStats([3, 1])
        pstats = PriorStats([0.75, 0.25])
        np.testing.assert_allclose(pstats.inv_priors, stats.inv_priors)
        np.testing.assert_allclose(pstats.log_priors, stats.log_priors)

    def test_ldam_rejects_prior_stats(self):
        with pytest.raises(ValueError):
            eval_loss(LossSpec("LDAM", cap_c=1.0), [0.0, 0.0], 1,
                      PriorStats([0.5, 0.5]))

    def test_rejects_non_simplex(self):
        with pytest.raises(ValueError):
            PriorStats([0.5, 0.4])
        with pytest.raises(ValueError):
            PriorStats([1.0, 0.0])
