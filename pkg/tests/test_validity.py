"""Condition-set tests: clause reductions, cross-set identities, nesting,
and a randomized soundness smoke pass (the full sweep runs in the
acceptance suite)."""

import math

import numpy as np
import pytest

from mvmatern.kernels import MaternSpec, SiteSet, joint_covariance
from mvmatern.matrices import BernsteinFn, bernstein_matrix, is_cnd
from mvmatern.specgen import random_corr_nonneg, random_psd, sample_spec
from mvmatern.validity import (
    SUFFICIENT_SETS,
    check_apanasovich,
    check_du,
    check_example,
    check_gneiting,
    check_theorem1,
    check_theorem2A,
    check_theorem2A_matrix,
    check_theorem2B,
    check_theorem3,
    find_theorem2B_psi,
    find_theorem3B_beta,
    format_report,
    recover_apanasovich,
    run_check,
    spectral_oracle,
    theorem1_exponent,
)


def two_value_spec(rho, diag_a2, off_a2, diag_nu=0.5, off_nu=1.5, p=2, d=2):
    alpha2 = np.full((p, p), off_a2)
    np.fill_diagonal(alpha2, diag_a2)
    nu = np.full((p, p), off_nu)
    np.fill_diagonal(nu, diag_nu)
    sigma = np.full((p, p), rho)
    np.fill_diagonal(sigma, 1.0)
    return MaternSpec(alpha=np.sqrt(alpha2), nu=nu, sigma=sigma, d=d)


class TestTheorem1:
    def test_exponent(self):
        assert theorem1_exponent(2, 0.5) == 3
        assert theorem1_exponent(1, 0.5) == 2
        assert theorem1_exponent(3, 1.2) == 6

    def test_constant_parameters_satisfied(self):
        for d in (1, 2, 3):
            for nu in (0.4, 1.0, 2.5):
                spec = MaternSpec(
                    alpha=np.full((3, 3), 1.3),
                    nu=np.full((3, 3), nu),
                    sigma=np.array([[1.0, 0.6, 0.3], [0.6, 1.0, 0.5], [0.3, 0.5, 1.0]]),
                    d=d,
                )
                assert check_theorem1(spec).satisfied

    def test_nonconstant_smoothness_rejected(self):
        spec = two_value_spec(0.1, 1.0, 0.8)
        with pytest.raises(ValueError):
            check_theorem1(spec)

    def test_random_constructions_sound(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            spec, hypers = sample_spec("thm1", rng, 3, 2)
            assert run_check("thm1", spec, **hypers).satisfied
            sites = SiteSet(rng.uniform(0, 10, (40, 2)))
            cov = joint_covariance(sites, spec)
            assert np.linalg.eigvalsh(cov)[0] >= -1e-8 * np.trace(cov)


class TestTheorem2A:
    def test_constructive_constant_functions(self):
        # constant Bernstein functions collapse clause 3 onto sigma itself
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        sigma = np.array([[1.0, 0.7, 0.2], [0.7, 1.0, 0.4], [0.2, 0.4, 1.0]])
        report = check_theorem2A(
            BernsteinFn.constant(0.8), BernsteinFn.constant(2.0), pts, sigma, 2
        )
        assert report.satisfied
        bad = sigma.copy()
        bad[0, 1] = bad[1, 0] = 1.5  # breaks PSD-ness of sigma
        report = check_theorem2A(
            BernsteinFn.constant(0.8), BernsteinFn.constant(2.0), pts, bad, 2
        )
        assert not report.satisfied

    def test_zero_smoothness_rejected(self):
        pts = np.array([[0.0], [1.0]])
        with pytest.raises(ValueError):
            check_theorem2A(
                BernsteinFn.identity(), BernsteinFn.constant(1.0), pts,
                np.eye(2), 2,
            )

    def test_matrix_surrogate_flags_itself(self):
        spec = two_value_spec(0.1, 1.0, math.log(2.0))
        report = check_theorem2A_matrix(spec)
        assert "surrogate" in report.notes
        assert report.satisfied

    def test_matrix_surrogate_bound_structure(self):
        # the closed-form admissible boundary of the comparison structure:
        # rho_max = ln(1+a)/(3a) in two dimensions
        a = 1.0
        bound = math.log1p(a) / (3.0 * a)
        below = two_value_spec(bound - 1e-4, a, math.log1p(a))
        above = two_value_spec(bound + 1e-4, a, math.log1p(a))
        assert check_theorem2A_matrix(below).satisfied
        assert not check_theorem2A_matrix(above).satisfied


class TestTheorem2B:
    def test_psi_from_simplified_route_A(self):
        # psi = nu o alpha^{-2} turns route B into the simplified route A,
        # clause by clause
        rng = np.random.default_rng(7)
        for _ in range(30):
            set_id = ["thm3A", "du", "ex2", "gneiting"][int(rng.integers(4))]
            spec, _ = sample_spec(set_id, rng, int(rng.integers(2, 5)), 2)
            psi = spec.nu * spec.alpha**-2.0
            rep_b = check_theorem2B(spec, psi)
            rep_a = check_theorem3(spec, "A")
            assert rep_b.satisfied == rep_a.satisfied
            np.testing.assert_allclose(
                rep_b.clause("sigma_weighted_psd").detail["min_eigenvalue"],
                rep_a.clause("sigma_weighted_psd").detail["min_eigenvalue"],
                rtol=1e-8, atol=1e-12,
            )

    def test_psi_constant_matches_route_B(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            spec, hypers = sample_spec("thm3B", rng, 3, 2)
            beta = hypers["beta"]
            psi = np.full((3, 3), 1.0 / beta)
            assert check_theorem2B(spec, psi).satisfied == check_theorem3(
                spec, "B", beta=beta
            ).satisfied

    def test_all_ones_psi_collapse(self):
        # psi = ones with constant smoothness: route-B clauses collapse to
        # CND-ness of the squared scales plus the weighted-sigma test
        rng = np.random.default_rng(9)
        spec, _ = sample_spec("ex3", rng, 3, 2)
        assert check_theorem2B(spec, np.ones((3, 3))).satisfied

    def test_positive_psi_required(self):
        spec = two_value_spec(0.1, 1.0, 2.0)
        with pytest.raises(ValueError):
            check_theorem2B(spec, np.zeros((2, 2)))

    def test_family_search(self):
        rng = np.random.default_rng(10)
        spec, _ = sample_spec("thm3A", rng, 3, 2)
        found = find_theorem2B_psi(spec)
        assert found is not None
        psi, _tag = found
        assert check_theorem2B(spec, psi).satisfied


class TestTheorem3:
    def test_variant_B_requires_beta(self):
        spec = two_value_spec(0.1, 1.0, 2.0)
        with pytest.raises(ValueError):
            check_theorem3(spec, "B")
        with pytest.raises(ValueError):
            check_theorem3(spec, "B", beta=-1.0)

    def test_unknown_variant(self):
        spec = two_value_spec(0.1, 1.0, 2.0)
        with pytest.raises(ValueError):
            check_theorem3(spec, "C")

    def test_beta_boundary_search(self):
        # for the two-value structure the clause-2 feasibility boundary sits
        # at the structure scale plus the offset-to-smoothness gap
        spec = two_value_spec(0.0, 0.5, 1.5 + 0.7)  # scale 1, offset 0.7
        beta = find_theorem3B_beta(spec)
        assert beta == pytest.approx(1.7, rel=1e-4)

    def test_examples_nest_into_theorems(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            p = int(rng.integers(2, 6))
            d = int(rng.integers(1, 4))
            s1, _ = sample_spec("ex1", rng, p, d)
            assert check_example(s1, 1).satisfied
            assert check_theorem3(s1, "A").satisfied
            s2, _ = sample_spec("ex2", rng, p, d)
            assert check_example(s2, 2).satisfied
            assert check_theorem3(s2, "A").satisfied
            s3, _ = sample_spec("ex3", rng, p, d)
            assert check_example(s3, 3).satisfied
            assert check_theorem3(s3, "B", beta=1.0).satisfied

    def test_theorem3_nests_into_2B(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            p = int(rng.integers(2, 6))
            sA, _ = sample_spec("thm3A", rng, p, 2)
            assert check_theorem2B(sA, sA.nu * sA.alpha**-2.0).satisfied
            sB, h = sample_spec("thm3B", rng, p, 2)
            assert check_theorem2B(sB, np.full((p, p), 1.0 / h["beta"])).satisfied


class TestExamples:
    def test_structural_clause_reported_not_raised(self):
        spec = two_value_spec(0.1, 1.0, 0.8)  # non-constant smoothness
        report = check_example(spec, 1)
        assert not report.satisfied
        assert not report.clause("nu_constant").passed

    def test_example_ids(self):
        with pytest.raises(ValueError):
            check_example(two_value_spec(0.1, 1.0, 2.0), 4)


class TestApanasovich:
    def test_constant_half_smoothness_recovers_trivial_hypers(self):
        nu = np.full((3, 3), 0.5)
        delta, a = recover_apanasovich(nu)
        assert delta == 0.0
        assert np.allclose(a, 1.0)

    def test_exponential_case_reduces_to_sigma_alpha(self):
        # with delta = 0 and unit a-matrix the weighted clause tests
        # sigma o alpha up to separable gamma factors
        rng = np.random.default_rng(13)
        p, d = 3, 2
        fn = BernsteinFn.combine(
            [1.0, 0.5], [BernsteinFn.constant(0.5), BernsteinFn.log1p()]
        )
        alpha = np.sqrt(bernstein_matrix(fn, rng.uniform(0, 2, (p, 2))).values)
        sigma = random_psd(rng, p) / alpha
        spec = MaternSpec(alpha=alpha, nu=np.full((p, p), 0.5), sigma=sigma, d=d)
        report = check_apanasovich(spec, 0.0, np.ones((p, p)))
        assert report.satisfied

    def test_structure_identity_holds_exactly(self):
        # the two-value structure satisfies clause (i) with offset 1 and a
        # unit-diagonal zero-offdiagonal correlation matrix
        spec = two_value_spec(0.05, 0.5, 1.5 + 0.3)
        report = check_apanasovich(spec, 1.0, np.eye(2))
        assert report.clause("i_structure").passed
        assert report.clause("i_structure").detail["residual"] == 0.0

    def test_recovery_locates_minimal_delta(self):
        delta, a = recover_apanasovich(two_value_spec(0.0, 0.5, 1.5).nu)
        assert delta == pytest.approx(1.0)
        assert np.allclose(a, np.eye(2))

    def test_recovery_rejects_negative_excess(self):
        nu = np.array([[1.0, 0.3], [0.3, 1.0]])  # cross below the average
        assert recover_apanasovich(nu) is None

    def test_a_matrix_validation(self):
        spec = two_value_spec(0.05, 0.5, 1.8)
        with pytest.raises(ValueError):
            check_apanasovich(spec, 1.0, np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError):
            check_apanasovich(spec, 1.0, np.array([[0.5, 0.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            check_apanasovich(spec, -0.5, np.eye(2))

    def test_coincides_with_route_B_on_averaged_smoothness(self):
        # when cross smoothness is the average of the directs, the
        # dimension-dependent set and the simplified route B agree on
        # every instance, satisfied or not
        rng = np.random.default_rng(14)
        agree = 0
        for _ in range(200):
            p = int(rng.integers(2, 5))
            nu_diag = rng.uniform(0.3, 1.6, p)
            nu = 0.5 * (nu_diag[:, None] + nu_diag[None, :])
            alpha = np.sqrt(
                bernstein_matrix(
                    BernsteinFn.combine(
                        [1.0, rng.uniform(0.2, 1.0)],
                        [BernsteinFn.constant(rng.uniform(0.3, 1.0)),
                         BernsteinFn.ratio()],
                    ),
                    rng.uniform(0, 2, (p, 2)),
                ).values
            ) if rng.uniform() < 0.7 else rng.uniform(0.5, 2.0) * np.ones((p, p)) + np.diag(rng.uniform(0, 1.5, p))
            alpha = 0.5 * (alpha + alpha.T)
            sigma = random_psd(rng, p) * rng.uniform(0.5, 2.0) - (
                rng.uniform(0, 0.3) * np.ones((p, p)) if rng.uniform() < 0.3 else 0.0
            )
            spec = MaternSpec(alpha=alpha, nu=nu, sigma=sigma, d=2)
            rep_ap = check_apanasovich(spec, 0.0, np.ones((p, p)))
            rep_b = check_theorem3(spec, "B", beta=1.0)
            assert rep_ap.satisfied == rep_b.satisfied
            agree += rep_ap.satisfied
        assert 0 < agree < 200  # both verdicts occur for this seed

    def test_clause_i_implies_cnd_smoothness(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            p = int(rng.integers(2, 6))
            nu_diag = rng.uniform(0.3, 2.0, p)
            delta = rng.uniform(0.0, 2.0)
            a = random_corr_nonneg(rng, p)
            nu = 0.5 * (nu_diag[:, None] + nu_diag[None, :]) + delta * (1.0 - a)
            assert is_cnd(nu).is_psd


class TestBaselines:
    def test_gneiting_collapses_to_sigma(self):
        sigma = np.array([[1.0, 0.95], [0.95, 1.0]])
        spec = MaternSpec(
            alpha=np.full((2, 2), 1.2), nu=np.full((2, 2), 0.8), sigma=sigma, d=2
        )
        assert check_gneiting(spec).satisfied
        sigma_bad = np.array([[1.0, 1.05], [1.05, 1.0]])
        spec_bad = MaternSpec(
            alpha=np.full((2, 2), 1.2), nu=np.full((2, 2), 0.8), sigma=sigma_bad, d=2
        )
        assert not check_gneiting(spec_bad).satisfied

    def test_gneiting_structural_failure_reported(self):
        spec = MaternSpec(
            alpha=np.array([[1.0, 1.2], [1.2, 1.5]]),
            nu=np.full((2, 2), 0.5),
            sigma=np.eye(2),
            d=2,
        )
        report = check_gneiting(spec)
        assert not report.satisfied
        assert not report.clause("alpha_constant").passed

    def test_du_with_squared_gap_smoothness(self):
        rng = np.random.default_rng(16)
        idx = np.arange(4)
        nu = 1.0 + (idx[:, None] - idx[None, :]) ** 2 / 4.0
        coef = np.exp(
            np.vectorize(math.lgamma)(nu + 1.0) - np.vectorize(math.lgamma)(nu)
        )
        sigma = random_psd(rng, 4) / coef
        spec = MaternSpec(alpha=np.full((4, 4), 1.1), nu=nu, sigma=sigma, d=2)
        assert check_du(spec).satisfied


class TestSpectralOracle:
    def test_diagonal_sigma_always_passes(self):
        spec = MaternSpec(
            alpha=np.array([[1.0, 2.0], [2.0, 0.5]]),
            nu=np.array([[0.5, 2.0], [2.0, 1.2]]),
            sigma=np.eye(2),
            d=2,
        )
        assert spectral_oracle(spec).satisfied

    def test_overshooting_correlation_fails(self):
        spec = two_value_spec(0.9, 0.5, 1.5)
        report = spectral_oracle(spec)
        assert not report.satisfied
        assert report.clauses[0].detail["min_eigenvalue"] < 0

    def test_rank_one_structure_is_marginal(self):
        p = 2
        spec = MaternSpec(
            alpha=np.full((p, p), 1.3),
            nu=np.full((p, p), 0.9),
            sigma=np.ones((p, p)),
            d=2,
        )
        report = spectral_oracle(spec)
        assert report.satisfied
        assert abs(report.clauses[0].detail["min_eigenvalue"]) < 1e-12

    def test_empty_grid_rejected(self):
        spec = two_value_spec(0.1, 1.0, 2.0)
        with pytest.raises(ValueError):
            spectral_oracle(spec, omega_grid=[])


class TestDispatchAndReports:
    def test_unknown_set(self):
        with pytest.raises(ValueError):
            run_check("thm9", two_value_spec(0.1, 1.0, 2.0))

    def test_soundness_smoke(self):
        # 10 satisfying specs per sufficient set; the full 500-per-set sweep
        # lives in the acceptance suite
        rng = np.random.default_rng(17)
        for set_id in SUFFICIENT_SETS:
            for _ in range(10):
                p = int(rng.choice([2, 3, 5]))
                d = int(rng.choice([1, 2, 3]))
                spec, hypers = sample_spec(set_id, rng, p, d)
                assert run_check(set_id, spec, **hypers).satisfied, set_id
                assert spectral_oracle(spec).satisfied, set_id

    def test_run_check_searches_hyperparameters(self):
        rng = np.random.default_rng(18)
        spec, _ = sample_spec("thm3B", rng, 3, 2)
        assert run_check("thm3B", spec).satisfied  # beta searched
        spec2, hypers = sample_spec("apanasovich", rng, 3, 2)
        assert run_check("apanasovich", spec2).satisfied  # delta, a recovered
        spec3, _ = sample_spec("thm3A", rng, 3, 2)
        assert run_check("thm2B", spec3).satisfied  # psi searched

    def test_report_serialization(self):
        spec = two_value_spec(0.05, 0.5, 1.5)
        text = format_report(run_check("thm3B", spec, beta=1.0))
        assert "condition_set = thm3B" in text
        assert "satisfied = true" in text
        assert "label = nu_cnd" in text
        assert "beta = 1" in text

    def test_unsatisfied_report_lists_failing_clause(self):
        spec = two_value_spec(0.9, 0.5, 1.5)
        report = run_check("thm3B", spec, beta=1.0)
        assert not report.satisfied
        text = format_report(report)
        assert "passed = false" in text
