"""Sampler tests: known targets, constraint rejection, reproducibility,
adaptation, DIC identities, and chain serialization."""

import math

import numpy as np
import pytest

from mvmatern.mcmc import McmcChain, adaptive_mcmc, dic


def no_constraint(_x):
    return True


class TestAdaptiveMcmc:
    def test_standard_normal_target(self):
        chain = adaptive_mcmc(
            lambda x: -0.5 * float(x @ x),
            no_constraint,
            np.array([2.0]),
            iters=50_000,
            burn_in=5_000,
            seed=123,
        )
        samples, _ = chain.post_burn()
        assert abs(samples.mean()) <= 0.05
        assert abs(samples.var() - 1.0) <= 0.1

    def test_correlated_gaussian_target(self):
        cov = np.array([[1.0, 0.8], [0.8, 1.0]])
        prec = np.linalg.inv(cov)
        chain = adaptive_mcmc(
            lambda x: -0.5 * float(x @ prec @ x),
            no_constraint,
            np.zeros(2),
            iters=40_000,
            burn_in=5_000,
            seed=7,
        )
        samples, _ = chain.post_burn()
        sample_cov = np.cov(samples.T)
        assert np.all(np.abs(sample_cov - cov) < 0.12)

    def test_box_constraint_rejection(self):
        chain = adaptive_mcmc(
            lambda x: 0.0,
            lambda x: bool(np.all(np.abs(x) <= 1.0)),
            np.zeros(2),
            iters=20_000,
            burn_in=1_000,
            seed=3,
        )
        assert np.all(np.abs(chain.samples) <= 1.0)

    def test_invalid_init_rejected(self):
        with pytest.raises(ValueError):
            adaptive_mcmc(
                lambda x: 0.0,
                lambda x: bool(np.all(np.abs(x) <= 1.0)),
                np.array([2.0]),
                iters=100,
                burn_in=10,
                seed=1,
            )

    def test_iters_must_exceed_burn_in(self):
        with pytest.raises(ValueError):
            adaptive_mcmc(lambda x: 0.0, no_constraint, np.zeros(1),
                          iters=10, burn_in=10, seed=1)

    def test_seed_reproducibility(self):
        kwargs = dict(iters=3_000, burn_in=500, seed=99)
        c1 = adaptive_mcmc(lambda x: -0.5 * float(x @ x), no_constraint,
                           np.zeros(3), **kwargs)
        c2 = adaptive_mcmc(lambda x: -0.5 * float(x @ x), no_constraint,
                           np.zeros(3), **kwargs)
        assert np.array_equal(c1.samples, c2.samples)
        assert c1.accepted == c2.accepted

    def test_acceptance_rate_tuned_into_band(self):
        chain = adaptive_mcmc(
            lambda x: -0.5 * float(x @ x) * 50.0,  # tight target
            no_constraint,
            np.zeros(4),
            iters=20_000,
            burn_in=2_000,
            seed=11,
            initial_step=3.0,  # deliberately far off
        )
        history = chain.adaptation["scale_history"]
        late_rates = [rate for (k, rate, _s) in history if k > 10_000]
        assert np.mean(late_rates) >= 0.10
        assert np.mean(late_rates) <= 0.55

    def test_prior_shifts_target(self):
        # flat likelihood with a Gaussian "prior" samples the prior
        chain = adaptive_mcmc(
            lambda x: 0.0,
            no_constraint,
            np.zeros(1),
            iters=30_000,
            burn_in=3_000,
            seed=21,
            log_prior_fn=lambda x: -0.5 * float((x - 2.0) @ (x - 2.0)),
        )
        samples, logliks = chain.post_burn()
        assert abs(samples.mean() - 2.0) < 0.08
        assert np.all(logliks == 0.0)  # the trace records the likelihood only


class TestDic:
    def test_constant_chain_has_zero_complexity(self):
        samples = np.tile(np.array([1.5, -0.5]), (500, 1))
        logliks = np.full(500, -3.25)
        chain = McmcChain(
            names=("a", "b"), samples=samples, logliks=logliks,
            accepted=0, burn_in=100, seed=0,
        )
        result = dic(chain, lambda theta: -3.25)
        assert result.p_d == 0.0
        assert result.dic == result.mean_deviance
        assert result.dic == result.mean_deviance + result.p_d  # bit-exact

    def test_identity_holds_exactly(self):
        rng = np.random.default_rng(31)
        samples = rng.normal(size=(400, 2))
        logliks = -0.5 * np.sum(samples**2, axis=1)
        chain = McmcChain(
            names=("a", "b"), samples=samples, logliks=logliks,
            accepted=0, burn_in=50, seed=0,
        )
        result = dic(chain, lambda theta: -0.5 * float(theta @ theta))
        assert result.dic == result.mean_deviance + result.p_d
        assert result.p_d > 0

    def test_requires_enough_samples(self):
        chain = McmcChain(
            names=("a",), samples=np.zeros((120, 1)), logliks=np.zeros(120),
            accepted=0, burn_in=50, seed=0,
        )
        with pytest.raises(ValueError):
            dic(chain, lambda theta: 0.0)

    def test_failure_at_posterior_mean_diagnosed(self):
        chain = McmcChain(
            names=("a",), samples=np.ones((300, 1)), logliks=np.zeros(300),
            accepted=0, burn_in=10, seed=0,
        )

        def broken(theta):
            raise ArithmeticError("factorization failed")

        with pytest.raises(RuntimeError, match="posterior mean"):
            dic(chain, broken)
        with pytest.raises(RuntimeError):
            dic(chain, lambda theta: math.nan)


class TestChainSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(32)
        chain = McmcChain(
            names=("log_sigma_11", "sigma_21"),
            samples=rng.normal(size=(50, 2)),
            logliks=rng.normal(size=50),
            accepted=17,
            burn_in=10,
            seed=777,
        )
        path = tmp_path / "chain.csv"
        chain.to_csv(path)
        back = McmcChain.from_csv(path)
        assert back.names == chain.names
        assert back.seed == 777
        assert back.burn_in == 10
        assert back.accepted == 17
        assert back.samples.shape == chain.samples.shape
        assert np.allclose(back.samples, chain.samples, atol=1e-8)

    def test_thinning(self, tmp_path):
        chain = McmcChain(
            names=("a",),
            samples=np.arange(100.0)[:, None],
            logliks=np.zeros(100),
            accepted=0,
            burn_in=40,
            seed=1,
        )
        path = tmp_path / "chain.csv"
        chain.to_csv(path, thin=10)
        back = McmcChain.from_csv(path)
        assert back.samples.shape[0] == 10
        assert back.burn_in == 4  # scaled to the thinned index space

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            McmcChain.from_csv(path)
