"""Adaptive Metropolis sampling with constraint rejection, and DIC.

The proposal is a multivariate normal random walk whose covariance is
adapted from the running empirical covariance of the chain (plus a small
diagonal jitter), with the overall scale retuned periodically toward an
acceptance rate between 0.15 and 0.5.  Proposals violating the constraint
callable are rejected outright (acceptance probability 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import FLOAT_FMT

TARGET_ACCEPT = (0.15, 0.5)


@dataclass
class McmcChain:
    """Parameter trajectory on the sampling scale with its log-likelihood
    trace and the RNG seed that reproduces it."""

    names: tuple
    samples: np.ndarray  # (iterations, dim)
    logliks: np.ndarray  # (iterations,)
    accepted: int
    burn_in: int
    seed: int
    adaptation: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return self.samples.shape[0]

    @property
    def acceptance_rate(self):
        return self.accepted / max(1, self.iterations)

    def post_burn(self):
        return self.samples[self.burn_in:], self.logliks[self.burn_in:]

    def to_csv(self, path_or_stream, thin=1):
        own = not hasattr(path_or_stream, "write")
        fh = open(path_or_stream, "w", encoding="utf-8") if own else path_or_stream
        try:
            fh.write(f"# seed = {self.seed}\n")
            fh.write(f"# iterations = {self.iterations}\n")
            fh.write(f"# burn_in = {self.burn_in}\n")
            fh.write(f"# accepted = {self.accepted}\n")
            fh.write(f"# thin = {thin}\n")
            fh.write(",".join(list(self.names) + ["loglik"]) + "\n")
            for k in range(0, self.iterations, thin):
                row = [FLOAT_FMT % v for v in self.samples[k]]
                row.append(FLOAT_FMT % self.logliks[k])
                fh.write(",".join(row) + "\n")
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path):
        meta = {}
        rows = []
        names = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                if names is None:
                    names = line.split(",")
                    continue
                rows.append([float(tok) for tok in line.split(",")])
        if names is None or not rows:
            raise ValueError(f"{path}: empty chain file")
        arr = np.array(rows)
        thin = int(meta.get("thin", 1))
        burn = int(meta.get("burn_in", 0)) // thin
        return cls(
            names=tuple(names[:-1]),
            samples=arr[:, :-1],
            logliks=arr[:, -1],
            accepted=int(meta.get("accepted", 0)),
            burn_in=burn,
            seed=int(meta.get("seed", 0)),
            adaptation={"thin": thin},
        )


def adaptive_mcmc(loglik_fn, constraint_fn, init, iters, burn_in, seed, *,
                  names=None, log_prior_fn=None, adapt_every=100,
                  retune_every=500, jitter=1e-6, initial_step=0.1):
    """Run the constrained adaptive random-walk Metropolis sampler.

    ``loglik_fn(x)`` is the data log-likelihood on the sampling scale and is
    what the chain's trace records; ``log_prior_fn`` (optional) adds to the
    Metropolis target only.  ``constraint_fn(x)`` gates proposals; the
    initial state must satisfy it.  Every iteration's state is stored;
    ``burn_in`` marks how many lead samples downstream summaries drop.
    """
    x = np.asarray(init, dtype=float).copy()
    dim = x.size
    if iters <= burn_in:
        raise ValueError("iters must exceed burn_in")
    if not constraint_fn(x):
        raise ValueError("initial state violates the constraint set")
    rng = np.random.default_rng(seed)

    def target(v, ll):
        return ll if log_prior_fn is None else ll + log_prior_fn(v)

    ll_x = float(loglik_fn(x))
    if not np.isfinite(ll_x):
        raise ValueError("initial state has non-finite log-likelihood")
    t_x = target(x, ll_x)

    samples = np.empty((iters, dim))
    logliks = np.empty(iters)
    scale = 2.38**2 / dim
    prop_chol = initial_step * np.eye(dim)
    # Running mean / scatter for the empirical covariance of all past states.
    mean = x.copy()
    scatter = np.zeros((dim, dim))
    count = 1
    accepted = 0
    window_accepted = 0
    scale_history = []

    for k in range(iters):
        z = rng.standard_normal(dim)
        prop = x + prop_chol @ z
        u = rng.uniform()
        if constraint_fn(prop):
            ll_p = float(loglik_fn(prop))
            t_p = target(prop, ll_p)
            if np.isfinite(t_p) and np.log(u) < t_p - t_x:
                x, ll_x, t_x = prop, ll_p, t_p
                accepted += 1
                window_accepted += 1
        samples[k] = x
        logliks[k] = ll_x

        delta = x - mean
        mean += delta / (count + 1)
        scatter += np.outer(delta, x - mean)
        count += 1

        if (k + 1) % adapt_every == 0 and count > 2 * dim:
            cov = scatter / (count - 1) + jitter * np.eye(dim)
            try:
                prop_chol = np.linalg.cholesky(scale * cov)
            except np.linalg.LinAlgError:
                pass
        if (k + 1) % retune_every == 0:
            rate = window_accepted / retune_every
            if rate < TARGET_ACCEPT[0]:
                scale *= 0.5
            elif rate > TARGET_ACCEPT[1]:
                scale *= 2.0
            scale_history.append((k + 1, rate, scale))
            window_accepted = 0
            if count > 2 * dim:
                cov = scatter / (count - 1) + jitter * np.eye(dim)
                try:
                    prop_chol = np.linalg.cholesky(scale * cov)
                except np.linalg.LinAlgError:
                    pass

    if names is None:
        names = tuple(f"x{i}" for i in range(dim))
    return McmcChain(
        names=tuple(names),
        samples=samples,
        logliks=logliks,
        accepted=accepted,
        burn_in=burn_in,
        seed=seed,
        adaptation={
            "adapt_every": adapt_every,
            "retune_every": retune_every,
            "jitter": jitter,
            "final_scale": scale,
            "scale_history": scale_history,
        },
    )


@dataclass(frozen=True)
class DicResult:
    """Deviance information criterion: dic = mean_deviance + p_d."""

    mean_deviance: float
    p_d: float
    dic: float

    def to_csv_row(self):
        return ",".join(FLOAT_FMT % v for v in (self.mean_deviance, self.p_d, self.dic))


def dic(chain, loglik_fn):
    """DIC from a chain: mean posterior deviance plus the effective number
    of parameters, evaluated at the posterior mean on the sampling scale."""
    samples, logliks = chain.post_burn()
    if samples.shape[0] < 100:
        raise ValueError(
            f"need at least 100 post-burn-in samples, have {samples.shape[0]}"
        )
    mean_dev = float(np.mean(-2.0 * logliks))
    theta_bar = samples.mean(axis=0)
    try:
        ll_bar = float(loglik_fn(theta_bar))
    except Exception as exc:
        raise RuntimeError(
            f"log-likelihood failed at the posterior mean: {exc}"
        ) from exc
    if not np.isfinite(ll_bar):
        raise RuntimeError("log-likelihood at the posterior mean is not finite")
    p_d = mean_dev - (-2.0 * ll_bar)
    return DicResult(mean_deviance=mean_dev, p_d=p_d, dic=mean_dev + p_d)
