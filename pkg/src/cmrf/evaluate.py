"""Model scoring: Monte Carlo partition estimates, likelihood, KLD, AIC."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sample import SamplerConfig, mh_sample


@dataclass(frozen=True)
class Score:
    """One model's evaluation record; ``aic`` is an arithmetic identity of
    the stored fields (see :func:`aic`)."""

    K: int
    n: int
    N: int
    edge_count: int
    loglik: float
    loglik_se: float
    aic: float
    log_partition: float
    log_partition_se: float
    M: int
    seed: object
    kld: Optional[float] = None
    kld_se: Optional[float] = None


def parameter_count(n, edge_count, K):
    """Number of free expansion coefficients at truncation order ``K``."""
    return n * K + edge_count * K * K


def mc_log_partition(model, M, seed):
    """Estimate ``ln Z`` by uniform-sample Monte Carlo over the box.

    Draws ``M`` points uniformly on ``interval^n``, averages
    ``volume * exp(-energy)`` in log space, and returns
    ``(ln Z, delta-method standard error)``.
    """
    if M < 100:
        raise ValueError("M must be >= 100")
    rng = np.random.default_rng(seed)
    low, high = model.interval
    y = rng.uniform(low, high, size=(M, model.n))
    a = -model.energy(y) + model.n * math.log(high - low)
    amax = float(np.max(a))
    e = np.exp(a - amax)
    mean = float(np.mean(e))
    lnz = amax + math.log(mean)
    second = float(np.mean(e * e))
    rel_var = max(second / (mean * mean) - 1.0, 0.0)
    return lnz, math.sqrt(rel_var / M)


def log_likelihood(model, data, log_partition):
    """Per-node average log density of the data under the model."""
    if data.n != model.n:
        raise ValueError(f"dataset has {data.n} variables, model has {model.n}")
    return float(np.mean(-model.energy(data.values) - log_partition)) / model.n


def aic(loglik, n, N, K, edge_count):
    """Information criterion: ``-2*loglik`` plus the per-observation
    parameter penalty ``2 * (n*K + |E|*K^2) / (n*N)``."""
    return -2.0 * loglik + 2.0 * parameter_count(n, edge_count, K) / (n * N)


def kld_estimate(gen, model, S, seed, M=20_000, sampler=None):
    """Per-node KL divergence from ``gen`` to ``model``, by sampling.

    Draws ``S`` points from ``gen`` (single-site Metropolis), estimates
    both log partitions by :func:`mc_log_partition` with the same ``M``
    and independent seeds, and averages the per-point log density gap.
    Returns ``(estimate, standard error)`` with the sampling and the two
    normalizer errors combined in quadrature.
    """
    if gen.n != model.n or gen.interval != model.interval:
        raise ValueError("models must share variable count and interval")
    rng = np.random.default_rng(seed)
    s_chain, s_gen, s_model = (int(v) for v in rng.integers(0, 2**62, size=3))
    cfg = SamplerConfig(
        burn_in=sampler.burn_in if sampler else 10_000,
        thinning=sampler.thinning if sampler else 10,
        seed=s_chain,
    )
    data = mh_sample(gen, S, cfg)

    lnz_gen, se_gen = mc_log_partition(gen, M, s_gen)
    lnz_model, se_model = mc_log_partition(model, M, s_model)
    gaps = (-gen.energy(data.values) - lnz_gen) - (-model.energy(data.values) - lnz_model)
    n = gen.n
    est = float(np.mean(gaps)) / n
    se_mean = float(np.std(gaps, ddof=1)) / math.sqrt(S) if S > 1 else 0.0
    se = math.sqrt(se_mean**2 + se_gen**2 + se_model**2) / n
    return est, se


def score_model(model, data, K, log_partition, log_partition_se, M, seed,
                kld=None, kld_se=None):
    """Assemble a :class:`Score` from an already-estimated log partition."""
    ll = log_likelihood(model, data, log_partition)
    return Score(
        K=K,
        n=model.n,
        N=data.N,
        edge_count=model.graph.edge_count,
        loglik=ll,
        loglik_se=log_partition_se / model.n,
        aic=aic(ll, model.n, data.N, K, model.graph.edge_count),
        log_partition=log_partition,
        log_partition_se=log_partition_se,
        M=M,
        seed=seed,
        kld=kld,
        kld_se=kld_se,
    )
