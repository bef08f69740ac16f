"""
Seeded data generation and the population oracle.

Randomness comes from numpy's PCG64 generator. The seed feeds a SeedSequence
whose first spawned child drives the covariates and the second the noise, so
either stream can change length without shifting the other. Normals use
numpy's ziggurat sampler; bit-level reproducibility holds per numpy build.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from ..core.model import Dataset, Interval
from ..exceptions import ConfigError
from .models import GroundTruthModel, covariance_matrix

logger = logging.getLogger(__name__)


def streams(seed: int):
    x_seq, eps_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(x_seq)), np.random.Generator(
        np.random.PCG64(eps_seq)
    )


def cholesky_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; names the first leading minor that is not positive definite."""
    try:
        return cholesky(sigma, lower=True)
    except LinAlgError as exc:
        order = None
        for k in range(1, sigma.shape[0] + 1):
            try:
                cholesky(sigma[:k, :k], lower=True)
            except LinAlgError:
                order = k
                break
        raise ConfigError(
            f"covariance is not positive definite (leading minor of order {order}): {exc}"
        )


def segment_labels(truth: GroundTruthModel, n: int) -> np.ndarray:
    """0-based segment of each row: row i is in segment j iff i/n in (a_{j-1}, a_j]."""
    breaks = truth.breaks(n)
    rows = np.arange(1, n + 1)
    return np.searchsorted(np.asarray(breaks[1:-1]), rows, side="left")


def sample_dataset(truth: GroundTruthModel, n: int, seed: int) -> Dataset:
    """X_i ~ N(0, S), Y_i = X_i^T beta(segment of i) + sigma * eps_i."""
    if n < truth.k0:
        raise ConfigError(f"n={n} is smaller than the number of segments {truth.k0}")
    p = truth.p
    factor = cholesky_factor(covariance_matrix(truth.cov, p))
    x_rng, eps_rng = streams(seed)
    x = x_rng.standard_normal((n, p)) @ factor.T
    eps = eps_rng.standard_normal(n)
    labels = segment_labels(truth, n)
    coef = np.stack(truth.betas0)[labels]
    y = np.einsum("ij,ij->i", x, coef) + truth.sigma * eps
    logger.debug(f"sampled n={n}, p={p}, k0={truth.k0}, seed={seed}")
    return Dataset(y=y, x=x)


def overlap_weights(truth: GroundTruthModel, iv: Interval) -> np.ndarray:
    """|(u,v] ∩ (a_{j-1}, a_j]| / (v - u) for every true segment j."""
    a = np.asarray(truth.alpha0)
    lo = np.maximum(a[:-1], iv.u)
    hi = np.minimum(a[1:], iv.v)
    return np.clip(hi - lo, 0.0, None) / iv.width


def oracle_beta_star(truth: GroundTruthModel, iv: Interval) -> np.ndarray:
    """Population least-squares coefficient on (u, v]: the overlap-weighted mix of the true betas."""
    weights = overlap_weights(truth, iv)
    return weights @ np.stack(truth.betas0)
