"""Differential entropy of Gaussian mixtures: closed-form bounds, Monte-Carlo estimates, EPI checks"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp
from scipy.stats import entropy

from . import config
from .codebook import normalization, support_table
from .errors import InvalidDistributionError, SupportTooLargeError
from .models import ChannelDraw, EpiCheck, EpiInstance, MixedGaussianModel, SignatureDistribution
from .rate import sign_classes
from .sigspace import log2det_pd

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
LOG2_PI_E = math.log2(math.pi * math.e)
# Gaussian summands meet the inequality with equality
EQUALITY_RTOL = 1e-9


def gaussian_entropy(covariance: np.ndarray) -> float:
    """Entropy in bits of a circular complex Gaussian with the given covariance."""
    covariance = np.asarray(covariance)
    return covariance.shape[-1] * LOG2_PI_E + float(log2det_pd(covariance))


def entropy_bounds(model: MixedGaussianModel) -> Tuple[float, float]:
    """Lower bound sum_l q_l h(N(0, Omega_l)); upper bound adds the entropy of the weights."""
    active = model.weights > 0
    weights = model.weights[active]
    per_component = model.dim * LOG2_PI_E + log2det_pd(model.covariances[active])
    lower = float(weights @ per_component)
    return lower, lower + float(entropy(weights, base=2))


def _log_density(model: MixedGaussianModel, samples: np.ndarray, factors: np.ndarray) -> np.ndarray:
    t = model.dim
    terms = np.empty((model.size, len(samples)))
    for l in range(model.size):
        whitened = solve_triangular(factors[l], samples.T, lower=True)
        quad = np.sum(np.abs(whitened) ** 2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.abs(np.diag(factors[l]))))
        with np.errstate(divide="ignore"):
            log_weight = np.log(model.weights[l])
        terms[l] = log_weight - t * math.log(math.pi) - logdet - quad
    return logsumexp(terms, axis=0)


def sample_mixture(model: MixedGaussianModel, size: int, rng: np.random.Generator) -> np.ndarray:
    factors = np.linalg.cholesky(model.covariances)
    labels = rng.choice(model.size, size=size, p=model.weights)
    white = (rng.standard_normal((size, model.dim)) + 1j * rng.standard_normal((size, model.dim))) / math.sqrt(2.0)
    return np.einsum("nij,nj->ni", factors[labels], white)


def entropy_mc(model: MixedGaussianModel, samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    """Plug-in estimate -E log2 p(X) with its standard error."""
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    factors = np.linalg.cholesky(model.covariances)
    draws = sample_mixture(model, samples, rng)
    neg_log2 = -_log_density(model, draws, factors) / LOG2
    return float(neg_log2.mean()), float(neg_log2.std(ddof=1) / math.sqrt(samples))


def sum_model(first: MixedGaussianModel, second: MixedGaussianModel) -> MixedGaussianModel:
    """Law of the sum of independent mixtures: pairwise products of components."""
    if first.dim != second.dim:
        raise InvalidDistributionError(f"dimension mismatch: {first.dim} vs {second.dim}")
    weights = np.outer(first.weights, second.weights).ravel()
    covs = (first.covariances[:, np.newaxis] + second.covariances[np.newaxis, :]).reshape(-1, first.dim, first.dim)
    return MixedGaussianModel(weights=weights, covariances=covs)


def _conditional_entropy(
    parts: Sequence[Tuple[float, MixedGaussianModel]], samples: int, rng: np.random.Generator
) -> Tuple[float, float]:
    value, variance = 0.0, 0.0
    for prob, model in parts:
        if model.size == 1:
            h, se = gaussian_entropy(model.covariances[0]), 0.0
        else:
            h, se = entropy_mc(model, samples, rng)
        value += prob * h
        variance += (prob * se) ** 2
    return value, math.sqrt(variance)


def epi_check(instances: Sequence[EpiInstance], samples: int, rng: np.random.Generator) -> List[EpiCheck]:
    """Check 2^{h(A+B|C)/t} >= 2^{h(A|C)/t} + 2^{h(B|C)/t} up to four standard errors."""
    reports = []
    for instance in instances:
        t = instance.dim
        sums = [(p, sum_model(a, b)) for p, a, b in instance.conditions]
        h_sum, se_sum = _conditional_entropy(sums, samples, rng)
        h_a, se_a = _conditional_entropy([(p, a) for p, a, _ in instance.conditions], samples, rng)
        h_b, se_b = _conditional_entropy([(p, b) for p, _, b in instance.conditions], samples, rng)

        lhs = 2.0 ** (h_sum / t)
        rhs = 2.0 ** (h_a / t) + 2.0 ** (h_b / t)
        slack = 4.0 * (LOG2 / t) * math.sqrt(
            (lhs * se_sum) ** 2 + (2.0 ** (h_a / t) * se_a) ** 2 + (2.0 ** (h_b / t) * se_b) ** 2
        )
        holds = lhs >= rhs - slack - EQUALITY_RTOL * rhs
        logger.debug(f"EPI {instance.name}: lhs={lhs:.4f} rhs={rhs:.4f} slack={slack:.4f}")
        reports.append(EpiCheck(name=instance.name, dim=t, lhs=lhs, rhs=rhs, slack=slack, holds=holds))
    return reports


def _gaussian(covariance) -> MixedGaussianModel:
    return MixedGaussianModel(weights=[1.0], covariances=np.asarray(covariance, dtype=complex)[np.newaxis])


def interference_mixture(
    dist: SignatureDistribution, n: int, channel: ChannelDraw, gamma: float, noise: float = 1.0
) -> MixedGaussianModel:
    """Law of interference plus noise at one receiver: I + beta^2 gamma S Xi Xi^T S^T per interferer matrix S."""
    if channel.n != n:
        raise InvalidDistributionError(f"channel has {channel.n} links, expected n={n}")
    K = dist.K
    reps, probs = sign_classes(*support_table(dist))
    keep = probs > 0
    reps, probs = reps[keep], probs[keep]
    count = len(reps) ** (n - 1)
    if count > config.RATE_CAP:
        raise SupportTooLargeError(count, config.RATE_CAP, what="interference mixture")
    scale = normalization(dist).beta_sq * gamma
    gains = np.asarray(channel.cross_gains_sq, dtype=float)

    index = np.indices((len(reps),) * (n - 1)).reshape(n - 1, -1).T if n > 1 else np.zeros((1, 0), dtype=int)
    columns = reps[index].astype(float)
    covs = noise * np.eye(K) + scale * np.einsum("cjk,j,cjl->ckl", columns, gains, columns)
    weights = np.prod(probs[index], axis=1)
    return MixedGaussianModel(weights=weights / weights.sum(), covariances=covs.astype(complex))


def scheme_b_epi_instance(epsilon: float, gamma: float, h11_sq: float, h21_sq: float) -> EpiInstance:
    """Scalar masking case: own signal (given it is sent) plus masked interference and noise."""
    beta_sq = 1.0 / epsilon
    signal = _gaussian([[beta_sq * gamma * h11_sq]])
    if epsilon < 1.0:
        interference = MixedGaussianModel(
            weights=[1.0 - epsilon, epsilon],
            covariances=np.array([[[1.0]], [[1.0 + beta_sq * gamma * h21_sq]]], dtype=complex),
        )
    else:
        interference = _gaussian([[1.0 + beta_sq * gamma * h21_sq]])
    return EpiInstance(name=f"masking eps={epsilon:g}", conditions=((1.0, signal, interference),))


def spread_epi_instance(epsilon: float, nu: float, gamma: float, h11_sq: float, h21_sq: float) -> EpiInstance:
    """K = 2 over {-1, 1}, conditioned on the user's own nonzero signature.

    The noise is split evenly between the two summands so both are nonsingular.
    """
    dist = SignatureDistribution.binary(2, nu=nu, epsilon=epsilon)
    interference = interference_mixture(dist, 2, ChannelDraw(h11_sq, (h21_sq,)), gamma, noise=0.5)
    reps, probs = sign_classes(*support_table(dist))
    scale = normalization(dist).beta_sq * gamma
    active = [(s, p) for s, p in zip(reps, probs) if p > 0 and np.any(s)]
    total = sum(p for _, p in active)
    conditions = tuple(
        (p / total, _gaussian(0.5 * np.eye(2) + scale * h11_sq * np.outer(s, s)), interference) for s, p in active
    )
    return EpiInstance(name=f"spread K=2 eps={epsilon:g} nu={nu:g}", conditions=conditions)
