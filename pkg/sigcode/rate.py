"""Achievable-rate lower bound with its multiplexing-gain, entropy and constant decomposition"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import config
from .codebook import binary_entropy, gram_entropy, normalization, sample_signatures, signature_prob, support_table
from .errors import InvalidDistributionError, InvalidVectorError, SupportTooLargeError
from .models import ChannelDraw, RateBreakdown, SchemeRate, SignatureDistribution
from .sigspace import det_ratio_terms, informed_log_det
from .smg import span_avoid

logger = logging.getLogger(__name__)

RATE_MODES = ("exact", "sampled")
CHUNK = 4096
# smallest gamma_hi / gamma_lo for a slope estimate
MIN_SLOPE_SPAN = 100.0


def _sign_class(vector: Sequence[int]) -> Tuple[int, ...]:
    lead = next((a for a in vector if a != 0), 0)
    return tuple(int(a) if lead >= 0 else -int(a) for a in vector)


def sign_classes(vectors: np.ndarray, probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Merge s with -s (same outer product). Order follows first appearance."""
    classes: Dict[Tuple[int, ...], float] = {}
    for v, p in zip(vectors, probs):
        key = _sign_class(v)
        classes[key] = classes.get(key, 0.0) + float(p)
    reps = np.array(list(classes.keys()), dtype=np.int64).reshape(-1, vectors.shape[1])
    return reps, np.array(list(classes.values()))


def _check_channel(n: int, channel: ChannelDraw, gamma: float) -> None:
    if n < 1:
        raise InvalidDistributionError(f"n must be >= 1, got {n}")
    if channel.n != n:
        raise InvalidDistributionError(f"channel has {channel.n} links, expected n={n}")
    if not math.isfinite(gamma) or gamma <= 0:
        raise InvalidDistributionError(f"gamma must be positive and finite, got {gamma}")


def excess_terms(
    own: np.ndarray, columns: np.ndarray, gains_sq: np.ndarray, beta_sq: float, gamma: float
) -> np.ndarray:
    """num - den of det_ratio_terms for every own signature (rows) and interferer matrix (columns).

    columns is a stack (C, n-1, K) with one interferer signature per row.
    """
    stack = np.swapaxes(columns, 1, 2).astype(float)
    excess = np.empty((len(own), len(columns)))
    for i, s in enumerate(own):
        num, den = det_ratio_terms(s, stack, gains_sq, beta_sq, gamma)
        excess[i] = num - den
    return excess


class RateGeometry:
    """Log-det tables for one channel draw.

    The tables depend on the alphabet, masking and normalization only, so one
    geometry evaluates every pmf over the same alphabet with the same second
    moment (e.g. all nu for {-1, 1}).
    """

    def __init__(self, dist: SignatureDistribution, n: int, channel: ChannelDraw, gamma: float, cap: Optional[int] = None):
        _check_channel(n, channel, gamma)
        self.dist = dist
        self.n = n
        self.channel = channel
        self.gamma = gamma
        self.beta_sq = normalization(dist).beta_sq
        self.scale = self.beta_sq * gamma

        vectors, probs = support_table(dist)
        self._vectors = vectors
        reps, _ = sign_classes(vectors, probs)
        nonzero = np.any(reps != 0, axis=1)
        self.own = reps[nonzero]
        self.columns = reps
        self.own_norm_sq = np.sum(self.own * self.own, axis=1).astype(float)

        combos = len(self.columns) ** (n - 1)
        work = combos * (len(self.own) + 1)
        cap = config.RATE_CAP if cap is None else cap
        if work > cap:
            raise SupportTooLargeError(work, cap, what="exact rate log-det evaluations")
        self.index = self._combinations(len(self.columns), n - 1)
        gains = np.asarray(channel.cross_gains_sq, dtype=float)
        self.excess = np.empty((len(self.own), combos))
        for start in range(0, combos, CHUNK):
            block = self.index[start : start + CHUNK]
            self.excess[:, start : start + CHUNK] = excess_terms(
                self.own, self.columns[block], gains, self.beta_sq, gamma
            )

    @staticmethod
    def _combinations(m: int, width: int) -> np.ndarray:
        if width == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices((m,) * width).reshape(width, -1).T
        return grids.astype(np.int64)

    def class_probabilities(self, dist: SignatureDistribution) -> Tuple[np.ndarray, np.ndarray]:
        """(Pr of each own sign class, Pr of each interferer sign class) under dist."""
        if (
            dist.alphabet != self.dist.alphabet
            or dist.K != self.dist.K
            or dist.epsilon != self.dist.epsilon
            or abs(dist.second_moment - self.dist.second_moment) > 1e-12
        ):
            raise InvalidDistributionError("distribution does not share this geometry's support and normalization")
        vectors, probs = support_table(dist)
        _, class_probs = sign_classes(vectors, probs)
        nonzero = np.any(self.columns != 0, axis=1)
        return class_probs[nonzero], class_probs

    def _prefactor(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(self.channel.own_gain_sq * self.own_norm_sq * self.scale)

    def log2_varrho(self, dist: Optional[SignatureDistribution] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(Pr of each own sign class, log2 varrho for it)."""
        dist = self.dist if dist is None else dist
        own_probs, column_probs = self.class_probabilities(dist)
        matrix_probs = np.prod(column_probs[self.index], axis=1)
        return own_probs, self._prefactor() + self.excess @ matrix_probs

    def rates(self, own_probs: np.ndarray, column_probs: np.ndarray, entropy_bits: np.ndarray) -> np.ndarray:
        """Rates for a batch of pmfs given as stacked class probabilities (P, ...)."""
        own_probs = np.atleast_2d(own_probs)
        column_probs = np.atleast_2d(column_probs)
        matrix_probs = np.prod(column_probs[:, self.index], axis=2)
        log_varrho = self._prefactor() + matrix_probs @ self.excess.T
        penalty = (self.n - 1) * np.asarray(entropy_bits, dtype=float).reshape(-1, 1)
        return np.sum(own_probs * np.logaddexp2(0.0, log_varrho - penalty), axis=1) / self.dist.K

    def rate(self, dist: Optional[SignatureDistribution] = None, entropy_bits: Optional[float] = None) -> float:
        dist = self.dist if dist is None else dist
        if entropy_bits is None:
            entropy_bits = gram_entropy(dist)
        own_probs, column_probs = self.class_probabilities(dist)
        return float(self.rates(own_probs, column_probs, np.array([entropy_bits]))[0])


def _sampled_log2_varrho(
    dist: SignatureDistribution,
    n: int,
    channel: ChannelDraw,
    gamma: float,
    own: np.ndarray,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    beta_sq = normalization(dist).beta_sq
    gains = np.asarray(channel.cross_gains_sq, dtype=float)
    columns = sample_signatures(dist, rng, trials * (n - 1)).reshape(trials, n - 1, dist.K)
    total = np.zeros(len(own))
    for start in range(0, trials, CHUNK):
        total += excess_terms(own, columns[start : start + CHUNK], gains, beta_sq, gamma).sum(axis=1)
    norm_sq = np.sum(own * own, axis=1).astype(float)
    with np.errstate(divide="ignore"):
        return np.log2(channel.own_gain_sq * norm_sq * beta_sq * gamma) + total / trials


def achievable_rate(
    dist: SignatureDistribution,
    n: int,
    channel: ChannelDraw,
    gamma: float,
    mode: str = "exact",
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """The rate lower bound alone, in bits per slot."""
    if mode not in RATE_MODES:
        raise ValueError(f"mode must be one of {RATE_MODES}, got {mode!r}")
    if mode == "exact":
        return RateGeometry(dist, n, channel, gamma).rate()

    _check_channel(n, channel, gamma)
    rng = np.random.default_rng(0) if rng is None else rng
    vectors, probs = support_table(dist)
    reps, class_probs = sign_classes(vectors, probs)
    nonzero = np.any(reps != 0, axis=1)
    log_varrho = _sampled_log2_varrho(dist, n, channel, gamma, reps[nonzero], trials, rng)
    penalty = (n - 1) * gram_entropy(dist)
    return float(class_probs[nonzero] @ np.logaddexp2(0.0, log_varrho - penalty)) / dist.K


def varrho(
    dist: SignatureDistribution,
    n: int,
    channel: ChannelDraw,
    s: Sequence[int],
    gamma: float,
    mode: str = "exact",
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Effective SINR factor of signature s: own power times the projected-interference penalty."""
    if mode not in RATE_MODES:
        raise ValueError(f"mode must be one of {RATE_MODES}, got {mode!r}")
    if signature_prob(dist, s) <= 0:
        raise InvalidVectorError(f"signature {tuple(s)} is outside the support")
    if not any(s):
        raise InvalidVectorError("the zero signature carries no signal")
    key = np.array(_sign_class(s), dtype=np.int64)
    if mode == "sampled":
        _check_channel(n, channel, gamma)
        rng = np.random.default_rng(0) if rng is None else rng
        return float(2.0 ** _sampled_log2_varrho(dist, n, channel, gamma, key[np.newaxis], trials, rng)[0])
    geometry = RateGeometry(dist, n, channel, gamma)
    row = int(np.flatnonzero(np.all(geometry.own == key, axis=1))[0])
    _, log_varrho = geometry.log2_varrho()
    return float(2.0 ** log_varrho[row])


def rate_lower_bound(
    dist: SignatureDistribution,
    n: int,
    channel: ChannelDraw,
    gamma: float,
    mode: str = "exact",
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> RateBreakdown:
    """C_lb with MG, IEF and the constant CSF = C_lb - MG log2(gamma) + IEF."""
    if rng is None and seed is not None:
        rng = np.random.default_rng(seed)
    rate = achievable_rate(dist, n, channel, gamma, mode, trials, rng)
    avoid, avoid_stderr, method = span_avoid(dist, n, trials, rng)
    mg = avoid / dist.K
    entropy_bits = gram_entropy(dist)
    p_active = 1.0 - (1.0 - dist.epsilon) ** dist.K
    ief = p_active * (n - 1) * entropy_bits / dist.K
    csf = rate - mg * math.log2(gamma) + ief
    logger.debug(f"rate_lower_bound K={dist.K} n={n} gamma={gamma:g}: rate={rate:.6f} mg={mg:.4f} ief={ief:.4f}")
    return RateBreakdown(
        rate_bits_per_slot=rate,
        mg=mg,
        ief=ief,
        csf=csf,
        gamma=gamma,
        stderr=avoid_stderr / dist.K,
        mode=mode if method == "exact" else f"{mode}+monte_carlo_mg",
        seed=seed,
    )


def informed_rate_upper(
    dist: SignatureDistribution, n: int, channel: ChannelDraw, gamma: float, cap: Optional[int] = None
) -> float:
    """Rate of a receiver that also knows every interferer's signature, in bits per slot."""
    geometry = RateGeometry(dist, n, channel, gamma, cap)
    _, own_probs_all = sign_classes(*support_table(dist))
    nonzero = np.any(geometry.columns != 0, axis=1)
    own_probs = own_probs_all[nonzero]
    matrix_probs = np.prod(own_probs_all[geometry.index], axis=1)

    gains = np.asarray(channel.cross_gains_sq, dtype=float)
    beta_sq = geometry.beta_sq
    total = 0.0
    for start in range(0, len(geometry.index), CHUNK):
        stack = np.swapaxes(geometry.columns[geometry.index[start : start + CHUNK]], 1, 2).astype(float)
        # no own signal: interference alone
        den = informed_log_det(geometry.own[0], stack, 0.0, gains, beta_sq, gamma)
        weights = matrix_probs[start : start + CHUNK]
        for s, p in zip(geometry.own, own_probs):
            joint = informed_log_det(s, stack, channel.own_gain_sq, gains, beta_sq, gamma)
            total += p * float(weights @ (joint - den))
    return total / dist.K


def snr_scaling_slope(
    dist: SignatureDistribution,
    n: int,
    channel: ChannelDraw,
    gamma_lo: float,
    gamma_hi: float,
    mode: str = "exact",
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Finite-difference d C_lb / d log2(gamma)."""
    if not (0 < gamma_lo < gamma_hi):
        raise InvalidDistributionError(f"need 0 < gamma_lo < gamma_hi, got {gamma_lo}, {gamma_hi}")
    if gamma_hi < MIN_SLOPE_SPAN * gamma_lo:
        raise InvalidDistributionError(f"gamma_hi must be >= {MIN_SLOPE_SPAN:g} gamma_lo, got {gamma_lo}, {gamma_hi}")
    if mode == "sampled":
        seed = int(np.random.default_rng(0).integers(2 ** 32)) if rng is None else int(rng.integers(2 ** 32))
        lo = achievable_rate(dist, n, channel, gamma_lo, mode, trials, np.random.default_rng(seed))
        hi = achievable_rate(dist, n, channel, gamma_hi, mode, trials, np.random.default_rng(seed))
    else:
        lo = achievable_rate(dist, n, channel, gamma_lo)
        hi = achievable_rate(dist, n, channel, gamma_hi)
    return (hi - lo) / (math.log2(gamma_hi) - math.log2(gamma_lo))


def gaussian_bound_rate(K: int, nu: float, gamma: float, channel: ChannelDraw) -> float:
    """Rate when interference plus noise is treated as Gaussian with the spreading covariance.

    Chips are i.i.d. with mean 2nu - 1, so the covariance splits into a white part c = 1 - d
    and a rank-one all-ones part d = (2nu - 1)^2.
    """
    if K < 1 or not (0.0 <= nu <= 1.0):
        raise InvalidDistributionError(f"invalid parameters K={K}, nu={nu}")
    d = (2.0 * nu - 1.0) ** 2
    c = 1.0 - d
    interference = math.fsum(channel.cross_gains_sq)
    total = interference + channel.own_gain_sq

    def coloured(power: float) -> float:
        return 1.0 + d * gamma * power / (1.0 + c * gamma * power / K)

    first = math.log2(1.0 + (c * gamma * channel.own_gain_sq / K) / (1.0 + c * gamma * interference / K))
    return first + math.log2(coloured(total) / coloured(interference)) / K


def scheme_b_rate(epsilon: float, gamma: float, h11_sq, h21_sq) -> SchemeRate:
    """Masking only (K = 1, {-1, 1}) between two users; gains may be arrays."""
    if not (0.0 < epsilon <= 1.0):
        raise InvalidDistributionError(f"epsilon must lie in (0, 1], got {epsilon}")
    h11 = np.asarray(h11_sq, dtype=float)
    h21 = np.asarray(h21_sq, dtype=float)
    h_eps = binary_entropy(epsilon)
    with np.errstate(divide="ignore"):
        log_varrho = np.log2(h11 * gamma / epsilon) - epsilon * np.log2(1.0 + h21 * gamma / epsilon)
    rate = epsilon * np.logaddexp2(0.0, log_varrho - h_eps)
    return SchemeRate(rate=rate if rate.ndim else float(rate), mg=epsilon * (1.0 - epsilon), ief=epsilon * h_eps)


def scheme_a_rate(epsilon: float, gamma: float, h11_sq, h21_sq, nu: float = 0.5) -> SchemeRate:
    """Spreading over {-1, 1} with K = 2 plus masking between two users; gains may be arrays.

    Own signatures fall in three classes (one nonzero entry, +-(1,1), +-(1,-1)),
    each with its own closed-form varrho.
    """
    if not (0.0 < epsilon <= 1.0) or not (0.0 <= nu <= 1.0):
        raise InvalidDistributionError(f"invalid parameters epsilon={epsilon}, nu={nu}")
    h11 = np.asarray(h11_sq, dtype=float)
    x = np.asarray(h21_sq, dtype=float) * gamma
    eps, eps_bar = epsilon, 1.0 - epsilon
    nu_bar = 1.0 - nu
    same = nu * nu + nu_bar * nu_bar
    opposite = 2.0 * nu * nu_bar
    entropy_bits = 2.0 * binary_entropy(eps) + eps * eps * binary_entropy(same)

    half = np.log2(1.0 + x / (2.0 * eps))
    full = np.log2(1.0 + x / eps)
    quarter = np.log2(1.0 + x / (4.0 * eps))
    with np.errstate(divide="ignore"):
        own = np.log2(h11 * gamma / eps)
    single = own - 1.0 - (eps * eps_bar - eps * eps) * half - eps * eps * full
    spread = own + 2.0 * eps * eps_bar * (quarter - half)
    aligned = spread - eps * eps * same * full
    crossed = spread - eps * eps * opposite * full

    def gain(log_varrho):
        return np.logaddexp2(0.0, log_varrho - entropy_bits)

    rate = 0.5 * (
        2.0 * eps * eps_bar * gain(single) + eps * eps * same * gain(aligned) + eps * eps * opposite * gain(crossed)
    )
    bracket = (
        1.0
        - eps_bar ** 2
        + 2.0 * eps_bar ** 4
        - (eps_bar ** 2 + eps * eps * same) ** 2
        - (eps_bar ** 2 + eps * eps * opposite) ** 2
    )
    return SchemeRate(rate=rate if rate.ndim else float(rate), mg=bracket / 2.0, ief=eps * entropy_bits / 2.0)
