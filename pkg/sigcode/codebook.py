"""Randomized signature codebook: normalization, support, sampling and Gram entropy"""

import itertools
import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb, xlogy
from scipy.stats import entropy

from . import config
from .errors import InvalidVectorError, SupportTooLargeError, UnsupportedConfigurationError
from .models import PowerNormalization, SignatureDistribution, SupportAtom

logger = logging.getLogger(__name__)

GRAM_METHODS = ("auto", "closed_form", "brute_force")


def binary_entropy(p: float) -> float:
    """Entropy in bits of a Bernoulli(p) variable."""
    return float(entropy([p, 1.0 - p], base=2))


def normalization(dist: SignatureDistribution) -> PowerNormalization:
    expected = dist.K * dist.epsilon * dist.second_moment
    return PowerNormalization(beta_sq=1.0 / expected, expected_norm_sq=expected)


def support_size(dist: SignatureDistribution) -> int:
    return len(dist.symbols) ** dist.K


def _check_cap(dist: SignatureDistribution, cap: Optional[int]) -> None:
    cap = config.SUPPORT_CAP if cap is None else cap
    size = support_size(dist)
    if size > cap:
        raise SupportTooLargeError(size, cap)


def support_table(dist: SignatureDistribution, cap: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Every structurally possible signature with its probability, zero-probability rows included.

    The row order depends only on (alphabet, epsilon < 1, K), so tables built for
    different pmfs over the same alphabet line up row by row.
    """
    _check_cap(dist, cap)
    symbols = dist.symbols
    vectors = np.array(list(itertools.product(symbols, repeat=dist.K)), dtype=np.int64)
    symbol_probs = np.array([dist.symbol_prob(a) for a in symbols])
    index = {a: i for i, a in enumerate(symbols)}
    lookup = np.vectorize(index.__getitem__)(vectors)
    probs = np.prod(symbol_probs[lookup], axis=1)
    return vectors, probs


def enumerate_support(dist: SignatureDistribution, cap: Optional[int] = None) -> List[SupportAtom]:
    """All signatures with positive probability."""
    vectors, probs = support_table(dist, cap)
    return [
        SupportAtom(vector=tuple(int(a) for a in v), prob=float(p))
        for v, p in zip(vectors, probs)
        if p > 0
    ]


def signature_prob(dist: SignatureDistribution, vector: Sequence[int]) -> float:
    if len(vector) != dist.K:
        raise InvalidVectorError(f"expected a vector of length {dist.K}, got {len(vector)}")
    allowed = set(dist.alphabet) | {0}
    prob = 1.0
    for entry in vector:
        if entry not in allowed or int(entry) != entry:
            raise InvalidVectorError(f"entry {entry!r} is outside the alphabet {dist.alphabet} and 0")
        prob *= dist.symbol_prob(int(entry))
    return prob


def sample_signatures(dist: SignatureDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    """(size, K) integer array of independent signatures."""
    present = rng.random((size, dist.K)) < dist.epsilon
    symbols = rng.choice(np.asarray(dist.alphabet, dtype=np.int64), size=(size, dist.K), p=np.asarray(dist.pmf))
    return np.where(present, symbols, 0)


def sample_signature(dist: SignatureDistribution, rng: np.random.Generator) -> Tuple[int, ...]:
    return tuple(int(a) for a in sample_signatures(dist, rng, 1)[0])


def closed_form_applies(dist: SignatureDistribution) -> bool:
    return dist.is_binary and (dist.K == 2 or not dist.masked)


def _closed_form_entropy(dist: SignatureDistribution) -> float:
    nu = dist.nu
    nu_bar = 1.0 - nu
    if dist.K == 2:
        eps = dist.epsilon
        return 2.0 * binary_entropy(eps) + eps * eps * binary_entropy(nu * nu + nu_bar * nu_bar)

    # Unmasked {-1, 1}: s s^T identifies s up to sign; a sign class with k+1
    # plus signs in the representative occurs C(K-1, k) times.
    K = dist.K
    k = np.arange(K)
    q = nu ** (k + 1) * nu_bar ** (K - 1 - k) + nu ** (K - 1 - k) * nu_bar ** (k + 1)
    return float(-np.sum(comb(K - 1, k) * xlogy(q, q)) / math.log(2.0))


def _gram_key(vector: Sequence[int]) -> Tuple[int, ...]:
    K = len(vector)
    return tuple(vector[a] * vector[b] for a in range(K) for b in range(a, K))


def _grouped_entropy(atoms: Sequence[Tuple[Sequence[int], float]]) -> float:
    grams: Dict[Tuple[int, ...], float] = defaultdict(float)
    for vector, prob in atoms:
        grams[_gram_key(vector)] += prob
    return float(entropy(list(grams.values()), base=2))


def gram_entropy(dist: SignatureDistribution, method: str = "auto", cap: Optional[int] = None) -> float:
    """H(s s^T) in bits.

    closed_form covers K = 2 over {-1, 1} (any epsilon) and unmasked {-1, 1}
    (any K); brute_force groups the enumerated support by outer product.
    """
    if method not in GRAM_METHODS:
        raise ValueError(f"method must be one of {GRAM_METHODS}, got {method!r}")
    if method == "auto":
        method = "closed_form" if closed_form_applies(dist) else "brute_force"
    if method == "closed_form":
        if not closed_form_applies(dist):
            raise UnsupportedConfigurationError(
                f"no closed-form Gram entropy for alphabet {dist.alphabet}, K={dist.K}, epsilon={dist.epsilon}"
            )
        return _closed_form_entropy(dist)
    return _grouped_entropy([(atom.vector, atom.prob) for atom in enumerate_support(dist, cap)])


def code_set_gram_entropy(codes: Sequence[Sequence[int]]) -> float:
    """H(s s^T) when s is uniform over a finite code set."""
    if not codes:
        raise InvalidVectorError("code set is empty")
    weight = 1.0 / len(codes)
    return _grouped_entropy([(tuple(int(a) for a in c), weight) for c in codes])
