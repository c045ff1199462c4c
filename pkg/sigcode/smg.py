"""Sum multiplexing gain: span-avoidance probabilities, closed forms and code-set counting"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from . import config
from .codebook import sample_signatures, support_table
from .errors import InvalidDistributionError, InvalidVectorError, SupportTooLargeError, UnsupportedConfigurationError
from .models import SignatureDistribution, SmgResult
from .sigspace import exact_rank

logger = logging.getLogger(__name__)

_INT64_SAFE = 2 ** 62
CODE_SET_MAX = 20


def _direction(vector: Sequence[int]) -> Tuple[int, ...]:
    """Primitive integer vector with first nonzero entry positive; zero stays zero."""
    g = math.gcd(*(int(a) for a in vector))
    if g == 0:
        return tuple(0 for _ in vector)
    primitive = [int(a) // g for a in vector]
    lead = next(a for a in primitive if a != 0)
    return tuple(a if lead > 0 else -a for a in primitive)


def direction_classes(vectors: np.ndarray, probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Group signatures spanning the same line. Returns (directions, probs, Pr{zero})."""
    grouped: Dict[Tuple[int, ...], float] = {}
    zero_prob = 0.0
    for v, p in zip(vectors, probs):
        key = _direction(v)
        if not any(key):
            zero_prob += float(p)
            continue
        grouped[key] = grouped.get(key, 0.0) + float(p)
    K = vectors.shape[1]
    dirs = np.array(list(grouped.keys()), dtype=np.int64).reshape(-1, K)
    return dirs, np.array(list(grouped.values())), zero_prob


def _extend_complement(N: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Integer basis of span(B + c)^perp from an integer basis N of span(B)^perp."""
    if N.shape[1] == 0:
        return N
    if N.dtype != object:
        bound = int(np.abs(N).max()) * int(np.abs(c).max() if c.size else 0) * len(c)
        if 2 * bound * int(np.abs(N).max()) >= _INT64_SAFE:
            N = N.astype(object)
    y = c.astype(N.dtype) @ N
    nonzero = [j for j in range(len(y)) if y[j] != 0]
    if not nonzero:
        return N
    p = min(nonzero, key=lambda j: abs(y[j]))
    keep = [j for j in range(N.shape[1]) if j != p]
    if not keep:
        return N[:, :0]
    extended = y[p] * N[:, keep] - np.outer(N[:, p], y[keep])
    if extended.dtype == object:
        divisors = [math.gcd(*col) or 1 for col in extended.T.tolist()]
        return extended // np.array(divisors, dtype=object)
    divisors = np.gcd.reduce(extended, axis=0)
    divisors[divisors == 0] = 1
    return extended // divisors


def _outside(N: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Mask of rows of vectors lying outside the span whose complement basis is N."""
    if N.shape[1] == 0:
        return np.zeros(len(vectors), dtype=bool)
    product = vectors.astype(N.dtype) @ N
    return np.any(product != 0, axis=1)


def _set_count(m: int, draws: int) -> int:
    return sum(math.comb(m, k) for k in range(1, min(m, draws) + 1))


def _walk_sets(
    vectors: np.ndarray,
    probs: np.ndarray,
    draws: int,
    visit: Callable[[np.ndarray, float, Tuple[int, ...]], None],
    prune_full_rank: bool = False,
    cap: Optional[int] = None,
) -> None:
    """Depth-first walk over the sets of distinct classes hit by `draws` iid picks.

    visit(N, prob, members) receives the complement basis of the set's span and
    Pr{the picks hit exactly these classes}. With prune_full_rank, sets spanning
    the whole space (and every superset) are skipped.
    """
    cap = config.ENUM_CAP if cap is None else cap
    m, K = vectors.shape
    work = _set_count(m, draws)
    if work > cap:
        raise SupportTooLargeError(work, cap, what="span enumeration")

    scale = math.factorial(draws)
    powers = np.arange(draws + 1)
    inv_fact = np.array([1.0 / math.factorial(j) for j in powers])
    # truncated e^{p x} - 1 per class
    series = [np.where(powers == 0, 0.0, p ** powers * inv_fact) for p in probs]

    def descend(start: int, N: np.ndarray, poly: np.ndarray, members: Tuple[int, ...]) -> None:
        for i in range(start, m):
            if probs[i] <= 0:
                continue
            child_N = _extend_complement(N, vectors[i])
            if prune_full_rank and child_N.shape[1] == 0:
                continue
            child_poly = np.convolve(poly, series[i])[: draws + 1]
            child = members + (i,)
            visit(child_N, scale * child_poly[draws], child)
            if len(child) < draws:
                descend(i + 1, child_N, child_poly, child)

    root = np.zeros(draws + 1)
    root[0] = 1.0
    descend(0, np.eye(K, dtype=np.int64), root, ())


def _interferer_classes(dirs: np.ndarray, dir_probs: np.ndarray, zero_prob: float) -> Tuple[np.ndarray, np.ndarray]:
    if zero_prob > 0:
        zero = np.zeros((1, dirs.shape[1]), dtype=np.int64)
        return np.vstack([zero, dirs]), np.concatenate([[zero_prob], dir_probs])
    return dirs, dir_probs


@lru_cache(maxsize=256)
def span_avoid_exact(dist: SignatureDistribution, n: int, cap: Optional[int] = None) -> float:
    """Pr{s not in csp(S)} with s and the n-1 columns of S iid from dist."""
    if n < 1:
        raise InvalidDistributionError(f"n must be >= 1, got {n}")
    vectors, probs = support_table(dist)
    dirs, dir_probs, zero_prob = direction_classes(vectors, probs)
    if n == 1:
        return float(math.fsum(dir_probs))

    terms: List[float] = []

    def visit(N: np.ndarray, prob: float, members: Tuple[int, ...]) -> None:
        if prob > 0:
            terms.append(prob * float(dir_probs[_outside(N, dirs)].sum()))

    class_vectors, class_probs = _interferer_classes(dirs, dir_probs, zero_prob)
    _walk_sets(class_vectors, class_probs, n - 1, visit, prune_full_rank=True, cap=cap)
    value = math.fsum(terms)
    logger.debug(f"span_avoid_exact K={dist.K} n={n}: {len(terms)} spans, value {value:.6f}")
    return value


def span_avoid_monte_carlo(
    dist: SignatureDistribution, n: int, trials: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Monte-Carlo estimate of Pr{s not in csp(S)} and its standard error."""
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    K = dist.K
    own = sample_signatures(dist, rng, trials)
    interferers = sample_signatures(dist, rng, trials * (n - 1)).reshape(trials, n - 1, K)
    outside = np.zeros(trials, dtype=bool)
    bases: Dict[bytes, np.ndarray] = {}
    for t in range(trials):
        if not own[t].any():
            continue
        columns = np.unique(interferers[t], axis=0) if n > 1 else interferers[t]
        key = columns.tobytes()
        N = bases.get(key)
        if N is None:
            N = np.eye(K, dtype=np.int64)
            for column in columns:
                N = _extend_complement(N, column)
            bases[key] = N
        outside[t] = _outside(N, own[t][np.newaxis])[0]
    estimate = float(outside.mean())
    return estimate, float(outside.std(ddof=1) / math.sqrt(trials))


def span_avoid(
    dist: SignatureDistribution,
    n: int,
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
    cap: Optional[int] = None,
) -> Tuple[float, float, str]:
    """Exact when enumeration fits the cap, Monte Carlo otherwise. Returns (value, stderr, method)."""
    try:
        return span_avoid_exact(dist, n, cap), 0.0, "exact"
    except SupportTooLargeError as e:
        logger.warning(f"Exact span enumeration infeasible ({e}); using {trials} Monte-Carlo trials")
    rng = np.random.default_rng(0) if rng is None else rng
    value, stderr = span_avoid_monte_carlo(dist, n, trials, rng)
    return value, stderr, "monte_carlo"


def sum_multiplexing_gain(
    dist: SignatureDistribution,
    n: int,
    trials: int = 10000,
    rng: Optional[np.random.Generator] = None,
    cap: Optional[int] = None,
) -> SmgResult:
    """SMG(n) = n Pr{s not in csp(S)} / K."""
    value, stderr, method = span_avoid(dist, n, trials, rng, cap)
    scale = n / dist.K
    return SmgResult(
        value=scale * value, per_user=value / dist.K, method=method, n=n, K=dist.K, stderr=scale * stderr
    )


def rank_gap_expectation(
    dist: SignatureDistribution, n: int, trials: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """E{rank([S|s]) - rank(S)} by sampling, using exact ranks."""
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    K = dist.K
    own = sample_signatures(dist, rng, trials)
    interferers = sample_signatures(dist, rng, trials * (n - 1)).reshape(trials, n - 1, K)
    gaps = np.empty(trials)
    for t in range(trials):
        S = interferers[t].T
        gaps[t] = exact_rank(np.hstack([S, own[t][:, np.newaxis]])) - exact_rank(S)
    return float(gaps.mean()), float(gaps.std(ddof=1) / math.sqrt(trials))


def column_union_avoid(dist: SignatureDistribution, n: int) -> float:
    """Pr{s is neither a column of S nor of -S}, closed form for unmasked {-1, 1}."""
    if not dist.is_binary or dist.masked:
        raise UnsupportedConfigurationError("column-span decomposition needs the unmasked {-1, 1} alphabet")
    K = dist.K
    nu = dist.nu
    nu_bar = 1.0 - nu
    return math.fsum(
        math.comb(K, k) * nu ** k * nu_bar ** (K - k)
        * (1.0 - nu ** k * nu_bar ** (K - k) - nu_bar ** k * nu ** (K - k)) ** (n - 1)
        for k in range(K + 1)
    )


def colspan_decomposition(dist: SignatureDistribution, n: int, cap: Optional[int] = None) -> Tuple[float, float]:
    """(Pr{s not in col(S) u col(-S)}, Pr{s in csp(S) minus col(S) u col(-S)}).

    The second term is enumerated; their difference is Pr{s not in csp(S)}.
    """
    first = column_union_avoid(dist, n)
    if n == 1:
        return first, 0.0

    vectors, probs = support_table(dist)
    dirs, dir_probs, _ = direction_classes(vectors, probs)
    terms: List[float] = []

    def visit(N: np.ndarray, prob: float, members: Tuple[int, ...]) -> None:
        if prob <= 0:
            return
        inside = ~_outside(N, dirs)
        inside[list(members)] = False
        terms.append(prob * float(dir_probs[inside].sum()))

    _walk_sets(dirs, dir_probs, n - 1, visit, cap=cap)
    return first, math.fsum(terms)


def masking_only_smg(epsilon: float, n: int) -> SmgResult:
    """K = 1: a user is heard iff it transmits while every interferer is silent."""
    if not (0.0 < epsilon <= 1.0):
        raise InvalidDistributionError(f"epsilon must lie in (0, 1], got {epsilon}")
    if n < 1:
        raise InvalidDistributionError(f"n must be >= 1, got {n}")
    per_user = epsilon * (1.0 - epsilon) ** (n - 1)
    return SmgResult(value=n * per_user, per_user=per_user, method="closed_form", n=n, K=1)


def optimum_masking_only(n: int) -> Tuple[float, float]:
    """(epsilon*, SMG*) = (1/n, (1 - 1/n)^(n-1))."""
    if n < 1:
        raise InvalidDistributionError(f"n must be >= 1, got {n}")
    return 1.0 / n, (1.0 - 1.0 / n) ** (n - 1)


def two_user_closed_form(epsilon: float, nu: float, K: int) -> SmgResult:
    """SMG(2) for {-1, 1} codes with Pr{+1} = nu and masking probability 1 - epsilon."""
    if not (0.0 < epsilon <= 1.0) or not (0.0 <= nu <= 1.0) or K < 1:
        raise InvalidDistributionError(f"invalid parameters epsilon={epsilon}, nu={nu}, K={K}")
    eb = 1.0 - epsilon
    nb = 1.0 - nu
    bracket = (
        1.0
        - eb ** K
        + 2.0 * eb ** (2 * K)
        - (eb * eb + epsilon * epsilon * (nu * nu + nb * nb)) ** K
        - (eb * eb + 2.0 * epsilon * epsilon * nu * nb) ** K
    )
    value = 2.0 * bracket / K
    return SmgResult(value=value, per_user=value / 2.0, method="closed_form", n=2, K=K)


def optimize_two_user(K_max: int = 10, nu: float = 0.5) -> Tuple[int, float, float]:
    """Maximize the two-user closed form over epsilon in (0, 1] and K <= K_max."""
    best = (0, 0.0, -math.inf)
    for K in range(1, K_max + 1):
        objective = lambda e: -two_user_closed_form(e, nu, K).value  # noqa: E731
        found = minimize_scalar(objective, bounds=(1e-9, 1.0), method="bounded", options={"xatol": 1e-9})
        for eps in (float(found.x), 1.0):
            value = two_user_closed_form(eps, nu, K).value
            if value > best[2]:
                best = (K, eps, value)
    logger.info(f"Two-user optimum: K={best[0]} epsilon={best[1]:.4f} SMG={best[2]:.4f}")
    return best


@lru_cache(maxsize=None)
def rho(r: int, n: int) -> int:
    """Number of ways n-1 users can pick among r codes so that every code is used."""
    total = r ** (n - 1)
    return total - sum(math.comb(r, q) * rho(r - q, n) for q in range(1, r))


def code_set_span_avoid(codes: Sequence[Sequence[int]], n: int, max_codes: int = CODE_SET_MAX) -> Fraction:
    """Exact Pr{s not in csp(S)} when every user draws uniformly from the code set."""
    array = np.asarray(codes)
    if array.ndim != 2 or array.shape[0] == 0:
        raise InvalidVectorError("code set must be a non-empty list of equal-length vectors")
    if array.dtype.kind not in "iu":
        if not np.all(array == np.round(array)):
            raise InvalidVectorError("codes must be integer vectors")
        array = array.astype(np.int64)
    L, K = array.shape
    if L > max_codes:
        raise SupportTooLargeError(L, max_codes, what="code set")
    if not np.all(np.any(array != 0, axis=1)):
        raise InvalidVectorError("codes must be nonzero")
    if n < 1:
        raise InvalidDistributionError(f"n must be >= 1, got {n}")

    # excluded[r] = sum over codes l of #{r-subsets whose span misses code l}
    excluded = [0] * (min(L, n - 1) + 1)

    def descend(start: int, N: np.ndarray, size: int) -> None:
        excluded[size] += int(_outside(N, array).sum())
        if size == n - 1:
            return
        for i in range(start, L):
            descend(i + 1, _extend_complement(N, array[i]), size + 1)

    descend(0, np.eye(K, dtype=np.int64), 0)
    hits = sum(count * rho(r, n) for r, count in enumerate(excluded))
    return Fraction(hits, L ** n)


def code_set_smg(codes: Sequence[Sequence[int]], n: int, max_codes: int = CODE_SET_MAX) -> SmgResult:
    K = len(codes[0])
    avoid = code_set_span_avoid(codes, n, max_codes)
    return SmgResult(value=float(n * avoid / K), per_user=float(avoid / K), method="exact", n=n, K=K)
