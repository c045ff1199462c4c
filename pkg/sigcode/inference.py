"""Blind identification of the user count and sorted cross-gain magnitudes from interference power levels"""

import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .codebook import normalization
from .errors import (
    InconsistentObservationError,
    InferenceError,
    SupportTooLargeError,
    UnsupportedConfigurationError,
)
from .models import AlphabetInfo, GainEstimate, LevelObservation, SignatureDistribution

logger = logging.getLogger(__name__)

CASES = (1, 2, 3, 4)
CASE_KINDS = {
    1: ("two_largest",),
    2: ("masking_only",),
    3: ("masking_only", "binary_masked"),
    4: ("binary",),
}
DEFAULT_RTOL = 1e-5


def _assignments(levels: Sequence[int], count: int) -> np.ndarray:
    """Every choice of one level per interferer, shape (len(levels)**count, count)."""
    total = len(levels) ** count
    if total > config.SUPPORT_CAP:
        raise SupportTooLargeError(total, config.SUPPORT_CAP, what="level enumeration")
    return np.array(list(itertools.product(levels, repeat=count)), dtype=float).reshape(total, count)


def forward_levels(
    gains_sq: Sequence[float], dist: SignatureDistribution, gamma: float
) -> LevelObservation:
    """Distinct per-slot interference-plus-noise powers produced by the given interferers.

    For {-a, a} without masking every slot carries the same power, so the two-slot
    covariance off-diagonals are reported as well.
    """
    gains = np.asarray(gains_sq, dtype=float)
    if np.any(~np.isfinite(gains)) or np.any(gains < 0):
        raise InconsistentObservationError(f"gains must be finite and nonnegative, got {tuple(gains)}")
    if len(np.unique(gains)) != len(gains):
        raise UnsupportedConfigurationError("coinciding gain magnitudes cannot be told apart")

    info = AlphabetInfo(alphabet=dist.alphabet, masked=dist.masked)
    beta_sq = normalization(dist).beta_sq
    scale = beta_sq * gamma
    levels = np.unique(1.0 + scale * _assignments(info.square_levels, len(gains)) @ gains)

    offdiag = None
    if info.kind == "binary":
        a_sq = float(info.magnitudes[0] ** 2)
        offdiag = tuple(float(v) for v in np.unique(scale * a_sq * _assignments((1, -1), len(gains)) @ gains))
    return LevelObservation(
        levels=tuple(float(v) for v in levels),
        offdiag=offdiag,
        beta_sq=beta_sq,
        gamma=gamma,
        alphabet_info=info,
    )


def count_users(levels: Sequence[float], alphabet_info: AlphabetInfo) -> int:
    """Number of users whose interference yields this many distinct components.

    Pass the off-diagonal list for {-a, a} without masking, where the per-slot
    level is unique and the 2^(n-1) components live off the diagonal.
    """
    count = len(levels)
    base = 2 if alphabet_info.kind == "binary" else alphabet_info.level_base
    if count < 1:
        raise InconsistentObservationError("no levels observed")
    exponent, power = 0, 1
    while power < count:
        power *= base
        exponent += 1
    if power != count:
        raise InconsistentObservationError(f"{count} components is not a power of {base}")
    return exponent + 1


def _check_observation(obs: LevelObservation, rtol: float) -> None:
    levels = np.asarray(obs.levels, dtype=float)
    if levels.size == 0 or np.any(np.diff(levels) <= 0):
        raise InconsistentObservationError("levels must be nonempty and strictly increasing")
    # measured levels may dip below the floor by the input tolerance
    if levels[0] < 1.0 - rtol * max(levels[-1], 1.0):
        raise InconsistentObservationError(f"level {levels[0]} lies below the noise floor")
    if obs.beta_sq <= 0 or obs.gamma <= 0:
        raise InconsistentObservationError("beta_sq and gamma must be positive")


def _take(remaining: List[float], target: float, tol: float) -> bool:
    if not remaining:
        return False
    index = int(np.argmin(np.abs(np.asarray(remaining) - target)))
    if abs(remaining[index] - target) > tol:
        return False
    remaining.pop(index)
    return True


def _peel(
    values: Sequence[float], top: float, qset: Tuple[float, ...], scale: float, count: int, tol: float
) -> List[float]:
    """Recover the `count` smallest gains, smallest first.

    Values explained by the gains found so far are removed; the largest value
    left differs from the top only through the next gain.
    """
    remaining = list(values)
    _take(remaining, top, tol)
    deficits = [0.0]
    gains: List[float] = []
    step = qset[0] - qset[1]
    for k in range(count):
        if not remaining:
            raise InferenceError(f"levels ran out before gain {k + 1} of {count}")
        gain = (top - max(remaining)) / (scale * step)
        fresh = [d + scale * (qset[0] - q) * gain for d in deficits for q in qset[1:]]
        for deficit in fresh:
            _take(remaining, top - deficit, tol)
        deficits.extend(fresh)
        gains.append(gain)
    return gains


def _refine(
    values: Sequence[float], gains: np.ndarray, qset: Tuple[float, ...], offset: float, scale: float, tol: float
) -> Tuple[np.ndarray, float]:
    """Match every value to its nearest predicted component and least-squares fit the gains."""
    rows = _assignments(qset, len(gains))
    predicted = offset + scale * rows @ gains
    values = np.asarray(values, dtype=float)
    nearest = np.argmin(np.abs(values[:, np.newaxis] - predicted[np.newaxis, :]), axis=1)
    mismatch = float(np.max(np.abs(values - predicted[nearest])))
    if mismatch > tol:
        raise InferenceError("levels do not fit the recovered gains", residual=mismatch)

    design = scale * rows[nearest]
    fitted, *_ = np.linalg.lstsq(design, values - offset, rcond=None)
    residual = float(np.max(np.abs(design @ fitted + offset - values)))
    if residual > tol:
        raise InferenceError("least-squares gain fit is inconsistent", residual=residual)
    return fitted, residual


def solve_case(
    obs: LevelObservation, case: int, n: Optional[int] = None, rtol: float = DEFAULT_RTOL
) -> GainEstimate:
    """Sorted cross-gain magnitudes from the observed levels.

    Cases 1 to 3 work on the per-slot levels (two largest magnitudes, masking over
    {-1, 1}, masking over {-a, a}); case 4 on the diagonal plus off-diagonals of
    the two-slot covariance. n is counted from the levels unless given, in which
    case a partial list holding the largest values is enough.
    """
    if case not in CASES:
        raise UnsupportedConfigurationError(f"case must be one of {CASES}, got {case}")
    info = obs.alphabet_info
    if info.kind not in CASE_KINDS[case]:
        raise UnsupportedConfigurationError(
            f"case {case} needs an alphabet of kind {CASE_KINDS[case]}, got {info.kind} ({info.alphabet}, masked={info.masked})"
        )
    _check_observation(obs, rtol)
    scale = obs.beta_sq * obs.gamma

    if case == 4:
        a_sq = float(info.magnitudes[0] ** 2)
        qset: Tuple[float, ...] = (a_sq, -a_sq)
        offset = 0.0
        top = obs.levels[-1] - 1.0
        values = list(obs.offdiag or ())
        if n is None:
            if obs.offdiag is None:
                raise InconsistentObservationError("case 4 needs off-diagonal values or an explicit n")
            n = count_users(obs.offdiag, info)
    else:
        qset = tuple(float(q) for q in info.square_levels)
        offset = 1.0
        top = obs.levels[-1]
        values = list(obs.levels)
        if n is None:
            n = count_users(obs.levels, info)

    if n < 2:
        raise InconsistentObservationError(f"observation carries no interferers (n={n})")
    tol = rtol * max(abs(top), 1.0)

    gains = _peel(values, top, qset, scale, n - 2, tol)
    gains.append((top - offset) / (scale * qset[0]) - sum(gains))
    gains_arr = np.array(gains)
    if np.any(gains_arr < -tol / scale):
        raise InferenceError(f"negative gain recovered: {tuple(gains)}")
    if np.any(np.diff(gains_arr) <= 0):
        raise UnsupportedConfigurationError(f"recovered gains are not distinct and increasing: {tuple(gains)}")

    residual = 0.0
    fit_values = values if case != 4 else values + [top]
    if fit_values:
        gains_arr, residual = _refine(fit_values, gains_arr, qset, offset, scale, tol)
    gains_arr = np.sort(np.clip(gains_arr, 0.0, None))
    logger.debug(f"Case {case}: n={n}, gains={tuple(np.round(gains_arr, 6))}, residual={residual:.2e}")
    return GainEstimate(gains_sq=tuple(float(g) for g in gains_arr), residual=residual, n=n, case=case)


def case_distribution(case: int, K: int = 1) -> SignatureDistribution:
    """Interferer law used for the seeded roundtrips of each case."""
    if case == 1:
        return SignatureDistribution.uniform((-2, -1, 1, 2), K=K, epsilon=0.5)
    if case == 2:
        return SignatureDistribution.binary(K, epsilon=0.5)
    if case == 3:
        return SignatureDistribution.uniform((-2, 2), K=K, epsilon=0.5)
    if case == 4:
        return SignatureDistribution.binary(max(K, 2), epsilon=1.0)
    raise UnsupportedConfigurationError(f"case must be one of {CASES}, got {case}")
