"""Domain types shared across the signature-code modules"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidDistributionError

PMF_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SignatureDistribution:
    """Law of a randomized signature code.

    Each of the K entries is drawn independently: with probability epsilon it is
    a symbol of the symmetric alphabet (chosen by pmf), otherwise it is masked
    to zero. pmf[i] is the probability of alphabet[i].
    """

    alphabet: Tuple[int, ...]
    pmf: Tuple[float, ...]
    epsilon: float
    K: int

    def __post_init__(self):
        alphabet = tuple(int(a) for a in self.alphabet)
        pmf = tuple(float(p) for p in self.pmf)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "epsilon", float(self.epsilon))

        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise InvalidDistributionError(f"K must be a positive integer, got {self.K!r}")
        object.__setattr__(self, "K", int(self.K))
        if not alphabet:
            raise InvalidDistributionError("alphabet is empty")
        if 0 in alphabet:
            raise InvalidDistributionError("alphabet must not contain 0; masking supplies zeros")
        if len(set(alphabet)) != len(alphabet):
            raise InvalidDistributionError(f"alphabet has repeated symbols: {alphabet}")
        if set(alphabet) != {-a for a in alphabet}:
            raise InvalidDistributionError(f"alphabet must be symmetric, got {alphabet}")
        if len(pmf) != len(alphabet):
            raise InvalidDistributionError(
                f"pmf has {len(pmf)} entries for an alphabet of {len(alphabet)} symbols"
            )
        if any(not math.isfinite(p) or p < 0 for p in pmf):
            raise InvalidDistributionError(f"pmf entries must be finite and nonnegative: {pmf}")
        if abs(sum(pmf) - 1.0) > PMF_TOLERANCE:
            raise InvalidDistributionError(f"pmf sums to {sum(pmf)!r}, expected 1")
        if not (0.0 < self.epsilon <= 1.0):
            raise InvalidDistributionError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @classmethod
    def binary(cls, K: int, nu: float = 0.5, epsilon: float = 1.0) -> "SignatureDistribution":
        """Alphabet {-1, 1} with Pr{+1} = nu."""
        return cls(alphabet=(-1, 1), pmf=(1.0 - nu, nu), epsilon=epsilon, K=K)

    @classmethod
    def uniform(cls, alphabet: Tuple[int, ...], K: int, epsilon: float = 1.0) -> "SignatureDistribution":
        size = len(alphabet)
        return cls(alphabet=tuple(alphabet), pmf=tuple([1.0 / size] * size), epsilon=epsilon, K=K)

    @property
    def masked(self) -> bool:
        return self.epsilon < 1.0

    @property
    def symbols(self) -> Tuple[int, ...]:
        """Values an entry can take, zero first when masking is active."""
        return ((0,) if self.masked else ()) + self.alphabet

    def symbol_prob(self, value: int) -> float:
        if value == 0:
            return 1.0 - self.epsilon
        return self.epsilon * self.pmf[self.alphabet.index(value)]

    @property
    def second_moment(self) -> float:
        """Sum of p_a * a^2 over the alphabet."""
        return math.fsum(p * a * a for a, p in zip(self.alphabet, self.pmf))

    @property
    def is_binary(self) -> bool:
        return set(self.alphabet) == {-1, 1}

    @property
    def nu(self) -> float:
        """Probability of +1 for the binary alphabet."""
        if not self.is_binary:
            raise InvalidDistributionError(f"nu is only defined for the alphabet {{-1, 1}}, got {self.alphabet}")
        return self.pmf[self.alphabet.index(1)]

    def with_pmf(self, pmf: Tuple[float, ...]) -> "SignatureDistribution":
        return SignatureDistribution(alphabet=self.alphabet, pmf=pmf, epsilon=self.epsilon, K=self.K)


@dataclass(frozen=True)
class SupportAtom:
    vector: Tuple[int, ...]
    prob: float


@dataclass(frozen=True)
class PowerNormalization:
    """beta_sq * expected_norm_sq == 1"""

    beta_sq: float
    expected_norm_sq: float


@dataclass(frozen=True)
class ChannelDraw:
    """Squared channel magnitudes seen by one receiver: own link and the n-1 interferers."""

    own_gain_sq: float
    cross_gains_sq: Tuple[float, ...]

    def __post_init__(self):
        cross = tuple(float(g) for g in self.cross_gains_sq)
        object.__setattr__(self, "cross_gains_sq", cross)
        object.__setattr__(self, "own_gain_sq", float(self.own_gain_sq))
        for g in (self.own_gain_sq,) + cross:
            if not math.isfinite(g) or g < 0:
                raise InvalidDistributionError(f"channel gains must be finite and nonnegative, got {g}")

    @property
    def n(self) -> int:
        return len(self.cross_gains_sq) + 1

    @classmethod
    def rayleigh(cls, n: int, rng: np.random.Generator) -> "ChannelDraw":
        """Unit-mean exponential |h|^2 for every link."""
        gains = rng.exponential(1.0, size=n)
        return cls(own_gain_sq=float(gains[0]), cross_gains_sq=tuple(gains[1:]))


@dataclass(frozen=True)
class RateBreakdown:
    rate_bits_per_slot: float
    mg: float
    ief: float
    csf: float
    gamma: float
    stderr: float = 0.0
    mode: str = "exact"
    seed: Optional[int] = None


@dataclass(frozen=True)
class SchemeRate:
    """Closed-form rate of a named scheme with its multiplexing gain and entropy factor."""

    rate: Any
    mg: float
    ief: float


@dataclass(frozen=True)
class SmgResult:
    value: float
    per_user: float
    method: str
    n: int
    K: int
    stderr: float = 0.0


@dataclass(eq=False)
class MixedGaussianModel:
    """Finite mixture of zero-mean circular complex Gaussians in t dimensions."""

    weights: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        covs = np.asarray(self.covariances, dtype=complex)
        if covs.ndim == 2:
            covs = covs[np.newaxis]
        self.covariances = covs
        if self.weights.ndim != 1 or len(self.weights) != len(covs):
            raise InvalidDistributionError(
                f"{len(self.weights)} weights for {len(covs)} covariance matrices"
            )
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > PMF_TOLERANCE:
            raise InvalidDistributionError("mixture weights must be nonnegative and sum to 1")
        if covs.shape[1] != covs.shape[2]:
            raise InvalidDistributionError(f"covariances must be square, got shape {covs.shape[1:]}")
        if not np.allclose(covs, np.conj(np.swapaxes(covs, 1, 2)), atol=1e-10):
            raise InvalidDistributionError("covariances must be Hermitian")
        try:
            np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as e:
            raise InvalidDistributionError(f"covariances must be positive definite: {e}")

    @property
    def dim(self) -> int:
        return self.covariances.shape[1]

    @property
    def size(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class EpiInstance:
    """Conditional entropy-power instance.

    conditions holds (probability, law of first summand, law of second summand);
    the summands are independent given the condition.
    """

    name: str
    conditions: Tuple[Tuple[float, MixedGaussianModel, MixedGaussianModel], ...]

    @property
    def dim(self) -> int:
        return self.conditions[0][1].dim


@dataclass(frozen=True)
class EpiCheck:
    name: str
    dim: int
    lhs: float
    rhs: float
    slack: float
    holds: bool


@dataclass(frozen=True)
class DesignSearchSpace:
    K_values: Tuple[int, ...]
    nu_grid: Tuple[float, ...]
    epsilon_grid: Tuple[float, ...]
    gamma_db: float
    mc_draws: int
    seed: int = 0


@dataclass(frozen=True)
class DesignResult:
    K_star: int
    nu_star: float
    epsilon_star: float
    expected_rate: float
    stderr: float
    sweep_table: List[Dict[str, float]] = field(default_factory=list)


@dataclass(frozen=True)
class AlphabetInfo:
    """What a receiver knows about the interferers' code alphabet."""

    alphabet: Tuple[int, ...]
    masked: bool

    @property
    def magnitudes(self) -> Tuple[int, ...]:
        return tuple(sorted({abs(a) for a in self.alphabet}, reverse=True))

    @property
    def square_levels(self) -> Tuple[int, ...]:
        """Possible values of a^2 per interferer, descending."""
        squares = tuple(a * a for a in self.magnitudes)
        return squares + ((0,) if self.masked else ())

    @property
    def level_base(self) -> int:
        return len(self.alphabet) // 2 + (1 if self.masked else 0)

    @property
    def kind(self) -> str:
        if len(self.magnitudes) >= 2:
            return "two_largest"
        if self.masked:
            return "masking_only" if self.magnitudes == (1,) else "binary_masked"
        return "binary"


@dataclass(frozen=True)
class LevelObservation:
    """Distinct interference-plus-noise power levels seen over one slot.

    offdiag carries the two-slot covariance off-diagonal values, only used when
    the interferers spread over {-a, a} without masking.
    """

    levels: Tuple[float, ...]
    offdiag: Optional[Tuple[float, ...]]
    beta_sq: float
    gamma: float
    alphabet_info: AlphabetInfo


@dataclass(frozen=True)
class GainEstimate:
    gains_sq: Tuple[float, ...]
    residual: float
    n: int
    case: int


@dataclass(frozen=True)
class EpsilonInterval:
    lo: float
    hi: float
    alphabet: str

    def contains(self, epsilon: float) -> bool:
        return self.lo < epsilon < self.hi


@dataclass(frozen=True)
class Theorem1Row:
    gamma_db: float
    epsilon_hat: float
    interval_lo: float
    interval_hi: float
    in_interval: bool
    slope_spread_mask: float
    mg_spread_mask: float
    prelog_upper: float
    beats_masking: bool
    scheme_b_slope: float
    scheme_b_target: float
    corollary_ok: Optional[bool]
    rate_spread_mask_60db: float
    masking_upper_bound_60db: float
