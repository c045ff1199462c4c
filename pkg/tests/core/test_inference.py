#!/usr/bin/env python3
"""
Blind inference tests: level generation, user counting and gain recovery for every case.
"""

import numpy as np
import pytest

from sigcode.errors import (
    InconsistentObservationError,
    InferenceError,
    UnsupportedConfigurationError,
)
from sigcode.inference import CASES, case_distribution, count_users, forward_levels, solve_case
from sigcode.models import AlphabetInfo, LevelObservation, SignatureDistribution

# no subset-sum or signed-sum coincidences among these
GAINS = (0.37, 1.13, 2.71)
MASKED_BINARY = AlphabetInfo(alphabet=(-1, 1), masked=True)
UNMASKED_BINARY = AlphabetInfo(alphabet=(-1, 1), masked=False)


def _jitter(values, rng, rel=1e-6):
    values = np.asarray(values, dtype=float)
    return tuple(np.sort(values * (1.0 + rel * rng.standard_normal(values.size))))


def _observation(levels, info, offdiag=None, beta_sq=1.0, gamma=1.0):
    return LevelObservation(levels=tuple(levels), offdiag=offdiag, beta_sq=beta_sq, gamma=gamma, alphabet_info=info)


class TestAlphabetInfo:
    """Alphabet knowledge drives the inference case"""

    @pytest.mark.parametrize("alphabet,masked,kind", [
        ((-2, -1, 1, 2), True, "two_largest"),
        ((-1, 1), True, "masking_only"),
        ((-2, 2), True, "binary_masked"),
        ((-1, 1), False, "binary"),
    ])
    def test_kinds(self, alphabet, masked, kind):
        """Test: alphabet and masking → case kind"""
        assert AlphabetInfo(alphabet=alphabet, masked=masked).kind == kind

    def test_square_levels(self):
        """Test: {-2,-1,1,2} with masking → a^2 in (4, 1, 0)"""
        info = AlphabetInfo(alphabet=(-2, -1, 1, 2), masked=True)
        assert info.square_levels == (4, 1, 0)
        assert info.level_base == 3


class TestForwardLevels:
    """Levels produced by known interferers"""

    def test_masking_only_levels(self):
        """Test: gains (1, 4), beta^2 gamma = 1 → levels (1, 2, 5, 6)"""
        dist = SignatureDistribution.binary(1, epsilon=0.5)
        obs = forward_levels((1.0, 4.0), dist, gamma=0.5)
        assert obs.levels == pytest.approx((1.0, 2.0, 5.0, 6.0))
        assert obs.offdiag is None

    def test_unmasked_binary_reports_offdiagonals(self):
        """Test: {-1, 1} unmasked → one level and 2^(n-1) off-diagonals"""
        dist = SignatureDistribution.binary(2)
        obs = forward_levels((1.0, 4.0), dist, gamma=2.0)
        assert obs.levels == pytest.approx((6.0,))
        assert obs.offdiag == pytest.approx((-5.0, -3.0, 3.0, 5.0))

    def test_coinciding_gains(self):
        """Test: equal gains cannot be separated → UnsupportedConfigurationError"""
        with pytest.raises(UnsupportedConfigurationError):
            forward_levels((1.0, 1.0), SignatureDistribution.binary(1, epsilon=0.5), 1.0)

    def test_negative_gain(self):
        """Test: negative gain → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            forward_levels((-1.0, 1.0), SignatureDistribution.binary(1, epsilon=0.5), 1.0)


class TestCountUsers:
    """n from the number of distinct components"""

    def test_binary_base(self):
        """Test: 8 levels at base 2 → 4 users"""
        assert count_users(range(8), MASKED_BINARY) == 4

    def test_not_a_power(self):
        """Test: 9 levels at base 2 → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            count_users(range(9), MASKED_BINARY)

    def test_ternary_base(self):
        """Test: 27 levels at base 3 → 4 users"""
        info = AlphabetInfo(alphabet=(-2, -1, 1, 2), masked=True)
        assert count_users(range(27), info) == 4

    def test_offdiagonals_use_base_two(self):
        """Test: unmasked binary counts off-diagonals at base 2"""
        assert count_users(range(4), UNMASKED_BINARY) == 3

    def test_empty(self):
        """Test: no levels → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            count_users([], MASKED_BINARY)


class TestSolveCase:
    """Gain recovery from hand-built observations"""

    def test_masking_only_full_levels(self):
        """Test: levels (1, 2, 5, 6) → n=3, gains (1, 4)"""
        estimate = solve_case(_observation((1.0, 2.0, 5.0, 6.0), MASKED_BINARY), case=2)
        assert estimate.n == 3
        assert estimate.gains_sq == pytest.approx((1.0, 4.0))
        assert estimate.residual == pytest.approx(0.0, abs=1e-9)

    def test_masking_only_partial_levels(self):
        """Test: the two largest levels (5, 6) with n=3 → gains (1, 4)"""
        estimate = solve_case(_observation((5.0, 6.0), MASKED_BINARY), case=2, n=3)
        assert estimate.gains_sq == pytest.approx((1.0, 4.0))

    def test_unmasked_partial_offdiagonals(self):
        """Test: diagonal 6 with off-diagonals (3, 5), n=3 → gains (1, 4)"""
        obs = _observation((6.0,), UNMASKED_BINARY, offdiag=(3.0, 5.0))
        estimate = solve_case(obs, case=4, n=3)
        assert estimate.gains_sq == pytest.approx((1.0, 4.0))

    def test_unmasked_two_users_from_diagonal(self):
        """Test: n=2 needs only the diagonal level"""
        estimate = solve_case(_observation((3.5,), UNMASKED_BINARY), case=4, n=2)
        assert estimate.gains_sq == pytest.approx((2.5,))

    def test_case_four_without_offdiagonals_needs_n(self):
        """Test: no off-diagonals and no n → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            solve_case(_observation((3.5,), UNMASKED_BINARY), case=4)

    def test_wrong_case_for_alphabet(self):
        """Test: case 4 on masked levels → UnsupportedConfigurationError"""
        with pytest.raises(UnsupportedConfigurationError):
            solve_case(_observation((1.0, 2.0), MASKED_BINARY), case=4)

    def test_unknown_case(self):
        """Test: case 5 → UnsupportedConfigurationError"""
        with pytest.raises(UnsupportedConfigurationError):
            solve_case(_observation((1.0, 2.0), MASKED_BINARY), case=5)

    def test_levels_must_increase(self):
        """Test: unsorted levels → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            solve_case(_observation((2.0, 1.0), MASKED_BINARY), case=2)

    def test_levels_below_noise(self):
        """Test: a level under the noise floor → InconsistentObservationError"""
        with pytest.raises(InconsistentObservationError):
            solve_case(_observation((0.5, 2.0), MASKED_BINARY), case=2)

    def test_floor_dip_within_input_tolerance(self):
        """Test: lowest level 1 - 5e-7 from measurement noise → gains (1, 4)"""
        estimate = solve_case(_observation((1.0 - 5e-7, 2.0, 5.0, 6.0), MASKED_BINARY), case=2)
        assert estimate.gains_sq == pytest.approx((1.0, 4.0), rel=1e-5)

    def test_inconsistent_levels(self):
        """Test: (1, 2, 5, 7) fits no pair of gains → InferenceError with residual"""
        with pytest.raises(InferenceError) as excinfo:
            solve_case(_observation((1.0, 2.0, 5.0, 7.0), MASKED_BINARY), case=2)
        assert excinfo.value.residual == pytest.approx(1.0)


class TestRoundtrip:
    """forward_levels then solve_case recovers the sorted gains"""

    @pytest.mark.parametrize("case", CASES)
    def test_recovers_gains(self, case):
        """Test: every case recovers three distinct gains at 20 dB"""
        obs = forward_levels(GAINS, case_distribution(case), gamma=100.0)
        estimate = solve_case(obs, case)
        assert estimate.n == len(GAINS) + 1
        np.testing.assert_allclose(estimate.gains_sq, GAINS, rtol=1e-6)

    @pytest.mark.parametrize("case", CASES)
    def test_order_of_input_gains_irrelevant(self, case):
        """Test: gains are returned sorted whatever the input order"""
        obs = forward_levels(GAINS[::-1], case_distribution(case), gamma=100.0)
        np.testing.assert_allclose(solve_case(obs, case).gains_sq, GAINS, rtol=1e-6)

    @pytest.mark.parametrize("case", CASES)
    def test_relative_noise_on_levels(self, case, rng):
        """Test: 1e-6 relative noise on every level → gains within 1e-4"""
        obs = forward_levels(GAINS, case_distribution(case), gamma=100.0)
        noisy = LevelObservation(
            levels=_jitter(obs.levels, rng),
            offdiag=None if obs.offdiag is None else _jitter(obs.offdiag, rng),
            beta_sq=obs.beta_sq,
            gamma=obs.gamma,
            alphabet_info=obs.alphabet_info,
        )
        np.testing.assert_allclose(solve_case(noisy, case).gains_sq, GAINS, rtol=1e-4)

    def test_case_distribution_kinds(self):
        """Test: each roundtrip law matches its case"""
        assert case_distribution(1).alphabet == (-2, -1, 1, 2)
        assert case_distribution(2).masked
        assert case_distribution(3).alphabet == (-2, 2)
        assert case_distribution(4).K == 2 and not case_distribution(4).masked


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
