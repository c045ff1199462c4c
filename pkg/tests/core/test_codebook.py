#!/usr/bin/env python3
"""
Codebook tests: power normalization, support enumeration, sampling and Gram entropy.
"""

import math

import numpy as np
import pytest

from sigcode.codebook import (
    binary_entropy,
    code_set_gram_entropy,
    enumerate_support,
    gram_entropy,
    normalization,
    sample_signature,
    sample_signatures,
    signature_prob,
    support_size,
)
from sigcode.errors import (
    InvalidDistributionError,
    InvalidVectorError,
    SupportTooLargeError,
    UnsupportedConfigurationError,
)
from sigcode.models import SignatureDistribution


class TestSignatureDistribution:
    """Validation of the distribution record"""

    def test_binary_constructor(self):
        """Test: binary(K, nu) → alphabet (-1, 1) with Pr{+1} = nu"""
        dist = SignatureDistribution.binary(3, nu=0.3, epsilon=0.5)
        assert dist.alphabet == (-1, 1)
        assert dist.nu == pytest.approx(0.3)
        assert dist.masked
        assert dist.symbols == (0, -1, 1)

    @pytest.mark.parametrize("kwargs", [
        dict(alphabet=(1, 2), pmf=(0.5, 0.5), epsilon=1.0, K=2),
        dict(alphabet=(-1, 0, 1), pmf=(0.3, 0.4, 0.3), epsilon=1.0, K=2),
        dict(alphabet=(-1, 1), pmf=(0.6, 0.6), epsilon=1.0, K=2),
        dict(alphabet=(-1, 1), pmf=(0.5, 0.5), epsilon=0.0, K=2),
        dict(alphabet=(-1, 1), pmf=(0.5, 0.5), epsilon=1.0, K=0),
        dict(alphabet=(-1, 1), pmf=(0.5,), epsilon=1.0, K=2),
    ])
    def test_invalid_distributions_rejected(self, kwargs):
        """Test: asymmetric alphabet, zero symbol, bad pmf, epsilon or K → InvalidDistributionError"""
        with pytest.raises(InvalidDistributionError):
            SignatureDistribution(**kwargs)

    def test_nu_requires_binary_alphabet(self):
        """Test: nu on a quaternary alphabet → error"""
        dist = SignatureDistribution.uniform((-2, -1, 1, 2), K=2)
        with pytest.raises(InvalidDistributionError):
            _ = dist.nu


class TestNormalization:
    """beta^2 E||s||^2 = 1"""

    @pytest.mark.parametrize("dist,expected", [
        (SignatureDistribution.binary(2), 2.0),
        (SignatureDistribution.binary(1, epsilon=0.5), 0.5),
        (SignatureDistribution.uniform((-2, -1, 1, 2), K=2), 5.0),
    ])
    def test_expected_norm(self, dist, expected):
        """Test: E||s||^2 = K epsilon E[a^2], beta^2 its inverse"""
        result = normalization(dist)
        assert result.expected_norm_sq == pytest.approx(expected)
        assert result.beta_sq * result.expected_norm_sq == pytest.approx(1.0)


class TestSupport:
    """Enumeration and point probabilities"""

    def test_unmasked_binary_support(self):
        """Test: K=2 unmasked → four equiprobable atoms"""
        atoms = enumerate_support(SignatureDistribution.binary(2))
        assert len(atoms) == 4
        assert {a.vector for a in atoms} == {(-1, -1), (-1, 1), (1, -1), (1, 1)}
        assert all(a.prob == pytest.approx(0.25) for a in atoms)

    def test_masked_support_sums_to_one(self):
        """Test: masked support has 3^K atoms with total mass 1"""
        dist = SignatureDistribution.binary(3, nu=0.3, epsilon=0.6)
        atoms = enumerate_support(dist)
        assert len(atoms) == 27 == support_size(dist)
        assert math.fsum(a.prob for a in atoms) == pytest.approx(1.0)

    def test_zero_probability_atoms_dropped(self):
        """Test: nu=1 unmasked → only the all-ones vector"""
        atoms = enumerate_support(SignatureDistribution.binary(3, nu=1.0))
        assert [a.vector for a in atoms] == [(1, 1, 1)]

    def test_support_cap(self):
        """Test: support larger than the cap → SupportTooLargeError"""
        with pytest.raises(SupportTooLargeError):
            enumerate_support(SignatureDistribution.binary(10), cap=100)

    def test_signature_prob(self):
        """Test: Pr{(1, 0)} = eps nu (1 - eps)"""
        dist = SignatureDistribution.binary(2, nu=0.3, epsilon=0.5)
        assert signature_prob(dist, (1, 0)) == pytest.approx(0.075)
        assert signature_prob(dist, (0, 0)) == pytest.approx(0.25)

    @pytest.mark.parametrize("vector", [(1,), (1, 2), (1, 1, 1)])
    def test_signature_prob_rejects_bad_vectors(self, vector):
        """Test: wrong length or symbol outside the alphabet → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            signature_prob(SignatureDistribution.binary(2), vector)


class TestSampling:
    """Seeded signature sampling"""

    def test_same_seed_same_draws(self, rng_factory):
        """Test: identical seeds → identical signatures"""
        dist = SignatureDistribution.binary(4, nu=0.4, epsilon=0.7)
        first = sample_signatures(dist, rng_factory(7), 50)
        second = sample_signatures(dist, rng_factory(7), 50)
        np.testing.assert_array_equal(first, second)

    def test_unmasked_has_no_zeros(self, rng):
        """Test: epsilon = 1 never produces a zero entry"""
        draws = sample_signatures(SignatureDistribution.binary(5), rng, 1000)
        assert draws.shape == (1000, 5)
        assert np.all(np.abs(draws) == 1)

    def test_entry_frequencies(self, rng):
        """Test: empirical frequencies of 0 and +1 match 1 - eps and eps nu"""
        draws = sample_signatures(SignatureDistribution.binary(3, nu=0.3, epsilon=0.6), rng, 20000)
        assert np.mean(draws == 0) == pytest.approx(0.4, abs=0.01)
        assert np.mean(draws == 1) == pytest.approx(0.18, abs=0.01)

    def test_single_draw(self, rng):
        """Test: sample_signature returns a tuple of K ints"""
        s = sample_signature(SignatureDistribution.binary(3), rng)
        assert isinstance(s, tuple) and len(s) == 3
        assert all(isinstance(a, int) for a in s)


class TestGramEntropy:
    """H(s s^T) in bits"""

    def test_binary_entropy(self):
        """Test: h(1/2) = 1, h(1) = 0"""
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(1.0) == pytest.approx(0.0)

    @pytest.mark.parametrize("dist,expected", [
        (SignatureDistribution.binary(2), 1.0),
        (SignatureDistribution.binary(3), 2.0),
        (SignatureDistribution.binary(2, epsilon=0.5), 2.25),
        (SignatureDistribution.binary(1), 0.0),
    ])
    def test_known_values(self, dist, expected):
        """Test: closed-form entropies at reference points"""
        assert gram_entropy(dist) == pytest.approx(expected)

    @pytest.mark.parametrize("dist", [
        SignatureDistribution.binary(2, nu=0.3, epsilon=0.4),
        SignatureDistribution.binary(3, nu=0.3),
        SignatureDistribution.binary(5, nu=0.8),
    ])
    def test_closed_form_matches_brute_force(self, dist):
        """Test: closed form = grouping of the enumerated support"""
        assert gram_entropy(dist, method="closed_form") == pytest.approx(
            gram_entropy(dist, method="brute_force"), abs=1e-10
        )

    @pytest.mark.parametrize("K,epsilon,nu", [(2, 0.4, 0.3), (3, 1.0, 0.15), (4, 0.8, 0.4)])
    def test_nu_symmetry(self, K, epsilon, nu):
        """Test: enumerated entropy unchanged under nu → 1 - nu"""
        low = gram_entropy(SignatureDistribution.binary(K, nu=nu, epsilon=epsilon), method="brute_force")
        high = gram_entropy(SignatureDistribution.binary(K, nu=1.0 - nu, epsilon=epsilon), method="brute_force")
        assert low == pytest.approx(high, abs=1e-12)

    def test_closed_form_outside_domain(self):
        """Test: closed form on a quaternary alphabet → UnsupportedConfigurationError"""
        dist = SignatureDistribution.uniform((-2, -1, 1, 2), K=2)
        with pytest.raises(UnsupportedConfigurationError):
            gram_entropy(dist, method="closed_form")
        assert gram_entropy(dist) > 0

    def test_unknown_method(self):
        """Test: unknown method → ValueError"""
        with pytest.raises(ValueError):
            gram_entropy(SignatureDistribution.binary(2), method="fast")

    def test_code_set_entropy(self):
        """Test: L pairwise non-parallel codes → log2 L bits"""
        codes = [(1, 1, 1), (1, -1, 1), (1, 1, -1), (0, 1, 1)]
        assert code_set_gram_entropy(codes) == pytest.approx(2.0)
        # s and -s share an outer product
        assert code_set_gram_entropy([(1, 1), (-1, -1)]) == pytest.approx(0.0)

    def test_empty_code_set(self):
        """Test: empty code set → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            code_set_gram_entropy([])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
