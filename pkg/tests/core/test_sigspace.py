#!/usr/bin/env python3
"""
Signature-space geometry tests: exact rank, span membership, complement bases and log-dets.
"""

import math

import numpy as np
import pytest

from sigcode.errors import InvalidVectorError
from sigcode.sigspace import (
    complement_basis,
    det_ratio_terms,
    exact_rank,
    in_column_span,
    informed_log_det,
    log2det_pd,
)


def _excess(s, S, gamma):
    num, den = det_ratio_terms(s, S, (1.0, 0.5), 1.0, gamma)
    return den - num


class TestExactRank:
    """Rank over the rationals"""

    def test_positive_gains_keep_rank(self, rng):
        """Test: rank(S) = rank(S diag(g)) for positive g"""
        for _ in range(20):
            S = rng.choice([-1, 0, 1], size=(5, 4))
            gains = rng.uniform(0.1, 10.0, size=4)
            assert exact_rank(S) == np.linalg.matrix_rank(S * gains)

    @pytest.mark.parametrize("matrix,expected", [
        ([[1, -1], [1, -1]], 1),
        ([[1, 1], [1, -1]], 2),
        ([[0, 0], [0, 0]], 0),
        ([[1, 1, 0], [1, -1, 2], [0, 1, -1]], 2),
        (np.zeros((3, 0)), 0),
    ])
    def test_small_matrices(self, matrix, expected):
        """Test: hand-checked ranks"""
        assert exact_rank(matrix) == expected

    def test_large_entries_stay_exact(self):
        """Test: integer entries far beyond float precision"""
        big = 10 ** 20
        matrix = np.array([[big, big + 1], [big + 1, big + 2]], dtype=object)
        assert exact_rank(matrix) == 2
        assert exact_rank(np.array([[big, 2 * big], [1, 2]], dtype=object)) == 1

    def test_rejects_non_integer(self):
        """Test: fractional entries → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            exact_rank([[0.5, 1.0], [1.0, 2.0]])

    def test_matches_numpy_on_random_sign_matrices(self, rng):
        """Test: exact rank = numpy rank for small {-1, 0, 1} matrices"""
        for _ in range(50):
            matrix = rng.integers(-1, 2, size=(4, 3))
            assert exact_rank(matrix) == np.linalg.matrix_rank(matrix)


class TestColumnSpan:
    """s in csp(S)"""

    def test_parallel_vector_inside(self):
        """Test: -s lies in the span of s"""
        assert in_column_span((-1, -1), np.array([[1], [1]]))

    def test_orthogonal_vector_outside(self):
        """Test: (1, -1) is outside the span of (1, 1)"""
        assert not in_column_span((1, -1), np.array([[1], [1]]))

    def test_empty_span(self):
        """Test: only the zero vector lies in the span of no columns"""
        assert in_column_span((0, 0), np.zeros((2, 0)))
        assert not in_column_span((1, 0), np.zeros((2, 0)))

    def test_shape_mismatch(self):
        """Test: S with the wrong number of rows → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            in_column_span((1, 1), np.ones((3, 1)))


class TestComplementBasis:
    """Orthonormal basis of the complement of s"""

    @pytest.mark.parametrize("method", ["householder", "gram_schmidt"])
    @pytest.mark.parametrize("s", [(1, 0), (1, 1), (1, -1, 1), (0, 1, -1, 1), (-1, 1, 1, 1, -1)])
    def test_orthonormal_and_orthogonal(self, s, method):
        """Test: G^T G = I and G^T s = 0"""
        G = complement_basis(s, method=method)
        assert G.shape == (len(s), len(s) - 1)
        np.testing.assert_allclose(G.T @ G, np.eye(len(s) - 1), atol=1e-12)
        np.testing.assert_allclose(G.T @ np.asarray(s, dtype=float), 0.0, atol=1e-12)

    def test_unit_vector(self):
        """Test: s = e1 → the complement is spanned by e2"""
        G = complement_basis((1, 0))
        np.testing.assert_allclose(np.abs(G[:, 0]), [0.0, 1.0], atol=1e-12)

    def test_zero_vector_gives_identity(self):
        """Test: s = 0 → I_K"""
        np.testing.assert_array_equal(complement_basis((0, 0, 0)), np.eye(3))

    def test_unknown_method(self):
        """Test: unknown method → ValueError"""
        with pytest.raises(ValueError):
            complement_basis((1, 1), method="qr")


class TestLogDets:
    """log2 det terms of the rate expression"""

    def test_log2det_identity_and_diagonal(self):
        """Test: log2 det I = 0, log2 det diag(2, 4) = 3"""
        assert float(log2det_pd(np.eye(3))) == pytest.approx(0.0)
        assert float(log2det_pd(np.diag([2.0, 4.0]))) == pytest.approx(3.0)

    def test_log2det_batched(self):
        """Test: stacks of matrices give one value each"""
        stack = np.stack([np.eye(2), 2.0 * np.eye(2)])
        np.testing.assert_allclose(log2det_pd(stack), [0.0, 2.0])

    def test_no_interference(self):
        """Test: all-zero S → both terms vanish"""
        num, den = det_ratio_terms((1, 1), np.zeros((2, 1)), (1.0,), 0.5, 100.0)
        assert num == pytest.approx(0.0)
        assert den == pytest.approx(0.0)

    def test_orthogonal_interferer(self):
        """Test: s=(1,1), t=(1,-1), b=1 → both terms log2 3"""
        num, den = det_ratio_terms((1, 1), np.array([[1], [-1]]), (1.0,), 1.0, 1.0)
        assert den == pytest.approx(math.log2(3.0))
        assert num == pytest.approx(math.log2(3.0))

    def test_aligned_interferer_projects_away(self):
        """Test: t parallel to s leaves nothing after projection"""
        num, den = det_ratio_terms((1, 1), np.array([[1], [1]]), (2.0,), 1.0, 1.0)
        assert num == pytest.approx(0.0, abs=1e-12)
        assert den == pytest.approx(math.log2(5.0))

    def test_basis_choice_does_not_matter(self, rng):
        """Test: Householder and Gram-Schmidt bases give the same numerator"""
        s = (1, -1, 1, 1)
        S = rng.choice([-1, 0, 1], size=(4, 3))
        gains = rng.exponential(1.0, size=3)
        first = det_ratio_terms(s, S, gains, 0.25, 1000.0, basis=complement_basis(s, "householder"))
        second = det_ratio_terms(s, S, gains, 0.25, 1000.0, basis=complement_basis(s, "gram_schmidt"))
        assert first == pytest.approx(second, rel=1e-10)

    def test_gain_count_mismatch(self):
        """Test: more gains than interferer columns → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            det_ratio_terms((1, 1), np.ones((2, 1)), (1.0, 2.0), 1.0, 1.0)

    def test_negative_gain(self):
        """Test: negative gain → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            det_ratio_terms((1, 1), np.ones((2, 1)), (-1.0,), 1.0, 1.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_bad_beta_or_gamma(self, bad):
        """Test: nonpositive or non-finite beta^2 or gamma → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            det_ratio_terms((1, 1), np.ones((2, 1)), (1.0,), bad, 1.0)
        with pytest.raises(InvalidVectorError):
            det_ratio_terms((1, 1), np.ones((2, 1)), (1.0,), 1.0, bad)
        with pytest.raises(InvalidVectorError):
            informed_log_det((1, 1), np.ones((2, 1)), 1.0, (1.0,), bad, 1.0)
        with pytest.raises(InvalidVectorError):
            informed_log_det((1, 1), np.ones((2, 1)), 1.0, (1.0,), 1.0, bad)

    def test_bad_own_gain(self):
        """Test: negative own gain → InvalidVectorError"""
        with pytest.raises(InvalidVectorError):
            informed_log_det((1, 1), np.ones((2, 1)), -1.0, (1.0,), 1.0, 1.0)

    def test_stack_matches_single(self, rng):
        """Test: a (C, K, m) stack gives the per-matrix terms"""
        s = (1, 0, -1)
        stack = rng.choice([-1, 0, 1], size=(6, 3, 2))
        gains = (0.7, 1.9)
        num, den = det_ratio_terms(s, stack, gains, 0.5, 200.0)
        informed = informed_log_det(s, stack, 1.3, gains, 0.5, 200.0)
        for c, S in enumerate(stack):
            single_num, single_den = det_ratio_terms(s, S, gains, 0.5, 200.0)
            assert num[c] == pytest.approx(single_num, abs=1e-12)
            assert den[c] == pytest.approx(single_den, abs=1e-12)
            assert informed[c] == pytest.approx(informed_log_det(s, S, 1.3, gains, 0.5, 200.0), abs=1e-12)

    def test_denominator_grows_with_gamma_and_gains(self, rng):
        """Test: log2 det(I + b gamma S G S^T) is nondecreasing in gamma and in each gain"""
        s = (1, 1, -1)
        S = rng.choice([-1, 1], size=(3, 2))
        dens = [det_ratio_terms(s, S, (1.0, 0.5), 1.0, g)[1] for g in (1.0, 10.0, 100.0, 1e4)]
        assert np.all(np.diff(dens) > 0)
        dens = [det_ratio_terms(s, S, (g, 0.5), 1.0, 10.0)[1] for g in (0.0, 0.5, 2.0, 8.0)]
        assert np.all(np.diff(dens) > 0)

    def test_excess_bounded_outside_span(self):
        """Test: s outside csp(S) → den - num settles as gamma grows"""
        s = (1, 1, 1)
        S = np.array([[1, 1], [-1, 1], [1, -1]])
        assert not in_column_span(s, S)
        gaps = [_excess(s, S, g) for g in (1e6, 1e9)]
        assert abs(gaps[1] - gaps[0]) < 1e-4

    def test_excess_grows_inside_span(self):
        """Test: s in csp(S) → den - num gains log2 of the SNR ratio"""
        s = (1, 1, 1)
        S = np.array([[1, 1], [1, -1], [1, 1]])
        assert in_column_span(s, S)
        gaps = [_excess(s, S, g) for g in (1e6, 1e9)]
        assert gaps[1] - gaps[0] == pytest.approx(math.log2(1e3), abs=1e-3)

    def test_informed_log_det(self):
        """Test: s=(1,1) alone with |h|^2=1, b=1 → log2 3"""
        value = informed_log_det((1, 1), np.zeros((2, 0)), 1.0, (), 1.0, 1.0)
        assert value == pytest.approx(math.log2(3.0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
