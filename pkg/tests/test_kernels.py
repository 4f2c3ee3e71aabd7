import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canonstat.basis import gram_schmidt_finite, make_cosine_basis, make_hermite_basis
from canonstat.kernels import (CanonicalKernel, CoefficientTensor, ConditionViolation, RawKernel,
                               b_of_f, check_canonicity, evaluate_kernel, hoeffding_decompose,
                               max_canonicity_residual)

SQ2 = math.sqrt(2.0)


def e(i, t):
    # independent scalar cosine basis for hand evaluation
    return 1.0 if i == 0 else SQ2 * math.cos(i * math.pi * t)


class TestCoefficientTensor:
    def test_rejects_e0(self):
        with pytest.raises(ValueError, match="e_0"):
            CoefficientTensor(2, {(0, 1): 1.0})

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            CoefficientTensor(2, {(1,): 1.0})

    def test_abs_sum_and_sorting(self):
        t = CoefficientTensor(2, {(2, 1): -0.5, (1, 1): 0.25, (1, 2): 0.0})
        assert list(t.entries) == [(1, 1), (2, 1)]
        assert t.abs_sum == 0.75

    def test_symmetric_flag(self):
        assert CoefficientTensor(2, {(1, 2): 1.0, (2, 1): 1.0}).symmetric
        assert not CoefficientTensor(2, {(1, 2): 1.0}).symmetric

    def test_index_beyond_basis(self):
        with pytest.raises(ValueError):
            CanonicalKernel.from_entries(make_cosine_basis(2), 1, {(3,): 1.0})


class TestEvaluate:
    def test_single_term_m1(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 1, {(1,): 1.0})
        assert evaluate_kernel(k, (0.0,)) == pytest.approx(SQ2, abs=1e-15)

    def test_product_m2(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 2, {(1, 1): 1.0})
        assert evaluate_kernel(k, (0.0, 0.0)) == pytest.approx(2.0, abs=1e-15)

    def test_hand_evaluation(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 2, {(1, 1): 0.5, (1, 2): 0.25})
        ref = 0.5 * e(1, 0.1) * e(1, 0.2) + 0.25 * e(1, 0.1) * e(2, 0.2)
        assert abs(evaluate_kernel(k, (0.1, 0.2)) - ref) <= 1e-14

    def test_vectorized_matches_scalar(self, cosine, rng):
        k = CanonicalKernel.from_entries(cosine, 2, {(1, 3): 0.7, (2, 2): -1.1})
        s, t = rng.random(20), rng.random(20)
        vec = k(s, t)
        for j in range(20):
            assert vec[j] == pytest.approx(evaluate_kernel(k, (s[j], t[j])), abs=1e-14)

    def test_symmetric_exchangeable(self, cosine, rng):
        k = CanonicalKernel.from_entries(cosine, 3, {p: 0.3 for p in itertools.permutations((1, 2, 4))})
        assert k.coefficients.symmetric
        for _ in range(20):
            pt = rng.random(3)
            for perm in itertools.permutations(range(3)):
                assert abs(k(*pt[list(perm)]) - k(*pt)) <= 1e-12


class TestCanonicity:
    def test_product_kernel(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 2, {(1, 1): 1.0})
        assert check_canonicity(k, 1, (0.7,)) <= 1e-8

    def test_constant_raw_kernel(self, cosine):
        raw = RawKernel(lambda t: np.ones_like(t), 1, cosine)
        assert check_canonicity(raw, 1) == pytest.approx(1.0, abs=1e-12)

    def test_order3_single_term(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 3, {(1, 2, 3): 2.0})
        for slot in (1, 2, 3):
            for fixed in [(0.0, 0.0), (0.3, 0.9), (1.0, 0.5)]:
                assert check_canonicity(k, slot, fixed) <= 1e-8

    def test_finite_alphabet_exact(self):
        b = gram_schmidt_finite([0.2, 0.3, 0.5])
        k = CanonicalKernel.from_entries(b, 2, {(1, 2): 1.5, (2, 2): -0.5})
        assert max_canonicity_residual(k, [0, 1, 2]) <= 1e-12

    def test_bad_slot(self, cosine):
        k = CanonicalKernel.from_entries(cosine, 2, {(1, 1): 1.0})
        with pytest.raises(ValueError):
            check_canonicity(k, 3, (0.1,))


class TestBOfF:
    @pytest.mark.parametrize("m,expected", [(1, 2.0), (2, 2.0)])
    def test_unit_abs_sum(self, cosine, m, expected):
        k = CanonicalKernel.from_entries(cosine, m, {(1,) * m: 1.0})
        # (C^m * 1)^(2/m) with C = sqrt(2) is 2 for every m
        assert b_of_f(k) == pytest.approx(expected, rel=1e-14)

    def test_zero_kernel(self, cosine):
        assert b_of_f(CanonicalKernel.from_entries(cosine, 2, {})) == 0.0

    def test_hermite_rejected(self):
        k = CanonicalKernel.from_entries(make_hermite_basis(2), 1, {(1,): 1.0})
        with pytest.raises(ConditionViolation, match=r"\(A\)"):
            b_of_f(k)

    @settings(max_examples=60, deadline=None)
    @given(m=st.integers(1, 3), lam=st.floats(0.01, 100.0),
           coefs=st.lists(st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3), min_size=1,
                          max_size=6), seed=st.integers(0, 2 ** 32 - 1))
    def test_homogeneity(self, m, lam, coefs, seed):
        rng = np.random.default_rng(seed)
        basis = make_cosine_basis(4)
        entries = {tuple(int(i) for i in rng.integers(1, 5, m)): c for c in coefs}
        k = CanonicalKernel(basis, CoefficientTensor(m, entries))
        k2 = CanonicalKernel(basis, k.coefficients.scaled(lam))
        assert b_of_f(k2) == pytest.approx(lam ** (2 / m) * b_of_f(k), rel=1e-12)


def _l2_inner(f, g, basis, m, nodes=64):
    x, w = basis.quadrature(nodes)
    grids = np.meshgrid(*([x] * m), indexing="ij")
    wt = w
    for _ in range(m - 1):
        wt = np.multiply.outer(wt, w)
    return float(np.sum(f(*grids) * g(*grids) * wt))


class TestHoeffdingDecomposition:
    def test_already_canonical(self, cosine):
        dec = hoeffding_decompose(lambda s, t: e1(s) * e1(t), cosine, 3, 2)
        assert dec.constant == 0.0 and list(dec.components) == [(1, 2)]
        assert dec.components[1, 2].coefficients.entries == pytest.approx({(1, 1): 1.0}, abs=1e-8)

    def test_additive(self, cosine):
        dec = hoeffding_decompose(lambda s, t: e1(s) + e1(t), cosine, 3, 2)
        assert dec.constant == 0.0
        assert set(dec.components) == {(1,), (2,)}
        for slots in [(1,), (2,)]:
            assert dec.components[slots].coefficients.entries == pytest.approx({(1,): 1.0}, abs=1e-8)

    def test_shifted_product(self, cosine):
        dec = hoeffding_decompose(lambda s, t: (e1(s) + 1) * (e1(t) + 1), cosine, 3, 2)
        assert dec.constant == pytest.approx(1.0, abs=1e-8)
        assert dec.components[1,].coefficients.entries == pytest.approx({(1,): 1.0}, abs=1e-8)
        assert dec.components[2,].coefficients.entries == pytest.approx({(1,): 1.0}, abs=1e-8)
        assert dec.components[1, 2].coefficients.entries == pytest.approx({(1, 1): 1.0}, abs=1e-8)

    def test_components_canonical_and_orthogonal(self, cosine):
        raw = lambda s, t, u: np.exp(s - t) * (1 + u * s)  # noqa: E731
        dec = hoeffding_decompose(raw, cosine, 4, 3)
        comps = list(dec.components.items())
        for slots, comp in comps:
            grid = np.linspace(0, 1, 5)
            assert max_canonicity_residual(comp, grid) <= 1e-6

        def lift(slots, comp):
            return lambda *a: comp(*[a[s - 1] for s in slots])

        for (sa, ka), (sb, kb) in itertools.combinations(comps, 2):
            assert abs(_l2_inner(lift(sa, ka), lift(sb, kb), cosine, 3, 16)) <= 1e-6

    def test_reproduces_projection(self, cosine, rng):
        # a kernel inside the truncated tensor space is recovered exactly
        b = cosine
        raw = lambda s, t: 0.3 + 2 * b(2, s) - b(1, t) + 0.5 * b(3, s) * b(1, t)  # noqa: E731
        dec = hoeffding_decompose(raw, b, 3, 2)
        s, t = rng.random(50), rng.random(50)
        np.testing.assert_allclose(dec(s, t), raw(s, t), atol=1e-10)

    def test_finite_alphabet(self):
        b = gram_schmidt_finite([0.2, 0.3, 0.5])
        raw = lambda s, t: (np.asarray(s) == np.asarray(t)).astype(float)  # noqa: E731
        dec = hoeffding_decompose(raw, b, 2, 2)
        # E 1{X = Y} = sum p^2 for independent copies
        assert dec.constant == pytest.approx(0.04 + 0.09 + 0.25, abs=1e-12)
        pts = np.array(list(itertools.product(range(3), repeat=2)))
        np.testing.assert_allclose(dec(pts[:, 0], pts[:, 1]), raw(pts[:, 0], pts[:, 1]),
                                   atol=1e-12)

    def test_scalar_only_kernel(self, cosine):
        dec = hoeffding_decompose(lambda s: math.cos(math.pi * s) * SQ2, cosine, 2, 1)
        assert dec.components[1,].coefficients.entries == pytest.approx({(1,): 1.0}, abs=1e-8)

    def test_non_integrable(self, cosine):
        with pytest.raises(ValueError, match="square-integrable"):
            hoeffding_decompose(lambda s: 1.0 / s ** 8, cosine, 2, 1, quadrature_nodes=10_000)

    def test_order_cap(self, cosine):
        with pytest.raises(ValueError):
            hoeffding_decompose(lambda *a: 0.0, cosine, 2, 4)


def e1(t):
    return SQ2 * np.cos(np.pi * np.asarray(t))
