import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from canonstat.bounds import (BoundParameters, bernstein_bound, best_rate, bounded_kernel_bound,
                              chebyshev_moment_bound, compute_c2, even_moment_log_bound,
                              hoeffding_bound, lemma1_bound, log_theorem_bound, optimal_N,
                              optimized_chebyshev_bound, theorem_bound, theorem_bound_curve)

SQ2 = math.sqrt(2.0)


def c2_reference(c0, c1):
    # independent evaluation of the three printed terms
    t1 = 16.0
    t2 = 16.0 * (c0 * math.exp(-c1) / (1.0 - math.exp(-c1))) ** 4
    t3 = (4.0 * c0 * math.exp(c1) / c1) ** 2
    return max(t1, t2, t3)


def params(m=1, abs_sum=1.0, c0=1.0, c1=1.0, C=SQ2):
    return BoundParameters(c0, c1, C, m, abs_sum)


class TestC2:
    def test_unit(self):
        assert compute_c2(1, 1) == pytest.approx(16 * math.e ** 2, abs=1e-9)
        assert abs(compute_c2(1, 1) - 118.2248) <= 1e-3

    def test_fast_rate(self):
        # 0.16 e^20 = 7.7626e7, quoted to three figures as 7.76e7
        got = compute_c2(1, 10)
        assert abs(got - c2_reference(1, 10)) <= 1e4
        assert float(f"{got:.3g}") == 7.76e7
        assert got == pytest.approx(0.16 * math.exp(20), rel=1e-14)

    def test_large_rate_drops_middle_term(self):
        c1 = 30.0
        assert compute_c2(1, c1) == max(16.0, (4 * math.exp(c1) / c1) ** 2)

    @settings(max_examples=200)
    @given(c0=st.floats(1, 50), c1=st.floats(0.01, 20))
    def test_matches_reference(self, c0, c1):
        got = compute_c2(c0, c1)
        assert got >= 16.0
        assert got == pytest.approx(c2_reference(c0, c1), rel=1e-12)

    @pytest.mark.parametrize("c0,c1", [(0.5, 1), (1, 0), (1, -1)])
    def test_domain(self, c0, c1):
        with pytest.raises(ValueError):
            compute_c2(c0, c1)

    def test_best_rate(self):
        assert best_rate(1, 0.5) == 0.5
        r = best_rate(1, 50)
        assert r == pytest.approx(1.0, abs=1e-6)
        assert compute_c2(1, r) <= compute_c2(1, 50)
        for c1 in np.linspace(0.05, 50, 200):
            assert compute_c2(1, r) <= compute_c2(1, min(c1, 50)) * (1 + 1e-9)


class TestTheorem:
    def test_small_x(self):
        assert theorem_bound(1e-12, params()) == pytest.approx(1.0)

    def test_reference_value(self):
        # the exponent 1e4 / (8 c2 e B_f) with B_f = 2 arises at m=1, x=100 and at m=2, x=1e4
        c2 = c2_reference(1, 1)
        expected = math.exp(-1e4 / (8 * c2 * math.e * 2))
        assert expected == pytest.approx(0.143, abs=1e-3)
        assert theorem_bound(100.0, params(m=1)) == pytest.approx(expected, rel=1e-12)
        assert theorem_bound(1e4, params(m=2)) == pytest.approx(expected, rel=1e-12)

    def test_doubling_x_m2(self):
        p = params(m=2)
        assert log_theorem_bound(6e3, p) == pytest.approx(2 * log_theorem_bound(3e3, p), rel=1e-14)

    def test_zero_kernel(self):
        assert theorem_bound(0.1, params(abs_sum=0.0)) == 0.0

    def test_nonpositive_x(self):
        with pytest.raises(ValueError):
            theorem_bound(0.0, params())

    def test_monotone(self):
        xs = np.logspace(0, 4, 60)
        for m in (1, 2, 3):
            p = params(m=m)
            curve = theorem_bound_curve(xs, p)
            assert np.all((curve >= 0) & (curve <= 1))
            assert np.all(np.diff(curve) <= 0)
            # strict decrease holds in log space, past the point where exp underflows
            logs = np.array([log_theorem_bound(x, p) for x in xs])
            assert np.all(np.isfinite(logs)) and np.all(np.diff(logs) < 0)

    def test_unbounded_basis(self):
        with pytest.raises(ValueError):
            params(C=math.inf)


class TestClassical:
    def test_hoeffding(self):
        assert hoeffding_bound(0.2, 100, 1, -1, 1) == pytest.approx(math.exp(-2), abs=1e-6)
        assert hoeffding_bound(1e-9, 100, 1, -1, 1) == pytest.approx(1.0)

    def test_hoeffding_floor(self):
        assert hoeffding_bound(0.5, 10, 3, 0, 1) == pytest.approx(math.exp(-2 * 3 * 0.25))

    def test_hoeffding_domain(self):
        with pytest.raises(ValueError):
            hoeffding_bound(0.1, 10, 1, 1, 1)

    def test_bounded_kernel(self):
        assert bounded_kernel_bound(3.0, 3.0, 1, 1, 2) == pytest.approx(math.exp(-1))
        assert bounded_kernel_bound(1e-12, 1.0, 2, 0.7, 2) == pytest.approx(0.7)
        assert bounded_kernel_bound(1e-12, 1.0, 2, 5.0, 2) == 1.0
        assert bounded_kernel_bound(8.0, 2.0, 2, 1.5, 2) == pytest.approx(1.5 * math.exp(-4))
        with pytest.raises(ValueError):
            bounded_kernel_bound(1.0, 0.0, 1, 1, 1)

    def test_bernstein(self):
        assert bernstein_bound(1, 1, 1, 100, 1, 1, 1) == pytest.approx(math.exp(-1 / 1.1), abs=1e-12)
        assert bernstein_bound(1, 1, 1, 100, 1, 1, 1) == pytest.approx(0.4029, abs=1e-4)
        assert bernstein_bound(1e-12, 1, 1, 10, 2, 0.3, 1) == pytest.approx(0.3)
        with pytest.raises(ValueError):
            bernstein_bound(1, 0, 1, 10, 1, 1, 1)


class TestChebyshev:
    def test_ordinary(self):
        sigma = 1.7
        assert chebyshev_moment_bound(2 * sigma, [(1, sigma ** 2)]) == pytest.approx(0.25)

    def test_minimum(self):
        got = chebyshev_moment_bound(1.5, [(1, 1.0), (2, 10.0)])
        assert got == pytest.approx(min(1 / 2.25, 10 / 5.0625))
        assert got == pytest.approx(0.4444, abs=1e-4)

    def test_large_x(self):
        assert chebyshev_moment_bound(1e200, [(1, 1.0), (3, 4.0)]) == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            chebyshev_moment_bound(1.0, [])
        with pytest.raises(ValueError):
            chebyshev_moment_bound(1.0, [(1, -1.0)])


class TestLemma:
    def test_value(self):
        p = params()
        tilde_c = 8 * c2_reference(1, 1)
        assert lemma1_bound(1, 1, p) == pytest.approx(math.log(tilde_c * 2), rel=1e-14)
        assert lemma1_bound(1, 1, p) == pytest.approx(7.546, abs=1e-3)

    def test_n_zero(self):
        with pytest.raises(ValueError):
            lemma1_bound(1, 0, params())

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_superlinear(self, m):
        p = params(m=m)
        for N in range(1, 20):
            assert lemma1_bound(m, 2 * N, p) > 2 * lemma1_bound(m, N, p)

    def test_even_moment(self):
        p = params(m=2, abs_sum=3.0)
        ref = 6 * math.log(3.0) + 6 * math.log(8 * c2_reference(1, 1) * 2 * 2 * 3)
        assert even_moment_log_bound(3, p) == pytest.approx(ref, rel=1e-14)


class TestOptimalN:
    def test_clamp(self):
        assert optimal_N(1.0, params()) == 1

    def test_m1(self):
        # c4 = tilde_c * B_f; choose x with x^2 / (c4 e) = 10
        p = params()
        x = math.sqrt(10 * p.c4 * math.e)
        assert optimal_N(x, p) == 10

    def test_m2(self):
        p = params(m=2)
        x = 10 * p.c4 * 2 * math.e
        assert optimal_N(x, p) == 10

    def test_tie_break_is_better_neighbour(self):
        p = params(m=2)
        for x in np.linspace(p.c4 * 2 * math.e * 3.1, p.c4 * 2 * math.e * 3.9, 7):
            N = optimal_N(x, p)
            vals = {k: even_moment_log_bound(k, p) - 2 * k * math.log(x) for k in (3, 4)}
            assert N in vals and vals[N] == min(vals.values())

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_pipeline_consistency(self, m):
        # the rounded-N Chebyshev bound stays within a constant factor of the theorem bound
        p = params(m=m, abs_sum=0.8)
        slack = m * math.log(2 * math.e)
        for s in np.linspace(1, 200, 40):
            x = (s * p.c4 * m * math.e) ** (m / 2)
            cheb = optimized_chebyshev_bound(x, p)
            assert cheb <= theorem_bound(x, p) * math.exp(slack) * (1 + 1e-9)
