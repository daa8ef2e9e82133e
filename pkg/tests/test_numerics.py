import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from rissop.exceptions import DomainError
from rissop.numerics import (
    Q_APPROX,
    QApprox,
    erf_std,
    expint_ei,
    q_approx,
    q_exact,
    upper_gamma_neg1,
)

ORACLE_GRID = [0.1, 0.5, 1.0, 5.0, 20.0]
# measured max relative error of q_approx on [0.5, 6]; the peak sits at x = 6
Q_APPROX_ENVELOPE = 0.2928


def e1_oracle(x):
    # E1(x) = int_1^inf e^{-x s}/s ds, which keeps the integrand bounded
    val, _ = integrate.quad(lambda s: math.exp(-x * s) / s, 1.0, np.inf, epsabs=0, epsrel=1e-13,
                            limit=500)
    return val


def gamma_neg1_oracle(x):
    # Gamma(-1, x) = x^{-1} int_1^inf e^{-x s} s^{-2} ds
    val, _ = integrate.quad(lambda s: math.exp(-x * s) / (s * s), 1.0, np.inf, epsabs=0,
                            epsrel=1e-13, limit=500)
    return val / x


def normal_tail_oracle(x):
    val, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), x, 40.0,
                            epsabs=0, epsrel=1e-13, limit=200)
    return val


class TestQApprox:
    def test_constants_are_exact(self):
        assert Q_APPROX.weights == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 3))
        assert Q_APPROX.exponents == (Fraction(1), Fraction(4), Fraction(4, 3))
        assert Q_APPROX.weight_sum == Fraction(5, 6)

    def test_value_at_zero_uses_nonnegative_branch(self):
        assert q_approx(0.0) == pytest.approx(5 / 12, abs=1e-15)

    def test_value_at_three(self):
        expected = sum(float(w) / 2 * math.exp(-float(p) * 4.5)
                       for w, p in zip(Q_APPROX.weights, Q_APPROX.exponents))
        assert q_approx(3.0) == pytest.approx(expected, rel=1e-14)
        assert abs(q_approx(3.0) - q_exact(3.0)) < 0.02

    def test_reflection(self):
        assert q_approx(-2.0) == pytest.approx(1.0 - q_approx(2.0), abs=1e-15)

    @given(st.floats(min_value=1e-6, max_value=30))
    def test_reflection_property(self, x):
        assert q_approx(-x) == pytest.approx(1.0 - q_approx(x), abs=1e-15)

    def test_relative_error_envelope(self):
        x = np.linspace(0.5, 6.0, 20001)
        rel = np.abs(q_approx(x) - q_exact(x)) / q_exact(x)
        assert rel.max() <= Q_APPROX_ENVELOPE + 1e-4
        # tighter where the approximation is used in practice
        assert rel[x <= 5.0].max() < 0.12

    def test_rejects_bad_constants(self):
        with pytest.raises(DomainError):
            QApprox(weights=(Fraction(1, 2),), exponents=(Fraction(1), Fraction(2)))

    def test_nonfinite_input(self):
        with pytest.raises(DomainError):
            q_approx(math.nan)


class TestQExact:
    def test_half_at_zero(self):
        assert q_exact(0.0) == 0.5

    def test_one_against_quadrature(self):
        assert q_exact(1.0) == pytest.approx(normal_tail_oracle(1.0), rel=1e-11)
        assert q_exact(1.0) == pytest.approx(0.158655, abs=1e-6)

    def test_far_tail_underflows_cleanly(self):
        v = q_exact(40.0)
        assert v < 1e-300 and not math.isnan(v)

    def test_symmetry_dense_grid(self):
        x = np.arange(-6.0, 6.0 + 5e-4, 1e-3)
        assert np.max(np.abs(q_exact(x) + q_exact(-x) - 1.0)) < 1e-12

    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_monotone(self, x, y):
        lo, hi = min(x, y), max(x, y)
        assert q_exact(lo) >= q_exact(hi)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_nonfinite(self, bad):
        with pytest.raises(DomainError):
            q_exact(bad)

    def test_array_input(self):
        out = q_exact(np.array([0.0, 1.0]))
        assert isinstance(out, np.ndarray) and out.shape == (2,)


class TestExpintEi:
    @pytest.mark.parametrize("x", ORACLE_GRID)
    def test_against_quadrature(self, x):
        assert expint_ei(-x) == pytest.approx(-e1_oracle(x), rel=1e-9)

    def test_reference_values(self):
        assert expint_ei(-1.0) == pytest.approx(-0.219384, abs=1e-6)
        assert expint_ei(-0.5) == pytest.approx(-0.559774, abs=1e-6)

    def test_asymptotic_bound(self):
        v = expint_ei(-20.0)
        assert v < 0 and abs(v) < math.exp(-20) / 20

    @given(st.floats(0.01, 50), st.floats(0.01, 50))
    def test_negative_and_vanishing_at_minus_infinity(self, x, y):
        # Ei rises to 0 as the argument goes to -inf
        far, near = sorted((-x, -y))
        assert expint_ei(near) <= expint_ei(far) < 0

    @pytest.mark.parametrize("bad", [0.0, 1.0, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            expint_ei(bad)


class TestUpperGammaNeg1:
    @pytest.mark.parametrize("x", ORACLE_GRID + [10.0, 60.0])
    def test_against_quadrature(self, x):
        assert upper_gamma_neg1(x) == pytest.approx(gamma_neg1_oracle(x), rel=1e-9)

    def test_at_one(self):
        assert upper_gamma_neg1(1.0) == pytest.approx(0.148496, abs=1e-6)
        assert upper_gamma_neg1(1.0) == pytest.approx(math.exp(-1) + expint_ei(-1.0), rel=1e-13)

    @given(st.floats(1.0001, 600))
    def test_decay_bound(self, x):
        v = upper_gamma_neg1(x)
        assert 0 <= v < math.exp(-x)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            upper_gamma_neg1(bad)


class TestErf:
    def test_values(self):
        assert erf_std(0.0) == 0.0
        assert erf_std(1.0) == pytest.approx(0.842700, abs=1e-6)

    @given(st.floats(-8, 8))
    def test_odd_and_tied_to_q(self, x):
        assert erf_std(-x) == -erf_std(x)
        assert erf_std(x) == pytest.approx(1.0 - 2.0 * q_exact(x * math.sqrt(2.0)), abs=1e-14)
