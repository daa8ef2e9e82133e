"""Special functions used by the outage analysis.

All functions accept a scalar or an array and return the same kind.
Arguments outside the documented domain raise :class:`DomainError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .exceptions import DomainError

__all__ = [
    "QApprox",
    "Q_APPROX",
    "q_exact",
    "q_approx",
    "expint_ei",
    "upper_gamma_neg1",
    "erf_std",
]


@dataclass(frozen=True)
class QApprox:
    """Three-term exponential approximation of the Gaussian Q-function.

    ``Q(x) ~ sum_i (w_i / 2) exp(-p_i x^2 / 2)`` for ``x >= 0``.
    """

    weights: tuple = (Fraction(1, 6), Fraction(1, 3), Fraction(1, 3))
    exponents: tuple = (Fraction(1), Fraction(4), Fraction(4, 3))

    def __post_init__(self):
        if len(self.weights) != 3 or len(self.exponents) != 3:
            raise DomainError("QApprox needs exactly three weights and three exponents")

    def terms(self):
        """Yield ``(w_i, p_i)`` as floats."""
        for w, p in zip(self.weights, self.exponents):
            yield float(w), float(p)

    @property
    def weight_sum(self):
        return sum(self.weights, Fraction(0))


Q_APPROX = QApprox()


def _checked(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def q_exact(x):
    """Gaussian tail probability ``Q(x) = P[Z > x]`` for standard normal Z.

    Evaluated through ``erfc`` so the upper tail keeps full relative
    accuracy; values below the double range underflow to 0.
    """
    arr = _checked(x)
    return _out(0.5 * special.erfc(arr / np.sqrt(2.0)))


def q_approx(x, approx: QApprox = Q_APPROX):
    """Exponential-sum approximation of ``Q(x)``.

    Uses the sum directly for ``x >= 0`` and the reflection
    ``1 - q_approx(-x)`` for ``x < 0``. At ``x = 0`` the value is 5/12, so
    the function jumps there (the reflected branch tends to 7/12).
    """
    arr = _checked(x)
    x2 = arr * arr
    tail = np.zeros_like(arr)
    for w, p in approx.terms():
        tail = tail + 0.5 * w * np.exp(-0.5 * p * x2)
    return _out(np.where(arr >= 0.0, tail, 1.0 - tail))


def expint_ei(x):
    """Exponential integral ``Ei(x) = -E1(-x)`` for strictly negative ``x``."""
    arr = _checked(x)
    if np.any(arr >= 0.0):
        raise DomainError("expint_ei is only defined here for x < 0")
    return _out(special.expi(arr))


# Above this the recurrence loses ~log10(x) digits to cancellation;
# switch to the equivalent E_2 form.
_GAMMA_NEG1_SWITCH = 50.0


def upper_gamma_neg1(x):
    """Upper incomplete gamma function of order -1, ``Gamma(-1, x)``, x > 0.

    Uses ``Gamma(-1, x) = exp(-x)/x + Ei(-x)``, which follows from
    ``Gamma(a+1, x) = a Gamma(a, x) + x^a exp(-x)`` at ``a = -1``. For large
    ``x`` the two terms nearly cancel, so ``E_2(x)/x`` is used instead.
    """
    arr = _checked(x)
    if np.any(arr <= 0.0):
        raise DomainError("upper_gamma_neg1 requires x > 0")
    small = np.minimum(arr, _GAMMA_NEG1_SWITCH)
    with np.errstate(under="ignore"):
        recurrence = np.exp(-small) / small + special.expi(-small)
        big = special.expn(2, arr) / arr
    return _out(np.where(arr <= _GAMMA_NEG1_SWITCH, recurrence, big))


def erf_std(x):
    """Standard error function."""
    arr = _checked(x)
    return _out(special.erf(arr))
