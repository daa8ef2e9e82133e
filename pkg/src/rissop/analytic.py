"""Secrecy outage probability: exact quadrature, closed form, compact form.

Three evaluators share one :class:`~rissop.channel.LinkStats` derivation:

* :func:`sop_exact_quadrature` integrates ``F_D(rho (x + 1) - 1) f_E(x)``
  with the exact Gaussian tail; it is the reference for everything else.
* :func:`sop_closed_form` replaces the Q-function by its exponential-sum
  approximation, drops the contribution above the split point ``a`` and
  linearises ``x / (x^2 + d)`` around the Gaussian peak.
* :func:`sop_compact` is the large-N form used for power allocation, with
  its first and second derivatives in ``alpha``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from .channel import LinkStats, SystemConfig, derive_stats
from .exceptions import DomainError, NumericalError
from .numerics import Q_APPROX, erf_std, expint_ei, upper_gamma_neg1

logger = logging.getLogger(__name__)

__all__ = [
    "SopBreakdown",
    "split_point",
    "i0_closed_form",
    "sop_exact_quadrature",
    "sop_closed_form",
    "sop_compact",
    "sop_derivative",
    "sop_second_derivative",
    "compact_closed_form_ratio",
]

_SIXTEEN_MINUS_PI2 = 16.0 - math.pi ** 2


def _clamp_probability(value, label):
    if not math.isfinite(value):
        raise NumericalError(f"{label} produced a non-finite value", {"value": value})
    if value < -1e-12 or value > 1.0 + 1e-12:
        logger.warning("%s outside [0, 1] before clamping: %.6g", label, value)
    return min(max(value, 0.0), 1.0)


def _stats(cfg, stats):
    return derive_stats(cfg) if stats is None else stats


def _require_rho(rho):
    if not rho > 1.0:
        raise DomainError("this form requires a positive rate threshold (rho > 1)")


def split_point(stats: LinkStats) -> float:
    """Eavesdropper SINR at which the destination CDF argument crosses zero."""
    return (stats.alpha * stats.mu ** 2 * stats.gamma0 + 1.0) / stats.rho - 1.0


# ---------------------------------------------------------------------------
# exact quadrature


def _integrand_factory(stats: LinkStats):
    rho = stats.rho
    scale = stats.alpha * stats.gamma0
    mu, sigma, psi = stats.mu, stats.sigma, stats.psi
    lse, lje, r = stats.lambda_se, stats.lambda_je, stats.ratio
    q_floor = 0.5 * math.erfc(mu / sigma / math.sqrt(2.0))
    inv_sqrt2 = 1.0 / math.sqrt(2.0)

    def integrand(x):
        g = rho * (x + 1.0) - 1.0
        z = (math.sqrt(max(g, 0.0) / scale) - mu) / sigma
        tail = 0.5 * math.erfc(abs(z) * inv_sqrt2)
        cdf = psi * (tail - q_floor) if z < 0.0 else 1.0 - psi * tail
        e = math.exp(-x / lse)
        s = x + r
        return cdf * (e / (lje * s) + lse * e / (lje * s * s))

    return integrand


def _breakpoints(stats: LinkStats):
    rho = stats.rho
    scale = stats.alpha * stats.gamma0
    pts = {0.0}
    for k in range(-10, 11):
        amp = stats.mu + k * stats.sigma
        if amp > 0.0:
            x = (scale * amp * amp + 1.0) / rho - 1.0
            if x > 0.0:
                pts.add(x)
    a = split_point(stats)
    if a > 0.0:
        pts.add(a)
    for m in (1e-2, 1e-1, 1.0, 10.0, 100.0):
        pts.add(m * stats.ratio)
    top = max(pts)
    for m in (1.0, 5.0, 20.0, 60.0, 100.0):
        pts.add(top + m * stats.lambda_se)
    return sorted(pts)


def sop_exact_quadrature(cfg: SystemConfig, stats: LinkStats | None = None, *,
                         epsabs=1e-15, epsrel=1e-10) -> float:
    """Secrecy outage probability by adaptive quadrature with the exact Q.

    The half line is split at the split point ``a``, at the points where the
    destination CDF argument equals ``-10 .. 10`` standard deviations, at
    multiples of ``lambda_se / lambda_je`` and beyond at multiples of
    ``lambda_se``. Everything past ``100 lambda_se`` is integrated after the
    substitution ``x = X e^t``.
    """
    stats = _stats(cfg, stats)
    f = _integrand_factory(stats)
    pts = _breakpoints(stats)
    total = 0.0
    err_total = 0.0
    failures = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        val, err, info, *msg = integrate.quad(
            f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=200, full_output=True)
        total += val
        err_total += err
        if msg and err > max(epsabs, epsrel * abs(val)) * 10:
            failures.append({"interval": (lo, hi), "value": val, "abserr": err, "message": msg[0]})

    top = pts[-1]
    tail, tail_err = integrate.quad(lambda t: f(top * math.exp(t)) * top * math.exp(t),
                                    0.0, 50.0, epsabs=epsabs, epsrel=epsrel, limit=200)
    total += tail
    err_total += tail_err

    tol = max(1e-10, 1e-6 * abs(total))
    if err_total > tol or failures:
        raise NumericalError(
            "quadrature did not converge",
            {"value": total, "abserr": err_total, "tolerance": tol, "failures": failures},
        )
    return _clamp_probability(total, "sop_exact_quadrature")


# ---------------------------------------------------------------------------
# closed form


@dataclass(frozen=True)
class SopBreakdown:
    """Intermediates of the closed-form outage probability.

    ``b``, ``c``, ``xi`` and ``psi_vals`` hold one entry per term of the
    Q-function approximation; ``d`` is shared by all terms.
    """

    a: float
    b: tuple
    c: tuple
    d: float
    xi: tuple
    psi_vals: tuple
    i0: float
    i1: float
    i2: float
    sop: float
    regime_valid: bool

    def to_dict(self):
        return asdict(self)


def i0_closed_form(a: float, stats: LinkStats) -> float:
    """``psi`` times the eavesdropper SINR mass on ``[0, a]``.

    Written through ``Ei`` and ``Gamma(-1, .)``; it equals
    ``psi * F_E(a)``, which the tests use as an independent check.
    """
    lse, lje = stats.lambda_se, stats.lambda_je
    inner = 1.0 / lje
    outer = a / lse + inner
    bracket = (expint_ei(-outer) - expint_ei(-inner)
               + upper_gamma_neg1(inner) - upper_gamma_neg1(outer))
    try:
        return stats.psi * math.exp(inner) / lje * bracket
    except OverflowError as exc:
        raise NumericalError("I0 overflows: 1/lambda_je is too large",
                             {"lambda_je": lje}) from exc


def sop_closed_form(cfg: SystemConfig, stats: LinkStats | None = None) -> SopBreakdown:
    """Closed-form approximation of the secrecy outage probability.

    Outside the high-SNR regime (``a <= 0``, ``c^2 + d <= 0`` for some term,
    or intermediates that overflow a double) the breakdown is still filled
    where possible, ``regime_valid`` is False and ``sop`` comes from
    :func:`sop_exact_quadrature`.
    """
    stats = _stats(cfg, stats)
    rho = stats.rho
    _require_rho(rho)
    alpha, g0 = stats.alpha, stats.gamma0
    mu, s2, psi = stats.mu, stats.sigma2, stats.psi
    lse, lje = stats.lambda_se, stats.lambda_je

    a = split_point(stats)
    d = 1.0 - rho + lse / lje
    lower = math.sqrt(rho - 1.0)
    upper = math.sqrt(max(a * rho + rho - 1.0, 0.0))

    try:
        i0 = i0_closed_form(a, stats)
    except (DomainError, NumericalError):
        i0 = math.nan

    bs, cs, xis, psis = [], [], [], []
    i1 = i2 = 0.0
    for w, p in Q_APPROX.terms():
        # b, c and xi come from completing the square in the variable
        # y = sqrt(rho (x + 1) - 1); they are written with lambda_se so the
        # RIS size enters through it.
        den = rho * p * lse + 2.0 * alpha * s2 * g0
        b = den / (2.0 * rho * lse * s2 * alpha * g0)
        c = math.sqrt(alpha * g0) * rho * p * mu * lse / den
        log_xi = (-p * mu ** 2 / (2.0 * s2) + (rho - 1.0) / (rho * lse)
                  + rho * p ** 2 * mu ** 2 * lse / (2.0 * s2 * den))
        xi = math.exp(log_xi) if log_xi < 700.0 else math.inf
        shift = c * c + d
        sb = math.sqrt(b)
        window = erf_std(sb * (upper - c)) - erf_std(sb * (lower - c))
        gauss = c * math.sqrt(math.pi) / (2.0 * sb) * window
        big_psi = gauss / shift if shift > 0.0 else math.nan
        i1 += psi * w * xi * big_psi / (2.0 * lje)
        i2 += psi * w * xi * lse * gauss / (2.0 * shift ** 2 * lje)
        bs.append(b)
        cs.append(c)
        xis.append(xi)
        psis.append(big_psi)

    regime_valid = (a > 0.0 and all(c * c + d > 0.0 for c in cs)
                    and all(math.isfinite(v) for v in (i0, i1, i2)))
    if regime_valid:
        sop = _clamp_probability(1.0 - (i0 - i1 - i2), "sop_closed_form")
    else:
        logger.info("closed form out of regime (a=%.4g); using quadrature", a)
        sop = sop_exact_quadrature(cfg, stats)
    return SopBreakdown(a=a, b=tuple(bs), c=tuple(cs), d=d, xi=tuple(xis),
                        psi_vals=tuple(psis), i0=i0, i1=i1, i2=i2, sop=sop,
                        regime_valid=regime_valid)


# ---------------------------------------------------------------------------
# compact form and its derivatives


def _compact_terms(stats: LinkStats):
    """Return ``(sum_i Omega1 Omega2, k)`` with the outage ``S * exp(k/alpha) / (1 - alpha)``."""
    rho = stats.rho
    _require_rho(rho)
    z = stats.zeta
    n = stats.n_elements
    g0 = stats.gamma0
    omega = 0.0
    for w, p in Q_APPROX.terms():
        root = math.sqrt(2.0 * rho ** 2 * p + _SIXTEEN_MINUS_PI2 * rho * z["RD"] / (4.0 * z["RE"]))
        omega1 = (stats.psi * w * math.sqrt(_SIXTEEN_MINUS_PI2) * root
                  / (2.0 * rho * p * n ** 1.5 * math.sqrt(math.pi) * g0 * z["JR"] * z["RE"]))
        omega2 = math.exp(-p * math.pi ** 2 * n / (2.0 * _SIXTEEN_MINUS_PI2)
                          / (8.0 * rho * p * z["RE"] / (_SIXTEEN_MINUS_PI2 * z["RD"]) + 1.0))
        omega += omega1 * omega2
    k = (rho - 1.0) / (rho * z["RE"] * z["SR"] * g0 * n)
    return omega, k


def _alpha_array(alpha):
    arr = np.asarray(alpha, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError("alpha must lie in (0, 1)")
    return arr


def _compact_raw(stats: LinkStats, alpha):
    omega, k = _compact_terms(stats)
    with np.errstate(over="ignore"):
        return omega * np.exp(k / alpha) / (1.0 - alpha)


def sop_compact(cfg: SystemConfig, stats: LinkStats | None = None) -> float:
    """Large-N compact outage approximation, clamped to ``[0, 1]``."""
    stats = _stats(cfg, stats)
    raw = float(_compact_raw(stats, stats.alpha))
    if raw > 1.0:
        # The compact form is only meaningful for small outage values.
        logger.debug("sop_compact clamped from %.6g", raw)
        return 1.0
    return _clamp_probability(raw, "sop_compact")


def _at_alpha(cfg, alpha, stats):
    arr = _alpha_array(alpha)
    stats = _stats(cfg, stats)
    return arr, stats


def sop_derivative(cfg: SystemConfig, alpha, stats: LinkStats | None = None):
    """d/d(alpha) of the unclamped compact form. Vectorised over ``alpha``."""
    arr, stats = _at_alpha(cfg, alpha, stats)
    _, k = _compact_terms(stats)
    val = _compact_raw(stats, arr) * (1.0 / (1.0 - arr) - k / arr ** 2)
    return float(val) if val.ndim == 0 else val


def sop_second_derivative(cfg: SystemConfig, alpha, stats: LinkStats | None = None):
    """Second derivative in ``alpha`` of the unclamped compact form.

    ``S'' = S [(1/(1-a) - k/a^2)^2 + 1/(1-a)^2 + 2k/a^3]``; every bracketed
    term is positive on (0, 1), which is the convexity certificate.
    """
    arr, stats = _at_alpha(cfg, alpha, stats)
    _, k = _compact_terms(stats)
    slope = 1.0 / (1.0 - arr) - k / arr ** 2
    bracket = slope ** 2 + 1.0 / (1.0 - arr) ** 2 + 2.0 * k / arr ** 3
    val = _compact_raw(stats, arr) * bracket
    return float(val) if val.ndim == 0 else val


def compact_closed_form_ratio(cfg: SystemConfig, stats: LinkStats | None = None) -> float:
    """``sop_compact / sop_closed_form``; logs a warning outside ``[0.5, 2]``."""
    stats = _stats(cfg, stats)
    closed = sop_closed_form(cfg, stats).sop
    ratio = sop_compact(cfg, stats) / closed if closed > 0.0 else math.inf
    if not 0.5 <= ratio <= 2.0:
        logger.warning("compact form deviates from the closed form by a factor %.3g", ratio)
    return ratio
