"""Optimal split of the power budget between source and jammer."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .analytic import (
    _compact_terms,
    sop_closed_form,
    sop_compact,
    sop_exact_quadrature,
    sop_second_derivative,
)
from .channel import LinkStats, SystemConfig, derive_stats
from .exceptions import DomainError, NumericalError
from .montecarlo import estimate_sop

__all__ = [
    "ALPHA_BOUNDS",
    "METHODS",
    "AllocationResult",
    "optimal_alpha",
    "alpha_star_closed_form",
    "quadratic_residual",
    "golden_section",
    "sop_by_method",
    "alpha_star_numeric",
    "certify_convexity",
    "gain_db",
    "allocate",
]

ALPHA_BOUNDS = (1e-4, 1.0 - 1e-4)
METHODS = ("compact", "closed_form", "quadrature", "monte_carlo")
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AllocationResult:
    alpha_star_closed: float
    alpha_star_numeric: float
    sop_at_star: float
    sop_at_epa: float
    gain_db: float | None = None

    def to_dict(self):
        return asdict(self)


def optimal_alpha(rho: float, k_product: float) -> float:
    """Positive root of ``K a^2 + (rho - 1) a - (rho - 1) = 0``.

    ``k_product`` is ``K = rho zeta_RE zeta_SR Gamma_0 N``. Written as
    ``2(rho-1) / ((rho-1) + sqrt(...))`` to avoid cancellation when ``K`` is
    large.
    """
    if not rho > 1.0:
        raise DomainError("optimal alpha requires rho > 1")
    if not k_product > 0.0:
        raise DomainError("K must be positive")
    r1 = rho - 1.0
    return 2.0 * r1 / (r1 + math.sqrt(r1 * r1 + 4.0 * k_product * r1))


def _k_product(stats: LinkStats) -> float:
    z = stats.zeta
    return stats.rho * z["RE"] * z["SR"] * stats.gamma0 * stats.n_elements


def alpha_star_closed_form(cfg: SystemConfig, stats: LinkStats | None = None) -> float:
    """Minimiser of the compact outage form. Independent of zeta_JR and zeta_RD."""
    stats = derive_stats(cfg) if stats is None else stats
    return optimal_alpha(stats.rho, _k_product(stats))


def quadratic_residual(cfg: SystemConfig, alpha: float) -> float:
    """Residual of the stationarity quadratic at ``alpha``."""
    stats = derive_stats(cfg)
    k = _k_product(stats)
    r1 = stats.rho - 1.0
    return alpha * alpha * k + alpha * r1 - r1


def golden_section(f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-10,
                   max_iter: int = 500):
    """Minimise a unimodal ``f`` on ``[lo, hi]``. Returns ``(x, f(x))``."""
    if not lo < hi:
        raise DomainError("golden_section needs lo < hi")
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    else:
        raise NumericalError("golden section did not converge", {"lo": lo, "hi": hi})
    return (x1, f1) if f1 <= f2 else (x2, f2)


def sop_by_method(cfg: SystemConfig, method: str, *, trials: int = 100_000, seed: int = 0,
                  n_jobs: int = 1) -> float:
    """Outage probability of ``cfg`` with the named evaluator."""
    if method == "compact":
        return sop_compact(cfg)
    if method == "closed_form":
        return sop_closed_form(cfg).sop
    if method == "quadrature":
        return sop_exact_quadrature(cfg)
    if method == "monte_carlo":
        return estimate_sop(cfg, trials, seed, n_jobs=n_jobs).sop_hat
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


def _logit_grid(lo, hi, points):
    u = np.linspace(math.log(lo / (1.0 - lo)), math.log(hi / (1.0 - hi)), points)
    return 1.0 / (1.0 + np.exp(-u))


def _check_unimodal(alphas, values, slack):
    i = int(np.argmin(values))
    left = np.diff(values[: i + 1])
    right = np.diff(values[i:])
    if np.any(left > slack[1 : i + 1]) or np.any(right < -slack[i + 1 :]):
        raise NumericalError(
            "objective is not unimodal on the scan grid",
            {"alpha": alphas.tolist(), "values": values.tolist()},
        )
    return i


def alpha_star_numeric(cfg: SystemConfig, objective="compact", *, bounds=ALPHA_BOUNDS,
                       grid_points: int = 61, xtol: float = 1e-10, trials: int = 100_000,
                       seed: int = 0, n_jobs: int = 1) -> float:
    """Numerically minimise an outage objective over ``alpha``.

    ``objective`` is one of :data:`METHODS` or a callable of ``alpha``. The
    compact form (convex) and callables go straight to golden-section
    search. The other objectives are scanned on a grid uniform in
    ``logit(alpha)``, checked for unimodality and then refined by golden
    section between the neighbours of the best grid point. The Monte Carlo
    objective reuses one seed for every ``alpha``.
    """
    lo, hi = bounds
    if not 0.0 < lo < hi < 1.0:
        raise DomainError("bounds must satisfy 0 < lo < hi < 1")
    if callable(objective):
        return golden_section(objective, lo, hi, xtol)[0]
    if objective == "compact":
        stats = derive_stats(cfg)
        # log of the compact form: same minimiser, no overflow near alpha = 0
        _, k = _compact_terms(stats)
        return golden_section(lambda a: k / a - math.log1p(-a), lo, hi, xtol)[0]
    if objective not in METHODS:
        raise DomainError(f"unknown objective {objective!r}")
    if not cfg.rho > 1.0:
        raise DomainError("power allocation requires rho > 1")

    def f(a):
        return sop_by_method(cfg.replace(alpha=float(a)), objective, trials=trials, seed=seed,
                             n_jobs=n_jobs)

    alphas = _logit_grid(lo, hi, grid_points)
    values = np.array([f(a) for a in alphas])
    if objective == "monte_carlo":
        slack = 1.96 * np.sqrt(np.maximum(values * (1.0 - values), 1.0 / trials) / trials)
    else:
        slack = 1e-9 * np.abs(values) + 1e-300
    i = _check_unimodal(alphas, values, slack)
    left = alphas[max(i - 1, 0)]
    right = alphas[min(i + 1, grid_points - 1)]
    tol = max(xtol, 1e-6 * (right - left)) if objective != "monte_carlo" else 1e-4 * (right - left)
    return golden_section(f, left, right, tol)[0]


def certify_convexity(cfg: SystemConfig, grid_points: int = 999) -> bool:
    """True iff the compact form is convex on a uniform grid inside (0, 1).

    Checks the analytic second derivative pointwise and the discrete second
    differences. The differences are taken on ``log S`` and rescaled by
    ``S(alpha)`` so near-zero ``alpha`` does not overflow.
    """
    if grid_points < 3:
        raise DomainError("grid_points must be >= 3")
    stats = derive_stats(cfg)
    alphas = np.arange(1, grid_points + 1) / (grid_points + 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        second = sop_second_derivative(cfg, alphas, stats)
    pointwise = bool(np.all(second > 0.0))
    _, k = _compact_terms(stats)
    log_s = k / alphas - np.log1p(-alphas)
    ratio = np.exp(log_s[:-2] - log_s[1:-1]) - 2.0 + np.exp(log_s[2:] - log_s[1:-1])
    differences = bool(np.all(ratio > 0.0))
    return pointwise and differences


def gain_db(cfg: SystemConfig, target_sop: float = 1e-4, method: str = "quadrature", *,
            bracket=(-30.0, 100.0), trials: int = 1_000_000, seed: int = 0) -> float:
    """Gamma_0 saving, in dB, of optimal over equal allocation at ``target_sop``.

    Finds the Gamma_0 at which each policy reaches the target (root of
    ``log SOP - log target`` by Brent's method) and returns the difference.
    """
    if not 0.0 < target_sop < 1.0:
        raise DomainError("target_sop must lie in (0, 1)")
    log_target = math.log(target_sop)

    def crossing(policy):
        def g(gamma0_db):
            point = cfg.replace(gamma0_db=gamma0_db)
            a = 0.5 if policy == "epa" else alpha_star_closed_form(point)
            value = sop_by_method(point.replace(alpha=a), method, trials=trials, seed=seed)
            return math.log(max(value, 1e-300)) - log_target

        try:
            return optimize.brentq(g, *bracket, xtol=1e-9)
        except ValueError as exc:
            raise NumericalError(f"{policy} curve does not cross the target in {bracket}",
                                 {"target_sop": target_sop}) from exc

    return crossing("epa") - crossing("opa")


def allocate(cfg: SystemConfig, objective: str = "compact", method: str = "quadrature", *,
             gain_target: float | None = None) -> AllocationResult:
    """Closed-form and numeric optimum, with outage at the optimum and at alpha = 0.5."""
    a_closed = alpha_star_closed_form(cfg)
    a_numeric = alpha_star_numeric(cfg, objective)
    return AllocationResult(
        alpha_star_closed=a_closed,
        alpha_star_numeric=a_numeric,
        sop_at_star=sop_by_method(cfg.replace(alpha=a_closed), method),
        sop_at_epa=sop_by_method(cfg.replace(alpha=0.5), method),
        gain_db=None if gain_target is None else gain_db(cfg, gain_target, method),
    )
