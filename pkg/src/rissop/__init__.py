"""Secrecy outage analysis for a surface-assisted link with a friendly jammer."""

__version__ = "0.1.0"

from .analytic import (
    SopBreakdown,
    compact_closed_form_ratio,
    sop_closed_form,
    sop_compact,
    sop_derivative,
    sop_exact_quadrature,
    sop_second_derivative,
)
from .channel import LinkStats, SystemConfig, cdf_gamma_d, cdf_gamma_e, derive_stats, pdf_gamma_e
from .exceptions import DomainError, NumericalError
from .montecarlo import McEstimate, estimate_sop
from .optimizer import (
    AllocationResult,
    allocate,
    alpha_star_closed_form,
    alpha_star_numeric,
    certify_convexity,
    gain_db,
)

__all__ = [
    "AllocationResult",
    "DomainError",
    "LinkStats",
    "McEstimate",
    "NumericalError",
    "SopBreakdown",
    "SystemConfig",
    "allocate",
    "alpha_star_closed_form",
    "alpha_star_numeric",
    "cdf_gamma_d",
    "cdf_gamma_e",
    "certify_convexity",
    "compact_closed_form_ratio",
    "derive_stats",
    "estimate_sop",
    "gain_db",
    "pdf_gamma_e",
    "sop_closed_form",
    "sop_compact",
    "sop_derivative",
    "sop_exact_quadrature",
    "sop_second_derivative",
]
