"""Scenario description, path loss and per-link SINR statistics."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import DomainError
from .numerics import q_exact

__all__ = [
    "LINKS",
    "DEFAULT_DISTANCES",
    "SystemConfig",
    "LinkStats",
    "db_to_linear",
    "pathloss_linear",
    "derive_stats",
    "cdf_gamma_d",
    "cdf_gamma_e",
    "sf_gamma_e",
    "pdf_gamma_e",
]

LINKS = ("SR", "JR", "RD", "RE")
DEFAULT_DISTANCES = {"SR": 30.0, "JR": 30.0, "RD": 30.0, "RE": 15.0}


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical scenario: RIS size, power budget, threshold and geometry.

    Parameters
    ----------
    n_elements : int
        Number of RIS elements ``N``.
    gamma0_db : float
        Total transmit power over noise power, ``P_T / N_0``, in dB.
    alpha : float
        Fraction of the power budget spent by the source, in (0, 1). The
        jammer gets ``1 - alpha``.
    rate_threshold : float
        Secrecy rate threshold in bits per channel use.
    distances : mapping
        Node distances in meters keyed by ``SR``, ``JR``, ``RD``, ``RE``.
    pathloss_ref_db, pathloss_exponent : float
        Path gain law ``zeta(dB) = z0 - 10 v log10(d)``.
    reflect_amplitude : float
        RIS amplitude reflection coefficient, in (0, 1].
    """

    n_elements: int = 64
    gamma0_db: float = 20.0
    alpha: float = 0.5
    rate_threshold: float = 1.0
    distances: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_DISTANCES))
    pathloss_ref_db: float = 42.0
    pathloss_exponent: float = 3.5
    reflect_amplitude: float = 1.0

    def __post_init__(self):
        unknown = set(self.distances) - set(LINKS)
        if unknown:
            raise DomainError(f"unknown distance keys: {sorted(unknown)}")
        dist = {**DEFAULT_DISTANCES, **{k: float(v) for k, v in self.distances.items()}}
        object.__setattr__(self, "distances", dist)
        if isinstance(self.n_elements, bool) or int(self.n_elements) != self.n_elements:
            raise DomainError(f"n_elements must be an integer, got {self.n_elements!r}")
        object.__setattr__(self, "n_elements", int(self.n_elements))
        if self.n_elements < 1:
            raise DomainError("n_elements must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (math.isfinite(self.rate_threshold) and self.rate_threshold >= 0.0):
            raise DomainError("rate_threshold must be finite and >= 0")
        for name in ("gamma0_db", "pathloss_ref_db"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.pathloss_exponent > 0.0:
            raise DomainError("pathloss_exponent must be > 0")
        if not 0.0 < self.reflect_amplitude <= 1.0:
            raise DomainError("reflect_amplitude must lie in (0, 1]")
        for key, d in dist.items():
            if not (math.isfinite(d) and d > 0.0):
                raise DomainError(f"distance {key} must be > 0, got {d!r}")

    @property
    def gamma0(self):
        """Linear ``Gamma_0``."""
        return 10.0 ** (self.gamma0_db / 10.0)

    @property
    def rho(self):
        return 2.0 ** self.rate_threshold

    def replace(self, **changes):
        """Return a copy with some fields changed. ``d_XY=...`` sets one distance."""
        dist = dict(self.distances)
        for key in list(changes):
            if key.startswith("d_") and key[2:].upper() in LINKS:
                dist[key[2:].upper()] = changes.pop(key)
        changes.setdefault("distances", dist)
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["distances"] = dict(self.distances)
        return out

    @classmethod
    def from_dict(cls, data: Mapping):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise DomainError(f"unknown configuration fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, source):
        """Load from a JSON file path or a JSON string."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            text = Path(source).read_text()
        else:
            text = source
        data = json.loads(text)
        if not isinstance(data, dict):
            raise DomainError("configuration JSON must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class LinkStats:
    """Statistical parameters of the destination and eavesdropper SINRs.

    ``mu``/``sigma2`` describe the Gaussian approximation of the summed
    cascaded amplitude at the destination, ``psi`` renormalises it to the
    positive half line, and ``lambda_se``/``lambda_je`` are the means of
    the exponential signal and jamming powers seen by the eavesdropper.
    """

    mu: float
    sigma2: float
    psi: float
    lambda_se: float
    lambda_je: float
    rho: float
    gamma0: float
    zeta: Mapping[str, float]
    alpha: float
    n_elements: int

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def ratio(self):
        """``lambda_se / lambda_je``."""
        return self.lambda_se / self.lambda_je


def pathloss_linear(d, cfg: SystemConfig):
    """Linear path gain at distance ``d`` meters."""
    d = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d <= 0.0):
        raise DomainError("distance must be finite and > 0")
    gain_db = cfg.pathloss_ref_db - 10.0 * cfg.pathloss_exponent * np.log10(d)
    gain = 10.0 ** (gain_db / 10.0)
    return float(gain) if gain.ndim == 0 else gain


def derive_stats(cfg: SystemConfig, zeta_override: Mapping[str, float] | None = None) -> LinkStats:
    """Derive :class:`LinkStats` from a configuration.

    ``zeta_override`` replaces individual path gains; it exists for fault
    injection in the validation harness.
    """
    zeta = {k: pathloss_linear(cfg.distances[k], cfg) for k in LINKS}
    if zeta_override:
        unknown = set(zeta_override) - set(LINKS)
        if unknown:
            raise DomainError(f"unknown links in zeta_override: {sorted(unknown)}")
        zeta.update({k: float(v) for k, v in zeta_override.items()})
    n = cfg.n_elements
    g0 = cfg.gamma0
    eta2 = cfg.reflect_amplitude ** 2
    cascade = zeta["RD"] * zeta["SR"]
    mu = math.pi * n * math.sqrt(cascade) / 4.0
    sigma2 = n * cascade * (16.0 - math.pi ** 2) / 16.0
    psi = 1.0 / q_exact(-mu / math.sqrt(sigma2))
    lambda_se = cfg.alpha * g0 * n * eta2 * zeta["RE"] * zeta["SR"]
    lambda_je = (1.0 - cfg.alpha) * g0 * n * eta2 * zeta["RE"] * zeta["JR"]
    return LinkStats(
        mu=mu,
        sigma2=sigma2,
        psi=psi,
        lambda_se=lambda_se,
        lambda_je=lambda_je,
        rho=cfg.rho,
        gamma0=g0,
        zeta=zeta,
        alpha=cfg.alpha,
        n_elements=n,
    )


def _nonnegative(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0.0):
        raise DomainError("SINR argument must be >= 0")
    return x


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def cdf_gamma_d(x, stats: LinkStats, alpha=None, gamma0=None):
    """CDF of the destination SINR under the truncated-Gaussian model.

    ``1 - psi Q((sqrt(x / (alpha Gamma_0)) - mu) / sigma)``, evaluated as
    ``psi (Q(|z|) - Q(mu/sigma))`` below the median so small values keep
    their relative accuracy.
    """
    x = _nonnegative(x)
    alpha = stats.alpha if alpha is None else alpha
    gamma0 = stats.gamma0 if gamma0 is None else gamma0
    sigma = stats.sigma
    with np.errstate(over="ignore"):
        z = (np.sqrt(x / (alpha * gamma0)) - stats.mu) / sigma
    lower = stats.psi * (q_exact(np.abs(z)) - q_exact(stats.mu / sigma))
    upper = 1.0 - stats.psi * q_exact(np.abs(z))
    return _out(np.clip(np.where(z < 0.0, lower, upper), 0.0, 1.0))


def sf_gamma_e(x, stats: LinkStats):
    """Survival function ``1 - F(x)`` of the eavesdropper SINR."""
    x = _nonnegative(x)
    r = stats.ratio
    return _out(np.clip(r * np.exp(-x / stats.lambda_se) / (x + r), 0.0, 1.0))


def cdf_gamma_e(x, stats: LinkStats):
    """CDF of the eavesdropper SINR (ratio of exponentials plus noise)."""
    return _out(np.clip(1.0 - np.asarray(sf_gamma_e(x, stats)), 0.0, 1.0))


def pdf_gamma_e(x, stats: LinkStats):
    """PDF of the eavesdropper SINR."""
    x = _nonnegative(x)
    r = stats.ratio
    e = np.exp(-x / stats.lambda_se)
    shifted = x + r
    return _out(e / (stats.lambda_je * shifted) + stats.lambda_se * e / (stats.lambda_je * shifted ** 2))
