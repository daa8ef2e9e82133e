"""Monte Carlo simulation of the RIS wiretap link with a friendly jammer.

Trials are processed in fixed blocks of :data:`BLOCK_SIZE`. Each block
draws from its own SFC64 stream seeded from ``(seed, block_index)``, so a
block sees the same numbers no matter which worker runs it and results do
not depend on ``n_jobs``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from .channel import LINKS, SystemConfig, cdf_gamma_d, cdf_gamma_e, derive_stats, pathloss_linear
from .exceptions import DomainError

__all__ = [
    "BLOCK_SIZE",
    "MAX_CDF_SAMPLES",
    "McEstimate",
    "EmpiricalCdf",
    "block_rng",
    "simulate_trials",
    "simulate_trial",
    "estimate_sop",
    "empirical_cdf_gamma_d",
    "empirical_cdf_gamma_e",
]

BLOCK_SIZE = 4096
MAX_CDF_SAMPLES = 1_000_000
_UINT64 = (1 << 64) - 1


@dataclass(frozen=True)
class McEstimate:
    trials: int
    outages: int
    sop_hat: float
    ci95_half_width: float
    seed: int
    low_count: bool = False

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EmpiricalCdf:
    samples: np.ndarray
    ks_distance: float


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for one block of trials, derived from ``(seed, block)``."""
    if not 0 <= seed <= _UINT64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence((int(seed), int(block)))))


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")


def simulate_trials(cfg: SystemConfig, n: int, rng: np.random.Generator, *,
                    alpha: float | None = None, disable_eavesdropper: bool = False):
    """Draw ``n`` independent channel realisations and return ``(gamma_d, gamma_e)``.

    The RIS phases are chosen per realisation to co-phase the cascaded
    source-RIS-destination channel. ``alpha`` overrides the configured
    split and may be 0 or 1. ``disable_eavesdropper`` forces
    ``gamma_e = 0``.
    """
    alpha = cfg.alpha if alpha is None else float(alpha)
    _check_alpha(alpha)
    N = cfg.n_elements
    g0 = cfg.gamma0
    eta = cfg.reflect_amplitude
    # Draw order SR, JR, RD, RE with (re, im) adjacent is part of the
    # reproducibility contract.
    draws = rng.standard_normal((len(LINKS), n, N, 2)).view(np.complex128)[..., 0]
    h = {}
    for i, link in enumerate(LINKS):
        h[link] = draws[i]
        h[link] *= math.sqrt(pathloss_linear(cfg.distances[link], cfg) / 2.0)

    cascade = h["SR"] * h["RD"]
    mag = np.abs(cascade)
    phase = np.conj(cascade, out=cascade)
    phase /= np.where(mag > 0.0, mag, 1.0)  # exp(j theta_n)

    gamma_d = alpha * g0 * (eta * mag.sum(axis=1)) ** 2
    if disable_eavesdropper:
        return gamma_d, np.zeros(n)
    reflected = phase
    reflected *= h["RE"]
    reflected *= eta
    h_se = math.sqrt(alpha * g0) * np.einsum("ij,ij->i", reflected, h["SR"])
    h_je = math.sqrt((1.0 - alpha) * g0) * np.einsum("ij,ij->i", reflected, h["JR"])
    gamma_e = np.abs(h_se) ** 2 / (1.0 + np.abs(h_je) ** 2)
    return gamma_d, gamma_e


def simulate_trial(cfg: SystemConfig, rng: np.random.Generator, **kwargs):
    """Single realisation; see :func:`simulate_trials`."""
    gd, ge = simulate_trials(cfg, 1, rng, **kwargs)
    return float(gd[0]), float(ge[0])


def _blocks(trials):
    full, rest = divmod(trials, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _run_blocks(fn, trials, n_jobs):
    blocks = _blocks(trials)
    if n_jobs is None or n_jobs <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, blocks))


def _outage(gamma_d, gamma_e, rate_threshold):
    secrecy = np.maximum(np.log2((1.0 + gamma_d) / (1.0 + gamma_e)), 0.0)
    return secrecy < rate_threshold


def estimate_sop(cfg: SystemConfig, trials: int, seed: int, *, n_jobs: int = 1,
                 alpha: float | None = None, disable_eavesdropper: bool = False) -> McEstimate:
    """Empirical secrecy outage probability over ``trials`` realisations.

    Identical ``(cfg, trials, seed)`` give identical results for any
    ``n_jobs``. ``low_count`` is set when fewer than 10 outages were seen.
    """
    if int(trials) != trials or trials < 1:
        raise DomainError("trials must be a positive integer")
    trials = int(trials)

    def count(block):
        index, size = block
        gd, ge = simulate_trials(cfg, size, block_rng(seed, index), alpha=alpha,
                                 disable_eavesdropper=disable_eavesdropper)
        return int(np.count_nonzero(_outage(gd, ge, cfg.rate_threshold)))

    outages = sum(_run_blocks(count, trials, n_jobs))
    p = outages / trials
    half = 1.96 * math.sqrt(p * (1.0 - p) / trials)
    return McEstimate(trials=trials, outages=outages, sop_hat=p, ci95_half_width=half,
                      seed=seed, low_count=outages < 10)


def _samples(cfg, trials, seed, which, n_jobs):
    if int(trials) != trials or not 1 <= trials <= MAX_CDF_SAMPLES:
        raise DomainError(f"trials must be an integer in [1, {MAX_CDF_SAMPLES}]")

    def draw(block):
        index, size = block
        return simulate_trials(cfg, size, block_rng(seed, index))[which]

    return np.sort(np.concatenate(_run_blocks(draw, int(trials), n_jobs)))


def empirical_cdf_gamma_d(cfg: SystemConfig, trials: int, seed: int, *, n_jobs: int = 1) -> EmpiricalCdf:
    """Sorted destination SINR samples and their KS distance to the Gaussian-sum model."""
    s = _samples(cfg, trials, seed, 0, n_jobs)
    stats = derive_stats(cfg)
    ks = sps.kstest(s, lambda x: cdf_gamma_d(x, stats)).statistic
    return EmpiricalCdf(samples=s, ks_distance=float(ks))


def empirical_cdf_gamma_e(cfg: SystemConfig, trials: int, seed: int, *, n_jobs: int = 1) -> EmpiricalCdf:
    """Sorted eavesdropper SINR samples and their KS distance to the exponential-ratio model."""
    s = _samples(cfg, trials, seed, 1, n_jobs)
    stats = derive_stats(cfg)
    ks = sps.kstest(s, lambda x: cdf_gamma_e(x, stats)).statistic
    return EmpiricalCdf(samples=s, ks_distance=float(ks))
