"""Laplace, Gaussian and truncated Laplace samplers.

All samplers take an explicit :class:`numpy.random.Generator`; there is no
module-level RNG.  Independent streams come from :func:`trial_rng` (keyed by
master seed and trial index) or from ``Generator.spawn``.

Floating-point attacks on samplers (e.g. least-significant-bit leakage) are
not mitigated here.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Generator for one trial, independent of how many trials are run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, trial)))


def _check_scale(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise InputError(f"{name} must be positive and finite, got {value!r}")


def sample_laplace(sigma: float, rng: np.random.Generator, size=None):
    """Draw from Lap(sigma), density ``exp(-|x|/sigma) / (2 sigma)``."""
    _check_scale("sigma", sigma)
    return rng.laplace(0.0, sigma, size)


def sample_gaussian(sigma: float, rng: np.random.Generator, size=None):
    """Draw from N(0, sigma^2)."""
    _check_scale("sigma", sigma)
    return rng.normal(0.0, sigma, size)


def trunc_lap_radius(eps: float, delta: float) -> float:
    """Truncation radius making ``x + TruncLap(1/eps, R)`` (eps, delta)-DP.

    ``R = ln(1 + (e^eps - 1) / (2 delta)) / eps``.  ``delta = 0`` would give an
    infinite radius and is rejected; use :func:`sample_laplace` instead.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise InputError(f"eps must be positive, got {eps!r}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta!r}")
    return math.log1p(math.expm1(eps) / (2 * delta)) / eps


@dataclass(frozen=True)
class TruncLapParams:
    """Laplace scale ``sigma`` restricted to ``[-R, R]``."""

    sigma: float
    R: float

    def __post_init__(self):
        _check_scale("sigma", self.sigma)
        _check_scale("R", self.R)

    @classmethod
    def for_privacy(cls, eps: float, delta: float) -> "TruncLapParams":
        return cls(1.0 / eps, trunc_lap_radius(eps, delta))


def trunc_laplace_cdf(x, params: TruncLapParams):
    """Analytic CDF of the truncated Laplace distribution."""
    s, R = params.sigma, params.R
    x = np.clip(np.asarray(x, dtype=float), -R, R)
    mass = -math.expm1(-R / s)  # 1 - e^{-R/s}
    tail = -np.expm1(-np.abs(x) / s) / (2 * mass)  # P(0 <= X <= |x|)
    return 0.5 + np.sign(x) * tail


def trunc_laplace_ppf(u, params: TruncLapParams):
    """Inverse of :func:`trunc_laplace_cdf` on ``[0, 1]``."""
    s, R = params.sigma, params.R
    u = np.asarray(u, dtype=float)
    mass = -math.expm1(-R / s)
    a = 2.0 * u - 1.0
    with np.errstate(divide="ignore"):  # log1p(-1) at u in {0, 1}; clipped below
        x = -np.sign(a) * s * np.log1p(-np.abs(a) * mass)
    return np.clip(x, -R, R)


def sample_trunc_laplace(params: TruncLapParams, rng: np.random.Generator, size=None):
    """Draw from TruncLap(sigma, R) by inverting the normalized CDF.

    One uniform per sample and no rejection loop, so a fixed generator state
    reproduces the draws bit for bit.
    """
    u = rng.random(size)
    x = trunc_laplace_ppf(u, params)
    return float(x) if size is None else x
