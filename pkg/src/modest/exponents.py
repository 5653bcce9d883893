"""Closed-form exponents, capacities and fading quantities.

Rates and exponents are in nats per second and logs are natural throughout.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .numerics import QuadratureSpec, integrate_1d, maximize_concave_1d


@dataclass(frozen=True)
class ChannelSpec:
    """Infinite-bandwidth AWGN channel: power S, noise density N0, capacity C = S/N0."""

    power: float
    n0: float = 1.0

    def __post_init__(self):
        if not (self.power > 0 and self.n0 > 0):
            raise DomainError("power and noise density must be positive")

    @classmethod
    def from_capacity(cls, capacity):
        return cls(power=capacity, n0=1.0)

    @property
    def capacity(self):
        return self.power / self.n0

    def energy(self, duration):
        return self.power * duration


@dataclass(frozen=True)
class FadingSpec:
    """Rayleigh gain with scale ``sigma`` on top of ``channel``; mean capacity sigma^2 C."""

    sigma: float
    channel: ChannelSpec

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("Rayleigh scale must be positive")

    @property
    def mean_capacity(self):
        return self.sigma ** 2 * self.channel.capacity


@dataclass(frozen=True)
class BandSpec:
    bandwidth: float
    channel: ChannelSpec

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")

    @property
    def capacity(self):
        """W ln(1 + S/(N0 W)), the band-limited capacity in nats/s."""
        ch = self.channel
        return self.bandwidth * math.log1p(ch.power / (ch.n0 * self.bandwidth))


def _capacity_of(channel):
    return channel.capacity if isinstance(channel, ChannelSpec) else float(channel)


def awgn_reliability(channel, rate):
    """Reliability function E(R) of the infinite-bandwidth AWGN channel.

    ``channel`` may be a :class:`ChannelSpec` or a bare capacity. Returns 0 for
    R >= C; use :func:`strong_converse` to tell R > C apart from R = C.
    """
    c = _capacity_of(channel)
    if rate < 0:
        raise DomainError(f"rate must be non-negative, got {rate}")
    if rate <= c / 4:
        return c / 2 - rate
    if rate < c:
        return (math.sqrt(c) - math.sqrt(rate)) ** 2
    return 0.0


def strong_converse(channel, rate):
    """True when R > C, where the error probability tends to one rather than merely not decaying."""
    return rate > _capacity_of(channel)


class FlaggedExponent(NamedTuple):
    value: float
    strong_converse: bool


def awgn_reliability_flagged(channel, rate):
    return FlaggedExponent(awgn_reliability(channel, rate), strong_converse(channel, rate))


def fading_reliability(gain, channel, rate):
    """E_a(R) for a fixed fading gain ``a``, written as a function of ``a``."""
    c = _capacity_of(channel)
    if gain < 0 or rate < 0:
        raise DomainError("gain and rate must be non-negative")
    knee = math.sqrt(rate / c)
    if gain >= 2 * knee:
        return gain * gain * c / 2 - rate
    if gain >= knee:
        return (gain * math.sqrt(c) - math.sqrt(rate)) ** 2
    return 0.0


def _sp_objective(band, rate):
    w = band.bandwidth
    snr = band.channel.power / (band.channel.n0 * w)

    def g(rho):
        return rho * w * math.log1p(snr / (1.0 + rho)) - rho * rate

    return g


def sphere_packing_exponent(band, rate, rho_max=64.0, tol=1e-10):
    """Band-limited sphere-packing exponent and its maximizing rho.

    Only equals the reliability function for R >= :func:`critical_rate`.
    The objective is concave in rho, so golden-section search on
    ``[0, rho_max]`` is enough. Returns ``(value, rho_star)``.
    """
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")
    rho, value = maximize_concave_1d(_sp_objective(band, rate), 0.0, rho_max, tol)
    if value <= 0.0:
        return 0.0, 0.0
    return value, rho


def critical_rate(band):
    """R_c(W): derivative of the band-limited E0 function at rho = 1."""
    w = band.bandwidth
    s, n0 = band.channel.power, band.channel.n0
    return w * (math.log1p(s / (2 * n0 * w)) - 0.5 * s / (s + 2 * n0 * w))


def moment_bound_exponent(channel, alpha, grid_points=4001, tol=1e-12):
    """Minimize E(R) + alpha R over [0, C]; returns ``(R_star, value)``.

    This is the exponent of the lower bound on E|U_hat - U|^alpha. A dense
    grid locates the basin, then golden-section search refines inside the
    neighbouring grid cells. Among equal minima the smallest R wins, so
    alpha >= 1 reports R_star = 0.
    """
    if not alpha > 0:
        raise DomainError(f"moment order must be positive, got {alpha}")
    c = _capacity_of(channel)

    def objective(r):
        return awgn_reliability(c, r) + alpha * r

    grid = np.linspace(0.0, c, grid_points)
    vals = np.array([objective(r) for r in grid])
    i = int(np.flatnonzero(vals <= vals.min() + 1e-14)[0])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    r_star, neg = maximize_concave_1d(lambda r: -objective(r), lo, hi, tol)
    if objective(0.0) <= -neg + 1e-15 and i == 0:
        return 0.0, objective(0.0)
    return r_star, -neg


def critical_dimension(channel, rate):
    """floor(C/R): the largest dimension whose total rate d*R stays at or below C.

    At exact divisibility the boundary dimension d = C/R runs at rate C,
    where the exponent is already zero; callers who need strict decay should
    compare ``d * R < C`` themselves.
    """
    if not rate > 0:
        raise DomainError(f"per-dimension rate must be positive, got {rate}")
    return int(math.floor(_capacity_of(channel) / rate))


def outage_probability(fading, rate):
    """P(A^2 C < R) = 1 - exp(-R / (2 C_bar)) for Rayleigh gain A."""
    if rate < 0:
        raise DomainError("rate must be non-negative")
    return -math.expm1(-rate / (2.0 * fading.mean_capacity))


class CraigValue(NamedTuple):
    value: float
    lower: float
    upper: float


_CRAIG_QUAD = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12, depth=200)


def fading_zero_rate_value(fading, duration):
    """E{Q(A sqrt(C T))} by Craig's representation, with its algebraic sandwich.

    The angular integral (1/pi) int_0^{pi/2} sin^2/(K + sin^2) dtheta,
    K = C_bar T, is evaluated numerically; the bounds replace sin^2 in the
    denominator by 1 and 0.
    """
    if not duration > 0:
        raise DomainError("duration must be positive")
    k = fading.mean_capacity * duration

    def integrand(theta):
        s2 = math.sin(theta) ** 2
        return s2 / (k + s2)

    value = integrate_1d(integrand, 0.0, math.pi / 2, _CRAIG_QUAD) / math.pi
    return CraigValue(value, 1.0 / (4.0 * (k + 1.0)), 1.0 / (4.0 * k))
