"""M-ary equal-energy detection: exact error, zero-rate bounds, variable power.

Orthogonal signalling reduces to M independent unit-variance statistics,
the transmitted one shifted by ``mu = sqrt(2 E/N0)``. The exact error
probability is therefore

    P_e = int phi(t) [1 - Phi(t + mu)^(M-1)] dt,

which is evaluated in the log domain so that M can be as large as e^300.
A simplex set is error-equivalent to an orthogonal set with its energy
boosted by M/(M-1).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BinsFilteredError, DomainError, ModestError
from .exponents import awgn_reliability
from .numerics import QuadratureSpec, integrate_1d, log_neg_log_cdf, q_tail

ORTHOGONAL = "orthogonal"
SIMPLEX = "simplex"

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_WINDOW_QUAD = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, depth=200)
# The integrand is kept wherever it is within e^-60 of its peak.
_WINDOW_LOG_DROP = 60.0
_WINDOW_STEP = 0.01


@dataclass(frozen=True)
class SignalSetSpec:
    """``m`` equal-energy signals with energy-to-noise ratio ``energy_ratio`` = E/N0.

    ``m`` may be a float (or a big int) well beyond the int64 range.
    """

    m: float
    energy_ratio: float
    geometry: str = ORTHOGONAL

    def __post_init__(self):
        if self.m < 2:
            raise DomainError(f"need at least two signals, got M={self.m}")
        if self.energy_ratio < 0:
            raise DomainError("energy ratio must be non-negative")
        if self.geometry not in (ORTHOGONAL, SIMPLEX):
            raise DomainError(f"unknown geometry {self.geometry!r}")


def simplex_energy(m, energy):
    """Orthogonal-equivalent energy of an M-point simplex, E M/(M-1)."""
    if m < 2:
        raise DomainError("simplex needs M >= 2")
    return energy * m / (m - 1)


def _log_integrand(t, mu, log_m1):
    la = log_m1 + log_neg_log_cdf(t + mu)
    a = np.exp(np.minimum(la, 700.0))
    with np.errstate(divide="ignore"):
        # 1 - exp(-a) ~ a for tiny a; keep it in logs so it never underflows
        body = np.where(la < -20.0, la - 0.5 * a, np.log(-np.expm1(-a)))
    return -0.5 * t * t - _LOG_SQRT_2PI + body


def log_exact_mary_error(spec):
    """Natural log of :func:`exact_mary_error`; stays finite when P_e underflows."""
    energy = spec.energy_ratio
    if spec.geometry == SIMPLEX:
        energy = simplex_energy(spec.m, energy)
    mu = math.sqrt(2.0 * energy)
    log_m1 = math.log(spec.m - 1)

    ts = np.arange(-mu - 40.0, 40.0 + _WINDOW_STEP, _WINDOW_STEP)
    lf = _log_integrand(ts, mu, log_m1)
    i = int(np.argmax(lf))
    peak = float(lf[i])
    kept = ts[lf > peak - _WINDOW_LOG_DROP]
    lo, hi = float(kept[0]) - _WINDOW_STEP, float(kept[-1]) + _WINDOW_STEP

    def f(t):
        return float(np.exp(_log_integrand(np.array([t]), mu, log_m1)[0] - peak))

    scaled = integrate_1d(f, lo, hi, _WINDOW_QUAD, points=[float(ts[i])])
    return peak + math.log(scaled)


def exact_mary_error(spec):
    """Exact ML error probability for orthogonal or simplex signal sets."""
    if spec.energy_ratio == 0:
        return 1.0 - 1.0 / spec.m
    return min(1.0, math.exp(log_exact_mary_error(spec)))


def _snap(x):
    r = round(x)
    return r if abs(x - r) < 1e-9 * max(1.0, abs(x)) else x


def zero_rate_lower_bound(delta, energy_ratio):
    """Lower bound on P(|U_hat - U| > delta/2) for a fixed threshold, M = floor(1/delta)."""
    m = math.floor(_snap(1.0 / delta)) if delta > 0 else 0
    if m <= 2:
        raise DomainError(f"bound undefined at this threshold (delta={delta}, need delta < 1/3)")
    weight = 0.5 * (1.0 + delta - delta * m)
    return weight * q_tail(math.sqrt(energy_ratio * m / (m - 2)))


def zero_rate_upper_bound(delta, energy_ratio):
    """Union bound for M = ceil(1/delta) simplex signals, clamped to [0, 1]."""
    if not 0 < delta < 1:
        raise DomainError(f"threshold must lie in (0, 1), got {delta}")
    m = math.ceil(_snap(1.0 / delta))
    return min(1.0, (m - 1) * q_tail(math.sqrt(energy_ratio * m / (m - 1))))


def convexity_threshold(rate, c_min):
    """Duration beyond which exp(-T E(R, S)) is convex in the power S.

    sqrt(R) / [2 sqrt(C_min) (sqrt(C_min) - sqrt(R))^2]
    """
    if not 0 < rate < c_min:
        raise DomainError(f"need 0 < R < C_min, got R={rate}, C_min={c_min}")
    return math.sqrt(rate) / (2.0 * math.sqrt(c_min) * (math.sqrt(c_min) - math.sqrt(rate)) ** 2)


@dataclass(frozen=True)
class PowerProfile:
    """Power S(u) sampled on a uniform grid over [-1/2, 1/2).

    ``bin_width`` is the power-bin width delta; ``None`` defers to 1/sqrt(T)
    at evaluation time. ``power_cap`` is the average-power constraint.
    """

    samples: tuple
    power_cap: float
    bin_width: Optional[float] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.size == 0 or np.any(s <= 0):
            raise DomainError("power samples must be non-empty and positive")
        if s.mean() > self.power_cap * (1 + 1e-12):
            raise DomainError(f"mean power {s.mean()} exceeds the cap {self.power_cap}")
        if self.bin_width is not None and not self.bin_width > 0:
            raise DomainError("bin width must be positive")
        object.__setattr__(self, "samples", tuple(float(v) for v in s))

    @classmethod
    def levels(cls, powers, shares, n=1000, power_cap=None, bin_width=None):
        """Piecewise-constant profile: level ``powers[k]`` on fraction ``shares[k]`` of the interval."""
        counts = np.round(np.asarray(shares, dtype=float) / np.sum(shares) * n).astype(int)
        samples = np.repeat(np.asarray(powers, dtype=float), counts)
        cap = float(samples.mean()) if power_cap is None else power_cap
        return cls(tuple(samples), cap, bin_width)


@dataclass(frozen=True)
class VariablePowerBound:
    mixture: float
    convexified: float
    effective_rate: float
    threshold: float
    convex_regime: bool
    ordered: bool
    bin_powers: tuple = field(default=())
    weights: tuple = field(default=())


def bin_profile(samples, delta):
    """Bin powers into width-delta cells starting at S_min.

    delta is shrunk so that it divides S_max - S_min exactly; a constant
    profile gets a single bin whose representative power is S_min itself.
    Returns ``(counts, bin_powers)`` with bin power S_min + (i + 1/2) delta.
    """
    s = np.asarray(samples, dtype=float)
    s_min, s_max = float(s.min()), float(s.max())
    span = s_max - s_min
    if span <= 1e-12 * s_max:
        return np.array([s.size]), np.array([s_min])
    r = max(1, math.ceil(_snap(span / delta)))
    width = span / r
    idx = np.minimum(np.floor((s - s_min) / width).astype(int), r - 1)
    counts = np.bincount(idx, minlength=r)
    return counts, s_min + (np.arange(r) + 0.5) * width


def variable_power_bound(profile, rate, duration, slack=None, n0=1.0):
    """Mixture and convexified exponentials for a variable-power modulator.

    Bins holding less than a fraction exp(-slack T) of the samples are
    dropped. With weights pi_i over the retained bins and the reduced rate
    R' = R - 2 slack, returns sum_i pi_i exp(-T E(R', S_i)) and
    exp(-T E(R', sum_i pi_i S_i)). The first dominates the second once T
    exceeds the convexity threshold at the weakest retained power (evaluated
    at R'); below it the ordering is reported, not enforced. Snapping each
    bin to its centre power is an approximation that is not corrected for.
    """
    if not duration > 0:
        raise DomainError("duration must be positive")
    eps = 1.0 / math.sqrt(duration) if slack is None else slack
    delta = profile.bin_width if profile.bin_width is not None else 1.0 / math.sqrt(duration)
    r_eff = rate - 2.0 * eps
    if not r_eff > 0:
        raise DomainError(f"rate minus twice the slack must be positive, got {r_eff}")

    counts, powers = bin_profile(profile.samples, delta)
    n = counts.sum()
    keep = counts >= math.exp(-eps * duration) * n
    keep &= counts > 0
    if not keep.any():
        raise BinsFilteredError("all bins filtered by the relative-mass cutoff")
    weights = counts[keep] / counts[keep].sum()
    kept_powers = powers[keep]
    c_min = float(kept_powers.min()) / n0
    if not r_eff < c_min:
        raise DomainError(f"rate {r_eff} is not below the weakest retained capacity {c_min}")

    def expo(s):
        return math.exp(-duration * awgn_reliability(s / n0, r_eff))

    mixture = float(sum(w * expo(s) for w, s in zip(weights, kept_powers)))
    convexified = expo(float(np.dot(weights, kept_powers)))
    threshold = convexity_threshold(r_eff, c_min)
    convex_regime = duration >= threshold
    ordered = mixture >= convexified * (1.0 - 1e-12)
    if convex_regime and not ordered:
        raise ModestError("convexity violated above the threshold duration")
    return VariablePowerBound(
        mixture, convexified, r_eff, threshold, convex_regime, ordered,
        tuple(float(v) for v in kept_powers), tuple(float(v) for v in weights),
    )
