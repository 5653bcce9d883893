"""Joint versus separate source-channel excess-distortion exponents.

Both curves are tabulated (rate, value) knots with linear interpolation;
``inf`` is an ordinary float here and behaves as the absorbing marker: a
segment with an infinite endpoint is infinite in its interior.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .exponents import awgn_reliability

INF = math.inf


@dataclass(frozen=True)
class ExponentCurve:
    rates: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.rates, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size == 0:
            raise DomainError("rates and values must be equal-length, non-empty sequences")
        if np.any(np.diff(r) <= 0):
            raise DomainError("rates must be strictly increasing")
        if np.any(np.isnan(v)) or np.any(v < 0):
            raise DomainError("exponent values must be non-negative")
        object.__setattr__(self, "rates", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @classmethod
    def step(cls, knee, r_max):
        """Zero up to ``knee`` and infinite beyond it."""
        if not 0 < knee < r_max:
            raise DomainError("need 0 < knee < r_max")
        return cls((0.0, knee, r_max), (0.0, 0.0, INF))

    @classmethod
    def tabulate(cls, func, rates):
        rates = np.asarray(rates, dtype=float)
        return cls(tuple(rates), tuple(func(r) for r in rates))

    @classmethod
    def awgn(cls, capacity, rates):
        return cls.tabulate(lambda r: awgn_reliability(capacity, r), rates)

    @classmethod
    def read(cls, path):
        """Two-column text file (rate, value); ``inf`` allowed; '#' starts a comment."""
        rates, values = [], []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].replace(",", " ").strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise DomainError(f"expected two columns, got {line!r}")
                rates.append(float(parts[0]))
                values.append(float(parts[1]))
        return cls(tuple(rates), tuple(values))

    @property
    def domain(self):
        return self.rates[0], self.rates[-1]

    def _segment(self, x):
        r = self.rates
        if not r[0] <= x <= r[-1]:
            raise DomainError(f"rate {x} outside the tabulated range [{r[0]}, {r[-1]}]")
        i = min(int(np.searchsorted(r, x, side="right")) - 1, len(r) - 2)
        return max(i, 0)

    def __call__(self, x):
        r, v = self.rates, self.values
        if len(r) == 1:
            if x != r[0]:
                raise DomainError(f"rate {x} outside the tabulated range")
            return v[0]
        i = self._segment(x)
        if x == r[i]:
            return v[i]
        if x == r[i + 1]:
            return v[i + 1]
        return _lerp(r[i], v[i], r[i + 1], v[i + 1], x)


def _lerp(x0, y0, x1, y1, x):
    if math.isinf(y0) or math.isinf(y1):
        return INF
    t = (x - x0) / (x1 - x0)
    return y0 + t * (y1 - y0)


def rate_grid(lo, hi, points=10001, knots=()):
    """Uniform grid on [lo, hi] with extra exact knots merged in."""
    if not hi > lo or points < 2:
        raise DomainError("need hi > lo and at least two points")
    g = np.linspace(lo, hi, points)
    extra = [k for k in knots if lo <= k <= hi]
    return np.unique(np.concatenate([g, extra]))


def _prepare(f_curve, e_curve, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("empty rate grid")
    lo = max(f_curve.domain[0], e_curve.domain[0])
    hi = min(f_curve.domain[1], e_curve.domain[1])
    knots = [x for x in set(f_curve.rates) | set(e_curve.rates) if grid.min() <= x <= grid.max()]
    pts = np.unique(np.concatenate([grid, knots]))
    if pts.min() < lo or pts.max() > hi:
        raise DomainError("rate grid extends beyond the tabulated curves")
    return pts


def _segment_values(curve, x, idx):
    r = np.asarray(curve.rates)
    v = np.asarray(curve.values)
    if r.size == 1:
        return np.full(x.shape, v[0])
    idx = np.clip(idx, 0, r.size - 2)
    x0, x1, y0, y1 = r[idx], r[idx + 1], v[idx], v[idx + 1]
    finite = np.isfinite(y0) & np.isfinite(y1)
    with np.errstate(invalid="ignore"):
        t = (x - x0) / (x1 - x0)
        out = np.where(finite, y0 + t * (np.where(finite, y1, 0) - np.where(finite, y0, 0)), INF)
    return out


def _at(curve, x):
    r = np.asarray(curve.rates)
    out = _segment_values(curve, x, np.searchsorted(r, x, side="right") - 1)
    hit = np.searchsorted(r, x, side="left")
    exact = (hit < r.size) & (r[np.minimum(hit, r.size - 1)] == x)
    return np.where(exact, np.asarray(curve.values)[np.minimum(hit, r.size - 1)], out)


def _limit(curve, x, side):
    r = np.asarray(curve.rates)
    if side > 0:
        idx = np.searchsorted(r, x, side="right") - 1
        edge = idx >= r.size - 1
    else:
        idx = np.searchsorted(r, x, side="left") - 1
        edge = idx < 0
    return np.where(edge, _at(curve, x), _segment_values(curve, x, idx))


def _candidates(f_curve, e_curve, pts):
    """Arrays of (F, E) at grid points, at one-sided limits inside each gap, and at crossings.

    Between consecutive points both curves are linear, so extrema of F+E and
    of min(F, E) sit at the ends of a gap (as limits) or at the crossing.
    """
    a, b = pts[:-1], pts[1:]
    fa, fb = _limit(f_curve, a, +1), _limit(f_curve, b, -1)
    ea, eb = _limit(e_curve, a, +1), _limit(e_curve, b, -1)
    fs = [_at(f_curve, pts), fa, fb]
    es = [_at(e_curve, pts), ea, eb]
    with np.errstate(invalid="ignore", divide="ignore"):
        da, db = fa - ea, fb - eb
        cross = np.isfinite(da) & np.isfinite(db) & (da * db < 0)
        t = np.where(cross, da / np.where(cross, da - db, 1.0), 0.0)
        fs.append((fa + t * (fb - fa))[cross])
        es.append((ea + t * (eb - ea))[cross])
    return np.concatenate(fs), np.concatenate(es)


def joint_exponent(f_curve, e_curve, grid):
    """inf_R [F(R) + E(R)] over the span of ``grid``."""
    pts = _prepare(f_curve, e_curve, grid)
    f, e = _candidates(f_curve, e_curve, pts)
    return float(np.min(f + e))


def separation_exponent(f_curve, e_curve, grid):
    """sup_R min{F(R), E(R)} over the span of ``grid``."""
    pts = _prepare(f_curve, e_curve, grid)
    f, e = _candidates(f_curve, e_curve, pts)
    return float(np.max(np.minimum(f, e)))


class EqualityReport(NamedTuple):
    joint: float
    separation: float
    reliability: float
    gap: float
    equal: bool


def uniform_source_equality(knee, channel, grid=None, tol=1e-6):
    """Step source (F = 0 up to the knee, infinite after) over the AWGN channel.

    Both exponents should collapse to E(knee).
    """
    c = channel.capacity if hasattr(channel, "capacity") else float(channel)
    if not 0 < knee < c:
        raise DomainError("knee rate must lie in (0, C)")
    r_max = 2.0 * c
    grid = rate_grid(0.0, r_max, 10001, knots=(knee, c / 4, c)) if grid is None else grid
    f_curve = ExponentCurve.step(knee, r_max)
    e_curve = ExponentCurve.awgn(c, rate_grid(0.0, r_max, len(grid), knots=(knee, c / 4, c)))
    joint = joint_exponent(f_curve, e_curve, grid)
    sep = separation_exponent(f_curve, e_curve, grid)
    target = awgn_reliability(c, knee)
    gap = abs(joint - sep)
    return EqualityReport(joint, sep, target, gap,
                          gap <= tol and abs(joint - target) <= tol and abs(sep - target) <= tol)
