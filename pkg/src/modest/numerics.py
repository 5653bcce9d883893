"""Special functions, quadrature, 1-D maximization and counter-based random streams.

Everything else in the package builds on these few primitives. The Gaussian
tail is evaluated through the complementary error function, with a separate
log-domain path so that quantities such as ``(M - 1) * Q(x)`` stay finite for
``M`` up to ``e**300``.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy import integrate, special

from .errors import DomainError, EvaluationError, QuadratureError

_TWO_POW_M53 = 2.0 ** -53
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def q_tail(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x).

    Accepts scalars or arrays; scalar input gives a Python float.
    """
    out = np.clip(0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0)), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def log_q_tail(x):
    """Natural log of Q(x), finite far into the upper tail (x of order 1e150)."""
    out = special.log_ndtr(-np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def log_neg_log_cdf(x):
    """log(-ln Phi(x)), the building block of ``(M-1) * ln Phi(x)`` for huge M.

    For x > 0, -ln Phi(x) = -log1p(-Q(x)) = Q(x) * (1 + Q/2 + ...), so the log is
    log Q(x) plus a log1p correction; this keeps full relative accuracy after
    Q itself underflows.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    lq = special.log_ndtr(-x[pos])
    q = np.exp(lq)
    safe_q = np.where(q > 0, q, 1.0)
    ratio = np.where(q > 1e-300, -np.log1p(-q) / safe_q, 1.0)
    out[pos] = lq + np.log(ratio)
    with np.errstate(divide="ignore"):
        out[~pos] = np.log(-special.log_ndtr(x[~pos]))
    return float(out) if out.ndim == 0 else out


def std_normal_pdf(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate_1d`.

    ``depth`` caps the number of adaptive subintervals.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    depth: int = 60

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.depth < 1:
            raise DomainError("quadrature depth must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def integrate_1d(f, a, b, spec=DEFAULT_QUADRATURE, points=None):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Infinite endpoints are mapped onto a finite interval by QUADPACK's
    ``t = a + (1 - s)/s`` transformation. ``points`` lists interior
    breakpoints (finite intervals only). Raises :class:`QuadratureError`,
    carrying the partial value, when the subdivision budget runs out before
    the tolerance ``max(abs_tol, rel_tol * |value|)`` is met.
    """
    if not a < b:
        raise DomainError(f"integration requires a < b, got [{a}, {b}]")
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.depth, full_output=1)
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inner = [p for p in points if a < p < b]
        if inner:
            kwargs["points"] = inner
    res = integrate.quad(f, a, b, **kwargs)
    value, abserr = res[0], res[1]
    if not math.isfinite(value):
        raise QuadratureError("integrand produced a non-finite value", value, abserr)
    if len(res) > 3 and abserr > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError(f"quadrature failure: {res[3].splitlines()[0]}", value, abserr)
    return value


def _checked(g, x):
    y = g(x)
    if y != y:
        raise EvaluationError(f"objective returned NaN at {x!r}")
    return y


def maximize_concave_1d(g, lo, hi, tol=1e-10):
    """Golden-section search for the maximum of a unimodal ``g`` on ``[lo, hi]``.

    Non-unimodal input is not detected; the result is then some local
    maximum. Both endpoints are compared against the interior optimum, so a
    monotone objective returns the boundary exactly.
    Returns ``(argmax, max)``.
    """
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = _checked(g, c), _checked(g, d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = _checked(g, c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = _checked(g, d)
    x = 0.5 * (a + b)
    best = (x, _checked(g, x))
    for edge in (float(lo), float(hi)):
        ge = _checked(g, edge)
        if ge >= best[1]:
            best = (edge, ge)
    return best


@dataclass(frozen=True)
class RandomStream:
    """Descriptor of a reproducible random sequence.

    ``(seed, stream_id)`` is the Philox key, so the sequence is fully fixed by
    the pair and distinct ids give independent streams. Draw ``j`` of a stream
    can be read without generating draws ``0..j-1``.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for v in (self.seed, self.stream_id):
            if not 0 <= v < 2 ** 64:
                raise DomainError("seed and stream id must fit in 64 unsigned bits")


def stream_raw(stream, n, start=0):
    """Raw 64-bit words ``start .. start+n-1`` of ``stream``."""
    if n < 0 or start < 0:
        raise DomainError("n and start must be non-negative")
    bitgen = Philox(key=[stream.seed, stream.stream_id])
    # Philox emits four words per counter step.
    block, skip = divmod(int(start), 4)
    if block:
        bitgen.advance(block)
    raw = bitgen.random_raw(skip + int(n))
    return np.asarray(raw[skip:], dtype=np.uint64)


def raw_to_uniform(raw):
    """Map 64-bit words to doubles in [0, 1) using the top 53 bits."""
    return (raw >> np.uint64(11)).astype(float) * _TWO_POW_M53


def raw_to_open_uniform(raw):
    """Map 64-bit words to doubles in (0, 1); safe for log and inverse CDF."""
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * _TWO_POW_M53


def raw_to_normal(raw):
    """Standard normal variates by inverse CDF, one word per variate."""
    return special.ndtri(raw_to_open_uniform(raw))


def stream_uniform(stream, n, start=0):
    """``n`` uniforms in [0, 1) from ``stream`` beginning at draw ``start``."""
    return raw_to_uniform(stream_raw(stream, n, start))


def stream_normal(stream, n, start=0):
    """``n`` standard normals from ``stream``; value ``j`` depends only on draw ``start + j``."""
    return raw_to_normal(stream_raw(stream, n, start))
