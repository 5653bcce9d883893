"""Signal-space Monte Carlo of the quantize-and-signal modulation-estimation scheme.

The parameter U is quantized to the nearest point of a uniform grid, the
cell index selects one of M orthogonal signals of energy C T (in units of
N0), and the receiver takes the ML index and reports its grid point.
Orthogonal signalling reduces to M unit-variance statistics with the
transmitted one shifted by mu = sqrt(2 C T), so nothing is simulated at the
waveform level.

Reproducibility. All trials read one Philox stream keyed by
``(seed, stream_id)``. Trial ``t`` owns the fixed block of words
``[t*K, (t+1)*K)``, where ``K`` depends only on the configuration, so every
outcome is a function of ``(seed, t)`` alone and the split of trials across
workers or chunks cannot change any result.

Large M. For up to ``full_stats_limit`` signals every statistic is drawn.
Beyond that the competitors enter only through their maximum, which is drawn
exactly from its law Phi(w)^(M-1); on error the decoded index is uniform
over the other cells. Both routes have the same outcome distribution.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import special

from .detection import SignalSetSpec, exact_mary_error
from .errors import DomainError, GridTooLargeError
from .exponents import ChannelSpec, FadingSpec
from .numerics import (
    RandomStream,
    raw_to_normal,
    raw_to_open_uniform,
    raw_to_uniform,
    stream_raw,
)

DEFAULT_M_CAP = 2 ** 62
DEFAULT_FULL_STATS_LIMIT = 4096
_CHUNK_WORDS = 2 ** 21

SCHEME_STREAM = 0
HYPOTHESIS_STREAM = 1


@dataclass(frozen=True)
class GridCode:
    """M cells of width 1/M on [-1/2, 1/2) with points at the cell centres.

    Indices are 0-based: point k is -1/2 + (2k+1)/(2M). ``threshold`` is the
    excess-error threshold, half the spacing unless a fixed threshold was
    requested.
    """

    m: int
    duration: Optional[float] = None
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.m < 2:
            raise DomainError("grid needs at least two cells")
        if self.threshold is None:
            object.__setattr__(self, "threshold", 0.5 / self.m)

    @property
    def spacing(self):
        return 1.0 / self.m

    @property
    def effective_rate(self):
        """ln(2M)/T, the rate whose threshold e^{-RT} equals half the spacing."""
        if self.duration is None:
            return 0.0
        return math.log(2 * self.m) / self.duration

    @property
    def threshold_cells(self):
        """Threshold in units of half-cells, snapped to 1 when it equals half the spacing."""
        v = 2.0 * self.m * self.threshold
        return 1.0 if abs(v - 1.0) < 1e-12 else v

    def point(self, index):
        # integer numerator, so the only rounding is the final division
        return (2 * np.asarray(index, dtype=float) + 1.0 - self.m) / (2.0 * self.m)

    @property
    def points(self):
        return self.point(np.arange(self.m))


def build_grid(rate, duration, m_cap=DEFAULT_M_CAP):
    """Grid with M = max(2, round(e^{RT}/2)) cells."""
    if not (rate > 0 and duration > 0):
        raise DomainError("rate and duration must be positive")
    log_half = rate * duration - math.log(2.0)
    if log_half > math.log(m_cap) + 1e-12:
        raise GridTooLargeError(
            f"grid too large (e^(RT)/2 = e^{log_half:.3f} > cap {m_cap}); "
            "reduce R*T or use exact_mary_error")
    m = max(2, int(round(math.exp(log_half))))
    if m > m_cap:
        raise GridTooLargeError(f"grid too large (M={m} > cap {m_cap}); reduce R*T or use exact_mary_error")
    return GridCode(m, duration)


def grid_for_threshold(delta):
    """Fixed-threshold grid: M = ceil(1/delta) cells, excess threshold delta/2."""
    if not 0 < delta < 1:
        raise DomainError(f"fixed threshold must lie in (0, 1), got {delta}")
    inv = 1.0 / delta
    r = round(inv)
    m = r if abs(inv - r) < 1e-9 * inv else math.ceil(inv)
    return GridCode(max(2, m), threshold=delta / 2)


def quantize(u, grid):
    """Index of the grid point nearest to ``u``; cell-boundary ties go to the upper cell."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < -0.5) or np.any(u_arr >= 0.5):
        raise DomainError("parameter must lie in [-1/2, 1/2)")
    idx = np.minimum(np.floor((u_arr + 0.5) * grid.m), grid.m - 1).astype(np.int64)
    return int(idx) if idx.ndim == 0 else idx


class TailEstimate(NamedTuple):
    k: int
    n: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    level: float
    event: str


def wilson_interval(k, n, level=0.95):
    """Wilson score interval for a binomial proportion, clipped to [0, 1]."""
    if n <= 0:
        raise DomainError("need at least one trial")
    z = float(special.ndtri(0.5 + level / 2.0))
    p = k / n
    z2n = z * z / n
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n)
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def tail_estimate(k, n, level=0.95, event=""):
    lo, hi = wilson_interval(k, n, level)
    return TailEstimate(int(k), int(n), k / n, lo, hi, level, event)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``rates`` holds one rate per parameter dimension (nats/s). With
    ``fixed_delta`` set the rates are ignored (only their count is used, at
    least one dimension) and every dimension gets ``ceil(1/delta)`` cells.
    ``simplex`` boosts the energy by M/(M-1), the simplex-set equivalent.
    """

    channel: ChannelSpec
    duration: float
    rates: tuple = ()
    trials: int = 10000
    seed: int = 0
    fading: Optional[FadingSpec] = None
    fixed_delta: Optional[float] = None
    simplex: bool = False
    m_cap: int = DEFAULT_M_CAP
    full_stats_limit: int = DEFAULT_FULL_STATS_LIMIT
    ci_level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if not self.duration > 0:
            raise DomainError("duration must be positive")
        if self.trials < 1:
            raise DomainError("need at least one trial")
        if self.fixed_delta is None:
            if not self.rates:
                raise DomainError("at least one rate is required unless a fixed threshold is given")
            if any(r <= 0 for r in self.rates):
                raise DomainError("rates must be positive")
        if not 0 < self.ci_level < 1:
            raise DomainError("confidence level must lie in (0, 1)")

    @property
    def dims(self):
        return max(1, len(self.rates))

    def grids(self):
        if self.fixed_delta is not None:
            return [grid_for_threshold(self.fixed_delta)] * self.dims
        return [build_grid(r, self.duration, self.m_cap) for r in self.rates]


class _Plan:
    """Everything about an experiment that is fixed across trials."""

    def __init__(self, cfg, stream_id=SCHEME_STREAM, hypotheses=False):
        self.cfg = cfg
        self.grids = cfg.grids()
        self.dims_m = tuple(g.m for g in self.grids)
        m_total = math.prod(self.dims_m)
        if m_total > cfg.m_cap:
            raise GridTooLargeError(
                f"grid too large (M={m_total} > cap {cfg.m_cap}); reduce R*T or use exact_mary_error")
        self.m = m_total
        self.full = m_total <= cfg.full_stats_limit
        self.d = len(self.grids)
        self.fade_col = self.d
        self.stat_col = self.d + 1
        width = self.stat_col + (m_total if self.full else 3)
        self.words = -(-width // 4) * 4
        energy = cfg.channel.capacity * cfg.duration
        if cfg.simplex:
            energy *= m_total / (m_total - 1)
        self.mu = math.sqrt(2.0 * energy)
        self.stream = RandomStream(cfg.seed, stream_id)
        self.hypotheses = hypotheses


@dataclass
class TrialBatch:
    """Per-trial records for trials ``start .. start + n - 1``.

    ``u`` and ``u_hat`` have one column per dimension; indices are flat
    (row-major over the per-dimension grids).
    """

    start: int
    u: np.ndarray
    true_index: np.ndarray
    decoded: np.ndarray
    u_hat: np.ndarray
    excess: np.ndarray
    gain: np.ndarray
    mu: float
    stats: Optional[np.ndarray] = None

    @property
    def decode_error(self):
        return self.decoded != self.true_index


def _decode_full(raw_stats, true_index, mu, keep_stats):
    z = raw_to_normal(raw_stats)
    rows = np.arange(z.shape[0])
    z[rows, true_index] += mu
    decoded = np.argmax(z, axis=1).astype(np.int64)
    return decoded, (z if keep_stats else None)


def _decode_order_statistic(raw3, true_index, m, mu):
    z_true = raw_to_normal(raw3[:, 0])
    v_max = raw_to_open_uniform(raw3[:, 1])
    v_idx = raw_to_uniform(raw3[:, 2])
    # max of M-1 iid normals: Phi(W) = V^(1/(M-1)), so Q(W) = -expm1(ln V / (M-1))
    q = -np.expm1(np.log(v_max) / float(m - 1))
    w_max = -special.ndtri(q)
    error = w_max > mu + z_true
    offset = 1 + np.minimum(np.floor(v_idx * float(m - 1)), float(m - 2)).astype(np.int64)
    other = (true_index + offset) % np.int64(m)
    return np.where(error, other, true_index)


def _simulate_block(plan, start, stop, keep_stats=False):
    n = stop - start
    k = plan.words
    raw = stream_raw(plan.stream, n * k, start * k).reshape(n, k)

    if plan.hypotheses:
        # detector harness: U sits exactly on a cell centre chosen uniformly
        cols = []
        for j, g in enumerate(plan.grids):
            idx = np.minimum(np.floor(raw_to_uniform(raw[:, j]) * g.m), g.m - 1).astype(np.int64)
            cols.append(g.point(idx))
        u = np.column_stack(cols)
    else:
        u = raw_to_uniform(raw[:, :plan.d]) - 0.5

    scaled = np.empty_like(u)
    cell = np.empty(u.shape, dtype=np.int64)
    for j, g in enumerate(plan.grids):
        scaled[:, j] = (u[:, j] + 0.5) * g.m
        cell[:, j] = np.minimum(np.floor(scaled[:, j]), g.m - 1).astype(np.int64)
    true_index = np.ravel_multi_index(tuple(cell.T), plan.dims_m) if plan.d > 1 else cell[:, 0]

    fading = plan.cfg.fading
    if fading is not None:
        v = raw_to_open_uniform(raw[:, plan.fade_col])
        gain = fading.sigma * np.sqrt(-2.0 * np.log(v))
    else:
        gain = np.ones(n)
    mu = gain * plan.mu

    stats = None
    if plan.full:
        raw_stats = raw[:, plan.stat_col:plan.stat_col + plan.m]
        decoded, stats = _decode_full(raw_stats, true_index, mu, keep_stats)
    else:
        decoded = _decode_order_statistic(raw[:, plan.stat_col:plan.stat_col + 3], true_index, plan.m, mu)

    dec_cells = np.column_stack(np.unravel_index(decoded, plan.dims_m)) if plan.d > 1 else decoded[:, None]
    u_hat = np.empty_like(u)
    excess = np.zeros(n, dtype=bool)
    for j, g in enumerate(plan.grids):
        u_hat[:, j] = g.point(dec_cells[:, j])
        # |u_hat - u| > threshold, measured in half-cells so it is exact for a correct decode
        excess |= np.abs(2.0 * dec_cells[:, j] + 1.0 - 2.0 * scaled[:, j]) > g.threshold_cells
    return TrialBatch(start, u, true_index, decoded, u_hat, excess, gain, plan.mu, stats)


def _blocks(plan, start, stop):
    step = max(1, _CHUNK_WORDS // plan.words)
    for a in range(start, stop, step):
        yield a, min(stop, a + step)


def _count_range(plan, start, stop):
    return sum(int(_simulate_block(plan, a, b).excess.sum()) for a, b in _blocks(plan, start, stop))


def _split(n, workers):
    workers = max(1, min(int(workers), n))
    edges = [n * i // workers for i in range(workers + 1)]
    return list(zip(edges[:-1], edges[1:]))


def _run(plan, workers, event):
    cfg = plan.cfg
    ranges = _split(cfg.trials, workers)
    if len(ranges) == 1:
        k = _count_range(plan, 0, cfg.trials)
    else:
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            k = sum(pool.map(lambda r: _count_range(plan, *r), ranges))
    return tail_estimate(k, cfg.trials, cfg.ci_level, event)


def simulate_trials(cfg, start=0, stop=None, keep_stats=False, hypotheses=False):
    """Per-trial records for trials ``[start, stop)`` of ``cfg``.

    ``keep_stats`` keeps the M decision statistics (full-statistics mode only).
    """
    stream_id = HYPOTHESIS_STREAM if hypotheses else SCHEME_STREAM
    plan = _Plan(cfg, stream_id, hypotheses)
    stop = cfg.trials if stop is None else stop
    if keep_stats and not plan.full:
        raise DomainError("decision statistics are only kept when every statistic is drawn")
    parts = [_simulate_block(plan, a, b, keep_stats) for a, b in _blocks(plan, start, stop)]
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return TrialBatch(
        start, cat("u"), cat("true_index"), cat("decoded"), cat("u_hat"), cat("excess"),
        cat("gain"), plan.mu, cat("stats") if keep_stats else None)


def _event_label(cfg, plan):
    if cfg.fixed_delta is not None:
        return f"|U_hat-U| > {cfg.fixed_delta / 2!r}"
    if plan.d == 1:
        return f"|U_hat-U| > exp(-R_eff*T), R_eff={plan.grids[0].effective_rate!r}"
    return "union_i |U_hat_i-U_i| > exp(-R_eff_i*T)"


def run_excess_error(cfg, workers=1):
    """Excess-error probability of the scalar scheme."""
    if cfg.dims != 1:
        raise DomainError("run_excess_error takes a scalar configuration; use run_multidim")
    plan = _Plan(cfg)
    return _run(plan, workers, _event_label(cfg, plan))


def run_multidim(cfg, workers=1):
    """Union excess-error probability over a Cartesian product grid."""
    plan = _Plan(cfg)
    return _run(plan, workers, _event_label(cfg, plan))


def run_fading(cfg, workers=1):
    """Excess-error probability under Rayleigh fading; the decoder ignores the gain."""
    if cfg.fading is None:
        raise DomainError("run_fading needs a FadingSpec")
    plan = _Plan(cfg)
    return _run(plan, workers, _event_label(cfg, plan))


def transmit_decode(index, m, mu, stream, full_stats_limit=DEFAULT_FULL_STATS_LIMIT):
    """One use of the M-ary orthogonal channel; returns the ML index.

    Draws M standard normal statistics from the start of ``stream``, adds
    ``mu`` to coordinate ``index`` and returns the argmax (ties to the lowest
    index). Above ``full_stats_limit`` the exact maximum-of-competitors
    sampler is used instead.
    """
    if mu < 0:
        raise DomainError("mean must be non-negative")
    if not 0 <= index < m:
        raise DomainError("index out of range")
    true_index = np.array([index], dtype=np.int64)
    if m <= full_stats_limit:
        decoded, _ = _decode_full(stream_raw(stream, m)[None, :], true_index, mu, False)
    else:
        decoded = _decode_order_statistic(stream_raw(stream, 3)[None, :], true_index, m, mu)
    return int(decoded[0])


# --- estimator-to-detector harness -------------------------------------------------


@dataclass
class EstimatorSamples:
    """Per-trial ``(U, statistics, U_hat)`` triples from the scalar scheme."""

    u: np.ndarray
    u_hat: np.ndarray
    stats: Optional[np.ndarray] = None


def run_hypothesis_trials(cfg, keep_stats=False):
    """Scheme trials with U placed on a uniformly chosen cell centre.

    The cell centres, spaced by 1/M, are the M hypotheses of the
    estimator-to-detector reduction.
    """
    if cfg.dims != 1:
        raise DomainError("the detector harness is scalar")
    b = simulate_trials(cfg, keep_stats=keep_stats, hypotheses=True)
    return EstimatorSamples(b.u[:, 0], b.u_hat[:, 0], b.stats)


def _hypothesis_index(samples, delta, m, origin):
    if not (delta > 0 and m >= 2) or (m - 1) * delta + origin >= 0.5 + 1e-12 or origin < -0.5:
        raise DomainError("hypothesis grid does not fit in [-1/2, 1/2)")
    pos = (np.asarray(samples.u, dtype=float) - origin) / delta
    idx = np.rint(pos)
    if np.any(np.abs(pos - idx) > 1e-6) or np.any(idx < 0) or np.any(idx > m - 1):
        raise DomainError("samples do not lie on the hypothesis grid (mismatched spacing or count)")
    return idx.astype(np.int64)


def estimator_to_detector(samples, delta, m, origin=None):
    """Error rate of the detector that picks the hypothesis nearest to U_hat.

    Hypotheses are ``origin + i*delta`` for i = 0..M-1 (``origin`` defaults to
    -1/2 + delta/2, the first cell centre).
    """
    origin = -0.5 + delta / 2 if origin is None else origin
    truth = _hypothesis_index(samples, delta, m, origin)
    decision = np.clip(np.rint((np.asarray(samples.u_hat) - origin) / delta), 0, m - 1).astype(np.int64)
    return float(np.mean(decision != truth))


def conditional_excess_rates(samples, delta, m, origin=None):
    """Pr{|U_hat - U| > delta/2 | hypothesis i}, one entry per hypothesis (NaN if unseen)."""
    origin = -0.5 + delta / 2 if origin is None else origin
    truth = _hypothesis_index(samples, delta, m, origin)
    excess = np.abs(np.asarray(samples.u_hat) - np.asarray(samples.u)) > delta / 2 * (1 + 1e-12)
    hits = np.bincount(truth, weights=excess.astype(float), minlength=m)
    seen = np.bincount(truth, minlength=m)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(seen > 0, hits / seen, np.nan)


class DetectionChain(NamedTuple):
    optimal: float
    detector: float
    mean_excess: float
    n: int


def detection_chain(cfg):
    """optimal M-ary error <= detector error <= mean conditional excess rate.

    The optimal error is the exact quadrature value for the scheme's M
    orthogonal signals; the other two come from one simulation run.
    """
    grid = cfg.grids()[0]
    samples = run_hypothesis_trials(cfg)
    detector = estimator_to_detector(samples, grid.spacing, grid.m)
    rates = conditional_excess_rates(samples, grid.spacing, grid.m)
    energy = cfg.channel.capacity * cfg.duration
    optimal = exact_mary_error(SignalSetSpec(grid.m, energy))
    return DetectionChain(optimal, detector, float(np.nanmean(rates)), len(samples.u))


def mse_from_tail(errors):
    """Mean squared error computed directly and through the tail integral.

    The tail form 2 int_0^1 x P(|err| >= x) dx is evaluated exactly for the
    empirical law: between consecutive sorted values the tail is constant,
    so each gap contributes (tail mass) * (e_(k+1)^2 - e_(k)^2).
    Returns ``(direct, tail)``.
    """
    e = np.sort(np.abs(np.asarray(errors, dtype=float)))
    n = e.size
    if n == 0:
        raise DomainError("need at least one error value")
    if e[-1] > 1.0:
        raise DomainError("error magnitudes must lie in [0, 1]")
    direct = math.fsum(e * e) / n
    sq = e * e
    gaps = np.diff(np.concatenate(([0.0], sq)))
    tail_mass = (n - np.arange(n)) / n
    tail = math.fsum(tail_mass * gaps)
    return direct, tail
