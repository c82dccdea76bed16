"""Photon-pair stream Monte Carlo and coincidence analysis.

Pair emissions form a Poisson process; each pair sends its idler photon to
one detector channel and its signal photon through a beamsplitter to one of
two others.  Channels apply a survival probability, Gaussian timing jitter,
and uncorrelated dark/noise events.  Analysis mirrors a hardware
time-tagger: a start-stop histogram of arrival-time differences, an offset
Gaussian fitted around the coincidence peak, and a fixed coincidence window
(default 320 ps) from which coincidences, accidentals, their ratio (CAR),
and the pair rate are extracted.  The heralded second-order correlation is

    g2(0) = N_{I,S1,S2} N_I / (N_{I,S1} N_{I,S2})

with two- and three-fold counts taken in the same window after delay
compensation.

The coincidence-peak width combines per-channel detector and tagger jitter
with a cavity correlation time of order 1/(2 pi linewidth); the pair
delta-t is drawn once per pair and per-channel jitter added independently,
so the peak sigma is sqrt(sigma_i^2 + sigma_s^2 + sigma_pair^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

DEFAULT_COINCIDENCE_WINDOW = 320e-12
DEFAULT_FIT_HALFSPAN = 0.8e-9
TIME_QUANTUM = 1e-12


@dataclass(frozen=True)
class PhotonChannelModel:
    """Detection channel: efficiency, timing jitter, uncorrelated counts."""

    efficiency: float
    jitter_sigma: float = 0.0
    dark_rate: float = 0.0
    noise_singles_rate: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.jitter_sigma < 0 or self.dark_rate < 0 or self.noise_singles_rate < 0:
            raise ValueError("jitter and rates must be >= 0")

    @property
    def background_rate(self) -> float:
        return self.dark_rate + self.noise_singles_rate


@dataclass
class TimestampSet:
    """Sorted per-channel detection times in seconds."""

    idler: np.ndarray
    signal_1: np.ndarray
    signal_2: np.ndarray
    duration: float

    def merged_signals(self) -> np.ndarray:
        out = np.concatenate([self.signal_1, self.signal_2])
        out.sort()
        return out


def simulate_timestamps(
    pair_rate: float,
    duration: float,
    idler: PhotonChannelModel,
    signal_1: PhotonChannelModel,
    signal_2: PhotonChannelModel,
    splitter_ratio: float = 0.5,
    pair_dt_sigma: float = 0.0,
    seed: int | None = None,
    emission_times: np.ndarray | None = None,
    max_events: int = 50_000_000,
) -> TimestampSet:
    """Generate per-channel timestamp lists for a pair source.

    Pair emissions are Poisson at pair_rate unless explicit emission_times
    are given (useful for forcing degenerate cases).  Reproducible for a
    fixed seed.  Raises if the expected event count exceeds max_events.
    """
    if pair_rate < 0 or duration <= 0:
        raise ValueError("pair_rate must be >= 0 and duration > 0")
    if not 0.0 <= splitter_ratio <= 1.0:
        raise ValueError(f"splitter_ratio must be in [0, 1], got {splitter_ratio}")
    rng = np.random.default_rng(seed)
    background = sum(m.background_rate for m in (idler, signal_1, signal_2))
    expected = 2.0 * pair_rate * duration + background * duration
    if emission_times is not None:
        expected += 2.0 * len(emission_times)
    if expected > max_events:
        raise ValueError(f"expected {expected:.3g} events exceeds cap {max_events:.3g}")

    if emission_times is None:
        n_pairs = rng.poisson(pair_rate * duration)
        times = np.sort(rng.uniform(0.0, duration, n_pairs))
    else:
        times = np.sort(np.asarray(emission_times, dtype=float))
        n_pairs = times.size

    pair_dt = rng.normal(0.0, pair_dt_sigma, n_pairs) if pair_dt_sigma > 0 else np.zeros(n_pairs)
    to_s1 = rng.random(n_pairs) < splitter_ratio

    def detect(emit: np.ndarray, model: PhotonChannelModel) -> np.ndarray:
        kept = emit[rng.random(emit.size) < model.efficiency]
        if model.jitter_sigma > 0:
            kept = kept + rng.normal(0.0, model.jitter_sigma, kept.size)
        n_bg = rng.poisson(model.background_rate * duration)
        out = np.concatenate([kept, rng.uniform(0.0, duration, n_bg)])
        out.sort()
        return out

    idler_times = detect(times, idler)
    signal_emit = times + pair_dt
    s1_times = detect(signal_emit[to_s1], signal_1)
    s2_times = detect(signal_emit[~to_s1], signal_2)
    return TimestampSet(idler_times, s1_times, s2_times, duration)


@dataclass
class CoincidenceHistogram:
    """Start-stop time-difference counts on a uniform grid."""

    bin_width: float
    t_start: float
    counts: np.ndarray
    integration_time: float = float("nan")

    def __post_init__(self) -> None:
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be > 0, got {self.bin_width}")
        self.counts = np.asarray(self.counts)
        if np.any(self.counts < 0):
            raise ValueError("counts must be >= 0")

    def bin_centers(self) -> np.ndarray:
        return self.t_start + (np.arange(self.counts.size) + 0.5) * self.bin_width

    def rebin(self, factor: int) -> "CoincidenceHistogram":
        if factor < 1 or self.counts.size % factor:
            raise ValueError(f"cannot rebin {self.counts.size} bins by {factor}")
        merged = self.counts.reshape(-1, factor).sum(axis=1)
        return CoincidenceHistogram(self.bin_width * factor, self.t_start, merged, self.integration_time)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def start_stop_histogram(
    start: np.ndarray,
    stop: np.ndarray,
    span: float,
    bin_width: float = TIME_QUANTUM,
    integration_time: float = float("nan"),
) -> CoincidenceHistogram:
    """Histogram of (nearest subsequent stop - start) over [0, span).

    Each start contributes at most one count.  Timestamps must be sorted.
    """
    if span <= 0 or bin_width <= 0:
        raise ValueError("span and bin_width must be > 0")
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    n_bins = int(round(span / bin_width))
    if stop.size == 0 or start.size == 0:
        return CoincidenceHistogram(bin_width, 0.0, np.zeros(n_bins, dtype=np.int64), integration_time)
    idx = np.searchsorted(stop, start, side="left")
    valid = idx < stop.size
    dt = np.full(start.size, np.inf)
    dt[valid] = stop[idx[valid]] - start[valid]
    dt = dt[(dt >= 0.0) & (dt < span)]
    bins = np.floor(dt / bin_width).astype(np.int64)
    counts = np.bincount(bins, minlength=n_bins)[:n_bins]
    return CoincidenceHistogram(bin_width, 0.0, counts, integration_time)


@dataclass(frozen=True)
class PeakFit:
    """Offset-Gaussian fit of a coincidence peak: A exp(-(t-mu)^2/2s^2) + c."""

    amplitude: float
    center: float
    sigma: float
    offset: float
    converged: bool

    @classmethod
    def failed(cls) -> "PeakFit":
        return cls(float("nan"), float("nan"), float("nan"), float("nan"), False)


def _gaussian_offset(t, a, mu, sigma, c):
    return a * np.exp(-((t - mu) ** 2) / (2.0 * sigma**2)) + c


def fit_peak(h: CoincidenceHistogram, fit_halfspan: float = DEFAULT_FIT_HALFSPAN) -> PeakFit:
    """Fit an offset Gaussian within +-fit_halfspan of the tallest bin.

    Low-count or structureless histograms return a failed fit (converged
    False) rather than raising; such points are meant to be dropped.
    """
    if h.total == 0:
        return PeakFit.failed()
    centers = h.bin_centers()
    y = h.counts.astype(float)
    peak_t = centers[int(np.argmax(y))]
    mask = np.abs(centers - peak_t) <= fit_halfspan
    # fit in units of the bin width so the optimizer sees O(1) parameters
    x = (centers[mask] - peak_t) / h.bin_width
    yw = y[mask]
    if x.size < 8:
        return PeakFit.failed()
    c0 = float(np.median(yw))
    a0 = max(float(yw.max() - c0), 1.0)
    above = x[yw > c0 + 0.5 * a0]
    s0 = max((above.max() - above.min()) / 2.355, 1.0) if above.size >= 2 else 4.0
    halfspan_bins = fit_halfspan / h.bin_width
    try:
        popt, _ = curve_fit(
            _gaussian_offset,
            x,
            yw,
            p0=(a0, 0.0, s0, c0),
            bounds=([0.0, x.min(), 0.5, 0.0], [np.inf, x.max(), halfspan_bins, np.inf]),
            maxfev=10000,
        )
    except (RuntimeError, ValueError):
        return PeakFit.failed()
    a, mu_bins, sigma_bins, c = (float(v) for v in popt)
    # reject statistically insignificant or sub-bin "peaks"
    if a < 5.0 * math.sqrt(max(c, 1.0)) or sigma_bins <= 1.0:
        return PeakFit.failed()
    return PeakFit(a, peak_t + mu_bins * h.bin_width, sigma_bins * h.bin_width, c, True)


@dataclass(frozen=True)
class CarResult:
    car: float
    pair_rate: float
    coincidences: float
    accidentals: float
    raw_counts: int
    window: float


def car_and_pgr(
    h: CoincidenceHistogram,
    fit: PeakFit,
    window: float = DEFAULT_COINCIDENCE_WINDOW,
) -> CarResult:
    """Coincidences-to-accidentals ratio and detected pair rate.

    Counts in [mu - window/2, mu + window/2] minus the fitted flat offset
    give the coincidences; the offset contribution is the accidentals.
    Zero accidentals yields CAR = inf with the raw counts attached.
    """
    if not fit.converged:
        raise ValueError("cannot extract CAR from a failed fit")
    centers = h.bin_centers()
    mask = np.abs(centers - fit.center) <= window / 2.0
    n_bins = int(mask.sum())
    raw = int(h.counts[mask].sum())
    accidentals = fit.offset * n_bins
    coincidences = raw - accidentals
    car = coincidences / accidentals if accidentals > 0 else float("inf")
    pair_rate = coincidences / h.integration_time if h.integration_time > 0 else float("nan")
    return CarResult(car, pair_rate, coincidences, accidentals, raw, window)


def side_window_accidentals(
    h: CoincidenceHistogram,
    fit: PeakFit,
    window: float = DEFAULT_COINCIDENCE_WINDOW,
    exclusion_sigmas: float = 5.0,
) -> float:
    """Accidentals per window estimated from bins far from the peak.

    Cross-check for the fitted-offset accidentals estimate.
    """
    centers = h.bin_centers()
    far = np.abs(centers - fit.center) > exclusion_sigmas * fit.sigma
    if not far.any():
        raise ValueError("no side bins outside the exclusion region")
    per_bin = float(h.counts[far].mean())
    return per_bin * (window / h.bin_width)


def correlation_delay(
    a: np.ndarray,
    b: np.ndarray,
    search_span: float = 20e-9,
    bin_width: float = 10e-12,
) -> float:
    """Relative delay of stream b vs a from the correlation histogram peak."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty timestamp stream")
    n_bins = 2 * int(round(search_span / bin_width))
    counts = np.zeros(n_bins, dtype=np.int64)
    lo = np.searchsorted(b, a - search_span, side="left")
    hi = np.searchsorted(b, a + search_span, side="left")
    for i in range(a.size):
        if hi[i] > lo[i]:
            dt = b[lo[i] : hi[i]] - a[i]
            k = np.floor((dt + search_span) / bin_width).astype(np.int64)
            np.add.at(counts, np.clip(k, 0, n_bins - 1), 1)
    return (int(np.argmax(counts)) + 0.5) * bin_width - search_span


def _has_partner(starts: np.ndarray, others: np.ndarray, delay: float, window: float) -> np.ndarray:
    lo = np.searchsorted(others, starts + delay - window / 2.0, side="left")
    hi = np.searchsorted(others, starts + delay + window / 2.0, side="right")
    return hi > lo


def g2_zero(
    idler: np.ndarray,
    s1: np.ndarray,
    s2: np.ndarray,
    window: float = DEFAULT_COINCIDENCE_WINDOW,
    delays: tuple[float, float] | None = None,
) -> float:
    """Heralded second-order correlation at zero delay.

    Counts idler singles, idler-signal twofolds, and threefolds in the same
    coincidence window after compensating per-channel delays (estimated
    from the pairwise correlation peaks unless given).  Returns 0 when no
    threefolds occur and NaN when undefined (no idler counts or no
    twofolds on a channel).
    """
    idler = np.asarray(idler, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    n_i = idler.size
    if n_i == 0:
        return float("nan")
    if s1.size == 0 or s2.size == 0:
        return 0.0
    if delays is None:
        delays = (correlation_delay(idler, s1), correlation_delay(idler, s2))
    d1, d2 = delays
    with1 = _has_partner(idler, s1, d1, window)
    with2 = _has_partner(idler, s2, d2, window)
    n_is1 = int(with1.sum())
    n_is2 = int(with2.sum())
    n_iss = int((with1 & with2).sum())
    if n_iss == 0:
        return 0.0
    if n_is1 == 0 or n_is2 == 0:
        return float("nan")
    return n_iss * n_i / (n_is1 * n_is2)


@dataclass(frozen=True)
class LossBudget:
    """Optical path accounting between the source and the detectors.

    pair_transmission is the probability that both photons of a pair reach
    a coincidence on one signal channel; detected rates summed over
    n_signal_channels scale accordingly.
    """

    path_db: float = 0.0
    eta_idler: float = 1.0
    eta_signal_effective: float = 1.0
    n_signal_channels: int = 2

    @property
    def pair_transmission(self) -> float:
        return self.eta_idler * self.eta_signal_effective * 10.0 ** (-self.path_db / 10.0)


def de_embed(detected_rate: float, budget: LossBudget) -> float:
    """On-chip pair rate inferred from a detected coincidence rate."""
    if detected_rate < 0:
        raise ValueError(f"detected_rate must be >= 0, got {detected_rate}")
    return detected_rate / (budget.n_signal_channels * budget.pair_transmission)
