"""Cross-correlation histograms, skew correction, peak statistics and fits.

Binning convention, shared by every histogram here: timestamps are first
quantized to an absolute grid of `bin_width` ps anchored at zero
(idx(t) = t // bin_width), and a pair (a, b) lands in the lag bin
idx(b) - idx(a). Bins are half-open, lower edge inclusive. Quantizing
before differencing is what lets the FFT path, the windowed sweep path and
any direct-counting oracle agree bin-for-bin, exactly: all of them count
identical integer lags. The price is a sub-bin blur of the true delay
(one bin at most), irrelevant at the bin widths used for each stage.

The scan over skew candidates treats each candidate independently; all
operations here are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import erf

from .errors import BinBudgetError, FitError, NoSignalError, WindowError

MAX_BINS = 10**8  # cross-correlation point budget


@dataclass(frozen=True)
class CorrelationHistogram:
    bin_width: int   # ps
    delay_lo: int    # ps, lower edge of the first bin (multiple of bin_width)
    counts: np.ndarray
    n_a: int
    n_b: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_bins(self) -> int:
        return int(self.counts.size)

    @property
    def delay_hi(self) -> int:
        return self.delay_lo + self.n_bins * self.bin_width

    def centers(self) -> np.ndarray:
        """Bin centers in ps (float)."""
        return self.delay_lo + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def restrict(self, lo: int, hi: int) -> "CorrelationHistogram":
        """Sub-histogram over bins fully inside [lo, hi)."""
        i0 = max(int(np.ceil((lo - self.delay_lo) / self.bin_width)), 0)
        i1 = min(int((hi - self.delay_lo) // self.bin_width), self.n_bins)
        if i1 <= i0:
            raise WindowError("restriction leaves no bins")
        return CorrelationHistogram(
            bin_width=self.bin_width,
            delay_lo=self.delay_lo + i0 * self.bin_width,
            counts=self.counts[i0:i1],
            n_a=self.n_a,
            n_b=self.n_b,
        )

    def add(self, other: "CorrelationHistogram") -> "CorrelationHistogram":
        if (other.bin_width, other.delay_lo, other.n_bins) != (
            self.bin_width,
            self.delay_lo,
            self.n_bins,
        ):
            raise ValueError("histograms are not on the same grid")
        return CorrelationHistogram(
            bin_width=self.bin_width,
            delay_lo=self.delay_lo,
            counts=self.counts + other.counts,
            n_a=self.n_a + other.n_a,
            n_b=self.n_b + other.n_b,
        )

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("delay_ps,count\n")
            for c, n in zip(self.centers(), self.counts):
                fh.write(f"{c:.1f},{int(n)}\n")


@dataclass(frozen=True)
class PeakStats:
    peak_delay: float       # ps, center of the maximum bin
    peak_height: float      # counts
    background_mean: float  # counts per bin, peak neighborhood excluded
    background_std: float
    significance: float


@dataclass(frozen=True)
class PeakFit:
    center_tau: float    # ps, plateau midpoint
    sigma: float         # ps, quadrature width sqrt(sigma_edge^2 + (plateau/2)^2)
    plateau: float       # ps, flat-top extent
    amplitude: float     # counts, model height at the center
    fit_residual: float  # rms residual / amplitude
    sigma_edge: float    # ps, RMS of the Gaussian edges
    background: float    # counts per bin


def skew_correct(tags: np.ndarray, du_corr: float, t0: int) -> np.ndarray:
    """Remove a linear clock-rate error: t -> t - round(du_corr * (t - t0)).

    Order is preserved for |du_corr| well below 1 (ties can appear, never
    inversions).
    """
    tags = np.asarray(tags, dtype=np.int64)
    if du_corr == 0.0:
        return tags.copy()
    return tags - np.rint(du_corr * (tags - np.int64(t0))).astype(np.int64)


def _grid_range(bin_width: int, span: int, center: int) -> tuple[int, int]:
    """Lag-index range [lo_idx, hi_idx) covering [center - span/2, center + span/2)."""
    if bin_width <= 0 or span <= 0:
        raise WindowError("bin_width and span must be positive")
    half_bins = max(int(np.ceil(span / (2 * bin_width))), 1)
    center_idx = int(np.floor(center / bin_width))
    return center_idx - half_bins, center_idx + half_bins


def _xcorr_fft(ia: np.ndarray, ib: np.ndarray, lo_idx: int, hi_idx: int) -> np.ndarray:
    """Counts of integer lags via FFT convolution of occupancy arrays."""
    from scipy.signal import fftconvolve

    base = min(int(ia.min()), int(ib.min()))
    occ_a = np.bincount(ia - base)
    occ_b = np.bincount(ib - base)
    full = fftconvolve(occ_b.astype(np.float64), occ_a[::-1].astype(np.float64))
    counts_full = np.rint(full).astype(np.int64)
    # lag of full[k] is k - (len(occ_a) - 1)
    lag0 = -(occ_a.size - 1)
    out = np.zeros(hi_idx - lo_idx, dtype=np.int64)
    src_lo = max(lo_idx, lag0)
    src_hi = min(hi_idx, lag0 + counts_full.size)
    if src_hi > src_lo:
        out[src_lo - lo_idx : src_hi - lo_idx] = counts_full[
            src_lo - lag0 : src_hi - lag0
        ]
    return out


def _xcorr_sweep(ia: np.ndarray, ib: np.ndarray, lo_idx: int, hi_idx: int) -> np.ndarray:
    """Counts of integer lags via a windowed merge over sorted index arrays."""
    n_bins = hi_idx - lo_idx
    if ia.size == 0 or ib.size == 0:
        return np.zeros(n_bins, dtype=np.int64)
    left = np.searchsorted(ib, ia + lo_idx, side="left")
    right = np.searchsorted(ib, ia + hi_idx, side="left")
    m = right - left
    total = int(m.sum())
    if total == 0:
        return np.zeros(n_bins, dtype=np.int64)
    rep_a = np.repeat(ia, m)
    offsets = np.arange(total) - np.repeat(np.cumsum(m) - m, m)
    lags = ib[np.repeat(left, m) + offsets] - rep_a
    return np.bincount(lags - lo_idx, minlength=n_bins)


def binned_xcorr(
    a: np.ndarray,
    b: np.ndarray,
    bin_width: int,
    span: int,
    center: int = 0,
    method: str = "auto",
) -> CorrelationHistogram:
    """Histogram of quantized delays idx(b) - idx(a) over a delay window.

    The window covers [center - span/2, center + span/2), snapped outward to
    the bin grid. `method` selects the engine: "fft" convolves occupancy
    arrays over the full tag range, "sweep" walks sorted tag arrays and only
    touches pairs inside the window, "auto" picks whichever is cheaper. Both
    engines produce identical counts.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo_idx, hi_idx = _grid_range(bin_width, span, center)
    n_bins = hi_idx - lo_idx
    if n_bins > MAX_BINS:
        raise BinBudgetError(f"{n_bins} bins exceed the budget of {MAX_BINS}")
    bw = np.int64(bin_width)
    if a.size == 0 or b.size == 0:
        counts = np.zeros(n_bins, dtype=np.int64)
        return CorrelationHistogram(bin_width, lo_idx * bin_width, counts, a.size, b.size)
    ia = np.floor_divide(a, bw)
    ib = np.floor_divide(b, bw)
    if method == "auto":
        occ_len = int(max(ia.max(), ib.max()) - min(ia.min(), ib.min())) + 1
        fft_cost = occ_len * max(np.log2(occ_len), 1.0) * 2.5
        frac = min(n_bins / max(occ_len, 1), 1.0)
        sweep_cost = a.size * b.size * frac + a.size + n_bins
        method = "fft" if fft_cost < sweep_cost else "sweep"
    if method == "fft":
        if int(max(ia.max(), ib.max()) - min(ia.min(), ib.min())) + 1 > MAX_BINS:
            raise BinBudgetError("occupancy array would exceed the point budget")
        counts = _xcorr_fft(ia, ib, lo_idx, hi_idx)
    elif method == "sweep":
        counts = _xcorr_sweep(np.sort(ia), np.sort(ib), lo_idx, hi_idx)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CorrelationHistogram(
        bin_width=bin_width,
        delay_lo=lo_idx * bin_width,
        counts=counts,
        n_a=a.size,
        n_b=b.size,
    )


def start_stop_histogram(
    a: np.ndarray,
    b: np.ndarray,
    window: int,
    bin_width: int,
    center: int = 0,
) -> CorrelationHistogram:
    """Delays from each a-tag to every b-tag within +-window/2 of it.

    Linear-time sweep over the sorted streams; equals the windowed
    cross-correlation on the same grid. Only useful once the offset is known
    to better than window/2, which is the point: it replaces the full
    cross-correlation after coarse acquisition.
    """
    return binned_xcorr(a, b, bin_width, span=window, center=center, method="sweep")


def peak_stats(h: CorrelationHistogram, exclusion_halfwidth: int = 5) -> PeakStats:
    """Max bin against the background outside the peak neighborhood."""
    counts = h.counts
    if counts.size == 0 or int(counts.max()) == 0:
        raise NoSignalError("histogram has no counts")
    peak_idx = int(np.argmax(counts))  # ties resolve to the lowest delay
    lo = max(peak_idx - exclusion_halfwidth, 0)
    hi = min(peak_idx + exclusion_halfwidth + 1, counts.size)
    background = np.concatenate([counts[:lo], counts[hi:]])
    if background.size < 32:
        raise WindowError("fewer than 32 background bins around the peak")
    mean = float(background.mean())
    std = float(background.std(ddof=1))
    height = float(counts[peak_idx])
    if std == 0.0:
        significance = np.inf if height > mean else 0.0
    else:
        significance = (height - mean) / std
    return PeakStats(
        peak_delay=float(h.delay_lo + (peak_idx + 0.5) * h.bin_width),
        peak_height=height,
        background_mean=mean,
        background_std=std,
        significance=float(significance),
    )


def _flat_top(x, amplitude, center, sigma_edge, plateau, background):
    """Gaussian with a central plateau, normalized to `amplitude` at center."""
    s = np.sqrt(2.0) * sigma_edge
    if plateau < 1e-9 * sigma_edge:
        return background + amplitude * np.exp(-((x - center) ** 2) / (s * s))
    half = 0.5 * plateau
    norm = 2.0 * erf(half / s)
    val = erf((x - center + half) / s) - erf((x - center - half) / s)
    return background + amplitude * val / norm


def quadrature_width(sigma_edge: float, plateau: float) -> float:
    """Effective peak width: plateau enters as half its extent, in quadrature."""
    return float(np.hypot(sigma_edge, 0.5 * plateau))


def fit_peak(h: CorrelationHistogram, max_nfev: int = 4000) -> PeakFit:
    """Least-squares flat-top Gaussian fit of the dominant peak.

    A residual linear rate error smears a Gaussian peak uniformly over the
    accumulation window, which is exactly this shape; it degenerates to a
    plain Gaussian when the plateau vanishes. Initialization: center at the
    max bin, edge width from the FWHM, plateau zero, background from the
    off-peak mean. Raises FitError if the optimizer fails; callers fall back
    to `centroid_peak`.
    """
    x = h.centers()
    y = h.counts.astype(np.float64)
    if y.max() <= 0:
        raise NoSignalError("histogram has no counts")
    peak_idx = int(np.argmax(y))
    lo = max(peak_idx - 5, 0)
    hi = min(peak_idx + 6, y.size)
    off_peak = np.concatenate([y[:lo], y[hi:]])
    bg0 = float(off_peak.mean()) if off_peak.size else 0.0
    amp0 = max(float(y[peak_idx]) - bg0, 1e-9)
    above = np.flatnonzero(y > bg0 + 0.5 * amp0)
    fwhm = (above[-1] - above[0] + 1) * h.bin_width if above.size else h.bin_width
    sigma0 = max(fwhm / 2.355, 0.3 * h.bin_width)
    p0 = [amp0, float(x[peak_idx]), sigma0, h.bin_width * 0.5, max(bg0, 0.0)]
    bounds = (
        [0.0, float(x[0]), 0.1 * h.bin_width, 0.0, 0.0],
        [np.inf, float(x[-1]), float(x[-1] - x[0]) + h.bin_width, float(x[-1] - x[0]), np.inf],
    )
    try:
        popt, _ = curve_fit(
            _flat_top, x, y, p0=p0, bounds=bounds, maxfev=max_nfev, method="trf"
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"peak fit did not converge: {exc}") from exc
    amplitude, center, sigma_edge, plateau, background = map(float, popt)
    resid = y - _flat_top(x, *popt)
    fit_residual = float(np.sqrt(np.mean(resid**2)) / max(amplitude, 1e-12))
    return PeakFit(
        center_tau=center,
        sigma=quadrature_width(sigma_edge, plateau),
        plateau=plateau,
        amplitude=amplitude,
        fit_residual=fit_residual,
        sigma_edge=sigma_edge,
        background=background,
    )


def centroid_peak(h: CorrelationHistogram, halfwidth_bins: int = 10) -> PeakFit:
    """Background-subtracted centroid around the max bin; fit fallback."""
    y = h.counts.astype(np.float64)
    if y.max() <= 0:
        raise NoSignalError("histogram has no counts")
    peak_idx = int(np.argmax(y))
    lo = max(peak_idx - halfwidth_bins, 0)
    hi = min(peak_idx + halfwidth_bins + 1, y.size)
    out = np.concatenate([y[:lo], y[hi:]])
    bg = float(out.mean()) if out.size else 0.0
    x = h.centers()[lo:hi]
    w = np.clip(y[lo:hi] - bg, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise NoSignalError("no counts above background near the peak")
    center = float(np.sum(w * x) / total)
    var = float(np.sum(w * (x - center) ** 2) / total)
    sigma = float(np.sqrt(max(var, (0.1 * h.bin_width) ** 2)))
    return PeakFit(
        center_tau=center,
        sigma=sigma,
        plateau=0.0,
        amplitude=float(y[peak_idx] - bg),
        fit_residual=np.nan,
        sigma_edge=sigma,
        background=bg,
    )


def locate_peak(h: CorrelationHistogram) -> PeakFit:
    """fit_peak with the documented centroid fallback."""
    try:
        return fit_peak(h)
    except FitError:
        return centroid_peak(h)
