"""Histograms, envelope fits, linear regression and repetition-frequency ranges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TrapConfig
from .spectrum import InsufficientDataError

__all__ = [
    "Histogram",
    "EnvelopeFit",
    "LinearFit",
    "RepetitionRange",
    "DegenerateRangeError",
    "make_histogram",
    "comb_histogram",
    "envelope_fit",
    "linear_fit",
    "repetition_range",
    "MIN_AUTO_BINS",
]

MIN_AUTO_BINS = 20


class DegenerateRangeError(ValueError):
    """Automatic binning needs a non-zero data range."""


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def merge(self, factor: int) -> "Histogram":
        """Combine every ``factor`` adjacent bins (a short last group is kept)."""
        if factor < 1:
            raise ValueError("factor must be >= 1")
        idx = np.arange(0, len(self.counts), factor)
        counts = np.add.reduceat(self.counts, idx)
        edges = np.concatenate([self.edges[idx], self.edges[-1:]])
        return Histogram(edges, counts, self.total)

    def mirrored(self) -> "Histogram":
        """Histogram of the negated data."""
        return Histogram(-self.edges[::-1], self.counts[::-1].copy(), self.total)


@dataclass(frozen=True)
class EnvelopeFit:
    amplitude: float
    center: float
    sigma: float
    skewness: float
    goodness: float  # rms residual of the Gaussian relative to the peak count


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class RepetitionRange:
    omega_min: float
    omega_max: float
    ratio_to_trap: float  # omega_min / min(trap omegas)


def _auto_edges(v: np.ndarray) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        raise DegenerateRangeError(f"all {len(v)} values equal {lo!r}")
    q75, q25 = np.percentile(v, [75, 25])
    width = 2.0 * (q75 - q25) / len(v) ** (1 / 3)
    nbins = int(np.ceil((hi - lo) / width)) if width > 0 else MIN_AUTO_BINS
    return np.linspace(lo, hi, max(nbins, MIN_AUTO_BINS) + 1)


def make_histogram(values, bins=None, range=None) -> Histogram:
    """Count ``values`` into half-open bins ``[e_i, e_{i+1})``, the last bin closed.

    ``bins`` may be ``None`` (Freedman-Diaconis with at least 20 bins), a bin
    count, or an ascending array of edges.  Values outside the edges are not
    counted, so ``total`` can be below ``len(values)`` only with explicit edges
    or ``range``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InsufficientDataError("no values to histogram")
    if bins is None:
        if range is not None:
            v_in = v[(v >= range[0]) & (v <= range[1])]
            edges = _auto_edges(v_in)
        else:
            edges = _auto_edges(v)
    elif np.ndim(bins) == 0:
        nb = int(bins)
        if nb < 1:
            raise ValueError("bins must be >= 1")
        lo, hi = (float(v.min()), float(v.max())) if range is None else map(float, range)
        if lo == hi:
            raise DegenerateRangeError(f"all values equal {lo!r}")
        edges = np.linspace(lo, hi, nb + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be a strictly ascending 1-d array")
    counts, edges = np.histogram(v, bins=edges)
    return Histogram(edges, counts.astype(np.int64), int(counts.sum()))


def comb_histogram(phases, phi0: float) -> Histogram:
    """Counts per comb tooth: bins of width ``phi0`` centred on ``n*phi0``.

    The result is the envelope of the phase comb, one bin per tooth.
    """
    ph = np.asarray(phases, dtype=float)
    if ph.size == 0:
        raise InsufficientDataError("no phases")
    n_lo = int(np.floor(np.min(ph) / phi0 + 0.5))
    n_hi = int(np.floor(np.max(ph) / phi0 + 0.5))
    edges = (np.arange(n_lo, n_hi + 2) - 0.5) * phi0
    return make_histogram(ph, edges)


def envelope_fit(h: Histogram) -> EnvelopeFit:
    """Moment-based centre, width and skewness plus a least-squares Gaussian amplitude.

    Moments are taken over bin centres weighted by counts.  With centre and
    width fixed, the amplitude ``A`` minimising ``sum (counts - A*g)**2`` is
    ``sum(counts*g) / sum(g*g)``.
    """
    counts = np.asarray(h.counts, dtype=float)
    if np.count_nonzero(counts) < 5:
        raise InsufficientDataError(f"need >= 5 non-empty bins, got {np.count_nonzero(counts)}")
    x = h.centers
    w = counts / counts.sum()
    center = float(np.dot(w, x))
    dx = x - center
    var = float(np.dot(w, dx * dx))
    sigma = float(np.sqrt(var))
    skew = float(np.dot(w, dx ** 3) / sigma ** 3)
    g = np.exp(-0.5 * (dx / sigma) ** 2)
    amp = float(np.dot(counts, g) / np.dot(g, g))
    goodness = float(np.sqrt(np.mean((counts - amp * g) ** 2)) / counts.max())
    return EnvelopeFit(amp, center, sigma, skew, goodness)


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y = slope*x + intercept``.

    ``r_squared`` is ``1 - SS_res/SS_tot``; a constant ``y`` gives 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 3:
        raise ValueError("need matching 1-d x and y with at least 3 points")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise ValueError("x values are all equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot == 0:
        return LinearFit(slope, intercept, 0.0)
    ss_res = float(np.sum((y - slope * x - intercept) ** 2))
    return LinearFit(slope, intercept, float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot))))


def repetition_range(chains, trap: TrapConfig) -> RepetitionRange:
    """Pooled min/max of the repetition-frequency samples and ``min / omega_trap_min``."""
    pooled = [np.asarray(c.omega_samples) for c in chains if len(c.omega_samples)]
    if not pooled:
        raise InsufficientDataError("no repetition-frequency samples")
    allw = np.concatenate(pooled)
    lo, hi = float(allw.min()), float(allw.max())
    return RepetitionRange(lo, hi, lo / trap.omega_min)
