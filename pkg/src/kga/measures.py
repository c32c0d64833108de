"""Statistical diagnostics over ensembles.

Includes the exact 1-D Wasserstein-1 distance between empirical measures,
per-generation summary statistics, normalized histograms, and box-plot
summaries with 1.5*IQR outlier fences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import ObjectiveSpec

__all__ = [
    "EnsembleStats",
    "BoxStats",
    "HistogramTable",
    "wasserstein1_1d",
    "ensemble_stats",
    "histogram",
    "box_stats",
]


@dataclass(frozen=True)
class EnsembleStats:
    """Mean/variance/best-particle summary of one generation."""

    mean: np.ndarray
    variance: np.ndarray
    best_index: int
    best_value: float
    best_error_l2: float
    mean_error_l2: float


@dataclass(frozen=True)
class BoxStats:
    """Box-plot summary: quartiles, 1.5*IQR whiskers, outliers."""

    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: np.ndarray


@dataclass(frozen=True)
class HistogramTable:
    """Bin edges with densities integrating to 1 over the range."""

    edges: np.ndarray
    density: np.ndarray
    overflow: int


def wasserstein1_1d(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W1 distance between two 1-D empirical measures.

    Integrates |F_a - F_b| over the merged sample values, which equals the
    integral of the quantile-function gap. For equal sample sizes this
    reduces to the mean absolute difference of the sorted samples.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    a_sorted, b_sorted = np.sort(a), np.sort(b)
    support = np.sort(np.concatenate([a_sorted, b_sorted]))
    cdf_a = np.searchsorted(a_sorted, support[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b_sorted, support[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * np.diff(support)))


def ensemble_stats(
    positions: np.ndarray, values: np.ndarray, obj: ObjectiveSpec
) -> EnsembleStats:
    """Summary statistics of a generation; variance uses the 1/N convention."""
    positions = np.asarray(positions, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if positions.shape[0] != values.size:
        raise ValueError("positions and values lengths must agree")
    mean = positions.mean(axis=0)
    best_index = int(np.argmin(values))
    return EnsembleStats(
        mean=mean,
        variance=positions.var(axis=0),
        best_index=best_index,
        best_value=float(values[best_index]),
        best_error_l2=float(np.linalg.norm(positions[best_index] - obj.minimizer)),
        mean_error_l2=float(np.linalg.norm(mean - obj.minimizer)),
    )


def histogram(
    samples: np.ndarray, bins: int, range: tuple[float, float]
) -> HistogramTable:
    """Histogram normalized to integrate to 1 over the given range.

    Out-of-range samples are excluded from the density and counted in the
    ``overflow`` field.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    lo, hi = float(range[0]), float(range[1])
    if not hi > lo:
        raise ValueError("degenerate histogram range")
    samples = np.asarray(samples, dtype=np.float64).ravel()
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    in_range = int(counts.sum())
    widths = np.diff(edges)
    if in_range > 0:
        density = counts / (in_range * widths)
    else:
        density = np.zeros(bins)
    return HistogramTable(edges=edges, density=density, overflow=samples.size - in_range)


def box_stats(values: np.ndarray) -> BoxStats:
    """Box-plot summary with linearly interpolated (type-7) quartiles.

    Whiskers extend to the most extreme data points within 1.5*IQR of the
    quartiles; points beyond the fences are reported as outliers.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("values must be nonempty")
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    return BoxStats(
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=np.sort(values[(values < lo_fence) | (values > hi_fence)]),
    )
