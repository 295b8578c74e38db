"""Corpus statistics for inequality ratios and the power-law growth fit.

Ratios are summarized by their supremum and median, with a sanity bound that
flags any ratio more than ten times the corpus median.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.stats

from fnls_lab.models import CorpusSummary, GrowthFit, RatioSample

logger = logging.getLogger(__name__)


class RatioStatistics:
    """Summarizes inequality ratios over a corpus."""

    OUTLIER_FACTOR: float = 10.0

    def summarize(self, family: str, samples: list[RatioSample]) -> CorpusSummary:
        """Reduce a corpus of ratio samples to supremum, median and outlier count.

        Samples with non-finite ratios count as outliers. A corpus with no samples
        summarizes to zeros and passes the sanity bound.

        Args:
            family: Name recorded in the summary.
            samples: Ratio samples of one inequality.

        Returns:
            CorpusSummary with the sanity flag set when no outliers exist.
        """
        if not samples:
            return CorpusSummary(family=family, count=0, supremum=0.0, median=0.0, outliers=0, sanity_ok=True)

        ratios = np.array([sample.ratio for sample in samples], dtype=float)
        finite = ratios[np.isfinite(ratios)]
        median = float(np.median(finite)) if finite.size else math.nan
        supremum = float(np.max(finite)) if finite.size else math.inf
        outliers = int(np.count_nonzero(~np.isfinite(ratios)))
        if finite.size and median > 0:
            outliers += int(np.count_nonzero(finite > self.OUTLIER_FACTOR * median))

        if outliers:
            logger.warning("Corpus %s has %d outlying ratios (median %.3g)", family, outliers, median)
        return CorpusSummary(
            family=family,
            count=len(samples),
            supremum=supremum,
            median=median,
            outliers=outliers,
            sanity_ok=outliers == 0,
        )


def fit_growth(times: list[float], norms: list[float], threshold: float = 2.0) -> GrowthFit | None:
    """Fit G(t) ~ C t^p by least squares in log-log coordinates over the late window.

    The window holds the samples with G/G(0) >= ``threshold``; when fewer than three
    qualify, the second half of the positive-time samples is used instead.

    Returns:
        GrowthFit with a 95% Student t interval, or None when fewer than three points are usable.
    """
    t = np.asarray(times, dtype=float)
    g = np.asarray(norms, dtype=float)
    if t.size < 3 or g[0] <= 0:
        return None
    usable = (t > 0) & (g > 0) & np.isfinite(g)
    window = usable & (g / g[0] >= threshold)
    if np.count_nonzero(window) < 3:
        indices = np.flatnonzero(usable)
        window = np.zeros_like(usable)
        window[indices[indices.size // 2 :]] = True
    if np.count_nonzero(window) < 3:
        return None

    log_t, log_g = np.log(t[window]), np.log(g[window])
    fit = scipy.stats.linregress(log_t, log_g)
    points = int(log_t.size)
    half_width = float(scipy.stats.t.ppf(0.975, points - 2)) * float(fit.stderr)
    return GrowthFit(
        exponent=float(fit.slope),
        ci_low=float(fit.slope) - half_width,
        ci_high=float(fit.slope) + half_width,
        window_start=float(t[window][0]),
        points=points,
    )
