"""Spatial pattern recovery: the encoding-model counterpart of filters.

A filter extracts a source from the sensors; the matching pattern shows
how that source projects back onto them, which is what a human inspects
to decide whether a component is brain activity or an artifact. Patterns
are recovered from the filters and the data covariance as
``A = cov @ F @ (F.T @ cov @ F)^{-1}``, which for square invertible F
reduces to the inverse transpose of F.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimMismatch, InvalidInput
from .manifold import ensure_spd


@dataclass(frozen=True)
class PatternSet:
    """One pattern column per filter column, plus the covariance used."""

    patterns: np.ndarray
    source_cov_used: np.ndarray

    @property
    def k(self):
        return self.patterns.shape[1]


def compute_patterns(filters, data_cov):
    """Recover spatial patterns from spatial filters.

    Parameters
    ----------
    filters : ndarray, shape (C, K)
        Full column rank; column order is preserved, so pattern j
        corresponds to filter j.
    data_cov : ndarray, shape (C, C)
        SPD data covariance (use the arithmetic mean of the training
        trial covariances).
    """
    f = np.asarray(filters, dtype=float)
    if f.ndim != 2:
        raise InvalidInput("filters must be a C x K matrix")
    cov = ensure_spd(np.asarray(data_cov, dtype=float), name="data covariance")
    if cov.shape[0] != f.shape[0]:
        raise DimMismatch("filters and covariance disagree on channel count")
    if f.shape[1] > f.shape[0] or np.linalg.matrix_rank(f) < f.shape[1]:
        raise InvalidInput("filters must have full column rank")
    projected = cov @ f
    gram = f.T @ projected
    gram = 0.5 * (gram + gram.T)
    patterns = scipy.linalg.solve(gram, projected.T, assume_a="pos").T
    return PatternSet(patterns=patterns, source_cov_used=cov)


def patterns_to_csv(pattern_set, channel_names):
    """Render patterns as CSV: one row per channel, one column per component."""
    patterns = pattern_set.patterns
    if len(channel_names) != patterns.shape[0]:
        raise DimMismatch("need one channel name per pattern row")
    header = "channel," + ",".join(f"comp{i}" for i in range(patterns.shape[1]))
    lines = [header]
    for name, row in zip(channel_names, patterns):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
