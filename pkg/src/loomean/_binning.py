"""Equal-count binning by rank, shared by the dependence score and the
slice-based estimators."""
from __future__ import annotations

import numpy as np


def equal_count_bins(values, n_bins: int) -> np.ndarray:
    """Assign each value a bin index 0..n_bins-1 by rank.

    The first n_bins - 1 bins hold floor(n / n_bins) values each and the
    last absorbs the remainder.  Ties are broken by position in the input.
    """
    v = np.asarray(values)
    n = v.shape[0]
    if n_bins < 1 or n_bins > n:
        raise ValueError("n_bins must be between 1 and the number of values")
    order = np.argsort(v, kind="stable")
    base = n // n_bins
    ids = np.empty(n, dtype=np.intp)
    for b in range(n_bins):
        hi = (b + 1) * base if b < n_bins - 1 else n
        ids[order[b * base : hi]] = b
    return ids
