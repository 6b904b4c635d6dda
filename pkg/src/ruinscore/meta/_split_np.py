"""Pure numpy split scan; the fallback when the compiled kernel is absent.

Bit-compatibility contract with _split_cy: prefix sums are sequential
left-to-right (np.cumsum accumulates sequentially), the gain expression has
the same association order, and the argmax scans feature-major so ties
resolve to the lowest (feature, threshold). Do not reorder operations here
without mirroring the change in the .pyx file.
"""

from __future__ import annotations

import numpy as np

NO_SPLIT = (-1, 0, 0.0, 0.0)


def best_split(
    x_sorted: np.ndarray,
    g_sorted: np.ndarray,
    h_sorted: np.ndarray,
    lam: float,
    min_leaf: int,
) -> tuple[int, int, float, float]:
    """Best axis-aligned split for one tree node.

    Inputs are (n, d) float64 arrays whose columns were each sorted by
    feature value (gradients and hessians gathered into the same order).
    Candidate thresholds are the left-side values at boundaries between
    distinct consecutive sorted values; x <= threshold routes left. Returns
    (feature, n_left, threshold, gain), or NO_SPLIT when no candidate has
    positive gain and min_leaf samples on both sides.
    """
    n = x_sorted.shape[0]
    if n < 2 * min_leaf or n < 2:
        return NO_SPLIT
    csg = np.cumsum(g_sorted, axis=0)
    csh = np.cumsum(h_sorted, axis=0)
    g_total = csg[-1]
    h_total = csh[-1]

    gl = csg[:-1]
    hl = csh[:-1]
    gr = g_total - gl
    hr = h_total - hl
    gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - g_total * g_total / (h_total + lam)

    n_left = np.arange(1, n)
    valid = x_sorted[:-1] != x_sorted[1:]
    valid &= ((n_left >= min_leaf) & (n_left <= n - min_leaf))[:, None]
    gain = np.where(valid, gain, 0.0)

    flat = np.argmax(gain.ravel(order="F"))
    feat, row = divmod(int(flat), n - 1)
    best = float(gain[row, feat])
    if best <= 0.0:
        return NO_SPLIT
    return feat, row + 1, float(x_sorted[row, feat]), best
