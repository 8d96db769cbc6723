"""Pure-numpy fallback for the compiled distance kernels.

Arithmetic mirrors the Cython version (difference-then-square, summed
along the coordinate axis) so results are bitwise identical.
"""

import numpy as np

BACKEND = "python"


def pairwise_sqdist(points, centers):
    """Squared Euclidean distances, shape (n_points, n_centers)."""
    diff = points[:, None, :] - centers[None, :, :]
    out = np.zeros((points.shape[0], centers.shape[0]))
    # accumulate one coordinate at a time: same rounding as the compiled loop
    for t in range(points.shape[1]):
        d_t = diff[:, :, t]
        out += d_t * d_t
    return out


def nearest_center(points, centers):
    """Index of the closest center per point; ties go to the lowest index."""
    return np.argmin(pairwise_sqdist(points, centers), axis=1).astype(np.int64)
