"""Finite-difference regularity measures: Besov seminorm, Holder roughness, p-variation."""

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from ..errors import BadParameter

DENSE_SHIFTS = 512
SHIFT_RATIO = 1.01


def besov_shifts(n):
    """Shift counts (in grid cells) up to n/2: all of them below DENSE_SHIFTS, geometric beyond."""
    top = n // 2
    dense = np.arange(1, min(top, DENSE_SHIFTS) + 1)
    if top <= DENSE_SHIFTS:
        return dense
    count = int(np.ceil(np.log(top / DENSE_SHIFTS) / np.log(SHIFT_RATIO))) + 1
    sparse = np.unique(np.round(DENSE_SHIFTS * SHIFT_RATIO ** np.arange(count)).astype(int))
    return np.unique(np.concatenate([dense, np.minimum(sparse, top)]))


def besov_seminorm(flow, alpha, p=1):
    """sup over shifts 0 < s <= pi of ||u(. + s) - u||_{L^p(T)} / s^alpha, plain dy.

    Shifts are grid multiples (all of them up to 512 cells, then a 1% geometric
    ladder), so the value is a lower bound for the sup over all shifts.
    """
    if not flow.grid.periodic:
        raise BadParameter("besov_seminorm is defined for torus flows")
    if p not in (1, 2, np.inf, "inf"):
        raise BadParameter(f"p must be 1, 2 or inf, got {p}")
    if not 0 < alpha < 1 and alpha != 1:
        raise BadParameter(f"alpha must lie in (0, 1], got {alpha}")
    u = flow.values
    h = flow.grid.spacing
    best = 0.0
    for m in besov_shifts(flow.grid.n):
        d = np.abs(np.roll(u, -m) - u)
        if p == 1:
            norm = h * d.sum()
        elif p == 2:
            norm = np.sqrt(h * np.dot(d, d))
        else:
            norm = d.max()
        best = max(best, norm / (m * h) ** alpha)
    return float(best)


def holder_roughness(flow, alpha, delta_levels=4):
    """inf over grid points y and radii delta of  sup_{|z - y| <= delta} |u(z) - u(y)| / delta^alpha.

    Radii are delta = 2^j h for j = 1..delta_levels, tied to the spacing h, so
    refining the grid probes smaller scales.
    """
    if not flow.grid.periodic:
        raise BadParameter("holder_roughness is defined for torus flows")
    u = flow.values
    h = flow.grid.spacing
    best = np.inf
    for j in range(1, delta_levels + 1):
        r = 2**j
        if r * h > np.pi:
            break
        size = 2 * r + 1
        osc = np.maximum(maximum_filter1d(u, size, mode="wrap") - u, u - minimum_filter1d(u, size, mode="wrap"))
        best = min(best, float(osc.min()) / (r * h) ** alpha)
    return best


def _turning_points(f):
    """Endpoints plus the strict local extrema of the sequence (plateaus collapsed)."""
    keep = np.concatenate([[True], f[1:] != f[:-1]])
    g = f[keep]
    if g.size < 3:
        return g
    d = np.sign(np.diff(g))
    turn = np.concatenate([[True], d[1:] != d[:-1], [True]])
    return g[turn]


def _grid_variation(f, p):
    pts = _turning_points(f)
    if pts.size < 2:
        return 0.0
    if p == 1:
        return float(np.abs(np.diff(pts)).sum())
    # best[j] = largest sum of |increment|^p over partitions of pts[0..j] ending at j
    best = np.zeros(pts.size)
    for j in range(1, pts.size):
        best[j] = np.max(best[:j] + np.abs(pts[j] - pts[:j]) ** p)
    return float(best[-1] ** (1.0 / p))


def p_variation(flow, p=1.0):
    """|f(0)| plus the p-variation of the samples over grid partitions.

    Torus samples are closed into a loop (the value at -pi is repeated at pi).
    Only turning points can improve a partition for p >= 1, so the sequence is
    reduced to them before the O(m^2) dynamic programme.
    """
    if p < 1:
        raise BadParameter(f"p must be >= 1, got {p}")
    g = flow.grid
    f = flow.values
    if g.periodic:
        zero = f[g.n // 2]
        f = np.append(f, f[0])
    else:
        zero = f[0]
    return abs(float(zero)) + _grid_variation(f, p)
