"""Oscillatory integrals of a flow and the (gamma, rho) irregularity scan."""

from dataclasses import dataclass

import numpy as np

from ..errors import BadParameter, DomainExceeded, UnderResolved
from ..flowgen import extended_nodes

XI_CHUNK = 8

# 2 pi split into three parts; k * TWO_PI_A and k * TWO_PI_B are exact for |k| < 2**23
TWO_PI_A = 6.283185303211212
TWO_PI_B = 3.9683743166540886e-09
TWO_PI_C = 2.068073192717642e-18
_SPLIT = 134217729.0


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise BadParameter(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def length(self):
        return self.b - self.a


@dataclass(frozen=True)
class IrregularityEstimate:
    """Largest scanned value of |Phi_I(xi)| |I|^-gamma |xi|^rho.

    The scan covers finitely many (xi, I), so ``value`` is a lower bound for
    the supremum over all intervals and frequencies.
    """

    gamma: float
    rho: float
    value: float
    xi_max: float
    depth: int
    argmax: tuple = ()

    def to_dict(self):
        return {"gamma": self.gamma, "rho": self.rho, "value": self.value, "xi_max": self.xi_max, "depth": self.depth, "argmax": list(self.argmax)}


def default_xi_grid(xi_max=1e4, per_decade=64):
    """Log-spaced magnitudes from 1 to xi_max; grids for different xi_max nest."""
    decades = np.log10(xi_max)
    count = int(round(per_decade * decades)) + 1
    return np.logspace(0.0, decades, count)


def _two_prod(a, b):
    p = a * b
    ca, cb = _SPLIT * a, _SPLIT * b
    ah = ca - (ca - a)
    bh = cb - (cb - b)
    al, bl = a - ah, b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def unit_phase(xi, u):
    """exp(i xi u) with the product and the 2 pi reduction done without rounding loss.

    Large phases (xi u ~ 1e4 and beyond) would otherwise carry absolute
    errors of order 1e-12, which is visible in cancelling sums.
    """
    p, err = _two_prod(xi, u)
    k = np.round(p / (2 * np.pi))
    r = ((p - k * TWO_PI_A) - k * TWO_PI_B) - k * TWO_PI_C + err
    return np.exp(1j * r)


def _segment_integrals(u0, u1, length, xi):
    # integral of exp(i xi u) over a segment where u runs linearly from u0 to
    # u1: length * e^{i xi u0} (e^{i theta} - 1) / (i theta), theta = xi (u1 - u0),
    # written with sinc so it reduces to the midpoint rule as theta -> 0
    xi = np.asarray(xi, dtype=float)[..., None]
    theta = xi * (u1 - u0)
    return length * unit_phase(xi, u0) * np.exp(0.5j * theta) * np.sinc(theta / (2 * np.pi))


def _check_phase(xi, du):
    top = float(np.max(np.abs(du))) if du.size else 0.0
    worst = float(np.max(np.abs(xi))) * top
    if worst > np.pi:
        limit = np.pi / top
        raise UnderResolved(
            f"|xi| max|du| = {worst:.3g} > pi; largest resolvable |xi| is {limit:.4g}",
            max_usable=limit,
        )


def _pieces(flow, a, b):
    """Nodes of the piecewise-linear flow restricted to [a, b]."""
    g = flow.grid
    tol = 1e-12 * g.length
    if g.periodic:
        shift = np.floor((a - g.left) / (2 * np.pi)) * 2 * np.pi
        a, b = a - shift, b - shift
        if b - a > 2 * np.pi + tol:
            raise DomainExceeded(f"torus intervals are at most 2 pi long, got {b - a}")
    elif a < g.left - tol or b > g.right + tol:
        raise DomainExceeded(f"[{a}, {b}] leaves the domain [0, pi]")
    else:
        a, b = max(a, g.left), min(b, g.right)
    x, u, _ = extended_nodes(flow, b)
    h = g.spacing
    i0 = int(np.floor((a - g.left) / h)) + 1
    i1 = int(np.ceil((b - g.left) / h)) - 1
    xs = np.concatenate([[a], x[i0 : i1 + 1], [b]])
    us = np.concatenate([[np.interp(a, x, u)], u[i0 : i1 + 1], [np.interp(b, x, u)]])
    return xs, us


def osc_integral(flow, xi, iv):
    """Integral of exp(i xi u(z)) over ``iv`` with u piecewise linear.

    ``xi`` may be a scalar or an array; the result has the matching shape.
    Raises UnderResolved when |xi| times the largest increment of u on the
    interval exceeds pi.
    """
    iv = iv if isinstance(iv, Interval) else Interval(*iv)
    xs, us = _pieces(flow, iv.a, iv.b)
    _check_phase(np.atleast_1d(xi), np.diff(us))
    out = _segment_integrals(us[:-1], us[1:], np.diff(xs), np.atleast_1d(xi)).sum(axis=-1)
    return complex(out[0]) if np.ndim(xi) == 0 else out


def _lattice(flow, depth):
    g = flow.grid
    k = 2**depth
    if g.periodic:
        nodes = g.left + 2 * np.pi * np.arange(2 * k + 1) / k
    else:
        nodes = g.left + g.length * np.arange(k + 1) / k
    return nodes


def _cumulative_at(x, u, xi, points):
    """Integral of exp(i xi u) from x[0] to each point, for a batch of xi."""
    seg = _segment_integrals(u[:-1], u[1:], np.diff(x), xi)
    cum = np.concatenate([np.zeros((len(xi), 1), complex), np.cumsum(seg, axis=1)], axis=1)
    h = x[1] - x[0]
    j = np.clip(np.floor((points - x[0]) / h + 1e-9).astype(np.int64), 0, len(x) - 2)
    frac = points - x[j]
    up = np.interp(points, x, u)
    part = _segment_integrals(u[j], up, frac, xi)
    return cum[:, j] + part


def rho_irregularity_norm(flow, gamma, rho, xi_grid=None, depth=8):
    """Scan of |Phi_I(xi)| |I|^-gamma |xi|^rho over lattice intervals.

    I runs over every interval whose endpoints lie on the dyadic lattice of
    level ``depth`` (for torus flows, lengths up to 2 pi with wrap-around).
    Phi_I(-xi) is the conjugate of Phi_I(xi) for real u, so only |xi| is
    scanned.
    """
    if depth < 1:
        raise BadParameter("depth must be >= 1")
    xis = np.unique(np.abs(np.asarray(default_xi_grid() if xi_grid is None else xi_grid, dtype=float)))
    xis = xis[xis > 0]
    if xis.size == 0:
        raise BadParameter("xi_grid has no nonzero frequency")
    _check_phase(xis, flow.increments())
    nodes = _lattice(flow, depth)
    x, u, _ = extended_nodes(flow, nodes[-1])
    k = 2**depth
    cell = nodes[1] - nodes[0]
    if flow.grid.periodic:
        starts = np.arange(k)[:, None]
        lengths = np.arange(1, k + 1)[None, :]
        valid = np.ones((k, k), bool)
    else:
        starts = np.arange(k)[:, None]
        lengths = np.arange(1, k + 1)[None, :]
        valid = starts + lengths <= k
    ends = np.minimum(starts + lengths, len(nodes) - 1)
    weight = np.where(valid, (lengths * cell) ** (-gamma), 0.0)
    best, arg = -1.0, None
    for c0 in range(0, xis.size, XI_CHUNK):
        chunk = xis[c0 : c0 + XI_CHUNK]
        cum = _cumulative_at(x, u, chunk, nodes)
        for row, xi in zip(cum, chunk):
            vals = np.abs(row[ends] - row[starts]) * weight * xi**rho
            i = int(np.argmax(vals))
            if vals.flat[i] > best:
                a_i, l_i = np.unravel_index(i, vals.shape)
                best = float(vals.flat[i])
                arg = (float(xi), float(nodes[a_i]), float(nodes[a_i] + (l_i + 1) * cell))
    return IrregularityEstimate(gamma, rho, best, float(xis.max()), depth, arg)
