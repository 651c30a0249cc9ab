"""Affine-fit functionals of the primitive psi and the dissipation bound built on them."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from ..errors import BadParameter, DomainExceeded, ResolutionExceeded, TooFewPoints
from ..flowgen import FlowSample, extended_nodes

CLAMP = 1e-14
MIN_CELLS = 8


class Flagged(NamedTuple):
    """A value with a flag telling whether the degenerate-integrand clamp fired."""

    value: float
    clamped: bool

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class WeiEstimate:
    """Discrete Gamma_alpha; an upper bound for the infimum over all windows."""

    alpha: float
    value: float
    argmin: tuple
    delta_levels: int = 0
    ybar_stride: float = 0.0

    def to_dict(self):
        return {"alpha": self.alpha, "value": self.value, "argmin": list(self.argmin), "delta_levels": self.delta_levels, "ybar_stride": self.ybar_stride}


def _pl_residual(x, p):
    """Squared L2 distance from span{1, y} of the piecewise-linear data (x, p).

    Rows are windows. Zero-length segments are allowed. The chord through
    the end values is removed first, which leaves the residual unchanged and
    avoids cancellation for nearly affine data.
    """
    x0, x1 = x[:, :1], x[:, -1:]
    length = (x1 - x0)[:, 0]
    c = 0.5 * (x0 + x1)
    chord = p[:, :1] + (p[:, -1:] - p[:, :1]) * (x - x0) / (x1 - x0)
    r = p - chord
    h = np.diff(x, axis=1)
    a, b = r[:, :-1], r[:, 1:]
    i0 = np.sum(h * (a + b), axis=1) / 2
    i2 = np.sum(h * (a * a + a * b + b * b), axis=1) / 3
    i1 = np.sum(h * ((x[:, :-1] - c) * (a + b) / 2 + h * (a + 2 * b) / 6), axis=1)
    res = i2 - i0**2 / length - 12.0 / length**3 * i1**2
    return np.maximum(res, 0.0)


def _windows(xg, pg, a, b):
    """Stack of piecewise-linear windows [a_i, b_i] cut from uniform nodes (xg, pg)."""
    h = xg[1] - xg[0]
    width = float(np.max(b - a))
    k = int(np.ceil(width / h)) + 2
    i0 = np.floor((a - xg[0]) / h).astype(np.int64) + 1
    idx = np.clip(i0[:, None] + np.arange(k)[None, :], 0, len(xg) - 1)
    xs = xg[idx]
    inside = (xs > a[:, None]) & (xs < b[:, None])
    pa = np.interp(a, xg, pg)
    pb = np.interp(b, xg, pg)
    xs = np.where(inside, xs, b[:, None])
    ps = np.where(inside, pg[idx], pb[:, None])
    return np.column_stack([a, xs, b]), np.column_stack([pa, ps, pb])


def window_residuals(xg, pg, a, b, chunk=4096):
    a = np.atleast_1d(np.asarray(a, float))
    b = np.broadcast_to(np.asarray(b, float), a.shape)
    out = np.empty(a.shape)
    for s in range(0, a.size, chunk):
        x, p = _windows(xg, pg, a[s : s + chunk], b[s : s + chunk])
        out[s : s + chunk] = _pl_residual(x, p)
    return out


def affine_fit_residual(psi, iv):
    """min over c1, c2 of the integral over iv of |psi - c1 - c2 y|^2.

    psi is taken piecewise linear between its samples and the integrals are
    exact for that interpolant. ``iv`` must lie within the sampled range.
    """
    a, b = (iv.a, iv.b) if hasattr(iv, "a") else iv
    x = psi.points
    tol = 1e-12 * psi.grid.length
    if a < x[0] - tol or b > x[-1] + tol or b <= a:
        raise DomainExceeded(f"[{a}, {b}] is not inside the sampled range [{x[0]}, {x[-1]}]")
    inside = np.count_nonzero((x >= a - tol) & (x <= b + tol))
    if inside < 4:
        raise TooFewPoints(f"[{a}, {b}] holds {inside} grid points, need 4")
    return float(window_residuals(x, psi.values, a, b)[0])


def _primitive_nodes(flow, upto):
    # every caller is blind to affine parts of psi, so centre u first: this
    # keeps psi small and makes u and u + c round the same way
    x, _, psi = extended_nodes(flow.with_values(flow.values - np.mean(flow.values)), upto)
    return x, psi


def _window_starts(flow, width, step):
    g = flow.grid
    if g.periodic:
        return g.left + np.arange(int(np.ceil(2 * np.pi / step - 1e-9))) * step
    count = int(np.floor((g.length - width) / step + 1e-9)) + 1
    return g.left + np.arange(max(count, 0)) * step


def gamma_wei(flow, alpha, delta_levels=6, ybar_stride=0.25):
    """Discrete Wei functional

        min over delta = 2^-j (j = 1..delta_levels) and window starts ybar on a
        grid of step ybar_stride * delta of
        sqrt(delta^(-2 alpha - 3) * residual(psi, [ybar, ybar + delta])).

    Torus flows use the primitive of the periodic extension. Since the true
    functional is an infimum, the value returned is an upper bound.
    """
    if alpha <= 0:
        raise BadParameter("alpha must be positive")
    if not 0 < ybar_stride <= 1:
        raise BadParameter("ybar_stride must lie in (0, 1]")
    h = flow.grid.spacing
    if 2.0**-delta_levels < MIN_CELLS * h:
        raise ResolutionExceeded(f"delta = 2^-{delta_levels} is below {MIN_CELLS} grid cells ({MIN_CELLS * h:.3g})")
    x, psi = _primitive_nodes(flow, flow.grid.right + 0.5)
    best, arg = np.inf, ()
    for j in range(1, delta_levels + 1):
        d = 2.0**-j
        starts = _window_starts(flow, d, ybar_stride * d)
        if starts.size == 0:
            continue
        vals = np.sqrt(d ** (-2 * alpha - 3) * window_residuals(x, psi, starts, starts + d))
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), (float(starts[i]), d)
    return WeiEstimate(alpha, best, arg, delta_levels, ybar_stride)


def _stencil_nodes(flow, ybar, delta):
    g = flow.grid
    tol = 1e-12 * g.length
    if g.periodic:
        ybar = g.left + np.mod(ybar - g.left, 2 * np.pi)
    elif np.min(ybar) < g.left - tol or np.max(ybar) + delta > g.right + tol:
        raise DomainExceeded(f"window [{np.min(ybar)}, {np.max(ybar) + delta}] leaves [0, pi]")
    x, psi = _primitive_nodes(flow, float(np.max(ybar)) + 3 * delta)
    return ybar, x, psi


def _g_values(x, psi, ybar, delta, alpha, m):
    s = np.linspace(0.0, delta, m + 1)
    y = np.asarray(ybar, float)[..., None] + s
    d2 = np.interp(y + 2 * delta, x, psi) - 2 * np.interp(y + delta, x, psi) + np.interp(y, x, psi)
    mag = np.abs(d2)
    clamped = mag < CLAMP
    f = np.maximum(mag, CLAMP) ** (-1.0 / (1.0 + alpha))
    w = np.full(m + 1, delta / m)
    w[[0, -1]] *= 0.5
    return f @ w, clamped.any(axis=-1)


def _quad_points(flow, delta):
    return max(MIN_CELLS, int(np.ceil(delta / flow.grid.spacing)))


def g_alpha(flow, alpha, ybar, delta):
    """Trapezoid value of the integral over [ybar, ybar + delta] of |D2 psi|^(-1/(1+alpha)),

    where D2 psi(y) = psi(y + 2 delta) - 2 psi(y + delta) + psi(y). Points with
    |D2 psi| < 1e-14 are clamped there and reported through the flag.
    """
    if delta <= 0:
        raise BadParameter("delta must be positive")
    yb, x, psi = _stencil_nodes(flow, ybar, delta)
    val, flag = _g_values(x, psi, yb, delta, alpha, _quad_points(flow, delta))
    return Flagged(float(val), bool(flag))


def _reflected(flow):
    # u(-y) on the torus grid: index j maps to (n - j) mod n
    n = flow.grid.n
    return FlowSample(flow.grid, flow.values[(n - np.arange(n)) % n], flow.meta)


def k_alpha_eps(flow, alpha, eps, max_level=6):
    """sup over levels 1..max_level and cells k = 1..2^l - 1 of

        2^(-l eps) G_alpha(pi k 2^-l, pi 2^-(l+1)).

    The cells tile [0, pi]. For torus flows the sup also runs over the
    reflected flow u(-y), which covers [-pi, 0].
    """
    h = flow.grid.spacing
    if np.pi * 2.0 ** (-max_level - 1) < MIN_CELLS * h:
        raise ResolutionExceeded(f"level {max_level} cells are below {MIN_CELLS} grid cells")
    flows = [flow, _reflected(flow)] if flow.grid.periodic else [flow]
    best, flag = -np.inf, False
    for f in flows:
        for lev in range(1, max_level + 1):
            delta = np.pi * 2.0 ** (-lev - 1)
            ybar = np.pi * np.arange(1, 2**lev) * 2.0**-lev
            x, psi = _primitive_nodes(f, f.grid.right + 2 * delta)
            vals, flags = _g_values(x, psi, ybar, delta, alpha, _quad_points(f, delta))
            best = max(best, float(np.max(vals)) * 2.0 ** (-lev * eps))
            flag = flag or bool(flags.any())
    return Flagged(best, flag)


def omega1(flow, delta):
    """Smallest affine-fit residual of psi over windows [x - delta, x + delta].

    Centres move in steps of delta / 4; on the torus they sweep one full
    period of the extended primitive.
    """
    h = flow.grid.spacing
    if 2 * delta < MIN_CELLS * h:
        raise ResolutionExceeded(f"2 delta = {2 * delta:.3g} is below {MIN_CELLS} grid cells")
    x, psi = _primitive_nodes(flow, flow.grid.right + 2 * delta)
    starts = _window_starts(flow, 2 * delta, delta / 4)
    if starts.size == 0:
        raise DomainExceeded(f"window length {2 * delta} exceeds the domain")
    return float(np.min(window_residuals(x, psi, starts, starts + 2 * delta)))


def _wei_F_scalar(x):
    if x < 0:
        raise BadParameter("wei_F needs x >= 0")
    if x == 0:
        return 0.0
    if x > 1e300:
        return np.pi / 2
    # 36 y tan y = x; near pi/2 solve for z = pi/2 - y, where tan y = 1 / tan z
    if x <= 9 * np.pi:
        return brentq(lambda y: 36.0 * y * np.tan(y) - x, 0.0, 0.8, xtol=1e-300)
    z = brentq(lambda z: 36.0 * (np.pi / 2 - z) - x * np.tan(z), 0.0, 0.8, xtol=1e-300)
    return np.pi / 2 - z


def wei_F(x):
    """Inverse of y -> 36 y tan y on [0, pi/2)."""
    if np.ndim(x) == 0:
        return _wei_F_scalar(float(x))
    return np.vectorize(_wei_F_scalar, otypes=[float])(x)


def wei_upper_bound(flow, nu, t, delta, omega=None):
    """exp(pi/2 - t nu delta^-2 F(delta nu^-2 omega1(delta, u))^2).

    ``omega`` may be passed to reuse a precomputed omega1 value; ``t`` may be
    an array.
    """
    if nu <= 0:
        raise BadParameter("nu must be positive")
    if not 0 < delta < 1:
        raise BadParameter("delta must lie in (0, 1)")
    w = omega1(flow, delta) if omega is None else omega
    f = wei_F(delta * w / nu**2)
    return np.exp(np.pi / 2 - np.asarray(t, float) * nu / delta**2 * f**2)
