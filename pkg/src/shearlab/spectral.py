"""Fourier analysis on the torus and evolution of  g_t + i k u g = nu g_yy.

Norm convention: ||g||_{H^s}^2 = sum over eta of (1 + eta^2)^s |g_hat(eta)|^2 with
g_hat(eta) = (1/n) sum_j g(y_j) exp(-i eta y_j), so L2 is taken against dy/2pi.
"""

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .errors import BadParameter, StepTooLarge, UnderResolved, ZeroModePresent
from .flowgen import Grid1D

PHASE_PER_STEP = 0.2
TAIL_TOL = 1e-6
SPARSE_MODES = 16


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        if not self.grid.periodic:
            raise BadParameter("complex fields live on torus grids")
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise BadParameter(f"expected {self.grid.n} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def etas(self):
        n = self.grid.n
        return np.arange(-n // 2, n // 2)

    @cached_property
    def coeffs(self):
        """g_hat(eta) for eta = -n/2 .. n/2 - 1."""
        n = self.grid.n
        c = sfft.fft(self.values) / n
        eta = sfft.fftfreq(n, 1.0 / n)
        c = c * np.where(eta.astype(np.int64) % 2 == 0, 1.0, -1.0)
        out = sfft.fftshift(c)
        out.setflags(write=False)
        return out

    @classmethod
    def from_coeffs(cls, grid, coeffs):
        """Inverse of ``coeffs``; accepts the full array or a dict {eta: value}."""
        n = grid.n
        full = np.zeros(n, complex)
        if isinstance(coeffs, dict):
            for eta, c in coeffs.items():
                if not -n // 2 <= eta < n // 2:
                    raise BadParameter(f"mode {eta} is outside the grid's band")
                full[eta + n // 2] = c
        else:
            full[:] = coeffs
        eta = np.arange(-n // 2, n // 2)
        shifted = sfft.ifftshift(full * np.where(eta % 2 == 0, 1.0, -1.0))
        return cls(grid, sfft.ifft(shifted) * n)

    @classmethod
    def mode(cls, grid, eta, amplitude=1.0):
        return cls(grid, amplitude * np.exp(1j * eta * grid.points))

    @classmethod
    def random_trig(cls, grid, rng, max_freq=16, smoothness=1.0):
        """Random trigonometric polynomial with Gaussian coefficients decaying like (1+eta^2)^(-smoothness/2)."""
        eta = np.arange(-max_freq, max_freq + 1)
        amp = (1.0 + eta**2) ** (-smoothness / 2)
        c = amp * (rng.standard_normal(eta.size) + 1j * rng.standard_normal(eta.size))
        return cls.from_coeffs(grid, dict(zip(eta.tolist(), c)))

    def conj(self):
        return ComplexField(self.grid, np.conj(self.values))

    def norm(self, s=0.0):
        return sobolev_norm(self, s)

    def evaluate(self, y):
        """Values at arbitrary points of the periodic extension.

        Fields with at most 16 active modes are summed exactly; otherwise real
        and imaginary parts are interpolated linearly.
        """
        y = np.asarray(y, dtype=float)
        c = self.coeffs
        active = np.flatnonzero(np.abs(c) > 1e-14 * np.abs(c).max()) if np.any(c) else np.array([], int)
        if active.size <= SPARSE_MODES:
            out = np.zeros(y.shape, complex)
            for i in active:
                out += c[i] * np.exp(1j * self.etas[i] * y)
            return out
        p = self.grid.points
        per = 2 * np.pi
        return np.interp(y, p, self.values.real, period=per) + 1j * np.interp(y, p, self.values.imag, period=per)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["y", "re", "im"])
        for y, g in zip(self.grid.points, self.values):
            w.writerow([repr(float(y)), repr(float(g.real)), repr(float(g.imag))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class DecayCurve:
    """Norms against time (or a parameter); abscissae strictly increasing and >= 0."""

    abscissae: np.ndarray
    ordinates: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.abscissae, dtype=float)
        o = np.array(self.ordinates, dtype=float)
        if a.ndim != 1 or a.shape != o.shape:
            raise BadParameter("abscissae and ordinates must be 1-d arrays of equal length")
        if np.any(np.diff(a) <= 0) or np.any(a < 0):
            raise BadParameter("abscissae must be nonnegative and strictly increasing")
        if not np.all(np.isfinite(o)) or np.any(o < 0):
            raise BadParameter("ordinates must be finite and nonnegative")
        for v in (a, o):
            v.setflags(write=False)
        object.__setattr__(self, "abscissae", a)
        object.__setattr__(self, "ordinates", o)

    def __len__(self):
        return self.abscissae.size

    def restrict(self, lo, hi):
        keep = (self.abscissae >= lo) & (self.abscissae <= hi)
        return DecayCurve(self.abscissae[keep], self.ordinates[keep], self.label, dict(self.meta))

    def to_dict(self):
        return {"label": self.label, "abscissae": self.abscissae.tolist(), "ordinates": self.ordinates.tolist(), "meta": self.meta}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["abscissa", "ordinate", "label"])
        for a, o in zip(self.abscissae, self.ordinates):
            w.writerow([repr(float(a)), repr(float(o)), self.label])
        return buf.getvalue()


def _weights(n, s):
    eta = sfft.fftfreq(n, 1.0 / n)
    return (1.0 + eta**2) ** s


def _norm_from_values(g, s):
    n = g.size
    if s == 0:
        return float(np.sqrt(np.mean(np.abs(g) ** 2)))
    c = sfft.fft(g) / n
    return float(np.sqrt(np.sum(_weights(n, s) * np.abs(c) ** 2)))


def sobolev_norm(field, s):
    """(sum over eta of (1 + eta^2)^s |g_hat(eta)|^2)^(1/2)."""
    c = field.coeffs
    return float(np.sqrt(np.sum((1.0 + field.etas.astype(float) ** 2) ** s * np.abs(c) ** 2)))


def _check_grid(flow, g0):
    if flow.grid != g0.grid:
        raise BadParameter(f"flow grid {flow.grid} and field grid {g0.grid} differ")


def inviscid_apply(flow, g0, k, t):
    """Pointwise multiplication by exp(-i k t u(y)).

    Refuses (UnderResolved) when |k t| max|du| > pi: neighbouring samples would
    then differ in phase by more than half a turn.
    """
    _check_grid(flow, g0)
    if k == 0 or int(k) != k:
        raise BadParameter(f"k must be a nonzero integer, got {k}")
    du = flow.max_increment()
    phase = abs(k * t) * du
    if phase > np.pi:
        required = int(2 ** np.ceil(np.log2(flow.grid.n * phase / np.pi)))
        raise UnderResolved(
            f"|k t| max|du| = {phase:.3g} > pi at t={t}",
            max_usable=np.pi / (abs(k) * du),
            required_n=required,
        )
    return ComplexField(g0.grid, g0.values * np.exp(-1j * k * t * flow.values))


def step_limit(flow, xi):
    """Largest step for which exp(-i xi u dt) turns by at most 0.2 rad."""
    top = abs(xi) * float(np.max(np.abs(flow.values)))
    return np.inf if top == 0 else PHASE_PER_STEP / top


def _tail_fraction(ghat2):
    n = ghat2.size
    eta = np.abs(sfft.fftfreq(n, 1.0 / n))
    total = ghat2.sum()
    return 0.0 if total == 0 else float(ghat2[eta > n / 4].sum() / total)


def evolve_oscillator(flow, g0, xi, nu, record_times, dt=None, s=0.0, stop_below=None, tail_tol=TAIL_TOL, label="L2"):
    """Strang splitting for  g_t + i xi u g = nu g_yy  with real xi (zero allowed).

    Each step applies half a phase exp(-i xi u dt/2), the heat multiplier
    exp(-nu eta^2 dt) in Fourier space, then the other half phase. Steps are
    fitted to land exactly on every record time. ``record_times="steps"``
    records after every step up to the last time given by ``stop_below`` runs.

    Returns (DecayCurve of ||g||_{H^s}, final ComplexField, info dict).
    """
    _check_grid(flow, g0)
    if nu < 0:
        raise BadParameter("nu must be nonnegative")
    limit = step_limit(flow, xi)
    if dt is not None and dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt} exceeds the phase limit {limit:.4g}", max_usable=limit)
    per_step = isinstance(record_times, tuple) and record_times[0] == "steps"
    if per_step:
        t_end, step = record_times[1], min(dt or limit, limit)
        if not np.isfinite(step):
            raise BadParameter("per-step recording needs a finite dt")
        count = int(np.ceil(t_end / step - 1e-9))
        times = np.arange(count + 1) * (t_end / count)
    else:
        times = np.unique(np.concatenate([[0.0], np.asarray(record_times, float)]))
        if times[0] < 0:
            raise BadParameter("record times must be nonnegative")
    n = flow.grid.n
    u = flow.values
    eta2 = sfft.fftfreq(n, 1.0 / n) ** 2
    g = g0.values.copy()
    norms = [_norm_from_values(g, s)]
    worst_tail = 0.0
    cached = (None, None, None)
    stopped = False
    for t0, t1 in zip(times[:-1], times[1:]):
        span = t1 - t0
        if dt is None:
            steps = 1 if not np.isfinite(limit) else int(np.ceil(span / limit - 1e-9))
        else:
            steps = max(1, int(round(span / dt)))
            if span / steps > limit * (1 + 1e-9):
                steps += 1
        h = span / steps
        if cached[0] != h:
            cached = (h, np.exp(-0.5j * xi * h * u), np.exp(-nu * eta2 * h))
        _, half, heat = cached
        for _ in range(steps):
            g *= half
            g = sfft.ifft(sfft.fft(g) * heat)
            g *= half
        norms.append(_norm_from_values(g, s))
        if stop_below is not None and norms[-1] < stop_below:
            stopped = True
            break
    ghat2 = np.abs(sfft.fft(g) / n) ** 2
    worst_tail = _tail_fraction(ghat2)
    if nu > 0 and worst_tail > tail_tol:
        raise UnderResolved(
            f"{worst_tail:.2e} of the energy sits above |eta| = n/4; refine the grid",
            required_n=2 * n,
            tail_fraction=worst_tail,
        )
    curve = DecayCurve(times[: len(norms)], norms, label, {"xi": xi, "nu": nu, "s": s})
    info = {"tail_fraction": worst_tail, "stopped": stopped}
    return curve, ComplexField(g0.grid, g), info


def viscous_evolve(flow, g0, k, nu, t_end, dt=None, record_times=None, s=0.0, tail_tol=TAIL_TOL):
    """Evolve one x-mode k of the shear equation to t_end.

    Negative k runs as the conjugate of the k -> |k| problem. Returns the
    curve of ||g_t||_{H^s} at ``record_times`` (0 is always included) and the
    final field.
    """
    if k == 0 or int(k) != k:
        raise BadParameter(f"k must be a nonzero integer, got {k}")
    if not 0 <= nu <= 1:
        raise BadParameter(f"nu must lie in [0, 1], got {nu}")
    if t_end < 0:
        raise BadParameter("t_end must be nonnegative")
    if record_times is None:
        record_times = np.linspace(0.0, t_end, 65)
    record_times = np.asarray(record_times, float)
    if record_times.size and (record_times.max() > t_end * (1 + 1e-12)):
        raise BadParameter("record times exceed t_end")
    record_times = np.append(record_times[record_times < t_end], t_end)
    if k < 0:
        curve, out, _ = evolve_oscillator(flow, g0.conj(), -k, nu, record_times, dt, s, tail_tol=tail_tol)
        out = out.conj()
    else:
        curve, out, _ = evolve_oscillator(flow, g0, k, nu, record_times, dt, s, tail_tol=tail_tol)
    curve.meta["k"] = int(k)
    return curve, out


def rescale_check(flow, g0, k, nu, t, dt=None):
    """L2 distance between the mode-k run and the rescaled run with k -> sign(k), nu -> nu/|k|, t -> |k| t."""
    _, direct = viscous_evolve(flow, g0, k, nu, t, dt, record_times=[t])
    m = abs(int(k))
    _, scaled = viscous_evolve(flow, g0, int(np.sign(k)), nu / m, t * m, None if dt is None else dt * m, record_times=[t * m])
    return _norm_from_values(direct.values - scaled.values, 0.0)


@dataclass(frozen=True)
class Shear2DResult:
    per_mode: dict
    combined: DecayCurve


def shear2d_evolve(flow, mode_list, nu, t_end, record_times=None, s=0.0, full_laplacian=False, dt=None):
    """Evolve each x-mode of the 2D shear problem independently.

    ``mode_list`` maps k to the initial 1D field. With ``full_laplacian`` the
    x-part of the Laplacian contributes exp(-nu k^2 t) per mode. The combined
    curve is (sum over k of ||mode||_{H^s}^2)^(1/2).
    """
    if 0 in mode_list:
        raise ZeroModePresent("the k = 0 mode is not transported and must be removed")
    if record_times is None:
        record_times = np.linspace(0.0, t_end, 65)
    times = np.unique(np.append(np.asarray(record_times, float), [0.0, t_end]))
    times = times[times <= t_end]
    per_mode = {}
    for k, g0 in sorted(mode_list.items()):
        if nu == 0:
            norms = [sobolev_norm(inviscid_apply(flow, g0, k, t), s) for t in times]
            curve = DecayCurve(times, norms, f"k={k}", {"k": k, "nu": 0.0, "s": s})
        else:
            curve, _ = viscous_evolve(flow, g0, k, nu, t_end, dt, times, s)
        if full_laplacian:
            curve = DecayCurve(curve.abscissae, curve.ordinates * np.exp(-nu * k**2 * curve.abscissae), f"k={k}", dict(curve.meta))
        per_mode[k] = curve
    total = np.sqrt(sum(c.ordinates**2 for c in per_mode.values()))
    combined = DecayCurve(times, total, "combined", {"modes": sorted(per_mode), "nu": nu, "s": s})
    return Shear2DResult(per_mode, combined)
