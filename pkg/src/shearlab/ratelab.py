"""Power-law fits, dissipation times and the rate experiments built on them."""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, NoCrossing, NonPositiveOrdinate, TooFewPoints, UnderResolved, ZeroField
from .functionals import omega1, wei_F
from .flowgen import RandomSeed
from .spectral import ComplexField, DecayCurve, evolve_oscillator, inviscid_apply, sobolev_norm, step_limit

MIN_FIT_POINTS = 5
TRANSIENT_DECADES = 0.5


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int

    def to_dict(self):
        return {"exponent": self.exponent, "intercept": self.intercept, "r_squared": self.r_squared, "window": list(self.window), "n_points": self.n_points}


def config_hash(config):
    """sha256 of the canonical JSON form of a config record."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


@dataclass
class SweepTable:
    """Rows keyed by one swept parameter, sorted by it."""

    axis: str
    rows: list
    provenance: str = ""
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r[self.axis])
        if not self.provenance:
            self.provenance = config_hash(self.config)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def to_dict(self):
        return {"axis": self.axis, "rows": self.rows, "config_hash": self.provenance, "config": self.config}

    def to_csv(self):
        keys = []
        for r in self.rows:
            keys += [k for k in r if k not in keys]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys + ["config_hash"], lineterminator="\r\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({**{k: _cell(v) for k, v in r.items()}, "config_hash": self.provenance})
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v, default=_jsonable)
    return v


def fit_power_law(curve, window=None):
    """Least squares of log(ordinate) on log(abscissa) inside ``window`` (inclusive)."""
    a, o = curve.abscissae, curve.ordinates
    lo, hi = window if window is not None else (a[a > 0].min() if np.any(a > 0) else 0.0, a.max())
    sel = (a >= lo) & (a <= hi) & (a > 0)
    if np.count_nonzero(sel) < MIN_FIT_POINTS:
        raise TooFewPoints(f"{np.count_nonzero(sel)} points in window [{lo}, {hi}], need {MIN_FIT_POINTS}")
    if np.any(o[sel] <= 0):
        raise NonPositiveOrdinate("log-log fit needs positive ordinates")
    x, y = np.log(a[sel]), np.log(o[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss == 0 else max(0.0, 1.0 - np.sum(resid**2) / ss)
    return FitResult(float(slope), float(intercept), float(r2), (float(a[sel].min()), float(a[sel].max())), int(np.count_nonzero(sel)))


def dissipation_time(curve, q=np.exp(-1.0)):
    """First time the curve falls to q times its first ordinate.

    The crossing is located by linear interpolation of log(ordinate) between
    the two bracketing records.
    """
    if not 0 < q <= 1:
        raise BadParameter(f"q must lie in (0, 1], got {q}")
    t, o = curve.abscissae, curve.ordinates
    target = q * o[0]
    if q == 1:
        return float(t[0])
    below = np.flatnonzero(o <= target)
    if below.size == 0:
        raise NoCrossing(f"curve stays above {target:.4g} up to t={t[-1]}", lower_bound=float(t[-1]))
    j = int(below[0])
    lo, hi = np.log(o[j - 1]), np.log(o[j]) if o[j] > 0 else -np.inf
    if not np.isfinite(hi):
        return float(t[j])
    w = (lo - np.log(target)) / (lo - hi)
    return float(t[j - 1] + w * (t[j] - t[j - 1]))


@dataclass
class MixingResult:
    curve: DecayCurve
    fit: FitResult
    predicted: float
    truncated_at: float = None

    def to_dict(self):
        return {"curve": self.curve.to_dict(), "fit": self.fit.to_dict(), "predicted_exponent": self.predicted, "truncated_at": self.truncated_at}


def default_window(times):
    """Drop the first half-decade of the time range as transient."""
    times = np.asarray(times, float)
    return (times.min() * 10**TRANSIENT_DECADES, times.max())


def mixing_experiment(flow, alpha_nominal, k=1, s=0.5, times=None, g0=None, window=None, on_underresolved="raise"):
    """||exp(-i k t u) g0||_{H^-s} over ``times`` and its log-log slope.

    With ``on_underresolved="truncate"`` times beyond the phase-resolution limit
    are dropped from the curve (and so from the fit) instead of raising.
    """
    if on_underresolved not in ("raise", "truncate"):
        raise BadParameter("on_underresolved must be 'raise' or 'truncate'")
    times = np.logspace(1, 3, 41) if times is None else np.asarray(times, float)
    g0 = ComplexField.mode(flow.grid, 1) if g0 is None else g0
    limit = np.pi / (abs(k) * flow.max_increment()) if flow.max_increment() > 0 else np.inf
    usable = times[times <= limit]
    truncated = None
    if usable.size < times.size:
        if on_underresolved == "raise":
            raise UnderResolved(f"times beyond t={limit:.4g} are not phase resolved", max_usable=limit)
        truncated = float(limit)
    norms = [sobolev_norm(inviscid_apply(flow, g0, k, t), -s) for t in usable]
    curve = DecayCurve(usable, norms, f"H^-{s}", {"k": k, "alpha_nominal": alpha_nominal})
    win = default_window(times) if window is None else window
    win = (win[0], min(win[1], usable.max()))
    fit = fit_power_law(curve, win)
    predicted = None if not alpha_nominal else -1.0 / (2 * alpha_nominal)
    return MixingResult(curve, fit, predicted, truncated)


def _evolve_to_crossing(flow, g0, k, nu, q, t_end, dt, max_t):
    target = q * g0.norm()
    curve = None
    while True:
        curve, _, _ = evolve_oscillator(flow, g0, k, nu, ("steps", t_end), dt, stop_below=target)
        if curve.ordinates[-1] < target or t_end >= max_t:
            return curve
        t_end = min(2 * t_end, max_t)


def dissipation_experiment(flow, alpha_nominal, k=1, nu_list=None, g0=None, q=np.exp(-1.0), t_end_factor=50.0, steps_floor=4096, dt=None, config=None):
    """Dissipation time tau(nu) on a sweep of diffusivities and its log-log slope.

    Each run records every step and stops at the first crossing. The horizon
    starts at t_end_factor nu^(-a/(a+2)) and doubles, up to 4 / nu, until the
    crossing occurs; cells that never cross are kept with a NoCrossing note
    and left out of the fit. ``alpha_nominal=None`` means no enhancement is
    predicted (slope -1, horizon 4 / nu). Steps never exceed the phase limit
    nor t_end / steps_floor.
    """
    nu_list = np.logspace(-3, -6, 7) if nu_list is None else np.asarray(nu_list, float)
    g0 = ComplexField.mode(flow.grid, 1) if g0 is None else g0
    rows = []
    for nu in nu_list:
        scale = nu ** (-1.0) if alpha_nominal is None else nu ** (-alpha_nominal / (alpha_nominal + 2))
        t_end = t_end_factor * scale if alpha_nominal is not None else 4.0 / nu
        step = min(dt or np.inf, step_limit(flow, k), t_end / steps_floor)
        curve = _evolve_to_crossing(flow, g0, k, nu, q, t_end, step, 4.0 / nu)
        try:
            tau = dissipation_time(curve, q)
            rows.append({"nu": float(nu), "tau": tau, "dt": float(step), "note": ""})
        except NoCrossing as exc:
            rows.append({"nu": float(nu), "tau": float("nan"), "dt": float(step), "note": f"NoCrossing(lower_bound={exc.lower_bound})"})
    predicted = -1.0 if alpha_nominal is None else -alpha_nominal / (alpha_nominal + 2)
    cfg = dict(config or {}, flow=flow.descriptor(), alpha_nominal=alpha_nominal, k=k, q=q, nu_list=[float(v) for v in nu_list])
    table = SweepTable("nu", rows, config=cfg)
    good = [r for r in table.rows if np.isfinite(r["tau"])]
    if len(good) < 4:
        raise TooFewPoints(f"only {len(good)} sweep cells crossed the threshold, need 4")
    curve = DecayCurve([r["nu"] for r in good], [r["tau"] for r in good], "tau")
    fit = _fit_any(curve)
    return table, fit, predicted


def _fit_any(curve):
    x, y = np.log(curve.abscissae), np.log(curve.ordinates)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss == 0 else max(0.0, 1.0 - np.sum(resid**2) / ss)
    return FitResult(float(slope), float(intercept), float(r2), (float(curve.abscissae.min()), float(curve.abscissae.max())), len(curve))


def probe_ensemble(grid, count=16, seed=0):
    """e^{iy} followed by ``count`` random trigonometric fields with zero mean."""
    rng = RandomSeed.coerce(seed).rng()
    probes = [ComplexField.mode(grid, 1)]
    for _ in range(count):
        f = ComplexField.random_trig(grid, rng)
        c = np.array(f.coeffs)
        c[grid.n // 2] = 0.0
        probes.append(ComplexField.from_coeffs(grid, c))
    return probes


def wei_bound_experiment(flow, nu, t_grid, deltas, probes=None, k=1, config=None):
    """Measured max over probes of ||g_t|| / ||g_0|| against the closed-form bound.

    One row per (t, delta) cell with ok = measured <= bound + 1e-8.
    """
    t_grid = np.asarray(t_grid, float)
    probes = probe_ensemble(flow.grid) if probes is None else probes
    measured = np.zeros(t_grid.size)
    for g in probes:
        curve, _, _ = evolve_oscillator(flow, g, k, nu, t_grid)
        ratio = curve.ordinates / curve.ordinates[0]
        idx = np.searchsorted(curve.abscissae, t_grid)
        measured = np.maximum(measured, ratio[idx])
    rows = []
    for delta in np.atleast_1d(deltas):
        w = omega1(flow, delta)
        f = wei_F(delta * w / nu**2)
        for t, m in zip(t_grid, measured):
            bound = float(np.exp(np.pi / 2 - t * nu / delta**2 * f**2))
            rows.append({"t": float(t), "delta": float(delta), "measured": float(m), "bound": bound, "omega1": w, "ok": bool(m <= bound + 1e-8)})
    cfg = dict(config or {}, flow=flow.descriptor(), nu=nu, deltas=[float(d) for d in np.atleast_1d(deltas)], probes=len(probes), k=k)
    return SweepTable("t", rows, config=cfg)


def interpolation_check(field, s1, s2, eps=0.01):
    """||f||_{L2} / (||f||_{H^-s1}^(s2/(s1+s2)) ||f||_{H^(s2+eps)}^(s1/(s1+s2)))."""
    if s1 <= 0 or s2 <= 0:
        raise BadParameter("s1 and s2 must be positive")
    l2 = sobolev_norm(field, 0.0)
    if l2 == 0:
        raise ZeroField("interpolation ratio is undefined for the zero field")
    w = s1 + s2
    return l2 / (sobolev_norm(field, -s1) ** (s2 / w) * sobolev_norm(field, s2 + eps) ** (s1 / w))
