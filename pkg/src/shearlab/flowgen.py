"""Velocity profiles on the interval [0, pi] and the torus [-pi, pi).

Flows are immutable samples on a uniform grid together with a small metadata
record that is enough to regenerate them bit for bit.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from scipy.fft import fft

from .errors import BadParameter, EmbeddingFailure, NyquistViolation

# eigenvalues above -EIG_TOL * max are clamped to zero
EIG_TOL = 1e-10
CHOLESKY_MAX_N = 4096


class Domain(str, Enum):
    INTERVAL = "interval"
    TORUS = "torus"


def _is_pow2(n):
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with ``n`` cells.

    Torus grids hold the n points -pi + j*h (right end excluded). Interval
    grids hold the n + 1 nodes j*h, j = 0..n, so both ends of [0, pi] are
    sampled.
    """

    n: int
    domain: Domain = Domain.TORUS

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        if int(self.n) != self.n or self.n < 8:
            raise BadParameter(f"grid needs n >= 8, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.domain is Domain.TORUS and not _is_pow2(self.n):
            raise BadParameter(f"torus grids need a power of two, got {self.n}")

    @classmethod
    def torus(cls, n):
        return cls(n, Domain.TORUS)

    @classmethod
    def interval(cls, n):
        return cls(n, Domain.INTERVAL)

    @property
    def periodic(self):
        return self.domain is Domain.TORUS

    @property
    def left(self):
        return -np.pi if self.periodic else 0.0

    @property
    def right(self):
        return np.pi

    @property
    def length(self):
        return self.right - self.left

    @property
    def spacing(self):
        return self.length / self.n

    @property
    def size(self):
        """Number of stored samples."""
        return self.n if self.periodic else self.n + 1

    @property
    def points(self):
        return self.left + np.arange(self.size) * self.spacing

    def to_dict(self):
        return {"n": self.n, "domain": self.domain.value}


@dataclass(frozen=True)
class RandomSeed:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2**64:
                raise BadParameter(f"{name} must be a 64-bit unsigned integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def rng(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, stream):
        return RandomSeed(self.seed, stream)

    def to_list(self):
        return [self.seed, self.stream]

    @classmethod
    def coerce(cls, value):
        if value is None or isinstance(value, RandomSeed):
            return value
        if isinstance(value, (list, tuple)):
            return cls(*value)
        return cls(int(value))


@dataclass(frozen=True, eq=False)
class FlowSample:
    grid: Grid1D
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise BadParameter(f"expected {self.grid.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise BadParameter("flow values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def points(self):
        return self.grid.points

    def evaluate(self, y):
        """Piecewise-linear evaluation.

        Torus flows are extended periodically; interval flows continue the
        first and last segments affinely outside [0, pi].
        """
        y = np.asarray(y, dtype=float)
        g = self.grid
        if g.periodic:
            return np.interp(y, g.points, self.values, period=2 * np.pi)
        x = (y - g.left) / g.spacing
        j = np.clip(np.floor(x).astype(np.int64), 0, g.n - 1)
        s = x - j
        return self.values[j] * (1 - s) + self.values[j + 1] * s

    def increments(self):
        """Adjacent differences, including the wrap-around one on the torus."""
        if self.grid.periodic:
            return np.diff(np.append(self.values, self.values[0]))
        return np.diff(self.values)

    def max_increment(self):
        return float(np.max(np.abs(self.increments())))

    def descriptor(self):
        m = self.meta
        return {
            "generator": m.get("generator", "custom"),
            "params": m.get("params", {}),
            "seed": m.get("seed"),
            "n": self.grid.n,
            "domain": self.grid.domain.value,
        }

    def with_values(self, values, generator="derived", **params):
        return FlowSample(self.grid, values, {"generator": generator, "params": params, "seed": None})

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["y", "u"])
        for y, u in zip(self.points, self.values):
            w.writerow([repr(float(y)), repr(float(u))])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(self.descriptor(), sort_keys=True)


def _meta(generator, params, seed=None):
    return {"generator": generator, "params": params, "seed": seed.to_list() if seed else None}


def weierstrass(alpha, lam, n_terms, grid):
    """Truncated sum  W(y) = sum_j lam^(-j alpha) cos(lam^j y),  j < n_terms."""
    if not 0 < alpha < 1:
        raise BadParameter(f"alpha must lie in (0, 1), got {alpha}")
    if int(lam) != lam or lam < 2:
        raise BadParameter(f"lambda must be an integer >= 2, got {lam}")
    if int(n_terms) != n_terms or n_terms < 1:
        raise BadParameter(f"n_terms must be a positive integer, got {n_terms}")
    if not grid.periodic:
        raise BadParameter("weierstrass flows live on the torus")
    lam, n_terms = int(lam), int(n_terms)
    top = lam ** (n_terms - 1)
    if 4 * top > grid.n:
        raise NyquistViolation(f"frequency {top} exceeds n/4 = {grid.n // 4}", max_usable=grid.n // 4)
    y = grid.points
    u = np.zeros_like(y)
    for j in range(n_terms):
        u += float(lam) ** (-j * alpha) * np.cos(lam**j * y)
    return FlowSample(grid, u, _meta("weierstrass", {"alpha": alpha, "lambda": lam, "n_terms": n_terms}))


def fgn_autocovariance(hurst, n):
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k**h2)


def _circulant_eigenvalues(r):
    row = np.concatenate([r, r[-2:0:-1]])
    return fft(row).real


def sample_fbm(hurst, grid, seed):
    """One fBm path on an interval grid, started at 0.

    Increments are fractional Gaussian noise drawn by circulant embedding;
    if the embedding is not nonnegative definite, small grids fall back to a
    Cholesky factor of the exact covariance.
    """
    if not 0 < hurst < 1:
        raise BadParameter(f"hurst must lie in (0, 1), got {hurst}")
    if grid.periodic:
        raise BadParameter("fBm is sampled on the interval [0, pi]; use symmetrize for the torus")
    seed = RandomSeed.coerce(seed)
    n = grid.n
    rng = seed.rng()
    r = fgn_autocovariance(hurst, n)
    lam = _circulant_eigenvalues(r)
    top = lam.max()
    if lam.min() >= -EIG_TOL * top:
        lam = np.clip(lam, 0.0, None)
        m = lam.size
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        noise = fft(np.sqrt(lam / m) * z).real[:n]
    elif n <= CHOLESKY_MAX_N:
        cov = scipy.linalg.toeplitz(r[:n])
        noise = scipy.linalg.cholesky(cov, lower=True) @ rng.standard_normal(n)
    else:
        raise EmbeddingFailure(f"circulant embedding has eigenvalue {lam.min():.3e} and n={n} is too large for Cholesky")
    path = np.concatenate([[0.0], np.cumsum(noise * grid.spacing**hurst)])
    return FlowSample(grid, path, _meta("fbm", {"hurst": hurst}, seed))


def symmetrize(flow):
    """Even extension y -> flow(|y|) from [0, pi] onto the torus with 2n points."""
    g = flow.grid
    if g.periodic:
        raise BadParameter("symmetrize expects an interval flow")
    n = g.n
    out = Grid1D.torus(2 * n)
    idx = np.abs(np.arange(2 * n) - n)
    return FlowSample(out, flow.values[idx], {"generator": "symmetrize", "params": {"source": flow.descriptor()}, "seed": None})


def analytic_flow(kind, grid, c=0.0, k0=1, coefficients=()):
    """Closed-form profiles.

    kind is one of ``constant`` (value c), ``linear`` (u = y), ``sine``
    (sin(k0 y)) or ``custom_trig`` with ``coefficients`` a list of
    (frequency, cos amplitude, sin amplitude) triples.
    """
    y = grid.points
    if kind == "constant":
        u = np.full_like(y, float(c))
        params = {"c": float(c)}
    elif kind == "linear":
        u = y.copy()
        params = {}
    elif kind == "sine":
        _check_freq(k0, grid)
        u = np.sin(k0 * y)
        params = {"k0": k0}
    elif kind == "custom_trig":
        coefficients = [tuple(map(float, t)) for t in coefficients]
        u = np.zeros_like(y)
        for freq, a, b in coefficients:
            _check_freq(freq, grid)
            u += a * np.cos(freq * y) + b * np.sin(freq * y)
        params = {"coefficients": [list(t) for t in coefficients]}
    else:
        raise BadParameter(f"unknown analytic flow {kind!r}")
    return FlowSample(grid, u, _meta(kind, params))


def _check_freq(freq, grid):
    if grid.periodic and abs(freq) > grid.n / 4:
        raise NyquistViolation(f"frequency {freq} exceeds n/4 = {grid.n // 4}", max_usable=grid.n // 4)


def _cumtrapz(u, h):
    return np.concatenate([[0.0], np.cumsum(0.5 * h * (u[1:] + u[:-1]))])


def primitive(flow):
    """Trapezoid primitive, zero at the left end of the domain."""
    g = flow.grid
    psi = _cumtrapz(flow.values, g.spacing)
    return FlowSample(g, psi, {"generator": "primitive", "params": {"source": flow.descriptor()}, "seed": None})


def extended_nodes(flow, upto):
    """Grid nodes from the left end up to at least ``upto`` with u and psi.

    Torus flows repeat periodically. Interval flows beyond pi continue the
    last segment affinely. psi is the trapezoid primitive of the extension.
    """
    g = flow.grid
    h = g.spacing
    count = max(g.size, int(np.ceil((upto - g.left) / h - 1e-9)) + 2)
    j = np.arange(count)
    if g.periodic:
        u = flow.values[j % g.n]
    else:
        v = flow.values
        u = np.empty(count)
        inside = j <= g.n
        u[inside] = v[j[inside]]
        u[~inside] = v[-1] + (j[~inside] - g.n) * (v[-1] - v[-2])
    x = g.left + j * h
    return x, u, _cumtrapz(u, h)


def flow_from_spec(spec, n=None):
    """Build a flow from a dict such as ``{"kind": "fbm", "hurst": 0.5, "seed": 3}``.

    Rough flows (fbm) are sampled on [0, pi] with n/2 cells and symmetrized
    onto the torus unless ``domain`` asks for the interval.
    """
    spec = dict(spec)
    kind = spec.pop("kind")
    n = int(spec.pop("n", n or 2**14))
    domain = Domain(spec.pop("domain", "interval" if kind == "linear" else "torus"))
    if kind == "zero":
        kind, spec = "constant", {"c": 0.0}
    if kind in ("constant", "linear", "sine", "custom_trig"):
        return analytic_flow(kind, Grid1D(n, domain), **spec)
    if kind == "weierstrass":
        return weierstrass(spec.get("alpha", 0.5), spec.get("lambda", 2), spec.get("n_terms") or _max_terms(spec.get("lambda", 2), n), Grid1D.torus(n))
    if kind == "fbm":
        seed = spec.get("seed", 0)
        if domain is Domain.INTERVAL:
            return sample_fbm(spec.get("hurst", 0.5), Grid1D.interval(n), seed)
        return symmetrize(sample_fbm(spec.get("hurst", 0.5), Grid1D.interval(n // 2), seed))
    raise BadParameter(f"unknown flow kind {kind!r}")


def _max_terms(lam, n):
    terms = 1
    while 4 * lam**terms <= n:
        terms += 1
    return terms


def regenerate(descriptor):
    """Rebuild a flow from the JSON descriptor produced by ``FlowSample.descriptor``."""
    d = descriptor if isinstance(descriptor, dict) else json.loads(descriptor)
    gen, p = d["generator"], d.get("params", {})
    grid = Grid1D(d["n"], d["domain"])
    if gen == "weierstrass":
        return weierstrass(p["alpha"], p["lambda"], p["n_terms"], grid)
    if gen == "fbm":
        return sample_fbm(p["hurst"], grid, RandomSeed.coerce(d["seed"]))
    if gen == "symmetrize":
        return symmetrize(regenerate(p["source"]))
    if gen == "primitive":
        return primitive(regenerate(p["source"]))
    if gen in ("constant", "linear", "sine", "custom_trig"):
        return analytic_flow(gen, grid, **p)
    raise BadParameter(f"descriptor generator {gen!r} cannot be regenerated")
