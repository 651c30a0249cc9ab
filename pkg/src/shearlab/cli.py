"""Command line entry point: ``shearlab <command> [options]``.

Settings are resolved in this order, later wins: built-in defaults, the
``--config`` file, command-line flags. A missing seed falls back to the
SHEARLAB_SEED environment variable, then to 0.

Exit status is 0 on success, 2 for invalid input and 3 when a grid or step
is too coarse for the request; errors are also written to stderr as JSON.
"""

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import functionals as fn
from .errors import BadParameter, ShearlabError
from .flowgen import flow_from_spec
from .ratelab import config_hash, dissipation_experiment, mixing_experiment, wei_bound_experiment, SweepTable
from .spectral import ComplexField
from .stochastic import BrownianBundle, fdr_check

SCHEMA_VERSION = 1
COMMANDS = ("gen", "diag", "mix", "dissipate", "fdr", "wei", "sweep", "report")
FUNCTIONALS = ("phi", "rho-norm", "gamma-wei", "besov", "roughness", "pvar", "omega1")
DEFAULT_N = {"mix": 2**18, "fdr": 256, "sweep": 2**18}
DIAG_N = 2**14
# settings that change where or how fast results are produced, not what they are
EXECUTION_FIELDS = ("out", "jobs", "config")


@dataclasses.dataclass
class ExperimentConfig:
    command: str = ""
    schema_version: int = SCHEMA_VERSION
    flow: str = "fbm"
    c: float = 0.0
    k0: int = 1
    w_alpha: float = None
    lam: int = 2
    n_terms: int = None
    hurst: float = 0.5
    seed: int = None
    n: int = None
    domain: str = None
    alpha: float = None
    nu: str = None
    xi: float = 1.0
    k: int = 1
    times: str = None
    t: float = 5.0
    g0: str = "mode1"
    functional: str = None
    gamma: float = 0.55
    rho: float = 0.9
    p: float = 1.0
    delta: str = None
    delta_levels: int = None
    depth: int = 8
    xi_max: float = 1e4
    interval: str = None
    m: int = 10000
    steps: int = 1000
    y_stride: int = 4
    q: float = float(np.exp(-1.0))
    truncate: bool = True
    experiment: str = "mix"
    seeds: str = "0:8"
    input: str = None
    plots: bool = False
    out: str = None
    jobs: int = 1

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise BadParameter(f"unknown config fields: {', '.join(unknown)}")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise BadParameter(f"unsupported schema_version {version}")
        return cls(**data)

    @classmethod
    def from_text(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BadParameter(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise BadParameter("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_text(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def resolved(self):
        """Settings that determine the results, used for hashing and embedding."""
        return {k: v for k, v in self.to_dict().items() if k not in EXECUTION_FIELDS}


def parse_range(text, log=True):
    """``a:b:count`` gives count points from a to b (log-spaced by default); ``x,y,z`` a list."""
    text = str(text)
    try:
        if ":" in text:
            a, b, count = text.split(":")
            a, b, count = float(a), float(b), int(count)
            if count < 1:
                raise ValueError
            if log:
                if a <= 0 or b <= 0:
                    raise ValueError
                return np.logspace(np.log10(a), np.log10(b), count)
            return np.linspace(a, b, count)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise BadParameter(f"cannot read {text!r} as a:b:count or a comma list") from None


def parse_seeds(text):
    text = str(text)
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b)))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise BadParameter(f"cannot read seeds {text!r}") from None


def build_flow(cfg, seed=None):
    n = cfg.n or DEFAULT_N.get(cfg.command, DIAG_N)
    spec = {"kind": cfg.flow, "n": n}
    if cfg.domain:
        spec["domain"] = cfg.domain
    if cfg.flow == "constant":
        spec["c"] = cfg.c
    elif cfg.flow == "sine":
        spec["k0"] = cfg.k0
    elif cfg.flow == "weierstrass":
        spec.update({"alpha": weierstrass_alpha(cfg), "lambda": cfg.lam, "n_terms": cfg.n_terms})
    elif cfg.flow == "fbm":
        spec.update({"hurst": cfg.hurst, "seed": cfg.seed if seed is None else seed})
    return flow_from_spec(spec)


def weierstrass_alpha(cfg):
    return cfg.w_alpha if cfg.w_alpha is not None else (cfg.alpha if cfg.alpha is not None else 0.5)


def nominal_alpha(cfg):
    """Regularity used for the predicted exponents; None for flows with no prediction."""
    if cfg.alpha is not None:
        return cfg.alpha
    if cfg.flow == "fbm":
        return cfg.hurst
    if cfg.flow == "weierstrass":
        return weierstrass_alpha(cfg)
    return None


def build_g0(cfg, grid):
    if cfg.g0.startswith("mode"):
        return ComplexField.mode(grid, int(cfg.g0[4:] or 1))
    if cfg.g0 == "one":
        return ComplexField.mode(grid, 0)
    raise BadParameter(f"unknown g0 {cfg.g0!r}; use modeK or one")


def _float_list(text, default):
    return default if text is None else parse_range(text)


def cmd_gen(cfg):
    flow = build_flow(cfg)
    return {"flow": flow.descriptor(), "max_abs": float(np.max(np.abs(flow.values)))}, {"flow.csv": flow.to_csv()}


def cmd_diag(cfg):
    if cfg.functional not in FUNCTIONALS:
        raise BadParameter(f"--functional must be one of {', '.join(FUNCTIONALS)}")
    flow = build_flow(cfg)
    f = cfg.functional
    alpha = cfg.alpha
    flags = []
    files = {}
    scan = {"n": flow.grid.n, "domain": flow.grid.domain.value}
    if f == "phi":
        a, b = parse_range(cfg.interval, log=False) if cfg.interval else (flow.grid.left, flow.grid.right)
        xis = fn.default_xi_grid(cfg.xi_max)
        vals = fn.osc_integral(flow, xis, (a, b))
        rows = [{"xi": float(x), "abs_phi": float(abs(v)), "re": float(v.real), "im": float(v.imag)} for x, v in zip(xis, vals)]
        files["phi.csv"] = SweepTable("xi", rows, config=cfg.resolved()).to_csv()
        value = float(np.max(np.abs(vals) * xis**cfg.rho))
        scan.update(interval=[a, b], xi_max=cfg.xi_max)
    elif f == "rho-norm":
        est = fn.rho_irregularity_norm(flow, cfg.gamma, cfg.rho, fn.default_xi_grid(cfg.xi_max), cfg.depth)
        value = est.value
        scan.update(est.to_dict())
        flags.append("lower_bound")
    elif f == "gamma-wei":
        est = fn.gamma_wei(flow, _need(alpha, "alpha"), cfg.delta_levels or 6)
        value = est.value
        scan.update(est.to_dict())
        flags.append("upper_bound")
    elif f == "besov":
        value = fn.besov_seminorm(flow, _need(alpha, "alpha"), cfg.p if cfg.p != float("inf") else np.inf)
        flags.append("lower_bound")
    elif f == "roughness":
        value = fn.holder_roughness(flow, _need(alpha, "alpha"), cfg.delta_levels or 4)
    elif f == "pvar":
        value = fn.p_variation(flow, cfg.p)
    else:
        value = fn.omega1(flow, float(cfg.delta or 0.1))
    params = {"alpha": alpha, "gamma": cfg.gamma, "rho": cfg.rho, "p": cfg.p, "delta": cfg.delta}
    return {"functional": f, "params": params, "value": value, "scan_spec": scan, "flags": flags}, files


def _need(value, name):
    if value is None:
        raise BadParameter(f"--{name} is required here")
    return value


def _mix_one(cfg, seed):
    flow = build_flow(cfg, seed)
    times = _float_list(cfg.times, np.logspace(1, 3, 41))
    res = mixing_experiment(flow, nominal_alpha(cfg), cfg.k, 0.5, times, build_g0(cfg, flow.grid), on_underresolved="truncate" if cfg.truncate else "raise")
    return res


def cmd_mix(cfg):
    res = _mix_one(cfg, None)
    out = res.to_dict()
    out["note"] = "single flow sample; medians over seeds come from the sweep command"
    return out, {"curve.csv": res.curve.to_csv()}


def _dissipate_one(cfg, seed):
    flow = build_flow(cfg, seed)
    nus = _float_list(cfg.nu, np.logspace(-3, -6, 7))
    return dissipation_experiment(flow, nominal_alpha(cfg), cfg.k, nus, build_g0(cfg, flow.grid), cfg.q, config=cfg.resolved())


def cmd_dissipate(cfg):
    table, fit, predicted = _dissipate_one(cfg, None)
    out = {"table": table.to_dict(), "fit": fit.to_dict(), "predicted_exponent": predicted}
    return out, {"table.csv": table.to_csv()}


def cmd_fdr(cfg):
    flow = build_flow(cfg)
    g0 = build_g0(cfg, flow.grid)
    nu = float(_float_list(cfg.nu, [1e-2])[0])
    seed = cfg.seed if cfg.seed is not None else 0
    bundle = BrownianBundle.generate(cfg.m, cfg.steps, cfg.t / cfg.steps, seed)
    rep = fdr_check(flow, g0, cfg.xi, nu, cfg.t, bundle, y_stride=cfg.y_stride)
    return rep.to_dict(), {}


def cmd_wei(cfg):
    flow = build_flow(cfg)
    nu = float(_float_list(cfg.nu, [1e-2])[0])
    times = _float_list(cfg.times, np.linspace(0.0, 200.0, 11))
    deltas = parse_range(cfg.delta, log=False) if cfg.delta else np.array([0.1, 0.2, 0.4])
    table = wei_bound_experiment(flow, nu, times, deltas, config=cfg.resolved())
    ok = all(r["ok"] for r in table.rows)
    return {"table": table.to_dict(), "all_ok": ok}, {"table.csv": table.to_csv()}


def _sweep_cell(args):
    cfg, seed = args
    if cfg.experiment == "mix":
        res = _mix_one(cfg, seed)
        return {"seed": seed, "exponent": res.fit.exponent, "predicted": res.predicted, "window": list(res.fit.window), "truncated_at": res.truncated_at}
    table, fit, predicted = _dissipate_one(cfg, seed)
    return {"seed": seed, "exponent": fit.exponent, "predicted": predicted, "window": list(fit.window), "truncated_at": None}


def cmd_sweep(cfg):
    if cfg.experiment not in ("mix", "dissipate"):
        raise BadParameter("--experiment must be mix or dissipate")
    seeds = parse_seeds(cfg.seeds)
    cells = [(cfg, s) for s in seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    table = SweepTable("seed", rows, config=cfg.resolved())
    median = float(np.median(table.column("exponent")))
    out = {"table": table.to_dict(), "median_exponent": median, "predicted_exponent": rows[0]["predicted"] if rows else None}
    out["note"] = "per-seed fits summarised by their median"
    return out, {"table.csv": table.to_csv()}


def cmd_report(cfg):
    from .report import build_report

    src = Path(_need(cfg.input, "input"))
    dest = Path(cfg.out) if cfg.out else src
    summary = build_report(src, dest, plots=cfg.plots)
    return {"summary": str(summary), "plots": cfg.plots}, {}


HANDLERS = {"gen": cmd_gen, "diag": cmd_diag, "mix": cmd_mix, "dissipate": cmd_dissipate, "fdr": cmd_fdr, "wei": cmd_wei, "sweep": cmd_sweep, "report": cmd_report}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadParameter(message)


def make_parser():
    parser = _Parser(prog="shearlab", description="Rough shear flow laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--flow", choices=["zero", "constant", "linear", "sine", "weierstrass", "fbm"])
        p.add_argument("--c", type=float, help="value of the constant flow")
        p.add_argument("--k0", type=int, help="frequency of the sine flow")
        p.add_argument("--w-alpha", dest="w_alpha", type=float, help="Weierstrass regularity (defaults to --alpha)")
        p.add_argument("--lambda", dest="lam", type=int)
        p.add_argument("--n-terms", dest="n_terms", type=int)
        p.add_argument("--hurst", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--domain", choices=["interval", "torus"])
        p.add_argument("--alpha", type=float)
        p.add_argument("--nu", help="a value, a list x,y or a log range a:b:count")
        p.add_argument("--xi", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--times", help="a:b:count (log-spaced) or a list")
        p.add_argument("--t", type=float)
        p.add_argument("--g0", help="modeK for e^{iKy}, or one")
        p.add_argument("--functional", choices=FUNCTIONALS)
        p.add_argument("--gamma", type=float)
        p.add_argument("--rho", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--delta")
        p.add_argument("--delta-levels", dest="delta_levels", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--xi-max", dest="xi_max", type=float)
        p.add_argument("--interval", help="a:b:2 endpoints for phi")
        p.add_argument("--m", type=int, help="Monte Carlo paths")
        p.add_argument("--steps", type=int, help="Monte Carlo time steps")
        p.add_argument("--y-stride", dest="y_stride", type=int)
        p.add_argument("--q", type=float)
        p.add_argument("--no-truncate", dest="truncate", action="store_const", const=False)
        p.add_argument("--experiment", choices=["mix", "dissipate"])
        p.add_argument("--seeds", help="a:b or a list")
        p.add_argument("--in", dest="input")
        p.add_argument("--plots", action="store_const", const=True)
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int)
    return parser


def resolve_config(argv, environ=None):
    environ = os.environ if environ is None else environ
    args = make_parser().parse_args(argv)
    cfg = ExperimentConfig(command=args.command)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise BadParameter(f"cannot read config: {exc}") from None
        cfg = ExperimentConfig.from_text(text)
        if cfg.command and cfg.command != args.command:
            raise BadParameter(f"config is for {cfg.command!r}, not {args.command!r}")
        cfg.command = args.command
    for name in ExperimentConfig.field_names():
        value = getattr(args, name, None)
        if value is not None and name not in ("command", "schema_version"):
            setattr(cfg, name, value)
    if cfg.flow == "zero":
        cfg.flow, cfg.c = "constant", 0.0
    if cfg.seed is None and environ.get("SHEARLAB_SEED"):
        try:
            cfg.seed = int(environ["SHEARLAB_SEED"])
        except ValueError:
            raise BadParameter("SHEARLAB_SEED must be an integer") from None
    if cfg.seed is None:
        cfg.seed = 0
    if cfg.n is None and cfg.command != "report":
        cfg.n = DEFAULT_N.get(cfg.command, DIAG_N)
    return cfg


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def run(argv=None, environ=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv, environ)
        result, files = HANDLERS[cfg.command](cfg)
        artifact = {
            "schema_version": SCHEMA_VERSION,
            "command": cfg.command,
            "config": cfg.resolved(),
            "config_hash": config_hash(cfg.resolved()),
            "result": result,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        text = _dump(artifact)
        if cfg.out and cfg.command != "report":
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{cfg.command}.json").write_text(text)
            for name, body in files.items():
                (out / f"{cfg.command}_{name}").write_text(body, newline="")
        stdout.write(text)
        return 0
    except ShearlabError as exc:
        stderr.write(json.dumps(exc.to_dict(), default=_default) + "\n")
        return exc.exit_code


def main():
    sys.exit(run())
