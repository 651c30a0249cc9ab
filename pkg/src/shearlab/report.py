"""Merge JSON artifacts of a run directory into summary.csv, optionally with log-log SVG plots.

Plots are drawn from the CSV files already in the directory, so they show
exactly the numbers the user receives. matplotlib is imported only here.
"""

import csv
import io
import json
from pathlib import Path

from .errors import BadParameter

# x and y columns of the CSV files that can be plotted on log-log axes
PLOTTABLE = [("abscissa", "ordinate"), ("nu", "tau"), ("xi", "abs_phi")]


def _scalars(prefix, obj, out):
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            _scalars(name + ".", value, out)
        elif isinstance(value, (int, float, str, bool)) or value is None:
            out[name] = value


def summary_rows(src):
    rows = []
    for path in sorted(Path(src).glob("*.json")):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise BadParameter(f"{path.name} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or "schema_version" not in doc or "result" not in doc:
            continue
        row = {"file": path.name, "command": doc.get("command"), "config_hash": doc.get("config_hash")}
        result = {k: v for k, v in doc["result"].items() if k not in ("table", "curve", "scan_spec")}
        _scalars("", result, row)
        rows.append(row)
    return rows


def write_summary(rows, dest):
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    path = Path(dest) / "summary.csv"
    path.write_text(buf.getvalue(), newline="")
    return path


def _read_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return None
    for x, y in PLOTTABLE:
        if x in rows[0] and y in rows[0]:
            pts = []
            for r in rows:
                try:
                    a, b = float(r[x]), float(r[y])
                except ValueError:
                    continue
                if a > 0 and b > 0:
                    pts.append((a, b))
            return (x, y, pts) if pts else None
    return None


def plot_csvs(src, dest):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise BadParameter("plots need matplotlib; install the 'plot' extra") from None
    written = []
    for path in sorted(Path(src).glob("*.csv")):
        if path.name == "summary.csv":
            continue
        cols = _read_columns(path)
        if cols is None:
            continue
        x, y, pts = cols
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3)
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        ax.set_title(path.stem)
        fig.tight_layout()
        out = Path(dest) / f"{path.stem}.svg"
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(out)
    return written


def build_report(src, dest=None, plots=False):
    src = Path(src)
    if not src.is_dir():
        raise BadParameter(f"{src} is not a directory")
    dest = src if dest is None else Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    path = write_summary(summary_rows(src), dest)
    if plots:
        plot_csvs(src, dest)
    return path
