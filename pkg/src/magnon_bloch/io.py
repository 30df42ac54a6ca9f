"""CSV/JSON writers with deterministic formatting, the run manifest, and plot-script emission."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _fmt(x) -> str:
    return repr(float(x))


def write_columns(path: Path, header: Sequence[str], columns: Iterable[np.ndarray]) -> Path:
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([_fmt(v) for v in row])
    return path


def write_time_table(path: Path, times: np.ndarray, bloch_period: float | None,
                     names: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    """Rows per time sample: ``t``, ``t_over_TB`` (if a Bloch period exists), then ``names``."""
    header = ["t"]
    cols = [times]
    if bloch_period is not None:
        header.append("t_over_TB")
        cols.append(times / bloch_period)
    return write_columns(path, header + list(names), cols + list(columns))


def write_matrix(path: Path, sites: np.ndarray, matrix: np.ndarray) -> Path:
    """Square site-by-site matrix with physical labels along both axes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["site"] + [str(int(s)) for s in sites])
        for s, row in zip(sites, matrix):
            writer.writerow([str(int(s))] + [_fmt(v) for v in row])
    return path


def read_table(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_json(path: Path, payload) -> Path:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _version(dist: str) -> str:
    try:
        return metadata.version(dist)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(out: Path, command: str, parameters: dict, files: Iterable[Path], extra: dict | None = None) -> Path:
    files = sorted(Path(f) for f in files)
    payload = {
        "command": command,
        "parameters": parameters,
        "versions": {
            "magnon_bloch": _version("artifact"),
            "numpy": np.__version__,
            "scipy": _version("scipy"),
            "python": platform.python_version(),
        },
        "files": {str(f.relative_to(out)): sha256(f) for f in files},
    }
    if extra:
        payload["results"] = extra
    return write_json(out / "manifest.json", payload)


PLOT_TEMPLATE = '''"""Plots for the CSV files in this directory. Requires pandas and matplotlib."""
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

here = Path(__file__).resolve().parent
for name in {tables!r}:
    path = here / name
    if not path.exists():
        continue
    df = pd.read_csv(path)
    x = "t_over_TB" if "t_over_TB" in df else df.columns[0]
    ycols = [c for c in df.columns if c not in ("t", "t_over_TB", x)]
    if name == "distribution.csv":
        fig, ax = plt.subplots()
        im = ax.imshow(df[ycols].to_numpy().T, aspect="auto", origin="lower", cmap="viridis",
                       extent=[df[x].iloc[0], df[x].iloc[-1], float(ycols[0]), float(ycols[-1])])
        ax.set_xlabel(x)
        ax.set_ylabel("site")
        fig.colorbar(im, label="Sz")
    else:
        fig, ax = plt.subplots()
        for c in ycols:
            ax.plot(df[x], df[c], label=c)
        ax.set_xlabel(x)
        ax.legend()
    fig.savefig(here / (path.stem + ".png"), dpi=150)
    plt.close(fig)
for path in sorted(here.glob({matrix_glob!r})):
    df = pd.read_csv(path, index_col=0)
    fig, ax = plt.subplots()
    im = ax.imshow(df.to_numpy(), origin="lower", cmap="RdBu_r",
                   extent=[float(df.columns[0]), float(df.columns[-1]), df.index[0], df.index[-1]])
    ax.set_title(path.stem)
    fig.colorbar(im)
    fig.savefig(here / (path.stem + ".png"), dpi=150)
    plt.close(fig)
'''


def write_plot_script(out: Path, tables: Sequence[str], matrix_glob: str = "*_t*.csv") -> Path:
    path = out / "plot.py"
    path.write_text(PLOT_TEMPLATE.format(tables=list(tables), matrix_glob=matrix_glob))
    return path
