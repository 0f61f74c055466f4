"""Static SVG line and scatter plots from CSV columns.

Output is byte-stable: the SVG id salt is fixed and no creation date is
written, so the same CSV always renders to the same file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

PLOT_KINDS = ("line", "scatter")


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    x: str
    ys: tuple[str, ...]
    output: str
    labels: tuple[str, ...] = ()
    kind: str = "line"
    title: str = ""

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ConfigError(f"plot kind must be one of {PLOT_KINDS}, got {self.kind!r}")
        if not self.ys:
            raise ConfigError("need at least one y column")
        if self.labels and len(self.labels) != len(self.ys):
            raise ConfigError("number of labels must match number of y columns")


def read_columns(path: str | Path, names) -> dict[str, np.ndarray]:
    """Numeric columns ``names`` of a headed CSV; errors on missing file, column or rows."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"CSV not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if not header:
            raise ConfigError(f"{p}: empty CSV")
        missing = [n for n in names if n not in header]
        if missing:
            raise ConfigError(f"{p}: missing column(s) {', '.join(missing)}; have {', '.join(header)}")
        rows = list(reader)
    if not rows:
        raise ConfigError(f"{p}: no data rows")
    out = {}
    for n in names:
        try:
            out[n] = np.array([float(r[n]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{p}: column {n} is not numeric") from exc
    return out


def render(spec: PlotSpec) -> Path:
    """Draw ``spec`` and write it as SVG. Nothing is written if the input is invalid."""
    cols = read_columns(spec.csv_path, (spec.x, *spec.ys))

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = spec.labels or spec.ys
    with matplotlib.rc_context({"svg.hashsalt": "capsule", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            for y, label in zip(spec.ys, labels):
                if spec.kind == "line":
                    ax.plot(cols[spec.x], cols[y], lw=1.0, label=label)
                else:
                    ax.scatter(cols[spec.x], cols[y], s=4, alpha=0.6, label=label)
            if spec.kind == "scatter":
                lo = min(float(cols[spec.x].min()), *(float(cols[y].min()) for y in spec.ys))
                hi = max(float(cols[spec.x].max()), *(float(cols[y].max()) for y in spec.ys))
                ax.plot([lo, hi], [lo, hi], "k--", lw=0.8, label="y = x")
            ax.set_xlabel(spec.x)
            ax.set_ylabel(", ".join(spec.ys))
            if spec.title:
                ax.set_title(spec.title)
            ax.grid(True, lw=0.3)
            ax.legend()
            fig.tight_layout()
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return out
