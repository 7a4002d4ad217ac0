"""Render paper-style plots from simulator sweep CSVs.

Consumes only the public CSV schema emitted by the simulator harness
(one row per sweep point); no simulator internals are imported.  A figure
spec (YAML/JSON) names the input CSVs, row filters, the metric to plot,
and axis ranges.  Rendering is a pure function of (CSV, spec, style
profile): re-running produces byte-identical image files.
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import yaml

# Column layout of the harness sweep CSVs.
SCHEMA = [
    "scenario", "method", "domain", "channel", "transform", "S", "q",
    "rho_db", "snr_db", "trials", "ber", "ber_ci_lo", "ber_ci_hi",
    "served_frac", "mean_rmsse", "seed", "config_hash",
]

FILTER_COLUMNS = ("method", "domain", "channel", "transform", "S", "q", "rho_db")

# Fixed style profile so renders are reproducible byte-for-byte.
STYLE = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "lines.linewidth": 1.4,
    "lines.markersize": 5,
    "legend.fontsize": 8,
}

MARKERS = ["o", "s", "^", "v", "D", "x", "*", "P", "<", ">", "h", "+"]
COLORS = plt.cm.tab10.colors


class FigureError(ValueError):
    """Raised for schema violations, missing rows, or bad specs."""


@dataclass
class FigureSpec:
    """What to plot: inputs, filters, metric, and axes."""

    csvs: list[str]
    metric: str = "ber"  # "ber" | "served_frac"
    filters: dict[str, list[str]] = field(default_factory=dict)
    series_by: list[str] = field(default_factory=lambda: ["S", "method"])
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    title: str = ""

    def __post_init__(self):
        if self.metric not in ("ber", "served_frac"):
            raise FigureError(f"unsupported metric {self.metric!r}")
        bad = [k for k in self.filters if k not in FILTER_COLUMNS]
        if bad:
            raise FigureError(
                f"unsupported filter column(s): {', '.join(bad)}; "
                f"expected a subset of {', '.join(FILTER_COLUMNS)}"
            )
        bad = [k for k in self.series_by if k not in SCHEMA]
        if bad:
            raise FigureError(f"series_by references unknown column(s): {', '.join(bad)}")


def load_spec(path: str) -> FigureSpec:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except FileNotFoundError:
        raise FigureError(f"spec file not found: {path}")
    except yaml.YAMLError as exc:
        raise FigureError(f"{path}: invalid YAML: {exc}")
    if not isinstance(raw, dict) or "csvs" not in raw:
        raise FigureError(f"{path}: spec must be a mapping with a 'csvs' list")
    known = {"csvs", "metric", "filters", "series_by", "xlim", "ylim", "title"}
    unknown = set(raw) - known
    if unknown:
        raise FigureError(f"{path}: unknown spec key(s): {', '.join(sorted(unknown))}")
    filters = {str(k): [str(v) for v in vs] for k, vs in (raw.get("filters") or {}).items()}
    return FigureSpec(
        csvs=[str(c) for c in raw["csvs"]],
        metric=str(raw.get("metric", "ber")),
        filters=filters,
        series_by=[str(s) for s in raw.get("series_by", ["S", "method"])],
        xlim=tuple(raw["xlim"]) if raw.get("xlim") else None,
        ylim=tuple(raw["ylim"]) if raw.get("ylim") else None,
        title=str(raw.get("title", "")),
    )


def load_rows(paths: list[str]) -> list[dict[str, str]]:
    """Read and schema-validate the sweep CSVs."""
    rows: list[dict[str, str]] = []
    for path in paths:
        try:
            fh = open(path, newline="")
        except FileNotFoundError:
            raise FigureError(f"input CSV not found: {path}")
        with fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in SCHEMA if c not in header]
            if missing:
                raise FigureError(
                    f"{path}: missing required column(s): {', '.join(missing)}"
                )
            rows.extend(reader)
    if not rows:
        raise FigureError("no data rows in the input CSVs")
    return rows


def _matches(row: dict[str, str], filters: dict[str, list[str]]) -> bool:
    return all(row[col] in wanted for col, wanted in filters.items())


def build_series(spec: FigureSpec, rows: list[dict[str, str]]):
    """Group filtered rows into plot series keyed by the series_by columns.

    Returns {key_tuple: (snr array, metric array)} with points sorted by
    SNR; series are ordered by cluster size S first, then method, matching
    the legend convention.
    """
    kept = [r for r in rows if _matches(r, spec.filters)]
    if not kept:
        raise FigureError(
            "no rows match the filters "
            + "; ".join(f"{k} in {v}" for k, v in sorted(spec.filters.items()))
        )
    series: dict[tuple, list[tuple[float, float]]] = {}
    for row in kept:
        key = tuple(row[c] for c in spec.series_by)
        x = float(row["snr_db"])
        y = float(row[spec.metric])
        series.setdefault(key, []).append((x, y))

    def sort_key(key):
        parts = dict(zip(spec.series_by, key))
        s_val = parts.get("S")
        s_num = float("inf") if s_val in (None, "inf") else float(s_val)
        return (s_num, parts.get("method", ""), key)

    out = {}
    for key in sorted(series, key=sort_key):
        pts = sorted(series[key])
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        out[key] = (xs, ys)
    return out


def _legend_label(spec: FigureSpec, key: tuple) -> str:
    parts = dict(zip(spec.series_by, key))
    bits = []
    if "method" in parts:
        bits.append(parts["method"].upper())
    if "S" in parts:
        bits.append("ANT" if parts["S"] == "1" else f"S={parts['S']}")
    for col, val in parts.items():
        if col not in ("method", "S"):
            bits.append(f"{col}={val}")
    return ", ".join(bits)


def render(spec: FigureSpec, out_path: str) -> None:
    """Render the figure and write it atomically to ``out_path``."""
    rows = load_rows(spec.csvs)
    series = build_series(spec, rows)

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, (key, (xs, ys)) in enumerate(series.items()):
            ax.plot(
                xs, ys,
                marker=MARKERS[i % len(MARKERS)],
                color=COLORS[i % len(COLORS)],
                label=_legend_label(spec, key),
            )
        ax.set_xlabel("SNR [dB]")
        if spec.metric == "ber":
            ax.set_yscale("log")
            ax.set_ylabel("uncoded BER")
        else:
            ax.set_ylim(0.0, 1.0)
            ax.set_ylabel("fraction of served UEs")
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
        if spec.title:
            ax.set_title(spec.title)
        ax.legend(loc="best")
        fig.tight_layout()

        target = Path(out_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".png.tmp")
        os.close(fd)
        try:
            # Pin the PNG metadata so output bytes depend only on the data,
            # the spec, and the style profile.
            fig.savefig(tmp, format="png", metadata={"Software": "figlib"})
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        finally:
            plt.close(fig)


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Render a sweep-CSV figure.")
    parser.add_argument("--spec", required=True, help="figure spec (YAML/JSON)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        render(load_spec(args.spec), args.out)
    except FigureError as exc:
        print(f"error: {exc}", flush=True)
        return 1
    print(f"wrote {args.out}")
    return 0
