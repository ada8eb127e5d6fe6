"""Waterfall figure construction from sweep CSVs.

Rendering is a pure function of the CSV contents and the spec: all style
state (color cycle, markers, fonts, SVG hash salt) is pinned through an rc
context and no timestamps are embedded, so re-rendering identical inputs
reproduces the output file byte for byte. Points whose error counters are
zero carry no BER estimate; they are drawn as downward carets at the level
of a single hypothetical error (the tightest upper limit the run supports)
instead of being dropped from the curve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib as mpl
import numpy as np
from cycler import cycler
from matplotlib.figure import Figure
from matplotlib.markers import CARETDOWN

__all__ = ["PlotSpec", "PlotError", "build_figure", "render"]


class PlotError(ValueError):
    """Anything wrong with the spec, the CSV inputs, or the output target."""


_COLORS = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
_MARKERS = ("o", "s", "^", "D", "P", "X", "*", "h")
_REF_STYLES = ("--", "-.", ":")

_RC = {
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "grid.linewidth": 0.6,
    "lines.linewidth": 1.3,
    "lines.markersize": 5.0,
    "legend.framealpha": 0.9,
    "svg.hashsalt": "pnplot",
    "axes.prop_cycle": cycler(color=list(_COLORS)),
}

_AXIS_LABELS = {"ebn0_db": "Eb/N0 [dB]", "ber": "BER", "fer": "FER"}


@dataclass(frozen=True)
class PlotSpec:
    """What to read, how to group it into curves, and where to draw it.

    Curves are grouped by the value of ``group_key`` across the union of all
    input CSVs, so one combined file and one file per variant render the
    same figure. Groups named in ``reference_groups`` are drawn as black
    dashed bound curves instead of taking a color/marker from the cycle.
    """

    csv_paths: Tuple[str, ...]
    out_path: str
    group_key: str = "variant"
    x_column: str = "ebn0_db"
    y_column: str = "ber"
    x_limits: Optional[Tuple[float, float]] = None
    y_limits: Tuple[float, float] = (1e-6, 1.0)
    title: str = ""
    reference_groups: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.csv_paths:
            raise PlotError("csv_paths must name at least one input file")
        if not self.out_path:
            raise PlotError("out_path must be set")
        lo, hi = self.y_limits
        if not (0.0 < lo < hi):
            raise PlotError("y_limits must satisfy 0 < low < high")
        if self.x_limits is not None and not self.x_limits[0] < self.x_limits[1]:
            raise PlotError("x_limits must satisfy low < high")

    def as_dict(self) -> Dict:
        return {
            "csv_paths": list(self.csv_paths),
            "out_path": self.out_path,
            "group_key": self.group_key,
            "x_column": self.x_column,
            "y_column": self.y_column,
            "x_limits": list(self.x_limits) if self.x_limits else None,
            "y_limits": list(self.y_limits),
            "title": self.title,
            "reference_groups": list(self.reference_groups),
        }

    @classmethod
    def from_dict(cls, d: Dict) -> "PlotSpec":
        allowed = {
            "csv_paths",
            "out_path",
            "group_key",
            "x_column",
            "y_column",
            "x_limits",
            "y_limits",
            "title",
            "reference_groups",
        }
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise PlotError(f"unknown spec keys {unknown}")
        missing = sorted(k for k in ("csv_paths", "out_path") if k not in d)
        if missing:
            raise PlotError(f"spec is missing required keys {missing}")
        kwargs = dict(d)
        kwargs["csv_paths"] = tuple(str(p) for p in d["csv_paths"])
        if d.get("x_limits") is not None:
            kwargs["x_limits"] = _pair(d["x_limits"], "x_limits")
        if "y_limits" in d:
            kwargs["y_limits"] = _pair(d["y_limits"], "y_limits")
        if "reference_groups" in d:
            kwargs["reference_groups"] = tuple(str(g) for g in d["reference_groups"])
        return cls(**kwargs)


def _pair(value, name: str) -> Tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise PlotError(f"{name} must be a pair of numbers: {exc}") from None
    return (lo, hi)


@dataclass
class _Curve:
    label: str
    x: List[float] = field(default_factory=list)
    y: List[float] = field(default_factory=list)
    frames: List[float] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)


def _float_cell(row: Dict, column: str, path) -> float:
    raw = row.get(column, "")
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise PlotError(f"{path}: non-numeric value {raw!r} in column {column!r}") from None


def _load_curves(spec: PlotSpec) -> List[_Curve]:
    referenced = (spec.group_key, spec.x_column, spec.y_column)
    curves: Dict[str, _Curve] = {}
    total_rows = 0
    for path in spec.csv_paths:
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise PlotError(f"cannot read {path}: {exc}") from None
        with fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise PlotError(f"{path}: empty file, no header row")
            missing = sorted(set(referenced) - set(reader.fieldnames))
            if missing:
                raise PlotError(f"{path}: missing required columns {missing}")
            has_counts = {"frames", "bit_errors"} <= set(reader.fieldnames)
            for row in reader:
                total_rows += 1
                label = row[spec.group_key]
                curve = curves.setdefault(label, _Curve(label))
                curve.x.append(_float_cell(row, spec.x_column, path))
                curve.y.append(_float_cell(row, spec.y_column, path))
                if has_counts:
                    curve.frames.append(_float_cell(row, "frames", path))
                    curve.errors.append(_float_cell(row, "bit_errors", path))
                else:
                    curve.frames.append(math.nan)
                    curve.errors.append(math.nan)
    if total_rows == 0:
        files = ", ".join(str(p) for p in spec.csv_paths)
        raise PlotError(f"no data rows in {files}")
    for curve in curves.values():
        order = np.argsort(np.asarray(curve.x), kind="stable")
        curve.x = list(np.asarray(curve.x)[order])
        curve.y = list(np.asarray(curve.y)[order])
        curve.frames = list(np.asarray(curve.frames)[order])
        curve.errors = list(np.asarray(curve.errors)[order])
    return list(curves.values())


def _bits_per_frame(curve: _Curve) -> Optional[float]:
    """Frame size implied by the rows that did record errors, if any."""
    estimates = [
        e / (y * f)
        for y, f, e in zip(curve.y, curve.frames, curve.errors)
        if y > 0.0 and f > 0 and e > 0 and math.isfinite(f)
    ]
    if not estimates:
        return None
    return float(round(float(np.median(estimates))))


def _limit_level(spec: PlotSpec, frames: float, bits: Optional[float]) -> float:
    """Upper-limit height for a zero-error point: one error over what was seen."""
    floor = spec.y_limits[0]
    if not math.isfinite(frames) or frames <= 0:
        return floor
    if spec.y_column == "fer":
        return max(1.0 / frames, floor)
    if spec.y_column == "ber" and bits:
        return max(1.0 / (frames * bits), floor)
    return floor


def _draw(spec: PlotSpec, curves: Sequence[_Curve]) -> Figure:
    fig = Figure()
    ax = fig.add_subplot()
    plain_index = 0
    ref_index = 0
    for curve in curves:
        if curve.label in spec.reference_groups:
            color = "black"
            marker = None
            style = _REF_STYLES[ref_index % len(_REF_STYLES)]
            ref_index += 1
        else:
            color = _COLORS[plain_index % len(_COLORS)]
            marker = _MARKERS[plain_index % len(_MARKERS)]
            style = "-"
            plain_index += 1
        x = np.asarray(curve.x)
        y = np.asarray(curve.y)
        pos = y > 0.0
        ax.plot(
            x[pos], y[pos], color=color, marker=marker, linestyle=style,
            label=curve.label,
        )
        if (~pos).any():
            bits = _bits_per_frame(curve)
            levels = [
                _limit_level(spec, f, bits)
                for f, keep in zip(curve.frames, ~pos) if keep
            ]
            ax.plot(
                x[~pos], levels, color=color, linestyle="none",
                marker=CARETDOWN, clip_on=False,
            )
    ax.set_yscale("log")
    ax.set_ylim(*spec.y_limits)
    if spec.x_limits is not None:
        ax.set_xlim(*spec.x_limits)
    ax.set_xlabel(_AXIS_LABELS.get(spec.x_column, spec.x_column))
    ax.set_ylabel(_AXIS_LABELS.get(spec.y_column, spec.y_column))
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="lower left")
    return fig


def build_figure(spec: PlotSpec) -> Figure:
    """Load, validate, and draw the figure without touching the output path."""
    curves = _load_curves(spec)
    with mpl.rc_context(_RC):
        return _draw(spec, curves)


def render(spec: PlotSpec) -> Path:
    """Write the figure for `spec`; nothing is written if validation fails."""
    curves = _load_curves(spec)
    out = Path(spec.out_path)
    suffix = out.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise PlotError(f"unsupported output format {suffix!r} (use .png or .svg)")
    with mpl.rc_context(_RC):
        fig = _draw(spec, curves)
        if suffix == ".png":
            fig.savefig(out, format="png")
        else:
            # a None date suppresses the only savefig metadata that varies
            fig.savefig(out, format="svg", metadata={"Date": None})
    return out
