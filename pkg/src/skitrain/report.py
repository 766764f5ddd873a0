"""Analysis assembly and report rendering (markdown, CSV, plot data).

build_analysis turns a list of run records into one machine-readable dict;
the render_* functions turn that dict into the human report. Rendering is
deterministic: fixed orderings, no timestamps.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .angles import ANGLE_COLUMNS, ANGLE_FIELDS, AngleSeries
from .motion import UniformSeries
from .sim import RunLog
from .stats import (
    POSE_CHANNELS,
    classify_correlation,
    correlation_matrix,
    fit_prediction_interval,
    level_summary,
)

_FIELD_LABELS = {
    "sagittal_plane": "Sagittal Plane",
    "frontal_plane": "Frontal Plane",
    "knee_r": "Right Knee",
    "knee_l": "Left Knee",
    "hip_r": "Right Hip",
    "hip_l": "Left Hip",
    "upper_body_twist": "Up. Body Twist",
    "head_tilt": "Head Tilt",
    "head_rotation": "Head Rotation",
}

# (pose channel, angle field) pairs worth a scatter/band export
_PLOT_PAIRS = (("x", "sagittal_plane"), ("z", "frontal_plane"), ("y", "knee_r"))


@dataclass(frozen=True)
class RunRecord:
    """Everything the analysis needs about one completed run."""

    run_log: RunLog
    angle_series: AngleSeries
    head_series: UniformSeries  # six channels on the angle clock
    level_id: int
    avatar: bool


def _cell_key(channel: str, field: str) -> str:
    return f"{channel}:{field}"


def build_analysis(records: Sequence[RunRecord]) -> dict:
    """Aggregate correlations, summaries and band data across runs."""
    per_run_cells = []
    for rec in records:
        cells = correlation_matrix(rec.head_series, rec.angle_series)
        per_run_cells.append(cells)

    matrix = {}
    for channel in POSE_CHANNELS:
        for field in ANGLE_FIELDS:
            rs = []
            ps = []
            ns = []
            for cells in per_run_cells:
                c = cells.get((channel, field))
                if c is not None:
                    rs.append(c.abs_r)
                    ps.append(c.p)
                    ns.append(c.n)
            if not rs:
                matrix[_cell_key(channel, field)] = None
                continue
            mean_abs_r = sum(rs) / len(rs)
            matrix[_cell_key(channel, field)] = {
                "meanAbsR": mean_abs_r,
                "category": classify_correlation(min(mean_abs_r, 1.0)),
                "maxP": max(ps),
                "minN": min(ns),
                "runs": len(rs),
                "perRunAbsR": rs,
            }

    summary = level_summary([
        (rec.run_log, rec.angle_series, rec.level_id, rec.avatar) for rec in records
    ])
    angle_rows = {}
    for lvl in summary.levels:
        angle_rows[str(lvl)] = {
            field: (None if agg is None else
                    {"mean": agg.mean, "std": agg.std, "n": agg.n})
            for field, agg in summary.angle_stats[lvl].items()
        }
    head_rows = {}
    for (lvl, avatar), agg in summary.head_stats.items():
        head_rows[f"{lvl}:{'w' if avatar else 'wo'}"] = (
            None if agg is None else {"mean": agg.mean, "std": agg.std, "n": agg.n})
    deviation = {
        str(lvl): (None if v is None else {"meanPp": v[0], "stdPp": v[1]})
        for lvl, v in summary.deviation_pp.items()
    }

    plots = {}
    for channel, field in _PLOT_PAIRS:
        ci = POSE_CHANNELS.index(channel)
        xs = []
        ys = []
        for rec in records:
            h = np.asarray(rec.head_series.values, float)
            a = rec.angle_series.columns[field]
            n = min(len(h), len(a))
            hv = h[:n, ci]
            av = a[:n]
            m = np.isfinite(hv) & np.isfinite(av)
            xs.append(hv[m])
            ys.append(av[m])
        x = np.concatenate(xs) if xs else np.array([])
        y = np.concatenate(ys) if ys else np.array([])
        if len(x) < 3 or float(np.std(x)) == 0.0 or float(np.std(y)) == 0.0:
            plots[_cell_key(channel, field)] = None
            continue
        band = fit_prediction_interval(x, y)
        stride = max(1, len(x) // 1500)
        scatter = np.column_stack([x[::stride], y[::stride]])
        grid = np.linspace(float(x.min()), float(x.max()), 50)
        band_rows = []
        for xq in grid:
            yq, lo, hi = band.predict(float(xq))
            band_rows.append([float(xq), yq, lo, hi])
        plots[_cell_key(channel, field)] = {
            "poseChannel": channel,
            "angleName": field,
            "slope": band.slope,
            "intercept": band.intercept,
            "residualStd": band.residual_std,
            "n": band.n,
            "level": band.level,
            "scatter": [[float(a), float(b)] for a, b in scatter],
            "band": band_rows,
        }

    return {
        "version": __version__,
        "runs": [
            {"level": rec.level_id, "avatar": rec.avatar,
             "seed": rec.run_log.level_seed,
             "finished": rec.run_log.outcome.finished,
             "score": rec.run_log.states[-1].score if rec.run_log.states else 0,
             "headPathLength": rec.run_log.outcome.head_path_length}
            for rec in records
        ],
        "correlation": matrix,
        "angleMovement": angle_rows,
        "deviationToFirstLevel": deviation,
        "headDistance": head_rows,
        "plots": plots,
    }


def _fmt(v: Optional[float], digits: int = 2) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "-"
    return f"{v:.{digits}f}"


def render_markdown(analysis: dict) -> str:
    """Three-section report: correlation grid, movement table, head travel."""
    out = []
    out.append(f"# Training analysis report (skitrain {analysis['version']})")
    out.append("")
    n_runs = len(analysis["runs"])
    levels = sorted({r["level"] for r in analysis["runs"]})
    out.append(f"Runs analyzed: {n_runs} across levels {', '.join(str(l) for l in levels)}.")
    out.append("")

    out.append("## 1. Correlation of head pose vs body angles (mean |r| across runs)")
    out.append("")
    header = ["angle"] + list(POSE_CHANNELS)
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for field in ANGLE_FIELDS:
        row = [_FIELD_LABELS[field]]
        for channel in POSE_CHANNELS:
            cell = analysis["correlation"].get(_cell_key(channel, field))
            if cell is None:
                row.append("-")
            else:
                row.append(f"{cell['meanAbsR']:.3f} [{cell['category']}]")
        out.append("| " + " | ".join(row) + " |")
    out.append("")

    out.append("## 2. Maximum movement of body angles per level (degrees)")
    out.append("")
    lvl_keys = sorted(analysis["angleMovement"], key=int)
    header = ["angle"] + [f"Level {k}" for k in lvl_keys]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for field in ANGLE_FIELDS:
        row = [_FIELD_LABELS[field]]
        for k in lvl_keys:
            agg = analysis["angleMovement"][k].get(field)
            row.append("-" if agg is None else f"{agg['mean']:.2f} ± {agg['std']:.2f}")
        out.append("| " + " | ".join(row) + " |")
    dev_row = ["Deviation to first level [pp]"]
    for k in lvl_keys:
        d = analysis["deviationToFirstLevel"].get(k)
        dev_row.append("Ref." if d is None else f"{d['meanPp']:.2f} ± {d['stdPp']:.2f}")
    out.append("| " + " | ".join(dev_row) + " |")
    out.append("")

    out.append("## 3. Head travel distance per level (meters)")
    out.append("")
    header = ["avatar"] + [f"Level {k}" for k in lvl_keys] + ["Average"]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for avatar, label in ((True, "with"), (False, "without")):
        row = [label]
        means = []
        for k in lvl_keys:
            agg = analysis["headDistance"].get(f"{k}:{'w' if avatar else 'wo'}")
            if agg is None:
                row.append("-")
            else:
                row.append(f"{agg['mean']:.2f} ± {agg['std']:.2f}")
                means.append(agg["mean"])
        row.append(_fmt(sum(means) / len(means) if means else None))
        out.append("| " + " | ".join(row) + " |")
    out.append("")

    out.append("---")
    out.append("Significance caveat: p-values use df = n - 2 on resampled motion")
    out.append("series, which are autocorrelated; treat them as descriptive.")
    out.append("Not modeled (future work): mixed effects, multiple-comparison")
    out.append("correction, nonlinear regression.")
    out.append("")
    return "\n".join(out)


def render_csvs(analysis: dict) -> dict[str, str]:
    """Machine-readable CSV per report section."""
    out = {}

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["poseChannel", "angle", "meanAbsR", "category", "maxP", "minN", "runs"])
    for channel in POSE_CHANNELS:
        for field in ANGLE_FIELDS:
            cell = analysis["correlation"].get(_cell_key(channel, field))
            if cell is None:
                w.writerow([channel, field, "", "", "", "", ""])
            else:
                w.writerow([channel, field, repr(cell["meanAbsR"]), cell["category"],
                            repr(cell["maxP"]), cell["minN"], cell["runs"]])
    out["correlation.csv"] = buf.getvalue()

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["angle", "level", "meanDeg", "stdDeg", "n"])
    for k in sorted(analysis["angleMovement"], key=int):
        for field in ANGLE_FIELDS:
            agg = analysis["angleMovement"][k].get(field)
            if agg is None:
                w.writerow([field, k, "", "", ""])
            else:
                w.writerow([field, k, repr(agg["mean"]), repr(agg["std"]), agg["n"]])
    out["angle_movement.csv"] = buf.getvalue()

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["level", "avatar", "meanM", "stdM", "n"])
    for key in sorted(analysis["headDistance"]):
        lvl, av = key.split(":")
        agg = analysis["headDistance"][key]
        if agg is None:
            w.writerow([lvl, av, "", "", ""])
        else:
            w.writerow([lvl, av, repr(agg["mean"]), repr(agg["std"]), agg["n"]])
    out["head_distance.csv"] = buf.getvalue()

    return out


def render_plotdata(analysis: dict) -> dict:
    return {"version": analysis["version"], "plots": analysis["plots"]}


def analysis_to_json(analysis: dict) -> str:
    return json.dumps(analysis, sort_keys=True) + "\n"
